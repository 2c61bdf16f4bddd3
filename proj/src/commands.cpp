#include "cogalloc/commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <ostream>
#include <sstream>

#include "cogalloc/error.hpp"
#include "cogalloc/parallel.hpp"
#include "cogalloc/probe.hpp"

namespace cogalloc {

namespace {

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// One (series, sweep) combination of the experiment grid.
struct Point {
  std::string series_value = "-";
  std::string sweep_value = "-";
  RunConfig config;
};

std::vector<Point> expand(const RunConfig& base) {
  std::vector<Point> points;
  const auto& series = base.experiment.series;
  const auto& sweep = base.experiment.sweep;
  const std::size_t n_series = series ? series->values.size() : 1;
  const std::size_t n_sweep = sweep ? sweep->values.size() : 1;
  for (std::size_t s = 0; s < n_series; ++s) {
    RunConfig with_series = base;
    std::string series_label = "-";
    if (series) {
      with_series = with_parameter(base, series->parameter, series->values[s]);
      series_label = num(series->values[s]);
    }
    for (std::size_t w = 0; w < n_sweep; ++w) {
      Point p;
      p.series_value = series_label;
      p.config = with_series;
      if (sweep) {
        p.config = with_parameter(with_series, sweep->parameter, sweep->values[w]);
        p.sweep_value = num(sweep->values[w]);
      }
      points.push_back(std::move(p));
    }
  }
  return points;
}

std::string schema_line(std::string_view schema, const RunConfig& c) {
  std::string line = "#schema=" + std::string(schema);
  line += ",sweep=" + (c.experiment.sweep ? c.experiment.sweep->parameter : std::string("none"));
  line += ",series=" + (c.experiment.series ? c.experiment.series->parameter : std::string("none"));
  line += ",seed=" + std::to_string(c.seed);
  return line + "\n";
}

class CsvFile {
 public:
  CsvFile(const std::filesystem::path& path, const std::string& schema, const std::string& columns)
      : path_(path), out_(path) {
    if (!out_) throw Error("cannot write " + path.string());
    out_ << schema << columns << "\n";
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

void prepare_output(const RunConfig& config, const CommandOptions& options) {
  std::filesystem::create_directories(options.out_dir);
  std::ofstream(options.out_dir / "effective_config.json") << emit_config(config);
}

template <typename Row>
std::vector<Row> run_trials(const RunConfig& config, unsigned jobs,
                            const std::function<Row(std::uint64_t)>& trial) {
  std::vector<Row> rows(config.trials);
  parallel_for(config.trials, jobs, [&](std::size_t t) { rows[t] = trial(t); });
  return rows;
}

struct OptimizeRow {
  bool feasible = false;
  double utility = 0.0;
  double pfa = 0.0;
  int k = 0;
  int selected = 0;
};

}  // namespace

int cmd_optimize(const RunConfig& config, const CommandOptions& options, std::ostream& log) {
  prepare_output(config, options);
  CsvFile rows(options.out_dir / "optimize.csv", schema_line("cogalloc.optimize/1", config),
               "series_value,sweep_value,trial,fc_utility,chosen_pfa,chosen_k,n_selected,feasible");
  CsvFile summary(options.out_dir / "optimize_summary.csv",
                  schema_line("cogalloc.optimize_summary/1", config),
                  "series_value,sweep_value,trials,feasible_trials,mean_fc_utility,stderr_fc_utility");
  bool any_feasible = false;
  for (const Point& point : expand(config)) {
    const SystemParams params = point.config.system.to_params();
    const SensingGeometry geom = params.geometry();
    const DesignGrid grid = point.config.grid.to_grid();
    auto results = run_trials<OptimizeRow>(point.config, options.jobs, [&](std::uint64_t t) {
      const auto users = make_instance(point.config, t);
      const auto out = joint_optimize(users, geom, params, grid);
      OptimizeRow r;
      r.feasible = out.feasible;
      r.utility = out.best_allocation.fc_utility;
      if (out.best_design) {
        r.pfa = out.best_design->pfa();
        r.k = out.best_design->k();
      }
      r.selected = out.best_allocation.n_active();
      return r;
    });
    std::vector<double> utilities;
    std::size_t feasible = 0;
    for (std::size_t t = 0; t < results.size(); ++t) {
      const auto& r = results[t];
      rows.row({point.series_value, point.sweep_value, std::to_string(t), num(r.utility),
                num(r.pfa), std::to_string(r.k), std::to_string(r.selected),
                r.feasible ? "1" : "0"});
      utilities.push_back(r.utility);
      feasible += r.feasible ? 1 : 0;
    }
    any_feasible = any_feasible || feasible > 0;
    const auto stats = summarize(utilities);
    summary.row({point.series_value, point.sweep_value, std::to_string(results.size()),
                 std::to_string(feasible), num(stats.mean), num(stats.std_error)});
    log << "optimize series=" << point.series_value << " sweep=" << point.sweep_value
        << " mean_fc_utility=" << num(stats.mean) << "\n";
  }
  log << "wrote " << rows.path().string() << "\n";
  return any_feasible ? kExitOk : kExitInfeasible;
}

int cmd_compare_oracle(const RunConfig& config, const CommandOptions& options, std::ostream& log) {
  prepare_output(config, options);
  CsvFile rows(options.out_dir / "compare_oracle.csv",
               schema_line("cogalloc.compare_oracle/1", config),
               "series_value,sweep_value,trial,joint_utility,oracle_utility,rel_gap,"
               "identical_costs,match");
  // Wall times differ run to run, so they live apart from the reproducible rows.
  CsvFile timing(options.out_dir / "compare_oracle_timing.csv",
                 schema_line("cogalloc.compare_oracle_timing/1", config),
                 "series_value,sweep_value,trial,n_users,joint_time_s,oracle_time_s");
  struct Row {
    double joint = 0, oracle = 0, gap = 0, joint_time = 0, oracle_time = 0;
    bool identical = false, any_feasible = false;
    std::size_t users = 0;
  };
  bool mismatch = false;
  bool any_feasible = false;
  for (const Point& point : expand(config)) {
    const SystemParams params = point.config.system.to_params();
    const SensingGeometry geom = params.geometry();
    const DesignGrid grid = point.config.grid.to_grid();
    auto results = run_trials<Row>(point.config, options.jobs, [&](std::uint64_t t) {
      const auto users = make_instance(point.config, t);
      const auto joint = joint_optimize(users, geom, params, grid);
      const auto oracle = exhaustive_oracle(users, geom, params, grid, point.config.oracle_cap);
      Row r;
      r.joint = joint.best_allocation.fc_utility;
      r.oracle = oracle.best_allocation.fc_utility;
      const double scale = std::max(std::abs(r.oracle), 1e-300);
      r.gap = (r.oracle - r.joint) / scale;
      r.joint_time = joint.wall_time;
      r.oracle_time = oracle.wall_time;
      r.identical = identical_costs(users);
      r.any_feasible = joint.feasible || oracle.feasible;
      r.users = users.size();
      return r;
    });
    for (std::size_t t = 0; t < results.size(); ++t) {
      const Row& r = results[t];
      const bool match = std::abs(r.gap) <= 1e-9;
      if (r.identical && !match) mismatch = true;
      any_feasible = any_feasible || r.any_feasible;
      rows.row({point.series_value, point.sweep_value, std::to_string(t), num(r.joint),
                num(r.oracle), num(r.gap), r.identical ? "1" : "0", match ? "1" : "0"});
      timing.row({point.series_value, point.sweep_value, std::to_string(t),
                  std::to_string(r.users), num(r.joint_time), num(r.oracle_time)});
    }
  }
  log << "wrote " << rows.path().string() << "\n";
  if (mismatch) {
    log << "oracle mismatch on an identical-cost instance\n";
    return kExitOracleMismatch;
  }
  return any_feasible ? kExitOk : kExitInfeasible;
}

int cmd_compare_nonjoint(const RunConfig& config, const CommandOptions& options,
                         std::ostream& log) {
  prepare_output(config, options);
  CsvFile rows(options.out_dir / "compare_nonjoint.csv",
               schema_line("cogalloc.compare_nonjoint/1", config),
               "series_value,sweep_value,trial,joint_utility,nonjoint_utility,gap,"
               "joint_negative,nonjoint_negative,joint_feasible,nonjoint_feasible");
  CsvFile summary(options.out_dir / "compare_nonjoint_summary.csv",
                  schema_line("cogalloc.compare_nonjoint_summary/1", config),
                  "series_value,sweep_value,trials,mean_joint_utility,mean_nonjoint_utility,"
                  "mean_gap,joint_below_nonjoint,mean_nonjoint_negative,mean_joint_negative");
  struct Row {
    double joint = 0, nonjoint = 0;
    int joint_neg = 0, nonjoint_neg = 0;
    bool joint_ok = false, nonjoint_ok = false;
  };
  bool any_feasible = false;
  for (const Point& point : expand(config)) {
    const SystemParams params = point.config.system.to_params();
    const SensingGeometry geom = params.geometry();
    const DesignGrid grid = point.config.grid.to_grid();
    auto results = run_trials<Row>(point.config, options.jobs, [&](std::uint64_t t) {
      const auto users = make_instance(point.config, t);
      const auto joint = joint_optimize(users, geom, params, grid);
      const auto nj = nonjoint_baseline(users, geom, params, grid);
      return Row{joint.best_allocation.fc_utility, nj.outcome.best_allocation.fc_utility,
                 count_negative_utility(joint.best_allocation), count_negative_utility(nj),
                 joint.feasible, nj.outcome.feasible};
    });
    std::vector<double> j, n, gap, jneg, nneg;
    std::size_t below = 0;
    for (std::size_t t = 0; t < results.size(); ++t) {
      const Row& r = results[t];
      any_feasible = any_feasible || r.joint_ok;
      rows.row({point.series_value, point.sweep_value, std::to_string(t), num(r.joint),
                num(r.nonjoint), num(r.joint - r.nonjoint), std::to_string(r.joint_neg),
                std::to_string(r.nonjoint_neg), r.joint_ok ? "1" : "0",
                r.nonjoint_ok ? "1" : "0"});
      j.push_back(r.joint);
      n.push_back(r.nonjoint);
      gap.push_back(r.joint - r.nonjoint);
      jneg.push_back(r.joint_neg);
      nneg.push_back(r.nonjoint_neg);
      below += r.joint < r.nonjoint ? 1 : 0;
    }
    summary.row({point.series_value, point.sweep_value, std::to_string(results.size()),
                 num(summarize(j).mean), num(summarize(n).mean), num(summarize(gap).mean),
                 std::to_string(below), num(summarize(nneg).mean), num(summarize(jneg).mean)});
  }
  log << "wrote " << rows.path().string() << "\n";
  return any_feasible ? kExitOk : kExitInfeasible;
}

int cmd_simulate(const RunConfig& config, const CommandOptions& options, std::ostream& log) {
  prepare_output(config, options);
  CsvFile rows(options.out_dir / "simulate.csv", schema_line("cogalloc.simulate/1", config),
               "series_value,sweep_value,trial,mean_delay_s,jain_index,incomplete_batches");
  std::string su_columns;
  const auto points = expand(config);
  std::size_t max_users = 0;
  for (const auto& p : points) max_users = std::max(max_users, make_simulation(p.config).users.size());
  for (std::size_t i = 0; i < max_users; ++i) su_columns += ",su" + std::to_string(i) + "_mean_delay_s";
  CsvFile summary(options.out_dir / "simulate_summary.csv",
                  schema_line("cogalloc.simulate_summary/1", config),
                  "series_value,sweep_value,trials,mean_delay_s,stderr_delay_s,jain_index" +
                      su_columns);

  for (std::size_t idx = 0; idx < points.size(); ++idx) {
    const Point& point = points[idx];
    const SimulationSetup setup = make_simulation(point.config);
    const std::size_t m = setup.users.size();
    auto results = run_trials<EpisodeResult>(point.config, options.jobs, [&](std::uint64_t t) {
      return run_episode(point.config.traffic.frames, setup, point.config.seed, t, t == 0);
    });

    const auto trace_path = options.out_dir / ("trace_" + std::to_string(idx) + ".ndjson");
    {
      std::ofstream trace(trace_path);
      for (const auto& line : results.front().trace) trace << line << "\n";
    }

    std::vector<double> delays;
    std::vector<double> su_sum(m, 0.0);
    std::vector<std::size_t> su_n(m, 0);
    for (std::size_t t = 0; t < results.size(); ++t) {
      const DelayStats& s = results[t].stats;
      rows.row({point.series_value, point.sweep_value, std::to_string(t), num(s.mean_delay),
                num(s.jain_index), std::to_string(s.incomplete_batches)});
      if (!std::isnan(s.mean_delay)) delays.push_back(s.mean_delay);
      for (std::size_t i = 0; i < m; ++i) {
        if (!std::isnan(s.per_su_mean_delay[i])) {
          su_sum[i] += s.per_su_mean_delay[i];
          ++su_n[i];
        }
      }
    }
    std::vector<double> su_mean(m, std::numeric_limits<double>::quiet_NaN());
    std::vector<double> observed;
    for (std::size_t i = 0; i < m; ++i) {
      if (su_n[i] > 0) {
        su_mean[i] = su_sum[i] / static_cast<double>(su_n[i]);
        observed.push_back(su_mean[i]);
      }
    }
    const auto stats = summarize(delays);
    const double jain = observed.empty() ? std::numeric_limits<double>::quiet_NaN()
                                         : jain_index(observed);
    std::vector<std::string> cells{point.series_value, point.sweep_value,
                                   std::to_string(results.size()), num(stats.mean),
                                   num(stats.std_error), num(jain)};
    for (std::size_t i = 0; i < max_users; ++i) cells.push_back(i < m ? num(su_mean[i]) : "");
    summary.row(cells);
    log << "simulate series=" << point.series_value << " sweep=" << point.sweep_value
        << " mean_delay_s=" << num(stats.mean) << " jain=" << num(jain)
        << " trace=" << trace_path.string() << "\n";
  }
  return kExitOk;
}

int cmd_probe_hessian(const RunConfig& config, const CommandOptions& options, std::ostream& log) {
  if (config.probe.pfa_values.empty()) {
    log << "probe-hessian: probe.pfa_values is empty\n";
    return kExitConfig;
  }
  prepare_output(config, options);
  CsvFile rows(options.out_dir / "probe_hessian.csv",
               schema_line("cogalloc.probe_hessian/1", config),
               "pfa,det_h,det_ha,du_dpfa,du_dk");
  const auto table = quasiconcavity_probe(config.probe.params, config.probe.pfa_values);
  std::size_t negative = 0;
  for (const auto& r : table) {
    rows.row({num(r.pfa), num(r.det_h), num(r.det_ha), num(r.du_dpfa), num(r.du_dk)});
    negative += r.det_h < 0.0 ? 1 : 0;
  }
  log << "det_h < 0 at " << negative << " of " << table.size() << " points: "
      << (negative > 0 ? "not quasiconcave" : "no violation found") << "\n";
  return kExitOk;
}

int run_command(std::string_view name, const RunConfig& config, const CommandOptions& options,
                std::ostream& log) {
  if (name == "optimize") return cmd_optimize(config, options, log);
  if (name == "compare-oracle") return cmd_compare_oracle(config, options, log);
  if (name == "compare-nonjoint") return cmd_compare_nonjoint(config, options, log);
  if (name == "simulate") return cmd_simulate(config, options, log);
  if (name == "probe-hessian") return cmd_probe_hessian(config, options, log);
  log << "unknown command '" << name << "'\n";
  return kExitConfig;
}

}  // namespace cogalloc
