#include "cogalloc/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "cogalloc/error.hpp"
#include "cogalloc/rng.hpp"
#include "cogalloc/units.hpp"

namespace cogalloc {

using Json = nlohmann::ordered_json;

namespace {

// Reads typed fields from one JSON object and rejects keys nobody asked for.
class StrictObject {
 public:
  StrictObject(const Json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    auto it = node_.find(key);
    if (it == node_.end()) return;
    out = convert<T>(*it, field(key));
  }

  template <typename T>
  void read(const char* key, std::optional<T>& out) {
    seen_.insert(key);
    auto it = node_.find(key);
    if (it == node_.end() || it->is_null()) return;
    out = convert<T>(*it, field(key));
  }

  const Json* child(const char* key) {
    seen_.insert(key);
    auto it = node_.find(key);
    return it == node_.end() || it->is_null() ? nullptr : &*it;
  }

  std::string field(const char* key) const {
    return path_.empty() ? std::string(key) : path_ + "." + key;
  }

  void finish() const {
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      if (!seen_.count(it.key())) {
        throw ConfigError(field(it.key().c_str()) + ": unknown key");
      }
    }
  }

  template <typename T>
  static T convert(const Json& v, const std::string& where) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(where + ": expected true or false");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      if (!v.is_number_unsigned()) throw ConfigError(where + ": expected a non-negative integer");
      return v.get<std::uint64_t>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(where + ": expected an integer");
      return v.get<T>();
    } else if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw ConfigError(where + ": expected a number");
      return v.get<double>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(where + ": expected a string");
      return v.get<std::string>();
    } else if constexpr (std::is_same_v<T, std::vector<double>>) {
      if (!v.is_array()) throw ConfigError(where + ": expected an array of numbers");
      std::vector<double> out;
      for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(convert<double>(v[i], where + "[" + std::to_string(i) + "]"));
      }
      return out;
    } else {
      static_assert(sizeof(T) == 0, "unsupported config field type");
    }
  }

 private:
  const Json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_system(const Json& node, SystemConfig& s) {
  StrictObject o(node, "system");
  o.read("n_samples", s.n_samples);
  o.read("sampling_rate_hz", s.sampling_rate_hz);
  o.read("frame_duration_s", s.frame_duration_s);
  o.read("tau2_s", s.tau2_s);
  o.read("tau5_s", s.tau5_s);
  o.read("tau_r_s", s.tau_r_s);
  o.read("tau_r_prime_s", s.tau_r_prime_s);
  o.read("p_st_dbm", s.p_st_dbm);
  o.read("p_pt_dbm", s.p_pt_dbm);
  o.read("bandwidth_hz", s.bandwidth_hz);
  o.read("noise_psd_dbm_per_hz", s.noise_psd_dbm_per_hz);
  o.read("sense_cost", s.sense_cost);
  o.read("report_cost", s.report_cost);
  o.read("p_h0", s.p_h0);
  o.read("zeta", s.zeta);
  o.read("gamma_db", s.gamma_db);
  o.read("noise_var", s.noise_var);
  o.read("bit_rate_bps", s.bit_rate_bps);
  o.finish();
}

void read_users(const Json& node, UsersConfig& u) {
  StrictObject o(node, "users");
  o.read("count", u.count);
  o.read("gain_mean", u.gain_mean);
  o.read("pay_rate", u.pay_rate);
  o.read("earn_rate", u.earn_rate);
  o.read("buffer_bits", u.buffer_bits);
  if (const Json* list = o.child("explicit")) {
    if (!list->is_array()) throw ConfigError("users.explicit: expected an array");
    u.explicit_users.clear();
    for (std::size_t i = 0; i < list->size(); ++i) {
      StrictObject e((*list)[i], "users.explicit[" + std::to_string(i) + "]");
      SecondaryUser su;
      su.id = static_cast<std::uint32_t>(i);
      e.read("id", su.id);
      e.read("gain_to_fc", su.gain_to_fc);
      e.read("buffer_bits", su.buffer_bits);
      e.read("pay_rate", su.pay_rate);
      e.read("earn_rate", su.earn_rate);
      e.finish();
      u.explicit_users.push_back(su);
    }
  }
  o.finish();
}

void read_grid(const Json& node, GridConfig& g) {
  StrictObject o(node, "grid");
  o.read("divisions", g.divisions);
  o.read("pfa_values", g.pfa_values);
  o.read("k_max", g.k_max);
  o.finish();
}

void read_traffic(const Json& node, TrafficConfig& t) {
  StrictObject o(node, "traffic");
  o.read("shape", t.shape);
  o.read("scale_s", t.scale_s);
  o.read("batch_bits", t.batch_bits);
  o.read("accumulation_s", t.accumulation_s);
  o.read("initial_bits", t.initial_bits);
  o.read("frames", t.frames);
  o.read("sensing_gain_mean", t.sensing_gain_mean);
  o.read("resample_sensing_gain", t.resample_sensing_gain);
  o.finish();
}

Sweep read_sweep(const Json& node, const std::string& path) {
  StrictObject o(node, path);
  Sweep s;
  o.read("parameter", s.parameter);
  o.read("values", s.values);
  o.finish();
  return s;
}

void read_experiment(const Json& node, ExperimentConfig& e) {
  StrictObject o(node, "experiment");
  if (const Json* s = o.child("sweep")) e.sweep = read_sweep(*s, "experiment.sweep");
  if (const Json* s = o.child("series")) e.series = read_sweep(*s, "experiment.series");
  o.finish();
}

void read_probe(const Json& node, ProbeConfig& p) {
  StrictObject o(node, "probe");
  o.read("m_users", p.params.m_users);
  o.read("k", p.params.k);
  o.read("p_h0", p.params.p_h0);
  o.read("gamma_db", p.params.gamma_db);
  o.read("n_samples", p.params.n_samples);
  o.read("r0", p.params.r0);
  o.read("r1", p.params.r1);
  o.read("airtime", p.params.airtime);
  o.read("pfa_step", p.params.pfa_step);
  o.read("k_step", p.params.k_step);
  o.read("pfa_values", p.pfa_values);
  o.finish();
}

std::string line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t column = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

bool open_unit(double x) { return x > 0.0 && x < 1.0; }
bool positive(double x) { return x > 0.0 && std::isfinite(x); }

}  // namespace

SystemParams SystemConfig::to_params() const {
  SystemParams p;
  p.n_samples = n_samples;
  p.sample_interval = 1.0 / sampling_rate_hz;
  p.frame_duration = frame_duration_s;
  p.tau2 = tau2_s;
  p.tau5 = tau5_s;
  p.tau_r = tau_r_s;
  p.tau_r_prime = tau_r_prime_s;
  p.p_st = dbm_to_watts(p_st_dbm);
  p.p_pt = dbm_to_watts(p_pt_dbm);
  p.bandwidth = bandwidth_hz;
  p.noise_power = noise_power_watts(noise_psd_dbm_per_hz, bandwidth_hz);
  p.sense_cost = sense_cost;
  p.report_cost = report_cost;
  p.p_h0 = p_h0;
  p.zeta = zeta;
  p.gamma_db = gamma_db;
  p.noise_var = noise_var;
  return p;
}

DesignGrid GridConfig::to_grid() const {
  if (!pfa_values.empty()) return DesignGrid(pfa_values, k_max);
  return DesignGrid::uniform(divisions, k_max);
}

const std::vector<std::string>& sweepable_parameters() {
  static const std::vector<std::string> names{"zeta", "p_h0", "gamma_db", "m", "buffer_bits"};
  return names;
}

void RunConfig::validate() const {
  std::vector<std::string> problems;
  auto check = [&](bool ok, const std::string& what) {
    if (!ok) problems.push_back(what);
  };
  const SystemConfig& s = system;
  check(s.n_samples >= 1, "system.n_samples must be >= 1");
  check(positive(s.sampling_rate_hz), "system.sampling_rate_hz must be positive");
  check(positive(s.frame_duration_s), "system.frame_duration_s must be positive");
  check(positive(s.tau2_s), "system.tau2_s must be positive");
  check(positive(s.tau5_s), "system.tau5_s must be positive");
  check(positive(s.tau_r_s), "system.tau_r_s must be positive");
  check(positive(s.tau_r_prime_s), "system.tau_r_prime_s must be positive");
  check(std::isfinite(s.p_st_dbm), "system.p_st_dbm must be finite");
  check(std::isfinite(s.p_pt_dbm), "system.p_pt_dbm must be finite");
  check(positive(s.bandwidth_hz), "system.bandwidth_hz must be positive");
  check(std::isfinite(s.noise_psd_dbm_per_hz), "system.noise_psd_dbm_per_hz must be finite");
  check(positive(s.sense_cost), "system.sense_cost must be positive");
  check(positive(s.report_cost), "system.report_cost must be positive");
  check(open_unit(s.p_h0), "system.p_h0 must lie in (0, 1)");
  check(open_unit(s.zeta), "system.zeta must lie in (0, 1)");
  check(std::isfinite(s.gamma_db), "system.gamma_db must be finite");
  check(positive(s.noise_var), "system.noise_var must be positive");
  check(s.bit_rate_bps >= 0.0, "system.bit_rate_bps must be non-negative");
  if (positive(s.frame_duration_s) && positive(s.sampling_rate_hz) && s.n_samples >= 1) {
    check(s.frame_duration_s > s.tau2_s + s.n_samples / s.sampling_rate_hz + s.tau5_s,
          "system.frame_duration_s leaves no time after sensing overheads");
  }

  check(users.count >= 1, "users.count must be >= 1");
  check(positive(users.gain_mean), "users.gain_mean must be positive");
  check(users.pay_rate >= 0.0, "users.pay_rate must be non-negative");
  check(users.earn_rate >= 0.0, "users.earn_rate must be non-negative");
  std::set<std::uint32_t> ids;
  for (std::size_t i = 0; i < users.explicit_users.size(); ++i) {
    const auto& su = users.explicit_users[i];
    const std::string at = "users.explicit[" + std::to_string(i) + "]";
    check(positive(su.gain_to_fc), at + ".gain_to_fc must be positive");
    check(su.pay_rate >= 0.0 && su.earn_rate >= 0.0, at + " prices must be non-negative");
    check(ids.insert(su.id).second, at + ".id is duplicated");
  }

  if (grid.pfa_values.empty()) {
    check(grid.divisions >= 2, "grid.divisions must be >= 2");
  } else {
    std::set<double> seen;
    for (double v : grid.pfa_values) {
      check(open_unit(v), "grid.pfa_values entries must lie in (0, 1)");
      check(seen.insert(v).second, "grid.pfa_values has duplicates");
    }
  }
  check(!grid.k_max || *grid.k_max >= 1, "grid.k_max must be >= 1");

  check(positive(traffic.shape), "traffic.shape must be positive");
  check(positive(traffic.scale_s), "traffic.scale_s must be positive");
  check(traffic.accumulation_s >= 0.0, "traffic.accumulation_s must be non-negative");
  check(traffic.frames >= 1, "traffic.frames must be >= 1");
  check(positive(traffic.sensing_gain_mean), "traffic.sensing_gain_mean must be positive");

  const auto& names = sweepable_parameters();
  for (const auto* sw : {&experiment.sweep, &experiment.series}) {
    if (!*sw) continue;
    const Sweep& w = **sw;
    const std::string at = sw == &experiment.sweep ? "experiment.sweep" : "experiment.series";
    check(std::find(names.begin(), names.end(), w.parameter) != names.end(),
          at + ".parameter '" + w.parameter + "' is not sweepable");
    check(!w.values.empty(), at + ".values must be non-empty");
    for (double v : w.values) {
      if (w.parameter == "zeta" || w.parameter == "p_h0") {
        check(open_unit(v), at + ".values must lie in (0, 1)");
      } else if (w.parameter == "m") {
        check(v >= 1 && v == std::floor(v), at + ".values must be positive integers");
      } else if (w.parameter == "buffer_bits") {
        check(v >= 0 && v == std::floor(v), at + ".values must be non-negative integers");
      }
    }
    if ((w.parameter == "m" || w.parameter == "buffer_bits") && !users.explicit_users.empty()) {
      problems.push_back(at + ": cannot sweep '" + w.parameter + "' with explicit users");
    }
  }
  if (experiment.sweep && experiment.series &&
      experiment.sweep->parameter == experiment.series->parameter) {
    problems.push_back("experiment.sweep and experiment.series vary the same parameter");
  }

  try {
    probe.params.validate();
  } catch (const DomainError& e) {
    problems.push_back(std::string("probe: ") + e.what());
  }
  check(oracle_cap >= 1, "oracle_cap must be >= 1");
  check(trials >= 1, "trials must be >= 1");

  if (!problems.empty()) {
    std::ostringstream msg;
    msg << "invalid configuration:";
    for (const auto& p : problems) msg << "\n  - " << p;
    throw ConfigError(msg.str());
  }
}

RunConfig parse_config(std::string_view text, std::string_view origin) {
  Json doc;
  try {
    doc = Json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string(origin) + ": parse error at " + line_column(text, e.byte) +
                      ": " + e.what());
  }
  RunConfig cfg;
  StrictObject root(doc, "");
  if (const Json* n = root.child("system")) read_system(*n, cfg.system);
  if (const Json* n = root.child("users")) read_users(*n, cfg.users);
  if (const Json* n = root.child("grid")) read_grid(*n, cfg.grid);
  if (const Json* n = root.child("traffic")) read_traffic(*n, cfg.traffic);
  if (const Json* n = root.child("experiment")) read_experiment(*n, cfg.experiment);
  if (const Json* n = root.child("probe")) read_probe(*n, cfg.probe);
  root.read("oracle_cap", cfg.oracle_cap);
  root.read("seed", cfg.seed);
  root.read("trials", cfg.trials);
  root.finish();
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

std::string emit_config(const RunConfig& c) {
  Json j;
  const SystemConfig& s = c.system;
  j["system"] = {{"n_samples", s.n_samples},
                 {"sampling_rate_hz", s.sampling_rate_hz},
                 {"frame_duration_s", s.frame_duration_s},
                 {"tau2_s", s.tau2_s},
                 {"tau5_s", s.tau5_s},
                 {"tau_r_s", s.tau_r_s},
                 {"tau_r_prime_s", s.tau_r_prime_s},
                 {"p_st_dbm", s.p_st_dbm},
                 {"p_pt_dbm", s.p_pt_dbm},
                 {"bandwidth_hz", s.bandwidth_hz},
                 {"noise_psd_dbm_per_hz", s.noise_psd_dbm_per_hz},
                 {"sense_cost", s.sense_cost},
                 {"report_cost", s.report_cost},
                 {"p_h0", s.p_h0},
                 {"zeta", s.zeta},
                 {"gamma_db", s.gamma_db},
                 {"noise_var", s.noise_var},
                 {"bit_rate_bps", s.bit_rate_bps}};
  Json explicit_users = Json::array();
  for (const auto& su : c.users.explicit_users) {
    explicit_users.push_back({{"id", su.id},
                              {"gain_to_fc", su.gain_to_fc},
                              {"buffer_bits", su.buffer_bits},
                              {"pay_rate", su.pay_rate},
                              {"earn_rate", su.earn_rate}});
  }
  j["users"] = {{"count", c.users.count},
                {"gain_mean", c.users.gain_mean},
                {"pay_rate", c.users.pay_rate},
                {"earn_rate", c.users.earn_rate},
                {"buffer_bits", c.users.buffer_bits},
                {"explicit", explicit_users}};
  j["grid"] = {{"divisions", c.grid.divisions},
               {"pfa_values", c.grid.pfa_values},
               {"k_max", c.grid.k_max ? Json(*c.grid.k_max) : Json(nullptr)}};
  const TrafficConfig& t = c.traffic;
  j["traffic"] = {{"shape", t.shape},
                  {"scale_s", t.scale_s},
                  {"batch_bits", t.batch_bits},
                  {"accumulation_s", t.accumulation_s},
                  {"initial_bits", t.initial_bits},
                  {"frames", t.frames},
                  {"sensing_gain_mean", t.sensing_gain_mean},
                  {"resample_sensing_gain", t.resample_sensing_gain}};
  auto sweep_json = [](const std::optional<Sweep>& s) {
    if (!s) return Json(nullptr);
    return Json{{"parameter", s->parameter}, {"values", s->values}};
  };
  j["experiment"] = {{"sweep", sweep_json(c.experiment.sweep)},
                     {"series", sweep_json(c.experiment.series)}};
  const ProbeParams& p = c.probe.params;
  j["probe"] = {{"m_users", p.m_users},   {"k", p.k},
                {"p_h0", p.p_h0},         {"gamma_db", p.gamma_db},
                {"n_samples", p.n_samples}, {"r0", p.r0},
                {"r1", p.r1},             {"airtime", p.airtime},
                {"pfa_step", p.pfa_step}, {"k_step", p.k_step},
                {"pfa_values", c.probe.pfa_values}};
  j["oracle_cap"] = c.oracle_cap;
  j["seed"] = c.seed;
  j["trials"] = c.trials;
  return j.dump(2) + "\n";
}

RunConfig with_parameter(const RunConfig& config, const std::string& parameter, double value) {
  RunConfig c = config;
  if (parameter == "zeta") {
    c.system.zeta = value;
  } else if (parameter == "p_h0") {
    c.system.p_h0 = value;
  } else if (parameter == "gamma_db") {
    c.system.gamma_db = value;
  } else if (parameter == "m") {
    c.users.count = static_cast<int>(value);
  } else if (parameter == "buffer_bits") {
    c.users.buffer_bits = static_cast<std::uint64_t>(value);
  } else {
    throw ConfigError("unknown sweep parameter '" + parameter + "'");
  }
  return c;
}

std::vector<SecondaryUser> make_instance(const RunConfig& config, std::uint64_t trial) {
  if (!config.users.explicit_users.empty()) return config.users.explicit_users;
  std::vector<SecondaryUser> users;
  for (int i = 0; i < config.users.count; ++i) {
    const auto su_index = static_cast<std::uint32_t>(i);
    Pcg32 rng = derive_stream(config.seed, trial, su_index, StreamPurpose::FcGain);
    users.push_back({su_index, sample_exponential_gain(config.users.gain_mean, rng),
                     config.users.buffer_bits, config.users.pay_rate, config.users.earn_rate});
  }
  return users;
}

bool identical_costs(std::span<const SecondaryUser> users) {
  return std::all_of(users.begin(), users.end(), [&](const SecondaryUser& su) {
    return su.pay_rate == users.front().pay_rate && su.earn_rate == users.front().earn_rate;
  });
}

SimulationSetup make_simulation(const RunConfig& config) {
  SimulationSetup setup;
  setup.params = config.system.to_params();
  setup.traffic = {config.traffic.shape, config.traffic.scale_s, config.traffic.batch_bits,
                   config.traffic.accumulation_s, config.traffic.initial_bits};
  if (config.users.explicit_users.empty()) {
    for (int i = 0; i < config.users.count; ++i) {
      setup.users.push_back({static_cast<std::uint32_t>(i), config.users.pay_rate,
                             config.users.earn_rate, config.users.gain_mean});
    }
  } else {
    for (const auto& su : config.users.explicit_users) {
      setup.users.push_back({su.id, su.pay_rate, su.earn_rate, su.gain_to_fc});
    }
  }
  setup.grid = config.grid.to_grid();
  setup.sensing_gain_mean = config.traffic.sensing_gain_mean;
  setup.resample_sensing_gain = config.traffic.resample_sensing_gain;
  return setup;
}

}  // namespace cogalloc
