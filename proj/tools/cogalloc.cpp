#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <ostream>
#include <streambuf>
#include <string>

#include "cogalloc/commands.hpp"
#include "cogalloc/config.hpp"
#include "cogalloc/error.hpp"

namespace {

class NullBuffer : public std::streambuf {
 protected:
  int overflow(int c) override { return c; }
};

// COGALLOC_LOG=quiet|error silences progress lines; anything else keeps them.
bool progress_enabled() {
  const char* level = std::getenv("COGALLOC_LOG");
  if (!level) return true;
  const std::string v(level);
  return v != "quiet" && v != "error" && v != "off";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint sensing design, SU selection and airtime allocation"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  std::string out_dir = ".";
  bool emit_effective = false;

  const char* names[] = {"optimize", "compare-oracle", "compare-nonjoint", "simulate",
                         "probe-hessian"};
  const char* help[] = {"grid search over sweep points and trials",
                        "joint search against exhaustive enumeration",
                        "joint search against the two-stage baseline",
                        "multi-frame traffic and delay simulation",
                        "bordered-Hessian determinant over a pfa grid"};
  for (int i = 0; i < 5; ++i) {
    auto* sub = app.add_subcommand(names[i], help[i]);
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--seed", seed, "master seed (overrides the config)");
    sub->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", out_dir, "output directory");
    sub->add_flag("--emit-effective-config", emit_effective,
                  "print the fully defaulted config and exit");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cogalloc::kExitConfig;
  }

  NullBuffer null_buffer;
  std::ostream null_stream(&null_buffer);
  std::ostream& log = progress_enabled() ? std::cerr : null_stream;

  try {
    cogalloc::RunConfig config = cogalloc::load_config(config_path);
    if (app.get_subcommands().front()->count("--seed") > 0) config.seed = seed;
    if (emit_effective) {
      std::cout << cogalloc::emit_config(config);
      return cogalloc::kExitOk;
    }
    cogalloc::CommandOptions options{out_dir, jobs};
    return cogalloc::run_command(app.get_subcommands().front()->get_name(), config, options, log);
  } catch (const cogalloc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return cogalloc::kExitConfig;
  } catch (const cogalloc::CapacityError& e) {
    std::cerr << "refused: " << e.what() << "\n";
    return cogalloc::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
