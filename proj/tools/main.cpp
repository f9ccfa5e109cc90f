#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "commands.hpp"
#include "nmfvi/error.hpp"
#include "nmfvi/io.hpp"
#include "nmfvi/parallel.hpp"

namespace {

struct Flags {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> method;
  std::optional<int> replicates;
  std::optional<unsigned> threads;
};

void add_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON config file (defaults apply when omitted)");
  sub->add_option("--out", f.out, "output directory")->capture_default_str();
  sub->add_option("--seed", f.seed, "global seed, overrides the config");
  sub->add_option("--method", f.method, "tilt, gauss, jj or gibbs");
  sub->add_option("--replicates", f.replicates, "number of replicates");
  sub->add_option("--threads", f.threads, "worker threads");
}

cli::Config resolve(const Flags& f, const std::string& command) {
  cli::json j = cli::json::object();
  if (!f.config.empty()) {
    try {
      j = cli::json::parse(nmfvi::io::read_text(f.config));
    } catch (const cli::json::parse_error& e) {
      throw nmfvi::ParameterError("config: " + f.config + ": " + e.what());
    }
  }
  cli::Config c = cli::parse_config(j);
  if (!c.command.empty() && c.command != command)
    throw nmfvi::ParameterError("config was written by '" + c.command + "', not '" + command + "'");
  if (f.seed) c.seed = *f.seed;
  if (f.method) {
    c.method = *f.method;
    c.evidence.methods = {*f.method};
  }
  if (f.replicates) {
    if (*f.replicates < 1) throw nmfvi::ParameterError("--replicates must be >= 1");
    c.replicates = *f.replicates;
  }
  if (f.threads) {
    if (*f.threads < 1) throw nmfvi::ParameterError("--threads must be >= 1");
    c.threads = *f.threads;
  }
  c.command = command;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mean-field variational inference for GLMs: simulation, fitting and diagnostics"};
  app.require_subcommand(1);
  Flags flags;
  using Runner = void (*)(const cli::Config&, const std::string&);
  const std::vector<std::tuple<std::string, std::string, Runner>> commands{
      {"simulate", "write X.csv, y.csv and beta_star.csv from a design generator", cli::cmd_simulate},
      {"fit", "fit one method and write fit.json", cli::cmd_fit},
      {"evidence", "compare evidence estimates against the exact oracle when feasible", cli::cmd_evidence},
      {"diagnose", "design diagnostics report", cli::cmd_diagnose},
      {"coverage", "credible-interval coverage under Gibbs posterior draws", cli::cmd_coverage},
  };
  for (const auto& [name, help, run] : commands) add_flags(app.add_subcommand(name, help), flags);

  CLI11_PARSE(app, argc, argv);

  try {
    for (const auto& [name, help, run] : commands) {
      if (!app.got_subcommand(name)) continue;
      const auto cfg = resolve(flags, name);
      nmfvi::set_num_threads(cfg.threads);
      run(cfg, flags.out);
      std::cout << name << ": wrote " << flags.out << "\n";
    }
  } catch (const nmfvi::CapacityError& e) {
    std::cerr << "capacity error: " << e.what() << "\n";
    return 4;
  } catch (const nmfvi::UnsupportedError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const nmfvi::ParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
