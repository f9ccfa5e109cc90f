#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "nmfvi/design.hpp"
#include "nmfvi/gauss.hpp"
#include "nmfvi/gibbs.hpp"
#include "nmfvi/jj.hpp"
#include "nmfvi/mc.hpp"
#include "nmfvi/tilt_solver.hpp"

namespace cli {

using json = nlohmann::ordered_json;

struct DesignConfig {
  std::string kind = "block";  // block | gaussian | file
  long n = 400;
  long p = 10;
  double scale = 1.0;
  std::string X;  // file inputs
  std::string y;
  std::string beta_star;
};

struct PriorConfig {
  std::string kind = "discrete";  // discrete | gaussian
  std::vector<double> support{-1.0, 0.0, 1.0};
  std::vector<double> probs{0.2, 0.6, 0.2};
};

struct CoverageConfig {
  double alpha = 0.1;
  double epsilon = 0.05;
  double slack = -1.0;  // negative: same as epsilon
};

struct EvidenceConfig {
  /// Empty picks every method that pairs with the prior and family.
  std::vector<std::string> methods;
  std::string oracle = "auto";  // auto | exact | none
  std::size_t evaluation_samples = 20000;
};

struct Config {
  /// Set in manifests; when present it must match the subcommand.
  std::string command;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  int replicates = 1;
  std::string family = "logistic";
  int trials = 1;
  std::string method = "tilt";
  bool record_wallclock = false;
  DesignConfig design;
  PriorConfig prior;
  nmfvi::MCConfig mc;
  nmfvi::TiltFitOptions tilt;
  nmfvi::GaussFitOptions gauss;
  nmfvi::JJFitOptions jj;
  nmfvi::GibbsOptions gibbs;
  nmfvi::DiagnosticsOptions diagnostics;
  CoverageConfig coverage;
  EvidenceConfig evidence;
};

/// Overlay `j` onto the defaults. Unknown keys anywhere in the tree raise
/// nmfvi::ParameterError listing every offending path.
Config parse_config(const json& j);
/// Fully materialised config; parse_config(to_json(c)) reproduces c.
json to_json(const Config& c);

}  // namespace cli
