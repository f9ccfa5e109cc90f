#include "nmfvi/glm.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace nmfvi {

std::string ResponseDomain::describe() const {
  if (real_line) return "R";
  if (trials == 1) return "{0,1}";
  return "{0.." + std::to_string(trials) + "}";
}

GlmFamily GlmFamily::binomial(int trials) {
  if (trials < 1) throw ParameterError("binomial family needs trials >= 1");
  return GlmFamily(FamilyKind::binomial, trials);
}

GlmFamily GlmFamily::from_name(const std::string& name, int trials) {
  if (name == "linear") return linear();
  if (name == "logistic") return logistic();
  if (name == "binomial") return binomial(trials);
  throw ParameterError("unknown family '" + name + "'");
}

std::string GlmFamily::name() const {
  switch (kind_) {
    case FamilyKind::linear:
      return "linear";
    case FamilyKind::logistic:
      return "logistic";
    case FamilyKind::binomial:
      return "binomial";
  }
  return "";
}

ResponseDomain GlmFamily::domain() const {
  if (kind_ == FamilyKind::linear) return {true, 0};
  return {false, trials_};
}

DiscretePrior::DiscretePrior(std::vector<double> support, std::vector<double> probs) {
  if (support.empty() || support.size() != probs.size())
    throw ParameterError("discrete prior: support and probs must be non-empty and of equal length");
  double total = 0;
  for (std::size_t k = 0; k < support.size(); ++k) {
    if (!std::isfinite(support[k]) || support[k] < -1.0 || support[k] > 1.0)
      throw ParameterError("discrete prior: support points must lie in [-1, 1]");
    if (!(probs[k] > 0.0) || !std::isfinite(probs[k]))
      throw ParameterError("discrete prior: probabilities must be positive");
    total += probs[k];
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw ParameterError("discrete prior: probabilities must sum to 1");

  std::vector<std::size_t> order(support.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return support[a] < support[b]; });
  for (auto k : order) {
    if (!support_.empty() && support[k] == support_.back())
      throw ParameterError("discrete prior: support points must be distinct");
    support_.push_back(support[k]);
    probs_.push_back(probs[k]);
    log_probs_.push_back(std::log(probs[k]));
  }
}

DiscretePrior DiscretePrior::three_point(double p_minus, double p_zero, double p_plus) {
  return DiscretePrior({-1.0, 0.0, 1.0}, {p_minus, p_zero, p_plus});
}

double DiscretePrior::mean() const {
  double m = 0;
  for (std::size_t k = 0; k < size(); ++k) m += probs_[k] * support_[k];
  return m;
}

std::size_t DiscretePrior::index_of(double s) const {
  auto it = std::find(support_.begin(), support_.end(), s);
  return static_cast<std::size_t>(it - support_.begin());
}

bool DiscretePrior::symmetric(double tol) const {
  const std::size_t m = size();
  for (std::size_t k = 0; k < m; ++k) {
    if (std::abs(support_[k] + support_[m - 1 - k]) > tol) return false;
    if (std::abs(probs_[k] - probs_[m - 1 - k]) > tol) return false;
  }
  return true;
}

const DiscretePrior& require_discrete(const PriorSpec& prior, const char* what) {
  if (const auto* d = std::get_if<DiscretePrior>(&prior)) return *d;
  throw UnsupportedError(std::string(what) + " requires a discrete prior");
}

void require_gaussian(const PriorSpec& prior, const char* what) {
  if (!std::holds_alternative<StandardGaussianPrior>(prior))
    throw UnsupportedError(std::string(what) + " requires the standard_gaussian prior");
}

std::string prior_kind(const PriorSpec& prior) {
  return std::holds_alternative<DiscretePrior>(prior) ? "discrete" : "standard_gaussian";
}

namespace {

void check_beta(const Dataset& data, const Vector& beta) {
  if (data.y.size() != data.n())
    throw ShapeError("dataset: y has " + std::to_string(data.y.size()) + " entries, X has " +
                     std::to_string(data.n()) + " rows");
  if (beta.size() != data.p())
    throw ShapeError("beta has length " + std::to_string(beta.size()) + ", expected " +
                     std::to_string(data.p()));
  if (!beta.allFinite()) throw NumericError("beta has non-finite entries");
}

}  // namespace

double hamiltonian(const GlmFamily& family, const Dataset& data, const Vector& beta) {
  check_beta(data, beta);
  const Vector theta = data.X * beta;
  double h = 0;
  for (Eigen::Index i = 0; i < theta.size(); ++i)
    h += data.y[i] * theta[i] - family.b(theta[i]);
  if (!std::isfinite(h)) throw NumericError("hamiltonian is not finite");
  return h;
}

Vector hamiltonian_grad(const GlmFamily& family, const Dataset& data, const Vector& beta) {
  check_beta(data, beta);
  const Vector theta = data.X * beta;
  Vector resid(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) resid[i] = data.y[i] - family.b1(theta[i]);
  Vector g = data.X.transpose() * resid;
  if (!g.allFinite()) throw NumericError("hamiltonian gradient is not finite");
  return g;
}

void validate(const Dataset& data, const GlmFamily& family) {
  if (data.n() < 1 || data.p() < 1) throw ParameterError("dataset needs n >= 1 and p >= 1");
  if (data.y.size() != data.n())
    throw ShapeError("dataset: y has " + std::to_string(data.y.size()) + " entries, X has " +
                     std::to_string(data.n()) + " rows");
  if (!data.X.allFinite()) throw ParameterError("design matrix has non-finite entries");
  const ResponseDomain dom = family.domain();
  for (Eigen::Index i = 0; i < data.y.size(); ++i) {
    if (!dom.contains(data.y[i])) {
      std::ostringstream os;
      os << "response y[" << i << "] = " << data.y[i] << " outside domain " << dom.describe()
         << " of the " << family.name() << " family";
      throw DomainError(static_cast<std::size_t>(i), os.str());
    }
  }
}

}  // namespace nmfvi
