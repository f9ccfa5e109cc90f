#include "config.hpp"

#include <set>

#include "nmfvi/error.hpp"

namespace cli {
namespace {

// Walks one JSON object, remembering which keys were read so that the
// leftovers can be reported as unknown.
class Reader {
 public:
  Reader(const json* j, std::string path, std::vector<std::string>& unknown)
      : j_(j), path_(std::move(path)), unknown_(unknown) {
    if (j_ && !j_->is_object()) throw nmfvi::ParameterError("config: '" + where() + "' must be an object");
  }
  Reader(const Reader&) = delete;
  ~Reader() {
    if (!j_) return;
    for (const auto& [k, v] : j_->items())
      if (!seen_.count(k)) unknown_.push_back(path_.empty() ? k : path_ + "." + k);
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_ || !j_->contains(key)) return;
    try {
      out = (*j_)[key].template get<T>();
    } catch (const json::exception& e) {
      throw nmfvi::ParameterError("config: bad value for '" + join(key) + "': " + e.what());
    }
  }

  Reader child(const char* key) {
    seen_.insert(key);
    const json* sub = (j_ && j_->contains(key)) ? &(*j_)[key] : nullptr;
    return Reader(sub, join(key), unknown_);
  }

 private:
  std::string where() const { return path_.empty() ? "<root>" : path_; }
  std::string join(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* j_;
  std::string path_;
  std::vector<std::string>& unknown_;
  std::set<std::string> seen_;
};

template <class T>
void require(bool ok, const T& msg) {
  if (!ok) throw nmfvi::ParameterError(std::string("config: ") + msg);
}

}  // namespace

Config parse_config(const json& j) {
  Config c;
  std::vector<std::string> unknown;
  {
    Reader r(&j, "", unknown);
    r.get("command", c.command);
    r.get("seed", c.seed);
    r.get("threads", c.threads);
    r.get("replicates", c.replicates);
    r.get("family", c.family);
    r.get("trials", c.trials);
    r.get("method", c.method);
    r.get("record_wallclock", c.record_wallclock);
    {
      auto d = r.child("design");
      d.get("kind", c.design.kind);
      d.get("n", c.design.n);
      d.get("p", c.design.p);
      d.get("scale", c.design.scale);
      d.get("X", c.design.X);
      d.get("y", c.design.y);
      d.get("beta_star", c.design.beta_star);
    }
    {
      auto p = r.child("prior");
      p.get("kind", c.prior.kind);
      p.get("support", c.prior.support);
      p.get("probs", c.prior.probs);
    }
    {
      auto m = r.child("mc");
      m.get("n_samples", c.mc.n_samples);
      m.get("antithetic", c.mc.antithetic);
      m.get("enumeration_cap", c.mc.enumeration_cap);
    }
    {
      auto t = r.child("tilt");
      t.get("damping", c.tilt.damping);
      t.get("max_iter", c.tilt.max_iter);
      t.get("tol_u", c.tilt.tol_u);
      t.get("trace_elbo", c.tilt.trace_elbo);
    }
    {
      auto g = r.child("gauss");
      g.get("v_min", c.gauss.v_min);
      g.get("max_iter", c.gauss.max_iter);
      g.get("tol", c.gauss.tol);
      g.get("memory", c.gauss.memory);
    }
    {
      auto s = r.child("jj");
      s.get("tol_xi", c.jj.tol_xi);
      s.get("max_iter", c.jj.max_iter);
    }
    {
      auto g = r.child("gibbs");
      g.get("chains", c.gibbs.chains);
      g.get("sweeps", c.gibbs.sweeps);
      g.get("burn_in", c.gibbs.burn_in);
      g.get("keep_every", c.gibbs.keep_every);
    }
    {
      auto d = r.child("diagnostics");
      d.get("deltas", c.diagnostics.deltas);
      d.get("Cs", c.diagnostics.Cs);
      d.get("random_probes", c.diagnostics.random_probes);
    }
    {
      auto v = r.child("coverage");
      v.get("alpha", c.coverage.alpha);
      v.get("epsilon", c.coverage.epsilon);
      v.get("slack", c.coverage.slack);
    }
    {
      auto e = r.child("evidence");
      e.get("methods", c.evidence.methods);
      e.get("oracle", c.evidence.oracle);
      e.get("evaluation_samples", c.evidence.evaluation_samples);
    }
  }
  if (!unknown.empty()) {
    std::string msg = "config: unknown keys:";
    for (const auto& k : unknown) msg += " " + k;
    throw nmfvi::ParameterError(msg);
  }

  require(c.threads >= 1, "threads must be >= 1");
  require(c.replicates >= 1, "replicates must be >= 1");
  require(c.design.kind == "block" || c.design.kind == "gaussian" || c.design.kind == "file",
          "design.kind must be block, gaussian or file");
  require(c.prior.kind == "discrete" || c.prior.kind == "gaussian", "prior.kind must be discrete or gaussian");
  require(c.evidence.oracle == "auto" || c.evidence.oracle == "exact" || c.evidence.oracle == "none",
          "evidence.oracle must be auto, exact or none");
  if (c.coverage.slack < 0) c.coverage.slack = c.coverage.epsilon;
  if (c.evidence.methods.empty()) {
    if (c.prior.kind == "discrete")
      c.evidence.methods = {"tilt"};
    else if (c.family == "logistic")
      c.evidence.methods = {"gauss", "jj"};
    else
      c.evidence.methods = {"gauss"};
  }
  return c;
}

json to_json(const Config& c) {
  json j;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["replicates"] = c.replicates;
  j["family"] = c.family;
  j["trials"] = c.trials;
  j["method"] = c.method;
  j["record_wallclock"] = c.record_wallclock;
  j["design"] = {{"kind", c.design.kind}, {"n", c.design.n},  {"p", c.design.p},
                 {"scale", c.design.scale}, {"X", c.design.X}, {"y", c.design.y},
                 {"beta_star", c.design.beta_star}};
  j["prior"] = {{"kind", c.prior.kind}, {"support", c.prior.support}, {"probs", c.prior.probs}};
  j["mc"] = {{"n_samples", c.mc.n_samples},
             {"antithetic", c.mc.antithetic},
             {"enumeration_cap", c.mc.enumeration_cap}};
  j["tilt"] = {{"damping", c.tilt.damping},
               {"max_iter", c.tilt.max_iter},
               {"tol_u", c.tilt.tol_u},
               {"trace_elbo", c.tilt.trace_elbo}};
  j["gauss"] = {{"v_min", c.gauss.v_min},
                {"max_iter", c.gauss.max_iter},
                {"tol", c.gauss.tol},
                {"memory", c.gauss.memory}};
  j["jj"] = {{"tol_xi", c.jj.tol_xi}, {"max_iter", c.jj.max_iter}};
  j["gibbs"] = {{"chains", c.gibbs.chains},
                {"sweeps", c.gibbs.sweeps},
                {"burn_in", c.gibbs.burn_in},
                {"keep_every", c.gibbs.keep_every}};
  j["diagnostics"] = {{"deltas", c.diagnostics.deltas},
                      {"Cs", c.diagnostics.Cs},
                      {"random_probes", c.diagnostics.random_probes}};
  j["coverage"] = {{"alpha", c.coverage.alpha}, {"epsilon", c.coverage.epsilon}, {"slack", c.coverage.slack}};
  j["evidence"] = {{"methods", c.evidence.methods},
                   {"oracle", c.evidence.oracle},
                   {"evaluation_samples", c.evidence.evaluation_samples}};
  return j;
}

}  // namespace cli
