#include "levyident/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace levyident {

namespace {

constexpr double kMarginTol = 1e-6;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

// section -> key -> (value, line number)
using RawConfig = std::map<std::string, std::map<std::string, std::pair<std::string, int>>>;

RawConfig parse_ini(const std::string& text, std::vector<std::string>* errors) {
  RawConfig raw;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') {
        errors->push_back("line " + std::to_string(lineno) + ": unterminated section header");
        continue;
      }
      section = lower(trim(t.substr(1, t.size() - 2)));
      raw[section];
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      errors->push_back("line " + std::to_string(lineno) + ": expected key = value");
      continue;
    }
    const std::string key = lower(trim(t.substr(0, eq)));
    if (key.empty()) {
      errors->push_back("line " + std::to_string(lineno) + ": empty key");
      continue;
    }
    raw[section][key] = {trim(t.substr(eq + 1)), lineno};
  }
  return raw;
}

class Reader {
 public:
  Reader(const RawConfig& raw, std::vector<std::string>* errors)
      : raw_(raw), errors_(errors) {}

  bool has(const std::string& section, const std::string& key) const {
    const auto s = raw_.find(section);
    return s != raw_.end() && s->second.count(key) > 0;
  }

  std::optional<std::string> str(const std::string& section, const std::string& key) {
    const auto s = raw_.find(section);
    if (s == raw_.end()) return std::nullopt;
    const auto k = s->second.find(key);
    if (k == s->second.end()) return std::nullopt;
    used_[section].insert(key);
    return k->second.first;
  }

  template <typename T>
  std::optional<T> number(const std::string& section, const std::string& key) {
    const auto v = str(section, key);
    if (!v) return std::nullopt;
    std::istringstream in(*v);
    T out;
    in >> out;
    if (in.fail() || !trim_rest_empty(in)) {
      fail(section, key, "expected a number, got '" + *v + "'");
      return std::nullopt;
    }
    return out;
  }

  std::optional<bool> boolean(const std::string& section, const std::string& key) {
    const auto v = str(section, key);
    if (!v) return std::nullopt;
    const std::string s = lower(*v);
    if (s == "true" || s == "1" || s == "on" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "off" || s == "no") return false;
    fail(section, key, "expected a boolean, got '" + *v + "'");
    return std::nullopt;
  }

  std::optional<std::vector<double>> list(const std::string& section,
                                          const std::string& key) {
    const auto v = str(section, key);
    if (!v) return std::nullopt;
    std::vector<double> out;
    if (trim(*v).empty()) return out;
    std::istringstream in(*v);
    std::string item;
    while (std::getline(in, item, ',')) {
      std::istringstream num(trim(item));
      double x;
      num >> x;
      if (num.fail() || !trim_rest_empty(num)) {
        fail(section, key, "expected a comma-separated number list, got '" + *v + "'");
        return std::nullopt;
      }
      out.push_back(x);
    }
    return out;
  }

  std::optional<std::vector<std::string>> names(const std::string& section,
                                               const std::string& key) {
    const auto v = str(section, key);
    if (!v) return std::nullopt;
    std::vector<std::string> out;
    if (trim(*v).empty()) return out;
    std::istringstream in(*v);
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(lower(trim(item)));
    return out;
  }

  void fail(const std::string& section, const std::string& key,
            const std::string& what) {
    int lineno = 0;
    const auto s = raw_.find(section);
    if (s != raw_.end()) {
      const auto k = s->second.find(key);
      if (k != s->second.end()) lineno = k->second.second;
    }
    errors_->push_back("line " + std::to_string(lineno) + ": [" + section + "] " +
                       key + ": " + what);
  }

  void check_unknown_keys() {
    for (const auto& [section, kv] : raw_)
      for (const auto& [key, val] : kv)
        if (used_[section].count(key) == 0)
          errors_->push_back("line " + std::to_string(val.second) + ": unknown key [" +
                             section + "] " + key);
  }

 private:
  static bool trim_rest_empty(std::istringstream& in) {
    std::string rest;
    in >> rest;
    return rest.empty();
  }

  const RawConfig& raw_;
  std::vector<std::string>* errors_;
  std::map<std::string, std::set<std::string>> used_;
};

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::Simulate: return "simulate";
    case Mode::EstimatePe: return "estimate-pe";
    case Mode::EstimateEcf: return "estimate-ecf";
    case Mode::EstimateCombined: return "estimate-combined";
    case Mode::Efficiency: return "efficiency";
    case Mode::McValidate: return "mc-validate";
  }
  return "?";
}

std::string to_string(McEstimator est) {
  switch (est) {
    case McEstimator::Pe: return "pe";
    case McEstimator::EcfTheta: return "ecf-theta";
    case McEstimator::EcfJoint: return "ecf-joint";
    case McEstimator::EcfEta: return "ecf-eta";
    case McEstimator::Combined: return "combined";
  }
  return "?";
}

std::vector<int> ExperimentConfig::resolved_free_eta() const {
  if (!free_eta.empty()) return free_eta;
  std::vector<int> all(noise.eta_dim());
  for (int j = 0; j < noise.eta_dim(); ++j) all[j] = j;
  return all;
}

int ExperimentConfig::free_dim() const {
  const int d_theta = system.dim();
  const int d_eta = static_cast<int>(resolved_free_eta().size());
  McEstimator est = estimator;
  if (mode == Mode::EstimatePe) est = McEstimator::Pe;
  if (mode == Mode::EstimateEcf) est = McEstimator::EcfJoint;
  if (mode == Mode::EstimateCombined) est = McEstimator::Combined;
  switch (est) {
    case McEstimator::Pe: return d_theta + (estimate_mean ? 1 : 0);
    case McEstimator::EcfTheta: return d_theta;
    case McEstimator::EcfJoint: return d_theta + d_eta;
    case McEstimator::EcfEta: return d_eta;
    case McEstimator::Combined: return d_eta;  // the box guards the eta stage
  }
  return 0;
}

ExperimentConfig validate_config(const std::string& text) {
  std::vector<std::string> errors;
  const RawConfig raw = parse_ini(text, &errors);
  Reader rd(raw, &errors);
  ExperimentConfig cfg;

  // [experiment]
  if (const auto m = rd.str("experiment", "mode")) {
    const std::string s = lower(*m);
    if (s == "simulate") cfg.mode = Mode::Simulate;
    else if (s == "estimate-pe") cfg.mode = Mode::EstimatePe;
    else if (s == "estimate-ecf") cfg.mode = Mode::EstimateEcf;
    else if (s == "estimate-combined") cfg.mode = Mode::EstimateCombined;
    else if (s == "efficiency") cfg.mode = Mode::Efficiency;
    else if (s == "mc-validate") cfg.mode = Mode::McValidate;
    else rd.fail("experiment", "mode", "unknown mode '" + *m + "'");
  } else {
    errors.push_back("[experiment] mode: required");
  }
  if (const auto v = rd.number<long long>("experiment", "n_samples")) {
    if (*v < 1) rd.fail("experiment", "n_samples", "must be >= 1");
    else cfg.n_samples = static_cast<std::size_t>(*v);
  }
  if (const auto v = rd.number<int>("experiment", "n_replications")) {
    if (*v < 1) rd.fail("experiment", "n_replications", "must be >= 1");
    else cfg.n_replications = *v;
  }
  if (const auto v = rd.number<std::uint64_t>("experiment", "seed")) cfg.seed = *v;
  if (const auto v = rd.str("experiment", "estimator")) {
    const std::string s = lower(*v);
    if (s == "pe") cfg.estimator = McEstimator::Pe;
    else if (s == "ecf-theta") cfg.estimator = McEstimator::EcfTheta;
    else if (s == "ecf-joint") cfg.estimator = McEstimator::EcfJoint;
    else if (s == "ecf-eta") cfg.estimator = McEstimator::EcfEta;
    else if (s == "combined") cfg.estimator = McEstimator::Combined;
    else rd.fail("experiment", "estimator", "unknown estimator '" + *v + "'");
  }
  if (const auto v = rd.boolean("experiment", "estimate_mean")) cfg.estimate_mean = *v;
  if (const auto v = rd.boolean("experiment", "second_pass")) cfg.second_pass = *v;
  if (const auto v = rd.number<double>("experiment", "second_pass_u"))
    cfg.second_pass_u = *v;
  if (const auto v = rd.number<int>("experiment", "efficiency_max_k")) {
    if (*v < 1) rd.fail("experiment", "efficiency_max_k", "must be >= 1");
    else cfg.efficiency_max_k = *v;
  }
  if (const auto v = rd.str("experiment", "output_dir")) cfg.output_dir = *v;

  // [system]
  if (const auto v = rd.list("system", "ar")) cfg.system.ar = *v;
  if (const auto v = rd.list("system", "ma")) cfg.system.ma = *v;
  if (cfg.system.dim() > 0 && stability_margin(cfg.system) <= kMarginTol)
    errors.push_back("[system]: not stable and inversely stable (margin <= 1e-6)");

  // [noise]
  {
    std::string family = "cgmy";
    if (const auto v = rd.str("noise", "family")) family = lower(*v);
    try {
      if (family == "cgmy") {
        const double c = rd.number<double>("noise", "c").value_or(1.0);
        const double g = rd.number<double>("noise", "g").value_or(1.0);
        const double m = rd.number<double>("noise", "m").value_or(1.0);
        const double y = rd.number<double>("noise", "y").value_or(0.5);
        cfg.noise = NoiseModel::cgmy(c, g, m, y);
      } else if (family == "vg") {
        const double drift = rd.number<double>("noise", "drift").value_or(0.0);
        const double sigma = rd.number<double>("noise", "sigma").value_or(1.0);
        const double nu = rd.number<double>("noise", "nu").value_or(0.2);
        cfg.noise = NoiseModel::vg(drift, sigma, nu);
      } else {
        errors.push_back("[noise] family: unknown family '" + family + "'");
      }
    } catch (const std::invalid_argument& e) {
      errors.push_back(std::string("[noise]: ") + e.what());
    }
  }

  // [sampling]
  if (const auto v = rd.number<double>("sampling", "h")) {
    if (*v <= 0) rd.fail("sampling", "h", "must be > 0");
    else cfg.sampling.h = *v;
  }
  if (const auto v = rd.number<double>("sampling", "epsilon")) {
    if (!(*v > 0 && *v < 1)) rd.fail("sampling", "epsilon", "must be in (0, 1)");
    else cfg.sampling.epsilon = *v;
  }
  if (const auto v = rd.boolean("sampling", "compensate_small_jumps"))
    cfg.sampling.compensate_small_jumps = *v;
  if (const auto v = rd.boolean("sampling", "center")) cfg.sampling.center = *v;

  // [grid]
  {
    std::optional<Eigen::VectorXd> u;
    if (const auto v = rd.list("grid", "u")) {
      if (v->empty()) rd.fail("grid", "u", "needs at least one point");
      else u = to_vector(*v);
    }
    int k = 10;
    if (const auto v = rd.number<int>("grid", "k")) {
      if (*v < 1) rd.fail("grid", "k", "must be >= 1");
      else k = *v;
    }
    try {
      cfg.grid = u ? EcfGrid::make_identity(*u) : EcfGrid::default_grid(k);
    } catch (const std::invalid_argument& e) {
      errors.push_back(std::string("[grid]: ") + e.what());
    }
  }

  // [experiment] free_eta, resolved against the noise family
  if (const auto v = rd.names("experiment", "free_eta")) {
    const std::vector<std::string> all = cfg.noise.eta_names();
    for (const std::string& name : *v) {
      const auto it = std::find(all.begin(), all.end(), name);
      if (it == all.end())
        rd.fail("experiment", "free_eta",
                "unknown " + cfg.noise.family() + " parameter '" + name + "'");
      else
        cfg.free_eta.push_back(static_cast<int>(it - all.begin()));
    }
  }

  // [init]
  cfg.init = JointParams{cfg.system, cfg.noise, 0.0};
  if (const auto v = rd.list("init", "ar")) cfg.init.theta.ar = *v;
  if (const auto v = rd.list("init", "ma")) cfg.init.theta.ma = *v;
  if (const auto v = rd.list("init", "eta")) {
    if (static_cast<int>(v->size()) != cfg.noise.eta_dim()) {
      rd.fail("init", "eta",
              "expected " + std::to_string(cfg.noise.eta_dim()) + " values");
    } else {
      try {
        cfg.init.eta = cfg.noise.with_eta(to_vector(*v));
      } catch (const std::invalid_argument& e) {
        rd.fail("init", "eta", e.what());
      }
    }
  }
  if (const auto v = rd.number<double>("init", "mean")) cfg.init.mean_shift = *v;
  if (cfg.init.theta.p() != cfg.system.p() || cfg.init.theta.q() != cfg.system.q())
    errors.push_back("[init]: ar/ma orders must match [system]");
  else if (cfg.init.theta.dim() > 0 && stability_margin(cfg.init.theta) <= kMarginTol)
    errors.push_back("[init]: not stable and inversely stable (margin <= 1e-6)");

  // [domain]
  {
    const auto lo = rd.list("domain", "lower");
    const auto hi = rd.list("domain", "upper");
    if (lo.has_value() != hi.has_value()) {
      errors.push_back("[domain]: lower and upper must be given together");
    } else if (lo) {
      const int d = cfg.free_dim();
      if (static_cast<int>(lo->size()) != d || static_cast<int>(hi->size()) != d) {
        errors.push_back("[domain]: expected " + std::to_string(d) +
                         " bounds (free coordinates of estimator " +
                         to_string(cfg.estimator) + ")");
      } else {
        cfg.domain_lower = to_vector(*lo);
        cfg.domain_upper = to_vector(*hi);
        for (int i = 0; i < d; ++i)
          if (cfg.domain_lower[i] > cfg.domain_upper[i])
            errors.push_back("[domain]: lower > upper at coordinate " +
                             std::to_string(i));
      }
    }
  }

  rd.check_unknown_keys();

  // Cross-checks that need the assembled config.
  const int dim_rho = cfg.system.dim() + cfg.noise.eta_dim();
  const std::size_t n_min = std::max<std::size_t>(100, 10 * dim_rho);
  if (cfg.mode != Mode::Efficiency && cfg.n_samples < n_min)
    errors.push_back("[experiment] n_samples: must be >= " + std::to_string(n_min) +
                     " (max(100, 10 dim rho))");
  const bool needs_theta =
      cfg.mode == Mode::EstimatePe || cfg.mode == Mode::EstimateCombined ||
      (cfg.mode == Mode::McValidate && cfg.estimator != McEstimator::EcfEta);
  if (cfg.mode != Mode::Efficiency && cfg.system.dim() == 0 && needs_theta)
    errors.push_back("[system]: ar/ma must define at least one coefficient");
  const bool uses_ecf =
      cfg.mode == Mode::EstimateEcf || cfg.mode == Mode::EstimateCombined ||
      cfg.mode == Mode::McValidate;
  if (uses_ecf && errors.empty() && 2 * cfg.grid.k() < cfg.free_dim())
    errors.push_back("[grid]: need 2k >= number of free coordinates (" +
                     std::to_string(cfg.free_dim()) + ")");
  if (cfg.domain_lower.size() > 0 && errors.empty()) {
    // The box must contain the starting point.
    Eigen::VectorXd x0(cfg.free_dim());
    int off = 0;
    const McEstimator est = cfg.mode == Mode::EstimatePe ? McEstimator::Pe
                            : cfg.mode == Mode::EstimateEcf ? McEstimator::EcfJoint
                            : cfg.mode == Mode::EstimateCombined ? McEstimator::Combined
                                                                 : cfg.estimator;
    if (est == McEstimator::Pe || est == McEstimator::EcfTheta ||
        est == McEstimator::EcfJoint) {
      x0.head(cfg.system.dim()) = cfg.init.theta.theta();
      off = cfg.system.dim();
    }
    if (est == McEstimator::EcfJoint || est == McEstimator::EcfEta ||
        est == McEstimator::Combined) {
      const Eigen::VectorXd eta = cfg.init.eta.eta();
      for (int j : cfg.resolved_free_eta()) x0[off++] = eta[j];
    }
    if (est == McEstimator::Pe && cfg.estimate_mean) x0[off++] = cfg.init.mean_shift;
    for (int i = 0; i < x0.size(); ++i)
      if (x0[i] < cfg.domain_lower[i] || x0[i] > cfg.domain_upper[i]) {
        errors.push_back("[domain]: box does not contain the starting point");
        break;
      }
  }

  if (!errors.empty()) {
    std::string msg = "invalid config:";
    for (const std::string& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return validate_config(buf.str());
}

}  // namespace levyident
