#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "adalang/analysis.hpp"
#include "adalang/cli.hpp"
#include "adalang/errors.hpp"

namespace adalang::cli {

namespace pt = boost::property_tree;

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::sample: return "sample";
    case Experiment::sweep: return "sweep";
    case Experiment::escape: return "escape";
    case Experiment::audit: return "audit";
    case Experiment::two_pathway: return "two-pathway";
    case Experiment::bayes_gen: return "bayes-gen";
  }
  return "?";
}

Experiment parse_experiment(const std::string& s) {
  for (Experiment e : {Experiment::sample, Experiment::sweep, Experiment::escape, Experiment::audit,
                       Experiment::two_pathway, Experiment::bayes_gen})
    if (to_string(e) == s) return e;
  throw ValidationError("experiment.type: unknown experiment '" + s + "'");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Reads typed values out of one INI section and remembers which keys were consumed.
class SectionReader {
 public:
  SectionReader(std::string name, const pt::ptree* node) : name_(std::move(name)), node_(node) {}

  [[nodiscard]] bool has(const std::string& key) const { return node_ && node_->find(key) != node_->not_found(); }

  std::optional<std::string> raw(const std::string& key) {
    if (!has(key)) return std::nullopt;
    used_.insert(key);
    return trim(node_->get<std::string>(key));
  }

  std::string str(const std::string& key, std::string def) { return raw(key).value_or(std::move(def)); }

  double number(const std::string& key, double def) {
    const auto v = raw(key);
    return v ? parse_double(key, *v) : def;
  }

  template <class Int>
  Int integer(const std::string& key, Int def) {
    const auto v = raw(key);
    if (!v) return def;
    Int out{};
    const auto* end = v->data() + v->size();
    const auto [ptr, ec] = std::from_chars(v->data(), end, out);
    if (ec != std::errc() || ptr != end) fail(key, "expected an integer, got '" + *v + "'");
    return out;
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> def) {
    const auto v = raw(key);
    if (!v) return def;
    std::vector<double> out;
    for (const auto& item : split_list(*v)) out.push_back(parse_double(key, item));
    return out;
  }

  std::vector<std::string> words(const std::string& key, std::vector<std::string> def) {
    const auto v = raw(key);
    return v ? split_list(*v) : def;
  }

  /// Rejects keys outside `allowed`, and keys inside it that were not read.
  void finish(const std::set<std::string>& allowed, const std::string& context = "") const {
    if (!node_) return;
    for (const auto& [key, child] : *node_) {
      if (!child.empty()) fail(key, "nested values are not supported");
      if (!allowed.count(key)) fail(key, "unknown key" + context);
      if (!used_.count(key)) fail(key, "not used" + context);
    }
  }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw ValidationError(name_ + "." + key + ": " + msg);
  }

 private:
  double parse_double(const std::string& key, const std::string& v) const {
    double out = 0.0;
    const auto* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end) fail(key, "expected a number, got '" + v + "'");
    return out;
  }

  std::string name_;
  const pt::ptree* node_;
  std::set<std::string> used_;
};

const std::map<std::string, std::set<std::string>> kPotentialKeys{
    {"modified_harmonic", {"id", "a", "b", "c", "x0"}},
    {"harmonic", {"id", "k", "dim"}},
    {"bayes", {"id", "K", "a", "y", "data_file"}},
    {"two_pathway", {"id", "k1", "k2", "k3", "k4"}},
};

const std::map<std::string, std::set<std::string>> kMonitorKeys{
    {"constant", {"id", "value", "m", "M"}},
    {"grad_norm", {"id", "m", "M", "r", "alpha", "a", "b", "c", "x0"}},
    {"omega_sq", {"id", "m", "M", "r", "alpha", "a", "b", "c", "x0"}},
    {"omega", {"id", "m", "M", "r", "alpha", "a", "b", "c", "x0"}},
    {"channel", {"id", "m", "M", "r", "alpha", "orientation"}},
    {"bayes", {"id", "m", "M", "r", "alpha"}},
};

const std::set<std::string> kSections{"experiment", "potential", "monitor", "sampler", "init", "run"};

std::string fmt_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string fmt_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt_double(v[i]);
  return s;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  for (const auto& [name, node] : tree) {
    if (node.empty()) throw ValidationError("config: key '" + name + "' appears outside a section");
    if (!kSections.count(name)) throw ValidationError("config: unknown section [" + name + "]");
  }
  auto section = [&](const std::string& name) -> const pt::ptree* {
    const auto it = tree.find(name);
    return it == tree.not_found() ? nullptr : &it->second;
  };

  ExperimentConfig cfg;

  SectionReader ex("experiment", section("experiment"));
  cfg.experiment = parse_experiment(ex.str("type", "sample"));
  cfg.out = ex.str("out", cfg.out);
  cfg.schemes = ex.words("schemes", cfg.schemes);
  cfg.h_list = ex.numbers("h_list", {});
  ex.finish({"type", "out", "schemes", "h_list"});

  SectionReader po("potential", section("potential"));
  auto& p = cfg.potential;
  p.id = po.str("id", p.id);
  const auto pk = kPotentialKeys.find(p.id);
  if (pk == kPotentialKeys.end()) po.fail("id", "unknown potential '" + p.id + "'");
  if (p.id == "modified_harmonic") {
    p.mh.a = po.number("a", p.mh.a);
    p.mh.b = po.number("b", p.mh.b);
    p.mh.c = po.number("c", p.mh.c);
    p.mh.x0 = po.number("x0", p.mh.x0);
  } else if (p.id == "harmonic") {
    p.k = po.number("k", p.k);
    p.dim = po.integer("dim", p.dim);
  } else if (p.id == "bayes") {
    p.K = po.integer("K", p.K);
    p.a = po.number("a", p.a);
    p.y = po.numbers("y", {});
    p.data_file = po.str("data_file", "");
  } else {
    p.tp.k1 = po.number("k1", p.tp.k1);
    p.tp.k2 = po.number("k2", p.tp.k2);
    p.tp.k3 = po.number("k3", p.tp.k3);
    p.tp.k4 = po.number("k4", p.tp.k4);
  }
  po.finish(pk->second, " for potential '" + p.id + "'");

  SectionReader mo("monitor", section("monitor"));
  auto& m = cfg.monitor;
  m.id = mo.str("id", m.id);
  const auto mk = kMonitorKeys.find(m.id);
  if (mk == kMonitorKeys.end()) mo.fail("id", "unknown monitor '" + m.id + "'");
  if (m.id == "constant") {
    m.value = mo.number("value", m.value);
    m.params.m = mo.number("m", 0.5 * m.value);
    m.params.Mcap = mo.number("M", 2.0 * m.value);
  } else {
    m.params.m = mo.number("m", m.params.m);
    m.params.Mcap = mo.number("M", m.params.Mcap);
    m.params.r = mo.number("r", m.params.r);
    m.params.alpha = mo.integer("alpha", m.params.alpha);
  }
  if (m.id == "channel") {
    const std::string o = mo.str("orientation", "inverse");
    if (o == "direct") m.orientation = Orientation::direct;
    else if (o == "inverse") m.orientation = Orientation::inverse;
    else mo.fail("orientation", "expected 'direct' or 'inverse', got '" + o + "'");
  }
  if (m.id == "grad_norm" || m.id == "omega_sq" || m.id == "omega") {
    if (mo.has("a") || mo.has("b") || mo.has("c") || mo.has("x0")) {
      ModifiedHarmonicParams mh = p.mh;
      mh.a = mo.number("a", mh.a);
      mh.b = mo.number("b", mh.b);
      mh.c = mo.number("c", mh.c);
      mh.x0 = mo.number("x0", mh.x0);
      m.mh = mh;
    }
  }
  mo.finish(mk->second, " for monitor '" + m.id + "'");

  SectionReader sa("sampler", section("sampler"));
  auto& s = cfg.sampler;
  s.h = sa.number("h", s.h);
  s.beta_inv = sa.number("beta_inv", s.beta_inv);
  s.gamma = sa.number("gamma", s.gamma);
  s.t_final = sa.number("t_final", s.t_final);
  s.burn_in_steps = sa.integer("burn_in_steps", s.burn_in_steps);
  s.n_traj = sa.integer("n_traj", s.n_traj);
  s.seed = sa.integer("seed", s.seed);
  s.fp_tol = sa.number("fp_tol", s.fp_tol);
  s.fp_max_iter = sa.integer("fp_max_iter", s.fp_max_iter);
  s.sample_stride = sa.integer("sample_stride", s.sample_stride);
  sa.finish({"h", "beta_inv", "gamma", "t_final", "burn_in_steps", "n_traj", "seed", "fp_tol", "fp_max_iter",
             "sample_stride"});

  SectionReader in_("init", section("init"));
  cfg.init.mean = in_.numbers("mean", {});
  cfg.init.std = in_.number("std", cfg.init.std);
  in_.finish({"mean", "std"});

  SectionReader ru("run", section("run"));
  auto& r = cfg.run;
  r.threads = ru.integer("threads", r.threads);
  r.k_max = ru.integer("k_max", r.k_max);
  r.bins = ru.integer("bins", r.bins);
  r.support_lo = ru.number("support_lo", r.support_lo);
  r.support_hi = ru.number("support_hi", r.support_hi);
  r.slope_k = ru.integer("slope_k", r.slope_k);
  r.stride = ru.integer("stride", r.stride);
  r.upper_threshold = ru.number("upper_threshold", r.upper_threshold);
  r.lower_threshold = ru.number("lower_threshold", r.lower_threshold);
  r.small_h = ru.number("small_h", r.small_h);
  r.small_t_final = ru.number("small_t_final", r.small_t_final);
  r.n = ru.integer("n", r.n);
  r.mu_true = ru.number("mu_true", r.mu_true);
  r.audit_lo = ru.numbers("audit_lo", r.audit_lo);
  r.audit_hi = ru.numbers("audit_hi", r.audit_hi);
  r.n_grid = ru.integer("n_grid", r.n_grid);
  r.spacing = ru.number("spacing", r.spacing);
  ru.finish({"threads", "k_max", "bins", "support_lo", "support_hi", "slope_k", "stride", "upper_threshold",
             "lower_threshold", "small_h", "small_t_final", "n", "mu_true", "audit_lo", "audit_hi", "n_grid",
             "spacing"});

  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ValidationError(msg); };
  sampler.validate();
  if (schemes.empty()) fail("experiment.schemes: at least one scheme is required");
  for (const auto& s : schemes)
    if (!is_known_scheme(s)) fail("experiment.schemes: unknown scheme '" + s + "'");
  for (double h : h_list)
    if (!(h > 0.0) || !std::isfinite(h)) fail("experiment.h_list: every entry must be a finite value > 0");
  if ((experiment == Experiment::sweep || experiment == Experiment::escape) && h_list.empty())
    fail("experiment.h_list: required for " + to_string(experiment));

  const auto& p = potential;
  if (p.id == "modified_harmonic" && (!(p.mh.a > 0) || !(p.mh.b > 0) || !(p.mh.c >= 0)))
    fail("potential: modified_harmonic requires a > 0, b > 0, c >= 0");
  if (p.id == "harmonic" && (!(p.k > 0) || p.dim < 1)) fail("potential: harmonic requires k > 0 and dim >= 1");
  if (p.id == "bayes") {
    if (p.K < 1) fail("potential.K: must be >= 1");
    if (p.y.empty() == p.data_file.empty() && experiment != Experiment::bayes_gen)
      fail("potential: bayes needs exactly one of 'y' or 'data_file'");
  }

  const auto& m = monitor;
  if (m.id == "constant") {
    if (!(m.value > 0)) fail("monitor.value: must be > 0");
  } else {
    try {
      m.params.validate();
    } catch (const ValidationError& e) {
      fail(e.what());
    }
  }
  const int dim = p.id == "harmonic" ? p.dim : (p.id == "two_pathway" ? 2 : 1);
  if ((m.id == "grad_norm" || m.id == "omega_sq" || m.id == "omega" || m.id == "bayes") && dim != 1)
    fail("monitor.id: '" + m.id + "' is one-dimensional but the potential is not");
  if (m.id == "channel" && dim != 2) fail("monitor.id: 'channel' requires the two_pathway potential");
  if (m.id == "bayes" && p.id != "bayes") fail("monitor.id: 'bayes' requires the bayes potential");

  if (init.std >= 0.0 && !std::isfinite(init.std)) fail("init.std: must be finite");
  if (!init.mean.empty() && static_cast<int>(init.mean.size()) != dim)
    fail("init.mean: expected " + std::to_string(dim) + " values");

  if (run.k_max < 1) fail("run.k_max: must be >= 1");
  if (run.bins < 50) fail("run.bins: must be >= 50");
  if (!(run.support_lo < run.support_hi)) fail("run.support_lo: must be < run.support_hi");
  if (run.slope_k < 1 || run.slope_k > run.k_max) fail("run.slope_k: must lie in [1, k_max]");
  if (run.stride < 1) fail("run.stride: must be >= 1");
  if (!(run.upper_threshold > 0) || !(run.lower_threshold > 0)) fail("run: channel thresholds must be > 0");
  if (!(run.small_h > 0)) fail("run.small_h: must be > 0");
  if (run.small_t_final < 0) fail("run.small_t_final: must be >= 0");
  if (run.n < 1) fail("run.n: must be >= 1");
  if (run.audit_lo.size() != run.audit_hi.size() || run.audit_lo.empty())
    fail("run.audit_lo: must have the same nonzero length as run.audit_hi");
  if (run.n_grid < 2) fail("run.n_grid: must be >= 2");
  if (!(run.spacing > 0) || run.spacing > 0.01) fail("run.spacing: must lie in (0, 0.01]");
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream os;
  auto kv = [&](const std::string& k, const std::string& v) { os << k << " = " << v << '\n'; };
  auto num = [&](const std::string& k, double v) { kv(k, fmt_double(v)); };

  os << "[experiment]\n";
  kv("type", to_string(cfg.experiment));
  kv("out", cfg.out);
  std::string schemes;
  for (std::size_t i = 0; i < cfg.schemes.size(); ++i) schemes += (i ? ", " : "") + cfg.schemes[i];
  kv("schemes", schemes);
  if (!cfg.h_list.empty()) kv("h_list", fmt_list(cfg.h_list));

  const auto& p = cfg.potential;
  os << "\n[potential]\n";
  kv("id", p.id);
  if (p.id == "modified_harmonic") {
    num("a", p.mh.a), num("b", p.mh.b), num("c", p.mh.c), num("x0", p.mh.x0);
  } else if (p.id == "harmonic") {
    num("k", p.k), kv("dim", std::to_string(p.dim));
  } else if (p.id == "bayes") {
    kv("K", std::to_string(p.K));
    num("a", p.a);
    if (!p.y.empty()) kv("y", fmt_list(p.y));
    if (!p.data_file.empty()) kv("data_file", p.data_file);
  } else {
    num("k1", p.tp.k1), num("k2", p.tp.k2), num("k3", p.tp.k3), num("k4", p.tp.k4);
  }

  const auto& m = cfg.monitor;
  os << "\n[monitor]\n";
  kv("id", m.id);
  if (m.id == "constant") {
    num("value", m.value), num("m", m.params.m), num("M", m.params.Mcap);
  } else {
    num("m", m.params.m), num("M", m.params.Mcap), num("r", m.params.r), kv("alpha", std::to_string(m.params.alpha));
  }
  if (m.id == "channel") kv("orientation", m.orientation == Orientation::direct ? "direct" : "inverse");
  if (m.mh) num("a", m.mh->a), num("b", m.mh->b), num("c", m.mh->c), num("x0", m.mh->x0);

  const auto& s = cfg.sampler;
  os << "\n[sampler]\n";
  num("h", s.h);
  num("beta_inv", s.beta_inv);
  num("gamma", s.gamma);
  num("t_final", s.t_final);
  kv("burn_in_steps", std::to_string(s.burn_in_steps));
  kv("n_traj", std::to_string(s.n_traj));
  kv("seed", std::to_string(s.seed));
  num("fp_tol", s.fp_tol);
  kv("fp_max_iter", std::to_string(s.fp_max_iter));
  kv("sample_stride", std::to_string(s.sample_stride));

  os << "\n[init]\n";
  if (!cfg.init.mean.empty()) kv("mean", fmt_list(cfg.init.mean));
  num("std", cfg.init.std);

  const auto& r = cfg.run;
  os << "\n[run]\n";
  kv("threads", std::to_string(r.threads));
  kv("k_max", std::to_string(r.k_max));
  kv("bins", std::to_string(r.bins));
  num("support_lo", r.support_lo);
  num("support_hi", r.support_hi);
  kv("slope_k", std::to_string(r.slope_k));
  kv("stride", std::to_string(r.stride));
  num("upper_threshold", r.upper_threshold);
  num("lower_threshold", r.lower_threshold);
  num("small_h", r.small_h);
  num("small_t_final", r.small_t_final);
  kv("n", std::to_string(r.n));
  num("mu_true", r.mu_true);
  kv("audit_lo", fmt_list(r.audit_lo));
  kv("audit_hi", fmt_list(r.audit_hi));
  kv("n_grid", std::to_string(r.n_grid));
  num("spacing", r.spacing);
  return os.str();
}

}  // namespace adalang::cli
