#include "mlsl/config.hpp"

#include "mlsl/errors.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace mlsl {

namespace pt = boost::property_tree;

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double to_double(const std::string& key, const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(ErrorKind::MalformedDocument, key + ": expected a number, got '" + s + "'");
  }
}

long to_long(const std::string& key, const std::string& s) {
  try {
    std::size_t used = 0;
    const long v = std::stol(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(ErrorKind::MalformedDocument, key + ": expected an integer, got '" + s + "'");
  }
}

bool to_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  fail(ErrorKind::MalformedDocument, key + ": expected true or false, got '" + s + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& s) {
  std::vector<std::string> parts;
  boost::split(parts, s, boost::is_any_of(","));
  std::vector<double> out;
  for (auto& p : parts) {
    boost::trim(p);
    out.push_back(to_double(key, p));
  }
  return out;
}

Vec to_vec(const std::string& key, const std::string& s, int d) {
  const std::vector<double> v = to_list(key, s);
  if (static_cast<int>(v.size()) != d) fail(ErrorKind::MalformedDocument, key + ": expected " + std::to_string(d) + " components");
  Vec out(d);
  for (int i = 0; i < d; ++i) out[i] = v[i];
  return out;
}

// Reads the tree and rejects keys outside the known set.
class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  std::optional<std::string> get(const std::string& section, const std::string& key) {
    seen_.insert(section + "." + key);
    const auto sec = tree_.get_child_optional(section);
    if (!sec) return std::nullopt;
    const auto v = sec->get_optional<std::string>(key);
    if (!v) return std::nullopt;
    return boost::trim_copy(*v);
  }

  void check_unknown() const {
    for (const auto& [section, body] : tree_) {
      if (body.empty() && !body.data().empty()) {
        fail(ErrorKind::MalformedDocument, "key '" + section + "' outside any section");
      }
      for (const auto& [key, value] : body) {
        if (!seen_.count(section + "." + key)) fail(ErrorKind::MalformedDocument, "unknown key " + section + "." + key);
      }
    }
  }

 private:
  const pt::ptree& tree_;
  std::set<std::string> seen_;
};

AtomicMeasure random_atoms(const std::string& key, const std::string& spec, int d, std::uint64_t seed) {
  std::vector<std::string> parts;
  boost::split(parts, spec, boost::is_any_of(":"));
  if (parts.size() != 3) fail(ErrorKind::MalformedDocument, key + ": expected random:N:spread");
  const long n = to_long(key, boost::trim_copy(parts[1]));
  const double spread = to_double(key, boost::trim_copy(parts[2]));
  if (n <= 0 || !(spread >= 0.0)) fail(ErrorKind::MalformedDocument, key + ": N must be positive and spread nonnegative");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-spread, spread);
  std::vector<PhaseVec> pts;
  for (long i = 0; i < n; ++i) {
    Vec x(d), xi(d);
    for (int k = 0; k < d; ++k) x[k] = u(rng);
    for (int k = 0; k < d; ++k) xi[k] = u(rng);
    pts.emplace_back(x, xi);
  }
  return AtomicMeasure::uniform(std::move(pts));
}

AtomicMeasure atoms_value(const std::string& key, const std::string& s, int d, std::uint64_t seed) {
  if (boost::starts_with(s, "random:")) return random_atoms(key, s, d, seed);
  try {
    return parse_atoms(s, d);
  } catch (const Error& e) {
    fail(e.kind(), key + ": " + e.what());
  }
}

Region region_value(const std::string& key, const std::string& s, int d) {
  std::vector<std::string> parts;
  boost::split(parts, s, boost::is_any_of(":"));
  for (auto& p : parts) boost::trim(p);
  try {
    if (parts[0] == "empty" && parts.size() == 1) return Region::empty();
    if (parts[0] == "whole" && parts.size() == 1) return Region::whole();
    if (parts[0] == "ball" && parts.size() == 3) {
      return Region::ball(to_vec(key, parts[1], d), to_double(key, parts[2]));
    }
    if (parts[0] == "annulus" && parts.size() == 4) {
      return Region::annulus(to_vec(key, parts[1], d), to_double(key, parts[2]), to_double(key, parts[3]));
    }
  } catch (const Error& e) {
    fail(e.kind(), key + ": " + e.what());
  }
  fail(ErrorKind::MalformedDocument, key + ": expected empty, whole, ball:c:r or annulus:c:r_in:r_out");
}

std::string region_text(const Region& r) {
  auto center = [&] {
    std::string s;
    for (int i = 0; i < r.center.size(); ++i) s += (i ? "," : "") + num(r.center[i]);
    return s;
  };
  switch (r.kind) {
    case Region::Kind::Empty: return "empty";
    case Region::Kind::Whole: return "whole";
    case Region::Kind::Ball: return "ball:" + center() + ":" + num(r.r_outer);
    case Region::Kind::Annulus: return "annulus:" + center() + ":" + num(r.r_inner) + ":" + num(r.r_outer);
  }
  return "empty";
}

}  // namespace

void SimConfig::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorKind::InvariantViolation, what); };
  if (d != 2 && d != 3) bad("model.d must be 2 or 3");
  if (!(hbar > 0.0)) bad("model.hbar must be positive");
  if (!(lambda > 0.0)) bad("model.lambda must be positive");
  if (grid_n < 16 || (grid_n & (grid_n - 1)) != 0) bad("grid.n must be a power of two >= 16");
  if (!(box_halfwidth > 0.0)) bad("grid.halfwidth must be positive");
  if (!(t_final >= 0.0)) bad("time.t_final must be nonnegative");
  if (!(dt_classical > 0.0) || !(dt_quantum > 0.0)) bad("time steps must be positive");
  if (!(checkpoint > 0.0)) bad("time.checkpoint must be positive");
  field.check_dimension(d);
  try {
    atoms_f.validate();
    atoms_mu.validate();
  } catch (const Error& e) {
    fail(e.kind(), std::string("initial atoms: ") + e.what());
  }
  if (atoms_f.dim() != d || atoms_mu.dim() != d) fail(ErrorKind::DimensionMismatch, "initial atoms must have dimension model.d");
  if (observe.lattice < 1) bad("observe.lattice must be at least 1");
  if (!(observe.k_halfwidth >= 0.0)) bad("observe.k_halfwidth must be nonnegative");
  if (!(observe.horizon > 0.0)) bad("observe.T must be positive");
  if (!(observe.dt > 0.0)) bad("observe.dt must be positive");
  if (observe.checkpoints < 2) bad("observe.checkpoints must be at least 2");
  if (observe.delta && !(*observe.delta > 0.0)) bad("observe.delta must be positive");
  if (observe.k_center.dim() != d) bad("observe.k_center must have dimension model.d");
}

SimConfig parse_config(std::string_view text, std::optional<std::uint64_t> seed) {
  pt::ptree tree;
  try {
    std::istringstream is{std::string(text)};
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    fail(ErrorKind::MalformedDocument, e.what());
  }
  Reader r(tree);
  SimConfig c;
  if (auto v = r.get("model", "d")) c.d = static_cast<int>(to_long("model.d", *v));
  if (auto v = r.get("model", "hbar")) c.hbar = to_double("model.hbar", *v);
  if (auto v = r.get("model", "lambda")) c.lambda = to_double("model.lambda", *v);
  if (auto v = r.get("model", "seed")) c.seed = static_cast<std::uint64_t>(to_long("model.seed", *v));
  if (seed) c.seed = *seed;
  if (c.d != 2 && c.d != 3) fail(ErrorKind::InvariantViolation, "model.d must be 2 or 3");

  {
    const std::string kind = r.get("field", "kind").value_or("zero");
    const auto eps = r.get("field", "eps");
    const auto name = r.get("field", "name");
    if (kind == "zero") {
      c.field = FieldSpec::zero();
    } else if (kind == "rotation") {
      c.field = FieldSpec::epsilon_rotation(eps ? to_double("field.eps", *eps) : 1.0);
    } else if (kind == "builtin") {
      c.field = FieldSpec::builtin(name.value_or(""));
    } else {
      fail(ErrorKind::MalformedDocument, "field.kind must be zero, rotation or builtin");
    }
    const std::string pot = r.get("potential", "name").value_or("zero");
    c.potential = pot == "zero" ? PotentialSpec::zero() : PotentialSpec::builtin(pot, c.d);
  }

  if (auto v = r.get("grid", "n")) c.grid_n = static_cast<int>(to_long("grid.n", *v));
  if (auto v = r.get("grid", "halfwidth")) c.box_halfwidth = to_double("grid.halfwidth", *v);
  if (auto v = r.get("time", "t_final")) c.t_final = to_double("time.t_final", *v);
  if (auto v = r.get("time", "dt_classical")) c.dt_classical = to_double("time.dt_classical", *v);
  if (auto v = r.get("time", "dt_quantum")) c.dt_quantum = to_double("time.dt_quantum", *v);
  if (auto v = r.get("time", "checkpoint")) c.checkpoint = to_double("time.checkpoint", *v);

  if (auto v = r.get("initial", "f")) {
    c.atoms_f = atoms_value("initial.f", *v, c.d, c.seed);
  } else {
    Vec x = Vec::Zero(c.d);
    x[0] = 1.0;
    c.atoms_f = AtomicMeasure::dirac(PhaseVec(x, Vec::Zero(c.d)));
  }
  if (auto v = r.get("initial", "matched")) c.matched = to_bool("initial.matched", *v);
  const auto mu = r.get("initial", "mu");
  if (mu && c.matched) fail(ErrorKind::MalformedDocument, "initial.mu requires initial.matched = false");
  c.atoms_mu = mu ? atoms_value("initial.mu", *mu, c.d, c.seed + 1) : c.atoms_f;

  if (auto v = r.get("transport", "tol")) c.transport.tol = to_double("transport.tol", *v);
  if (auto v = r.get("transport", "eps_start")) c.transport.eps_start = to_double("transport.eps_start", *v);
  if (auto v = r.get("transport", "eps_final_factor")) {
    c.transport.eps_final_factor = to_double("transport.eps_final_factor", *v);
  }
  if (auto v = r.get("transport", "eps_scaling")) c.transport.eps_scaling = to_double("transport.eps_scaling", *v);
  if (auto v = r.get("transport", "max_iter")) c.transport.max_iter = to_long("transport.max_iter", *v);
  if (auto v = r.get("transport", "truncation")) c.transport.truncation = to_double("transport.truncation", *v);

  ObserveSettings& o = c.observe;
  if (auto v = r.get("observe", "k_center")) {
    const std::vector<double> flat = to_list("observe.k_center", *v);
    if (static_cast<int>(flat.size()) != 2 * c.d) fail(ErrorKind::MalformedDocument, "observe.k_center needs 2d components");
    o.k_center = PhaseVec::from_flat(flat);
  } else {
    Vec x = Vec::Zero(c.d);
    x[0] = 1.0;
    o.k_center = PhaseVec(x, Vec::Zero(c.d));
  }
  if (auto v = r.get("observe", "k_halfwidth")) o.k_halfwidth = to_double("observe.k_halfwidth", *v);
  if (auto v = r.get("observe", "lattice")) o.lattice = static_cast<int>(to_long("observe.lattice", *v));
  if (auto v = r.get("observe", "omega")) o.omega = region_value("observe.omega", *v, c.d);
  if (auto v = r.get("observe", "T")) o.horizon = to_double("observe.T", *v);
  if (auto v = r.get("observe", "delta")) {
    if (*v != "auto") o.delta = to_double("observe.delta", *v);
  }
  if (auto v = r.get("observe", "dt")) o.dt = to_double("observe.dt", *v);
  if (auto v = r.get("observe", "checkpoints")) o.checkpoints = static_cast<int>(to_long("observe.checkpoints", *v));
  if (auto v = r.get("observe", "initial")) {
    if (*v != "center" && *v != "atoms") fail(ErrorKind::MalformedDocument, "observe.initial must be center or atoms");
    o.use_initial_atoms = *v == "atoms";
  }

  r.check_unknown();
  c.validate();
  return c;
}

SimConfig load_config(const std::string& path, std::optional<std::uint64_t> seed) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoFailure, "cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), seed);
}

std::string config_echo(const SimConfig& c) {
  std::ostringstream os;
  os << "[model]\n"
     << "d = " << c.d << "\nhbar = " << num(c.hbar) << "\nlambda = " << num(c.lambda) << "\nseed = " << c.seed << "\n";
  os << "[field]\n";
  switch (c.field.kind) {
    case FieldSpec::Kind::Zero: os << "kind = zero\n"; break;
    case FieldSpec::Kind::EpsilonRotation: os << "kind = rotation\neps = " << num(c.field.eps) << "\n"; break;
    case FieldSpec::Kind::Builtin: os << "kind = builtin\nname = " << c.field.name << "\n"; break;
  }
  os << "[potential]\nname = " << (c.potential.kind == PotentialSpec::Kind::Zero ? "zero" : c.potential.name) << "\n";
  os << "[grid]\nn = " << c.grid_n << "\nhalfwidth = " << num(c.box_halfwidth) << "\n";
  os << "[time]\nt_final = " << num(c.t_final) << "\ndt_classical = " << num(c.dt_classical)
     << "\ndt_quantum = " << num(c.dt_quantum) << "\ncheckpoint = " << num(c.checkpoint) << "\n";
  os << "[initial]\nmatched = " << (c.matched ? "true" : "false") << "\nf = " << format_atoms(c.atoms_f) << "\n";
  if (!c.matched) os << "mu = " << format_atoms(c.atoms_mu) << "\n";
  const SinkhornOptions& t = c.transport;
  os << "[transport]\ntol = " << num(t.tol) << "\neps_start = " << num(t.eps_start)
     << "\neps_final_factor = " << num(t.eps_final_factor) << "\neps_scaling = " << num(t.eps_scaling)
     << "\nmax_iter = " << t.max_iter << "\ntruncation = " << num(t.truncation) << "\n";
  const ObserveSettings& o = c.observe;
  const Eigen::VectorXd kc = o.k_center.flat();
  os << "[observe]\nk_center = ";
  for (Eigen::Index i = 0; i < kc.size(); ++i) os << (i ? "," : "") << num(kc[i]);
  os << "\nk_halfwidth = " << num(o.k_halfwidth) << "\nlattice = " << o.lattice << "\nomega = " << region_text(o.omega)
     << "\nT = " << num(o.horizon) << "\ndelta = " << (o.delta ? num(*o.delta) : std::string("auto"))
     << "\ndt = " << num(o.dt) << "\ncheckpoints = " << o.checkpoints
     << "\ninitial = " << (o.use_initial_atoms ? "atoms" : "center") << "\n";
  return os.str();
}

std::uint64_t config_hash(const SimConfig& config) {
  // FNV-1a, 64 bit.
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : config_echo(config)) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

AtomicMeasure parse_atoms(std::string_view text, int d) {
  std::vector<std::string> items;
  const std::string s(text);
  boost::split(items, s, boost::is_any_of(";"));
  AtomicMeasure m;
  for (auto& item : items) {
    boost::trim(item);
    if (item.empty()) continue;
    const std::vector<double> v = to_list("atom", item);
    if (static_cast<int>(v.size()) != 2 * d + 1) {
      fail(ErrorKind::MalformedDocument, "atom '" + item + "' needs " + std::to_string(2 * d + 1) + " numbers");
    }
    m.points.push_back(PhaseVec::from_flat(std::vector<double>(v.begin(), v.end() - 1)));
    m.weights.push_back(v.back());
  }
  if (m.points.empty()) fail(ErrorKind::MalformedDocument, "empty atom list");
  m.validate();
  return m;
}

std::string format_atoms(const AtomicMeasure& m) {
  std::string out;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const Eigen::VectorXd f = m.points[i].flat();
    if (i) out += "; ";
    for (Eigen::Index k = 0; k < f.size(); ++k) out += num(f[k]) + ",";
    out += num(m.weights[i]);
  }
  return out;
}

}  // namespace mlsl
