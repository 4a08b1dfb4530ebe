#pragma once

// Config-driven experiment runner: builds systems from an ExperimentConfig,
// runs verification batteries, spectra, deformation studies and Carleman
// sweeps, and returns report rows plus CSV tables.

#include <algorithm>
#include <cstdio>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "maglab/battery.hpp"
#include "maglab/deformation.hpp"
#include "maglab/identity_lab.hpp"
#include "maglab/periodic_orbits.hpp"
#include "maglab/report_io.hpp"

namespace maglab {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct BatteryInfo {
  std::string name;
  std::string anchor;
  std::string backends;
};

inline const std::vector<BatteryInfo>& battery_catalog() {
  static const std::vector<BatteryInfo> list = {
      {"structural", "magnetic structural equations [V,F], [V,Xperp], [F,Xperp]", "all"},
      {"pestov", "Pestov energy identity and its cross-term corollary", "all"},
      {"riccati", "periodic Riccati solutions and the Riccati norm identity", "bolza"},
      {"mode", "mode-wise Pestov identity and ladder expansion of F", "all"},
      {"ladder", "two-sided ladder inequalities under pinched magnetic curvature", "bolza"},
      {"carleman", "Carleman estimate with factorial-exponential weights, engine replay", "bolza"},
      {"degree", "degree reduction from the Carleman estimate", "bolza"},
      {"contraction", "closing chain of two Carleman estimates", "bolza"},
      {"spectrum", "marked length spectrum against trace and hypercycle oracles", "all"},
      {"monodromy", "linearized return map: determinant, eigenvalues, hyperbolicity", "all"},
      {"livsic", "orbit integrals of the metric variation for isospectral families", "torus"},
      {"jacobi", "inhomogeneous Jacobi system of variational fields", "all"},
  };
  return list;
}

inline const BatteryInfo& battery_info(const std::string& name) {
  for (const auto& b : battery_catalog())
    if (b.name == name) return b;
  throw ConfigError("unknown battery '" + name + "'");
}

struct FamilySpec {
  std::string kind = "kappa-shift";  // kappa-shift | translation | conformal | constant
  double c = 0.5;                    // kappa-shift rate
  double ax = 0.7, ay = 0.3;         // translation direction
  Json phi = Json::array();          // conformal factor terms
  double h_s = 1e-3;
  std::vector<double> s_grid = {-0.1, -0.05, 0.0, 0.05, 0.1};
};

struct ExperimentConfig {
  std::uint64_t seed = 20240611;
  std::string backend = "bolza";  // flat-torus | torus | bolza
  Json torus_lambda = Json::array();
  Json torus_kappa = Json::array();
  int resolution = 16;
  double kappa_mean = 0.6;
  Json kappa_bumps = Json::array();
  int panels = 3;
  int gauss = 10;
  int negativity_resolution = 24;
  std::vector<std::string> batteries = {"structural", "pestov", "riccati", "mode",
                                        "ladder",     "carleman", "degree", "contraction"};
  int structural_size = 10;
  int battery_size = 50;
  int max_degree = 4;
  double sigma = 1.0;
  int carleman_n = 1;
  int k_max = 64;
  std::vector<double> sigmas = {0.1, 1.0, 3.0};
  std::vector<std::string> classes = {"g1", "g2", "g3", "g4", "g5", "g6", "g7", "g8"};
  std::vector<double> kappas = {0.0, 0.2, 0.4, 0.6, 0.8};
  FamilySpec family;
  std::string output_dir = "maglab-out";
};

// ---------------------------------------------------------------------------
// Config (de)serialization

namespace detail {

inline Json trig_terms_json(const std::vector<std::tuple<std::string, double, int, int>>& terms) {
  Json a = Json::array();
  for (const auto& [kind, amp, p, q] : terms) a.push_back({{"kind", kind}, {"a", amp}, {"p", p}, {"q", q}});
  return a;
}

inline TrigPoly trig_from_json(const Json& a, const std::string& where) {
  if (!a.is_array()) throw ConfigError(where + " must be an array of terms");
  TrigPoly out;
  for (const auto& t : a) {
    if (!t.is_object() || !t.contains("kind") || !t.contains("a"))
      throw ConfigError(where + ": each term needs 'kind' and 'a'");
    const std::string kind = t.at("kind").get<std::string>();
    const double amp = t.at("a").get<double>();
    const int p = t.value("p", 0), q = t.value("q", 0);
    if (std::abs(p) > 8 || std::abs(q) > 8) throw ConfigError(where + ": frequencies must satisfy |p|, |q| <= 8");
    if (kind == "cos")
      out = out + TrigPoly::cosine(amp, p, q);
    else if (kind == "sin")
      out = out + TrigPoly::sine(amp, p, q);
    else if (kind == "const")
      out = out + TrigPoly::constant(amp);
    else
      throw ConfigError(where + ": unknown term kind '" + kind + "'");
  }
  return out;
}

inline AtomSeries bumps_from_json(const Json& a) {
  if (!a.is_array()) throw ConfigError("bolza.kappa_bumps must be an array");
  AtomSeries s;
  for (const auto& b : a) {
    BumpAtom atom;
    const auto c = b.at("center");
    if (!c.is_array() || c.size() != 2) throw ConfigError("bump center must be [x, y]");
    atom.center = cplx(c[0].get<double>(), c[1].get<double>());
    if (!(std::abs(atom.center) < 0.9)) throw ConfigError("bump centers must satisfy |z| < 0.9");
    atom.radius = b.value("radius", 0.7);
    atom.power = b.value("power", 6);
    atom.weight = b.value("weight", 0.0);
    if (!(atom.radius > 0 && atom.radius <= 1.5)) throw ConfigError("bump radius must lie in (0, 1.5]");
    if (atom.power < 3 || atom.power > 12) throw ConfigError("bump power must lie in [3, 12]");
    s.modes[0].push_back(atom);
  }
  return s;
}

template <class T>
void read(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace detail

inline Json to_json(const ExperimentConfig& c) {
  Json j;
  j["seed"] = c.seed;
  j["backend"] = c.backend;
  j["torus"] = {{"lambda", c.torus_lambda}, {"kappa", c.torus_kappa}, {"resolution", c.resolution}};
  j["bolza"] = {{"kappa_mean", c.kappa_mean}, {"kappa_bumps", c.kappa_bumps}, {"panels", c.panels}, {"gauss", c.gauss}};
  j["negativity_resolution"] = c.negativity_resolution;
  j["batteries"] = c.batteries;
  j["battery"] = {{"structural_size", c.structural_size}, {"size", c.battery_size}, {"max_degree", c.max_degree}};
  j["carleman"] = {{"sigma", c.sigma}, {"N", c.carleman_n}, {"k_max", c.k_max}, {"sigmas", c.sigmas}};
  j["spectrum"] = {{"classes", c.classes}, {"kappas", c.kappas}};
  j["family"] = {{"kind", c.family.kind}, {"c", c.family.c},   {"ax", c.family.ax},         {"ay", c.family.ay},
                 {"phi", c.family.phi},   {"h_s", c.family.h_s}, {"s_grid", c.family.s_grid}};
  j["output"] = {{"dir", c.output_dir}};
  return j;
}

inline void validate(const ExperimentConfig& c) {
  using detail::require;
  require(c.backend == "flat-torus" || c.backend == "torus" || c.backend == "bolza",
          "backend must be one of flat-torus, torus, bolza");
  require(c.resolution >= 8 && c.resolution <= 256, "torus.resolution must lie in [8, 256]");
  require(c.panels >= 1 && c.panels <= 16, "bolza.panels must lie in [1, 16]");
  require(c.gauss >= 2 && c.gauss <= 20, "bolza.gauss must lie in [2, 20]");
  require(std::abs(c.kappa_mean) < 1.0, "bolza.kappa_mean must satisfy |kappa| < 1");
  require(c.negativity_resolution >= kMinNegativityResolution && c.negativity_resolution <= 512,
          "negativity_resolution must lie in [8, 512]");
  require(c.structural_size >= 1 && c.structural_size <= 1000, "battery.structural_size must lie in [1, 1000]");
  require(c.battery_size >= 1 && c.battery_size <= 1000, "battery.size must lie in [1, 1000]");
  require(c.max_degree >= 0 && c.max_degree <= 8, "battery.max_degree must lie in [0, 8]");
  require(c.carleman_n >= 1 && c.carleman_n <= 32, "carleman.N must lie in [1, 32]");
  require(c.k_max >= 2 && c.k_max <= 512, "carleman.k_max must lie in [2, 512]");
  if (!(c.sigma > 0))
    throw ConfigError("carleman.sigma must be positive: at sigma = 0 the strict weight bound "
                      "8k gamma_{k-1}^2 < gamma_k^2 fails (equality)");
  for (double s : c.sigmas) require(s > 0, "carleman.sigmas must all be positive (strictness fails at sigma = 0)");
  for (double k : c.kappas) require(k >= 0 && k < 1, "spectrum.kappas must lie in [0, 1)");
  require(c.family.h_s > 0 && c.family.h_s <= 0.1, "family.h_s must lie in (0, 0.1]");
  require(c.family.kind == "kappa-shift" || c.family.kind == "translation" || c.family.kind == "conformal" ||
              c.family.kind == "constant",
          "family.kind must be one of kappa-shift, translation, conformal, constant");
  for (const auto& b : c.batteries) battery_info(b);
  detail::trig_from_json(c.torus_lambda, "torus.lambda");
  detail::trig_from_json(c.torus_kappa, "torus.kappa");
  detail::bumps_from_json(c.kappa_bumps);
  if (c.backend == "flat-torus")
    require(detail::trig_from_json(c.torus_lambda, "torus.lambda").is_zero(), "flat-torus needs an empty torus.lambda");
}

/// Defaults depend on the backend: the flat torus gets the degree-2 field
/// 0.3 cos x + 0.2 sin(x + 2y) + 0.1, the conformal torus the standard pair.
inline ExperimentConfig default_config(const std::string& backend = "bolza") {
  ExperimentConfig c;
  c.backend = backend;
  if (backend == "flat-torus") {
    c.torus_kappa = detail::trig_terms_json({{"cos", 0.3, 1, 0}, {"sin", 0.2, 1, 2}, {"const", 0.1, 0, 0}});
  } else {
    c.torus_lambda = detail::trig_terms_json({{"cos", 0.1, 1, 0}, {"cos", 0.07, 0, 1}});
    c.torus_kappa = detail::trig_terms_json({{"sin", 0.05, 0, 1}});
  }
  if (backend == "torus") c.resolution = 48;
  if (backend != "bolza") {
    c.batteries = {"structural", "pestov", "mode"};
    c.classes = {"1,0", "0,1", "1,1", "2,1", "1,2"};
    c.family.kind = "translation";
  }
  return c;
}

inline ExperimentConfig config_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> known = {"seed",     "backend",  "torus",  "bolza",  "negativity_resolution",
                                              "batteries", "battery", "carleman", "spectrum", "family",
                                              "output"};
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw ConfigError("unknown config key '" + k + "'");
  try {
    ExperimentConfig c = default_config(j.value("backend", std::string("bolza")));
    if (!j.contains("seed")) throw ConfigError("config needs a seed");
    c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("torus")) {
      const auto& t = j.at("torus");
      detail::read(t, "lambda", c.torus_lambda);
      detail::read(t, "kappa", c.torus_kappa);
      detail::read(t, "resolution", c.resolution);
    }
    if (j.contains("bolza")) {
      const auto& b = j.at("bolza");
      detail::read(b, "kappa_mean", c.kappa_mean);
      detail::read(b, "kappa_bumps", c.kappa_bumps);
      detail::read(b, "panels", c.panels);
      detail::read(b, "gauss", c.gauss);
    }
    detail::read(j, "negativity_resolution", c.negativity_resolution);
    detail::read(j, "batteries", c.batteries);
    if (j.contains("battery")) {
      const auto& b = j.at("battery");
      detail::read(b, "structural_size", c.structural_size);
      detail::read(b, "size", c.battery_size);
      detail::read(b, "max_degree", c.max_degree);
    }
    if (j.contains("carleman")) {
      const auto& b = j.at("carleman");
      detail::read(b, "sigma", c.sigma);
      detail::read(b, "N", c.carleman_n);
      detail::read(b, "k_max", c.k_max);
      detail::read(b, "sigmas", c.sigmas);
    }
    if (j.contains("spectrum")) {
      detail::read(j.at("spectrum"), "classes", c.classes);
      detail::read(j.at("spectrum"), "kappas", c.kappas);
    }
    if (j.contains("family")) {
      const auto& f = j.at("family");
      detail::read(f, "kind", c.family.kind);
      detail::read(f, "c", c.family.c);
      detail::read(f, "ax", c.family.ax);
      detail::read(f, "ay", c.family.ay);
      detail::read(f, "phi", c.family.phi);
      detail::read(f, "h_s", c.family.h_s);
      detail::read(f, "s_grid", c.family.s_grid);
    }
    if (j.contains("output")) detail::read(j.at("output"), "dir", c.output_dir);
    validate(c);
    return c;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config schema violation: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Class labels

/// Expands "gA..gB" ranges; other labels pass through.
inline std::vector<std::string> expand_class_list(const std::vector<std::string>& in) {
  std::vector<std::string> out;
  for (const auto& s : in) {
    const auto dots = s.find("..");
    if (dots == std::string::npos) {
      out.push_back(s);
      continue;
    }
    const std::string a = s.substr(0, dots), b = s.substr(dots + 2);
    if (a.size() < 2 || b.size() < 2 || a[0] != 'g' || b[0] != 'g') throw ConfigError("bad class range '" + s + "'");
    int lo = 0, hi = 0;
    try {
      lo = std::stoi(a.substr(1));
      hi = std::stoi(b.substr(1));
    } catch (const std::exception&) {
      throw ConfigError("bad class range '" + s + "'");
    }
    if (lo < 1 || hi > 8 || lo > hi) throw ConfigError("class range must lie within g1..g8");
    for (int k = lo; k <= hi; ++k) out.push_back("g" + std::to_string(k));
  }
  return out;
}

inline TorusClass parse_torus_class(const std::string& s) {
  std::string t;
  for (char ch : s)
    if (ch != '(' && ch != ')' && ch != ' ') t += ch;
  const auto comma = t.find(',');
  if (comma == std::string::npos) throw ConfigError("torus class must look like m,n: '" + s + "'");
  try {
    return {std::stoi(t.substr(0, comma)), std::stoi(t.substr(comma + 1))};
  } catch (const std::exception&) {
    throw ConfigError("torus class must look like m,n: '" + s + "'");
  }
}

// ---------------------------------------------------------------------------
// Systems and tolerances

inline TorusSystem torus_system(const ExperimentConfig& c) {
  return TorusSystem(detail::trig_from_json(c.torus_lambda, "torus.lambda"),
                     detail::trig_from_json(c.torus_kappa, "torus.kappa"));
}

inline BolzaSystem bolza_system(const ExperimentConfig& c) {
  return BolzaSystem(c.kappa_mean, detail::bumps_from_json(c.kappa_bumps));
}

struct Tolerances {
  double structural, pestov, identity, inequality;
};

inline Tolerances tolerances_for(const std::string& backend) {
  if (backend == "flat-torus") return {1e-10, 1e-9, 1e-10, 1e-10};
  if (backend == "torus") return {1e-8, 1e-8, 1e-8, 1e-8};
  return {1e-6, 1e-5, 1e-5, 1e-5};
}

// ---------------------------------------------------------------------------
// Batteries

struct RunResult {
  std::vector<ResultRow> rows;
  std::map<std::string, CsvTable> tables;  // file name -> table

  bool failed() const {
    return std::any_of(rows.begin(), rows.end(), [](const ResultRow& r) { return r.failed(); });
  }
  void append(RunResult other) {
    rows.insert(rows.end(), other.rows.begin(), other.rows.end());
    for (auto& [k, t] : other.tables) tables[k] = std::move(t);
  }
};

namespace detail {

struct Negativity {
  NegativityBounds bounds;
  bool ok() const { return bounds.certified; }
};

template <class Space>
std::vector<FunctionOf<Space>> make_battery(const Space& s, const ExperimentConfig& c, int size, int stream) {
  BatteryOptions opt;
  opt.max_degree = c.max_degree;
  std::vector<FunctionOf<Space>> out;
  for (int i = 0; i < size; ++i) {
    const std::uint64_t seed = member_seed(c.seed + static_cast<std::uint64_t>(stream) * 0x9e3779b97f4a7c15ull, i);
    if constexpr (std::is_same_v<Space, TorusSpace>)
      out.push_back(random_torus_function(s, seed, opt));
    else
      out.push_back(random_bolza_function(s, seed, opt));
  }
  return out;
}

template <class Space>
void structural_battery(const Space& s, const ExperimentConfig& c, const Tolerances& tol, RunResult& out) {
  const auto fns = make_battery(s, c, c.structural_size, 1);
  for (std::size_t i = 0; i < fns.size(); ++i)
    for (const auto& r : structural_residuals(s, fns[i], tol.structural))
      out.rows.push_back(row_from("structural", r, static_cast<int>(i)));
}

// Quadrature convergence on the Bolza surface: the operators are exact
// pointwise, so refinement is shown on the skew-adjointness defect of F.
inline void bolza_refinement_rows(const ExperimentConfig& c, const Tolerances& tol, RunResult& out) {
  std::mt19937_64 rng(c.seed);
  const AtomSeries a = random_atom_series(rng, 2, BatteryOptions{});
  CsvTable t;
  t.header = {"panels", "nodes", "skew_defect"};
  double prev = std::numeric_limits<double>::infinity();
  bool monotone = true;
  double last = 0.0;
  for (int panels : {1, 2, 4}) {
    const BolzaSpace s = BolzaSpace::with_quadrature(bolza_system(c), panels, 6);
    const auto u = s.sample(a);
    const auto fu = apply_F(s, u);
    const double defect =
        std::abs(inner_product(s, fu, u) + inner_product(s, u, fu)) / std::sqrt(norm_sq(s, fu) * norm_sq(s, u));
    monotone = monotone && defect < prev;
    prev = last = defect;
    t.rows.push_back({std::to_string(panels), std::to_string(s.points()->size()), format_double(defect)});
  }
  ResultRow row;
  row.battery = "structural";
  row.check = "quadrature refinement";
  row.anchor = "skew-adjointness of F under octagon refinement";
  row.backend = "bolza";
  row.resolution = "panels=1,2,4";
  row.residual = last;
  row.tolerance = tol.structural;
  row.status = monotone && last <= tol.structural ? RowStatus::Pass : RowStatus::Fail;
  out.rows.push_back(row);
  out.tables["structural_refinement.csv"] = t;
}

template <class Space>
void pestov_battery(const Space& s, const ExperimentConfig& c, const Tolerances& tol, RunResult& out) {
  const auto fns = make_battery(s, c, c.battery_size, 2);
  for (std::size_t i = 0; i < fns.size(); ++i) {
    out.rows.push_back(row_from("pestov", pestov_residual(s, fns[i], tol.pestov), static_cast<int>(i)));
    out.rows.push_back(row_from("pestov", pestov_corollary_residual(s, fns[i], tol.pestov), static_cast<int>(i)));
  }
}

template <class Space>
void mode_battery(const Space& s, const ExperimentConfig& c, const Tolerances& tol, RunResult& out) {
  const int size = std::max(1, c.battery_size / 5);
  const auto fns = make_battery(s, c, size, 3);
  for (std::size_t i = 0; i < fns.size(); ++i)
    for (const auto& [k, f] : fns[i].modes()) {
      if (k == 0) continue;
      for (const auto& r : mode_identity_residual(s, FunctionOf<Space>(k, f), tol.identity))
        out.rows.push_back(row_from("mode", r, static_cast<int>(i)));
    }
}

inline void riccati_battery(const BolzaSpace& s, const ExperimentConfig& c, const Negativity& neg,
                            const Tolerances& tol, RunResult& out) {
  const auto& info = battery_info("riccati");
  if (!neg.ok()) {
    out.rows.push_back(skipped_row("riccati", info.anchor, "bolza", "negativity not certified: " + neg.bounds.reason));
    return;
  }
  const BolzaSystem sys = bolza_system(c);
  const bool constant = sys.kappa_is_constant();
  const double root = std::sqrt(1 - c.kappa_mean * c.kappa_mean);
  CsvTable t;
  t.header = {"class", "branch", "min_r", "max_r", "periodicity_defect", "periods"};
  for (const std::string cls : {"g1", "g1g2"}) {
    const auto orbit = find_periodic_orbit(sys, cls);
    const auto plus = riccati_solve(sys, orbit, RiccatiBranch::Plus);
    const auto minus = riccati_solve(sys, orbit, RiccatiBranch::Minus);
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < plus.values.size(); ++i) gap = std::min(gap, plus.values[i] - minus.values[i]);
    for (const auto* sol : {&plus, &minus}) {
      const auto [lo, hi] = std::minmax_element(sol->values.begin(), sol->values.end());
      t.rows.push_back({cls, to_string(sol->branch), format_double(*lo), format_double(*hi),
                        format_double(sol->periodicity_defect), std::to_string(sol->periods)});
      ResultRow row;
      row.battery = "riccati";
      row.check = "periodic " + to_string(sol->branch) + " branch on " + cls;
      row.anchor = info.anchor;
      row.backend = "bolza";
      row.details = {{"min_r", *lo}, {"max_r", *hi}, {"periodicity_defect", sol->periodicity_defect}};
      if (constant) {
        const double target = sol->branch == RiccatiBranch::Plus ? root : -root;
        row.residual = std::max(std::abs(*lo - target), std::abs(*hi - target));
        row.tolerance = 1e-8;
        row.note = "constant field: r = +-sqrt(1 - kappa^2)";
      } else {
        // The minus branch repels forward, so sampling it amplifies integrator error.
        row.residual = sol->periodicity_defect;
        row.tolerance = 1e-8;
      }
      row.status = row.residual <= row.tolerance ? RowStatus::Pass : RowStatus::Fail;
      out.rows.push_back(row);
    }
    ResultRow sep;
    sep.battery = "riccati";
    sep.check = "branch separation on " + cls;
    sep.anchor = info.anchor;
    sep.backend = "bolza";
    sep.left = 2 * std::sqrt(2 * neg.bounds.a);
    sep.right = gap;
    sep.residual = std::max(0.0, sep.left * (1 - 1e-6) - gap);
    sep.status = gap >= sep.left * (1 - 1e-6) ? RowStatus::Pass : RowStatus::Fail;
    out.rows.push_back(sep);
  }
  out.tables["riccati.csv"] = t;
  if (!constant) {
    out.rows.push_back(skipped_row("riccati", info.anchor, "bolza",
                                   "norm identity needs r as a phase function; available for constant fields only"));
    return;
  }
  const auto r_field = BolzaSpace::Function(0, s.constant(root));
  const auto fns = make_battery(s, c, c.battery_size, 4);
  for (std::size_t i = 0; i < fns.size(); ++i) {
    auto row = row_from("riccati", riccati_norm_identity(s, fns[i], r_field, tol.identity), static_cast<int>(i));
    if (row.details.at("left_nonnegative") != 1.0) {
      row.status = RowStatus::Fail;
      row.note = "left side negative";
    }
    out.rows.push_back(row);
  }
}

inline void ladder_battery(const BolzaSpace& s, const ExperimentConfig& c, const Negativity& neg,
                           const Tolerances& tol, RunResult& out) {
  if (!neg.ok()) {
    out.rows.push_back(skipped_row("ladder", battery_info("ladder").anchor, "bolza", neg.bounds.reason));
    return;
  }
  const auto fns = make_battery(s, c, std::max(1, c.battery_size / 5), 5);
  for (std::size_t i = 0; i < fns.size(); ++i)
    for (int k : {1, 2, -1, -2})
      for (auto r : gk_inequalities(s, fns[i], k, neg.bounds.a, neg.bounds.b, tol.inequality)) {
        auto row = row_from("ladder", r, static_cast<int>(i));
        if (r.name == "gk2_upper" && r.details.at("triangle_step2_slack") < -tol.inequality * std::max(r.right, 1.0)) {
          row.status = RowStatus::Fail;
          row.note = "triangle step slack negative";
        }
        out.rows.push_back(row);
      }
}

inline void carleman_battery(const BolzaSpace& s, const ExperimentConfig& c, const Negativity& neg, RunResult& out) {
  const auto& info = battery_info("carleman");
  const CarlemanWeights w = make_weights(c.sigma, c.k_max);
  const auto cert = w.certify();
  ResultRow wr;
  wr.battery = "carleman";
  wr.check = "weight recurrences";
  wr.anchor = info.anchor;
  wr.backend = "bolza";
  wr.resolution = "k_max=" + std::to_string(c.k_max);
  wr.details = {{"sigma", c.sigma}, {"min_two_step_gap", cert.min_two_step_gap}, {"min_linear_gap", cert.min_linear_gap}};
  wr.status = cert.all() ? RowStatus::Pass : RowStatus::Fail;
  out.rows.push_back(wr);
  if (!neg.ok()) {
    out.rows.push_back(skipped_row("carleman", info.anchor, "bolza", neg.bounds.reason));
    return;
  }
  const auto fns = make_battery(s, c, c.battery_size, 6);
  CsvTable t;
  t.header = {"member", "N", "log_left", "log_right", "ratio", "engine_certified"};
  for (std::size_t i = 0; i < fns.size(); ++i) {
    const ModeData d = harvest_mode_data(s, fns[i]);
    for (int n : {c.carleman_n, c.carleman_n + 1}) {
      IdentityReport direct = carleman_from_modes(d, w, n, neg.bounds.a);
      stamp(direct, s);
      const auto engine = weighted_summation_engine(d, w, n, neg.bounds.a);
      auto row = row_from("carleman", direct, static_cast<int>(i));
      row.check = "carleman N=" + std::to_string(n);
      row.details["engine_certified"] = engine.back().details.at("engine_certified");
      const bool agree = (engine.back().details.at("engine_certified") == 1.0) == direct.pass;
      if (!agree) {
        row.status = RowStatus::Fail;
        row.note = "engine verdict differs";
      }
      out.rows.push_back(row);
      t.rows.push_back({std::to_string(i), std::to_string(n), format_double(direct.details.at("log_left")),
                        format_double(direct.details.at("log_right")), format_double(direct.details.at("ratio")),
                        format_double(row.details["engine_certified"])});
    }
  }
  out.tables["carleman.csv"] = t;
}

inline void degree_battery(const BolzaSpace& s, const ExperimentConfig& c, const Negativity& neg, RunResult& out) {
  if (!neg.ok()) {
    out.rows.push_back(skipped_row("degree", battery_info("degree").anchor, "bolza", neg.bounds.reason));
    return;
  }
  const CarlemanWeights w = make_weights(c.sigma, c.k_max);
  const auto fns = make_battery(s, c, std::max(1, c.battery_size / 5), 7);
  for (std::size_t i = 0; i < fns.size(); ++i)
    out.rows.push_back(row_from("degree", degree_reduction_check(s, fns[i], w, neg.bounds.a), static_cast<int>(i)));
}

inline void contraction_battery(const BolzaSpace& s, const ExperimentConfig& c, const Negativity& neg, RunResult& out) {
  if (!neg.ok()) {
    out.rows.push_back(skipped_row("contraction", battery_info("contraction").anchor, "bolza", neg.bounds.reason));
    return;
  }
  const double sigma = std::max(c.sigma, contraction_sigma(neg.bounds.a, neg.bounds.b));
  const auto fns = make_battery(s, c, std::max(1, c.battery_size / 5), 8);
  for (std::size_t i = 0; i < fns.size(); ++i) {
    auto row = row_from("contraction", contraction_chain(s, fns[i], neg.bounds.a, neg.bounds.b, sigma, c.carleman_n),
                        static_cast<int>(i));
    out.rows.push_back(row);
  }
}

}  // namespace detail

/// Magnetic length spectrum with oracles and monodromy.
RunResult run_spectrum(const ExperimentConfig& c);
/// Deformation study for the configured family.
RunResult run_deform(const ExperimentConfig& c);

inline RunResult run_verify(const ExperimentConfig& c) {
  validate(c);
  RunResult out;
  const Tolerances tol = tolerances_for(c.backend);
  std::set<std::string> sel(c.batteries.begin(), c.batteries.end());
  auto on = [&](const char* b) { return sel.count(b) != 0; };
  if (c.backend == "bolza") {
    const BolzaSystem sys = bolza_system(c);
    const BolzaSpace s = BolzaSpace::with_quadrature(sys, c.panels, c.gauss);
    const bool needs_neg = on("riccati") || on("ladder") || on("carleman") || on("degree") || on("contraction");
    detail::Negativity neg;
    if (needs_neg) neg.bounds = negativity_bounds(sys, c.negativity_resolution);
    if (on("structural")) {
      const BolzaSpace coarse(sys, octagon_quadrature(1, 4));
      detail::structural_battery(coarse, c, tol, out);
      detail::bolza_refinement_rows(c, tol, out);
    }
    if (on("pestov")) detail::pestov_battery(s, c, tol, out);
    if (on("riccati")) detail::riccati_battery(s, c, neg, tol, out);
    if (on("mode")) detail::mode_battery(s, c, tol, out);
    if (on("ladder")) detail::ladder_battery(s, c, neg, tol, out);
    if (on("carleman")) detail::carleman_battery(s, c, neg, out);
    if (on("degree")) detail::degree_battery(s, c, neg, out);
    if (on("contraction")) detail::contraction_battery(s, c, neg, out);
  } else {
    const TorusSystem sys = torus_system(c);
    const TorusSpace s(sys, c.resolution);
    if (on("structural")) detail::structural_battery(s, c, tol, out);
    if (on("pestov")) detail::pestov_battery(s, c, tol, out);
    if (on("mode")) detail::mode_battery(s, c, tol, out);
    for (const char* b : {"riccati", "ladder", "carleman", "degree", "contraction"})
      if (on(b))
        out.rows.push_back(skipped_row(b, battery_info(b).anchor, c.backend,
                                       "magnetic curvature has positive average on a torus; no negativity bounds"));
  }
  if (on("spectrum") || on("monodromy")) out.append(run_spectrum(c));
  if (on("livsic") || on("jacobi")) out.append(run_deform(c));
  out.tables["summary.csv"] = summary_table(out.rows);
  return out;
}

// ---------------------------------------------------------------------------
// Spectrum

inline RunResult run_spectrum(const ExperimentConfig& c) {
  validate(c);
  RunResult out;
  CsvTable t;
  t.header = {"class_key", "kappa", "period", "closure_defect", "monodromy_trace", "oracle", "status"};
  const auto classes = expand_class_list(c.classes);
  auto spectrum_row = [&](const std::string& key, double kappa, const PeriodicOrbit* o, const Monodromy* m,
                          double oracle, double tol, const std::string& err) {
    ResultRow row;
    row.battery = "spectrum";
    row.check = "length of " + key;
    row.anchor = battery_info("spectrum").anchor;
    row.backend = c.backend;
    row.resolution = "kappa=" + format_double(kappa);
    if (!o) {
      row.status = RowStatus::Fail;
      row.note = err;
      t.rows.push_back({key, format_double(kappa), "", "", "", format_double(oracle), "fail"});
      out.rows.push_back(row);
      return;
    }
    row.left = o->period;
    row.right = oracle;
    row.tolerance = tol;
    row.residual = std::isfinite(oracle) ? std::abs(o->period - oracle) / oracle : 0.0;
    row.details = {{"closure_defect", o->closure_defect}};
    row.status = (!std::isfinite(oracle) || row.residual <= tol) && o->closure_defect <= 1e-9 ? RowStatus::Pass
                                                                                              : RowStatus::Fail;
    if (!std::isfinite(oracle)) row.note = "no closed-form oracle";
    t.rows.push_back({key, format_double(kappa), format_double(o->period), format_double(o->closure_defect),
                      format_double(m->trace), format_double(oracle), to_string(row.status)});
    out.rows.push_back(row);
  };
  auto monodromy_row = [&](const std::string& key, double kappa, const PeriodicOrbit& o, const Monodromy& m,
                           bool negative, std::optional<double> expected_rate) {
    ResultRow row;
    row.battery = "monodromy";
    row.check = "monodromy of " + key;
    row.anchor = battery_info("monodromy").anchor;
    row.backend = c.backend;
    row.resolution = "kappa=" + format_double(kappa);
    row.details = {{"trace", m.trace}, {"determinant", m.determinant}, {"eig_large", m.eigenvalue_large.real()}};
    bool ok = std::abs(m.determinant - 1) <= 1e-8;
    row.residual = std::abs(m.determinant - 1);
    row.tolerance = 1e-8;
    if (negative) ok = ok && m.hyperbolic();
    if (expected_rate) {
      const double expect = std::exp(o.period * *expected_rate);
      const double rel = std::abs(m.eigenvalue_large.real() - expect) / expect;
      row.details["eig_expected"] = expect;
      row.details["eig_rel_error"] = rel;
      ok = ok && rel <= 1e-5;
    }
    row.status = ok ? RowStatus::Pass : RowStatus::Fail;
    out.rows.push_back(row);
  };
  if (c.backend == "bolza") {
    const BolzaSystem base = bolza_system(c);
    const bool constant = base.kappa_is_constant();
    // Constant fields run the whole kappa grid; variable fields run the configured system only.
    const std::vector<double> kappas = constant ? c.kappas : std::vector<double>{c.kappa_mean};
    for (double kappa : kappas) {
      const BolzaSystem sys = constant ? BolzaSystem(kappa) : base;
      const bool negative = constant || negativity_bounds(sys, c.negativity_resolution).certified;
      for (const auto& key : classes) {
        double oracle = std::numeric_limits<double>::quiet_NaN();
        if (constant) oracle = translation_length(sys.group().element(GroupWord::parse(key))) / std::sqrt(1 - kappa * kappa);
        try {
          const auto o = find_periodic_orbit(sys, key);
          const auto m = monodromy(sys, o);
          spectrum_row(key, kappa, &o, &m, oracle, 1e-6, "");
          monodromy_row(key, kappa, o, m, negative,
                        constant ? std::optional<double>(std::sqrt(1 - kappa * kappa)) : std::nullopt);
        } catch (const std::exception& e) {
          spectrum_row(key, kappa, nullptr, nullptr, oracle, 1e-6, e.what());
        }
      }
    }
  } else {
    const TorusSystem sys = torus_system(c);
    for (const auto& label : classes) {
      const TorusClass cls = parse_torus_class(label);
      double oracle = std::numeric_limits<double>::quiet_NaN();
      if (sys.is_flat() && sys.kappa().is_zero()) oracle = 2 * std::numbers::pi * std::hypot(cls.m, cls.n);
      try {
        const auto o = find_periodic_orbit(sys, cls);
        const auto m = monodromy(sys, o);
        spectrum_row(o.class_key, 0.0, &o, &m, oracle, 1e-9, "");
        monodromy_row(o.class_key, 0.0, o, m, false, std::nullopt);
      } catch (const std::exception& e) {
        spectrum_row(TorusClass::canonical(cls.m, cls.n).key(), 0.0, nullptr, nullptr, oracle, 1e-9, e.what());
      }
    }
  }
  out.tables["spectrum.csv"] = t;
  out.tables["summary.csv"] = summary_table(out.rows);
  return out;
}

// ---------------------------------------------------------------------------
// Deformation

namespace detail {

inline TorusFamily torus_family(const ExperimentConfig& c) {
  const TorusSystem sys = torus_system(c);
  if (c.family.kind == "translation") return translation_pullback_family(sys, c.family.ax, c.family.ay);
  if (c.family.kind == "conformal") return conformal_family(sys, trig_from_json(c.family.phi, "family.phi"));
  if (c.family.kind == "constant") return constant_family(sys);
  return kappa_perturbation_family(sys, TrigPoly::constant(c.family.c));
}

inline BolzaFamily bolza_family(const ExperimentConfig& c) {
  const BolzaSystem sys = bolza_system(c);
  if (c.family.kind == "constant") return constant_family(sys);
  if (c.family.kind == "kappa-shift") return kappa_shift_family(sys, c.family.c);
  throw ConfigError("family '" + c.family.kind + "' is not available on the Bolza backend (its metric is rigid)");
}

template <class Family>
void jacobi_rows(const Family& fam, const PeriodicOrbit& o, const ExperimentConfig& c, RunResult& out,
                 CsvTable& t) {
  const auto& info = battery_info("jacobi");
  if (!fam.fixed_metric) {
    out.rows.push_back(skipped_row("jacobi", info.anchor, c.backend, "family varies the metric"));
    return;
  }
  double prev = std::numeric_limits<double>::quiet_NaN();
  for (double h : {2 * c.family.h_s, c.family.h_s, c.family.h_s / 2}) {
    const auto v = variational_field(fam, o, h);
    const auto r = jacobi_residual(v, 1e-4);
    ResultRow row;
    row.battery = "jacobi";
    row.check = "jacobi residual on " + o.class_key;
    row.anchor = info.anchor;
    row.backend = c.backend;
    row.resolution = "h_s=" + format_double(h);
    row.residual = std::max(r.jacobi_residual, r.transport_residual);
    row.tolerance = 1e-4;
    row.details = {{"jacobi", r.jacobi_residual}, {"transport", r.transport_residual}, {"period_rate", v.period_rate}};
    if (std::isfinite(prev) && r.jacobi_residual > 0) row.details["order"] = std::log2(prev / r.jacobi_residual);
    prev = r.jacobi_residual;
    row.status = (h > c.family.h_s || r.pass) ? RowStatus::Pass : RowStatus::Fail;
    out.rows.push_back(row);
    t.rows.push_back({o.class_key, format_double(h), format_double(r.jacobi_residual),
                      format_double(r.transport_residual)});
  }
}

}  // namespace detail

inline RunResult run_deform(const ExperimentConfig& c) {
  validate(c);
  RunResult out;
  CsvTable lengths, jac;
  lengths.header = {"class_key", "s", "period", "closure_defect"};
  jac.header = {"class_key", "h_s", "jacobi_residual", "transport_residual"};
  const auto classes = expand_class_list(c.classes);
  const std::size_t n_classes = std::min<std::size_t>(classes.size(), 3);
  auto length_rows = [&](const auto& fam, const PeriodicOrbit& o, bool isospectral) {
    const auto ls = length_function(fam, o, c.family.s_grid);
    for (const auto& l : ls)
      lengths.rows.push_back({o.class_key, format_double(l.s), format_double(l.period), format_double(l.closure_defect)});
    const double var = length_variation(ls, o.period);
    const auto lv = livsic_integral_check(fam, o, isospectral);
    ResultRow row;
    row.battery = "livsic";
    row.check = "orbit integral of beta on " + o.class_key;
    row.anchor = battery_info("livsic").anchor;
    row.backend = c.backend;
    row.resolution = fam.name;
    row.left = lv.integral;
    row.right = 0.0;
    row.residual = std::abs(lv.integral) / o.period;
    row.tolerance = 1e-8;
    row.details = {{"length_variation", var}, {"length", o.period}};
    if (isospectral) {
      row.status = var <= 1e-8 && lv.pass ? RowStatus::Pass : RowStatus::Fail;
    } else {
      row.status = RowStatus::Pass;
      row.note = "family not isospectral; integral reported without a vanishing assertion";
    }
    out.rows.push_back(row);
  };
  if (c.backend == "bolza") {
    const auto fam = detail::bolza_family(c);
    for (std::size_t i = 0; i < n_classes; ++i) {
      const auto o = find_periodic_orbit(fam.base(), classes[i]);
      length_rows(fam, o, fam.name == "constant");
      detail::jacobi_rows(fam, o, c, out, jac);
    }
  } else {
    const auto fam = detail::torus_family(c);
    const bool isospectral = fam.name == "translation-pullback" || fam.name == "constant";
    for (std::size_t i = 0; i < n_classes; ++i) {
      const auto o = find_periodic_orbit(fam.base(), parse_torus_class(classes[i]));
      length_rows(fam, o, isospectral);
      detail::jacobi_rows(fam, o, c, out, jac);
    }
  }
  out.tables["lengths.csv"] = lengths;
  out.tables["jacobi.csv"] = jac;
  out.tables["summary.csv"] = summary_table(out.rows);
  return out;
}

// ---------------------------------------------------------------------------
// Carleman sweep

inline RunResult run_carleman_sweep(const ExperimentConfig& c) {
  validate(c);
  RunResult out;
  CsvTable w;
  w.header = {"sigma", "k", "log_gamma_sq", "two_step_gap", "linear_gap"};
  CsvTable est;
  est.header = {"sigma", "member", "N", "ratio", "engine_certified"};
  std::optional<BolzaSpace> space;
  detail::Negativity neg;
  std::vector<BolzaSpace::Function> fns;
  if (c.backend == "bolza") {
    const BolzaSystem sys = bolza_system(c);
    neg.bounds = negativity_bounds(sys, c.negativity_resolution);
    if (neg.ok()) {
      space.emplace(BolzaSpace::with_quadrature(sys, c.panels, c.gauss));
      fns = detail::make_battery(*space, c, std::max(1, c.battery_size / 5), 9);
    }
  }
  for (double sigma : c.sigmas) {
    const CarlemanWeights weights = make_weights(sigma, c.k_max);
    const auto cert = weights.certify();
    for (int k = 0; k <= c.k_max; ++k) {
      const double g2 = k >= 3 ? weights.log_at(k) - std::log(4.0) - weights.log_at(k - 2) : 0.0;
      const double g1 = k >= 2 ? weights.log_at(k) - std::log(8.0 * k) - weights.log_at(k - 1) : 0.0;
      w.rows.push_back({format_double(sigma), std::to_string(k), format_double(weights.log_at(k)), format_double(g2),
                        format_double(g1)});
    }
    ResultRow row;
    row.battery = "carleman";
    row.check = "weight recurrences sigma=" + format_double(sigma);
    row.anchor = battery_info("carleman").anchor;
    row.backend = c.backend;
    row.resolution = "k_max=" + std::to_string(c.k_max);
    row.details = {{"min_two_step_gap", cert.min_two_step_gap}, {"min_linear_gap", cert.min_linear_gap},
                   {"finite", cert.finite ? 1.0 : 0.0}};
    row.status = cert.all() ? RowStatus::Pass : RowStatus::Fail;
    out.rows.push_back(row);
    for (std::size_t i = 0; i < fns.size(); ++i) {
      const ModeData d = harvest_mode_data(*space, fns[i]);
      IdentityReport r = carleman_from_modes(d, weights, c.carleman_n, neg.bounds.a);
      stamp(r, *space);
      const auto engine = weighted_summation_engine(d, weights, c.carleman_n, neg.bounds.a);
      auto er = row_from("carleman", r, static_cast<int>(i));
      er.check = "carleman sigma=" + format_double(sigma);
      if ((engine.back().details.at("engine_certified") == 1.0) != r.pass) {
        er.status = RowStatus::Fail;
        er.note = "engine verdict differs";
      }
      out.rows.push_back(er);
      est.rows.push_back({format_double(sigma), std::to_string(i), std::to_string(c.carleman_n),
                          format_double(r.details.at("ratio")), format_double(engine.back().details.at("engine_certified"))});
    }
  }
  if (c.backend == "bolza" && !neg.ok())
    out.rows.push_back(skipped_row("carleman", battery_info("carleman").anchor, c.backend, neg.bounds.reason));
  out.tables["weights.csv"] = w;
  out.tables["carleman_sweep.csv"] = est;
  out.tables["summary.csv"] = summary_table(out.rows);
  return out;
}

// ---------------------------------------------------------------------------
// Writing reports

inline std::string report_json(const std::string& command, const ExperimentConfig& c, const RunResult& r) {
  Json j;
  j["command"] = command;
  j["config"] = to_json(c);
  Json rows = Json::array();
  for (const auto& row : r.rows) rows.push_back(to_json(row));
  j["results"] = rows;
  std::size_t fails = 0, skipped = 0;
  for (const auto& row : r.rows) {
    fails += row.status == RowStatus::Fail;
    skipped += row.status == RowStatus::Skipped;
  }
  j["totals"] = {{"rows", r.rows.size()}, {"failed", fails}, {"skipped", skipped}};
  j["pass"] = fails == 0;
  return j.dump(2) + "\n";
}

/// Next unused run directory <out>/<command>/run-NNN; earlier runs are never touched.
inline std::filesystem::path next_run_dir(const std::string& out, const std::string& command) {
  const std::filesystem::path base = std::filesystem::path(out) / command;
  for (int i = 1;; ++i) {
    char name[16];
    std::snprintf(name, sizeof name, "run-%03d", i);
    if (!std::filesystem::exists(base / name)) return base / name;
  }
}

/// Writes report.json, the CSV tables and manifest.json into a fresh run directory.
inline std::vector<std::string> write_reports(const std::string& command, const ExperimentConfig& c,
                                              const RunResult& r) {
  const std::filesystem::path dir = next_run_dir(c.output_dir, command);
  std::vector<std::string> files = {"report.json"};
  write_text(dir / "report.json", report_json(command, c, r));
  for (const auto& [name, table] : r.tables) {
    write_text(dir / name, table.str());
    files.push_back(name);
  }
  write_text(dir / "manifest.json", manifest(command, to_json(c), files).dump(2) + "\n");
  files.push_back("manifest.json");
  for (auto& f : files) f = (dir / f).string();
  return files;
}

}  // namespace maglab
