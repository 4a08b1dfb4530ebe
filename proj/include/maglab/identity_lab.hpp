#pragma once

// Verifiers for the energy identities and inequalities on SM: structural
// equations, Pestov, the Riccati machinery, the mode identity, the ladder
// inequalities, and the weighted (Carleman) estimate with factorial weights.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "maglab/fiber_fourier.hpp"
#include "maglab/frame_operators.hpp"
#include "maglab/periodic_orbits.hpp"

namespace maglab {

struct IdentityReport {
  std::string name;
  std::string anchor;  // which statement the check renders
  std::string backend;
  std::string resolution;
  double left = 0.0;
  double right = 0.0;
  double abs_residual = 0.0;
  double rel_residual = 0.0;
  bool relative = true;
  double tolerance = 0.0;
  bool pass = false;
  std::map<std::string, double> details;

  double residual() const { return relative ? rel_residual : abs_residual; }
};

/// Compares two sides; relative when |right| > 1e-8 * scale, else absolute.
inline IdentityReport compare_sides(std::string name, double left, double right, double scale, double tol) {
  IdentityReport r;
  r.name = std::move(name);
  r.left = left;
  r.right = right;
  r.abs_residual = std::abs(left - right);
  scale = std::max(scale, 0.0);
  r.relative = std::abs(right) > 1e-8 * scale && std::abs(right) > 0;
  r.rel_residual = r.relative ? r.abs_residual / std::abs(right) : r.abs_residual;
  r.tolerance = tol;
  r.pass = r.residual() <= tol;
  return r;
}

/// An inequality left <= right, with slack tol relative to max(|left|, |right|).
inline IdentityReport compare_le(std::string name, double left, double right, double tol) {
  IdentityReport r;
  r.name = std::move(name);
  r.left = left;
  r.right = right;
  r.abs_residual = std::max(0.0, left - right);
  const double scale = std::max(std::abs(left), std::abs(right));
  r.rel_residual = scale > 0 ? r.abs_residual / scale : 0.0;
  r.tolerance = tol;
  r.pass = left <= right + tol * scale;
  r.details["margin"] = right - left;
  return r;
}

template <class Space>
void stamp(IdentityReport& r, const Space& s) {
  r.backend = s.backend();
  if constexpr (requires { s.resolution_label(); })
    r.resolution = s.resolution_label();
  else
    r.resolution = "n=" + std::to_string(s.resolution());
}

// ---------------------------------------------------------------------------
// Structural equations

/// Norm used to scale operator residuals: L2 norms of u and its first and
/// second frame derivatives.
template <class Space>
double c2_proxy(const Space& s, const FunctionOf<Space>& u) {
  const auto xu = apply_X(s, u), pu = apply_Xperp(s, u), vu = apply_V(s, u);
  double acc = norm_sq(s, u) + norm_sq(s, xu) + norm_sq(s, pu) + norm_sq(s, vu);
  acc += norm_sq(s, apply_X(s, xu)) + norm_sq(s, apply_Xperp(s, pu)) + norm_sq(s, apply_V(s, vu));
  return std::sqrt(acc);
}

/// ||([V,F] - X^perp) u||, ||([V,X^perp] + F - kappa V) u||, ||([F,X^perp] + kappa F - KK V) u||,
/// each divided by the C2 proxy of u.
template <class Space>
std::vector<IdentityReport> structural_residuals(const Space& s, const FunctionOf<Space>& u, double tol) {
  auto F = [&](const auto& w) { return apply_F(s, w); };
  auto P = [&](const auto& w) { return apply_Xperp(s, w); };
  auto V = [&](const auto& w) { return apply_V(s, w); };
  const auto kk = magnetic_curvature_function(s);
  const double scale = c2_proxy(s, u);
  const auto r1 = V(F(u)) - F(V(u)) - P(u);
  const auto r2 = V(P(u)) - P(V(u)) + F(u) - multiply_base(s, s.kappa(), V(u));
  const auto r3 = F(P(u)) - P(F(u)) + multiply_base(s, s.kappa(), F(u)) - multiply(s, kk, V(u));
  std::vector<IdentityReport> out;
  const char* names[] = {"[V,F] = Xperp", "[V,Xperp] = -F + kappa V", "[F,Xperp] = -kappa F + KK V"};
  const FunctionOf<Space>* res[] = {&r1, &r2, &r3};
  for (int i = 0; i < 3; ++i) {
    IdentityReport r;
    r.name = names[i];
    r.anchor = "magnetic structural equations";
    r.left = std::sqrt(std::max(0.0, norm_sq(s, *res[i])));
    r.right = 0.0;
    r.abs_residual = r.left;
    r.rel_residual = scale > 0 ? r.left / scale : r.left;
    r.relative = scale > 0;
    r.tolerance = tol;
    r.pass = r.residual() <= tol;
    r.details["c2_proxy"] = scale;
    stamp(r, s);
    out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pestov

/// ||FVu||^2 - (KK Vu, Vu) + ||Fu||^2 = ||VFu||^2.
template <class Space>
IdentityReport pestov_residual(const Space& s, const FunctionOf<Space>& u, double tol) {
  const auto vu = apply_V(s, u), fu = apply_F(s, u);
  const auto kk = magnetic_curvature_function(s);
  const double fvu = norm_sq(s, apply_F(s, vu));
  const double kterm = inner_product(s, multiply(s, kk, vu), vu).real();
  const double fu2 = norm_sq(s, fu);
  const double vfu = norm_sq(s, apply_V(s, fu));
  const double scale = std::abs(fvu) + std::abs(kterm) + std::abs(fu2) + std::abs(vfu);
  IdentityReport r = compare_sides("pestov", fvu - kterm + fu2, vfu, scale, tol);
  r.anchor = "Pestov energy identity";
  r.details = {{"FVu", fvu}, {"KVuVu", kterm}, {"Fu", fu2}, {"VFu", vfu}};
  stamp(r, s);
  return r;
}

/// 2 Re(X^perp u, VFu) = ||Fu||^2 + ||X^perp u||^2 - (KK Vu, Vu).
template <class Space>
IdentityReport pestov_corollary_residual(const Space& s, const FunctionOf<Space>& u, double tol) {
  const auto vu = apply_V(s, u), fu = apply_F(s, u), pu = apply_Xperp(s, u);
  const auto kk = magnetic_curvature_function(s);
  const auto vfu = apply_V(s, fu);
  const double left = 2 * inner_product(s, pu, vfu).real();
  const double fu2 = norm_sq(s, fu), pu2 = norm_sq(s, pu);
  const double kterm = inner_product(s, multiply(s, kk, vu), vu).real();
  const double scale = std::abs(left) + fu2 + pu2 + std::abs(kterm);
  IdentityReport r = compare_sides("pestov_corollary", left, fu2 + pu2 - kterm, scale, tol);
  r.anchor = "Pestov identity, cross term form";
  r.details = {{"Fu", fu2}, {"Xperp_u", pu2}, {"KVuVu", kterm}};
  // Algebraic cross-check: with VFu = FVu + X^perp u the two forms differ by
  // ||VFu||^2 - ||FVu||^2 - ||X^perp u||^2 - 2 Re(X^perp u, FVu) = 0.
  const auto fvu = apply_F(s, vu);
  const double gap = norm_sq(s, vfu) - norm_sq(s, fvu) - pu2 - 2 * inner_product(s, pu, fvu).real();
  r.details["rearrangement_gap"] = std::abs(gap) / std::max(scale, 1e-300);
  stamp(r, s);
  return r;
}

// ---------------------------------------------------------------------------
// Riccati

enum class RiccatiBranch { Plus, Minus };

inline std::string to_string(RiccatiBranch b) { return b == RiccatiBranch::Plus ? "plus" : "minus"; }

struct RiccatiSolution {
  RiccatiBranch branch = RiccatiBranch::Plus;
  std::vector<double> times;
  std::vector<double> values;     // r along the orbit
  std::vector<double> curvature;  // magnetic curvature along the orbit
  double periodicity_defect = 0.0;
  double equation_residual = 0.0;  // max |r' + r^2 + KK| from the samples
  int periods = 0;
};

class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Periodic solution of r' + r^2 + KK = 0 along a closed orbit.  The plus
/// branch (positive root) attracts forward in time and is found by forward
/// iteration of the period map; the minus branch attracts backward.
template <class System>
RiccatiSolution riccati_solve(const System& sys, const PeriodicOrbit& orbit, RiccatiBranch branch,
                              int max_periods = 200, const FlowOptions& fo = {}) {
  using State = std::array<double, 4>;
  const double sign = branch == RiccatiBranch::Plus ? 1.0 : -1.0;
  const double dir = sign;  // forward for plus, backward for minus
  auto kk_at = [&](double x, double y, double th) { return sys.local(x, y, 1).magnetic_curvature(th); };
  auto rhs = [&](const State& u, State& du, double) {
    const auto f = detail::flow_velocity(sys, u[0], u[1], u[2]);
    const double kk = kk_at(u[0], u[1], u[2]);
    if (!(kk < 0)) throw PreconditionError("magnetic curvature is not negative along the orbit");
    du = {f[0], f[1], f[2], -u[3] * u[3] - kk};
  };
  const PhasePoint start = orbit.start;
  const double k0 = kk_at(start.x, start.y, start.theta);
  if (!(k0 < 0)) throw PreconditionError("magnetic curvature is not negative at the orbit start");
  double r = sign * std::sqrt(-k0);
  RiccatiSolution sol;
  sol.branch = branch;
  bool converged = false;
  // For the backward branch integrate from the deck image of the start back by one period.
  const PhasePoint base = dir > 0 ? start : orbit.deck.apply(start);
  for (int it = 1; it <= max_periods; ++it) {
    State s{base.x, base.y, base.theta, r};
    detail::integrate_state(rhs, s, 0.0, dir * orbit.period, fo);
    sol.periodicity_defect = std::abs(s[3] - r);
    r = s[3];
    sol.periods = it;
    if (sol.periodicity_defect < 1e-12 * std::max(1.0, std::abs(r))) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    std::ostringstream os;
    os << "Riccati period map did not converge on orbit " << orbit.class_key;
    throw std::runtime_error(os.str());
  }
  // Sample along the orbit from the start, forward in time.
  const int n = static_cast<int>(orbit.samples.size()) - 1;
  State s{start.x, start.y, start.theta, r};
  if (dir < 0) {
    // r at the start equals r at the deck image (r is a function on SM).
    s[3] = r;
  }
  sol.times.push_back(0.0);
  sol.values.push_back(s[3]);
  sol.curvature.push_back(kk_at(s[0], s[1], s[2]));
  for (int k = 1; k <= n; ++k) {
    detail::integrate_state(rhs, s, (k - 1) * orbit.period / n, k * orbit.period / n, fo);
    sol.times.push_back(k * orbit.period / n);
    sol.values.push_back(s[3]);
    sol.curvature.push_back(kk_at(s[0], s[1], s[2]));
  }
  sol.periodicity_defect = std::max(sol.periodicity_defect, std::abs(sol.values.back() - sol.values.front()));
  // Equation residual from a centered difference of the samples (interior points).
  const double h = orbit.period / n;
  for (int k = 1; k < n; ++k) {
    const double dr = (sol.values[k + 1] - sol.values[k - 1]) / (2 * h);
    sol.equation_residual = std::max(sol.equation_residual,
                                     std::abs(dr + sol.values[k] * sol.values[k] + sol.curvature[k]));
  }
  return sol;
}

/// ||Fu||^2 - (KK u, u) = ||Fu - r u||^2 for a solution r of the Riccati
/// equation (given as a phase function).
template <class Space>
IdentityReport riccati_norm_identity(const Space& s, const FunctionOf<Space>& u, const FunctionOf<Space>& r_field,
                                     double tol, double riccati_tol = 1e-8) {
  const auto kk = magnetic_curvature_function(s);
  const auto eq = apply_F(s, r_field) + multiply(s, r_field, r_field) + kk;
  const double eq_norm = std::sqrt(std::max(0.0, norm_sq(s, eq)));
  const double scale_r = std::sqrt(std::max(norm_sq(s, kk), 1e-300));
  if (eq_norm > riccati_tol * scale_r) {
    std::ostringstream os;
    os << "r does not solve the Riccati equation: residual " << eq_norm;
    throw PreconditionError(os.str());
  }
  const auto fu = apply_F(s, u);
  const double fu2 = norm_sq(s, fu);
  const double kterm = inner_product(s, multiply(s, kk, u), u).real();
  const double left = fu2 - kterm;
  const double right = norm_sq(s, fu - multiply(s, r_field, u));
  IdentityReport r = compare_sides("riccati_norm", left, right, fu2 + std::abs(kterm), tol);
  r.anchor = "magnetic Riccati norm identity";
  r.details = {{"left_nonnegative", left >= -tol * (fu2 + std::abs(kterm)) ? 1.0 : 0.0},
               {"u_norm_sq", norm_sq(s, u)},
               {"riccati_residual", eq_norm}};
  stamp(r, s);
  return r;
}

// ---------------------------------------------------------------------------
// Mode-level identities and the ladder inequalities

template <class Space>
struct LadderNorms {
  double u = 0, eta_plus = 0, eta_minus = 0, kappa_u = 0, fu = 0;
};

template <class Space>
LadderNorms<Space> ladder_norms(const Space& s, const FunctionOf<Space>& uk) {
  LadderNorms<Space> n;
  n.u = norm_sq(s, uk);
  n.eta_plus = norm_sq(s, eta_plus(s, uk));
  n.eta_minus = norm_sq(s, eta_minus(s, uk));
  n.kappa_u = norm_sq(s, multiply_base(s, s.kappa(), uk));
  n.fu = norm_sq(s, apply_F(s, uk));
  return n;
}

/// (k^2 + 1)||F u_k||^2 - k^2 (KK u_k, u_k) = ||V F u_k||^2, plus the
/// expansion ||F u_k||^2 = ||eta^+ u_k||^2 + ||eta^- u_k||^2 + k^2 ||kappa u_k||^2.
template <class Space>
std::vector<IdentityReport> mode_identity_residual(const Space& s, const FunctionOf<Space>& uk, double tol) {
  if (uk.modes().size() != 1) throw PreconditionError("mode identity needs a function supported in one fiber mode");
  const int k = uk.modes().begin()->first;
  if (k == 0) throw PreconditionError("mode identity needs k != 0");
  const auto kk = magnetic_curvature_function(s);
  const auto fu = apply_F(s, uk);
  const double fu2 = norm_sq(s, fu);
  const double kterm = inner_product(s, multiply(s, kk, uk), uk).real();
  const double vfu = norm_sq(s, apply_V(s, fu));
  const double k2 = static_cast<double>(k) * k;
  const double left = (k2 + 1) * fu2 - k2 * kterm;
  IdentityReport main = compare_sides("mode_identity", left, vfu, (k2 + 1) * fu2 + k2 * std::abs(kterm) + vfu, tol);
  main.anchor = "mode-wise Pestov identity";
  main.details["k"] = k;
  stamp(main, s);
  const auto n = ladder_norms(s, uk);
  IdentityReport exp = compare_sides("mode_norm_expansion", fu2, n.eta_plus + n.eta_minus + k2 * n.kappa_u,
                                     fu2 + n.eta_plus + n.eta_minus + k2 * n.kappa_u, tol);
  exp.anchor = "orthogonal ladder expansion of F";
  exp.details["k"] = k;
  stamp(exp, s);
  return {main, exp};
}

/// The two-sided ladder bound and its upper bound through (Fu)_{k+1}, for k > 0
/// (for k < 0 the mirrored statement with eta^+ and eta^- exchanged).
template <class Space>
std::vector<IdentityReport> gk_inequalities(const Space& s, const FunctionOf<Space>& u, int k, double a, double b,
                                            double tol) {
  if (k == 0) throw PreconditionError("ladder inequalities need k != 0");
  const int sg = k > 0 ? 1 : -1;
  const int m = std::abs(k);
  const auto uk = project(s, u, k);
  const auto uk1 = project(s, u, k + sg);
  const auto uk2 = project(s, u, k + 2 * sg);
  const auto up = sg > 0 ? eta_plus(s, uk) : eta_minus(s, uk);   // raising toward |k|+1
  const auto dn = sg > 0 ? eta_minus(s, uk) : eta_plus(s, uk);   // lowering toward 0
  const auto dn2 = sg > 0 ? eta_minus(s, uk2) : eta_plus(s, uk2);
  const double nu = norm_sq(s, uk), nup = norm_sq(s, up), ndn = norm_sq(s, dn);
  const double nku = norm_sq(s, multiply_base(s, s.kappa(), uk));
  const double lower = ndn + m * a * nu + 0.5 * m * nku;
  const double upper = ndn + m * b * nu + 0.5 * m * nku;
  const double fk1 = norm_sq(s, project(s, apply_F(s, u), k + sg));
  const double ndn2 = norm_sq(s, dn2);
  const double nku1 = norm_sq(s, multiply_base(s, s.kappa(), uk1));
  const double gk2 = 2 * fk1 + 4 * ndn2 + 4.0 * (m + 1) * (m + 1) * nku1;
  IdentityReport lo = compare_le("gk1_lower", lower, nup, tol);
  IdentityReport hi = compare_le("gk1_upper", nup, upper, tol);
  IdentityReport g2 = compare_le("gk2_upper", nup, gk2, tol);
  for (auto* r : {&lo, &hi, &g2}) {
    r->anchor = "ladder inequalities under pinched magnetic curvature";
    r->details["k"] = k;
    stamp(*r, s);
  }
  // Two-step triangle bound: ||A + B||^2 <= 2||A||^2 + 2||B||^2, term by term.
  const auto b_term = (sg > 0 ? eta_minus(s, uk2) : eta_plus(s, uk2)) +
                      multiply_base(s, s.kappa(), uk1) * cplx(0.0, (k + sg));
  const double nb = norm_sq(s, b_term);
  g2.details["triangle_step1"] = 2 * fk1 + 2 * nb;
  g2.details["triangle_step2_slack"] = 4 * ndn2 + 4.0 * (m + 1) * (m + 1) * nku1 - 2 * nb;
  return {lo, hi, g2};
}

// ---------------------------------------------------------------------------
// Carleman weights and estimates (log domain)

inline double log_sum_exp(const std::vector<double>& logs) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : logs) mx = std::max(mx, v);
  if (!std::isfinite(mx)) return mx;
  double s = 0;
  for (double v : logs) s += std::exp(v - mx);
  return mx + std::log(s);
}

/// log(e^x - e^y) for x >= y.
inline double log_diff_exp(double x, double y) {
  if (y > x) return std::numeric_limits<double>::quiet_NaN();
  if (!std::isfinite(y)) return x;
  return x + std::log1p(-std::exp(y - x));
}

struct CarlemanWeights {
  double sigma = 1.0;
  int k_max = 64;
  std::vector<double> log_gamma_sq;  // index |k|, 0..k_max

  double log_at(int k) const {
    const int a = std::abs(k);
    if (a > k_max) throw std::out_of_range("Carleman weight beyond k_max");
    return log_gamma_sq[a];
  }
  double at(int k) const { return std::exp(log_at(k)); }

  struct Certificate {
    bool two_step = true;     // gamma_k^2 > 4 gamma_{k-2}^2, |k| >= 3
    bool linear = true;       // gamma_k^2 > 8|k| gamma_{k-1}^2, |k| >= 2
    bool shift = true;        // gamma_{k-1}^2 <= gamma_k^2 / e^sigma, k >= 1
    bool finite = true;       // no overflow in log domain
    double min_two_step_gap = std::numeric_limits<double>::infinity();  // in log units
    double min_linear_gap = std::numeric_limits<double>::infinity();
    bool all() const { return two_step && linear && shift && finite; }
  };

  Certificate certify() const {
    Certificate c;
    for (int k = 0; k <= k_max; ++k) c.finite = c.finite && std::isfinite(log_gamma_sq[k]);
    for (int k = 3; k <= k_max; ++k) {
      const double gap = log_gamma_sq[k] - (std::log(4.0) + log_gamma_sq[k - 2]);
      c.min_two_step_gap = std::min(c.min_two_step_gap, gap);
      c.two_step = c.two_step && gap > 0;
    }
    for (int k = 2; k <= k_max; ++k) {
      const double gap = log_gamma_sq[k] - (std::log(8.0 * k) + log_gamma_sq[k - 1]);
      c.min_linear_gap = std::min(c.min_linear_gap, gap);
      c.linear = c.linear && gap > 0;
    }
    for (int k = 1; k <= k_max; ++k) c.shift = c.shift && log_gamma_sq[k - 1] <= log_gamma_sq[k] - sigma + 1e-12;
    return c;
  }
};

inline constexpr int kDefaultWeightRange = 64;

/// gamma_k^2 = 8^|k| |k|! e^{|k| sigma}, stored as logarithms.
inline CarlemanWeights make_weights(double sigma, int k_max = kDefaultWeightRange) {
  if (!(sigma > 0) || !std::isfinite(sigma))
    throw PreconditionError("sigma must be positive: at sigma = 0 the strict bound 8k gamma_{k-1}^2 < gamma_k^2 fails");
  if (k_max < 2) throw std::invalid_argument("k_max must be at least 2");
  CarlemanWeights w;
  w.sigma = sigma;
  w.k_max = k_max;
  for (int k = 0; k <= k_max; ++k) w.log_gamma_sq.push_back(k * std::log(8.0) + std::lgamma(k + 1.0) + k * sigma);
  const auto cert = w.certify();
  if (!cert.all()) throw std::logic_error("Carleman weight recurrences failed to certify");
  return w;
}

/// Squared mode norms of u and Fu, and of the ladder pieces, per mode.
struct ModeData {
  std::map<int, double> u, fu, eta_plus, eta_minus, kappa_u;
};

template <class Space>
ModeData harvest_mode_data(const Space& s, const FunctionOf<Space>& u) {
  ModeData d;
  const auto fu = apply_F(s, u);
  for (const auto& [k, f] : u.modes()) {
    const FunctionOf<Space> uk(k, f);
    d.u[k] = norm_sq(s, uk);
    d.eta_plus[k] = norm_sq(s, eta_plus(s, uk));
    d.eta_minus[k] = norm_sq(s, eta_minus(s, uk));
    d.kappa_u[k] = norm_sq(s, multiply_base(s, s.kappa(), uk));
  }
  for (const auto& [k, f] : fu.modes()) d.fu[k] = norm_sq(s, FunctionOf<Space>(k, f));
  return d;
}

namespace detail {

inline double log_norm(double v) { return v > 0 ? std::log(v) : -std::numeric_limits<double>::infinity(); }

/// log of sum_{sg*k >= n} gamma_k^2 * values[k] over one side.
inline double weighted_tail(const CarlemanWeights& w, const std::map<int, double>& values, int n, int sg) {
  std::vector<double> logs;
  for (const auto& [k, v] : values)
    if (sg * k >= n && v > 0) logs.push_back(w.log_at(k) + std::log(v));
  return log_sum_exp(logs);
}

}  // namespace detail

/// sum_{|k| >= N} gamma_k^2 ||u_k||^2 <= 2/(a e^sigma) sum_{|k| >= N+1} gamma_k^2 ||(Fu)_k||^2,
/// checked on the positive and negative sides separately and combined.
inline IdentityReport carleman_from_modes(const ModeData& d, const CarlemanWeights& w, int n, double a) {
  if (n < 1) throw PreconditionError("Carleman estimate needs N >= 1");
  if (!(a > 0)) throw PreconditionError("Carleman estimate needs a > 0");
  const double log_c = std::log(2.0 / a) - w.sigma;
  IdentityReport r;
  r.name = "carleman";
  r.anchor = "Carleman estimate with factorial-exponential weights";
  r.tolerance = 1e-9;
  std::vector<double> lefts, rights;
  bool pass = true;
  for (int sg : {1, -1}) {
    const double l = detail::weighted_tail(w, d.u, n, sg);
    const double rr = log_c + detail::weighted_tail(w, d.fu, n + 1, sg);
    lefts.push_back(l);
    rights.push_back(rr);
    const bool ok = !std::isfinite(l) || (std::isfinite(rr) && l <= rr + std::log1p(r.tolerance));
    pass = pass && ok;
    const std::string side = sg > 0 ? "positive" : "negative";
    r.details["log_left_" + side] = l;
    r.details["log_right_" + side] = rr;
    r.details["log_ratio_" + side] = std::isfinite(l) ? l - rr : -std::numeric_limits<double>::infinity();
  }
  const double l = log_sum_exp(lefts), rr = log_sum_exp(rights);
  r.details["log_left"] = l;
  r.details["log_right"] = rr;
  r.left = std::isfinite(l) ? std::exp(std::min(l, 700.0)) : 0.0;
  r.right = std::isfinite(rr) ? std::exp(std::min(rr, 700.0)) : 0.0;
  r.rel_residual = std::isfinite(l) ? std::max(0.0, std::exp(std::min(l - rr, 700.0)) - 1.0) : 0.0;
  r.abs_residual = std::max(0.0, r.left - r.right);
  r.details["ratio"] = std::isfinite(l) ? std::exp(std::min(l - rr, 700.0)) : 0.0;
  r.details["N"] = n;
  r.details["sigma"] = w.sigma;
  r.details["a"] = a;
  r.pass = pass;
  return r;
}

template <class Space>
IdentityReport carleman_estimate(const Space& s, const FunctionOf<Space>& u, const CarlemanWeights& w, int n,
                                 double a) {
  IdentityReport r = carleman_from_modes(harvest_mode_data(s, u), w, n, a);
  stamp(r, s);
  return r;
}

/// Replays the weighted summation on mode data alone: hypotheses (the upper
/// ladder bound per mode), bracket coefficients, the telescoped inequality,
/// and the final estimate.  Returns the reports in that order.
inline std::vector<IdentityReport> weighted_summation_engine(const ModeData& d, const CarlemanWeights& w, int n,
                                                             double a, double tol = 1e-9) {
  if (n < 1) throw PreconditionError("summation needs N >= 1");
  auto get = [](const std::map<int, double>& m, int k) {
    auto it = m.find(k);
    return it == m.end() ? 0.0 : it->second;
  };
  int deg = 0;
  for (const auto& [k, v] : d.u)
    if (v > 0) deg = std::max(deg, std::abs(k));
  for (const auto& [k, v] : d.fu)
    if (v > 0) deg = std::max(deg, std::abs(k));
  const int top = std::min(w.k_max - 2, deg + 2);

  IdentityReport hyp;
  hyp.name = "summation_hypotheses";
  hyp.anchor = "ladder upper bound through (Fu)_{k+1}";
  hyp.pass = true;
  hyp.tolerance = tol;
  IdentityReport brackets;
  brackets.name = "summation_brackets";
  brackets.anchor = "nonnegative bracket coefficients of the telescoped sum";
  brackets.pass = true;
  double min_b1 = std::numeric_limits<double>::infinity(), min_b2 = min_b1;
  std::vector<double> tele_left_logs_all, tele_right_logs_all;
  bool tele_ok = true;
  for (int sg : {1, -1}) {
    // Mirrored ladder: on the negative side eta^+ and eta^- exchange roles.
    const auto& dn = sg > 0 ? d.eta_minus : d.eta_plus;
    for (int m = n; m <= top; ++m) {
      const int k = sg * m;
      const double bound = 2 * get(d.fu, k + sg) + 4 * get(dn, k + 2 * sg) +
                           4.0 * (m + 1) * (m + 1) * get(d.kappa_u, k + sg);
      const double lhs = get(dn, k) + m * a * get(d.u, k) + 0.5 * m * get(d.kappa_u, k);
      if (lhs > bound * (1 + tol) + 1e-300) hyp.pass = false;
      hyp.details["max_violation"] = std::max(hyp.details["max_violation"], lhs - bound);
    }
    std::vector<double> left_logs, right_logs;
    for (int m = n; m <= top; ++m) {
      const int k = sg * m;
      if (m >= n + 2) {
        const double lb = log_diff_exp(w.log_at(m), std::log(4.0) + w.log_at(m - 2));
        min_b1 = std::min(min_b1, lb);
        if (!std::isfinite(lb)) brackets.pass = false;
        if (get(dn, k) > 0) left_logs.push_back(lb + std::log(get(dn, k)));
      }
      if (get(d.u, k) > 0) left_logs.push_back(std::log(a * m) + w.log_at(m) + std::log(get(d.u, k)));
      if (m >= n + 1) {
        const double lb = log_diff_exp(std::log(m / 2.0) + w.log_at(m), std::log(4.0 * m * m) + w.log_at(m - 1));
        min_b2 = std::min(min_b2, lb);
        if (!std::isfinite(lb)) brackets.pass = false;
        if (get(d.kappa_u, k) > 0) left_logs.push_back(lb + std::log(get(d.kappa_u, k)));
      }
      if (m >= n + 1 && get(d.fu, k) > 0) right_logs.push_back(std::log(2.0) + w.log_at(m - 1) + std::log(get(d.fu, k)));
    }
    const int m = top + 1;
    if (get(d.fu, sg * m) > 0) right_logs.push_back(std::log(2.0) + w.log_at(m - 1) + std::log(get(d.fu, sg * m)));
    const double l = log_sum_exp(left_logs), r = log_sum_exp(right_logs);
    if (std::isfinite(l) && !(l <= r + std::log1p(tol))) tele_ok = false;
    tele_left_logs_all.push_back(l);
    tele_right_logs_all.push_back(r);
  }
  brackets.details["min_log_two_step_bracket"] = min_b1;
  brackets.details["min_log_linear_bracket"] = min_b2;
  IdentityReport tele;
  tele.name = "summation_telescoped";
  tele.anchor = "telescoped weighted inequality";
  tele.pass = tele_ok && hyp.pass;
  tele.details["log_left"] = log_sum_exp(tele_left_logs_all);
  tele.details["log_right"] = log_sum_exp(tele_right_logs_all);
  IdentityReport fin = carleman_from_modes(d, w, n, a);
  fin.name = "summation_final";
  // The engine certifies the estimate only through its own chain.
  fin.details["engine_certified"] = (hyp.pass && brackets.pass && tele.pass && fin.pass) ? 1.0 : 0.0;
  if (!hyp.pass) fin.details["hypothesis_failure"] = 1.0;
  return {hyp, brackets, tele, fin};
}

/// Degree reduction: with v = Fu of degree N, the estimate at N' = max(N, 1)
/// bounds the tail sum_{|k| >= N'} ||u_k||^2 by the weighted right side.
template <class Space>
IdentityReport degree_reduction_check(const Space& s, const FunctionOf<Space>& u, const CarlemanWeights& w,
                                      double a) {
  const auto v = apply_F(s, u);
  const int nv = degree(s, v);
  const int np = std::max(nv, 1);
  const ModeData d = harvest_mode_data(s, u);
  double tail = 0.0;
  for (const auto& [k, val] : d.u)
    if (std::abs(k) >= np) tail += val;
  const IdentityReport est = carleman_from_modes(d, w, np, a);
  // gamma_k^2 >= gamma_{N'}^2 on the tail, so the tail is at most right / gamma_{N'}^2.
  const double bound = std::isfinite(est.details.at("log_right"))
                           ? std::exp(std::min(est.details.at("log_right") - w.log_at(np), 700.0))
                           : 0.0;
  const double scale = norm_sq(s, u);
  IdentityReport r = compare_le("degree_reduction", tail, bound, 1e-9);
  r.pass = tail <= bound + 1e-12 * std::max(scale, 1e-300) && est.pass;
  r.anchor = "degree reduction from the Carleman estimate";
  r.details["degree_Fu"] = nv;
  r.details["degree_u"] = degree(s, u);
  r.details["N_prime"] = np;
  r.details["tail"] = tail;
  stamp(r, s);
  return r;
}

/// sigma with 16 b^2 / (a^2 e^{2 sigma}) = 1.
inline double contraction_sigma(double a, double b) { return std::log(4 * b / a); }

/// Two chained estimates on (y, Fy): L0 <= L1 <= L2 where
///   L0 = sum_{|k|>=N} gamma^2 ||y_k||^2,
///   L1 = 2/(a e^s) sum_{|k|>=N+1} gamma^2 ||(Fy)_k||^2,
///   L2 = 4/(a^2 e^{2s}) sum_{|k|>=N+2} gamma^2 ||(F^2 y)_k||^2,
/// and the contraction ratio L0 / L2 <= 1 when 16 b^2/(a^2 e^{2 sigma}) <= 1.
template <class Space>
IdentityReport contraction_chain(const Space& s, const FunctionOf<Space>& y, double a, double b, double sigma, int n) {
  const CarlemanWeights w = make_weights(sigma);
  const double constant = 16 * b * b / (a * a * std::exp(2 * sigma));
  const auto fy = apply_F(s, y);
  const IdentityReport first = carleman_estimate(s, y, w, n, a);
  const IdentityReport second = carleman_estimate(s, fy, w, n + 1, a);
  const double l0 = first.details.at("log_left");
  const double l1 = first.details.at("log_right");
  const double l1b = std::log(2.0 / a) - sigma + second.details.at("log_left");  // same quantity as l1
  const double l2 = std::log(2.0 / a) - sigma + second.details.at("log_right");
  IdentityReport r;
  r.name = "contraction_chain";
  r.anchor = "closing chain of two Carleman estimates";
  r.details = {{"constant", constant}, {"log_L0", l0}, {"log_L1", l1}, {"log_L1_check", l1b}, {"log_L2", l2},
               {"sigma", sigma}, {"N", n}};
  const double ratio = std::isfinite(l0) ? std::exp(std::min(l0 - l2, 700.0)) : 0.0;
  r.left = ratio;
  r.right = 1.0;
  r.rel_residual = std::max(0.0, ratio - 1.0);
  r.abs_residual = r.rel_residual;
  r.tolerance = 1e-9;
  r.pass = constant <= 1.0 + 1e-12 && first.pass && second.pass && ratio <= 1.0 + r.tolerance;
  stamp(r, s);
  return r;
}

}  // namespace maglab
