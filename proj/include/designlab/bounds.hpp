#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "designlab/ensembles.hpp"
#include "designlab/numkit.hpp"

namespace designlab {

// Concentration constants, derived from pi at call time.
inline double levy_c1() {
  const double p = std::numbers::pi;
  return 2.0 / (9.0 * p * p * p);
}

inline double statmech_c2() {
  const double p = std::numbers::pi;
  return 1.0 / (18.0 * p * p * p);
}

inline double entropy_haar_c() {
  const double p = std::numbers::pi;
  return 1.0 / (8.0 * p * p);
}

// Probability bound carried in log space; `value` is clamped to [0, 1] and
// `raw` may underflow to 0 or overflow, in which case log2_raw remains exact.
struct BoundResult {
  double value = 1.0;
  double raw = 1.0;
  double log2_raw = 0.0;
  bool clamped = false;
  std::vector<std::string> warnings;

  static BoundResult from_ln(double ln_raw, std::vector<std::string> warnings = {}) {
    BoundResult r;
    r.log2_raw = ln_raw / std::numbers::ln2;
    r.raw = std::exp(ln_raw);
    r.clamped = r.raw > 1.0;
    r.value = std::min(1.0, r.raw);
    r.warnings = std::move(warnings);
    return r;
  }
};

namespace bound_detail {

inline double logsumexp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

inline double logsumexp3(double a, double b, double c) {
  return logsumexp(logsumexp(a, b), c);
}

inline constexpr double neg_inf() { return -std::numeric_limits<double>::infinity(); }

}  // namespace bound_detail

struct LipschitzFn {
  double eta_lip = 1.0;

  void validate() const {
    if (!(eta_lip > 0.0)) throw std::invalid_argument("LipschitzFn: eta must be positive");
  }
};

// Haar tail profile: P(|X - mu| >= delta) <= C exp(-a delta^2), optionally
// shifted (P(X >= delta + eta_shift) <= C exp(-a delta^2)).
struct TailProfile {
  double C = 1.0;
  double a = 1.0;
  double mu = 0.0;
  double eta_shift = 0.0;

  void validate() const {
    if (!(C >= 0.0)) throw std::invalid_argument("TailProfile: C must be non-negative");
    if (!(a > 0.0)) throw std::invalid_argument("TailProfile: a must be positive");
    if (!(eta_shift >= 0.0)) throw std::invalid_argument("TailProfile: shift must be >= 0");
  }
};

// Polynomial data for design transfer: degree K, absolute coefficient mass.
struct PolynomialSpec {
  int degree_K = 1;
  double alpha_mass = 1.0;

  void validate() const {
    if (degree_K < 1) throw std::invalid_argument("PolynomialSpec: K must be >= 1");
    if (!(alpha_mass > 0.0)) throw std::invalid_argument("PolynomialSpec: alpha must be positive");
  }
};

// Concentration for eta-Lipschitz functions of a Haar unitary:
// min(1, 4 exp(-C1 d delta^2 / eta^2)).
inline BoundResult levy_bound(const LipschitzFn& f, double d, double delta) {
  f.validate();
  if (!(d >= 1.0)) throw std::invalid_argument("levy_bound: d must be >= 1");
  if (!(delta > 0.0)) throw std::invalid_argument("levy_bound: delta must be positive");
  const double ln = std::log(4.0) - levy_c1() * d * delta * delta / (f.eta_lip * f.eta_lip);
  return BoundResult::from_ln(ln);
}

struct MomentBounds {
  double gamma_form = 0.0;  // C Gamma(m/2 + 1) a^(-m/2)
  double loose_form = 0.0;  // C (m / 2a)^(m/2)
  double ln_gamma_form = 0.0;
  double ln_loose_form = 0.0;
};

// Centered absolute moment bound E|X - mu|^m from a tail profile.
inline MomentBounds moment_from_tail(const TailProfile& t, double m) {
  t.validate();
  if (t.eta_shift != 0.0) {
    throw std::invalid_argument("moment_from_tail: profile must be unshifted");
  }
  if (!(m > 0.0)) throw std::invalid_argument("moment_from_tail: m must be positive");
  MomentBounds out;
  if (t.C == 0.0) {
    out.ln_gamma_form = bound_detail::neg_inf();
    out.ln_loose_form = bound_detail::neg_inf();
    return out;
  }
  out.ln_gamma_form = std::log(t.C) + std::lgamma(m / 2.0 + 1.0) - (m / 2.0) * std::log(t.a);
  out.ln_loose_form = std::log(t.C) + (m / 2.0) * (std::log(m) - std::log(2.0 * t.a));
  out.gamma_form = std::exp(out.ln_gamma_form);
  out.loose_form = std::exp(out.ln_loose_form);
  return out;
}

struct ShiftedMoment {
  double value = 0.0;
  double ln_value = 0.0;
};

// Raw moment bound for a shifted non-negative variable:
// E X^m <= C (2m/a)^(m/2) + (2 eta_shift)^m.
inline ShiftedMoment shifted_moment_from_tail(const TailProfile& t, double m) {
  t.validate();
  if (!(m > 0.0)) throw std::invalid_argument("shifted_moment_from_tail: m must be positive");
  using bound_detail::logsumexp;
  using bound_detail::neg_inf;
  const double t1 = t.C > 0.0
                        ? std::log(t.C) + (m / 2.0) * (std::log(2.0 * m) - std::log(t.a))
                        : neg_inf();
  const double t2 = t.eta_shift > 0.0 ? m * std::log(2.0 * t.eta_shift) : neg_inf();
  ShiftedMoment out;
  out.ln_value = logsumexp(t1, t2);
  out.value = std::exp(out.ln_value);
  return out;
}

struct GapTerm {
  double value = 0.0;
  double ln_value = 0.0;
};

// Additive moment gap between a design and Haar:
// eps d^(-k) (alpha + |mu|)^(2m), valid when 2 m K <= k.
inline GapTerm design_moment_gap(const PolynomialSpec& p, double mu, double eps, double d, int k,
                                 int m) {
  p.validate();
  if (m < 1) throw std::invalid_argument("design_moment_gap: m must be >= 1");
  if (!(eps >= 0.0)) throw std::invalid_argument("design_moment_gap: eps must be >= 0");
  if (!(d >= 2.0)) throw std::invalid_argument("design_moment_gap: d must be >= 2");
  if (2 * static_cast<std::int64_t>(m) * p.degree_K > k) {
    throw std::invalid_argument("design_moment_gap: requires 2 m K <= k");
  }
  GapTerm out;
  if (eps == 0.0) {
    out.ln_value = bound_detail::neg_inf();
    return out;
  }
  out.ln_value = std::log(eps) - static_cast<double>(k) * std::log(d) +
                 2.0 * m * std::log(p.alpha_mass + std::abs(mu));
  out.value = std::exp(out.ln_value);
  return out;
}

struct PolyTailResult {
  BoundResult bound;
  std::int64_t m_used = 1;
};

// Design large-deviation bound
// P(|f - mu| >= delta) <= delta^(-2m) (C (m/a)^m + eps d^(-k) (alpha+|mu|)^(2m)),
// minimized over integer m with 2 m K <= k unless m is pinned.
inline PolyTailResult poly_tail_design(const TailProfile& t, const PolynomialSpec& p, double eps,
                                       double d, int k, double delta,
                                       std::optional<std::int64_t> m_opt = std::nullopt) {
  t.validate();
  p.validate();
  if (t.eta_shift != 0.0) throw std::invalid_argument("poly_tail_design: profile must be unshifted");
  if (!(delta > 0.0)) throw std::invalid_argument("poly_tail_design: delta must be positive");
  if (!(eps >= 0.0)) throw std::invalid_argument("poly_tail_design: eps must be >= 0");
  const std::int64_t m_max = k / (2 * static_cast<std::int64_t>(p.degree_K));
  if (m_max < 1) throw std::invalid_argument("poly_tail_design: floor(k / 2K) < 1");

  const auto term_ln = [&](std::int64_t m) {
    const double md = static_cast<double>(m);
    const double haar_part = t.C > 0.0
                                 ? std::log(t.C) + md * (std::log(md) - std::log(t.a))
                                 : bound_detail::neg_inf();
    double gap_part = bound_detail::neg_inf();
    if (eps > 0.0) {
      gap_part = std::log(eps) - static_cast<double>(k) * std::log(d) +
                 2.0 * md * std::log(p.alpha_mass + std::abs(t.mu));
    }
    return -2.0 * md * std::log(delta) + bound_detail::logsumexp(haar_part, gap_part);
  };

  PolyTailResult out;
  if (m_opt.has_value()) {
    const std::int64_t m = *m_opt;
    if (m < 1 || m > m_max) {
      throw std::invalid_argument("poly_tail_design: m must satisfy 1 <= m and 2 m K <= k");
    }
    out.m_used = m;
    out.bound = BoundResult::from_ln(term_ln(m));
    return out;
  }

  // The unconstrained optimum sits near a delta^2 / e; scan the feasible
  // range (capped) and always include the seed and the endpoints.
  const std::int64_t seed = std::clamp<std::int64_t>(
      static_cast<std::int64_t>(t.a * delta * delta / std::numbers::e), 1, m_max);
  const std::int64_t scan_to = std::min<std::int64_t>(m_max, 2'000'000);
  double best_ln = std::numeric_limits<double>::infinity();
  std::int64_t best_m = 1;
  const auto consider = [&](std::int64_t m) {
    const double ln = term_ln(m);
    if (ln < best_ln) {
      best_ln = ln;
      best_m = m;
    }
  };
  for (std::int64_t m = 1; m <= scan_to; ++m) consider(m);
  consider(seed);
  consider(m_max);
  out.m_used = best_m;
  out.bound = BoundResult::from_ln(best_ln);
  return out;
}

// First-moment Markov bound on purity: P(tr psi_S^2 >= mu gamma) <= 1/gamma.
inline BoundResult markov_purity_tail(double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("markov_purity_tail: gamma must be positive");
  return BoundResult::from_ln(-std::log(gamma));
}

// Entropy tail implied by the purity Markov bound:
// P(S <= log2 d_S - alpha - beta) <= 2^(-alpha).
inline BoundResult markov_entropy_tail(double alpha) {
  if (!(alpha >= 0.0)) throw std::invalid_argument("markov_entropy_tail: alpha must be >= 0");
  return BoundResult::from_ln(-alpha * std::numbers::ln2);
}

// Polynomial coefficient mass of the purity polynomial for initial state rho:
// d^2 (sum_ij |rho_ij|)^2, at most d^4.
inline double alpha_purity(const DensityMatrix& rho, Index d) {
  if (rho.dim() != d) throw std::invalid_argument("alpha_purity: dims mismatch");
  const double s = rho.mat.cwiseAbs().sum();
  const double dd = static_cast<double>(d);
  const double alpha = dd * dd * s * s;
  if (alpha > dd * dd * dd * dd * (1.0 + 1e-6) + 1e-6) {
    throw std::logic_error("alpha_purity: exceeded the d^4 ceiling");
  }
  return alpha;
}

struct EntropyHaarResult {
  BoundResult bound;
  double beta = 0.0;
};

// Haar entropy tail P(S <= log2 d_S - alpha - beta) <= exp(-(d-1) C alpha^2
// / (log2 d_S)^2), beta = (1/ln2)(d_S/d_E).
inline EntropyHaarResult entropy_tail_haar(const BipartiteDims& dims, double alpha) {
  if (!(alpha >= 0.0)) throw std::invalid_argument("entropy_tail_haar: alpha must be >= 0");
  if (dims.d_s < 2) throw std::invalid_argument("entropy_tail_haar: d_S must be >= 2");
  std::vector<std::string> warnings;
  if (dims.d_e < dims.d_s || dims.d_s < 3) {
    warnings.push_back("outside stated regime d_E >= d_S >= 3");
  }
  const double d = static_cast<double>(dims.d());
  const double l2s = std::log2(static_cast<double>(dims.d_s));
  const double ln = -(d - 1.0) * entropy_haar_c() * alpha * alpha / (l2s * l2s);
  EntropyHaarResult out;
  out.bound = BoundResult::from_ln(ln, std::move(warnings));
  out.beta = (1.0 / std::numbers::ln2) * static_cast<double>(dims.d_s) /
             static_cast<double>(dims.d_e);
  return out;
}

// Moment-method design entropy tail:
// (mu (2^alpha - 1))^(-2m) (4 (4m / (C1 d))^m + eps d^(-k) (d^4 + mu)^(2m)),
// for integer 1 <= m <= k/4.
inline BoundResult entropy_tail_design_messy(double mu, double alpha, int m, double eps, double d,
                                             int k) {
  if (!(mu > 0.0 && mu <= 1.0)) {
    throw std::invalid_argument("entropy_tail_design_messy: mu must be in (0, 1]");
  }
  if (!(alpha > 0.0)) throw std::invalid_argument("entropy_tail_design_messy: alpha must be > 0");
  if (!(eps >= 0.0)) throw std::invalid_argument("entropy_tail_design_messy: eps must be >= 0");
  if (!(d >= 2.0)) throw std::invalid_argument("entropy_tail_design_messy: d must be >= 2");
  if (m < 1 || 4 * static_cast<std::int64_t>(m) > k) {
    throw std::invalid_argument("entropy_tail_design_messy: requires integer 1 <= m <= k/4");
  }
  const double md = static_cast<double>(m);
  // ln(2^alpha - 1), stable for small alpha
  const double ln_pow_gap = std::log(std::expm1(alpha * std::numbers::ln2));
  const double prefactor = -2.0 * md * (std::log(mu) + ln_pow_gap);
  const double t1 = std::log(4.0) + md * (std::log(4.0 * md) - std::log(levy_c1() * d));
  double t2 = bound_detail::neg_inf();
  if (eps > 0.0) {
    const double ln_d4_mu = 4.0 * std::log(d) + std::log1p(mu / std::pow(d, 4.0));
    t2 = std::log(eps) - static_cast<double>(k) * std::log(d) + 2.0 * md * ln_d4_mu;
  }
  return BoundResult::from_ln(prefactor + bound_detail::logsumexp(t1, t2));
}

struct EntropyDesignResult {
  BoundResult bound;
  double k_implied = 0.0;        // n / (10 log2 n)
  double log2_eps_implied = 0.0;  // eps = 4^(-n^2)
};

// Qubit-system entropy tail for the implied design strength:
// 8 exp2(-(n / (80 log2 n)) (n/5 + alpha)).
inline EntropyDesignResult entropy_tail_design(double n, double d_s, double alpha) {
  if (!(n > 1.0)) throw std::invalid_argument("entropy_tail_design: n must exceed 1");
  if (!(d_s >= 2.0)) throw std::invalid_argument("entropy_tail_design: d_S must be >= 2");
  std::vector<std::string> warnings;
  if (n < 19.0) warnings.push_back("outside stated regime n >= 19");
  if (d_s > std::exp2(n / 10.0)) warnings.push_back("outside stated regime d_S <= 2^(n/10)");
  if (alpha < 2.0) warnings.push_back("outside stated regime alpha >= 2");
  const double l2n = std::log2(n);
  const double exponent = (n / (80.0 * l2n)) * (n / 5.0 + alpha);
  EntropyDesignResult out;
  out.bound = BoundResult::from_ln(std::log(8.0) - exponent * std::numbers::ln2,
                                   std::move(warnings));
  out.k_implied = n / (10.0 * l2n);
  out.log2_eps_implied = -2.0 * n * n;
  return out;
}

struct StatmechHaarResult {
  BoundResult bound;
  double offset = 0.0;  // sqrt(d_S / d_eff)
};

// Haar subsystem-equilibration tail:
// P(||rho_S - Omega_S||_1 >= eps + sqrt(d_S/d_eff)) <= 2 exp(-C2 d_R eps^2).
inline StatmechHaarResult statmech_tail_haar(double d_s, double d_r, double d_eff, double eps) {
  if (!(d_s >= 1.0 && d_r >= 1.0 && d_eff > 0.0)) {
    throw std::invalid_argument("statmech_tail_haar: dims must be positive");
  }
  if (!(eps >= 0.0)) throw std::invalid_argument("statmech_tail_haar: eps must be >= 0");
  std::vector<std::string> warnings;
  if (d_eff < d_r / d_s * (1.0 - 1e-9)) {
    warnings.push_back("d_eff below the guaranteed floor d_R/d_S");
  }
  StatmechHaarResult out;
  out.bound = BoundResult::from_ln(std::log(2.0) - statmech_c2() * d_r * eps * eps,
                                   std::move(warnings));
  out.offset = std::sqrt(d_s / d_eff);
  return out;
}

enum class StatmechMode { messy, simplified };

struct StatmechDesignResult {
  BoundResult bound;
  int m_used = 0;                 // messy mode
  double log2_eps_ceiling = 0.0;  // simplified mode: (3/2)(4 d_S^3/d_R)^(k/8)
};

// Design subsystem-equilibration tail. Simplified form
// 6 (4 d_S^3 / (d_R delta^2))^(k/8) requires k divisible by 8; messy form is
// the underlying moment bound with explicit integer m <= k/4.
inline StatmechDesignResult statmech_tail_design(double d_s, double d_r, double delta, int k,
                                                 std::optional<double> eps, StatmechMode mode,
                                                 std::optional<int> m_opt = std::nullopt) {
  if (!(d_s >= 2.0 && d_r >= 2.0)) {
    throw std::invalid_argument("statmech_tail_design: dims must be >= 2");
  }
  if (!(delta > 0.0)) throw std::invalid_argument("statmech_tail_design: delta must be positive");
  if (k < 1) throw std::invalid_argument("statmech_tail_design: k must be >= 1");
  using bound_detail::logsumexp3;
  using bound_detail::neg_inf;
  StatmechDesignResult out;
  std::vector<std::string> warnings;

  if (mode == StatmechMode::simplified) {
    if (k % 8 != 0) {
      throw std::invalid_argument("statmech_tail_design: simplified mode needs k divisible by 8");
    }
    const double k8 = static_cast<double>(k) / 8.0;
    const double ln_ratio = std::log(4.0) + 3.0 * std::log(d_s) - std::log(d_r);
    out.log2_eps_ceiling = (std::log(1.5) + k8 * ln_ratio) / std::numbers::ln2;
    if (k > 8.0 * statmech_c2() * d_s * d_s) {
      warnings.push_back("outside stated regime k <= 8 C2 d_S^2");
    }
    if (eps.has_value() &&
        std::log(*eps) > std::log(1.5) + k8 * ln_ratio + 1e-12) {
      warnings.push_back("eps exceeds the simplified-mode ceiling (3/2)(4 d_S^3/d_R)^(k/8)");
    }
    const double ln = std::log(6.0) + k8 * (ln_ratio - 2.0 * std::log(delta));
    out.bound = BoundResult::from_ln(ln, std::move(warnings));
    out.m_used = k / 8;
    return out;
  }

  int m = m_opt.value_or(k >= 8 ? k / 8 : k / 4);
  if (m < 1 || 4 * static_cast<std::int64_t>(m) > k) {
    throw std::invalid_argument("statmech_tail_design: messy mode requires integer 1 <= m <= k/4");
  }
  const double e = eps.value_or(0.0);
  if (!(e >= 0.0)) throw std::invalid_argument("statmech_tail_design: eps must be >= 0");
  const double md = static_cast<double>(m);
  const double pref = md * (std::log(d_s) - 2.0 * std::log(delta));
  const double t1 = std::log(2.0) + md * (std::log(4.0 * md) - std::log(statmech_c2() * d_r));
  const double t2 = md * (std::log(4.0) + 2.0 * std::log(d_s) - std::log(d_r));
  double t3 = neg_inf();
  if (e > 0.0) {
    const double ln_dr2p1 = 2.0 * std::log(d_r) + std::log1p(1.0 / (d_r * d_r));
    t3 = std::log(e) - static_cast<double>(k) * std::log(d_r) + 4.0 * md * ln_dr2p1;
  }
  out.bound = BoundResult::from_ln(pref + logsumexp3(t1, t2, t3), std::move(warnings));
  out.m_used = m;
  return out;
}

struct OverlapTailResult {
  BoundResult factorial_form;  // (1+eps) m! / (d delta)^m
  BoundResult binomial_form;   // (1+eps) / (C(m+d-1, d-1) delta^m)
};

// Product-overlap tail for states from an approximate design:
// P(|<phi|psi>|^2 >= delta) for any fixed phi.
inline OverlapTailResult overlap_tail(double d, double delta, int m, double eps) {
  if (!(d >= 2.0)) throw std::invalid_argument("overlap_tail: d must be >= 2");
  if (!(delta > 0.0)) throw std::invalid_argument("overlap_tail: delta must be positive");
  if (m < 1) throw std::invalid_argument("overlap_tail: m must be >= 1");
  if (!(eps >= 0.0)) throw std::invalid_argument("overlap_tail: eps must be >= 0");
  const double md = static_cast<double>(m);
  const double ln_fact = std::log1p(eps) + std::lgamma(md + 1.0) - md * std::log(d * delta);
  const double ln_binom = std::log1p(eps) -
                          (std::lgamma(md + d) - std::lgamma(md + 1.0) - std::lgamma(d)) -
                          md * std::log(delta);
  OverlapTailResult out;
  out.factorial_form = BoundResult::from_ln(ln_fact);
  out.binomial_form = BoundResult::from_ln(ln_binom);
  return out;
}

struct NetSizeResult {
  double bits = 0.0;  // log2 of the product-state net cardinality (5n/gamma)^(4n)
  std::vector<std::string> warnings;
};

inline NetSizeResult net_size(double gamma, double n) {
  if (!(gamma > 0.0)) throw std::invalid_argument("net_size: gamma must be positive");
  if (!(n >= 1.0)) throw std::invalid_argument("net_size: n must be >= 1");
  NetSizeResult out;
  if (gamma > 2.0) out.warnings.push_back("outside stated regime gamma <= 2");
  out.bits = 4.0 * n * std::log2(5.0 * n / gamma);
  return out;
}

struct GeomEntTailResult {
  BoundResult bound;
  double log2_general = 0.0;  // general-formula value, always reported
  bool corollary = false;     // headline uses the closed form 2 n^(-n^2)
};

// Tail for the geometric measure of entanglement over a state design:
// P(E_g <= n - delta) <= (1+eps) exp2(k log2 2k + 4n log2 10n - k delta
// + 4n(n - delta)); at k = n^2, delta = 3 log2 n + 5, eps = 1 the headline
// value is the closed form 2 n^(-n^2).
inline GeomEntTailResult geom_ent_tail(double n, double k, double delta, double eps) {
  if (!(n >= 1.0)) throw std::invalid_argument("geom_ent_tail: n must be >= 1");
  if (!(k >= 1.0)) throw std::invalid_argument("geom_ent_tail: k must be >= 1");
  if (!(delta >= 0.0)) throw std::invalid_argument("geom_ent_tail: delta must be >= 0");
  if (!(eps >= 0.0)) throw std::invalid_argument("geom_ent_tail: eps must be >= 0");
  GeomEntTailResult out;
  const double exp2_part = k * std::log2(2.0 * k) + 4.0 * n * std::log2(10.0 * n) - k * delta +
                           4.0 * n * (n - delta);
  const double ln_general = std::log1p(eps) + exp2_part * std::numbers::ln2;
  out.log2_general = ln_general / std::numbers::ln2;
  const bool corollary_regime = n >= 2.0 && std::abs(k - n * n) < 1e-9 &&
                                std::abs(delta - (3.0 * std::log2(n) + 5.0)) < 1e-9 &&
                                std::abs(eps - 1.0) < 1e-12;
  if (corollary_regime) {
    out.corollary = true;
    out.bound = BoundResult::from_ln(std::numbers::ln2 - n * n * std::log(n));
  } else {
    out.bound = BoundResult::from_ln(ln_general);
  }
  return out;
}

// Universal floor: any nonvacuous tail probability over an explicit ensemble
// is at least the smallest selection probability.
inline double pmin_floor(const UnitaryEnsemble& ens) { return ens.pmin(); }

}  // namespace designlab
