#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "designlab/ensembles.hpp"
#include "designlab/haar.hpp"
#include "designlab/numkit.hpp"
#include "designlab/rng.hpp"

namespace designlab {

struct DesignSpec {
  Index d = 2;
  int k = 1;
  double eps = 1e-9;

  void validate() const {
    if (d < 1 || k < 1) throw std::invalid_argument("DesignSpec: d, k must be positive");
    if (!(eps > 0.0)) throw std::invalid_argument("DesignSpec: eps must be positive");
  }

  double threshold() const { return eps * std::pow(static_cast<double>(d), -k); }
};

struct CertOptions {
  std::uint64_t exhaustive_budget = 10'000'000;  // max total monomial count d^(4m), summed
  int haar_mc_samples = 50000;                   // Haar side when degree > 2
  int monomial_samples = 200;                    // sampled strategy: tuples per degree
  int ensemble_mc_samples = 50000;               // generator-ensemble side draws
  std::uint64_t rng_seed = 7;
};

struct CertReport {
  DesignSpec spec;
  double threshold = 0.0;
  double max_deviation = 0.0;
  double max_std_error = 0.0;  // zero when both sides are exact
  MonomialSpec worst;
  std::string mode;  // "exhaustive" or "sampled(N)"
  bool pass = false;
  std::vector<double> per_degree;  // max deviation found at each degree 1..k
};

namespace certify_detail {

inline std::uint64_t pow_u64(std::uint64_t base, int e, std::uint64_t cap) {
  std::uint64_t r = 1;
  for (int i = 0; i < e; ++i) {
    if (r > cap / base) return cap + 1;
    r *= base;
  }
  return r;
}

inline std::vector<Index> digits_of(Index x, Index d, int m) {
  std::vector<Index> v(m);
  for (int j = m - 1; j >= 0; --j) {
    v[j] = x % d;
    x /= d;
  }
  return v;
}

// Monomial addressed by an entry of the degree-m moment superoperator
// (column-stacking convention): row = (r_vec, p_vec), col = (s_vec, q_vec).
inline MonomialSpec monomial_at(Index row, Index col, Index d, int m) {
  Index dm = 1;
  for (int i = 0; i < m; ++i) dm *= d;
  MonomialSpec spec;
  const auto pv = digits_of(row % dm, d, m);
  const auto rv = digits_of(row / dm, d, m);
  const auto qv = digits_of(col % dm, d, m);
  const auto sv = digits_of(col / dm, d, m);
  for (int j = 0; j < m; ++j) {
    spec.plain.emplace_back(pv[j], qv[j]);
    spec.conj.emplace_back(rv[j], sv[j]);
  }
  return spec;
}

// Entries whose row/column index multisets are unbalanced average to zero
// under Haar (diagonal-phase invariance), exactly.
inline bool haar_structural_zero(Index row, Index col, Index d, int m) {
  Index dm = 1;
  for (int i = 0; i < m; ++i) dm *= d;
  auto pv = digits_of(row % dm, d, m);
  auto rv = digits_of(row / dm, d, m);
  auto qv = digits_of(col % dm, d, m);
  auto sv = digits_of(col / dm, d, m);
  std::sort(pv.begin(), pv.end());
  std::sort(rv.begin(), rv.end());
  std::sort(qv.begin(), qv.end());
  std::sort(sv.begin(), sv.end());
  return pv != rv || qv != sv;
}

inline CMat elementwise_superop(const std::vector<CMat>& els, const std::vector<double>& w) {
  const Index dm = els[0].rows();
  CMat t = CMat::Zero(dm * dm, dm * dm);
  for (std::size_t i = 0; i < els.size(); ++i) {
    t += w[i] * kron(els[i].conjugate(), els[i]);
  }
  return t;
}

inline CMat matrix_power(CMat base, int t) {
  CMat acc = CMat::Identity(base.rows(), base.cols());
  while (t > 0) {
    if (t & 1) acc = acc * base;
    base = base * base;
    t >>= 1;
  }
  return acc;
}

}  // namespace certify_detail

// Degree-m moment superoperator sum_i w_i kron(conj(U_i^(x m)), U_i^(x m));
// entries are exactly the ensemble averages of balanced degree-m monomials.
// Iterated ensembles take the t-th matrix power of the base operator.
inline CMat moment_superoperator(const UnitaryEnsemble& ens, int m,
                                 std::uint64_t budget = 10'000'000) {
  using namespace certify_detail;
  if (m < 1) throw std::invalid_argument("moment_superoperator: m must be >= 1");
  if (!ens.enumerable()) {
    throw std::invalid_argument("moment_superoperator: requires an explicit ensemble");
  }
  const std::uint64_t entries = pow_u64(static_cast<std::uint64_t>(ens.dim()), 4 * m, budget);
  if (entries > budget) throw BudgetExceeded("moment_superoperator: d^(4m) exceeds budget");
  std::vector<CMat> powers;
  powers.reserve(ens.size());
  for (const CMat& u : ens.elements()) powers.push_back(kron_pow(u, m));
  CMat t = elementwise_superop(powers, ens.weights());
  if (ens.iterated()) t = matrix_power(std::move(t), ens.iterations());
  return t;
}

// Exact Haar moment superoperator; degrees 1 and 2 only.
inline CMat haar_moment_superoperator(Index d, int m) {
  if (m == 1) {
    CMat t = CMat::Zero(d * d, d * d);
    for (Index p = 0; p < d; ++p)
      for (Index q = 0; q < d; ++q) t(p * d + p, q * d + q) = 1.0 / static_cast<double>(d);
    return t;
  }
  if (m == 2) {
    // Orthogonal projection onto span{I, F} in Hilbert-Schmidt geometry.
    const Index dd = d * d;
    if (d == 1) return CMat::Identity(1, 1);
    CMat ivec(dd * dd, 1), fvec(dd * dd, 1);
    const CMat idm = CMat::Identity(dd, dd);
    const CMat f = swap_operator(d);
    for (Index c = 0; c < dd; ++c) {
      ivec.block(c * dd, 0, dd, 1) = idm.col(c);
      fvec.block(c * dd, 0, dd, 1) = f.col(c);
    }
    const double dr = static_cast<double>(d);
    const double det = dr * dr * dr * dr - dr * dr;
    const double gi = dr * dr / det;   // inverse Gram diagonal
    const double gx = -dr / det;       // inverse Gram off-diagonal
    return gi * (ivec * ivec.adjoint()) + gx * (ivec * fvec.adjoint()) +
           gx * (fvec * ivec.adjoint()) + gi * (fvec * fvec.adjoint());
  }
  throw std::invalid_argument("haar_moment_superoperator: exact only for m <= 2");
}

struct McSuperop {
  CMat mean;
  Eigen::MatrixXd std_error;
};

// Monte Carlo Haar moment superoperator with per-entry standard errors;
// structurally zero entries are pinned to exact zero.
inline McSuperop haar_moment_superoperator_mc(Index d, int m, int n_samples, RngStream& rng) {
  using namespace certify_detail;
  if (n_samples < 2) throw std::invalid_argument("haar_moment_superoperator_mc: n too small");
  Index dm = 1;
  for (int i = 0; i < m; ++i) {
    dm *= d;
    if (dm > kMaxStateDim) throw BudgetExceeded("haar_moment_superoperator_mc: d^m too large");
  }
  const Index dim = dm * dm;
  CMat sum = CMat::Zero(dim, dim);
  Eigen::MatrixXd sumsq = Eigen::MatrixXd::Zero(dim, dim);
  for (int i = 0; i < n_samples; ++i) {
    const CMat u = sample_haar(d, rng);
    const CMat um = kron_pow(u, m);
    const CMat term = kron(um.conjugate(), um);
    sum += term;
    sumsq += term.cwiseAbs2();
  }
  McSuperop out;
  out.mean = sum / static_cast<double>(n_samples);
  out.std_error.resize(dim, dim);
  for (Index r = 0; r < dim; ++r) {
    for (Index c = 0; c < dim; ++c) {
      if (haar_structural_zero(r, c, d, m)) {
        out.mean(r, c) = 0.0;
        out.std_error(r, c) = 0.0;
      } else {
        const double var =
            std::max(0.0, sumsq(r, c) / n_samples - std::norm(out.mean(r, c)));
        out.std_error(r, c) = std::sqrt(var / n_samples);
      }
    }
  }
  return out;
}

struct DeviationEstimate {
  double deviation = 0.0;
  double std_error = 0.0;
};

// |E_nu M - E_H M| for a single balanced monomial. Exact where possible
// (explicit non-iterated ensemble side, Haar side for degree <= 2).
inline DeviationEstimate monomial_deviation(const UnitaryEnsemble& ens, const MonomialSpec& m,
                                            const CertOptions& opt = {}) {
  if (!m.balanced()) throw std::invalid_argument("monomial_deviation: monomial must be balanced");
  m.check_indices(ens.dim());
  const int deg = m.degree();
  if (deg == 0) return {0.0, 0.0};

  Complex ens_mean;
  double ens_se = 0.0;
  if (ens.enumerable() && !ens.iterated()) {
    ens_mean = 0.0;
    for (std::size_t i = 0; i < ens.size(); ++i) {
      ens_mean += ens.weights()[i] * m.evaluate(ens.elements()[i]);
    }
  } else {
    RngStream rng(opt.rng_seed, 0x0e5a);
    Complex sum = 0.0;
    double sumsq = 0.0;
    for (int i = 0; i < opt.ensemble_mc_samples; ++i) {
      const Complex v = m.evaluate(ens.sample(rng));
      sum += v;
      sumsq += std::norm(v);
    }
    ens_mean = sum / static_cast<double>(opt.ensemble_mc_samples);
    const double var = std::max(0.0, sumsq / opt.ensemble_mc_samples - std::norm(ens_mean));
    ens_se = std::sqrt(var / opt.ensemble_mc_samples);
  }

  MonomialEstimate haar;
  if (deg <= 2) {
    haar = haar_monomial_exact(m, ens.dim());
  } else {
    RngStream rng(opt.rng_seed, 0x4aa2);
    haar = haar_monomial_mc(m, ens.dim(), opt.haar_mc_samples, rng);
  }
  return {std::abs(ens_mean - haar.value), ens_se + haar.std_error};
}

enum class CertStrategy { automatic, exhaustive, sampled };

// Scan balanced monomials of every degree m <= k against Haar and compare
// the worst deviation with eps/d^k.
inline CertReport certify_unitary_design(const UnitaryEnsemble& ens, const DesignSpec& spec,
                                         CertStrategy strategy = CertStrategy::automatic,
                                         const CertOptions& opt = {}) {
  using namespace certify_detail;
  spec.validate();
  if (ens.dim() != spec.d) throw std::invalid_argument("certify: ensemble dim != spec.d");

  std::uint64_t total_entries = 0;
  for (int m = 1; m <= spec.k; ++m) {
    const std::uint64_t e =
        pow_u64(static_cast<std::uint64_t>(spec.d), 4 * m, opt.exhaustive_budget);
    total_entries = std::min(total_entries + e, opt.exhaustive_budget + 1);
  }
  const bool can_exhaust = ens.enumerable() && total_entries <= opt.exhaustive_budget;
  bool exhaustive = false;
  if (strategy == CertStrategy::exhaustive) {
    if (!can_exhaust) {
      throw BudgetExceeded("certify: exhaustive scan exceeds monomial budget");
    }
    exhaustive = true;
  } else if (strategy == CertStrategy::automatic) {
    exhaustive = can_exhaust;
  }

  CertReport rep;
  rep.spec = spec;
  rep.threshold = spec.threshold();
  rep.per_degree.assign(spec.k, 0.0);
  bool any_mc = false;

  if (exhaustive) {
    RngStream rng(opt.rng_seed, 0xcafe);
    for (int m = 1; m <= spec.k; ++m) {
      const CMat t_ens = moment_superoperator(ens, m, opt.exhaustive_budget);
      CMat t_haar;
      Eigen::MatrixXd se;
      if (m <= 2) {
        t_haar = haar_moment_superoperator(spec.d, m);
        se = Eigen::MatrixXd::Zero(t_ens.rows(), t_ens.cols());
      } else {
        McSuperop mc = haar_moment_superoperator_mc(spec.d, m, opt.haar_mc_samples, rng);
        t_haar = std::move(mc.mean);
        se = std::move(mc.std_error);
        any_mc = true;
      }
      for (Index r = 0; r < t_ens.rows(); ++r) {
        for (Index c = 0; c < t_ens.cols(); ++c) {
          const double dev = std::abs(t_ens(r, c) - t_haar(r, c));
          rep.per_degree[m - 1] = std::max(rep.per_degree[m - 1], dev);
          if (dev > rep.max_deviation) {
            rep.max_deviation = dev;
            rep.worst = monomial_at(r, c, spec.d, m);
          }
          rep.max_std_error = std::max(rep.max_std_error, se(r, c));
        }
      }
    }
    rep.mode = any_mc ? "exhaustive+mc-haar" : "exhaustive";
  } else {
    RngStream rng(opt.rng_seed, 0x5a5a);
    for (int m = 1; m <= spec.k; ++m) {
      for (int s = 0; s < opt.monomial_samples; ++s) {
        MonomialSpec mono;
        for (int j = 0; j < m; ++j) {
          mono.plain.emplace_back(rng.uniform_int(spec.d), rng.uniform_int(spec.d));
          mono.conj.emplace_back(rng.uniform_int(spec.d), rng.uniform_int(spec.d));
        }
        const DeviationEstimate est = monomial_deviation(ens, mono, opt);
        rep.per_degree[m - 1] = std::max(rep.per_degree[m - 1], est.deviation);
        if (est.deviation > rep.max_deviation) {
          rep.max_deviation = est.deviation;
          rep.worst = mono;
        }
        rep.max_std_error = std::max(rep.max_std_error, est.std_error);
        any_mc = any_mc || est.std_error > 0.0;
      }
    }
    rep.mode = "sampled(" + std::to_string(opt.monomial_samples) + ")";
  }
  rep.pass = rep.max_deviation <= rep.threshold + 3.0 * rep.max_std_error;
  return rep;
}

struct StateDesignReport {
  double operator_norm = 0.0;   // largest singular value of the k-copy gap
  double eps_equivalent = 0.0;  // operator norm scaled by C(k+d-1, d-1)
  double std_error = 0.0;       // MC mode only (per-entry, propagated crudely)
  std::string mode;
};

// Distance of the averaged k-copy projector from the symmetric-subspace
// state: || E_nu (psi psi^dag)^(x k) - P_sym / C(k+d-1, d-1) ||_inf.
inline StateDesignReport state_design_deviation(const StateEnsemble& ens, int k,
                                                int mc_samples = 20000,
                                                std::uint64_t rng_seed = 7) {
  if (k < 1) throw std::invalid_argument("state_design_deviation: k must be >= 1");
  const Index d = ens.dim();
  std::uint64_t dk = 1;
  for (int i = 0; i < k; ++i) {
    dk *= static_cast<std::uint64_t>(d);
    if (dk > kMaxStateDim) throw BudgetExceeded("state_design_deviation: d^k too large");
  }
  const Index dim = static_cast<Index>(dk);

  const auto copy_projector = [&](const CVec& psi) {
    CVec v = psi;
    for (int i = 1; i < k; ++i) {
      CVec w(v.size() * d);
      for (Index a = 0; a < v.size(); ++a) w.segment(a * d, d) = v[a] * psi;
      v = std::move(w);
    }
    return v;
  };

  CMat avg = CMat::Zero(dim, dim);
  StateDesignReport rep;
  if (ens.enumerable()) {
    for (std::size_t i = 0; i < ens.size(); ++i) {
      const CVec v = copy_projector(ens.states()[i]);
      avg += ens.weights()[i] * (v * v.adjoint());
    }
    rep.mode = "exhaustive";
  } else {
    RngStream rng(rng_seed, 0x57a7e);
    for (int i = 0; i < mc_samples; ++i) {
      const CVec v = copy_projector(ens.sample(rng));
      avg += v * v.adjoint();
    }
    avg /= static_cast<double>(mc_samples);
    // Crude scale for the sampling noise of an averaged rank-1 projector.
    rep.std_error = std::sqrt(static_cast<double>(dim)) / std::sqrt(static_cast<double>(mc_samples));
    rep.mode = "sampled(" + std::to_string(mc_samples) + ")";
  }
  const double sd = static_cast<double>(sym_dim(d, k));
  const CMat gap = avg - sym_projector(d, k) / sd;
  Eigen::SelfAdjointEigenSolver<CMat> es(gap, Eigen::EigenvaluesOnly);
  rep.operator_norm = es.eigenvalues().cwiseAbs().maxCoeff();
  rep.eps_equivalent = rep.operator_norm * sd;
  return rep;
}

// Largest singular value of the deviation superoperator
// rho -> E_nu U^(x k) rho U^(x k)^dag - Haar twirl, via power iteration on
// the normal operator; exact Haar twirl limits k to 2.
inline double tpe_lambda(const UnitaryEnsemble& ens, int k, double tol = 1e-8,
                         int max_iters = 10000) {
  if (k < 1 || k > 2) throw std::invalid_argument("tpe_lambda: exact Haar twirl needs k <= 2");
  const Index d = ens.dim();
  std::uint64_t dk = 1;
  for (int i = 0; i < k; ++i) dk *= static_cast<std::uint64_t>(d);
  if (dk * dk > (std::uint64_t{1} << 13)) {
    throw BudgetExceeded("tpe_lambda: d^(2k) exceeds the 2^13 cap");
  }
  const Index n = static_cast<Index>(dk);
  if (!ens.enumerable()) throw std::invalid_argument("tpe_lambda: requires explicit ensemble");

  std::vector<CMat> powers;
  powers.reserve(ens.size());
  for (const CMat& u : ens.elements()) powers.push_back(k == 1 ? u : kron_pow(u, k));
  const std::vector<double>& w = ens.weights();
  const int iters = ens.iterations();

  const auto haar_part = [&](const CMat& x) -> CMat {
    if (k == 1) {
      return CMat(x.trace() / static_cast<double>(d) * CMat::Identity(d, d));
    }
    return haar_twirl_k2(x, d);
  };
  const auto delta_once = [&](const CMat& x) {
    CMat y = CMat::Zero(n, n);
    for (std::size_t i = 0; i < powers.size(); ++i) y += w[i] * (powers[i] * x * powers[i].adjoint());
    y -= haar_part(x);
    return y;
  };
  const auto delta_adj_once = [&](const CMat& x) {
    CMat y = CMat::Zero(n, n);
    for (std::size_t i = 0; i < powers.size(); ++i) y += w[i] * (powers[i].adjoint() * x * powers[i]);
    y -= haar_part(x);
    return y;
  };
  const auto apply_normal = [&](CMat x) {
    for (int t = 0; t < iters; ++t) x = delta_once(x);
    for (int t = 0; t < iters; ++t) x = delta_adj_once(x);
    return x;
  };

  RngStream rng(20240811, 0x9e37);
  CMat v(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) v(i, j) = rng.complex_normal();
  v /= v.norm();
  double est = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    const CMat w2 = apply_normal(v);
    const double norm = w2.norm();
    if (norm < 1e-250) return 0.0;
    const double next = std::sqrt(norm);  // ||Delta^dag Delta v|| approximates lambda^2
    v = w2 / norm;
    if (it > 0 && std::abs(next - est) <= tol * std::max(1.0, next)) return next;
    est = next;
  }
  throw std::runtime_error("tpe_lambda: power iteration did not converge");
}

}  // namespace designlab
