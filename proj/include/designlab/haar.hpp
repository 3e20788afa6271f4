#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "designlab/numkit.hpp"
#include "designlab/rng.hpp"

namespace designlab {

// Product of matrix entries: prod_j U(p_j, q_j) * prod_j conj(U(r_j, s_j)).
struct MonomialSpec {
  std::vector<std::pair<Index, Index>> plain;  // (p, q) -> factor U(p, q)
  std::vector<std::pair<Index, Index>> conj;   // (r, s) -> factor conj(U(r, s))

  bool balanced() const { return plain.size() == conj.size(); }

  // Degree of a balanced monomial (factor count per side).
  int degree() const {
    return static_cast<int>(std::max(plain.size(), conj.size()));
  }

  void check_indices(Index d) const {
    for (const auto& [p, q] : plain)
      if (p < 0 || p >= d || q < 0 || q >= d)
        throw std::invalid_argument("MonomialSpec: index out of range");
    for (const auto& [r, s] : conj)
      if (r < 0 || r >= d || s < 0 || s >= d)
        throw std::invalid_argument("MonomialSpec: index out of range");
  }

  Complex evaluate(const CMat& u) const {
    Complex v = 1.0;
    for (const auto& [p, q] : plain) v *= u(p, q);
    for (const auto& [r, s] : conj) v *= std::conj(u(r, s));
    return v;
  }
};

// Haar-distributed unitary: complex Ginibre matrix, QR decomposition, R-phase
// correction so the result is exactly Haar rather than QR-convention biased.
inline CMat sample_haar(Index d, RngStream& rng) {
  if (d < 1 || d > kMaxStateDim) throw std::invalid_argument("sample_haar: bad dim");
  CMat g(d, d);
  for (Index j = 0; j < d; ++j)
    for (Index i = 0; i < d; ++i) g(i, j) = rng.complex_normal();
  Eigen::HouseholderQR<CMat> qr(g);
  CMat q = qr.householderQ() * CMat::Identity(d, d);
  const CMat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < d; ++j) {
    const Complex rjj = r(j, j);
    const double a = std::abs(rjj);
    q.col(j) *= (a > 1e-300) ? rjj / a : Complex(1.0, 0.0);
  }
  return q;
}

inline DensityMatrix haar_twirl_k1(const DensityMatrix& rho) {
  return DensityMatrix::maximally_mixed(rho.dim());
}

// Two-copy twirl restricted to span{I, F}; valid for any operator input.
inline CMat haar_twirl_k2(const CMat& rho, Index d) {
  if (rho.rows() != d * d || rho.cols() != d * d) {
    throw std::invalid_argument("haar_twirl_k2: input must act on d^2");
  }
  if (d == 1) return rho;
  const CMat f = swap_operator(d);
  const Complex t_i = rho.trace();
  const Complex t_f = (f * rho).trace();
  // Gram system for coefficients on {I, F}: tr(I I)=d^2, tr(I F)=d.
  const double dd = static_cast<double>(d);
  const double det = dd * dd * dd * dd - dd * dd;
  const Complex c_i = (dd * dd * t_i - dd * t_f) / det;
  const Complex c_f = (dd * dd * t_f - dd * t_i) / det;
  return c_i * CMat::Identity(d * d, d * d) + c_f * f;
}

// Two-copy twirl of |psi><psi| (x) |psi><psi| for pure psi: the result is
// the normalized symmetric projector (I + F) / (d (d + 1)) for every psi.
inline DensityMatrix haar_twirl_k2_pure(const DensityMatrix& rho, Index d) {
  if (rho.dim() != d * d) throw std::invalid_argument("haar_twirl_k2_pure: dims mismatch");
  const CMat f = swap_operator(d);
  if (std::abs((f * rho.mat).trace() - Complex(1.0, 0.0)) > 1e-8) {
    throw std::invalid_argument(
        "haar_twirl_k2_pure: input is not a two-fold product pure state");
  }
  const double dd = static_cast<double>(d);
  CMat out = (CMat::Identity(d * d, d * d) + f) / (dd * (dd + 1.0));
  return DensityMatrix{std::move(out)};
}

inline std::uint64_t sym_dim(Index d, int k) {
  if (d < 1 || k < 0) throw std::invalid_argument("sym_dim: bad args");
  // C(d + k - 1, k) with overflow-safe incremental products.
  std::uint64_t num = 1;
  for (int i = 1; i <= k; ++i) {
    const std::uint64_t factor = static_cast<std::uint64_t>(d) + k - i;
    if (num > (std::uint64_t{1} << 62) / std::max<std::uint64_t>(factor, 1)) {
      throw BudgetExceeded("sym_dim: overflow");
    }
    num = num * factor / i;  // exact: product of i consecutive integers divisible by i!
  }
  return num;
}

// Projector onto the symmetric subspace of (C^d)^(x k).
inline CMat sym_projector(Index d, int k) {
  if (k < 1) throw std::invalid_argument("sym_projector: k must be >= 1");
  std::uint64_t dk = 1;
  for (int i = 0; i < k; ++i) {
    dk *= static_cast<std::uint64_t>(d);
    if (dk > kMaxStateDim) throw BudgetExceeded("sym_projector: d^k exceeds state cap");
  }
  const Index dim = static_cast<Index>(dk);
  // Multi-index digits of each basis label, most significant factor first.
  std::vector<std::vector<Index>> digits(dim, std::vector<Index>(k));
  for (Index x = 0; x < dim; ++x) {
    Index t = x;
    for (int j = k - 1; j >= 0; --j) {
      digits[x][j] = t % d;
      t /= d;
    }
  }
  CMat p = CMat::Zero(dim, dim);
  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  double count = 0.0;
  do {
    for (Index x = 0; x < dim; ++x) {
      Index y = 0;
      for (int j = 0; j < k; ++j) y = y * d + digits[x][perm[j]];
      p(y, x) += 1.0;
    }
    count += 1.0;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return p / count;
}

struct MonomialEstimate {
  Complex value;
  double std_error = 0.0;  // zero for exact evaluation
};

// Exact Haar average of a balanced monomial of degree <= 2.
inline MonomialEstimate haar_monomial_exact(const MonomialSpec& m, Index d) {
  m.check_indices(d);
  if (!m.balanced()) {
    throw std::invalid_argument("haar_monomial_exact: monomial must be balanced");
  }
  const int deg = m.degree();
  if (deg > 2) {
    throw std::invalid_argument("haar_monomial_exact: exact mode supports degree <= 2");
  }
  if (deg == 0) return {Complex(1.0, 0.0), 0.0};
  if (d == 1) return {Complex(1.0, 0.0), 0.0};
  const auto delta = [](Index a, Index b) { return a == b ? 1.0 : 0.0; };
  if (deg == 1) {
    const auto [p, q] = m.plain[0];
    const auto [r, s] = m.conj[0];
    return {Complex(delta(p, r) * delta(q, s) / static_cast<double>(d), 0.0), 0.0};
  }
  const auto [p1, q1] = m.plain[0];
  const auto [p2, q2] = m.plain[1];
  const auto [r1, s1] = m.conj[0];
  const auto [r2, s2] = m.conj[1];
  const double dd = static_cast<double>(d);
  const double direct = delta(p1, r1) * delta(p2, r2) * delta(q1, s1) * delta(q2, s2) +
                        delta(p1, r2) * delta(p2, r1) * delta(q1, s2) * delta(q2, s1);
  const double crossed = delta(p1, r1) * delta(p2, r2) * delta(q1, s2) * delta(q2, s1) +
                         delta(p1, r2) * delta(p2, r1) * delta(q1, s1) * delta(q2, s2);
  const double v = direct / (dd * dd - 1.0) - crossed / (dd * (dd * dd - 1.0));
  return {Complex(v, 0.0), 0.0};
}

inline MonomialEstimate haar_monomial_mc(const MonomialSpec& m, Index d, int n_samples,
                                         RngStream& rng) {
  m.check_indices(d);
  if (n_samples < 2) throw std::invalid_argument("haar_monomial_mc: need n_samples >= 2");
  Complex sum = 0.0;
  double sumsq = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    const CMat u = sample_haar(d, rng);
    const Complex v = m.evaluate(u);
    sum += v;
    sumsq += std::norm(v);
  }
  const Complex mean = sum / static_cast<double>(n_samples);
  const double var = std::max(0.0, sumsq / n_samples - std::norm(mean));
  return {mean, std::sqrt(var / n_samples)};
}

// Average purity of the reduced state of a Haar-random bipartite pure state.
inline double expected_purity(const BipartiteDims& dims) {
  const double ds = static_cast<double>(dims.d_s);
  const double de = static_cast<double>(dims.d_e);
  return (ds + de) / (ds * de + 1.0);
}

}  // namespace designlab
