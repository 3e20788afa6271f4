#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace designlab {

using Complex = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using Index = Eigen::Index;

// Thrown when a request would exceed a hard size or work budget.
struct BudgetExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr Index kMaxStateDim = 4096;
inline constexpr std::uint64_t kMaxMatrixEntries = std::uint64_t{1} << 26;
inline constexpr double kHermTol = 1e-10;
inline constexpr double kTraceTol = 1e-10;
inline constexpr double kEigClipTol = 1e-10;
inline constexpr double kUnitaryTol = 1e-10;

inline void check_entry_budget(std::uint64_t rows, std::uint64_t cols,
                               const char* what) {
  if (rows == 0 || cols == 0) throw std::invalid_argument(std::string(what) + ": empty shape");
  if (rows > kMaxMatrixEntries / cols) {
    throw BudgetExceeded(std::string(what) + ": result exceeds the " +
                         std::to_string(kMaxMatrixEntries) + "-entry cap");
  }
}

struct BipartiteDims {
  Index d_s = 1;  // subsystem kept by partial_trace(..., Keep::system)
  Index d_e = 1;

  BipartiteDims(Index s, Index e) : d_s(s), d_e(e) {
    if (s < 1 || e < 1) throw std::invalid_argument("BipartiteDims: dims must be >= 1");
    check_entry_budget(static_cast<std::uint64_t>(s) * e,
                       static_cast<std::uint64_t>(s) * e, "BipartiteDims");
  }

  Index d() const { return d_s * d_e; }
};

enum class Keep { system, environment };

struct PureState {
  CVec amps;

  Index dim() const { return amps.size(); }

  static PureState normalized(CVec v) {
    if (v.size() < 1) throw std::invalid_argument("PureState: empty vector");
    if (v.size() > kMaxStateDim) {
      throw BudgetExceeded("PureState: dimension exceeds " + std::to_string(kMaxStateDim));
    }
    const double n = v.norm();
    if (!(n > 1e-14)) throw std::invalid_argument("PureState: zero vector");
    return PureState{v / n};
  }

  void check_normalized(double tol = 1e-10) const {
    if (std::abs(amps.norm() - 1.0) > tol) {
      throw std::invalid_argument("PureState: not normalized");
    }
  }
};

inline CVec basis_state(Index d, Index i) {
  if (i < 0 || i >= d) throw std::invalid_argument("basis_state: index out of range");
  CVec v = CVec::Zero(d);
  v[i] = 1.0;
  return v;
}

struct DensityMatrix {
  CMat mat;

  Index dim() const { return mat.rows(); }

  // Validates hermiticity, unit trace, and positivity up to the clip
  // tolerance; eigenvalues in [-1e-10, 0) are treated as zero downstream.
  static DensityMatrix from_matrix(CMat m) {
    if (m.rows() != m.cols() || m.rows() < 1) {
      throw std::invalid_argument("DensityMatrix: not square");
    }
    if (m.rows() > kMaxStateDim) {
      throw BudgetExceeded("DensityMatrix: dimension exceeds " + std::to_string(kMaxStateDim));
    }
    if ((m - m.adjoint()).cwiseAbs().maxCoeff() > kHermTol) {
      throw std::invalid_argument("DensityMatrix: not Hermitian");
    }
    if (std::abs(m.trace().real() - 1.0) > kTraceTol || std::abs(m.trace().imag()) > kTraceTol) {
      throw std::invalid_argument("DensityMatrix: trace != 1");
    }
    Eigen::SelfAdjointEigenSolver<CMat> es(m, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -kEigClipTol) {
      throw std::invalid_argument("DensityMatrix: negative eigenvalue beyond clip tolerance");
    }
    return DensityMatrix{std::move(m)};
  }

  static DensityMatrix pure(const PureState& psi) {
    psi.check_normalized();
    return DensityMatrix{psi.amps * psi.amps.adjoint()};
  }

  static DensityMatrix maximally_mixed(Index d) {
    if (d < 1 || d > kMaxStateDim) throw std::invalid_argument("maximally_mixed: bad dim");
    return DensityMatrix{CMat::Identity(d, d) / static_cast<double>(d)};
  }
};

inline CMat kron(const CMat& a, const CMat& b) {
  check_entry_budget(static_cast<std::uint64_t>(a.rows()) * b.rows(),
                     static_cast<std::uint64_t>(a.cols()) * b.cols(), "kron");
  CMat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

// k-fold Kronecker power.
inline CMat kron_pow(const CMat& a, int k) {
  if (k < 1) throw std::invalid_argument("kron_pow: k must be >= 1");
  CMat out = a;
  for (int i = 1; i < k; ++i) out = kron(out, a);
  return out;
}

inline DensityMatrix partial_trace(const DensityMatrix& rho, const BipartiteDims& dims,
                                   Keep keep) {
  if (rho.dim() != dims.d()) {
    throw std::invalid_argument("partial_trace: dims mismatch");
  }
  const Index ds = dims.d_s;
  const Index de = dims.d_e;
  if (keep == Keep::system) {
    CMat out = CMat::Zero(ds, ds);
    for (Index i = 0; i < ds; ++i)
      for (Index j = 0; j < ds; ++j)
        for (Index e = 0; e < de; ++e) out(i, j) += rho.mat(i * de + e, j * de + e);
    return DensityMatrix{std::move(out)};
  }
  CMat out = CMat::Zero(de, de);
  for (Index a = 0; a < de; ++a)
    for (Index b = 0; b < de; ++b)
      for (Index s = 0; s < ds; ++s) out(a, b) += rho.mat(s * de + a, s * de + b);
  return DensityMatrix{std::move(out)};
}

inline double purity(const DensityMatrix& rho) {
  return (rho.mat * rho.mat).trace().real();
}

namespace detail {

inline Eigen::VectorXd clipped_spectrum(const DensityMatrix& rho) {
  Eigen::SelfAdjointEigenSolver<CMat> es(rho.mat, Eigen::EigenvaluesOnly);
  Eigen::VectorXd ev = es.eigenvalues();
  for (Index i = 0; i < ev.size(); ++i) {
    if (ev[i] < 0.0) {
      if (ev[i] < -kEigClipTol) {
        throw std::invalid_argument("spectrum: negative eigenvalue beyond clip tolerance");
      }
      ev[i] = 0.0;
    }
  }
  return ev;
}

}  // namespace detail

// Entropies in bits (log base 2).
inline double von_neumann_entropy(const DensityMatrix& rho) {
  const Eigen::VectorXd ev = detail::clipped_spectrum(rho);
  double s = 0.0;
  for (Index i = 0; i < ev.size(); ++i) {
    if (ev[i] > 0.0) s -= ev[i] * std::log2(ev[i]);
  }
  return s;
}

inline double renyi2_entropy(const DensityMatrix& rho) {
  return -std::log2(purity(rho));
}

inline double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma) {
  if (rho.dim() != sigma.dim()) throw std::invalid_argument("trace_distance: dims mismatch");
  Eigen::SelfAdjointEigenSolver<CMat> es(rho.mat - sigma.mat, Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

// Swap operator on C^d (x) C^d: F |i>|j> = |j>|i>.
inline CMat swap_operator(Index d) {
  check_entry_budget(static_cast<std::uint64_t>(d) * d, static_cast<std::uint64_t>(d) * d,
                     "swap_operator");
  CMat f = CMat::Zero(d * d, d * d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) f(j * d + i, i * d + j) = 1.0;
  return f;
}

inline bool is_unitary(const CMat& u, double tol = kUnitaryTol) {
  if (u.rows() != u.cols()) return false;
  return (u.adjoint() * u - CMat::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace designlab
