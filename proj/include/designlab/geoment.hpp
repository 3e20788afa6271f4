#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "designlab/numkit.hpp"
#include "designlab/rng.hpp"

namespace designlab {

struct GeomEntEstimate {
  double e_g = 0.0;           // -log2(best squared overlap)
  double best_overlap = 0.0;  // squared overlap with the best product state found
  std::vector<Eigen::Vector2cd> witness;
  int sweeps_used = 0;
};

namespace geoment_detail {

// Contract psi against all local vectors except qubit j; returns the
// 2-vector whose norm is the overlap attainable by optimizing qubit j.
inline Eigen::Vector2cd partial_contract(const CVec& psi, const std::vector<Eigen::Vector2cd>& a,
                                         int n, int j) {
  Eigen::Vector2cd v = Eigen::Vector2cd::Zero();
  const Index dim = psi.size();
  for (Index x = 0; x < dim; ++x) {
    Complex c = psi[x];
    for (int i = 0; i < n; ++i) {
      if (i == j) continue;
      const int bit = static_cast<int>((x >> (n - 1 - i)) & 1);
      c *= std::conj(a[i][bit]);
    }
    const int bj = static_cast<int>((x >> (n - 1 - j)) & 1);
    v[bj] += c;
  }
  return v;
}

inline Eigen::Vector2cd random_qubit(RngStream& rng) {
  Eigen::Vector2cd v;
  v[0] = rng.complex_normal();
  v[1] = rng.complex_normal();
  return v / v.norm();
}

}  // namespace geoment_detail

// Best product-state overlap by alternating optimization: holding all local
// vectors but one fixed, the optimal vector is the normalized partial
// contraction. Block-coordinate ascent, best over random restarts.
inline GeomEntEstimate geom_ent_estimate(const PureState& psi, int n_qubits, RngStream& rng,
                                         int restarts = 50, double tol = 1e-12,
                                         int max_sweeps = 10000) {
  using namespace geoment_detail;
  if (n_qubits < 1 || n_qubits > 12) {
    throw std::invalid_argument("geom_ent_estimate: n must be in [1, 12]");
  }
  if ((Index{1} << n_qubits) != psi.dim()) {
    throw std::invalid_argument("geom_ent_estimate: dim != 2^n");
  }
  if (restarts < 1) throw std::invalid_argument("geom_ent_estimate: restarts must be >= 1");
  psi.check_normalized();

  GeomEntEstimate best;
  best.best_overlap = -1.0;
  for (int r = 0; r < restarts; ++r) {
    std::vector<Eigen::Vector2cd> a(n_qubits);
    for (auto& v : a) v = random_qubit(rng);
    double overlap = 0.0;
    int sweep = 0;
    for (; sweep < max_sweeps; ++sweep) {
      double last = overlap;
      for (int j = 0; j < n_qubits; ++j) {
        const Eigen::Vector2cd v = partial_contract(psi.amps, a, n_qubits, j);
        const double nv = v.norm();
        if (nv > 1e-300) {
          a[j] = v / nv;
          overlap = nv * nv;
        }
      }
      if (std::abs(overlap - last) < tol) break;
    }
    if (sweep == max_sweeps) {
      throw std::runtime_error("geom_ent_estimate: no convergence within sweep limit");
    }
    if (overlap > best.best_overlap) {
      best.best_overlap = overlap;
      best.witness = a;
      best.sweeps_used = sweep + 1;
    }
  }
  best.e_g = -std::log2(best.best_overlap);
  return best;
}

struct OverlapInterval {
  double lower = 0.0;  // largest overlap found on the net (achievable)
  double upper = 1.0;  // lower + continuity slack, caps the true supremum
  std::uint64_t net_points_per_qubit = 0;
};

namespace geoment_detail {

// Latitude-ring grid on the Bloch sphere with great-circle covering radius
// <= step: rows spaced step apart, ring points spaced so the parallel arc
// between neighbors is <= step.
inline std::vector<Eigen::Vector2cd> bloch_net(double step) {
  std::vector<Eigen::Vector2cd> net;
  const int rows = static_cast<int>(std::ceil(std::numbers::pi / step));
  for (int i = 0; i < rows; ++i) {
    const double theta = (i + 0.5) * std::numbers::pi / rows;
    const int cols = std::max(
        1, static_cast<int>(std::ceil(2.0 * std::numbers::pi * std::sin(theta) / step)));
    for (int j = 0; j < cols; ++j) {
      const double phi = (j + 0.5) * 2.0 * std::numbers::pi / cols;
      Eigen::Vector2cd v;
      v[0] = std::cos(theta / 2.0);
      v[1] = std::polar(std::sin(theta / 2.0), phi);
      net.push_back(v);
    }
  }
  return net;
}

}  // namespace geoment_detail

// Brackets sup |<product|psi>|^2 by exhausting a product net over the first
// n-1 qubits (the last qubit optimum is the closed-form partial contraction).
// A Bloch covering radius of Theta gives per-qubit phase-minimized chordal
// distance <= 2 sin(Theta/4), and the squared overlap is 2-Lipschitz in the
// product state, so the slack is 2 (n-1) 2 sin(Theta/4) <= gamma.
inline OverlapInterval geom_ent_net_certify(const PureState& psi, int n_qubits, double gamma,
                                            std::uint64_t budget = 100'000'000) {
  using namespace geoment_detail;
  if (n_qubits < 1 || n_qubits > 3) {
    throw std::invalid_argument("geom_ent_net_certify: n must be in [1, 3]");
  }
  if ((Index{1} << n_qubits) != psi.dim()) {
    throw std::invalid_argument("geom_ent_net_certify: dim != 2^n");
  }
  if (!(gamma > 0.0)) throw std::invalid_argument("geom_ent_net_certify: gamma must be positive");
  psi.check_normalized();

  OverlapInterval out;
  if (n_qubits == 1) {
    out.lower = 1.0;
    out.upper = 1.0;
    out.net_points_per_qubit = 1;
    return out;
  }
  const int free_qubits = n_qubits - 1;
  const double chordal = gamma / (2.0 * free_qubits);
  const double step = 4.0 * std::asin(std::min(1.0, chordal / 2.0));
  const std::vector<Eigen::Vector2cd> net = bloch_net(step);
  out.net_points_per_qubit = net.size();
  std::uint64_t total = 1;
  for (int i = 0; i < free_qubits; ++i) {
    if (total > budget / net.size()) {
      throw BudgetExceeded("geom_ent_net_certify: net exceeds the point budget");
    }
    total *= net.size();
  }

  double best = 0.0;
  if (n_qubits == 2) {
    for (const auto& a0 : net) {
      Eigen::Vector2cd v;
      v[0] = std::conj(a0[0]) * psi.amps[0] + std::conj(a0[1]) * psi.amps[2];
      v[1] = std::conj(a0[0]) * psi.amps[1] + std::conj(a0[1]) * psi.amps[3];
      best = std::max(best, v.squaredNorm());
    }
  } else {
    Eigen::Vector4cd half;
    for (const auto& a0 : net) {
      for (Index y = 0; y < 4; ++y) {
        half[y] = std::conj(a0[0]) * psi.amps[y] + std::conj(a0[1]) * psi.amps[4 + y];
      }
      for (const auto& a1 : net) {
        Eigen::Vector2cd v;
        v[0] = std::conj(a1[0]) * half[0] + std::conj(a1[1]) * half[2];
        v[1] = std::conj(a1[0]) * half[1] + std::conj(a1[1]) * half[3];
        best = std::max(best, v.squaredNorm());
      }
    }
  }
  out.lower = best;
  out.upper = std::min(1.0, best + gamma);
  return out;
}

}  // namespace designlab
