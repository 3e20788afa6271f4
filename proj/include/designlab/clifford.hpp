#pragma once

#include <bit>
#include <cstdint>
#include <deque>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "designlab/numkit.hpp"
#include "designlab/rng.hpp"

namespace designlab {

inline CMat gate_h() {
  CMat h(2, 2);
  const double s = 1.0 / std::sqrt(2.0);
  h << s, s, s, -s;
  return h;
}

inline CMat gate_s() {
  CMat s(2, 2);
  s << 1.0, 0.0, 0.0, Complex(0.0, 1.0);
  return s;
}

// Control on qubit 0 (most significant tensor factor), target on qubit 1.
inline CMat gate_cnot() {
  CMat c = CMat::Zero(4, 4);
  c(0, 0) = 1.0;
  c(1, 1) = 1.0;
  c(3, 2) = 1.0;
  c(2, 3) = 1.0;
  return c;
}

namespace clifford_detail {

// Pauli strings are packed as bit vectors: bit j of `x` / `z` addresses
// qubit j, and qubit 0 is the most significant tensor factor.
inline CMat pauli_matrix(int n, std::uint32_t x, std::uint32_t z) {
  CMat out = CMat::Ones(1, 1);
  for (int j = 0; j < n; ++j) {
    const bool xb = (x >> j) & 1;
    const bool zb = (z >> j) & 1;
    CMat p(2, 2);
    if (!xb && !zb) p << 1, 0, 0, 1;
    if (xb && !zb) p << 0, 1, 1, 0;
    if (xb && zb) p << 0, Complex(0, -1), Complex(0, 1), 0;
    if (!xb && zb) p << 1, 0, 0, -1;
    out = kron(out, p);
  }
  return out;
}

struct PauliLabel {
  std::uint32_t x = 0;
  std::uint32_t z = 0;
  int sign = 1;  // +1 or -1
};

// Reads off (x, z, sign) from a matrix known to equal a signed Hermitian
// Pauli string, validating the entries it inspects.
inline PauliLabel identify_pauli(const CMat& w, int n) {
  const Index d = Index{1} << n;
  if (w.rows() != d || w.cols() != d) throw std::invalid_argument("identify_pauli: bad shape");
  PauliLabel out;
  Index row = 0;
  double best = 0.0;
  for (Index r = 0; r < d; ++r) {
    const double a = std::abs(w(r, 0));
    if (a > best) {
      best = a;
      row = r;
    }
  }
  if (std::abs(best - 1.0) > 1e-6) throw std::invalid_argument("identify_pauli: not a Pauli");
  // Row index of the flipped |0...0> gives the x bits (qubit 0 is the
  // matrix msb, so reverse into the bit-j-per-qubit-j packing).
  for (int j = 0; j < n; ++j)
    if ((row >> (n - 1 - j)) & 1) out.x |= (1u << j);
  int ys = 0;
  for (int j = 0; j < n; ++j) {
    const Index col = Index{1} << (n - 1 - j);
    const Complex ratio = w(row ^ col, col) / w(row, 0);
    if (std::abs(std::abs(ratio) - 1.0) > 1e-6 || std::abs(ratio.imag()) > 1e-6) {
      throw std::invalid_argument("identify_pauli: not a Pauli");
    }
    if (ratio.real() < 0.0) out.z |= (1u << j);
    if (((out.x >> j) & 1) && ((out.z >> j) & 1)) ++ys;
  }
  // Predicted (row, 0) entry of +P is i^(#Y on flipped-and-phased qubits).
  Complex pred(1.0, 0.0);
  for (int t = 0; t < ys % 4; ++t) pred *= Complex(0.0, 1.0);
  const Complex s = w(row, 0) / pred;
  if (std::abs(s.imag()) > 1e-6 || std::abs(std::abs(s.real()) - 1.0) > 1e-6) {
    throw std::invalid_argument("identify_pauli: inconsistent sign");
  }
  out.sign = s.real() > 0.0 ? 1 : -1;
  return out;
}

// Conjugation tableau of U: images of X_j and Z_j as signed Pauli strings.
// Determines a Clifford element exactly, modulo global phase.
inline std::string tableau_key(const CMat& u, int n) {
  std::string key;
  for (int which = 0; which < 2; ++which) {
    for (int j = 0; j < n; ++j) {
      const CMat p = which == 0 ? pauli_matrix(n, 1u << j, 0) : pauli_matrix(n, 0, 1u << j);
      const PauliLabel lbl = identify_pauli(u * p * u.adjoint(), n);
      key += std::to_string(lbl.x) + "," + std::to_string(lbl.z) + "," +
             std::to_string(lbl.sign) + ";";
    }
  }
  return key;
}

inline CMat phase_normalize(const CMat& u) {
  for (Index i = 0; i < u.rows(); ++i) {
    for (Index j = 0; j < u.cols(); ++j) {
      const Complex e = u(i, j);
      if (std::abs(e) > 1e-8) return u * (std::conj(e) / std::abs(e));
    }
  }
  return u;
}

// Symplectic form on F_2^(2n): bits 0..n-1 x-part, bits n..2n-1 z-part.
inline int sp_form(std::uint32_t u, std::uint32_t v, int n) {
  const std::uint32_t xm = (1u << n) - 1;
  const std::uint32_t a = (u & xm) & ((v >> n) & xm);
  const std::uint32_t b = ((u >> n) & xm) & (v & xm);
  return (__builtin_popcount(a) + __builtin_popcount(b)) & 1;
}

// Uniform symplectic basis image: returns [v_1, w_1, ..., v_n, w_n] with
// sp(v_i, w_i) = 1 and all other pairings 0, distributed as the image of
// the standard basis under a uniform element of Sp(2n, 2). Each step draws
// a uniform nonzero v, then a uniform w with sp(v, w) = 1, then recurses on
// the symplectic complement (Gram-Schmidt over F_2).
inline std::vector<std::uint32_t> sample_symplectic_images(int n, RngStream& rng) {
  std::vector<std::uint32_t> basis(2 * n);
  for (int i = 0; i < 2 * n; ++i) basis[i] = 1u << i;
  std::vector<std::uint32_t> out;

  const auto random_combo = [&](const std::vector<std::uint32_t>& b) {
    std::uint32_t v = 0;
    for (std::uint32_t e : b)
      if (rng.next_u64() & 1) v ^= e;
    return v;
  };

  while (!basis.empty()) {
    std::uint32_t v = 0;
    while (v == 0) v = random_combo(basis);
    std::uint32_t w = random_combo(basis);
    if (sp_form(v, w, n) == 0) {
      std::uint32_t t = 0;
      for (std::uint32_t e : basis)
        if (sp_form(v, e, n) == 1) {
          t = e;
          break;
        }
      if (t == 0) throw std::logic_error("sample_symplectic_images: degenerate form");
      w ^= t;
    }
    out.push_back(v);
    out.push_back(w);
    // Project the remaining basis onto the symplectic complement of (v, w),
    // then thin it back to an independent set by Gaussian elimination.
    std::vector<std::uint32_t> reduced;
    for (std::uint32_t b : basis) {
      std::uint32_t r = b;
      if (sp_form(b, w, n)) r ^= v;
      if (sp_form(b, v, n)) r ^= w;
      reduced.push_back(r);
    }
    std::vector<std::uint32_t> pivots;  // one stored vector per leading bit
    std::vector<std::uint32_t> next;
    for (std::uint32_t r : reduced) {
      std::uint32_t cur = r;
      while (cur) {
        const std::uint32_t top = std::bit_floor(cur);
        std::uint32_t hit = 0;
        for (std::uint32_t p : pivots)
          if (std::bit_floor(p) == top) {
            hit = p;
            break;
          }
        if (!hit) break;
        cur ^= hit;
      }
      if (cur) {
        pivots.push_back(cur);
        next.push_back(r);
      }
    }
    if (next.size() != basis.size() - 2) {
      throw std::logic_error("sample_symplectic_images: complement rank mismatch");
    }
    basis = std::move(next);
  }
  return out;
}

}  // namespace clifford_detail

// All Clifford elements modulo global phase; n must be 1 or 2
// (24 and 11520 elements).
inline std::vector<CMat> enumerate_clifford(int n) {
  using namespace clifford_detail;
  if (n != 1 && n != 2) {
    throw std::invalid_argument("enumerate_clifford: only n = 1, 2 supported");
  }
  std::vector<CMat> gens;
  if (n == 1) {
    gens = {gate_h(), gate_s()};
  } else {
    const CMat i2 = CMat::Identity(2, 2);
    gens = {kron(gate_h(), i2), kron(i2, gate_h()), kron(gate_s(), i2), kron(i2, gate_s()),
            gate_cnot()};
  }
  const Index d = Index{1} << n;
  std::unordered_set<std::string> seen;
  std::vector<CMat> out;
  std::deque<CMat> queue;
  const CMat id = CMat::Identity(d, d);
  seen.insert(tableau_key(id, n));
  out.push_back(id);
  queue.push_back(id);
  while (!queue.empty()) {
    const CMat u = queue.front();
    queue.pop_front();
    for (const CMat& g : gens) {
      CMat v = phase_normalize(g * u);
      std::string key = tableau_key(v, n);
      if (seen.insert(std::move(key)).second) {
        out.push_back(v);
        queue.push_back(std::move(v));
      }
    }
  }
  const std::size_t expect = n == 1 ? 24 : 11520;
  if (out.size() != expect) throw std::logic_error("enumerate_clifford: closure size mismatch");
  return out;
}

// Uniformly random Clifford element: uniform symplectic tableau plus uniform
// sign bits, synthesized as a matrix through its stabilizer action.
inline CMat sample_clifford(int n, RngStream& rng) {
  using namespace clifford_detail;
  if (n < 1 || n > 6) throw std::invalid_argument("sample_clifford: n must be in [1, 6]");
  const Index d = Index{1} << n;
  const std::vector<std::uint32_t> images = sample_symplectic_images(n, rng);
  const std::uint32_t xm = (1u << n) - 1;

  std::vector<CMat> xi(n), zi(n);  // images of X_j and Z_j, sign included
  for (int j = 0; j < n; ++j) {
    const std::uint32_t v = images[2 * j];
    const std::uint32_t w = images[2 * j + 1];
    const double sx = (rng.next_u64() & 1) ? -1.0 : 1.0;
    const double sz = (rng.next_u64() & 1) ? -1.0 : 1.0;
    xi[j] = sx * pauli_matrix(n, v & xm, (v >> n) & xm);
    zi[j] = sz * pauli_matrix(n, w & xm, (w >> n) & xm);
  }

  // |psi_0> = U|0...0> is the unique state stabilized by the Z images.
  CMat proj = CMat::Identity(d, d);
  for (int j = 0; j < n; ++j) proj = 0.5 * (proj + zi[j] * proj);
  Index pivot = 0;
  double best = 0.0;
  for (Index i = 0; i < d; ++i) {
    const double a = std::abs(proj(i, i));
    if (a > best) {
      best = a;
      pivot = i;
    }
  }
  CVec psi0 = proj.col(pivot);
  const double nn = psi0.norm();
  if (!(nn > 1e-9)) throw std::logic_error("sample_clifford: empty stabilizer projector");
  psi0 /= nn;

  // Columns U|x> via the X images; Gray-code order so each step is one
  // multiplication (the signed images are involutions and commute).
  CMat u(d, d);
  CVec cur = psi0;
  std::uint64_t prev_gray = 0;
  u.col(0) = cur;
  for (std::uint64_t i = 1; i < static_cast<std::uint64_t>(d); ++i) {
    const std::uint64_t gray = i ^ (i >> 1);
    const std::uint64_t flipped = gray ^ prev_gray;
    int b = 0;
    while (!((flipped >> b) & 1)) ++b;
    // matrix bit position b counts from the lsb of the column index, which
    // is qubit n-1-b in tensor order
    cur = xi[n - 1 - b] * cur;
    u.col(static_cast<Index>(gray)) = cur;
    prev_gray = gray;
  }
  return u;
}

}  // namespace designlab
