#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "designlab/clifford.hpp"
#include "designlab/haar.hpp"
#include "designlab/numkit.hpp"
#include "designlab/rng.hpp"

namespace designlab {

// Finitely supported or generator-backed distribution over U(d), optionally
// iterated (a sample is a product of `iterations` independent base draws).
class UnitaryEnsemble {
 public:
  enum class Kind { explicit_list, generator };

  static UnitaryEnsemble make_explicit(Index d, std::vector<CMat> elements,
                                       std::vector<double> weights = {},
                                       std::string label = "custom") {
    if (elements.empty()) throw std::invalid_argument("UnitaryEnsemble: no elements");
    if (weights.empty()) {
      weights.assign(elements.size(), 1.0 / static_cast<double>(elements.size()));
    }
    if (weights.size() != elements.size()) {
      throw std::invalid_argument("UnitaryEnsemble: weights/elements size mismatch");
    }
    double total = 0.0;
    for (double w : weights) {
      if (!(w > 0.0)) throw std::invalid_argument("UnitaryEnsemble: weights must be positive");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw std::invalid_argument("UnitaryEnsemble: weights must sum to 1");
    }
    for (const CMat& u : elements) {
      if (u.rows() != d || u.cols() != d || !is_unitary(u)) {
        throw std::invalid_argument("UnitaryEnsemble: element is not a d x d unitary");
      }
    }
    UnitaryEnsemble e;
    e.d_ = d;
    e.kind_ = Kind::explicit_list;
    e.elements_ = std::move(elements);
    e.weights_ = std::move(weights);
    e.label_ = std::move(label);
    e.cumulative_.resize(e.weights_.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < e.weights_.size(); ++i) {
      acc += e.weights_[i];
      e.cumulative_[i] = acc;
    }
    e.cumulative_.back() = 1.0;
    return e;
  }

  static UnitaryEnsemble make_generator(Index d, std::function<CMat(RngStream&)> gen,
                                        std::string label) {
    if (!gen) throw std::invalid_argument("UnitaryEnsemble: null generator");
    UnitaryEnsemble e;
    e.d_ = d;
    e.kind_ = Kind::generator;
    e.gen_ = std::move(gen);
    e.label_ = std::move(label);
    return e;
  }

  Index dim() const { return d_; }
  Kind kind() const { return kind_; }
  const std::string& label() const { return label_; }
  int iterations() const { return iterations_; }
  bool iterated() const { return iterations_ > 1; }

  bool enumerable() const { return kind_ == Kind::explicit_list; }

  std::size_t size() const {
    require_explicit("size");
    return elements_.size();
  }

  const std::vector<CMat>& elements() const {
    require_explicit("elements");
    return elements_;
  }

  const std::vector<double>& weights() const {
    require_explicit("weights");
    return weights_;
  }

  CMat sample(RngStream& rng) const {
    CMat u = sample_once(rng);
    for (int i = 1; i < iterations_; ++i) u = sample_once(rng) * u;
    return u;
  }

  // Smallest element probability; for iterated ensembles probabilities of
  // base draws multiply.
  double pmin() const {
    require_explicit("pmin");
    double m = 1.0;
    for (double w : weights_) m = std::min(m, w);
    return std::pow(m, static_cast<double>(iterations_));
  }

  friend UnitaryEnsemble iterate_ensemble(const UnitaryEnsemble& base, int t);

 private:
  void require_explicit(const char* what) const {
    if (kind_ != Kind::explicit_list) {
      throw std::invalid_argument(std::string("UnitaryEnsemble::") + what +
                                  ": undefined for generator ensembles");
    }
  }

  CMat sample_once(RngStream& rng) const {
    if (kind_ == Kind::generator) return gen_(rng);
    const double u = rng.uniform();
    std::size_t lo = 0, hi = cumulative_.size() - 1;
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (cumulative_[mid] > u) {
        hi = mid;
      } else {
        lo = mid + 1;
      }
    }
    return elements_[lo];
  }

  Index d_ = 0;
  Kind kind_ = Kind::explicit_list;
  std::vector<CMat> elements_;
  std::vector<double> weights_;
  std::vector<double> cumulative_;
  std::function<CMat(RngStream&)> gen_;
  std::string label_;
  int iterations_ = 1;
};

inline UnitaryEnsemble iterate_ensemble(const UnitaryEnsemble& base, int t) {
  if (t < 1) throw std::invalid_argument("iterate_ensemble: t must be >= 1");
  UnitaryEnsemble e = base;
  e.iterations_ = base.iterations_ * t;
  e.label_ = base.label_ + "^" + std::to_string(e.iterations_);
  return e;
}

// Uniform ensemble of all 4^n Pauli strings.
inline UnitaryEnsemble pauli_ensemble(int n) {
  if (n < 1 || n > 6) throw std::invalid_argument("pauli_ensemble: n must be in [1, 6]");
  std::vector<CMat> els;
  els.reserve(std::size_t{1} << (2 * n));
  for (std::uint32_t x = 0; x < (1u << n); ++x)
    for (std::uint32_t z = 0; z < (1u << n); ++z)
      els.push_back(clifford_detail::pauli_matrix(n, x, z));
  return UnitaryEnsemble::make_explicit(Index{1} << n, std::move(els), {},
                                        "pauli(" + std::to_string(n) + ")");
}

// Uniform ensemble over the full Clifford group modulo phase; n in {1, 2}.
inline UnitaryEnsemble clifford_ensemble(int n) {
  return UnitaryEnsemble::make_explicit(Index{1} << n, enumerate_clifford(n), {},
                                        "clifford(" + std::to_string(n) + ")");
}

// Explicit ensemble of n_samples uniformly drawn Clifford elements.
inline UnitaryEnsemble clifford_ensemble_random(int n, int n_samples, RngStream& rng) {
  if (n_samples < 1) throw std::invalid_argument("clifford_ensemble_random: empty");
  std::vector<CMat> els;
  els.reserve(static_cast<std::size_t>(n_samples));
  for (int i = 0; i < n_samples; ++i) els.push_back(sample_clifford(n, rng));
  return UnitaryEnsemble::make_explicit(
      Index{1} << n, std::move(els), {},
      "clifford-sampled(" + std::to_string(n) + "," + std::to_string(n_samples) + ")");
}

// Generator form of the uniform Clifford distribution.
inline UnitaryEnsemble clifford_sampler(int n) {
  if (n < 1 || n > 6) throw std::invalid_argument("clifford_sampler: n must be in [1, 6]");
  return UnitaryEnsemble::make_generator(
      Index{1} << n, [n](RngStream& rng) { return sample_clifford(n, rng); },
      "clifford-sampler(" + std::to_string(n) + ")");
}

// Random circuit on a line of qubits: each of `depth` steps applies a Haar
// U(4) gate at a uniformly random adjacent pair.
inline UnitaryEnsemble random_circuit_ensemble(int n, int depth) {
  if (n < 2 || n > 12) throw std::invalid_argument("random_circuit_ensemble: n must be in [2, 12]");
  if (depth < 1) throw std::invalid_argument("random_circuit_ensemble: depth must be >= 1");
  const Index d = Index{1} << n;
  return UnitaryEnsemble::make_generator(
      d,
      [n, depth, d](RngStream& rng) {
        CMat u = CMat::Identity(d, d);
        for (int step = 0; step < depth; ++step) {
          const int i = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n - 1)));
          const CMat g = sample_haar(4, rng);
          const CMat left = CMat::Identity(Index{1} << i, Index{1} << i);
          const CMat right =
              CMat::Identity(Index{1} << (n - i - 2), Index{1} << (n - i - 2));
          u = kron(kron(left, g), right) * u;
        }
        return u;
      },
      "random-circuit(" + std::to_string(n) + ",depth=" + std::to_string(depth) + ")");
}

// Smallest t with lambda^t <= eps * d^(-3k/2): iterating a contraction-lambda
// ensemble t times yields an eps-approximate k-design.
inline int required_iterations(double lambda, Index d, int k, double eps) {
  if (d < 2 || k < 1) throw std::invalid_argument("required_iterations: bad dims");
  if (!(eps > 0.0)) throw std::invalid_argument("required_iterations: eps must be positive");
  if (!(lambda < 1.0)) {
    throw std::invalid_argument("required_iterations: lambda must be below 1");
  }
  if (lambda <= 0.0) return 1;
  const double target =
      std::log(eps) - 1.5 * static_cast<double>(k) * std::log(static_cast<double>(d));
  if (target >= 0.0) return 1;
  const double ll = std::log(lambda);
  std::int64_t t = static_cast<std::int64_t>(std::ceil(target / ll - 1e-12));
  if (t < 1) t = 1;
  while (static_cast<double>(t) * ll > target + 1e-12) ++t;
  if (t > (std::int64_t{1} << 40)) throw BudgetExceeded("required_iterations: t overflow");
  return static_cast<int>(t);
}

// Distribution over pure states.
class StateEnsemble {
 public:
  enum class Kind { explicit_list, generator };

  static StateEnsemble make_explicit(Index d, std::vector<CVec> states,
                                     std::vector<double> weights = {},
                                     std::string label = "custom-states") {
    if (states.empty()) throw std::invalid_argument("StateEnsemble: no states");
    if (weights.empty()) {
      weights.assign(states.size(), 1.0 / static_cast<double>(states.size()));
    }
    if (weights.size() != states.size()) {
      throw std::invalid_argument("StateEnsemble: weights/states size mismatch");
    }
    double total = 0.0;
    for (double w : weights) {
      if (!(w > 0.0)) throw std::invalid_argument("StateEnsemble: weights must be positive");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw std::invalid_argument("StateEnsemble: weights must sum to 1");
    }
    for (const CVec& v : states) {
      if (v.size() != d || std::abs(v.norm() - 1.0) > 1e-10) {
        throw std::invalid_argument("StateEnsemble: state is not a unit vector in C^d");
      }
    }
    StateEnsemble e;
    e.d_ = d;
    e.kind_ = Kind::explicit_list;
    e.states_ = std::move(states);
    e.weights_ = std::move(weights);
    e.label_ = std::move(label);
    return e;
  }

  static StateEnsemble make_generator(Index d, std::function<CVec(RngStream&)> gen,
                                      std::string label) {
    if (!gen) throw std::invalid_argument("StateEnsemble: null generator");
    StateEnsemble e;
    e.d_ = d;
    e.kind_ = Kind::generator;
    e.gen_ = std::move(gen);
    e.label_ = std::move(label);
    return e;
  }

  // Uniform (Fubini-Study) states: normalized complex Gaussian vectors.
  static StateEnsemble haar_states(Index d) {
    return make_generator(
        d,
        [d](RngStream& rng) {
          CVec v(d);
          for (Index i = 0; i < d; ++i) v[i] = rng.complex_normal();
          return CVec(v / v.norm());
        },
        "haar-states(" + std::to_string(d) + ")");
  }

  // Orbit of |0...0> under a unitary ensemble.
  static StateEnsemble from_unitaries(const UnitaryEnsemble& ens) {
    const Index d = ens.dim();
    if (ens.kind() == UnitaryEnsemble::Kind::explicit_list && !ens.iterated()) {
      std::vector<CVec> states;
      states.reserve(ens.size());
      for (const CMat& u : ens.elements()) states.push_back(u.col(0));
      return make_explicit(d, std::move(states), ens.weights(), ens.label() + "|0>");
    }
    auto shared = std::make_shared<UnitaryEnsemble>(ens);
    return make_generator(
        d, [shared, d](RngStream& rng) { return CVec(shared->sample(rng) * basis_state(d, 0)); },
        ens.label() + "|0>");
  }

  Index dim() const { return d_; }
  Kind kind() const { return kind_; }
  const std::string& label() const { return label_; }

  bool enumerable() const { return kind_ == Kind::explicit_list; }

  std::size_t size() const {
    require_explicit();
    return states_.size();
  }
  const std::vector<CVec>& states() const {
    require_explicit();
    return states_;
  }
  const std::vector<double>& weights() const {
    require_explicit();
    return weights_;
  }

  CVec sample(RngStream& rng) const {
    if (kind_ == Kind::generator) return gen_(rng);
    double u = rng.uniform();
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      u -= weights_[i];
      if (u <= 0.0) return states_[i];
    }
    return states_.back();
  }

 private:
  void require_explicit() const {
    if (kind_ != Kind::explicit_list) {
      throw std::invalid_argument("StateEnsemble: undefined for generator ensembles");
    }
  }

  Index d_ = 0;
  Kind kind_ = Kind::explicit_list;
  std::vector<CVec> states_;
  std::vector<double> weights_;
  std::function<CVec(RngStream&)> gen_;
  std::string label_;
};

// The six single-qubit stabilizer states (eigenbases of X, Y, Z).
inline StateEnsemble stabilizer_states_qubit() {
  const double s = 1.0 / std::sqrt(2.0);
  std::vector<CVec> states;
  CVec v(2);
  v << 1, 0;
  states.push_back(v);
  v << 0, 1;
  states.push_back(v);
  v << s, s;
  states.push_back(v);
  v << s, -s;
  states.push_back(v);
  v << s, Complex(0, s);
  states.push_back(v);
  v << s, Complex(0, -s);
  states.push_back(v);
  return StateEnsemble::make_explicit(2, std::move(states), {}, "stabilizer-qubit");
}

}  // namespace designlab
