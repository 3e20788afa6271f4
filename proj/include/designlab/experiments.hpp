#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "designlab/bounds.hpp"
#include "designlab/ensembles.hpp"
#include "designlab/geoment.hpp"
#include "designlab/haar.hpp"
#include "designlab/io.hpp"
#include "designlab/numkit.hpp"
#include "designlab/rng.hpp"
#include "designlab/version.hpp"

namespace designlab {

// One-sided 95% Wilson score upper confidence for a binomial frequency.
inline double wilson_upper(std::uint64_t hits, std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("wilson_upper: empty sample");
  const double z = 1.6448536269514722;  // 95th percentile of the standard normal
  const double p = static_cast<double>(hits) / static_cast<double>(n);
  const double nn = static_cast<double>(n);
  const double z2 = z * z;
  const double center = p + z2 / (2.0 * nn);
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
  return std::min(1.0, (center + half) / (1.0 + z2 / nn));
}

struct EmbeddingSpec {
  enum class Type { first_basis, random_subspace, energy_window };
  Type type = Type::first_basis;
  std::uint64_t seed = 0;     // random-subspace
  std::vector<double> diag;   // energy-window diagonal Hamiltonian on d
  double e_min = 0.0;
  double e_max = 0.0;
};

// Constrained subspace H_R inside H_S (x) H_E.
struct ConstraintSpec {
  Index d_s = 2;
  Index d_e = 2;
  Index d_r = 1;
  EmbeddingSpec embedding;

  void validate() const {
    if (d_s < 1 || d_e < 1 || d_r < 1) throw std::invalid_argument("ConstraintSpec: bad dims");
    if (d_r > d_s * d_e) throw std::invalid_argument("ConstraintSpec: d_R must be <= d_S d_E");
  }

  BipartiteDims dims() const { return BipartiteDims(d_s, d_e); }
};

// d x d_R matrix with orthonormal columns selecting the constrained subspace.
inline CMat embedding_isometry(const ConstraintSpec& c) {
  c.validate();
  const Index d = c.d_s * c.d_e;
  CMat v(d, c.d_r);
  switch (c.embedding.type) {
    case EmbeddingSpec::Type::first_basis:
      v = CMat::Identity(d, d).leftCols(c.d_r);
      break;
    case EmbeddingSpec::Type::random_subspace: {
      RngStream rng(c.embedding.seed, 0xe5b5);
      CMat g(d, c.d_r);
      for (Index j = 0; j < c.d_r; ++j)
        for (Index i = 0; i < d; ++i) g(i, j) = rng.complex_normal();
      Eigen::HouseholderQR<CMat> qr(g);
      v = qr.householderQ() * CMat::Identity(d, c.d_r);
      break;
    }
    case EmbeddingSpec::Type::energy_window: {
      if (static_cast<Index>(c.embedding.diag.size()) != d) {
        throw std::invalid_argument("embedding_isometry: diagonal size != d");
      }
      std::vector<Index> keep;
      for (Index i = 0; i < d; ++i) {
        if (c.embedding.diag[i] >= c.embedding.e_min && c.embedding.diag[i] <= c.embedding.e_max) {
          keep.push_back(i);
        }
      }
      if (static_cast<Index>(keep.size()) != c.d_r) {
        throw std::invalid_argument("embedding_isometry: energy window selects " +
                                    std::to_string(keep.size()) + " states, expected d_R");
      }
      v = CMat::Zero(d, c.d_r);
      for (Index j = 0; j < c.d_r; ++j) v(keep[j], j) = 1.0;
      break;
    }
  }
  if ((v.adjoint() * v - CMat::Identity(c.d_r, c.d_r)).cwiseAbs().maxCoeff() > 1e-10) {
    throw std::logic_error("embedding_isometry: columns not orthonormal");
  }
  return v;
}

// Equilibrium prediction Omega_S: reduced state of the maximally mixed state
// on the constrained subspace.
inline DensityMatrix canonical_state(const ConstraintSpec& c) {
  const CMat v = embedding_isometry(c);
  const CMat full = v * v.adjoint() / static_cast<double>(c.d_r);
  return partial_trace(DensityMatrix::from_matrix(full), c.dims(), Keep::system);
}

struct TailCurve {
  std::vector<double> grid;
  std::vector<double> empirical;
  std::vector<double> wilson;
  std::vector<double> bound;       // min over configured analytic channels, clamped
  std::vector<double> log2_bound;  // log2 of the minimum channel (unclamped)
  std::vector<bool> pass;          // wilson <= bound wherever bound < 1
  bool all_pass = true;
  nlohmann::json metadata;
};

// Empirical exceedance P(x >= grid_i) with Wilson upper confidence, compared
// one-sidedly against analytic bounds where those are informative.
inline TailCurve tail_compare(const std::vector<double>& samples, const std::vector<double>& grid,
                              const std::vector<double>& bound,
                              const std::vector<double>& log2_bound,
                              nlohmann::json metadata = {}) {
  if (samples.empty()) throw std::invalid_argument("tail_compare: empty samples");
  if (grid.empty() || !std::is_sorted(grid.begin(), grid.end())) {
    throw std::invalid_argument("tail_compare: grid must be non-empty and sorted");
  }
  if (bound.size() != grid.size() || log2_bound.size() != grid.size()) {
    throw std::invalid_argument("tail_compare: bound arrays must match the grid");
  }
  TailCurve out;
  out.grid = grid;
  out.metadata = std::move(metadata);
  const std::uint64_t n = samples.size();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::uint64_t hits = 0;
    for (double x : samples)
      if (x >= grid[i]) ++hits;
    const double freq = static_cast<double>(hits) / static_cast<double>(n);
    const double wu = wilson_upper(hits, n);
    out.empirical.push_back(freq);
    out.wilson.push_back(wu);
    out.bound.push_back(bound[i]);
    out.log2_bound.push_back(log2_bound[i]);
    const bool ok = bound[i] >= 1.0 || wu <= bound[i];
    out.pass.push_back(ok);
    out.all_pass = out.all_pass && ok;
  }
  out.metadata["n_samples"] = n;
  return out;
}

struct DesignAssumption {
  int k = 1;
  double eps = 0.0;
};

struct ExperimentConfig {
  std::string kind;  // entropy | statmech | geoment
  nlohmann::json ensemble_desc;
  std::optional<BipartiteDims> dims;         // entropy
  std::optional<ConstraintSpec> constraint;  // statmech
  int qubits = 0;                            // geoment
  int restarts = 10;                         // geoment alternating optimization
  std::optional<DesignAssumption> design;
  std::optional<int> bound_m;
  std::string statmech_mode = "messy";  // design-bound form for statmech
  std::optional<CVec> initial_state;    // entropy override of |0...0>
  int samples = 1000;
  std::vector<double> grid;
  std::uint64_t seed = 0;
  int workers = 0;  // 0: hardware concurrency

  nlohmann::json canonical() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
};

namespace experiments_detail {

inline std::vector<double> parse_grid(const nlohmann::json& g) {
  std::vector<double> out;
  if (g.is_array()) {
    out = g.get<std::vector<double>>();
  } else if (g.is_object()) {
    const double start = g.at("start").get<double>();
    const double stop = g.at("stop").get<double>();
    const int points = g.at("points").get<int>();
    if (points < 1 || stop < start) throw ConfigError("grid: need points >= 1 and stop >= start");
    for (int i = 0; i < points; ++i) {
      out.push_back(points == 1 ? start : start + (stop - start) * i / (points - 1));
    }
  } else {
    throw ConfigError("grid: expected array or {start, stop, points}");
  }
  if (out.empty() || !std::is_sorted(out.begin(), out.end())) {
    throw ConfigError("grid: must be non-empty and sorted");
  }
  return out;
}

}  // namespace experiments_detail

inline ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  try {
    cfg.kind = j.at("kind").get<std::string>();
    if (cfg.kind != "entropy" && cfg.kind != "statmech" && cfg.kind != "geoment") {
      throw ConfigError("kind must be entropy, statmech, or geoment");
    }
    cfg.ensemble_desc = j.at("ensemble");
    cfg.samples = j.at("samples").get<int>();
    if (cfg.samples < 100) throw ConfigError("samples must be >= 100");
    cfg.grid = experiments_detail::parse_grid(j.at("grid"));
    cfg.seed = j.value("seed", 0ULL);
    cfg.workers = j.value("workers", 0);
    if (j.contains("design")) {
      DesignAssumption da;
      da.k = j.at("design").at("k").get<int>();
      da.eps = j.at("design").at("eps").get<double>();
      if (da.k < 1 || da.eps < 0.0) throw ConfigError("design: need k >= 1 and eps >= 0");
      cfg.design = da;
    }
    if (j.contains("bound_m")) cfg.bound_m = j.at("bound_m").get<int>();
    cfg.statmech_mode = j.value("statmech_mode", std::string("messy"));
    if (cfg.statmech_mode != "messy" && cfg.statmech_mode != "simplified") {
      throw ConfigError("statmech_mode must be messy or simplified");
    }
    if (cfg.kind == "entropy") {
      cfg.dims = BipartiteDims(j.at("dims").at("d_s").get<Index>(),
                               j.at("dims").at("d_e").get<Index>());
      if (j.contains("initial_state")) {
        const auto& arr = j.at("initial_state");
        CVec v(static_cast<Index>(arr.size()));
        for (Index i = 0; i < v.size(); ++i) {
          v[i] = Complex(arr[i][0].get<double>(), arr[i][1].get<double>());
        }
        if (v.size() != cfg.dims->d()) throw ConfigError("initial_state: wrong dimension");
        cfg.initial_state = PureState::normalized(v).amps;
      }
    } else if (cfg.kind == "statmech") {
      const auto& c = j.at("constraint");
      ConstraintSpec spec;
      spec.d_s = c.at("d_s").get<Index>();
      spec.d_e = c.at("d_e").get<Index>();
      spec.d_r = c.at("d_r").get<Index>();
      const auto& e = c.at("embedding");
      const std::string type = e.at("type").get<std::string>();
      if (type == "first-basis") {
        spec.embedding.type = EmbeddingSpec::Type::first_basis;
      } else if (type == "random-subspace") {
        spec.embedding.type = EmbeddingSpec::Type::random_subspace;
        spec.embedding.seed = e.value("seed", 0ULL);
      } else if (type == "energy-window") {
        spec.embedding.type = EmbeddingSpec::Type::energy_window;
        spec.embedding.diag = e.at("diag").get<std::vector<double>>();
        spec.embedding.e_min = e.at("window")[0].get<double>();
        spec.embedding.e_max = e.at("window")[1].get<double>();
      } else {
        throw ConfigError("embedding type must be first-basis, random-subspace, or energy-window");
      }
      spec.validate();
      cfg.constraint = spec;
    } else {
      cfg.qubits = j.at("qubits").get<int>();
      if (cfg.qubits < 1 || cfg.qubits > 10) throw ConfigError("geoment: qubits must be in [1, 10]");
      cfg.restarts = j.value("restarts", 10);
      if (cfg.restarts < 1) throw ConfigError("geoment: restarts must be >= 1");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

inline nlohmann::json ExperimentConfig::canonical() const {
  nlohmann::json j;
  j["kind"] = kind;
  j["ensemble"] = ensemble_desc;
  j["samples"] = samples;
  j["grid"] = grid;
  j["seed"] = seed;
  if (dims) j["dims"] = {{"d_s", dims->d_s}, {"d_e", dims->d_e}};
  if (constraint) {
    nlohmann::json c;
    c["d_s"] = constraint->d_s;
    c["d_e"] = constraint->d_e;
    c["d_r"] = constraint->d_r;
    switch (constraint->embedding.type) {
      case EmbeddingSpec::Type::first_basis:
        c["embedding"] = {{"type", "first-basis"}};
        break;
      case EmbeddingSpec::Type::random_subspace:
        c["embedding"] = {{"type", "random-subspace"}, {"seed", constraint->embedding.seed}};
        break;
      case EmbeddingSpec::Type::energy_window:
        c["embedding"] = {{"type", "energy-window"},
                          {"diag", constraint->embedding.diag},
                          {"window", {constraint->embedding.e_min, constraint->embedding.e_max}}};
        break;
    }
    j["constraint"] = std::move(c);
  }
  if (kind == "geoment") {
    j["qubits"] = qubits;
    j["restarts"] = restarts;
  }
  if (design) j["design"] = {{"k", design->k}, {"eps", design->eps}};
  if (bound_m) j["bound_m"] = *bound_m;
  if (kind == "statmech") j["statmech_mode"] = statmech_mode;
  if (initial_state) {
    nlohmann::json arr = nlohmann::json::array();
    for (Index i = 0; i < initial_state->size(); ++i) {
      arr.push_back({(*initial_state)[i].real(), (*initial_state)[i].imag()});
    }
    j["initial_state"] = std::move(arr);
  }
  return j;
}

// Builds the unitary ensemble named by a config descriptor.
inline UnitaryEnsemble build_ensemble(const nlohmann::json& desc, Index expected_dim) {
  std::string type;
  try {
    type = desc.at("type").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("ensemble: ") + e.what());
  }
  UnitaryEnsemble ens = [&]() {
    if (type == "haar") {
      return UnitaryEnsemble::make_generator(
          expected_dim, [d = expected_dim](RngStream& rng) { return sample_haar(d, rng); },
          "haar(" + std::to_string(expected_dim) + ")");
    }
    if (type == "identity") {
      return UnitaryEnsemble::make_explicit(
          expected_dim, {CMat::Identity(expected_dim, expected_dim)}, {}, "identity");
    }
    if (type == "pauli") return pauli_ensemble(desc.at("qubits").get<int>());
    if (type == "clifford") return clifford_ensemble(desc.at("qubits").get<int>());
    if (type == "clifford-sampled") return clifford_sampler(desc.at("qubits").get<int>());
    if (type == "random-circuit") {
      return random_circuit_ensemble(desc.at("qubits").get<int>(), desc.at("depth").get<int>());
    }
    if (type == "file") return load_ensemble(desc.at("path").get<std::string>());
    throw ConfigError("ensemble: unknown type " + type);
  }();
  if (desc.contains("iterations")) {
    const int t = desc.at("iterations").get<int>();
    if (t < 1) throw ConfigError("ensemble: iterations must be >= 1");
    ens = iterate_ensemble(ens, t);
  }
  if (ens.dim() != expected_dim) {
    throw ConfigError("ensemble: dimension " + std::to_string(ens.dim()) +
                      " does not match the experiment (" + std::to_string(expected_dim) + ")");
  }
  return ens;
}

namespace experiments_detail {

inline constexpr int kBatchSize = 2048;

// Deterministic batch-parallel map: worker count never changes results
// because batches own derived streams and merge in batch order.
template <typename Fn>
inline std::vector<std::vector<std::array<double, 2>>> run_batches(int n_samples,
                                                                   std::uint64_t seed, int workers,
                                                                   Fn&& per_sample) {
  const int n_batches = (n_samples + kBatchSize - 1) / kBatchSize;
  std::vector<std::vector<std::array<double, 2>>> results(n_batches);
  std::atomic<int> next{0};
  int hw = workers > 0 ? workers : static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  hw = std::min(hw, n_batches);
  const RngStream root(seed);
  auto work = [&]() {
    for (;;) {
      const int b = next.fetch_add(1);
      if (b >= n_batches) return;
      RngStream rng = root.derive(static_cast<std::uint64_t>(b));
      const int lo = b * kBatchSize;
      const int hi = std::min(n_samples, lo + kBatchSize);
      std::vector<std::array<double, 2>> out;
      out.reserve(hi - lo);
      for (int i = lo; i < hi; ++i) out.push_back(per_sample(rng));
      results[b] = std::move(out);
    }
  };
  if (hw == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(hw);
    for (int i = 0; i < hw; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  return results;
}

inline Eigen::VectorXd reduced_spectrum(const CVec& psi, Index d_s, Index d_e) {
  const Eigen::Map<const CMat> m(psi.data(), d_e, d_s);  // column-major: psi[s*d_e + e]
  const CMat rho_s = m.transpose().conjugate().transpose() * m.conjugate();
  // rho_s(i, j) = sum_e psi[i d_e + e] conj(psi[j d_e + e])
  Eigen::SelfAdjointEigenSolver<CMat> es(rho_s, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

struct SpectrumStats {
  double entropy = 0.0;
  double renyi2 = 0.0;
  double purity = 0.0;
};

inline SpectrumStats spectrum_stats(const Eigen::VectorXd& ev) {
  SpectrumStats s;
  for (Index i = 0; i < ev.size(); ++i) {
    double l = ev[i];
    if (l < 0.0) {
      if (l < -kEigClipTol) throw std::logic_error("spectrum_stats: negative eigenvalue");
      l = 0.0;
    }
    s.purity += l * l;
    if (l > 0.0) s.entropy -= l * std::log2(l);
  }
  s.renyi2 = -std::log2(s.purity);
  return s;
}

}  // namespace experiments_detail

// Reduced state of a pure |psi> on S (x) E, as a d_S x d_S matrix.
inline CMat reduced_state(const CVec& psi, Index d_s, Index d_e) {
  CMat rho = CMat::Zero(d_s, d_s);
  for (Index i = 0; i < d_s; ++i) {
    for (Index j = 0; j < d_s; ++j) {
      Complex acc = 0.0;
      for (Index e = 0; e < d_e; ++e) acc += psi[i * d_e + e] * std::conj(psi[j * d_e + e]);
      rho(i, j) = acc;
    }
  }
  return rho;
}

struct ExperimentResult {
  TailCurve curve;
  std::string config_hash;
};

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  using namespace experiments_detail;
  nlohmann::json meta;
  meta["tool_version"] = kVersion;
  meta["kind"] = cfg.kind;
  meta["seed"] = cfg.seed;
  const std::string hash = designlab::config_hash(cfg.canonical());
  meta["config_hash"] = hash;

  std::vector<double> xs;
  xs.reserve(cfg.samples);
  std::vector<double> bound(cfg.grid.size(), 1.0);
  std::vector<double> log2_bound(cfg.grid.size(), 0.0);

  if (cfg.kind == "entropy") {
    const BipartiteDims dims = *cfg.dims;
    const UnitaryEnsemble ens = build_ensemble(cfg.ensemble_desc, dims.d());
    meta["ensemble"] = ens.label();
    const double beta = (1.0 / std::numbers::ln2) * static_cast<double>(dims.d_s) /
                        static_cast<double>(dims.d_e);
    const double log2ds = std::log2(static_cast<double>(dims.d_s));
    CVec psi0 = cfg.initial_state.value_or(CVec(basis_state(dims.d(), 0)));
    auto batches = run_batches(cfg.samples, cfg.seed, cfg.workers,
                               [&](RngStream& rng) -> std::array<double, 2> {
                                 const CMat u = ens.sample(rng);
                                 const CVec psi = u * psi0;
                                 const CMat rho_s = reduced_state(psi, dims.d_s, dims.d_e);
                                 Eigen::SelfAdjointEigenSolver<CMat> es(rho_s,
                                                                        Eigen::EigenvaluesOnly);
                                 const SpectrumStats st = spectrum_stats(es.eigenvalues());
                                 if (st.entropy < st.renyi2 - 1e-10) {
                                   throw std::logic_error("entropy fell below the Renyi-2 floor");
                                 }
                                 return {log2ds - beta - st.entropy, st.purity};
                               });
    double purity_sum = 0.0;
    double entropy_sum = 0.0;
    for (const auto& b : batches) {
      for (const auto& [x, p] : b) {
        xs.push_back(x);
        purity_sum += p;
        entropy_sum += log2ds - beta - x;
      }
    }
    meta["beta"] = beta;
    meta["mean_purity"] = purity_sum / cfg.samples;
    meta["mean_entropy"] = entropy_sum / cfg.samples;
    const double mu = expected_purity(dims);
    meta["expected_purity_haar"] = mu;
    nlohmann::json markov = nlohmann::json::array();
    nlohmann::json design_ch = nlohmann::json::array();
    for (std::size_t i = 0; i < cfg.grid.size(); ++i) {
      const double alpha = cfg.grid[i];
      const BoundResult mk = markov_entropy_tail(std::max(0.0, alpha));
      double best = mk.value;
      double best_log2 = mk.log2_raw;
      markov.push_back(mk.value);
      if (cfg.design && alpha > 0.0) {
        double ch = 1.0;
        double ch_log2 = 0.0;
        const int m_hi = std::max(1, cfg.design->k / 4);
        for (int m = 1; m <= m_hi && 4 * m <= cfg.design->k; ++m) {
          if (cfg.bound_m && m != *cfg.bound_m) continue;
          const BoundResult br = entropy_tail_design_messy(mu, alpha, m, cfg.design->eps,
                                                           static_cast<double>(dims.d()),
                                                           cfg.design->k);
          if (br.log2_raw < ch_log2) {
            ch = br.value;
            ch_log2 = br.log2_raw;
          }
        }
        design_ch.push_back(ch);
        if (ch_log2 < best_log2) {
          best = ch;
          best_log2 = ch_log2;
        }
      }
      bound[i] = best;
      log2_bound[i] = best_log2;
    }
    meta["bound_markov"] = std::move(markov);
    if (cfg.design) meta["bound_design"] = std::move(design_ch);
  } else if (cfg.kind == "statmech") {
    const ConstraintSpec& c = *cfg.constraint;
    const UnitaryEnsemble ens = build_ensemble(cfg.ensemble_desc, c.d_r);
    meta["ensemble"] = ens.label();
    const CMat v = embedding_isometry(c);
    const DensityMatrix omega_full =
        DensityMatrix::from_matrix(v * v.adjoint() / static_cast<double>(c.d_r));
    const DensityMatrix omega_s = partial_trace(omega_full, c.dims(), Keep::system);
    const DensityMatrix omega_e = partial_trace(omega_full, c.dims(), Keep::environment);
    const double d_eff = 1.0 / purity(omega_e);
    const double offset = std::sqrt(static_cast<double>(c.d_s) / d_eff);
    auto batches = run_batches(cfg.samples, cfg.seed, cfg.workers,
                               [&](RngStream& rng) -> std::array<double, 2> {
                                 const CMat u = ens.sample(rng);
                                 const CVec phi = v * (u * basis_state(c.d_r, 0));
                                 const CMat rho_s_m = reduced_state(phi, c.d_s, c.d_e);
                                 Eigen::SelfAdjointEigenSolver<CMat> es(rho_s_m - omega_s.mat,
                                                                        Eigen::EigenvaluesOnly);
                                 const double dist = 0.5 * es.eigenvalues().cwiseAbs().sum();
                                 const double pur = (rho_s_m * rho_s_m).trace().real();
                                 return {dist, pur};
                               });
    double dist_sum = 0.0;
    double purity_sum = 0.0;
    for (const auto& b : batches) {
      for (const auto& [x, p] : b) {
        xs.push_back(x);
        dist_sum += x;
        purity_sum += p;
      }
    }
    meta["d_eff"] = d_eff;
    meta["offset"] = offset;
    meta["mean_distance"] = dist_sum / cfg.samples;
    meta["mean_purity"] = purity_sum / cfg.samples;
    nlohmann::json haar_ch = nlohmann::json::array();
    nlohmann::json design_ch = nlohmann::json::array();
    for (std::size_t i = 0; i < cfg.grid.size(); ++i) {
      const double delta = cfg.grid[i];
      double best = 1.0;
      double best_log2 = 0.0;
      if (delta > offset) {
        const StatmechHaarResult hr = statmech_tail_haar(
            static_cast<double>(c.d_s), static_cast<double>(c.d_r), d_eff, delta - offset);
        haar_ch.push_back(hr.bound.value);
        if (hr.bound.log2_raw < best_log2) {
          best = hr.bound.value;
          best_log2 = hr.bound.log2_raw;
        }
      } else {
        haar_ch.push_back(1.0);
      }
      if (cfg.design && delta > 0.0) {
        const StatmechMode mode = cfg.statmech_mode == "simplified" ? StatmechMode::simplified
                                                                    : StatmechMode::messy;
        const StatmechDesignResult dr = statmech_tail_design(
            static_cast<double>(c.d_s), static_cast<double>(c.d_r), delta, cfg.design->k,
            cfg.design->eps, mode, cfg.bound_m);
        design_ch.push_back(dr.bound.value);
        if (dr.bound.log2_raw < best_log2) {
          best = dr.bound.value;
          best_log2 = dr.bound.log2_raw;
        }
      }
      bound[i] = best;
      log2_bound[i] = best_log2;
    }
    meta["bound_haar"] = std::move(haar_ch);
    if (cfg.design) meta["bound_design"] = std::move(design_ch);
  } else {
    const Index dim = Index{1} << cfg.qubits;
    StateEnsemble states = [&]() {
      const std::string type = cfg.ensemble_desc.value("type", std::string());
      if (type == "haar-states" || type == "haar") return StateEnsemble::haar_states(dim);
      return StateEnsemble::from_unitaries(build_ensemble(cfg.ensemble_desc, dim));
    }();
    meta["ensemble"] = states.label();
    const int n = cfg.qubits;
    auto batches = run_batches(
        cfg.samples, cfg.seed, cfg.workers, [&](RngStream& rng) -> std::array<double, 2> {
          const CVec psi = states.sample(rng);
          RngStream ao = rng.derive(0xa0);
          const GeomEntEstimate est =
              geom_ent_estimate(PureState{psi}, n, ao, cfg.restarts);
          return {static_cast<double>(n) - est.e_g, est.e_g};
        });
    double eg_sum = 0.0;
    for (const auto& b : batches) {
      for (const auto& [x, e] : b) {
        xs.push_back(x);
        eg_sum += e;
      }
    }
    meta["mean_e_g"] = eg_sum / cfg.samples;
    meta["restarts"] = cfg.restarts;
    const double k = cfg.design ? static_cast<double>(cfg.design->k)
                                : static_cast<double>(n) * static_cast<double>(n);
    const double eps = cfg.design ? cfg.design->eps : 0.0;
    meta["bound_k"] = k;
    meta["bound_eps"] = eps;
    for (std::size_t i = 0; i < cfg.grid.size(); ++i) {
      const GeomEntTailResult gr =
          geom_ent_tail(static_cast<double>(n), k, std::max(0.0, cfg.grid[i]), eps);
      bound[i] = gr.bound.value;
      log2_bound[i] = gr.bound.log2_raw;
    }
  }

  ExperimentResult out;
  out.curve = tail_compare(xs, cfg.grid, bound, log2_bound, std::move(meta));
  out.config_hash = hash;
  return out;
}

// CSV: comment header with provenance, then the fixed column set.
inline void write_tail_csv(const TailCurve& curve, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_tail_csv: cannot open " + path);
  out << "# designlab " << kVersion << "\n";
  out << "# kind," << curve.metadata.value("kind", std::string()) << "\n";
  out << "# seed," << curve.metadata.value("seed", 0ULL) << "\n";
  out << "# config_hash," << curve.metadata.value("config_hash", std::string()) << "\n";
  out << "threshold,empirical,wilson_upper,bound,log2_bound,pass\n";
  for (std::size_t i = 0; i < curve.grid.size(); ++i) {
    out << format_double(curve.grid[i]) << "," << format_double(curve.empirical[i]) << ","
        << format_double(curve.wilson[i]) << "," << format_double(curve.bound[i]) << ","
        << format_double(curve.log2_bound[i]) << "," << (curve.pass[i] ? 1 : 0) << "\n";
  }
  if (!out) throw std::runtime_error("write_tail_csv: write failed for " + path);
}

inline nlohmann::json tail_to_json(const TailCurve& curve) {
  nlohmann::json j;
  j["grid"] = curve.grid;
  j["empirical"] = curve.empirical;
  j["wilson_upper"] = curve.wilson;
  j["bound"] = curve.bound;
  nlohmann::json lb = nlohmann::json::array();
  for (double v : curve.log2_bound) {
    if (std::isfinite(v)) {
      lb.push_back(v);
    } else {
      lb.push_back(nullptr);
    }
  }
  j["log2_bound"] = std::move(lb);
  j["pass"] = curve.pass;
  j["all_pass"] = curve.all_pass;
  j["metadata"] = curve.metadata;
  return j;
}

}  // namespace designlab
