#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "designlab/ensembles.hpp"
#include "designlab/numkit.hpp"

namespace designlab {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shortest round-trip decimal for a double (what the JSON layer also uses).
inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline nlohmann::json ensemble_to_json(const UnitaryEnsemble& ens) {
  if (!ens.enumerable() || ens.iterated()) {
    throw std::invalid_argument("ensemble_to_json: only explicit ensembles serialize");
  }
  nlohmann::json j;
  j["d"] = ens.dim();
  j["weights"] = ens.weights();
  nlohmann::json us = nlohmann::json::array();
  for (const CMat& u : ens.elements()) {
    nlohmann::json m = nlohmann::json::array();
    for (Index r = 0; r < u.rows(); ++r) {
      for (Index c = 0; c < u.cols(); ++c) {
        m.push_back({u(r, c).real(), u(r, c).imag()});
      }
    }
    us.push_back(std::move(m));
  }
  j["unitaries"] = std::move(us);
  return j;
}

inline UnitaryEnsemble ensemble_from_json(const nlohmann::json& j, std::string label = "file") {
  if (!j.contains("d") || !j.contains("unitaries")) {
    throw ConfigError("ensemble JSON requires fields d and unitaries");
  }
  const Index d = j.at("d").get<Index>();
  if (d < 1 || d > kMaxStateDim) throw ConfigError("ensemble JSON: bad dimension");
  std::vector<double> weights;
  if (j.contains("weights")) weights = j.at("weights").get<std::vector<double>>();
  std::vector<CMat> els;
  for (const auto& m : j.at("unitaries")) {
    if (static_cast<Index>(m.size()) != d * d) {
      throw ConfigError("ensemble JSON: matrix entry count != d^2");
    }
    CMat u(d, d);
    Index i = 0;
    for (const auto& e : m) {
      if (!e.is_array() || e.size() != 2) throw ConfigError("ensemble JSON: entry is not [re, im]");
      u(i / d, i % d) = Complex(e[0].get<double>(), e[1].get<double>());
      ++i;
    }
    els.push_back(std::move(u));
  }
  try {
    return UnitaryEnsemble::make_explicit(d, std::move(els), std::move(weights), std::move(label));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("ensemble JSON: ") + e.what());
  }
}

inline void save_ensemble(const std::string& path, const UnitaryEnsemble& ens) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_ensemble: cannot open " + path);
  out << ensemble_to_json(ens).dump(2) << "\n";
  if (!out) throw std::runtime_error("save_ensemble: write failed for " + path);
}

inline UnitaryEnsemble load_ensemble(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("load_ensemble: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("load_ensemble: ") + e.what());
  }
  return ensemble_from_json(j, path);
}

// FNV-1a over the canonical (sorted-key) JSON dump.
inline std::string config_hash(const nlohmann::json& j) {
  const std::string s = j.dump();
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace designlab
