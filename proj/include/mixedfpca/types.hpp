#pragma once

// Shared domain types for mixed-type functional observations.

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfpca {

enum class VarKind : std::uint8_t { Continuous, Truncated, Ordinal, Binary };

struct VariableType {
  VarKind kind = VarKind::Continuous;
  int levels = 0;  // ordinal only, >= 2

  static VariableType continuous() { return {VarKind::Continuous, 0}; }
  static VariableType truncated() { return {VarKind::Truncated, 0}; }
  static VariableType binary() { return {VarKind::Binary, 0}; }
  static VariableType ordinal(int levels) {
    if (levels < 2) throw std::invalid_argument("ordinal levels must be >= 2");
    return {VarKind::Ordinal, levels};
  }

  bool operator==(const VariableType&) const = default;

  // number of interior cutoffs the observation map carries
  int n_cutoffs() const {
    switch (kind) {
      case VarKind::Continuous: return 0;
      case VarKind::Truncated: return 1;
      case VarKind::Binary: return 1;
      case VarKind::Ordinal: return levels - 1;
    }
    return 0;
  }
};

inline std::string to_string(const VariableType& t) {
  switch (t.kind) {
    case VarKind::Continuous: return "continuous";
    case VarKind::Truncated: return "truncated";
    case VarKind::Binary: return "binary";
    case VarKind::Ordinal: return "ordinal(" + std::to_string(t.levels) + ")";
  }
  return "?";
}

struct Observation {
  std::string subject_id;
  int component = 0;  // 0-based index
  double time = 0.0;  // normalized to [0,1]
  double value = 0.0;
};

// Ordered latent thresholds at one (component, time) cell. Empty for
// continuous margins; one entry for binary/truncated; levels-1 for ordinal.
// The boundary values -inf and +inf are implicit.
struct CutoffVector {
  std::vector<double> cuts;

  CutoffVector() = default;
  explicit CutoffVector(std::vector<double> c) : cuts(std::move(c)) {
    for (std::size_t i = 1; i < cuts.size(); ++i)
      if (cuts[i] < cuts[i - 1])
        throw std::invalid_argument("CutoffVector: thresholds must be nondecreasing");
  }

  std::size_t size() const { return cuts.size(); }
  bool empty() const { return cuts.empty(); }
  double operator[](std::size_t i) const { return cuts[i]; }

  // whether any threshold is infinite (degenerate margin: all mass on one side)
  bool degenerate() const {
    for (double c : cuts)
      if (!std::isfinite(c)) return true;
    return false;
  }
};

}  // namespace mfpca
