#pragma once

// Mixed-type functional dataset: ingestion, validation, serialization.
//
// On-disk format is long-form CSV (subject_id, component, time, value) with
// a JSON sidecar declaring component types and the affine time normalization:
//   {"components":[{"name":"mood","type":"ordinal","levels":4}, ...],
//    "time_range":[a, b]}

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mixedfpca/types.hpp"

namespace mfpca {

struct ColumnSchema {
  std::string subject = "subject_id";
  std::string component = "component";
  std::string time = "time";
  std::string value = "value";
};

struct ComponentSpec {
  std::string name;
  VariableType type;
};

class MixedDataset {
 public:
  MixedDataset(std::vector<ComponentSpec> components,
               std::vector<Observation> observations)
      : components_(std::move(components)), obs_(std::move(observations)) {
    if (components_.empty())
      throw std::invalid_argument("dataset: no components declared");
    if (obs_.empty()) throw std::invalid_argument("dataset: no observations");
    validate_and_index();
  }

  int n_components() const { return static_cast<int>(components_.size()); }
  int n_subjects() const { return static_cast<int>(subject_ids_.size()); }
  const std::vector<ComponentSpec>& components() const { return components_; }
  const VariableType& type(int j) const { return components_.at(j).type; }
  const std::vector<Observation>& observations() const { return obs_; }
  const std::vector<std::string>& subject_ids() const { return subject_ids_; }
  const std::vector<double>& pooled_times() const { return pooled_times_; }

  int subject_index(const std::string& id) const {
    const auto it = subject_lookup_.find(id);
    if (it == subject_lookup_.end())
      throw std::out_of_range("dataset: unknown subject " + id);
    return it->second;
  }

  int time_index(double t) const {
    const auto it = std::lower_bound(pooled_times_.begin(), pooled_times_.end(), t);
    if (it == pooled_times_.end() || *it != t)
      throw std::out_of_range("dataset: time not in pooled grid");
    return static_cast<int>(it - pooled_times_.begin());
  }

  // observations of subject i on component j as (time index, value) pairs,
  // sorted by time
  const std::vector<std::pair<int, double>>& series(int i, int j) const {
    return series_.at(static_cast<std::size_t>(i) * components_.size() + j);
  }

  // all (subject index, value) pairs at (component j, pooled time index r),
  // sorted by subject index
  const std::vector<std::pair<int, double>>& cell(int j, int r) const {
    return cells_.at(static_cast<std::size_t>(j) * pooled_times_.size() + r);
  }

  // values (cross-subject) at (component j, pooled time index r)
  std::vector<double> values_at(int j, int r) const {
    std::vector<double> out;
    const auto& c = cell(j, r);
    out.reserve(c.size());
    for (const auto& [i, v] : c) out.push_back(v);
    return out;
  }

 private:
  void validate_and_index();

  std::vector<ComponentSpec> components_;
  std::vector<Observation> obs_;
  std::vector<std::string> subject_ids_;
  std::map<std::string, int> subject_lookup_;
  std::vector<double> pooled_times_;
  std::vector<std::vector<std::pair<int, double>>> series_;
  std::vector<std::vector<std::pair<int, double>>> cells_;
};

inline bool value_consistent(const VariableType& t, double v) {
  if (!std::isfinite(v)) return false;
  switch (t.kind) {
    case VarKind::Continuous: return true;
    case VarKind::Truncated: return v >= 0.0;
    case VarKind::Binary: return v == 0.0 || v == 1.0;
    case VarKind::Ordinal:
      return v == std::floor(v) && v >= 0.0 && v <= t.levels - 1;
  }
  return false;
}

inline void MixedDataset::validate_and_index() {
  const int J = n_components();
  std::vector<std::string> bad;
  std::set<std::tuple<std::string, int, double>> seen;
  std::set<double> times;
  std::set<std::string> subjects;
  for (const auto& o : obs_) {
    if (o.component < 0 || o.component >= J)
      throw std::invalid_argument("dataset: component index out of range for subject " +
                                  o.subject_id);
    if (o.time < 0.0 || o.time > 1.0)
      throw std::invalid_argument("dataset: time outside [0,1] for subject " +
                                  o.subject_id);
    if (!value_consistent(components_[o.component].type, o.value)) {
      std::ostringstream ss;
      ss << "(" << o.subject_id << ", " << components_[o.component].name << ", "
         << o.time << ") value " << o.value;
      bad.push_back(ss.str());
      continue;
    }
    if (!seen.insert({o.subject_id, o.component, o.time}).second) {
      std::ostringstream ss;
      ss << "duplicate (" << o.subject_id << ", " << components_[o.component].name
         << ", " << o.time << ")";
      throw std::invalid_argument("dataset: " + ss.str());
    }
    times.insert(o.time);
    subjects.insert(o.subject_id);
  }
  if (!bad.empty()) {
    std::string msg = "dataset: type-inconsistent values:";
    for (std::size_t i = 0; i < bad.size() && i < 8; ++i) msg += " " + bad[i];
    if (bad.size() > 8) msg += " ... (" + std::to_string(bad.size()) + " total)";
    throw std::invalid_argument(msg);
  }
  subject_ids_.assign(subjects.begin(), subjects.end());
  for (int i = 0; i < static_cast<int>(subject_ids_.size()); ++i)
    subject_lookup_[subject_ids_[i]] = i;
  pooled_times_.assign(times.begin(), times.end());

  series_.assign(static_cast<std::size_t>(n_subjects()) * J, {});
  cells_.assign(static_cast<std::size_t>(J) * pooled_times_.size(), {});
  for (const auto& o : obs_) {
    const int i = subject_lookup_[o.subject_id];
    const int r = time_index(o.time);
    series_[static_cast<std::size_t>(i) * J + o.component].push_back({r, o.value});
    cells_[static_cast<std::size_t>(o.component) * pooled_times_.size() + r]
        .push_back({i, o.value});
  }
  for (auto& s : series_) std::sort(s.begin(), s.end());
  for (auto& c : cells_) std::sort(c.begin(), c.end());
}

// m equidistant points spanning [0,1] inclusive.
inline std::vector<double> regular_grid(int m) {
  if (m < 2) throw std::invalid_argument("regular_grid: m must be >= 2");
  std::vector<double> g(m);
  for (int i = 0; i < m; ++i) g[i] = static_cast<double>(i) / (m - 1);
  return g;
}

// ---------------------------------------------------------------------------
// Sidecar + CSV ingestion
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline VariableType parse_type(const std::string& s, int levels) {
  if (s == "continuous") return VariableType::continuous();
  if (s == "truncated") return VariableType::truncated();
  if (s == "binary") return VariableType::binary();
  if (s == "ordinal") return VariableType::ordinal(levels);
  throw std::invalid_argument("sidecar: unknown component type '" + s + "'");
}

}  // namespace detail

struct Sidecar {
  std::vector<ComponentSpec> components;
  double time_lo = 0.0, time_hi = 1.0;
};

inline Sidecar load_sidecar(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open sidecar " + path);
  nlohmann::json j;
  in >> j;
  Sidecar sc;
  for (const auto& c : j.at("components")) {
    ComponentSpec spec;
    spec.name = c.at("name").get<std::string>();
    spec.type = detail::parse_type(c.at("type").get<std::string>(),
                                   c.value("levels", 0));
    sc.components.push_back(spec);
  }
  if (j.contains("time_range")) {
    sc.time_lo = j["time_range"][0].get<double>();
    sc.time_hi = j["time_range"][1].get<double>();
    if (!(sc.time_hi > sc.time_lo))
      throw std::invalid_argument("sidecar: time_range must be increasing");
  }
  return sc;
}

inline MixedDataset load_dataset(const std::string& csv_path, const Sidecar& sidecar,
                                 const ColumnSchema& schema = {}) {
  std::ifstream in(csv_path);
  if (!in) throw std::runtime_error("cannot open dataset " + csv_path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("dataset: no observations");
  const auto header = detail::split_csv_line(line);
  auto col = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw std::runtime_error("dataset: missing column '" + name + "'");
    return static_cast<int>(it - header.begin());
  };
  const int c_subj = col(schema.subject), c_comp = col(schema.component);
  const int c_time = col(schema.time), c_val = col(schema.value);

  std::map<std::string, int> comp_lookup;
  for (int j = 0; j < static_cast<int>(sidecar.components.size()); ++j)
    comp_lookup[sidecar.components[j].name] = j;

  std::vector<Observation> obs;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto f = detail::split_csv_line(line);
    const int needed = std::max({c_subj, c_comp, c_time, c_val});
    if (static_cast<int>(f.size()) <= needed)
      throw std::runtime_error("dataset: malformed row " + std::to_string(row));
    Observation o;
    o.subject_id = f[c_subj];
    const auto it = comp_lookup.find(f[c_comp]);
    if (it != comp_lookup.end()) {
      o.component = it->second;
    } else {
      try {
        o.component = std::stoi(f[c_comp]) - 1;  // 1-based index fallback
      } catch (...) {
        throw std::runtime_error("dataset: unknown component '" + f[c_comp] +
                                 "' at row " + std::to_string(row));
      }
    }
    try {
      const double raw_t = std::stod(f[c_time]);
      o.time = (raw_t - sidecar.time_lo) / (sidecar.time_hi - sidecar.time_lo);
      o.value = std::stod(f[c_val]);
    } catch (const std::exception&) {
      throw std::runtime_error("dataset: malformed row " + std::to_string(row));
    }
    if (o.time < -1e-12 || o.time > 1.0 + 1e-12)
      throw std::runtime_error("dataset: time outside declared range at row " +
                               std::to_string(row));
    o.time = std::clamp(o.time, 0.0, 1.0);
    obs.push_back(std::move(o));
  }
  if (obs.empty()) throw std::runtime_error("dataset: no observations");
  return MixedDataset(sidecar.components, std::move(obs));
}

}  // namespace mfpca
