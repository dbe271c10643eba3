#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "aroc/binary_io.hpp"
#include "aroc/common.hpp"

namespace aroc {

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

struct ClusteringParams {
  std::string algorithm;
  std::optional<double> threshold;
  std::optional<std::size_t> requested_clusters;
  std::optional<std::size_t> k;
  std::optional<std::uint64_t> seed;
};

/// A partition of samples 0..n-1 into non-empty clusters with dense ids.
class Clustering {
 public:
  Clustering() = default;

  /// Relabels arbitrary keys to dense cluster ids in order of first appearance.
  template <typename Key>
  static Clustering from_keys(const std::vector<Key>& keys, ClusteringParams params = {}) {
    std::map<Key, ClusterId> dense;
    std::vector<ClusterId> assignment(keys.size());
    for (std::size_t i = 0; i < keys.size(); ++i) {
      auto [it, inserted] = dense.try_emplace(keys[i], static_cast<ClusterId>(dense.size()));
      assignment[i] = it->second;
    }
    return Clustering(std::move(assignment), std::move(params));
  }

  Clustering(std::vector<ClusterId> assignment, ClusteringParams params = {})
      : assignment_(std::move(assignment)), params_(std::move(params)) {
    if (assignment_.empty()) throw ValidationError("clustering needs at least one sample");
    ClusterId max_id = 0;
    for (auto c : assignment_) max_id = std::max(max_id, c);
    sizes_.assign(std::size_t{max_id} + 1, 0);
    for (auto c : assignment_) ++sizes_[c];
    for (std::size_t c = 0; c < sizes_.size(); ++c)
      if (sizes_[c] == 0) throw ValidationError("cluster ids must be dense; cluster " + std::to_string(c) + " is empty");
  }

  std::size_t num_samples() const noexcept { return assignment_.size(); }
  std::size_t num_clusters() const noexcept { return sizes_.size(); }
  ClusterId cluster_of(std::size_t sample) const { return assignment_[sample]; }
  const std::vector<ClusterId>& assignment() const noexcept { return assignment_; }
  std::size_t cluster_size(ClusterId c) const { return sizes_[c]; }
  const std::vector<std::size_t>& sizes() const noexcept { return sizes_; }
  const ClusteringParams& params() const noexcept { return params_; }

  /// Members grouped by cluster, each group ascending: members()[offsets[c] .. offsets[c+1]).
  struct Members {
    std::vector<std::size_t> offsets;
    std::vector<SampleId> ids;
    std::span<const SampleId> of(ClusterId c) const {
      return {ids.data() + offsets[c], offsets[c + 1] - offsets[c]};
    }
  };
  Members members() const {
    Members m;
    m.offsets.assign(num_clusters() + 1, 0);
    for (std::size_t c = 0; c < num_clusters(); ++c) m.offsets[c + 1] = m.offsets[c] + sizes_[c];
    m.ids.resize(assignment_.size());
    std::vector<std::size_t> cursor(m.offsets.begin(), m.offsets.end() - 1);
    for (std::size_t i = 0; i < assignment_.size(); ++i) m.ids[cursor[assignment_[i]]++] = static_cast<SampleId>(i);
    return m;
  }

  /// True when every cluster of this clustering lies inside one cluster of `coarser`.
  bool refines(const Clustering& coarser) const {
    if (coarser.num_samples() != num_samples()) return false;
    std::vector<std::int64_t> image(num_clusters(), -1);
    for (std::size_t i = 0; i < assignment_.size(); ++i) {
      auto& target = image[assignment_[i]];
      if (target < 0) target = coarser.cluster_of(i);
      else if (target != coarser.cluster_of(i)) return false;
    }
    return true;
  }

 private:
  std::vector<ClusterId> assignment_;
  std::vector<std::size_t> sizes_;
  ClusteringParams params_;
};

/// Disjoint sets with union by size and path halving.
class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n), size_(n, 1) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (size_[a] < size_[b] || (size_[a] == size_[b] && b < a)) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    ++unions_;
    return true;
  }

  std::size_t unions() const noexcept { return unions_; }

  /// Components as a clustering; cluster ids ordered by smallest member.
  Clustering to_clustering(ClusteringParams params = {}) {
    std::vector<ClusterId> assignment(parent_.size());
    std::vector<std::int64_t> id_of_root(parent_.size(), -1);
    ClusterId next = 0;
    for (std::size_t i = 0; i < parent_.size(); ++i) {
      auto& slot = id_of_root[find(i)];
      if (slot < 0) slot = next++;
      assignment[i] = static_cast<ClusterId>(slot);
    }
    return Clustering(std::move(assignment), std::move(params));
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
  std::size_t unions_ = 0;
};

// ---------------------------------------------------------------------------
// Clustering file: '#'-prefixed "key=value" header lines, then
// "<sample_id>\t<cluster_id>" rows.

inline std::string format_clustering_header(const ClusteringParams& p) {
  std::ostringstream out;
  out << "# algorithm=" << p.algorithm << '\n';
  if (p.threshold) out << "# threshold=" << format_double(*p.threshold) << '\n';
  if (p.requested_clusters) out << "# C=" << *p.requested_clusters << '\n';
  if (p.k) out << "# k=" << *p.k << '\n';
  if (p.seed) out << "# seed=" << *p.seed << '\n';
  return out.str();
}

inline std::string format_clustering(const Clustering& c, const std::string& extra_header = {}) {
  std::string out = format_clustering_header(c.params());
  out += extra_header;
  out.reserve(out.size() + c.num_samples() * 12);
  char buf[48];
  for (std::size_t i = 0; i < c.num_samples(); ++i) {
    const int len = std::snprintf(buf, sizeof buf, "%zu\t%u\n", i, static_cast<unsigned>(c.cluster_of(i)));
    out.append(buf, static_cast<std::size_t>(len));
  }
  return out;
}

inline void save_clustering(const std::string& path, const Clustering& c, const std::string& extra_header = {}) {
  io::write_text(path, format_clustering(c, extra_header));
}

inline Clustering parse_clustering(std::string_view text) {
  ClusteringParams params;
  std::vector<std::int64_t> keys;
  std::size_t pos = 0;
  auto parse_u64 = [](std::string_view s, std::uint64_t& v) {
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    return ec == std::errc() && p == s.data() + s.size();
  };
  while (pos < text.size()) {
    const std::size_t line_start = pos;
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line.front() == '#') {
      line.remove_prefix(1);
      while (!line.empty() && line.front() == ' ') line.remove_prefix(1);
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) continue;
      const auto key = line.substr(0, eq);
      const auto value = line.substr(eq + 1);
      std::uint64_t u = 0;
      if (key == "algorithm") params.algorithm = std::string(value);
      else if (key == "threshold") params.threshold = std::strtod(std::string(value).c_str(), nullptr);
      else if (key == "C" && parse_u64(value, u)) params.requested_clusters = u;
      else if (key == "k" && parse_u64(value, u)) params.k = u;
      else if (key == "seed" && parse_u64(value, u)) params.seed = u;
      continue;
    }
    const auto tab = line.find('\t');
    std::uint64_t id = 0, cluster = 0;
    if (tab == std::string_view::npos || !parse_u64(line.substr(0, tab), id) ||
        !parse_u64(line.substr(tab + 1), cluster))
      throw FormatError("clustering row must be '<sample_id>\\t<cluster_id>'", line_start);
    if (id >= keys.size()) keys.resize(id + 1, -1);
    if (keys[id] >= 0) throw ValidationError("sample " + std::to_string(id) + " assigned twice");
    keys[id] = static_cast<std::int64_t>(cluster);
  }
  if (keys.empty()) throw ValidationError("clustering file has no rows");
  for (std::size_t i = 0; i < keys.size(); ++i)
    if (keys[i] < 0) throw ValidationError("sample " + std::to_string(i) + " has no cluster");
  return Clustering::from_keys(keys, std::move(params));
}

inline Clustering load_clustering(const std::string& path) {
  const auto bytes = io::read_file(path);
  return parse_clustering(std::string_view(bytes.data(), bytes.size()));
}

}  // namespace aroc
