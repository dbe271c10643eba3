#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "aroc/binary_io.hpp"
#include "aroc/common.hpp"
#include "aroc/dataset.hpp"

namespace aroc {

enum class KnnMethod { exact, kdforest };

inline const char* to_string(KnnMethod m) { return m == KnnMethod::exact ? "exact" : "kdforest"; }

/// Top-k neighbor lists for every sample. Each list holds k+1 entries: the
/// sample itself at rank 0 (distance 0) followed by its k nearest other
/// samples at ranks 1..k, ascending by (distance, id).
class NeighborLists {
 public:
  static constexpr std::size_t kAbsent = std::numeric_limits<std::size_t>::max();

  NeighborLists(std::size_t n, std::size_t k, KnnMethod method, std::vector<SampleId> ids,
                std::vector<float> distances)
      : n_(n), k_(k), method_(method), ids_(std::move(ids)), dists_(std::move(distances)) {
    validate();
  }

  std::size_t size() const noexcept { return n_; }
  std::size_t k() const noexcept { return k_; }
  KnnMethod method() const noexcept { return method_; }

  /// Ranks 0..k of sample a's list (entry 0 is a itself).
  std::span<const SampleId> ids(std::size_t a) const noexcept {
    return {ids_.data() + a * (k_ + 1), k_ + 1};
  }
  std::span<const float> distances(std::size_t a) const noexcept {
    return {dists_.data() + a * (k_ + 1), k_ + 1};
  }
  SampleId neighbor(std::size_t a, std::size_t rank) const noexcept { return ids_[a * (k_ + 1) + rank]; }
  float distance(std::size_t a, std::size_t rank) const noexcept { return dists_[a * (k_ + 1) + rank]; }

  /// Rank of x in a's list, or kAbsent.
  std::size_t rank_of(std::size_t a, std::size_t x) const noexcept {
    const auto list = ids(a);
    for (std::size_t r = 0; r < list.size(); ++r)
      if (list[r] == x) return r;
    return kAbsent;
  }

  /// Keeps only ranks 0..k (k <= current k).
  NeighborLists truncated(std::size_t k) const {
    if (k > k_) throw ValidationError("cannot truncate lists of length " + std::to_string(k_) + " to " + std::to_string(k));
    std::vector<SampleId> ids(n_ * (k + 1));
    std::vector<float> dists(n_ * (k + 1));
    for (std::size_t a = 0; a < n_; ++a) {
      std::copy_n(this->ids(a).begin(), k + 1, ids.begin() + static_cast<std::ptrdiff_t>(a * (k + 1)));
      std::copy_n(distances(a).begin(), k + 1, dists.begin() + static_cast<std::ptrdiff_t>(a * (k + 1)));
    }
    return NeighborLists(n_, k, method_, std::move(ids), std::move(dists));
  }

  /// Throws ValidationError unless every list is well formed.
  void validate() const {
    if (n_ == 0) throw ValidationError("neighbor lists need at least one sample");
    if (k_ >= n_) throw ValidationError("neighbor list length k must be < n");
    if (ids_.size() != n_ * (k_ + 1) || dists_.size() != ids_.size())
      throw ValidationError("neighbor list storage does not match n*(k+1)");
    std::vector<SampleId> seen;
    for (std::size_t a = 0; a < n_; ++a) {
      const auto list = ids(a);
      const auto d = distances(a);
      if (list[0] != a || d[0] != 0.0f)
        throw ValidationError("list " + std::to_string(a) + " must start with the sample itself at distance 0");
      for (std::size_t r = 1; r <= k_; ++r) {
        if (list[r] >= n_) throw ValidationError("neighbor id out of range in list " + std::to_string(a));
        if (!(d[r] >= d[r - 1]) || !std::isfinite(d[r]))
          throw ValidationError("distances must be non-decreasing in list " + std::to_string(a));
      }
      seen.assign(list.begin(), list.end());
      std::sort(seen.begin(), seen.end());
      if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
        throw ValidationError("duplicate neighbor in list " + std::to_string(a));
    }
  }

 private:
  std::size_t n_;
  std::size_t k_;
  KnnMethod method_;
  std::vector<SampleId> ids_;
  std::vector<float> dists_;
};

// ---------------------------------------------------------------------------
// KNN1 file: "KNN1", u64 n, u64 k, then per sample k (u64 id, f32 dist) pairs
// for ranks 1..k. Rank 0 (self) is implicit.

inline std::vector<char> encode_neighbor_lists(const NeighborLists& lists) {
  std::vector<char> out;
  out.reserve(20 + lists.size() * lists.k() * 12);
  io::put_magic(out, "KNN1");
  io::put_u64(out, lists.size());
  io::put_u64(out, lists.k());
  for (std::size_t a = 0; a < lists.size(); ++a)
    for (std::size_t r = 1; r <= lists.k(); ++r) {
      io::put_u64(out, lists.neighbor(a, r));
      io::put_f32(out, lists.distance(a, r));
    }
  return out;
}

inline NeighborLists decode_neighbor_lists(const std::vector<char>& bytes,
                                           KnnMethod method = KnnMethod::exact) {
  io::Reader in(bytes);
  in.expect_magic("KNN1");
  const std::uint64_t n = in.u64("sample count");
  const std::uint64_t k = in.u64("list length");
  if (n == 0 || k == 0 || k >= n) throw FormatError("header needs n >= 2 and 1 <= k < n", 4);
  if (n > std::numeric_limits<SampleId>::max()) throw FormatError("sample count exceeds 32-bit ids", 4);
  if (in.remaining() / 12 / k < n)
    throw FormatError("truncated payload", in.position() + (in.remaining() / 12) * 12);
  if (in.remaining() != n * k * 12) throw FormatError("trailing bytes after payload", in.position() + n * k * 12);
  std::vector<SampleId> ids(n * (k + 1));
  std::vector<float> dists(n * (k + 1));
  for (std::uint64_t a = 0; a < n; ++a) {
    ids[a * (k + 1)] = static_cast<SampleId>(a);
    dists[a * (k + 1)] = 0.0f;
    for (std::uint64_t r = 1; r <= k; ++r) {
      const std::size_t offset = in.position();
      const std::uint64_t id = in.u64("neighbor id");
      const float d = in.f32("neighbor distance");
      if (id >= n) throw FormatError("neighbor id out of range", offset);
      if (!std::isfinite(d) || d < 0.0f) throw FormatError("invalid neighbor distance", offset + 8);
      ids[a * (k + 1) + r] = static_cast<SampleId>(id);
      dists[a * (k + 1) + r] = d;
    }
  }
  try {
    return NeighborLists(n, k, method, std::move(ids), std::move(dists));
  } catch (const ValidationError& e) {
    throw FormatError(std::string("invalid neighbor lists: ") + e.what(), 20);
  }
}

inline void save_neighbor_lists(const std::string& path, const NeighborLists& lists) {
  io::write_file(path, encode_neighbor_lists(lists));
}

inline NeighborLists load_neighbor_lists(const std::string& path, KnnMethod method = KnnMethod::exact) {
  return decode_neighbor_lists(io::read_file(path), method);
}

// ---------------------------------------------------------------------------
// Exact search.

namespace detail {

struct Candidate {
  double dist2;
  SampleId id;
  friend bool operator<(const Candidate& a, const Candidate& b) {
    return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.id < b.id);
  }
};

/// Assembles a list row from candidates that exclude `self`, sorted ascending.
inline void write_row(std::size_t self, std::span<const Candidate> sorted, std::size_t k,
                      SampleId* ids, float* dists) {
  ids[0] = static_cast<SampleId>(self);
  dists[0] = 0.0f;
  for (std::size_t r = 0; r < k; ++r) {
    ids[r + 1] = sorted[r].id;
    dists[r + 1] = static_cast<float>(std::sqrt(sorted[r].dist2));
  }
}

}  // namespace detail

/// The k exactly-nearest other samples of `query`, ascending by (distance, id).
inline std::vector<detail::Candidate> exact_query(const EmbeddingSet& emb, std::size_t query, std::size_t k) {
  std::vector<detail::Candidate> all;
  all.reserve(emb.size() - 1);
  const auto q = emb.row(query);
  for (std::size_t j = 0; j < emb.size(); ++j)
    if (j != query) all.push_back({squared_l2(q, emb.row(j)), static_cast<SampleId>(j)});
  k = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end());
  all.resize(k);
  return all;
}

inline NeighborLists exact_knn(const EmbeddingSet& emb, std::size_t k) {
  const std::size_t n = emb.size();
  if (k >= n) throw ValidationError("exact_knn needs k < n (k = " + std::to_string(k) + ", n = " + std::to_string(n) + ")");
  if (k == 0) throw ValidationError("exact_knn needs k >= 1");
  std::vector<SampleId> ids(n * (k + 1));
  std::vector<float> dists(n * (k + 1));
  parallel_for(n, [&](std::size_t a) {
    const auto best = exact_query(emb, a, k);
    detail::write_row(a, best, k, ids.data() + a * (k + 1), dists.data() + a * (k + 1));
  });
  return NeighborLists(n, k, KnnMethod::exact, std::move(ids), std::move(dists));
}

// ---------------------------------------------------------------------------
// Search budget: number of distinct points examined per shard per query.

struct SearchBudget {
  enum class Mode { fixed, logarithmic, linear };

  Mode mode = Mode::fixed;
  double value = 2000;
  std::size_t reference_size = 0;  ///< n_ref for logarithmic and linear modes

  static SearchBudget fixed(double c) { return {Mode::fixed, c, 0}; }
  static SearchBudget linear(double c, std::size_t n_ref) { return {Mode::linear, c, n_ref}; }
  static SearchBudget logarithmic(double c, std::size_t n_ref) { return {Mode::logarithmic, c, n_ref}; }
  /// Budget large enough to make every shard search exhaustive.
  static SearchBudget unbounded() { return {Mode::fixed, std::numeric_limits<double>::infinity(), 0}; }

  /// fixed: c; linear: c * n / n_ref; logarithmic: c * ln(n) / ln(n_ref).
  /// Never less than k.
  std::size_t resolve(std::size_t n, std::size_t k) const {
    double v = value;
    if (mode == Mode::linear) v = value * double(n) / double(reference_size);
    if (mode == Mode::logarithmic)
      v = value * std::log(double(std::max<std::size_t>(n, 2))) / std::log(double(reference_size));
    if (!(v < 1e18)) return std::numeric_limits<std::size_t>::max();
    return std::max<std::size_t>(k, static_cast<std::size_t>(std::llround(v)));
  }

  /// Accepts "c", "fixed:c", "linear:c@n_ref", "log:c@n_ref".
  static SearchBudget parse(std::string_view text) {
    auto number = [&](std::string_view s, const char* what) {
      double v = 0;
      const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || p != s.data() + s.size() || !(v > 0))
        throw ValidationError(std::string("bad budget ") + what + " in '" + std::string(text) + "'");
      return v;
    };
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) return fixed(number(text, "value"));
    const auto kind = text.substr(0, colon);
    auto rest = text.substr(colon + 1);
    if (kind == "fixed") return fixed(number(rest, "value"));
    const auto at = rest.find('@');
    if (at == std::string_view::npos)
      throw ValidationError("budget '" + std::string(text) + "' needs a reference size, e.g. linear:2000@13233");
    const double c = number(rest.substr(0, at), "value");
    const auto n_ref = static_cast<std::size_t>(number(rest.substr(at + 1), "reference size"));
    if (kind == "linear") return linear(c, n_ref);
    if (kind == "log" || kind == "logarithmic") {
      if (n_ref < 2) throw ValidationError("logarithmic budget needs reference size >= 2");
      return logarithmic(c, n_ref);
    }
    throw ValidationError("unknown budget mode '" + std::string(kind) + "'");
  }

  std::string to_string() const {
    auto num = [](double v) {
      std::string s = std::to_string(v);
      s.erase(s.find_last_not_of('0') + 1);
      if (s.back() == '.') s.pop_back();
      return s;
    };
    switch (mode) {
      case Mode::fixed: return std::isinf(value) ? "unbounded" : "fixed:" + num(value);
      case Mode::linear: return "linear:" + num(value) + "@" + std::to_string(reference_size);
      case Mode::logarithmic: return "log:" + num(value) + "@" + std::to_string(reference_size);
    }
    return {};
  }
};

// ---------------------------------------------------------------------------
// Randomized k-d forest over disjoint shards.

struct KdForestParams {
  std::size_t num_trees = 4;
  std::size_t shard_size = 1'000'000;
  std::size_t leaf_size = 1;
  std::uint64_t seed = 0;
};

class KdForestIndex {
 public:
  /// Internal nodes split on `dim` at `split`; leaves (dim < 0) own the
  /// index range [first, second) of the tree's point permutation.
  struct Node {
    std::uint32_t first = 0;
    std::uint32_t second = 0;
    std::int32_t dim = -1;
    double split = 0.0;
  };
  struct Tree {
    std::vector<Node> nodes;       // nodes[0] is the root
    std::vector<SampleId> points;  // global sample ids
  };
  struct Shard {
    SampleId begin = 0;
    SampleId end = 0;
    std::vector<Tree> trees;
    std::size_t size() const { return end - begin; }
  };

  static constexpr std::size_t kMeanSample = 100;  // points used to pick a split
  static constexpr std::size_t kTopDims = 5;       // random choice among this many highest-variance dims

  KdForestIndex(const EmbeddingSet& emb, const KdForestParams& params) : params_(params), n_(emb.size()), d_(emb.dim()) {
    if (params.num_trees < 1) throw ValidationError("num_trees must be >= 1");
    if (params.shard_size < 1) throw ValidationError("shard_size must be >= 1");
    if (params.leaf_size < 1) throw ValidationError("leaf_size must be >= 1");
    const std::size_t num_shards = (n_ + params.shard_size - 1) / params.shard_size;
    shards_.resize(num_shards);
    for (std::size_t s = 0; s < num_shards; ++s) {
      shards_[s].begin = static_cast<SampleId>(s * params.shard_size);
      shards_[s].end = static_cast<SampleId>(std::min(n_, (s + 1) * params.shard_size));
      shards_[s].trees.resize(params.num_trees);
    }
    parallel_for_chunks(num_shards * params.num_trees, 1, [&](std::size_t b, std::size_t e) {
      for (std::size_t job = b; job < e; ++job) {
        const std::size_t s = job / params.num_trees;
        const std::size_t t = job % params.num_trees;
        build_tree(emb, shards_[s], shards_[s].trees[t], detail::mix_seed(params.seed, 1000 + job));
      }
    });
  }

  const KdForestParams& params() const noexcept { return params_; }
  std::size_t size() const noexcept { return n_; }
  std::size_t dim() const noexcept { return d_; }
  const std::vector<Shard>& shards() const noexcept { return shards_; }

  /// Byte image of every tree's topology, split values and point order.
  std::vector<char> serialize_structure() const {
    std::vector<char> out;
    for (const auto& shard : shards_) {
      io::put_u64(out, shard.begin);
      io::put_u64(out, shard.end);
      for (const auto& tree : shard.trees) {
        io::put_u64(out, tree.nodes.size());
        for (const auto& node : tree.nodes) {
          io::put_u64(out, node.first);
          io::put_u64(out, node.second);
          io::put_u64(out, static_cast<std::uint64_t>(static_cast<std::int64_t>(node.dim)));
          io::put_u64(out, std::bit_cast<std::uint64_t>(node.split));
        }
        for (auto p : tree.points) io::put_u64(out, p);
      }
    }
    return out;
  }

 private:
  void build_tree(const EmbeddingSet& emb, const Shard& shard, Tree& tree, std::uint64_t seed) const {
    detail::Sampler rng(seed);
    tree.points.resize(shard.size());
    for (std::size_t i = 0; i < shard.size(); ++i) tree.points[i] = static_cast<SampleId>(shard.begin + i);
    for (std::size_t i = tree.points.size(); i > 1; --i) std::swap(tree.points[i - 1], tree.points[rng.below(i)]);
    tree.nodes.reserve(2 * shard.size() / params_.leaf_size + 1);
    tree.nodes.emplace_back();
    divide(emb, tree, 0, 0, static_cast<std::uint32_t>(shard.size()), rng);
  }

  void divide(const EmbeddingSet& emb, Tree& tree, std::size_t node, std::uint32_t lo, std::uint32_t hi,
              detail::Sampler& rng) const {
    const std::uint32_t count = hi - lo;
    if (count <= params_.leaf_size) {
      tree.nodes[node] = Node{lo, hi, -1, 0.0};
      return;
    }
    // Mean and variance over a prefix of the (shuffled) range.
    const std::size_t sample = std::min<std::size_t>(count, kMeanSample);
    std::vector<double> mean(d_, 0.0), var(d_, 0.0);
    for (std::size_t i = 0; i < sample; ++i) {
      const auto row = emb.row(tree.points[lo + i]);
      for (std::size_t j = 0; j < d_; ++j) mean[j] += row[j];
    }
    for (auto& m : mean) m /= double(sample);
    for (std::size_t i = 0; i < sample; ++i) {
      const auto row = emb.row(tree.points[lo + i]);
      for (std::size_t j = 0; j < d_; ++j) var[j] += (row[j] - mean[j]) * (row[j] - mean[j]);
    }
    std::vector<std::uint32_t> dims(d_);
    for (std::uint32_t j = 0; j < d_; ++j) dims[j] = j;
    const std::size_t top = std::min(kTopDims, d_);
    std::partial_sort(dims.begin(), dims.begin() + static_cast<std::ptrdiff_t>(top), dims.end(),
                      [&](std::uint32_t a, std::uint32_t b) { return var[a] > var[b] || (var[a] == var[b] && a < b); });
    const std::uint32_t dim = dims[rng.below(top)];
    const double split = mean[dim];

    // Three-way partition: [< split | == split | > split].
    auto* first = tree.points.data() + lo;
    auto* last = tree.points.data() + hi;
    auto* mid1 = std::partition(first, last, [&](SampleId p) { return double(emb.row(p)[dim]) < split; });
    auto* mid2 = std::partition(mid1, last, [&](SampleId p) { return double(emb.row(p)[dim]) <= split; });
    const auto lim1 = static_cast<std::uint32_t>(mid1 - first);
    const auto lim2 = static_cast<std::uint32_t>(mid2 - first);
    std::uint32_t index;
    if (lim1 > count / 2)
      index = lim1;
    else if (lim2 < count / 2)
      index = lim2;
    else
      index = count / 2;
    if (index == 0 || index == count) index = count / 2;

    const auto left_child = static_cast<std::uint32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    const auto right_child = static_cast<std::uint32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes[node] = Node{left_child, right_child, static_cast<std::int32_t>(dim), split};
    divide(emb, tree, left_child, lo, lo + index, rng);
    divide(emb, tree, right_child, lo + index, hi, rng);
  }

  KdForestParams params_;
  std::size_t n_;
  std::size_t d_;
  std::vector<Shard> shards_;
};

inline KdForestIndex build_index(const EmbeddingSet& emb, std::size_t num_trees, std::size_t shard_size,
                                 std::uint64_t seed, std::size_t leaf_size = 1) {
  return KdForestIndex(emb, KdForestParams{num_trees, shard_size, leaf_size, seed});
}

namespace detail {

/// Bounded best-first result set, worst element on top.
class ResultSet {
 public:
  explicit ResultSet(std::size_t capacity) : capacity_(capacity) { heap_.reserve(capacity); }
  bool full() const { return heap_.size() >= capacity_; }
  double worst() const { return full() ? heap_.front().dist2 : std::numeric_limits<double>::infinity(); }
  void add(Candidate c) {
    if (!full()) {
      heap_.push_back(c);
      std::push_heap(heap_.begin(), heap_.end());
    } else if (c < heap_.front()) {
      std::pop_heap(heap_.begin(), heap_.end());
      heap_.back() = c;
      std::push_heap(heap_.begin(), heap_.end());
    }
  }
  std::vector<Candidate>& items() { return heap_; }

 private:
  std::size_t capacity_;
  std::vector<Candidate> heap_;
};

struct Branch {
  double priority;  // accumulated squared split offsets along the path (search order)
  double bound;     // valid lower bound on squared distance to any point below
  std::uint32_t node;
  std::uint32_t tree;
  std::uint64_t seq;
  friend bool operator>(const Branch& a, const Branch& b) {
    return a.priority > b.priority || (a.priority == b.priority && a.seq > b.seq);
  }
};

/// Best-first search of one shard's trees sharing one priority queue. Stops
/// once `budget` distinct points were examined and the result set is full.
class ShardSearcher {
 public:
  ShardSearcher(const EmbeddingSet& emb, const KdForestIndex::Shard& shard)
      : emb_(emb), shard_(shard), stamp_(shard.size(), 0) {}

  void search(std::span<const float> query, std::size_t capacity, std::size_t budget,
              std::vector<Candidate>& out) {
    ++epoch_;
    if (epoch_ == 0) {
      std::fill(stamp_.begin(), stamp_.end(), 0);
      epoch_ = 1;
    }
    query_ = query;
    budget_ = budget;
    checks_ = 0;
    seq_ = 0;
    ResultSet result(std::min(capacity, shard_.size()));
    heap_ = {};
    for (std::uint32_t t = 0; t < shard_.trees.size(); ++t) descend(result, t, 0, 0.0, 0.0);
    while (!heap_.empty() && (checks_ < budget_ || !result.full())) {
      const Branch b = heap_.top();
      heap_.pop();
      if (result.full() && b.bound > result.worst()) continue;
      descend(result, b.tree, b.node, b.priority, b.bound);
    }
    out.insert(out.end(), result.items().begin(), result.items().end());
  }

 private:
  void descend(ResultSet& result, std::uint32_t t, std::uint32_t node, double priority, double bound) {
    const auto& tree = shard_.trees[t];
    for (;;) {
      if (result.full() && bound > result.worst()) return;
      const auto& nd = tree.nodes[node];
      if (nd.dim < 0) break;
      const double diff = double(query_[static_cast<std::size_t>(nd.dim)]) - nd.split;
      const std::uint32_t best = diff < 0 ? nd.first : nd.second;
      const std::uint32_t other = diff < 0 ? nd.second : nd.first;
      const double other_bound = std::max(bound, diff * diff);
      if (!result.full() || other_bound <= result.worst())
        heap_.push(Branch{priority + diff * diff, other_bound, other, t, seq_++});
      node = best;
    }
    const auto& leaf = tree.nodes[node];
    for (std::uint32_t i = leaf.first; i < leaf.second; ++i) {
      const SampleId p = tree.points[i];
      auto& mark = stamp_[p - shard_.begin];
      if (mark == epoch_) continue;
      if (checks_ >= budget_ && result.full()) return;
      mark = epoch_;
      ++checks_;
      result.add(Candidate{squared_l2(query_, emb_.row(p)), p});
    }
  }

  const EmbeddingSet& emb_;
  const KdForestIndex::Shard& shard_;
  std::vector<std::uint32_t> stamp_;
  std::uint32_t epoch_ = 0;
  std::span<const float> query_;
  std::size_t budget_ = 0;
  std::size_t checks_ = 0;
  std::uint64_t seq_ = 0;
  std::priority_queue<Branch, std::vector<Branch>, std::greater<>> heap_;
};

}  // namespace detail

/// Approximate top-k lists: every query searches every shard under the
/// resolved budget, and the per-shard candidates are merged by exact distance.
inline NeighborLists approx_knn(const KdForestIndex& index, const EmbeddingSet& emb, std::size_t k,
                                const SearchBudget& budget) {
  const std::size_t n = emb.size();
  if (index.size() != n || index.dim() != emb.dim())
    throw ValidationError("index was built over a different embedding set");
  if (k == 0 || k >= n) throw ValidationError("approx_knn needs 1 <= k < n");
  const std::size_t checks = budget.resolve(n, k);
  std::vector<SampleId> ids(n * (k + 1));
  std::vector<float> dists(n * (k + 1));
  parallel_for_chunks(n, 256, [&](std::size_t begin, std::size_t end) {
    std::vector<detail::ShardSearcher> searchers;
    searchers.reserve(index.shards().size());
    for (const auto& shard : index.shards()) searchers.emplace_back(emb, shard);
    std::vector<detail::Candidate> merged;
    for (std::size_t a = begin; a < end; ++a) {
      merged.clear();
      for (auto& s : searchers) s.search(emb.row(a), k + 1, checks, merged);
      std::erase_if(merged, [&](const detail::Candidate& c) { return c.id == a; });
      std::sort(merged.begin(), merged.end());
      detail::write_row(a, merged, k, ids.data() + a * (k + 1), dists.data() + a * (k + 1));
    }
  });
  return NeighborLists(n, k, KnnMethod::kdforest, std::move(ids), std::move(dists));
}

/// Occurrences of every sample in other samples' lists (ranks 1..k).
inline std::vector<std::uint64_t> neighbor_frequency_histogram(const NeighborLists& lists) {
  std::vector<std::uint64_t> counts(lists.size(), 0);
  for (std::size_t a = 0; a < lists.size(); ++a)
    for (std::size_t r = 1; r <= lists.k(); ++r) ++counts[lists.neighbor(a, r)];
  return counts;
}

/// Mean fraction of the exact neighbors (ranks 1..k) recovered in `approx`,
/// over the given query samples.
inline double recall_at_k(const NeighborLists& approx, std::span<const std::size_t> queries,
                          std::span<const std::vector<detail::Candidate>> exact) {
  if (queries.empty()) return 1.0;
  double total = 0.0;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const auto& truth = exact[i];
    if (truth.empty()) {
      total += 1.0;
      continue;
    }
    std::size_t hit = 0;
    for (const auto& c : truth)
      if (approx.rank_of(queries[i], c.id) != NeighborLists::kAbsent) ++hit;
    total += double(hit) / double(truth.size());
  }
  return total / double(queries.size());
}

inline double recall_at_k(const NeighborLists& approx, const NeighborLists& exact) {
  if (approx.size() != exact.size()) throw ValidationError("recall needs lists over the same samples");
  const std::size_t k = std::min(approx.k(), exact.k());
  double total = 0.0;
  for (std::size_t a = 0; a < exact.size(); ++a) {
    std::size_t hit = 0;
    for (std::size_t r = 1; r <= k; ++r)
      if (approx.rank_of(a, exact.neighbor(a, r)) != NeighborLists::kAbsent) ++hit;
    total += double(hit) / double(k);
  }
  return total / double(exact.size());
}

}  // namespace aroc
