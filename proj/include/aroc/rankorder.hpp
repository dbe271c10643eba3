#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "aroc/clustering.hpp"
#include "aroc/common.hpp"
#include "aroc/dataset.hpp"
#include "aroc/knn.hpp"

namespace aroc {

// ---------------------------------------------------------------------------
// Original rank-order distance over full rankings.

/// D(a,b) = (d(a,b) + d(b,a)) / min(O_a(b), O_b(a)) with
/// d(a,b) = sum_{i=1..O_a(b)} O_b(f_a(i)). Needs k = n-1 lists.
inline double rank_order_distance_original(std::size_t a, std::size_t b, const NeighborLists& lists) {
  const std::size_t n = lists.size();
  if (lists.k() + 1 != n) throw ValidationError("original rank-order distance needs full rankings (k = n-1)");
  if (a >= n || b >= n) throw ValidationError("sample id out of range");
  if (a == b) return 0.0;
  auto directed = [&](std::size_t from, std::size_t to, std::size_t& rank_of_to) {
    std::vector<std::size_t> rank_in_to(n);
    for (std::size_t r = 0; r < n; ++r) rank_in_to[lists.neighbor(to, r)] = r;
    double sum = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
      const SampleId x = lists.neighbor(from, i);
      sum += double(rank_in_to[x]);
      if (x == to) {
        rank_of_to = i;
        break;
      }
    }
    return sum;
  };
  std::size_t rank_ab = 0, rank_ba = 0;
  const double d_ab = directed(a, b, rank_ab);
  const double d_ba = directed(b, a, rank_ba);
  return (d_ab + d_ba) / double(std::min(rank_ab, rank_ba));
}

struct OriginalRankOrderOptions {
  /// Refusal threshold; memory is quadratic and time up to cubic in n.
  std::size_t max_samples = 20000;
  /// Neighbors used for the local density scale phi. A merge also needs
  /// single-linkage distance / mean(phi over both clusters) < 1; 0 disables
  /// the check, in which case mutually nearest clusters (D = 0) always merge
  /// and the result collapses to one cluster.
  std::size_t density_neighbors = 20;
};

/// Hard ceiling of the original algorithm (ranks are stored in 16 bits).
inline constexpr std::size_t kOriginalRankOrderLimit = 65535;

/// Agglomerative rank-order clustering. Each round ranks the current clusters
/// by single-linkage feature distance, evaluates the rank-order distance for
/// every cluster pair, and merges (transitively) all pairs at or below the
/// threshold and passing the density check. Stops when a round performs no merge.
inline Clustering rank_order_cluster_original(const EmbeddingSet& emb, double threshold,
                                              const OriginalRankOrderOptions& options = {}) {
  const std::size_t n = emb.size();
  if (n > std::min(options.max_samples, kOriginalRankOrderLimit))
    throw ValidationError("original rank-order clustering is limited to " + std::to_string(std::min(options.max_samples, kOriginalRankOrderLimit)) +
                          " samples (got " + std::to_string(n) +
                          "); use the approximate rank-order algorithm for larger sets");
  ClusteringParams params{"rank-order-original", threshold, std::nullopt, n - 1, std::nullopt};
  if (n == 1) return Clustering(std::vector<ClusterId>{0}, params);

  // Single-linkage distances between current clusters; `key` is the smallest
  // member id, used to break ties.
  std::size_t m = n;
  std::vector<float> dist(n * n, 0.0f);
  parallel_for(n, [&](std::size_t i) {
    for (std::size_t j = 0; j < n; ++j)
      dist[i * n + j] = i == j ? 0.0f : static_cast<float>(std::sqrt(squared_l2(emb.row(i), emb.row(j))));
  });
  // phi[a]: mean distance from a to its K nearest samples.
  const std::size_t K = std::min(options.density_neighbors, n - 1);
  std::vector<double> phi(n, 0.0);
  if (K > 0)
    parallel_for(n, [&](std::size_t i) {
      std::vector<float> row(dist.begin() + std::ptrdiff_t(i * n), dist.begin() + std::ptrdiff_t((i + 1) * n));
      std::nth_element(row.begin(), row.begin() + std::ptrdiff_t(K), row.end());
      std::sort(row.begin(), row.begin() + std::ptrdiff_t(K) + 1);
      double acc = 0.0;
      for (std::size_t r = 1; r <= K; ++r) acc += row[r];  // row[0] is the self distance
      phi[i] = acc / double(K);
    });
  std::vector<double> phi_sum(phi);
  std::vector<std::size_t> members(n, 1);
  std::vector<std::size_t> key(n);
  std::iota(key.begin(), key.end(), 0);
  std::vector<std::size_t> owner(n);  // sample -> current cluster index
  std::iota(owner.begin(), owner.end(), 0);

  std::vector<std::uint16_t> order(n * n), rank(n * n);
  for (;;) {
    parallel_for(m, [&](std::size_t c) {
      std::uint16_t* row = order.data() + c * m;
      std::iota(row, row + m, std::uint16_t{0});
      std::swap(row[0], row[c]);
      std::sort(row + 1, row + m, [&](std::uint16_t x, std::uint16_t y) {
        const float dx = dist[c * m + x], dy = dist[c * m + y];
        return dx < dy || (dx == dy && key[x] < key[y]);
      });
      for (std::size_t r = 0; r < m; ++r) rank[c * m + row[r]] = static_cast<std::uint16_t>(r);
    });

    // Pairs at or below threshold, found per row; the early exit is exact
    // because every term of the sums is non-negative.
    std::vector<std::vector<std::uint32_t>> merge_with(m);
    parallel_for(m, [&](std::size_t a) {
      for (std::size_t b = a + 1; b < m; ++b) {
        const std::size_t r_ab = rank[a * m + b], r_ba = rank[b * m + a];
        const double limit = threshold * double(std::min(r_ab, r_ba));
        double sum = 0.0;
        for (std::size_t i = 1; i <= r_ab && sum <= limit; ++i) sum += rank[b * m + order[a * m + i]];
        for (std::size_t i = 1; i <= r_ba && sum <= limit; ++i) sum += rank[a * m + order[b * m + i]];
        if (sum > limit) continue;
        if (K > 0) {
          const double scale = (phi_sum[a] + phi_sum[b]) / double(members[a] + members[b]);
          if (!(double(dist[a * m + b]) < scale)) continue;
        }
        merge_with[a].push_back(static_cast<std::uint32_t>(b));
      }
    });

    UnionFind uf(m);
    for (std::size_t a = 0; a < m; ++a)
      for (auto b : merge_with[a]) uf.unite(a, b);
    if (uf.unions() == 0) break;

    const Clustering merged = uf.to_clustering();
    const std::size_t m_next = merged.num_clusters();
    std::vector<float> next(m_next * m_next, std::numeric_limits<float>::infinity());
    std::vector<std::size_t> next_key(m_next, std::numeric_limits<std::size_t>::max());
    std::vector<double> next_phi(m_next, 0.0);
    std::vector<std::size_t> next_members(m_next, 0);
    for (std::size_t a = 0; a < m; ++a) {
      const ClusterId ca = merged.cluster_of(a);
      next_key[ca] = std::min(next_key[ca], key[a]);
      next_phi[ca] += phi_sum[a];
      next_members[ca] += members[a];
      for (std::size_t b = 0; b < m; ++b) {
        const ClusterId cb = merged.cluster_of(b);
        float& slot = next[ca * m_next + cb];
        slot = std::min(slot, dist[a * m + b]);
      }
    }
    for (std::size_t c = 0; c < m_next; ++c) next[c * m_next + c] = 0.0f;
    for (auto& o : owner) o = merged.cluster_of(o);
    dist = std::move(next);
    key = std::move(next_key);
    phi_sum = std::move(next_phi);
    members = std::move(next_members);
    m = m_next;
    if (m == 1) break;
  }
  return Clustering::from_keys(owner, params);
}

// ---------------------------------------------------------------------------
// Approximate rank-order distance over top-k lists.

/// Distances of one unordered candidate pair (a < b). Ranks of samples absent
/// from the other's top-k list are recorded as k + 1.
struct CandidatePair {
  SampleId a = 0;
  SampleId b = 0;
  std::uint32_t d_ab = 0;     ///< d_m(a,b): shared-neighbor misses along a's list
  std::uint32_t d_ba = 0;     ///< d_m(b,a)
  std::uint32_t rank_ab = 0;  ///< O_a(b)
  std::uint32_t rank_ba = 0;  ///< O_b(a)

  /// D_m(a,b) = (d_m(a,b) + d_m(b,a)) / min(O_a(b), O_b(a)).
  double distance() const noexcept { return double(d_ab + d_ba) / double(std::min(rank_ab, rank_ba)); }
};

/// Approximate rank-order distance of one pair using the top-k prefix of the lists.
inline CandidatePair approx_rank_order_distance(std::size_t a, std::size_t b, const NeighborLists& lists,
                                                std::size_t k) {
  if (k == 0 || k > lists.k()) throw ValidationError("k must lie in [1, list length]");
  if (a >= lists.size() || b >= lists.size()) throw ValidationError("sample id out of range");
  if (a == b) throw ContractError("rank-order distance of a sample with itself");
  auto rank_in_top_k = [&](std::size_t owner, std::size_t x) -> std::size_t {
    const auto ids = lists.ids(owner);
    for (std::size_t r = 0; r <= k; ++r)
      if (ids[r] == x) return r;
    return k + 1;
  };
  const std::size_t rank_ab = rank_in_top_k(a, b);
  const std::size_t rank_ba = rank_in_top_k(b, a);
  if (rank_ab > k && rank_ba > k)
    throw ContractError("samples " + std::to_string(a) + " and " + std::to_string(b) +
                        " are not in each other's top-k lists");
  auto directed = [&](std::size_t from, std::size_t to, std::size_t rank_of_to) {
    std::uint32_t misses = 0;
    for (std::size_t i = 1; i <= std::min(rank_of_to, k); ++i)
      if (rank_in_top_k(to, lists.neighbor(from, i)) > k) ++misses;
    return misses;
  };
  CandidatePair p;
  const bool swap = b < a;
  p.a = static_cast<SampleId>(swap ? b : a);
  p.b = static_cast<SampleId>(swap ? a : b);
  const std::uint32_t d_ab = directed(a, b, rank_ab);
  const std::uint32_t d_ba = directed(b, a, rank_ba);
  p.d_ab = swap ? d_ba : d_ab;
  p.d_ba = swap ? d_ab : d_ba;
  p.rank_ab = static_cast<std::uint32_t>(swap ? rank_ba : rank_ab);
  p.rank_ba = static_cast<std::uint32_t>(swap ? rank_ab : rank_ba);
  return p;
}

namespace detail {

/// Compressed adjacency: targets of source s are ids[offsets[s] .. offsets[s+1]).
struct Adjacency {
  std::vector<std::size_t> offsets;
  std::vector<SampleId> ids;
};

/// Directed distance d_m(from, to) and O_from(to), given a membership stamp of
/// `to`'s list (stamp[x] == to + 1 iff x is in to's list).
inline void directed_misses(const NeighborLists& lists, std::size_t from, std::size_t to,
                            const std::vector<SampleId>& stamp, std::uint32_t& misses, std::uint32_t& rank) {
  const std::size_t k = lists.k();
  const auto list = lists.ids(from);
  misses = 0;
  rank = static_cast<std::uint32_t>(k + 1);
  for (std::size_t i = 1; i <= k; ++i) {
    if (list[i] == to) {
      rank = static_cast<std::uint32_t>(i);
      return;  // the final term is to itself, always a member
    }
    if (stamp[list[i]] != to + 1) ++misses;
  }
}

}  // namespace detail

/// One CandidatePair per unordered pair (a, b) where either sample is in the
/// other's top-k list, sorted by (a, b), with approximate rank-order distances.
inline std::vector<CandidatePair> generate_candidates(const NeighborLists& lists) {
  const std::size_t n = lists.size();
  const std::size_t k = lists.k();
  const std::size_t chunk = std::max<std::size_t>(4096, n / 64);

  // Reverse edges: for each sample, the samples whose lists contain it.
  detail::Adjacency reverse;
  reverse.offsets.assign(n + 1, 0);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t r = 1; r <= k; ++r) ++reverse.offsets[lists.neighbor(a, r) + 1];
  for (std::size_t i = 0; i < n; ++i) reverse.offsets[i + 1] += reverse.offsets[i];
  reverse.ids.resize(n * k);
  {
    std::vector<std::size_t> cursor(reverse.offsets.begin(), reverse.offsets.end() - 1);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t r = 1; r <= k; ++r) reverse.ids[cursor[lists.neighbor(a, r)]++] = static_cast<SampleId>(a);
  }

  // Partners of a with larger id, from both directions, deduplicated.
  auto partners = [&](std::size_t a, std::vector<SampleId>& out) {
    out.clear();
    for (std::size_t r = 1; r <= k; ++r)
      if (lists.neighbor(a, r) > a) out.push_back(lists.neighbor(a, r));
    for (std::size_t i = reverse.offsets[a]; i < reverse.offsets[a + 1]; ++i)
      if (reverse.ids[i] > a) out.push_back(reverse.ids[i]);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
  };
  std::vector<std::size_t> offsets(n + 1, 0);
  parallel_for_chunks(n, chunk, [&](std::size_t begin, std::size_t end) {
    std::vector<SampleId> buf;
    for (std::size_t a = begin; a < end; ++a) {
      partners(a, buf);
      offsets[a + 1] = buf.size();
    }
  });
  for (std::size_t a = 0; a < n; ++a) offsets[a + 1] += offsets[a];

  std::vector<CandidatePair> pairs(offsets[n]);
  parallel_for_chunks(n, chunk, [&](std::size_t begin, std::size_t end) {
    std::vector<SampleId> buf;
    for (std::size_t a = begin; a < end; ++a) {
      partners(a, buf);
      for (std::size_t i = 0; i < buf.size(); ++i) {
        auto& p = pairs[offsets[a] + i];
        p.a = static_cast<SampleId>(a);
        p.b = buf[i];
      }
    }
  });
  reverse = {};

  // Pass 1, grouped by a: stamp a's list, fill d_m(b,a) and O_b(a).
  parallel_for_chunks(n, chunk, [&](std::size_t begin, std::size_t end) {
    std::vector<SampleId> stamp(n, 0);
    for (std::size_t a = begin; a < end; ++a) {
      if (offsets[a] == offsets[a + 1]) continue;
      for (auto x : lists.ids(a)) stamp[x] = static_cast<SampleId>(a + 1);
      for (std::size_t p = offsets[a]; p < offsets[a + 1]; ++p)
        detail::directed_misses(lists, pairs[p].b, a, stamp, pairs[p].d_ba, pairs[p].rank_ba);
    }
  });

  // Pass 2, grouped by b: stamp b's list, fill d_m(a,b) and O_a(b).
  std::vector<std::size_t> by_b_offsets(n + 1, 0);
  for (const auto& p : pairs) ++by_b_offsets[p.b + 1];
  for (std::size_t i = 0; i < n; ++i) by_b_offsets[i + 1] += by_b_offsets[i];
  if (pairs.size() > std::numeric_limits<std::uint32_t>::max())
    throw ValidationError("too many candidate pairs for 32-bit indexing");
  std::vector<std::uint32_t> by_b(pairs.size());
  {
    std::vector<std::size_t> cursor(by_b_offsets.begin(), by_b_offsets.end() - 1);
    for (std::size_t i = 0; i < pairs.size(); ++i) by_b[cursor[pairs[i].b]++] = static_cast<std::uint32_t>(i);
  }
  parallel_for_chunks(n, chunk, [&](std::size_t begin, std::size_t end) {
    std::vector<SampleId> stamp(n, 0);
    for (std::size_t b = begin; b < end; ++b) {
      if (by_b_offsets[b] == by_b_offsets[b + 1]) continue;
      for (auto x : lists.ids(b)) stamp[x] = static_cast<SampleId>(b + 1);
      for (std::size_t i = by_b_offsets[b]; i < by_b_offsets[b + 1]; ++i) {
        auto& p = pairs[by_b[i]];
        detail::directed_misses(lists, p.a, b, stamp, p.d_ab, p.rank_ab);
      }
    }
  });
  return pairs;
}

/// Union-find over candidate pairs with D_m <= threshold.
inline Clustering cluster_candidates(std::size_t n, std::span<const CandidatePair> pairs, double threshold,
                                     ClusteringParams params = {}) {
  UnionFind uf(n);
  for (const auto& p : pairs)
    if (p.distance() <= threshold) uf.unite(p.a, p.b);
  return uf.to_clustering(std::move(params));
}

/// Single-pass approximate rank-order clustering: connected components of
/// candidate pairs whose distance is at most `threshold`.
inline Clustering approx_rank_order_cluster(const NeighborLists& lists, double threshold) {
  if (!(threshold >= 0.0)) throw ValidationError("threshold must be >= 0");
  const auto pairs = generate_candidates(lists);
  return cluster_candidates(lists.size(), pairs, threshold,
                            ClusteringParams{"approx-rank-order", threshold, std::nullopt, lists.k(), std::nullopt});
}

struct SweepPoint {
  double threshold;
  Clustering clustering;
};

/// Clusterings at each threshold (ascending) from one shared set of
/// candidate distances. Unions accumulate, so each result coarsens the last.
inline std::vector<SweepPoint> threshold_sweep(const NeighborLists& lists, std::span<const double> thresholds) {
  if (!std::is_sorted(thresholds.begin(), thresholds.end()))
    throw ValidationError("sweep thresholds must be sorted ascending");
  const auto pairs = generate_candidates(lists);
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> dist(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) dist[i] = pairs[i].distance();
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return dist[x] < dist[y]; });

  std::vector<SweepPoint> out;
  UnionFind uf(lists.size());
  std::size_t next = 0;
  for (double t : thresholds) {
    while (next < order.size() && dist[order[next]] <= t) {
      uf.unite(pairs[order[next]].a, pairs[order[next]].b);
      ++next;
    }
    out.push_back({t, uf.to_clustering(ClusteringParams{"approx-rank-order", t, std::nullopt, lists.k(), std::nullopt})});
  }
  return out;
}

/// n evenly spaced thresholds over [lo, hi].
inline std::vector<double> linear_thresholds(double lo, double hi, std::size_t count) {
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = count == 1 ? lo : lo + (hi - lo) * double(i) / double(count - 1);
  return out;
}

// ---------------------------------------------------------------------------
// k-means baseline (Lloyd iterations, k-means++ seeding).

struct KMeansResult {
  Clustering clustering;
  std::vector<double> centroids;  ///< C x d, row-major
  double inertia = 0.0;           ///< sum of squared distances to assigned centroids
  std::size_t iterations = 0;
};

inline KMeansResult kmeans(const EmbeddingSet& emb, std::size_t num_clusters, std::size_t max_iters,
                           std::uint64_t seed) {
  const std::size_t n = emb.size(), d = emb.dim(), C = num_clusters;
  if (C < 1 || C > n) throw ValidationError("k-means needs 1 <= C <= n");
  detail::Sampler rng(detail::mix_seed(seed, 77));

  auto dist_to = [&](std::size_t i, const std::vector<double>& centroids, std::size_t c) {
    double acc = 0.0;
    const auto row = emb.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = double(row[j]) - centroids[c * d + j];
      acc += diff * diff;
    }
    return acc;
  };

  // k-means++ seeding.
  std::vector<double> centroids(C * d);
  std::vector<char> chosen(n, 0);
  auto set_centroid = [&](std::size_t c, std::size_t i) {
    const auto row = emb.row(i);
    for (std::size_t j = 0; j < d; ++j) centroids[c * d + j] = row[j];
    chosen[i] = 1;
  };
  set_centroid(0, rng.below(n));
  std::vector<double> nearest(n);
  parallel_for(n, [&](std::size_t i) { nearest[i] = dist_to(i, centroids, 0); });
  for (std::size_t c = 1; c < C; ++c) {
    double total = 0.0;
    for (double v : nearest) total += v;
    std::size_t pick = n;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      for (std::size_t i = 0; i < n; ++i) {
        target -= nearest[i];
        if (target < 0.0 && nearest[i] > 0.0) {
          pick = i;
          break;
        }
      }
      if (pick == n)
        for (std::size_t i = n; i-- > 0;)
          if (nearest[i] > 0.0) {
            pick = i;
            break;
          }
    }
    if (pick == n)  // every point coincides with a centroid
      for (std::size_t i = 0; i < n; ++i)
        if (!chosen[i]) {
          pick = i;
          break;
        }
    set_centroid(c, pick);
    parallel_for(n, [&](std::size_t i) { nearest[i] = std::min(nearest[i], dist_to(i, centroids, c)); });
  }

  std::vector<ClusterId> assign(n, 0);
  std::vector<double> assigned_dist(n, 0.0);
  auto assign_all = [&] {
    const std::vector<ClusterId> before(assign);
    parallel_for(n, [&](std::size_t i) {
      ClusterId best = 0;
      double best_d = dist_to(i, centroids, 0);
      for (std::size_t c = 1; c < C; ++c) {
        const double dc = dist_to(i, centroids, c);
        if (dc < best_d) {
          best_d = dc;
          best = static_cast<ClusterId>(c);
        }
      }
      assign[i] = best;
      assigned_dist[i] = best_d;
    });
    // Empty clusters take the farthest point of a cluster with spare members.
    std::vector<std::size_t> counts(C, 0);
    for (auto c : assign) ++counts[c];
    for (std::size_t c = 0; c < C; ++c) {
      if (counts[c] > 0) continue;
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i)
        if (counts[assign[i]] > 1 && (far == n || assigned_dist[i] > assigned_dist[far])) far = i;
      --counts[assign[far]];
      assign[far] = static_cast<ClusterId>(c);
      counts[c] = 1;
      assigned_dist[far] = 0.0;
      const auto row = emb.row(far);
      for (std::size_t j = 0; j < d; ++j) centroids[c * d + j] = row[j];
    }
    return assign != before;
  };
  assign_all();

  std::size_t iter = 0;
  for (; iter < max_iters; ++iter) {
    std::vector<double> sums(C * d, 0.0);
    std::vector<std::size_t> counts(C, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = emb.row(i);
      ++counts[assign[i]];
      for (std::size_t j = 0; j < d; ++j) sums[assign[i] * d + j] += row[j];
    }
    for (std::size_t c = 0; c < C; ++c) {
      if (counts[c] > 0) {
        for (std::size_t j = 0; j < d; ++j) centroids[c * d + j] = sums[c * d + j] / double(counts[c]);
        continue;
      }
    }
    if (!assign_all()) {
      ++iter;
      break;
    }
  }

  double inertia = 0.0;
  for (double v : assigned_dist) inertia += v;
  std::vector<ClusterId> keys(assign);
  KMeansResult result{Clustering::from_keys(keys, ClusteringParams{"kmeans", std::nullopt, C, std::nullopt, seed}),
                      std::move(centroids), inertia, iter};
  return result;
}

inline Clustering kmeans_cluster(const EmbeddingSet& emb, std::size_t num_clusters, std::size_t max_iters,
                                 std::uint64_t seed) {
  return kmeans(emb, num_clusters, max_iters, seed).clustering;
}

}  // namespace aroc
