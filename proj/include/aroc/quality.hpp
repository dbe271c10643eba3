#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "aroc/clustering.hpp"
#include "aroc/common.hpp"
#include "aroc/dataset.hpp"
#include "aroc/eval.hpp"
#include "aroc/knn.hpp"

namespace aroc {

/// Internal measures of one cluster over the directed rank-1..k edges.
struct ClusterQuality {
  ClusterId cluster = 0;
  std::size_t size = 0;
  std::uint64_t internal_edges = 0;
  std::uint64_t external_edges = 0;

  double coverage = 0.0;
  bool coverage_vacuous = false;  ///< singleton: no internal edge is possible
  std::optional<double> intra_mq;  ///< needs |X| >= 2
  double inter_mq = 0.0;           ///< 0 when no cluster is adjacent
  std::optional<double> mq_combined;

  std::optional<double> max_intra, total_intra, avg_intra;
  std::optional<double> min_inter, total_inter, avg_inter;
  std::optional<double> combined_score;  ///< avg_inter - avg_intra
};

struct ClusterQualityReport {
  std::size_t k = 0;
  std::vector<ClusterQuality> clusters;  ///< indexed by cluster id
};

namespace detail {

inline void check_same_samples(const Clustering& clustering, const NeighborLists& lists) {
  if (clustering.num_samples() != lists.size())
    throw ValidationError("clustering has " + std::to_string(clustering.num_samples()) +
                          " samples but neighbor lists cover " + std::to_string(lists.size()));
}

}  // namespace detail

/// Every measure in one pass over the n*k edges.
inline ClusterQualityReport cluster_quality(const Clustering& clustering, const NeighborLists& lists) {
  detail::check_same_samples(clustering, lists);
  const std::size_t k = lists.k();
  const std::size_t num_clusters = clustering.num_clusters();
  const auto members = clustering.members();

  ClusterQualityReport report;
  report.k = k;
  report.clusters.resize(num_clusters);
  // Outbound cross-cluster edge counts per cluster, as sorted (target, count) runs.
  std::vector<std::vector<std::pair<ClusterId, std::uint64_t>>> outbound(num_clusters);

  parallel_for_chunks(num_clusters, 64, [&](std::size_t begin, std::size_t end) {
    std::vector<ClusterId> targets;
    for (std::size_t c = begin; c < end; ++c) {
      auto& q = report.clusters[c];
      q.cluster = static_cast<ClusterId>(c);
      q.size = clustering.cluster_size(q.cluster);
      targets.clear();
      double intra_sum = 0.0, intra_max = 0.0, inter_sum = 0.0;
      double inter_min = std::numeric_limits<double>::infinity();
      for (const SampleId u : members.of(q.cluster)) {
        for (std::size_t r = 1; r <= k; ++r) {
          const SampleId v = lists.neighbor(u, r);
          const double d = lists.distance(u, r);
          const ClusterId cv = clustering.cluster_of(v);
          if (cv == q.cluster) {
            ++q.internal_edges;
            intra_sum += d;
            intra_max = std::max(intra_max, d);
          } else {
            ++q.external_edges;
            inter_sum += d;
            inter_min = std::min(inter_min, d);
            targets.push_back(cv);
          }
        }
      }
      q.coverage = double(q.internal_edges) / (double(q.size) * double(k));
      q.coverage_vacuous = q.size == 1;
      if (q.size >= 2) q.intra_mq = double(q.internal_edges) / (double(q.size) * double(q.size - 1));
      if (q.internal_edges > 0) {
        q.max_intra = intra_max;
        q.total_intra = intra_sum;
        q.avg_intra = intra_sum / double(q.internal_edges);
      }
      if (q.external_edges > 0) {
        q.min_inter = inter_min;
        q.total_inter = inter_sum;
        q.avg_inter = inter_sum / double(q.external_edges);
      }
      if (q.avg_intra && q.avg_inter) q.combined_score = *q.avg_inter - *q.avg_intra;
      detail::for_each_run(targets, [&](ClusterId y, std::size_t count) { outbound[c].emplace_back(y, count); });
    }
  });

  // Edges between each unordered adjacent pair, in both directions.
  struct PairCount {
    ClusterId lo, hi;
    std::uint64_t count;
  };
  std::vector<PairCount> pairs;
  for (std::size_t x = 0; x < num_clusters; ++x) {
    for (const auto& [y, count] : outbound[x])
      pairs.push_back({std::min<ClusterId>(ClusterId(x), y), std::max<ClusterId>(ClusterId(x), y), count});
    std::vector<std::pair<ClusterId, std::uint64_t>>().swap(outbound[x]);
  }
  std::sort(pairs.begin(), pairs.end(),
            [](const PairCount& a, const PairCount& b) { return a.lo < b.lo || (a.lo == b.lo && a.hi < b.hi); });
  std::vector<double> inter_density(num_clusters, 0.0);
  std::vector<std::uint64_t> adjacent(num_clusters, 0);
  for (std::size_t i = 0; i < pairs.size();) {
    std::uint64_t total = 0;
    std::size_t j = i;
    for (; j < pairs.size() && pairs[j].lo == pairs[i].lo && pairs[j].hi == pairs[i].hi; ++j) total += pairs[j].count;
    const auto x = pairs[i].lo, y = pairs[i].hi;
    const double density =
        double(total) / (2.0 * double(report.clusters[x].size) * double(report.clusters[y].size));
    inter_density[x] += density;
    inter_density[y] += density;
    ++adjacent[x];
    ++adjacent[y];
    i = j;
  }
  for (std::size_t c = 0; c < num_clusters; ++c) {
    auto& q = report.clusters[c];
    if (adjacent[c] > 0) q.inter_mq = inter_density[c] / double(adjacent[c]);
    if (q.intra_mq) q.mq_combined = *q.intra_mq - q.inter_mq;
  }
  return report;
}

inline std::vector<double> per_cluster_coverage(const Clustering& clustering, const NeighborLists& lists) {
  std::vector<double> out;
  for (const auto& q : cluster_quality(clustering, lists).clusters) out.push_back(q.coverage);
  return out;
}

struct ModularizationQuality {
  std::optional<double> intra_mq;
  double inter_mq = 0.0;
  std::optional<double> mq_combined;
};

inline std::vector<ModularizationQuality> modularization_quality(const Clustering& clustering,
                                                                 const NeighborLists& lists) {
  std::vector<ModularizationQuality> out;
  for (const auto& q : cluster_quality(clustering, lists).clusters) out.push_back({q.intra_mq, q.inter_mq, q.mq_combined});
  return out;
}

struct EdgeDistances {
  std::optional<double> max_intra, total_intra, avg_intra;
  std::optional<double> min_inter, total_inter, avg_inter;
};

inline std::vector<EdgeDistances> edge_distance_measures(const Clustering& clustering, const NeighborLists& lists) {
  std::vector<EdgeDistances> out;
  for (const auto& q : cluster_quality(clustering, lists).clusters)
    out.push_back({q.max_intra, q.total_intra, q.avg_intra, q.min_inter, q.total_inter, q.avg_inter});
  return out;
}

inline std::optional<double> combined_quality_score(std::optional<double> avg_intra, std::optional<double> avg_inter) {
  if (!avg_intra || !avg_inter) return std::nullopt;
  return *avg_inter - *avg_intra;
}

inline std::vector<std::optional<double>> combined_quality_score(const std::vector<EdgeDistances>& edges) {
  std::vector<std::optional<double>> out;
  for (const auto& e : edges) out.push_back(combined_quality_score(e.avg_intra, e.avg_inter));
  return out;
}

// ---------------------------------------------------------------------------
// Ranking.

enum class Measure {
  coverage,
  intra_mq,
  inter_mq,
  mq_combined,
  max_intra,
  total_intra,
  avg_intra,
  min_inter,
  total_inter,
  avg_inter,
  combined_score,
};

inline constexpr Measure kAllMeasures[] = {
    Measure::coverage,  Measure::intra_mq,    Measure::inter_mq,    Measure::mq_combined,
    Measure::max_intra, Measure::total_intra, Measure::avg_intra,   Measure::min_inter,
    Measure::total_inter, Measure::avg_inter, Measure::combined_score,
};

inline const char* to_string(Measure m) {
  switch (m) {
    case Measure::coverage: return "coverage";
    case Measure::intra_mq: return "intra_mq";
    case Measure::inter_mq: return "inter_mq";
    case Measure::mq_combined: return "mq_combined";
    case Measure::max_intra: return "max_intra";
    case Measure::total_intra: return "total_intra";
    case Measure::avg_intra: return "avg_intra";
    case Measure::min_inter: return "min_inter";
    case Measure::total_inter: return "total_inter";
    case Measure::avg_inter: return "avg_inter";
    case Measure::combined_score: return "combined_score";
  }
  return "?";
}

inline Measure parse_measure(std::string_view name) {
  for (auto m : kAllMeasures)
    if (name == to_string(m)) return m;
  throw ValidationError("unknown measure '" + std::string(name) + "'");
}

/// +1 when larger raw values mean a better cluster, -1 otherwise.
inline double orientation(Measure m) {
  switch (m) {
    case Measure::inter_mq:
    case Measure::max_intra:
    case Measure::total_intra:
    case Measure::avg_intra: return -1.0;
    default: return 1.0;
  }
}

inline std::optional<double> raw_value(const ClusterQuality& q, Measure m) {
  switch (m) {
    case Measure::coverage: return q.coverage;
    case Measure::intra_mq: return q.intra_mq;
    case Measure::inter_mq: return q.inter_mq;
    case Measure::mq_combined: return q.mq_combined;
    case Measure::max_intra: return q.max_intra;
    case Measure::total_intra: return q.total_intra;
    case Measure::avg_intra: return q.avg_intra;
    case Measure::min_inter: return q.min_inter;
    case Measure::total_inter: return q.total_inter;
    case Measure::avg_inter: return q.avg_inter;
    case Measure::combined_score: return q.combined_score;
  }
  return std::nullopt;
}

/// Measure value with higher meaning better.
inline std::optional<double> oriented_value(const ClusterQuality& q, Measure m) {
  auto v = raw_value(q, m);
  if (v) *v *= orientation(m);
  return v;
}

inline std::vector<std::optional<double>> oriented_scores(const ClusterQualityReport& report, Measure m) {
  std::vector<std::optional<double>> out;
  out.reserve(report.clusters.size());
  for (const auto& q : report.clusters) out.push_back(oriented_value(q, m));
  return out;
}

/// Clusters of size >= min_size with a defined score, best first;
/// ties go to the larger cluster, then the lower id.
inline std::vector<ClusterId> rank_clusters(const std::vector<std::optional<double>>& scores,
                                            const std::vector<std::size_t>& sizes, std::size_t min_size) {
  if (min_size < 1) throw ValidationError("min_size must be at least 1");
  if (scores.size() != sizes.size()) throw ValidationError("scores and sizes disagree on the number of clusters");
  std::vector<ClusterId> out;
  for (std::size_t c = 0; c < scores.size(); ++c)
    if (sizes[c] >= min_size && scores[c] && !std::isnan(*scores[c])) out.push_back(static_cast<ClusterId>(c));
  std::sort(out.begin(), out.end(), [&](ClusterId a, ClusterId b) {
    if (*scores[a] != *scores[b]) return *scores[a] > *scores[b];
    if (sizes[a] != sizes[b]) return sizes[a] > sizes[b];
    return a < b;
  });
  return out;
}

struct PrecisionCurve {
  std::vector<ClusterId> clusters;  ///< ranked clusters that carried labels
  std::vector<double> precision;    ///< per-cluster precision, same order
  std::vector<double> curve;        ///< curve[C-1] = mean precision of the top C
  double baseline = 0.0;            ///< unweighted mean over all of them
};

/// Clusters without labeled samples or without countable pairs are skipped.
inline PrecisionCurve precision_at_rank(const std::vector<ClusterId>& ranked, const Clustering& clustering,
                                        const LabelSet& labels) {
  const auto per_cluster = cluster_precisions(clustering, labels);
  PrecisionCurve out;
  double sum = 0.0;
  for (const ClusterId c : ranked) {
    const auto& p = per_cluster.at(c);
    if (p.labeled == 0 || !p.precision) continue;
    out.clusters.push_back(c);
    out.precision.push_back(*p.precision);
    sum += *p.precision;
    out.curve.push_back(sum / double(out.curve.size() + 1));
  }
  if (out.curve.empty()) throw ValidationError("no ranked cluster contains labeled samples");
  out.baseline = out.curve.back();
  return out;
}

// ---------------------------------------------------------------------------
// Correlation.

inline std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) return std::nullopt;
  const double n = double(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

/// 1-based ranks, ties sharing their average rank.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b] || (v[a] == v[b] && a < b); });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && v[order[j]] == v[order[i]]) ++j;
    const double r = (double(i + 1) + double(j)) / 2.0;
    for (std::size_t t = i; t < j; ++t) ranks[order[t]] = r;
    i = j;
  }
  return ranks;
}

inline std::optional<double> spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) return std::nullopt;
  return pearson(average_ranks(x), average_ranks(y));
}

struct MeasureCorrelation {
  Measure measure;
  std::size_t clusters = 0;
  std::optional<double> pearson;
  std::optional<double> spearman;
};

/// Correlation of each oriented measure with per-cluster precision, over
/// clusters of size >= min_size that have labels and a defined measure.
inline std::vector<MeasureCorrelation> measure_correlations(const ClusterQualityReport& report,
                                                            const Clustering& clustering, const LabelSet& labels,
                                                            std::size_t min_size) {
  const auto precisions = cluster_precisions(clustering, labels);
  std::vector<MeasureCorrelation> out;
  for (const auto m : kAllMeasures) {
    std::vector<double> xs, ys;
    for (const auto& q : report.clusters) {
      const auto& p = precisions[q.cluster];
      const auto v = oriented_value(q, m);
      if (q.size < min_size || p.labeled == 0 || !p.precision || !v) continue;
      xs.push_back(*v);
      ys.push_back(*p.precision);
    }
    out.push_back({m, xs.size(), pearson(xs, ys), spearman(xs, ys)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// TSV output.

inline std::string format_optional(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }

/// One row per cluster: ranked clusters first in rank order, then the rest by id.
inline std::string format_quality_report(const ClusterQualityReport& report, const std::vector<ClusterId>& ranked,
                                         const std::string& header = {}) {
  std::ostringstream out;
  out << header;
  out << "cluster\tsize\tcoverage\tcoverage_vacuous\tintra_mq\tinter_mq\tmq_combined\tmax_intra\ttotal_intra\t"
         "avg_intra\tmin_inter\ttotal_inter\tavg_inter\tcombined_score\trank\n";
  std::vector<std::size_t> rank_of(report.clusters.size(), 0);
  for (std::size_t i = 0; i < ranked.size(); ++i) rank_of[ranked[i]] = i + 1;
  auto row = [&](const ClusterQuality& q) {
    out << q.cluster << '\t' << q.size << '\t' << format_double(q.coverage) << '\t' << (q.coverage_vacuous ? 1 : 0)
        << '\t' << format_optional(q.intra_mq) << '\t' << format_double(q.inter_mq) << '\t'
        << format_optional(q.mq_combined) << '\t' << format_optional(q.max_intra) << '\t'
        << format_optional(q.total_intra) << '\t' << format_optional(q.avg_intra) << '\t'
        << format_optional(q.min_inter) << '\t' << format_optional(q.total_inter) << '\t'
        << format_optional(q.avg_inter) << '\t' << format_optional(q.combined_score) << '\t';
    if (rank_of[q.cluster]) out << rank_of[q.cluster];
    else out << "NA";
    out << '\n';
  };
  for (const auto c : ranked) row(report.clusters[c]);
  for (const auto& q : report.clusters)
    if (!rank_of[q.cluster]) row(q);
  return out.str();
}

inline std::string format_precision_curve(const PrecisionCurve& curve, const std::string& header = {}) {
  std::ostringstream out;
  out << header << "# baseline=" << format_double(curve.baseline) << "\nrank\tavg_precision\n";
  for (std::size_t i = 0; i < curve.curve.size(); ++i) out << (i + 1) << '\t' << format_double(curve.curve[i]) << '\n';
  return out.str();
}

}  // namespace aroc
