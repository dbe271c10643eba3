#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "aroc/clustering.hpp"
#include "aroc/common.hpp"
#include "aroc/dataset.hpp"

namespace aroc {

/// Recall (or another ratio) has an empty denominator.
class UndefinedMetricError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

enum class EvalMode { full, partial_labels };

inline const char* to_string(EvalMode m) { return m == EvalMode::full ? "full" : "partial-labels"; }

/// Pairwise precision/recall/F. In partial-label mode, unlabeled-unlabeled
/// pairs are left out of the precision denominator, labeled-unlabeled pairs
/// count as mismatches, and recall only looks at labeled same-class pairs.
struct PairwiseReport {
  double precision = 0.0;
  double recall = 0.0;
  double f_measure = 0.0;
  std::uint64_t correct_pairs = 0;  ///< same-cluster, same-class pairs
  std::uint64_t cluster_pairs = 0;  ///< precision denominator
  std::uint64_t class_pairs = 0;    ///< recall denominator
  EvalMode mode = EvalMode::full;
  /// No same-cluster pairs were counted; precision is reported as 1.
  bool vacuous_precision = false;
};

struct GroupedRecallReport {
  std::optional<double> within_group_recall;
  std::optional<double> cross_group_recall;
  std::uint64_t within_correct = 0;
  std::uint64_t within_pairs = 0;
  std::uint64_t cross_correct = 0;
  std::uint64_t cross_pairs = 0;
};

namespace detail {

constexpr std::uint64_t pairs_of(std::uint64_t count) { return count * (count - (count > 0 ? 1 : 0)) / 2; }

/// Run lengths of a sorted key vector.
template <typename Key, typename Fn>
void for_each_run(std::vector<Key>& keys, Fn&& fn) {
  std::sort(keys.begin(), keys.end());
  for (std::size_t i = 0; i < keys.size();) {
    std::size_t j = i;
    while (j < keys.size() && keys[j] == keys[i]) ++j;
    fn(keys[i], j - i);
    i = j;
  }
}

inline void check_sizes(const Clustering& clustering, const LabelSet& labels) {
  if (clustering.num_samples() != labels.num_samples())
    throw ValidationError("clustering has " + std::to_string(clustering.num_samples()) + " samples but labels cover " +
                          std::to_string(labels.num_samples()));
}

}  // namespace detail

inline double f_measure(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

inline PairwiseReport pairwise_metrics(const Clustering& clustering, const LabelSet& labels) {
  detail::check_sizes(clustering, labels);
  PairwiseReport r;
  r.mode = labels.num_labeled() < labels.num_samples() ? EvalMode::partial_labels : EvalMode::full;

  std::vector<std::uint64_t> unlabeled(clustering.num_clusters(), 0);
  std::vector<std::uint64_t> cluster_class;  // (cluster << 32) | class
  std::vector<std::uint32_t> classes;
  cluster_class.reserve(labels.num_labeled());
  classes.reserve(labels.num_labeled());
  for (std::size_t i = 0; i < labels.num_samples(); ++i) {
    const auto c = labels.class_of(i);
    if (c == LabelSet::kNone) {
      ++unlabeled[clustering.cluster_of(i)];
      continue;
    }
    cluster_class.push_back((std::uint64_t{clustering.cluster_of(i)} << 32) | std::uint32_t(c));
    classes.push_back(std::uint32_t(c));
  }
  for (std::size_t c = 0; c < clustering.num_clusters(); ++c)
    r.cluster_pairs += detail::pairs_of(clustering.cluster_size(static_cast<ClusterId>(c))) - detail::pairs_of(unlabeled[c]);
  detail::for_each_run(cluster_class, [&](std::uint64_t, std::size_t count) { r.correct_pairs += detail::pairs_of(count); });
  detail::for_each_run(classes, [&](std::uint32_t, std::size_t count) { r.class_pairs += detail::pairs_of(count); });

  if (r.class_pairs == 0)
    throw UndefinedMetricError("recall is undefined: no labeled class has two or more samples");
  r.vacuous_precision = r.cluster_pairs == 0;
  r.precision = r.vacuous_precision ? 1.0 : double(r.correct_pairs) / double(r.cluster_pairs);
  r.recall = double(r.correct_pairs) / double(r.class_pairs);
  r.f_measure = f_measure(r.precision, r.recall);
  return r;
}

/// Recall split into same-class pairs that share a group id and those that
/// do not. Labeled samples without a group id are left out of both.
inline GroupedRecallReport grouped_recall(const Clustering& clustering, const LabelSet& labels) {
  detail::check_sizes(clustering, labels);
  if (!labels.has_groups()) throw ValidationError("grouped recall needs group ids in the label set");
  std::vector<std::uint32_t> by_class;
  std::vector<std::uint64_t> by_class_group, by_cluster_class;
  std::vector<std::tuple<ClusterId, std::int32_t, std::int32_t>> by_cluster_class_group;
  for (std::size_t i = 0; i < labels.num_samples(); ++i) {
    const auto c = labels.class_of(i);
    const auto g = labels.group_of(i);
    if (c == LabelSet::kNone || g == LabelSet::kNone) continue;
    const std::uint64_t cluster = clustering.cluster_of(i);
    by_class.push_back(std::uint32_t(c));
    by_class_group.push_back((std::uint64_t(std::uint32_t(c)) << 32) | std::uint32_t(g));
    by_cluster_class.push_back((cluster << 32) | std::uint32_t(c));
    by_cluster_class_group.emplace_back(clustering.cluster_of(i), c, g);
  }
  std::uint64_t class_pairs = 0, correct = 0;
  GroupedRecallReport r;
  detail::for_each_run(by_class, [&](const auto&, std::size_t n) { class_pairs += detail::pairs_of(n); });
  detail::for_each_run(by_class_group, [&](const auto&, std::size_t n) { r.within_pairs += detail::pairs_of(n); });
  detail::for_each_run(by_cluster_class, [&](const auto&, std::size_t n) { correct += detail::pairs_of(n); });
  detail::for_each_run(by_cluster_class_group, [&](const auto&, std::size_t n) { r.within_correct += detail::pairs_of(n); });
  r.cross_pairs = class_pairs - r.within_pairs;
  r.cross_correct = correct - r.within_correct;
  if (r.within_pairs > 0) r.within_group_recall = double(r.within_correct) / double(r.within_pairs);
  if (r.cross_pairs > 0) r.cross_group_recall = double(r.cross_correct) / double(r.cross_pairs);
  return r;
}

/// Pairwise precision of each cluster on its own (partial-label rules).
/// Absent when the cluster has no countable pairs.
struct ClusterPrecision {
  std::optional<double> precision;
  std::uint64_t correct_pairs = 0;
  std::uint64_t counted_pairs = 0;
  std::size_t labeled = 0;
};

inline std::vector<ClusterPrecision> cluster_precisions(const Clustering& clustering, const LabelSet& labels) {
  detail::check_sizes(clustering, labels);
  std::vector<ClusterPrecision> out(clustering.num_clusters());
  std::vector<std::uint64_t> cluster_class;
  for (std::size_t i = 0; i < labels.num_samples(); ++i) {
    const auto c = labels.class_of(i);
    if (c == LabelSet::kNone) continue;
    ++out[clustering.cluster_of(i)].labeled;
    cluster_class.push_back((std::uint64_t{clustering.cluster_of(i)} << 32) | std::uint32_t(c));
  }
  detail::for_each_run(cluster_class, [&](std::uint64_t key, std::size_t count) {
    out[key >> 32].correct_pairs += detail::pairs_of(count);
  });
  for (std::size_t c = 0; c < out.size(); ++c) {
    auto& p = out[c];
    const std::uint64_t size = clustering.cluster_size(static_cast<ClusterId>(c));
    p.counted_pairs = detail::pairs_of(size) - detail::pairs_of(size - p.labeled);
    if (p.counted_pairs > 0) p.precision = double(p.correct_pairs) / double(p.counted_pairs);
  }
  return out;
}

}  // namespace aroc
