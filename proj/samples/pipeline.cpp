// End-to-end use of the library on a small synthetic set: generate, build
// approximate neighbor lists, sweep thresholds, evaluate and rank clusters.

#include <cstdio>

#include "aroc/aroc.hpp"

int main() {
  aroc::SyntheticSpec spec;
  spec.num_classes = 50;
  spec.sizes = aroc::ZipfSizes{1.0, 40};
  spec.dim = 32;
  spec.noise_fraction = 0.5;
  spec.seed = 1;
  const auto data = aroc::generate_synthetic(spec);
  std::printf("samples %zu, labeled %zu\n", data.embeddings.size(), data.labels.num_labeled());

  const auto index = aroc::build_index(data.embeddings, 4, 1'000'000, 1);
  const auto lists = aroc::approx_knn(index, data.embeddings, 50, aroc::SearchBudget::parse("linear:2000@13233"));

  const auto thresholds = aroc::linear_thresholds(0.5, 3.0, 6);
  const auto sweep = aroc::threshold_sweep(lists, thresholds);
  std::size_t best = 0;
  double best_f = -1.0;
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    const auto r = aroc::pairwise_metrics(sweep[i].clustering, data.labels);
    std::printf("threshold %.2f  clusters %zu  P %.3f  R %.3f  F %.3f\n", sweep[i].threshold,
                sweep[i].clustering.num_clusters(), r.precision, r.recall, r.f_measure);
    if (r.f_measure > best_f) best_f = r.f_measure, best = i;
  }

  const auto& clustering = sweep[best].clustering;
  const auto quality = aroc::cluster_quality(clustering, lists);
  const auto ranked = aroc::rank_clusters(aroc::oriented_scores(quality, aroc::Measure::combined_score),
                                          clustering.sizes(), 3);
  const auto curve = aroc::precision_at_rank(ranked, clustering, data.labels);
  std::printf("ranked %zu clusters; top-1 precision %.3f, baseline %.3f\n", ranked.size(), curve.curve.front(),
              curve.baseline);
}
