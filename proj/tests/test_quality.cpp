#include <gtest/gtest.h>

#include <numbers>
#include <numeric>
#include <random>

#include "aroc/quality.hpp"
#include "oracles.hpp"

using namespace aroc;

namespace {

NeighborLists make_lists(std::size_t k, const std::vector<std::vector<std::pair<SampleId, float>>>& rows) {
  const std::size_t n = rows.size();
  std::vector<SampleId> ids;
  std::vector<float> dists;
  for (std::size_t a = 0; a < n; ++a) {
    ids.push_back(static_cast<SampleId>(a));
    dists.push_back(0.0f);
    for (const auto& [id, d] : rows[a]) {
      ids.push_back(id);
      dists.push_back(d);
    }
  }
  return NeighborLists(n, k, KnnMethod::exact, std::move(ids), std::move(dists));
}

// Clusters X = {0,1,2}, Y = {3,4}, Z = {5}; k = 2.
struct SixNodes {
  NeighborLists lists = make_lists(2, {{{1, 1.0f}, {2, 2.0f}},
                                       {{0, 1.0f}, {3, 3.0f}},
                                       {{0, 2.0f}, {5, 4.0f}},
                                       {{4, 1.0f}, {1, 3.0f}},
                                       {{3, 1.0f}, {2, 5.0f}},
                                       {{2, 4.0f}, {4, 6.0f}}});
  Clustering clustering{std::vector<ClusterId>{0, 0, 0, 1, 1, 2}};
};

}  // namespace

TEST(Quality, HandBuiltGraph) {
  SixNodes g;
  const auto r = cluster_quality(g.clustering, g.lists);
  ASSERT_EQ(r.clusters.size(), 3u);
  const auto& x = r.clusters[0];
  EXPECT_EQ(x.internal_edges, 4u);
  EXPECT_EQ(x.external_edges, 2u);
  EXPECT_DOUBLE_EQ(x.coverage, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(*x.intra_mq, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(x.inter_mq, 7.0 / 24.0);
  EXPECT_DOUBLE_EQ(*x.mq_combined, 0.375);
  EXPECT_EQ(*x.max_intra, 2.0);
  EXPECT_EQ(*x.total_intra, 6.0);
  EXPECT_EQ(*x.avg_intra, 1.5);
  EXPECT_EQ(*x.min_inter, 3.0);
  EXPECT_EQ(*x.total_inter, 7.0);
  EXPECT_EQ(*x.avg_inter, 3.5);
  EXPECT_EQ(*x.combined_score, 2.0);

  const auto& y = r.clusters[1];
  EXPECT_EQ(y.coverage, 0.5);
  EXPECT_EQ(*y.intra_mq, 1.0);
  EXPECT_EQ(y.inter_mq, 0.25);
  EXPECT_EQ(*y.mq_combined, 0.75);
  EXPECT_EQ(*y.avg_intra, 1.0);
  EXPECT_EQ(*y.avg_inter, 4.0);
  EXPECT_EQ(*y.combined_score, 3.0);

  const auto& z = r.clusters[2];
  EXPECT_EQ(z.coverage, 0.0);
  EXPECT_TRUE(z.coverage_vacuous);
  EXPECT_FALSE(z.intra_mq.has_value());
  EXPECT_FALSE(z.mq_combined.has_value());
  EXPECT_DOUBLE_EQ(z.inter_mq, 7.0 / 24.0);
  EXPECT_FALSE(z.avg_intra.has_value());
  EXPECT_EQ(*z.min_inter, 4.0);
  EXPECT_EQ(*z.avg_inter, 5.0);
  EXPECT_FALSE(z.combined_score.has_value());
}

TEST(Quality, OperationWrappersAgree) {
  SixNodes g;
  const auto coverage = per_cluster_coverage(g.clustering, g.lists);
  const auto mq = modularization_quality(g.clustering, g.lists);
  const auto edges = edge_distance_measures(g.clustering, g.lists);
  const auto scores = combined_quality_score(edges);
  EXPECT_DOUBLE_EQ(coverage[0], 2.0 / 3.0);
  EXPECT_EQ(*mq[1].mq_combined, 0.75);
  EXPECT_EQ(*edges[0].max_intra, 2.0);
  EXPECT_EQ(*scores[1], 3.0);
  EXPECT_FALSE(scores[2].has_value());
  EXPECT_EQ(*combined_quality_score(2.0, 2.0), 0.0);
}

TEST(Quality, WholeSetClusterAndPairClique) {
  std::mt19937_64 rng(1);
  const auto emb = oracle::random_embeddings(30, 3, rng);
  const auto lists = exact_knn(emb, 4);
  const Clustering all(std::vector<ClusterId>(30, 0));
  const auto r = cluster_quality(all, lists);
  EXPECT_EQ(r.clusters[0].coverage, 1.0);
  EXPECT_EQ(r.clusters[0].inter_mq, 0.0);
  EXPECT_FALSE(r.clusters[0].avg_inter.has_value());
  EXPECT_FALSE(r.clusters[0].combined_score.has_value());

  // Two mutual nearest neighbors form a cluster of size 2.
  const auto pair = make_lists(1, {{{1, 1.0f}}, {{0, 1.0f}}, {{3, 1.0f}}, {{2, 1.0f}}});
  const auto q = cluster_quality(Clustering(std::vector<ClusterId>{0, 0, 1, 1}), pair);
  EXPECT_EQ(*q.clusters[0].intra_mq, 1.0);
  EXPECT_EQ(q.clusters[0].inter_mq, 0.0);
}

TEST(Quality, ConstantEdgeDistances) {
  std::vector<std::vector<std::pair<SampleId, float>>> rows;
  for (SampleId a = 0; a < 8; ++a) rows.push_back({{SampleId((a + 1) % 8), 2.5f}, {SampleId((a + 5) % 8), 2.5f}});
  const auto lists = make_lists(2, rows);
  const auto r = cluster_quality(Clustering(std::vector<ClusterId>{0, 0, 0, 0, 1, 1, 1, 1}), lists);
  for (const auto& q : r.clusters) {
    if (q.avg_intra) {
      EXPECT_EQ(*q.avg_intra, 2.5);
    }
    if (q.avg_inter) {
      EXPECT_EQ(*q.avg_inter, 2.5);
    }
  }
}

TEST(Quality, BlobHasHigherCoverageThanScatter) {
  // A tight blob at the origin and ten points spread on a circle of radius 10.
  std::vector<float> v;
  std::mt19937_64 rng(2);
  std::normal_distribution<float> tight(0.0f, 0.1f);
  for (int i = 0; i < 10; ++i) v.insert(v.end(), {tight(rng), tight(rng)});
  for (int i = 0; i < 10; ++i) {
    const double angle = 2.0 * std::numbers::pi * i / 10.0;
    v.insert(v.end(), {float(10.0 * std::cos(angle)), float(10.0 * std::sin(angle))});
  }
  const EmbeddingSet emb(20, 2, std::move(v));
  const auto lists = exact_knn(emb, 3);
  std::vector<ClusterId> assign(20, 0);
  for (std::size_t i = 10; i < 20; ++i) assign[i] = 1;
  const auto r = cluster_quality(Clustering(assign), lists);
  EXPECT_EQ(r.clusters[0].coverage, 1.0);
  EXPECT_NEAR(r.clusters[1].coverage, 2.0 / 3.0, 1e-12);
  // With longer lists the blob reaches outside itself and gets a large positive score.
  const auto wide = cluster_quality(Clustering(assign), exact_knn(emb, 12));
  EXPECT_GT(*wide.clusters[0].combined_score, 9.0);
  EXPECT_GT(*wide.clusters[0].combined_score, *wide.clusters[1].combined_score);
}

TEST(Quality, PermutationInvariance) {
  std::mt19937_64 rng(3);
  const auto emb = oracle::random_embeddings(80, 4, rng);
  std::vector<ClusterId> keys(80);
  for (auto& k : keys) k = ClusterId(rng() % 9);
  const auto c = Clustering::from_keys(keys);
  const auto base = cluster_quality(c, exact_knn(emb, 6));

  std::vector<std::size_t> perm(80);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<float> v(80 * 4);
  std::vector<ClusterId> keys2(80);
  for (std::size_t i = 0; i < 80; ++i) {
    std::copy_n(emb.row(perm[i]).begin(), 4, v.begin() + std::ptrdiff_t(i * 4));
    keys2[i] = 100 - keys[perm[i]];
  }
  const EmbeddingSet emb2(80, 4, std::move(v));
  const auto c2 = Clustering::from_keys(keys2);
  const auto moved = cluster_quality(c2, exact_knn(emb2, 6));
  // Match clusters through the sample they contain.
  for (std::size_t i = 0; i < 80; ++i) {
    const auto& a = base.clusters[c.cluster_of(perm[i])];
    const auto& b = moved.clusters[c2.cluster_of(i)];
    EXPECT_EQ(a.size, b.size);
    EXPECT_EQ(a.internal_edges, b.internal_edges);
    EXPECT_NEAR(a.inter_mq, b.inter_mq, 1e-12);
    if (a.avg_inter) {
      EXPECT_NEAR(*a.avg_inter, *b.avg_inter, 1e-4);
    }
  }
}

TEST(Quality, AddingInternalEdgeRaisesCoverage) {
  const auto before = make_lists(1, {{{2, 1.0f}}, {{0, 1.0f}}, {{3, 1.0f}}, {{2, 1.0f}}});
  const auto after = make_lists(1, {{{1, 1.0f}}, {{0, 1.0f}}, {{3, 1.0f}}, {{2, 1.0f}}});
  const Clustering c(std::vector<ClusterId>{0, 0, 1, 1});
  const auto b = cluster_quality(c, before), a = cluster_quality(c, after);
  EXPECT_GE(a.clusters[0].coverage, b.clusters[0].coverage);
  EXPECT_GE(*a.clusters[0].intra_mq, *b.clusters[0].intra_mq);
  EXPECT_LE(a.clusters[0].inter_mq, b.clusters[0].inter_mq);
}

TEST(Quality, MismatchedInputs) {
  SixNodes g;
  EXPECT_THROW(cluster_quality(Clustering(std::vector<ClusterId>{0, 0}), g.lists), ValidationError);
}

TEST(Ranking, OrderAndSizeFilter) {
  const std::vector<std::optional<double>> scores{1.0, 3.0, std::nullopt, 3.0, 5.0};
  const std::vector<std::size_t> sizes{3, 4, 5, 6, 2};
  EXPECT_EQ(rank_clusters(scores, sizes, 3), (std::vector<ClusterId>{3, 1, 0}));
  EXPECT_EQ(rank_clusters(scores, sizes, 1), (std::vector<ClusterId>{4, 3, 1, 0}));
  std::vector<std::optional<double>> cubed;
  for (const auto& s : scores) cubed.push_back(s ? std::optional<double>(*s * *s * *s + 7) : std::nullopt);
  EXPECT_EQ(rank_clusters(cubed, sizes, 1), rank_clusters(scores, sizes, 1));
  EXPECT_THROW(rank_clusters(scores, sizes, 0), ValidationError);
}

TEST(Ranking, MeasureNamesAndOrientation) {
  for (auto m : kAllMeasures) EXPECT_EQ(parse_measure(to_string(m)), m);
  EXPECT_THROW(parse_measure("nope"), ValidationError);
  SixNodes g;
  const auto r = cluster_quality(g.clustering, g.lists);
  EXPECT_EQ(*oriented_value(r.clusters[0], Measure::avg_intra), -1.5);
  EXPECT_EQ(*oriented_value(r.clusters[0], Measure::avg_inter), 3.5);
}

TEST(PrecisionAtRank, CurveAndBaseline) {
  // Cluster 0 pure, cluster 1 half, cluster 2 unlabeled, cluster 3 pure.
  const Clustering c(std::vector<ClusterId>{0, 0, 0, 1, 1, 1, 2, 2, 2, 3, 3, 3});
  LabelSet labels(12);
  for (int i : {0, 1, 2}) labels.assign(i, "a");
  labels.assign(3, "a");
  labels.assign(4, "b");
  labels.assign(5, "b");
  for (int i : {9, 10, 11}) labels.assign(i, "c");
  const std::vector<ClusterId> ranked{1, 2, 0, 3};
  const auto curve = precision_at_rank(ranked, c, labels);
  EXPECT_EQ(curve.clusters, (std::vector<ClusterId>{1, 0, 3}));
  ASSERT_EQ(curve.curve.size(), 3u);
  EXPECT_NEAR(curve.curve[0], 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(curve.curve[2], (1.0 / 3.0 + 2.0) / 3.0, 1e-15);
  EXPECT_EQ(curve.baseline, curve.curve.back());
  EXPECT_THROW(precision_at_rank({2}, c, labels), ValidationError);
}

TEST(PrecisionAtRank, PureClustersGiveFlatCurve) {
  const Clustering c(std::vector<ClusterId>{0, 0, 1, 1, 1});
  LabelSet labels(5);
  for (int i : {0, 1}) labels.assign(i, "x");
  for (int i : {2, 3, 4}) labels.assign(i, "y");
  const auto curve = precision_at_rank({1, 0}, c, labels);
  for (double v : curve.curve) EXPECT_EQ(v, 1.0);
}

TEST(Correlation, PearsonAndSpearman) {
  EXPECT_NEAR(*pearson({1, 2, 3}, {2, 4, 6}), 1.0, 1e-15);
  EXPECT_NEAR(*pearson({1, 2, 3}, {3, 2, 1}), -1.0, 1e-15);
  EXPECT_FALSE(pearson({1, 1, 1}, {1, 2, 3}).has_value());
  EXPECT_NEAR(*spearman({1, 10, 100}, {1, 2, 3}), 1.0, 1e-15);
  EXPECT_EQ(average_ranks({5, 1, 5, 3}), (std::vector<double>{3.5, 1, 3.5, 2}));
  // Hand value: x = 1..4, y = 1,3,2,4 -> r = 0.8
  EXPECT_NEAR(*pearson({1, 2, 3, 4}, {1, 3, 2, 4}), 0.8, 1e-15);
}

TEST(Report, QualityTsvHasAllColumns) {
  SixNodes g;
  const auto r = cluster_quality(g.clustering, g.lists);
  const auto ranked = rank_clusters(oriented_scores(r, Measure::combined_score), g.clustering.sizes(), 1);
  const auto tsv = format_quality_report(r, ranked);
  EXPECT_EQ(tsv.substr(0, tsv.find('\n')),
            "cluster\tsize\tcoverage\tcoverage_vacuous\tintra_mq\tinter_mq\tmq_combined\tmax_intra\ttotal_intra\t"
            "avg_intra\tmin_inter\ttotal_inter\tavg_inter\tcombined_score\trank");
  EXPECT_NE(tsv.find("\n1\t2\t0.5\t0\t1\t0.25\t0.75\t1\t2\t1\t3\t8\t4\t3\t1\n"), std::string::npos) << tsv;
  EXPECT_NE(tsv.find("\tNA\n"), std::string::npos);
}
