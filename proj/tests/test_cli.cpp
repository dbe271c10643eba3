#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "cli.hpp"

using namespace aroc;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "aroc");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
  const auto bytes = io::read_file(path);
  return std::string(bytes.begin(), bytes.end());
}

std::string body(const std::string& text) {
  std::string out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);)
    if (line.empty() || line[0] != '#') out += line + "\n";
  return out;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("aroc_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void gen_small(const std::string& extra_seed = "7") {
    const auto r = run({"gen", "--classes", "10", "--uniform", "5", "--dim", "16", "--seed", extra_seed, "--embeddings",
                        path("x.emb"), "--labels", path("x.tsv")});
    ASSERT_EQ(r.code, 0) << r.err;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, GenWritesFilesAndIsReproducible) {
  gen_small();
  EXPECT_EQ(load_embeddings(path("x.emb")).size(), 50u);
  EXPECT_EQ(load_labels(path("x.tsv"), 50).num_labeled(), 50u);
  EXPECT_TRUE(fs::exists(path("x.emb.json")));
  const auto first = slurp(path("x.emb")), labels = slurp(path("x.tsv"));
  gen_small();
  EXPECT_EQ(slurp(path("x.emb")), first);
  EXPECT_EQ(slurp(path("x.tsv")), labels);
  EXPECT_EQ(labels.rfind("# generated by: gen", 0), 0u);
}

TEST_F(Cli, GenNoiseFraction) {
  const auto r = run({"gen", "--classes", "40", "--uniform", "10", "--noise", "0.5", "--embeddings", path("n.emb"),
                      "--labels", path("n.tsv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto emb = load_embeddings(path("n.emb"));
  const auto labels = load_labels(path("n.tsv"), emb);
  EXPECT_NEAR(double(labels.num_labeled()) / double(emb.size()), 0.5, 0.01);
}

TEST_F(Cli, KnnExactAndForestWithAudit) {
  ASSERT_EQ(run({"gen", "--classes", "20", "--uniform", "5", "--embeddings", path("x.emb"), "--labels", path("x.tsv")})
                .code,
            0);
  auto r = run({"knn", "--method", "exact", "--k", "5", "--embeddings", path("x.emb"), "--out", path("e.knn")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(load_neighbor_lists(path("e.knn")).k(), 5u);

  r = run({"knn", "--method", "kdforest", "--k", "5", "--budget", "linear:2000@13233", "--audit", "100",
           "--embeddings", path("x.emb"), "--out", path("f.knn")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto pos = r.out.find("recall_at_k ");
  ASSERT_NE(pos, std::string::npos) << r.out;
  const double recall = std::stod(r.out.substr(pos + 12));
  EXPECT_GE(recall, 0.0);
  EXPECT_LE(recall, 1.0);
  EXPECT_NE(r.err.find("time search"), std::string::npos);
  const auto sidecar = nlohmann::json::parse(slurp(path("f.knn.json")));
  EXPECT_EQ(sidecar["budget"], "linear:2000@13233");
  EXPECT_EQ(sidecar["trees"], 4);
}

TEST_F(Cli, DefaultsFollowTheDocumentedValues) {
  cli::KnnOptions knn;
  cli::RankOptions rank;
  EXPECT_EQ(knn.k, 200u);
  EXPECT_EQ(knn.trees, 4u);
  EXPECT_EQ(knn.budget, "linear:2000@13233");
  EXPECT_EQ(rank.min_size, 3u);
  EXPECT_EQ(rank.measure, "combined_score");
}

TEST_F(Cli, ClusterKmeansSingleCluster) {
  gen_small();
  const auto r = run({"cluster", "--algorithm", "kmeans", "--clusters", "1", "--embeddings", path("x.emb"), "--out",
                      path("c.tsv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto c = load_clustering(path("c.tsv"));
  EXPECT_EQ(c.num_clusters(), 1u);
  EXPECT_EQ(c.params().algorithm, "kmeans");
  EXPECT_EQ(*c.params().requested_clusters, 1u);
}

TEST_F(Cli, ClusterApproxAndOriginal) {
  gen_small();
  ASSERT_EQ(run({"knn", "--method", "exact", "--k", "10", "--embeddings", path("x.emb"), "--out", path("x.knn")}).code, 0);
  auto r = run({"cluster", "--knn", path("x.knn"), "--threshold", "1.5", "--out", path("a.tsv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto text = slurp(path("a.tsv"));
  EXPECT_NE(text.find("# algorithm=approx-rank-order\n# threshold=1.5\n# k=10\n"), std::string::npos) << text;
  r = run({"cluster", "--algorithm", "rank-order-original", "--threshold", "1.5", "--embeddings", path("x.emb"), "--out",
           path("o.tsv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(run({"cluster", "--threshold", "1", "--out", path("z.tsv")}).code, cli::kValidation);
}

TEST_F(Cli, SweepWritesOneFilePerThresholdAndSummary) {
  gen_small();
  ASSERT_EQ(run({"knn", "--method", "exact", "--k", "10", "--embeddings", path("x.emb"), "--out", path("x.knn")}).code, 0);
  const auto r = run({"sweep", "--knn", path("x.knn"), "--thresholds", "0:2:5", "--labels", path("x.tsv"), "--out",
                      path("sweep")});
  ASSERT_EQ(r.code, 0) << r.err;
  for (int i = 0; i < 5; ++i) EXPECT_TRUE(fs::exists(path("sweep/clusters_00" + std::to_string(i) + ".tsv")));
  const auto summary = slurp(path("sweep/summary.tsv"));
  EXPECT_NE(summary.find("index\tthreshold\tclusters\tfile\tprecision\trecall\tf_measure\n"), std::string::npos);
  EXPECT_EQ(std::count(summary.begin(), summary.end(), '\n'), 2 + 1 + 5);
}

TEST_F(Cli, EvalWorkedExample) {
  const std::string data = AROC_TEST_DATA;
  auto r = run({"eval", "--clustering", data + "/worked_example_clustering.tsv", "--labels", data + "/worked_example_labels.tsv", "--format",
                "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_NEAR(j["pairwise"]["precision"].get<double>(), 0.2, 1e-12);
  EXPECT_NEAR(j["pairwise"]["recall"].get<double>(), 1.0 / 3.0, 1e-12);
  EXPECT_EQ(j["pairwise"]["mode"], "partial-labels");
  r = run({"eval", "--clustering", data + "/worked_example_clustering.tsv", "--labels", data + "/worked_example_labels.tsv"});
  EXPECT_NE(r.out.find("precision"), std::string::npos);
}

TEST_F(Cli, EvalPerfectAndGroups) {
  io::write_text(path("c.tsv"), "0\t0\n1\t0\n2\t1\n3\t1\n");
  io::write_text(path("l.tsv"), "0\ta\tv1\n1\ta\tv1\n2\ta\tv2\n3\ta\tv2\n");
  const auto r = run({"eval", "--clustering", path("c.tsv"), "--labels", path("l.tsv"), "--groups", "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["grouped_recall"]["within_group_recall"], 1.0);
  EXPECT_EQ(j["grouped_recall"]["cross_group_recall"], 0.0);
  EXPECT_EQ(j["pairwise"]["precision"], 1.0);

  io::write_text(path("p.tsv"), "0\ta\n1\ta\n2\tb\n3\tb\n");
  const auto perfect = run({"eval", "--clustering", path("c.tsv"), "--labels", path("p.tsv"), "--format", "json"});
  EXPECT_EQ(nlohmann::json::parse(perfect.out)["pairwise"]["f_measure"], 1.0);
}

TEST_F(Cli, RankReportsCurveAndCorrelations) {
  ASSERT_EQ(run({"gen", "--classes", "30", "--zipf", "1.0", "--zipf-max", "12", "--noise", "0.3", "--spread", "3",
                 "--separation", "10", "--embeddings", path("x.emb"), "--labels", path("x.tsv")})
                .code,
            0);
  ASSERT_EQ(run({"knn", "--method", "exact", "--k", "10", "--embeddings", path("x.emb"), "--out", path("x.knn")}).code, 0);
  ASSERT_EQ(run({"cluster", "--knn", path("x.knn"), "--threshold", "1", "--out", path("c.tsv")}).code, 0);
  const auto r = run({"rank", "--clustering", path("c.tsv"), "--knn", path("x.knn"), "--labels", path("x.tsv"), "--out",
                      path("q.tsv"), "--curve", path("curve.tsv"), "--min-size", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(path("q.tsv")));
  EXPECT_NE(slurp(path("curve.tsv")).find("rank\tavg_precision\n1\t"), std::string::npos);

  // The printed correlations equal the library's.
  const auto clustering = load_clustering(path("c.tsv"));
  const auto lists = load_neighbor_lists(path("x.knn"));
  const auto labels = load_labels(path("x.tsv"), clustering.num_samples());
  const auto corr = measure_correlations(cluster_quality(clustering, lists), clustering, labels, 2);
  for (const auto& c : corr) {
    const std::string line = std::string(to_string(c.measure)) + "\t" + std::to_string(c.clusters) + "\t" +
                             format_optional(c.pearson) + "\t" + format_optional(c.spearman) + "\n";
    EXPECT_NE(r.out.find(line), std::string::npos) << line;
  }

  const auto by_coverage = run({"rank", "--clustering", path("c.tsv"), "--knn", path("x.knn"), "--measure", "coverage",
                                "--out", path("q2.tsv"), "--min-size", "2"});
  ASSERT_EQ(by_coverage.code, 0);
  EXPECT_NE(slurp(path("q.tsv")), slurp(path("q2.tsv")));
}

TEST_F(Cli, ThreadCountNeverChangesOutput) {
  ASSERT_EQ(run({"gen", "--classes", "50", "--uniform", "20", "--dim", "8", "--embeddings", path("x.emb"), "--labels",
                 path("x.tsv")})
                .code,
            0);
  for (const char* t : {"1", "3"}) {
    const std::string tag = t;
    ASSERT_EQ(run({"--threads", t, "knn", "--k", "15", "--budget", "40", "--shard-size", "300", "--embeddings",
                   path("x.emb"), "--out", path("t" + tag + ".knn")})
                  .code,
              0);
    ASSERT_EQ(run({"--threads", t, "sweep", "--knn", path("t" + tag + ".knn"), "--thresholds", "0:3:4", "--out",
                   path("s" + tag)})
                  .code,
              0);
    ASSERT_EQ(run({"--threads", t, "rank", "--clustering", path("s" + tag + "/clusters_002.tsv"), "--knn",
                   path("t" + tag + ".knn"), "--out", path("q" + tag + ".tsv")})
                  .code,
              0);
  }
  EXPECT_EQ(slurp(path("t1.knn")), slurp(path("t3.knn")));
  // Headers name the input paths, which differ here; the bodies must not.
  EXPECT_EQ(body(slurp(path("s1/clusters_003.tsv"))), body(slurp(path("s3/clusters_003.tsv"))));
  EXPECT_EQ(body(slurp(path("q1.tsv"))), body(slurp(path("q3.tsv"))));
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run({}).code, cli::kValidation);
  EXPECT_EQ(run({"eval", "--clustering", path("missing.tsv"), "--labels", path("missing.tsv")}).code, cli::kValidation);
  io::write_text(path("bad.emb"), "EMB2xxxxxxxxxxxxxxxxxxxx");
  EXPECT_EQ(run({"knn", "--embeddings", path("bad.emb"), "--out", path("o.knn")}).code, cli::kFormat);
  gen_small();
  EXPECT_EQ(run({"knn", "--k", "10", "--budget", "fixed:3", "--embeddings", path("x.emb"), "--out", path("o.knn")}).code,
            cli::kValidation);
  EXPECT_EQ(run({"knn", "--k", "60", "--method", "exact", "--embeddings", path("x.emb"), "--out", path("o.knn")}).code,
            cli::kValidation);
  EXPECT_EQ(run({"knn", "--bogus", "--embeddings", path("x.emb"), "--out", path("o.knn")}).code, cli::kValidation);
  io::write_text(path("c.tsv"), "0\t0\n1\t0\n");
  io::write_text(path("l.tsv"), "0\ta\n1\ta\n");
  ASSERT_EQ(run({"knn", "--method", "exact", "--k", "3", "--embeddings", path("x.emb"), "--out", path("x.knn")}).code, 0);
  EXPECT_EQ(run({"rank", "--clustering", path("c.tsv"), "--knn", path("x.knn")}).code, cli::kValidation);
  EXPECT_EQ(run({"--help"}).code, 0);
}
