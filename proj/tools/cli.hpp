#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "aroc/aroc.hpp"

namespace aroc::cli {

enum ExitCode : int { kOk = 0, kValidation = 2, kFormat = 3 };

namespace detail {

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

inline void report_time(std::ostream& err, const std::string& stage, const Timer& t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", t.seconds());
  err << "time " << stage << " " << buf << " s\n";
}

inline EmbeddingSet load_input(const std::string& path, bool normalize) {
  auto emb = load_embeddings(path);
  return normalize ? emb.normalized() : emb;
}

/// Binary formats have no room for a header, so the resolved config goes
/// next to them as <path>.json.
inline void write_sidecar(const std::string& path, const nlohmann::ordered_json& config) {
  io::write_text(path + ".json", config.dump(2) + "\n");
}

}  // namespace detail

struct GenOptions {
  std::size_t classes = 10;
  std::optional<std::size_t> uniform;
  std::optional<double> zipf;
  std::size_t zipf_max = 100;
  std::size_t dim = 16;
  double spread = 1.0;
  double separation = 8.0;
  double noise = 0.0;
  std::size_t groups = 0;
  double group_offset = 0.0;
  bool no_shuffle = false;
  std::uint64_t seed = 0;
  std::string embeddings, labels;
};

struct KnnOptions {
  std::string embeddings, out;
  std::string method = "kdforest";
  std::size_t k = 200;
  std::size_t trees = 4;
  std::size_t shard_size = 1'000'000;
  std::size_t leaf_size = 1;
  std::string budget = "linear:2000@13233";
  std::uint64_t seed = 0;
  bool normalize = false;
  std::size_t audit = 0;
};

struct ClusterOptions {
  std::string algorithm = "approx-rank-order";
  std::string knn, embeddings, out;
  std::optional<double> threshold;
  std::string thresholds;  ///< "lo:hi:count" or a comma list, for sweeps
  std::optional<std::size_t> k;
  std::size_t clusters = 0;
  std::size_t max_iters = 100;
  std::size_t max_samples = 20000;
  std::size_t density_k = 20;
  std::uint64_t seed = 0;
  bool normalize = false;
  std::string labels;  ///< sweep only: evaluate every threshold
};

struct EvalOptions {
  std::string clustering, labels, format = "text", out;
  bool groups = false;
};

struct RankOptions {
  std::string clustering, knn, labels, measure = "combined_score", out, curve;
  std::size_t min_size = 3;
};

inline std::vector<double> parse_thresholds(const std::string& text) {
  std::vector<double> out;
  auto number = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ValidationError("bad threshold '" + s + "'");
    }
  };
  if (std::count(text.begin(), text.end(), ':') == 2) {
    const auto p1 = text.find(':'), p2 = text.rfind(':');
    const double lo = number(text.substr(0, p1)), hi = number(text.substr(p1 + 1, p2 - p1 - 1));
    const double count = number(text.substr(p2 + 1));
    if (!(count >= 1) || count != std::floor(count) || hi < lo)
      throw ValidationError("threshold range must be lo:hi:count with lo <= hi and count >= 1");
    return linear_thresholds(lo, hi, static_cast<std::size_t>(count));
  }
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(number(item));
  if (out.empty()) throw ValidationError("no thresholds given");
  return out;
}

inline void run_gen(const GenOptions& o, std::ostream& out) {
  SyntheticSpec spec;
  spec.num_classes = o.classes;
  if (o.uniform && o.zipf) throw ValidationError("--uniform and --zipf are exclusive");
  if (o.zipf) spec.sizes = ZipfSizes{*o.zipf, o.zipf_max};
  else spec.sizes = UniformSizes{o.uniform.value_or(5)};
  spec.dim = o.dim;
  spec.class_spread = o.spread;
  spec.separation = o.separation;
  spec.noise_fraction = o.noise;
  spec.groups_per_class = o.groups;
  spec.group_offset = o.group_offset;
  spec.shuffle = !o.no_shuffle;
  spec.seed = o.seed;
  const auto data = generate_synthetic(spec);

  nlohmann::ordered_json config;
  config["command"] = "gen";
  config["classes"] = o.classes;
  if (o.zipf) {
    config["zipf"] = *o.zipf;
    config["zipf_max"] = o.zipf_max;
  } else {
    config["uniform"] = o.uniform.value_or(5);
  }
  config["dim"] = o.dim;
  config["spread"] = o.spread;
  config["separation"] = o.separation;
  config["noise"] = o.noise;
  config["groups"] = o.groups;
  config["group_offset"] = o.group_offset;
  config["shuffle"] = spec.shuffle;
  config["seed"] = o.seed;

  save_embeddings(o.embeddings, data.embeddings);
  detail::write_sidecar(o.embeddings, config);
  std::string header = "# generated by: gen";
  for (const auto& [key, value] : config.items())
    if (key != "command") header += " --" + key + "=" + value.dump();
  save_labels(o.labels, data.labels, header + "\n");
  out << "samples " << data.embeddings.size() << "\n"
      << "dim " << data.embeddings.dim() << "\n"
      << "classes " << data.class_sizes.size() << "\n"
      << "labeled " << data.labels.num_labeled() << "\n"
      << "noise " << data.num_noise << "\n";
}

inline void run_knn(const KnnOptions& o, std::ostream& out, std::ostream& err) {
  detail::Timer load_timer;
  const auto emb = detail::load_input(o.embeddings, o.normalize);
  detail::report_time(err, "load", load_timer);

  nlohmann::ordered_json config;
  config["command"] = "knn";
  config["embeddings"] = o.embeddings;
  config["method"] = o.method;
  config["k"] = o.k;
  config["normalize"] = o.normalize;

  detail::Timer timer;
  std::optional<NeighborLists> lists;
  if (o.method == "exact") {
    lists = exact_knn(emb, o.k);
  } else if (o.method == "kdforest") {
    const auto budget = SearchBudget::parse(o.budget);
    if (budget.resolve(emb.size(), 1) < o.k)
      throw ValidationError("budget " + budget.to_string() + " resolves below k = " + std::to_string(o.k));
    if (o.k == 0 || o.k >= emb.size()) throw ValidationError("knn needs 1 <= k < n");
    config["trees"] = o.trees;
    config["shard_size"] = o.shard_size;
    config["leaf_size"] = o.leaf_size;
    config["budget"] = budget.to_string();
    config["resolved_checks"] = budget.resolve(emb.size(), o.k);
    config["seed"] = o.seed;
    const auto index = build_index(emb, o.trees, o.shard_size, o.seed, o.leaf_size);
    detail::report_time(err, "index", timer);
    timer = detail::Timer();
    lists = approx_knn(index, emb, o.k, budget);
  } else {
    throw ValidationError("unknown knn method '" + o.method + "' (exact or kdforest)");
  }
  detail::report_time(err, "search", timer);
  save_neighbor_lists(o.out, *lists);
  detail::write_sidecar(o.out, config);
  out << "samples " << lists->size() << "\nk " << lists->k() << "\n";

  if (o.audit > 0) {
    const std::size_t m = std::min(o.audit, emb.size());
    ::aroc::detail::Sampler rng(::aroc::detail::mix_seed(o.seed, 424242));
    std::vector<std::size_t> order(emb.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = 0; i < m; ++i) std::swap(order[i], order[i + rng.below(order.size() - i)]);
    order.resize(m);
    std::vector<std::vector<::aroc::detail::Candidate>> exact(m);
    parallel_for(m, [&](std::size_t i) { exact[i] = exact_query(emb, order[i], o.k); });
    out << "audit_queries " << m << "\nrecall_at_k " << format_double(recall_at_k(*lists, order, exact)) << "\n";
  }
}

inline std::string cluster_header(const std::vector<std::string>& inputs) {
  std::string h;
  for (const auto& line : inputs) h += "# " + line + "\n";
  return h;
}

inline void run_cluster(const ClusterOptions& o, std::ostream& out, std::ostream& err) {
  detail::Timer timer;
  if (o.algorithm == "approx-rank-order") {
    if (o.knn.empty()) throw ValidationError("approx-rank-order needs --knn");
    if (!o.threshold) throw ValidationError("approx-rank-order needs --threshold (or use the sweep command)");
    auto lists = load_neighbor_lists(o.knn);
    if (o.k) {
      if (*o.k == 0 || *o.k > lists.k()) throw ValidationError("--k must lie in [1, list length]");
      lists = lists.truncated(*o.k);
    }
    const auto c = approx_rank_order_cluster(lists, *o.threshold);
    detail::report_time(err, "cluster", timer);
    save_clustering(o.out, c, cluster_header({"knn=" + o.knn}));
    out << "clusters " << c.num_clusters() << "\n";
  } else if (o.algorithm == "rank-order-original") {
    if (o.embeddings.empty()) throw ValidationError("rank-order-original needs --embeddings");
    if (!o.threshold) throw ValidationError("rank-order-original needs --threshold");
    const auto emb = detail::load_input(o.embeddings, o.normalize);
    const auto c = rank_order_cluster_original(emb, *o.threshold, {o.max_samples, o.density_k});
    detail::report_time(err, "cluster", timer);
    save_clustering(o.out, c,
                    cluster_header({"embeddings=" + o.embeddings, std::string("normalize=") + (o.normalize ? "1" : "0"),
                                    "max_samples=" + std::to_string(o.max_samples),
                                    "density_k=" + std::to_string(o.density_k)}));
    out << "clusters " << c.num_clusters() << "\n";
  } else if (o.algorithm == "kmeans") {
    if (o.embeddings.empty()) throw ValidationError("kmeans needs --embeddings");
    if (o.clusters == 0) throw ValidationError("kmeans needs --clusters C >= 1");
    const auto emb = detail::load_input(o.embeddings, o.normalize);
    const auto c = kmeans_cluster(emb, o.clusters, o.max_iters, o.seed);
    detail::report_time(err, "cluster", timer);
    save_clustering(o.out, c,
                    cluster_header({"embeddings=" + o.embeddings, std::string("normalize=") + (o.normalize ? "1" : "0"),
                                    "max_iters=" + std::to_string(o.max_iters)}));
    out << "clusters " << c.num_clusters() << "\n";
  } else {
    throw ValidationError("unknown algorithm '" + o.algorithm + "' (approx-rank-order, rank-order-original, kmeans)");
  }
}

/// One clustering file per threshold in the output directory plus summary.tsv.
inline void run_sweep(const ClusterOptions& o, std::ostream& out, std::ostream& err) {
  if (o.knn.empty()) throw ValidationError("sweep needs --knn");
  if (o.thresholds.empty()) throw ValidationError("sweep needs --thresholds lo:hi:count or a comma list");
  const auto thresholds = parse_thresholds(o.thresholds);
  auto lists = load_neighbor_lists(o.knn);
  if (o.k) {
    if (*o.k == 0 || *o.k > lists.k()) throw ValidationError("--k must lie in [1, list length]");
    lists = lists.truncated(*o.k);
  }
  std::optional<LabelSet> labels;
  if (!o.labels.empty()) labels = load_labels(o.labels, lists.size());
  detail::Timer timer;
  const auto sweep = threshold_sweep(lists, thresholds);
  detail::report_time(err, "sweep", timer);

  std::filesystem::create_directories(o.out);
  std::ostringstream summary;
  summary << "# knn=" << o.knn << "\n# k=" << lists.k() << "\n";
  summary << "index\tthreshold\tclusters\tfile";
  if (labels) summary << "\tprecision\trecall\tf_measure";
  summary << "\n";
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof name, "clusters_%03zu.tsv", i);
    save_clustering((std::filesystem::path(o.out) / name).string(), sweep[i].clustering,
                    cluster_header({"knn=" + o.knn}));
    summary << i << '\t' << format_double(sweep[i].threshold) << '\t' << sweep[i].clustering.num_clusters() << '\t'
            << name;
    if (labels) {
      const auto r = pairwise_metrics(sweep[i].clustering, *labels);
      summary << '\t' << format_double(r.precision) << '\t' << format_double(r.recall) << '\t'
              << format_double(r.f_measure);
    }
    summary << '\n';
  }
  io::write_text((std::filesystem::path(o.out) / "summary.tsv").string(), summary.str());
  out << summary.str();
}

inline void run_eval(const EvalOptions& o, std::ostream& out) {
  const auto clustering = load_clustering(o.clustering);
  if (o.labels.empty()) throw ValidationError("eval needs --labels");
  const auto labels = load_labels(o.labels, clustering.num_samples());
  const auto pairwise = pairwise_metrics(clustering, labels);
  std::optional<GroupedRecallReport> grouped;
  if (o.groups) grouped = grouped_recall(clustering, labels);

  std::string text;
  if (o.format == "json") {
    nlohmann::ordered_json j;
    j["clustering"] = o.clustering;
    j["labels"] = o.labels;
    j["pairwise"] = to_json(pairwise);
    if (grouped) j["grouped_recall"] = to_json(*grouped);
    text = j.dump(2) + "\n";
  } else if (o.format == "text") {
    text = "# clustering=" + o.clustering + "\n# labels=" + o.labels + "\n" + to_text(pairwise);
    if (grouped) text += to_text(*grouped);
  } else {
    throw ValidationError("unknown format '" + o.format + "' (text or json)");
  }
  if (!o.out.empty()) io::write_text(o.out, text);
  out << text;
}

inline void run_rank(const RankOptions& o, std::ostream& out, std::ostream& err) {
  const auto clustering = load_clustering(o.clustering);
  const auto lists = load_neighbor_lists(o.knn);
  if (lists.size() != clustering.num_samples())
    throw ValidationError("clustering has " + std::to_string(clustering.num_samples()) +
                          " samples but the neighbor lists cover " + std::to_string(lists.size()));
  const auto measure = parse_measure(o.measure);
  detail::Timer timer;
  const auto report = cluster_quality(clustering, lists);
  const auto ranked = rank_clusters(oriented_scores(report, measure), clustering.sizes(), o.min_size);
  detail::report_time(err, "quality", timer);

  const std::string header = "# clustering=" + o.clustering + "\n# knn=" + o.knn + "\n# measure=" + o.measure +
                             "\n# min_size=" + std::to_string(o.min_size) + "\n";
  const auto table = format_quality_report(report, ranked, header);
  if (!o.out.empty()) io::write_text(o.out, table);
  out << "ranked_clusters " << ranked.size() << "\n";

  if (!o.labels.empty()) {
    const auto labels = load_labels(o.labels, clustering.num_samples());
    const auto curve = precision_at_rank(ranked, clustering, labels);
    if (!o.curve.empty()) io::write_text(o.curve, format_precision_curve(curve, header));
    out << "baseline_precision " << format_double(curve.baseline) << "\n";
    const std::size_t top = std::max<std::size_t>(1, curve.curve.size() / 10);
    out << "top10pct_precision " << format_double(curve.curve[top - 1]) << "\n";
    out << "measure\tclusters\tpearson\tspearman\n";
    for (const auto& c : measure_correlations(report, clustering, labels, o.min_size))
      out << to_string(c.measure) << '\t' << c.clusters << '\t' << format_optional(c.pearson) << '\t'
          << format_optional(c.spearman) << '\n';
  } else if (o.out.empty()) {
    out << table;
  }
}

/// Parses argv and runs one subcommand. Returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Approximate rank-order clustering of embedding sets"};
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: AROC_THREADS or all cores)");

  GenOptions gen;
  auto* g = app.add_subcommand("gen", "Generate a synthetic labeled embedding set");
  g->add_option("--classes", gen.classes, "Number of classes");
  g->add_option("--uniform", gen.uniform, "Samples per class");
  g->add_option("--zipf", gen.zipf, "Zipf exponent for class sizes");
  g->add_option("--zipf-max", gen.zipf_max, "Largest Zipf class size");
  g->add_option("--dim", gen.dim, "Dimension");
  g->add_option("--spread", gen.spread, "Within-class standard deviation");
  g->add_option("--separation", gen.separation, "Standard deviation of class means");
  g->add_option("--noise", gen.noise, "Fraction of unlabeled noise samples");
  g->add_option("--groups", gen.groups, "Groups per class");
  g->add_option("--group-offset", gen.group_offset, "Scale of group offsets");
  g->add_flag("--no-shuffle", gen.no_shuffle, "Keep labeled rows first");
  g->add_option("--seed", gen.seed, "Random seed");
  g->add_option("--embeddings", gen.embeddings, "Output embedding file")->required();
  g->add_option("--labels", gen.labels, "Output label file")->required();

  KnnOptions knn;
  auto* kn = app.add_subcommand("knn", "Compute top-k neighbor lists");
  kn->add_option("--embeddings", knn.embeddings, "Input embedding file")->required();
  kn->add_option("--out", knn.out, "Output KNN1 file")->required();
  kn->add_option("--method", knn.method, "exact or kdforest");
  kn->add_option("--k", knn.k, "Neighbors per sample");
  kn->add_option("--trees", knn.trees, "Trees per shard");
  kn->add_option("--shard-size", knn.shard_size, "Samples per shard");
  kn->add_option("--leaf-size", knn.leaf_size, "Points per leaf");
  kn->add_option("--budget", knn.budget, "c | fixed:c | linear:c@n_ref | log:c@n_ref");
  kn->add_option("--seed", knn.seed, "Random seed");
  kn->add_flag("--normalize", knn.normalize, "L2-normalize rows first");
  kn->add_option("--audit", knn.audit, "Report recall@k on this many random queries");

  ClusterOptions cl;
  auto* c = app.add_subcommand("cluster", "Cluster samples");
  c->add_option("--algorithm", cl.algorithm, "approx-rank-order, rank-order-original or kmeans");
  c->add_option("--knn", cl.knn, "Input KNN1 file");
  c->add_option("--embeddings", cl.embeddings, "Input embedding file");
  c->add_option("--out", cl.out, "Output clustering file")->required();
  c->add_option("--threshold", cl.threshold, "Merge threshold");
  c->add_option("--k", cl.k, "Use only the top k of each list");
  c->add_option("--clusters", cl.clusters, "k-means C");
  c->add_option("--max-iters", cl.max_iters, "k-means iteration cap");
  c->add_option("--max-samples", cl.max_samples, "Size cap for rank-order-original");
  c->add_option("--density-k", cl.density_k, "rank-order-original: neighbors for the density check (0 disables)");
  c->add_option("--seed", cl.seed, "Random seed");
  c->add_flag("--normalize", cl.normalize, "L2-normalize rows first");

  ClusterOptions sw;
  auto* s = app.add_subcommand("sweep", "Approximate rank-order clustering over ascending thresholds");
  s->add_option("--knn", sw.knn, "Input KNN1 file")->required();
  s->add_option("--thresholds", sw.thresholds, "lo:hi:count or comma list")->required();
  s->add_option("--out", sw.out, "Output directory")->required();
  s->add_option("--k", sw.k, "Use only the top k of each list");
  s->add_option("--labels", sw.labels, "Evaluate each threshold against these labels");

  EvalOptions ev;
  auto* e = app.add_subcommand("eval", "Pairwise precision, recall and F-measure");
  e->add_option("--clustering", ev.clustering, "Input clustering file")->required();
  e->add_option("--labels", ev.labels, "Input label file")->required();
  e->add_flag("--groups", ev.groups, "Also report within/cross-group recall");
  e->add_option("--format", ev.format, "text or json");
  e->add_option("--out", ev.out, "Also write the report here");

  RankOptions rk;
  auto* r = app.add_subcommand("rank", "Internal quality measures and cluster ranking");
  r->add_option("--clustering", rk.clustering, "Input clustering file")->required();
  r->add_option("--knn", rk.knn, "Input KNN1 file")->required();
  r->add_option("--labels", rk.labels, "Input label file");
  r->add_option("--measure", rk.measure, "Ranking measure");
  r->add_option("--min-size", rk.min_size, "Smallest cluster to rank");
  r->add_option("--out", rk.out, "Quality report TSV");
  r->add_option("--curve", rk.curve, "Precision@rank TSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    err << "error: " << e.what() << "\n";
    return kValidation;
  }

  struct ThreadScope {
    explicit ThreadScope(unsigned n) { set_num_threads(n); }
    ~ThreadScope() { set_num_threads(0); }
  } thread_scope(threads);
  try {
    if (*g) run_gen(gen, out);
    else if (*kn) run_knn(knn, out, err);
    else if (*c) run_cluster(cl, out, err);
    else if (*s) run_sweep(sw, out, err);
    else if (*e) run_eval(ev, out);
    else if (*r) run_rank(rk, out, err);
  } catch (const FormatError& ex) {
    err << "format error: " << ex.what() << "\n";
    return kFormat;
  } catch (const ContractError& ex) {
    err << "contract error: " << ex.what() << "\n";
    return kFormat;
  } catch (const ValidationError& ex) {
    err << "error: " << ex.what() << "\n";
    return kValidation;
  } catch (const std::filesystem::filesystem_error& ex) {
    err << "error: " << ex.what() << "\n";
    return kValidation;
  }
  return kOk;
}

}  // namespace aroc::cli
