#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "aroc/binary_io.hpp"
#include "aroc/common.hpp"

namespace aroc {

/// n fixed-dimension float vectors, row-major. Immutable after construction.
class EmbeddingSet {
 public:
  EmbeddingSet(std::size_t n, std::size_t d, std::vector<float> values)
      : n_(n), d_(d), values_(std::move(values)) {
    if (n_ < 1 || d_ < 1) throw ValidationError("embedding set needs n >= 1 and d >= 1");
    if (values_.size() != n_ * d_)
      throw ValidationError("embedding value count " + std::to_string(values_.size()) +
                            " does not match n*d = " + std::to_string(n_ * d_));
    for (std::size_t i = 0; i < values_.size(); ++i)
      if (!std::isfinite(values_[i]))
        throw ValidationError("non-finite component at sample " + std::to_string(i / d_) +
                              ", dim " + std::to_string(i % d_));
  }

  std::size_t size() const noexcept { return n_; }
  std::size_t dim() const noexcept { return d_; }
  std::span<const float> row(std::size_t i) const noexcept {
    return {values_.data() + i * d_, d_};
  }
  std::span<const float> values() const noexcept { return values_; }

  /// Copy with every row scaled to unit L2 norm (zero rows left as is).
  EmbeddingSet normalized() const {
    std::vector<float> out(values_);
    for (std::size_t i = 0; i < n_; ++i) {
      double norm = 0.0;
      for (std::size_t j = 0; j < d_; ++j) norm += double(out[i * d_ + j]) * out[i * d_ + j];
      norm = std::sqrt(norm);
      if (norm > 0.0)
        for (std::size_t j = 0; j < d_; ++j)
          out[i * d_ + j] = static_cast<float>(out[i * d_ + j] / norm);
    }
    return EmbeddingSet(n_, d_, std::move(out));
  }

 private:
  std::size_t n_;
  std::size_t d_;
  std::vector<float> values_;
};

/// Squared Euclidean distance, accumulated in double in index order. Every
/// neighbor search in the library goes through this one function so that
/// exact and approximate paths agree bit-for-bit on shared pairs.
inline double squared_l2(std::span<const float> a, std::span<const float> b) noexcept {
  double acc = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double diff = double(a[j]) - double(b[j]);
    acc += diff * diff;
  }
  return acc;
}

/// Partial identity labels (and optional group ids) over the samples of an
/// EmbeddingSet. Labels and groups are interned to dense indices.
class LabelSet {
 public:
  static constexpr std::int32_t kNone = -1;

  LabelSet() = default;
  explicit LabelSet(std::size_t num_samples)
      : class_of_(num_samples, kNone), group_of_(num_samples, kNone) {}

  void assign(std::size_t id, std::string_view label,
              std::optional<std::string_view> group = std::nullopt) {
    if (id >= class_of_.size())
      throw ValidationError("label for sample id " + std::to_string(id) +
                            " out of range (n = " + std::to_string(class_of_.size()) + ")");
    if (class_of_[id] != kNone)
      throw ValidationError("duplicate label for sample id " + std::to_string(id));
    class_of_[id] = intern(label, class_names_, class_index_);
    ++num_labeled_;
    if (group) group_of_[id] = intern(*group, group_names_, group_index_);
  }

  std::size_t num_samples() const noexcept { return class_of_.size(); }
  std::size_t num_labeled() const noexcept { return num_labeled_; }
  std::size_t num_classes() const noexcept { return class_names_.size(); }
  std::size_t num_groups() const noexcept { return group_names_.size(); }
  bool has_groups() const noexcept { return !group_names_.empty(); }

  std::int32_t class_of(std::size_t id) const { return class_of_[id]; }
  std::int32_t group_of(std::size_t id) const { return group_of_[id]; }
  bool is_labeled(std::size_t id) const { return class_of_[id] != kNone; }
  std::optional<std::string_view> label(std::size_t id) const {
    if (class_of_[id] == kNone) return std::nullopt;
    return class_names_[class_of_[id]];
  }
  std::optional<std::string_view> group(std::size_t id) const {
    if (group_of_[id] == kNone) return std::nullopt;
    return group_names_[group_of_[id]];
  }

 private:
  static std::int32_t intern(std::string_view s, std::vector<std::string>& names,
                             std::unordered_map<std::string, std::int32_t>& index) {
    auto [it, inserted] = index.try_emplace(std::string(s), static_cast<std::int32_t>(names.size()));
    if (inserted) names.emplace_back(s);
    return it->second;
  }

  std::vector<std::int32_t> class_of_;
  std::vector<std::int32_t> group_of_;
  std::vector<std::string> class_names_;
  std::vector<std::string> group_names_;
  std::unordered_map<std::string, std::int32_t> class_index_;
  std::unordered_map<std::string, std::int32_t> group_index_;
  std::size_t num_labeled_ = 0;
};

// ---------------------------------------------------------------------------
// Embedding file: "EMB1", u64 n, u64 d, n*d little-endian f32, row-major.

inline std::vector<char> encode_embeddings(const EmbeddingSet& set) {
  std::vector<char> out;
  out.reserve(20 + set.values().size() * 4);
  io::put_magic(out, "EMB1");
  io::put_u64(out, set.size());
  io::put_u64(out, set.dim());
  for (float v : set.values()) io::put_f32(out, v);
  return out;
}

inline EmbeddingSet decode_embeddings(const std::vector<char>& bytes) {
  io::Reader in(bytes);
  in.expect_magic("EMB1");
  const std::uint64_t n = in.u64("sample count");
  const std::uint64_t d = in.u64("dimension");
  if (n == 0 || d == 0) throw FormatError("header declares an empty set", 4);
  if (n > UINT64_MAX / d / 4) throw FormatError("header n*d overflows", 4);
  const std::uint64_t count = n * d;
  if (in.remaining() / 4 < count)
    throw FormatError("truncated payload: expected " + std::to_string(count) + " floats, found " +
                          std::to_string(in.remaining() / 4),
                      in.position() + (in.remaining() / 4) * 4);
  if (in.remaining() > count * 4)
    throw FormatError("trailing bytes after payload", in.position() + count * 4);
  std::vector<float> values(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::size_t offset = in.position();
    values[i] = in.f32("payload");
    if (!std::isfinite(values[i])) throw FormatError("non-finite value", offset);
  }
  return EmbeddingSet(n, d, std::move(values));
}

inline void save_embeddings(const std::string& path, const EmbeddingSet& set) {
  io::write_file(path, encode_embeddings(set));
}

inline EmbeddingSet load_embeddings(const std::string& path) {
  return decode_embeddings(io::read_file(path));
}

// ---------------------------------------------------------------------------
// Label file: UTF-8 TSV "<sample_id>\t<label>[\t<group_id>]"; '#' lines ignored.

inline LabelSet parse_labels(std::string_view text, std::size_t num_samples) {
  LabelSet labels(num_samples);
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t line_start = pos;
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;

    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
      const std::size_t tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab - start));
      if (tab == std::string_view::npos) break;
      start = tab + 1;
    }
    if (fields.size() < 2 || fields.size() > 3)
      throw FormatError("label row needs 2 or 3 tab-separated fields", line_start);
    std::uint64_t id = 0;
    const auto* first = fields[0].data();
    const auto* last = first + fields[0].size();
    const auto [ptr, ec] = std::from_chars(first, last, id);
    if (ec != std::errc() || ptr != last) throw FormatError("bad sample id", line_start);
    if (fields[1].empty()) throw FormatError("empty label", line_start);
    std::optional<std::string_view> group;
    if (fields.size() == 3) group = fields[2];
    labels.assign(id, fields[1], group);
  }
  return labels;
}

inline LabelSet load_labels(const std::string& path, std::size_t num_samples) {
  const auto bytes = io::read_file(path);
  return parse_labels(std::string_view(bytes.data(), bytes.size()), num_samples);
}

inline LabelSet load_labels(const std::string& path, const EmbeddingSet& embeddings) {
  return load_labels(path, embeddings.size());
}

inline std::string format_labels(const LabelSet& labels, const std::string& header = {}) {
  std::ostringstream out;
  if (!header.empty()) out << header;
  for (std::size_t i = 0; i < labels.num_samples(); ++i) {
    const auto label = labels.label(i);
    if (!label) continue;
    out << i << '\t' << *label;
    if (const auto g = labels.group(i)) out << '\t' << *g;
    out << '\n';
  }
  return out.str();
}

inline void save_labels(const std::string& path, const LabelSet& labels,
                        const std::string& header = {}) {
  io::write_text(path, format_labels(labels, header));
}

// ---------------------------------------------------------------------------
// Synthetic identity-like data.

struct UniformSizes {
  std::size_t per_class = 5;
};

/// Class sizes drawn i.i.d. from P(size = s) proportional to s^-exponent, s in [1, max_size].
struct ZipfSizes {
  double exponent = 1.5;
  std::size_t max_size = 100;
};

struct SyntheticSpec {
  std::size_t num_classes = 10;
  std::variant<UniformSizes, ZipfSizes> sizes = UniformSizes{};
  std::size_t dim = 16;
  double class_spread = 1.0;
  double separation = 8.0;
  double noise_fraction = 0.0;
  /// When > 0, every class is split into this many groups (e.g. videos), each
  /// with its own offset of scale group_offset around the class mean.
  std::size_t groups_per_class = 0;
  double group_offset = 0.0;
  /// Shuffle sample order. Without shuffling, labeled samples come first and
  /// noise rows are a prefix-stable stream, so raising noise_fraction only
  /// appends rows.
  bool shuffle = true;
  std::uint64_t seed = 0;

  void validate() const {
    if (num_classes < 1) throw ValidationError("num_classes must be >= 1");
    if (dim < 1) throw ValidationError("dim must be >= 1");
    if (!(class_spread > 0.0)) throw ValidationError("class_spread must be > 0");
    if (!(separation >= 0.0)) throw ValidationError("separation must be >= 0");
    if (!(noise_fraction >= 0.0 && noise_fraction < 1.0))
      throw ValidationError("noise_fraction must lie in [0, 1)");
    if (group_offset < 0.0) throw ValidationError("group_offset must be >= 0");
    if (const auto* u = std::get_if<UniformSizes>(&sizes); u && u->per_class < 1)
      throw ValidationError("uniform class size must be >= 1");
    if (const auto* z = std::get_if<ZipfSizes>(&sizes)) {
      if (z->max_size < 1) throw ValidationError("zipf max size must be >= 1");
      if (!(z->exponent >= 0.0)) throw ValidationError("zipf exponent must be >= 0");
    }
  }
};

struct SyntheticData {
  EmbeddingSet embeddings;
  LabelSet labels;
  std::vector<std::size_t> class_sizes;
  std::size_t num_noise = 0;
};

namespace detail {

/// Portable sampling on top of mt19937_64 (whose output sequence is fixed by
/// the standard), so generated files are identical across standard libraries.
class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return double(engine_() >> 11) * 0x1.0p-53; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t below(std::uint64_t bound) { return static_cast<std::uint64_t>(uniform() * double(bound)); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Probability mass of the Zipf size law used by generate_synthetic.
inline std::vector<double> zipf_pmf(const ZipfSizes& z) {
  std::vector<double> pmf(z.max_size);
  double total = 0.0;
  for (std::size_t s = 1; s <= z.max_size; ++s) total += pmf[s - 1] = std::pow(double(s), -z.exponent);
  for (double& p : pmf) p /= total;
  return pmf;
}

inline SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  detail::Sampler size_rng(detail::mix_seed(spec.seed, 0));
  detail::Sampler class_rng(detail::mix_seed(spec.seed, 1));
  detail::Sampler noise_rng(detail::mix_seed(spec.seed, 2));
  detail::Sampler order_rng(detail::mix_seed(spec.seed, 3));

  std::vector<std::size_t> sizes(spec.num_classes);
  if (const auto* u = std::get_if<UniformSizes>(&spec.sizes)) {
    std::fill(sizes.begin(), sizes.end(), u->per_class);
  } else {
    const auto& z = std::get<ZipfSizes>(spec.sizes);
    const auto pmf = zipf_pmf(z);
    std::vector<double> cdf(pmf.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < pmf.size(); ++i) cdf[i] = acc += pmf[i];
    cdf.back() = 1.0;
    for (auto& s : sizes) {
      const double u = size_rng.uniform();
      s = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin()) + 1;
      s = std::min(s, z.max_size);
    }
  }

  std::size_t num_labeled = 0;
  for (auto s : sizes) num_labeled += s;
  const auto num_noise = static_cast<std::size_t>(
      std::llround(double(num_labeled) * spec.noise_fraction / (1.0 - spec.noise_fraction)));
  const std::size_t n = num_labeled + num_noise;
  const std::size_t d = spec.dim;

  std::vector<float> rows(n * d);
  std::vector<std::int64_t> row_class(n, -1);
  std::vector<std::int64_t> row_group(n, -1);
  std::vector<double> mean(d), group_mean(d);
  std::size_t r = 0;
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    for (auto& m : mean) m = spec.separation * class_rng.normal();
    const std::size_t groups = std::max<std::size_t>(spec.groups_per_class, 1);
    std::vector<std::vector<double>> group_means(groups, mean);
    if (spec.groups_per_class > 0)
      for (auto& gm : group_means)
        for (std::size_t j = 0; j < d; ++j) gm[j] = mean[j] + spec.group_offset * class_rng.normal();
    for (std::size_t i = 0; i < sizes[c]; ++i, ++r) {
      const std::size_t g = i % groups;
      for (std::size_t j = 0; j < d; ++j)
        rows[r * d + j] = static_cast<float>(group_means[g][j] + spec.class_spread * class_rng.normal());
      row_class[r] = static_cast<std::int64_t>(c);
      if (spec.groups_per_class > 0) row_group[r] = static_cast<std::int64_t>(c * groups + g);
    }
  }
  const double envelope = std::sqrt(spec.separation * spec.separation + spec.class_spread * spec.class_spread);
  for (; r < n; ++r)
    for (std::size_t j = 0; j < d; ++j) rows[r * d + j] = static_cast<float>(envelope * noise_rng.normal());

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  if (spec.shuffle)
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[order_rng.below(i)]);

  std::vector<float> shuffled(n * d);
  LabelSet labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t src = order[i];
    std::copy_n(rows.begin() + static_cast<std::ptrdiff_t>(src * d), d,
                shuffled.begin() + static_cast<std::ptrdiff_t>(i * d));
    if (row_class[src] >= 0) {
      const std::string label = "class" + std::to_string(row_class[src]);
      if (row_group[src] >= 0)
        labels.assign(i, label, "group" + std::to_string(row_group[src]));
      else
        labels.assign(i, label);
    }
  }
  return SyntheticData{EmbeddingSet(n, d, std::move(shuffled)), std::move(labels), std::move(sizes), num_noise};
}

}  // namespace aroc
