#pragma once

#include <cstdio>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "aroc/clustering.hpp"
#include "aroc/eval.hpp"

namespace aroc {

inline nlohmann::ordered_json to_json(const PairwiseReport& r) {
  nlohmann::ordered_json j;
  j["mode"] = to_string(r.mode);
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["f_measure"] = r.f_measure;
  j["vacuous_precision"] = r.vacuous_precision;
  j["correct_pairs"] = r.correct_pairs;
  j["cluster_pairs"] = r.cluster_pairs;
  j["class_pairs"] = r.class_pairs;
  return j;
}

inline nlohmann::ordered_json to_json(const GroupedRecallReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(); };
  nlohmann::ordered_json j;
  j["within_group_recall"] = opt(r.within_group_recall);
  j["cross_group_recall"] = opt(r.cross_group_recall);
  j["within_correct"] = r.within_correct;
  j["within_pairs"] = r.within_pairs;
  j["cross_correct"] = r.cross_correct;
  j["cross_pairs"] = r.cross_pairs;
  return j;
}

/// "name  value" lines with the names padded to a common width.
inline std::string aligned(const std::vector<std::pair<std::string, std::string>>& rows) {
  std::size_t width = 0;
  for (const auto& [name, value] : rows) width = std::max(width, name.size());
  std::string out;
  for (const auto& [name, value] : rows) {
    out += name;
    out.append(width - name.size() + 2, ' ');
    out += value;
    out += '\n';
  }
  return out;
}

inline std::string to_text(const PairwiseReport& r) {
  return aligned({{"mode", to_string(r.mode)},
                  {"precision", format_double(r.precision)},
                  {"recall", format_double(r.recall)},
                  {"f_measure", format_double(r.f_measure)},
                  {"vacuous_precision", r.vacuous_precision ? "true" : "false"},
                  {"correct_pairs", std::to_string(r.correct_pairs)},
                  {"cluster_pairs", std::to_string(r.cluster_pairs)},
                  {"class_pairs", std::to_string(r.class_pairs)}});
}

inline std::string to_text(const GroupedRecallReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("absent"); };
  return aligned({{"within_group_recall", opt(r.within_group_recall)},
                  {"cross_group_recall", opt(r.cross_group_recall)},
                  {"within_correct", std::to_string(r.within_correct)},
                  {"within_pairs", std::to_string(r.within_pairs)},
                  {"cross_correct", std::to_string(r.cross_correct)},
                  {"cross_pairs", std::to_string(r.cross_pairs)}});
}

}  // namespace aroc
