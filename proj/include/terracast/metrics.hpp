#pragma once

#include <cstdint>
#include <iomanip>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "terracast/intensity.hpp"

namespace terracast {

struct MetricsReport {
  std::size_t n_classes = 0;
  std::vector<std::vector<std::int64_t>> confusion;  // [true][pred]
  std::vector<double> precision, recall;
  std::vector<bool> precision_undefined, recall_undefined;  // 0/0 cases, reported as 0
  double macro_precision = 0;  // mean over classes >= 1
  double macro_recall = 0;
  double accuracy = 0;
  std::size_t total = 0;
  std::string dataset;
  std::string model;
  std::uint64_t seed = 0;
  std::string config_hash;

  std::int64_t support(std::size_t c) const {
    std::int64_t s = 0;
    for (auto v : confusion[c]) s += v;
    return s;
  }
};

inline MetricsReport compute_metrics(std::span<const int> y_true, std::span<const int> y_pred, std::size_t n_classes) {
  if (y_true.size() != y_pred.size()) throw std::invalid_argument("compute_metrics: length mismatch");
  if (n_classes < 2) throw std::invalid_argument("compute_metrics: need at least two classes");
  MetricsReport r;
  r.n_classes = n_classes;
  r.total = y_true.size();
  r.confusion.assign(n_classes, std::vector<std::int64_t>(n_classes, 0));
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] < 0 || y_pred[i] < 0 || static_cast<std::size_t>(y_true[i]) >= n_classes ||
        static_cast<std::size_t>(y_pred[i]) >= n_classes)
      throw std::invalid_argument("compute_metrics: label out of range");
    ++r.confusion[static_cast<std::size_t>(y_true[i])][static_cast<std::size_t>(y_pred[i])];
  }
  std::int64_t diag = 0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    std::int64_t tp = r.confusion[c][c], fp = 0, fn = 0;
    for (std::size_t o = 0; o < n_classes; ++o)
      if (o != c) {
        fp += r.confusion[o][c];
        fn += r.confusion[c][o];
      }
    diag += tp;
    r.precision_undefined.push_back(tp + fp == 0);
    r.recall_undefined.push_back(tp + fn == 0);
    r.precision.push_back(tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp));
    r.recall.push_back(tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn));
  }
  r.accuracy = r.total ? static_cast<double>(diag) / static_cast<double>(r.total) : 0.0;
  for (std::size_t c = 1; c < n_classes; ++c) {
    r.macro_precision += r.precision[c];
    r.macro_recall += r.recall[c];
  }
  r.macro_precision /= static_cast<double>(n_classes - 1);
  r.macro_recall /= static_cast<double>(n_classes - 1);
  return r;
}

inline MetricsReport compute_metrics(std::span<const int> y_true, std::span<const int> y_pred,
                                     const IntensityScheme& scheme) {
  return compute_metrics(y_true, y_pred, static_cast<std::size_t>(scheme.class_count()));
}

inline nlohmann::ordered_json to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["dataset"] = r.dataset;
  j["model"] = r.model;
  j["seed"] = r.seed;
  j["config_hash"] = r.config_hash;
  j["n"] = r.total;
  j["accuracy"] = r.accuracy;
  j["macro_precision_nonzero"] = r.macro_precision;
  j["macro_recall_nonzero"] = r.macro_recall;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  std::vector<std::size_t> undefined;
  for (std::size_t c = 0; c < r.n_classes; ++c)
    if (r.precision_undefined[c] || r.recall_undefined[c]) undefined.push_back(c);
  j["undefined_classes"] = undefined;
  j["confusion"] = r.confusion;
  return j;
}

// Fixed-precision text, so identical metrics render to identical bytes.
inline std::string pct(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(1) << 100.0 * v << "%";
  return os.str();
}
inline std::string fixed2(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << v;
  return os.str();
}

// Accuracy / precision / recall rows with one column per report.
inline std::string metrics_table(const std::string& title, const std::vector<std::string>& columns,
                                 const std::vector<MetricsReport>& reports) {
  std::ostringstream os;
  os << title << "\n";
  os << std::left << std::setw(12) << "";
  for (const auto& c : columns) os << std::setw(12) << c;
  os << "\n" << std::setw(12) << "Accuracy";
  for (const auto& r : reports) os << std::setw(12) << pct(r.accuracy);
  os << "\n" << std::setw(12) << "Precision";
  for (const auto& r : reports) os << std::setw(12) << fixed2(r.macro_precision);
  os << "\n" << std::setw(12) << "Recall";
  for (const auto& r : reports) os << std::setw(12) << fixed2(r.macro_recall);
  os << "\n";
  return os.str();
}

}  // namespace terracast
