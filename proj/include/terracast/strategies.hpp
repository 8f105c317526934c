#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "terracast/learn/train.hpp"
#include "terracast/metrics.hpp"
#include "terracast/pipeline.hpp"
#include "terracast/tiler.hpp"

namespace terracast {

struct CurriculumPlan {
  std::vector<TileDataset> stages;  // coarse to fine, e.g. SAT1(10), SAT1(8), SAT1(4)
  int patience = 5;
  int max_epochs_total = 300;
  TemporalNorm norm{};

  void validate() const {
    if (stages.empty()) throw std::invalid_argument("curriculum: no stages");
    if (patience < 1) throw std::invalid_argument("curriculum: patience must be >= 1");
    if (patience >= max_epochs_total)
      throw std::invalid_argument("curriculum: patience (" + std::to_string(patience) +
                                  ") must be below max_epochs_total (" + std::to_string(max_epochs_total) + ")");
    for (std::size_t i = 1; i < stages.size(); ++i) {
      if (!(stages[i].k < stages[i - 1].k)) throw std::invalid_argument("curriculum: stage tile sizes must decrease");
      if (!(stages[i].scheme == stages[0].scheme) || stages[i].res != stages[0].res)
        throw std::invalid_argument("curriculum: stages must share scheme and resolution");
    }
  }
};

// Tracks validation accuracy within a stage; signals when it stopped improving for `patience` epochs.
class CurriculumScheduler {
 public:
  explicit CurriculumScheduler(int patience) : patience_(patience) {}

  // Returns true when the next stage should be added after this epoch.
  bool observe(double val_accuracy) {
    if (!best_ || val_accuracy > *best_) {
      best_ = val_accuracy;
      stale_ = 0;
      return false;
    }
    return ++stale_ >= patience_;
  }
  void reset() {
    best_.reset();
    stale_ = 0;
  }

 private:
  int patience_;
  std::optional<double> best_;
  int stale_ = 0;
};

struct StageTransition {
  std::size_t stage = 0;  // index of the stage that was added
  int epoch = 0;          // global epoch after which it was added
  std::size_t pool_size = 0;
};

template <class T = float>
struct CurriculumResult {
  learn::Network<T> network;
  std::vector<StageTransition> transitions;
  std::vector<learn::EpochStats> trace;
};

// Validation accuracy is measured on the split of the current union.
template <class T = float>
CurriculumResult<T> curriculum_train(const learn::NetworkSpec& spec, const CurriculumPlan& plan,
                                     const learn::TrainConfig& cfg) {
  plan.validate();
  learn::Trainer<T> tr(spec, cfg);
  std::vector<learn::Example> pool = to_examples(plan.stages[0], plan.norm);
  tr.set_data(pool);
  CurriculumScheduler sched(plan.patience);
  std::size_t stage = 0;
  std::vector<StageTransition> log;
  for (int epoch = 1; epoch <= plan.max_epochs_total; ++epoch) {
    const auto s = tr.run_epoch();
    if (stage + 1 < plan.stages.size() && sched.observe(s.val_accuracy)) {
      ++stage;
      auto more = to_examples(plan.stages[stage], plan.norm);
      pool.insert(pool.end(), more.begin(), more.end());
      tr.set_data(pool);
      sched.reset();
      log.push_back({stage, epoch, pool.size()});
    }
  }
  return {tr.network(), std::move(log), tr.trace()};
}

struct FclReport {
  std::vector<MetricsReport> per_stage;
  double accuracy = 0, precision = 0, recall = 0;  // unweighted means over stages
};

inline FclReport fcl_average(std::vector<MetricsReport> per_stage) {
  FclReport f;
  f.per_stage = std::move(per_stage);
  if (f.per_stage.empty()) return f;
  for (const auto& r : f.per_stage) {
    f.accuracy += r.accuracy;
    f.precision += r.macro_precision;
    f.recall += r.macro_recall;
  }
  const double n = static_cast<double>(f.per_stage.size());
  f.accuracy /= n;
  f.precision /= n;
  f.recall /= n;
  return f;
}

template <class T>
MetricsReport evaluate_dataset(const learn::Network<T>& net, const TileDataset& d, const TemporalNorm& norm = {}) {
  const auto ex = to_examples(d, norm);
  const auto pred = learn::predict(net, ex);
  const auto truth = labels_of(ex);
  auto r = compute_metrics(truth, pred, d.scheme);
  r.dataset = d.name;
  r.model = net.spec().name;
  return r;
}

template <class T>
FclReport fcl_metrics(const learn::Network<T>& net, std::span<const TileDataset> stage_testsets,
                      const TemporalNorm& norm = {}) {
  std::vector<MetricsReport> per;
  for (const auto& d : stage_testsets) per.push_back(evaluate_dataset(net, d, norm));
  return fcl_average(std::move(per));
}

// A 4-km record together with its macro parent: the pass-0 macro tile containing the record's
// centre (clamped to the last full tile when the centre lies in the uncovered AOI margin).
struct HierRecord {
  TileRecord micro;
  TileRecord parent;
};

inline std::vector<HierRecord> assign_parents(const TileDataset& micro, const RasterSource& src,
                                              std::span<const ProjectedEvent> events, double macro_k,
                                              const IntensityScheme& macro_scheme) {
  const GridPass pass0 = grid_pass_at(src.width_km(), src.height_km(), macro_k, 0.0, 0.0);
  if (pass0.tiles.empty()) throw std::invalid_argument("assign_parents: macro tile larger than AOI");
  const int nx = static_cast<int>(std::floor((src.width_km() + kTileEps) / macro_k));
  const int ny = static_cast<int>(pass0.tiles.size()) / nx;

  std::map<int, std::vector<ProjectedEvent>> by_period;
  for (const auto& e : events) by_period[e.period.index()].push_back(e);
  std::map<int, std::shared_ptr<const Raster>> crops;
  std::map<std::pair<int, int>, TileRecord> cache;
  std::vector<HierRecord> out;
  out.reserve(micro.records.size());
  for (const auto& r : micro.records) {
    const PlanarPoint c = r.region.center();
    const int ix = std::clamp(static_cast<int>(std::floor(c.x / macro_k)), 0, nx - 1);
    const int iy = std::clamp(static_cast<int>(std::floor(c.y / macro_k)), 0, ny - 1);
    const int cell = iy * nx + ix;
    auto key = std::make_pair(cell, r.period.index());
    auto it = cache.find(key);
    if (it == cache.end()) {
      TileRecord p;
      p.region = pass0.tiles[static_cast<std::size_t>(cell)];
      p.pass = 0;
      p.tile = static_cast<std::size_t>(cell);
      auto& img = crops[cell];
      if (!img) img = std::make_shared<const Raster>(src.crop(p.region, micro.res));
      p.raster = img;
      p.period = r.period;
      const auto& month = by_period[r.period.index()];
      p.count = count_in_region(std::span<const ProjectedEvent>(month), p.region, r.period);
      p.label = macro_scheme.bucket(p.count);
      it = cache.emplace(key, std::move(p)).first;
    }
    out.push_back({r, it->second});
  }
  return out;
}

template <class T = float>
struct HierarchyModel {
  learn::Network<T> macro;
  learn::Network<T> micro;
  double macro_k = 10.0;
  TemporalNorm norm{};
  std::size_t micro_subset = 0;  // records used to train micro
  std::size_t micro_pool = 0;    // size of the full 4-km training set
  double subset_fraction() const { return micro_pool ? double(micro_subset) / double(micro_pool) : 0.0; }
};

// Ground-truth gate used at training time.
inline std::vector<TileRecord> gated_subset(std::span<const HierRecord> rows) {
  std::vector<TileRecord> out;
  for (const auto& h : rows)
    if (h.parent.label.class_index > 0) out.push_back(h.micro);
  return out;
}

template <class T = float>
HierarchyModel<T> hier_train(const learn::NetworkSpec& macro_spec, const learn::NetworkSpec& micro_spec,
                             const TileDataset& sat10, std::span<const HierRecord> sat4,
                             const learn::TrainConfig& macro_cfg, const learn::TrainConfig& micro_cfg,
                             const TemporalNorm& norm = {}) {
  TileDataset subset;
  subset.name = "gated";
  subset.records = gated_subset(sat4);
  if (subset.records.empty())
    throw std::runtime_error("hier_train: no 4-km record has a non-zero parent tile; micro training set is empty (" +
                             std::to_string(sat4.size()) + " records examined)");
  HierarchyModel<T> m{learn::train<T>(macro_spec, to_examples(sat10, norm), macro_cfg).network,
                      learn::train<T>(micro_spec, to_examples(subset, norm), micro_cfg).network,
                      sat10.k, norm, subset.records.size(), sat4.size()};
  return m;
}

template <class T>
int predict_one(const learn::Network<T>& net, const learn::Example& ex) {
  return learn::predict(net, std::span(&ex, 1))[0];
}

template <class T>
IntensityLabel hier_predict(const HierarchyModel<T>& m, const HierRecord& r) {
  if (predict_one(m.macro, to_example(r.parent, m.norm)) == 0) return {0};
  return {predict_one(m.micro, to_example(r.micro, m.norm))};
}

// Batch form: one pass over parents (deduplicated) and one over the gated micro records.
template <class T>
std::vector<int> hier_predict_all(const HierarchyModel<T>& m, std::span<const HierRecord> rows) {
  std::map<std::pair<std::size_t, int>, std::size_t> slot;
  std::vector<learn::Example> parents;
  std::vector<std::size_t> parent_of(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto key = std::make_pair(rows[i].parent.tile, rows[i].parent.period.index());
    auto [it, fresh] = slot.try_emplace(key, parents.size());
    if (fresh) parents.push_back(to_example(rows[i].parent, m.norm));
    parent_of[i] = it->second;
  }
  const auto macro = learn::predict(m.macro, parents);
  std::vector<learn::Example> open;
  std::vector<std::size_t> open_idx;
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (macro[parent_of[i]] != 0) {
      open.push_back(to_example(rows[i].micro, m.norm));
      open_idx.push_back(i);
    }
  const auto micro = learn::predict(m.micro, open);
  std::vector<int> out(rows.size(), 0);
  for (std::size_t j = 0; j < open_idx.size(); ++j) out[open_idx[j]] = micro[j];
  return out;
}

struct HmReport {
  MetricsReport micro_gated;  // "4x4": micro on the ground-truth-gated test subset
  MetricsReport composed;     // "HM": gate + micro over every 4-km test record
};

template <class T>
HmReport hm_metrics(const HierarchyModel<T>& m, std::span<const HierRecord> test, const IntensityScheme& scheme) {
  HmReport rep;
  std::vector<int> truth;
  for (const auto& h : test) truth.push_back(h.micro.label.class_index);
  rep.composed = compute_metrics(truth, hier_predict_all(m, test), scheme);
  rep.composed.dataset = "SAT1(4) test";
  rep.composed.model = "HM";

  TileDataset gated;
  gated.records = gated_subset(test);
  const auto ex = to_examples(gated, m.norm);
  rep.micro_gated = compute_metrics(labels_of(ex), learn::predict(m.micro, ex), scheme);
  rep.micro_gated.dataset = "SAT1(4) test, gated";
  rep.micro_gated.model = m.micro.spec().name;
  return rep;
}

}  // namespace terracast
