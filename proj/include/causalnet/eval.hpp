#pragma once

#include "causalnet/data_model.hpp"
#include "causalnet/flow.hpp"
#include "causalnet/metrics.hpp"
#include "causalnet/model_config.hpp"
#include "causalnet/train.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace causalnet {

inline constexpr const char* kCompositeName = "Composite";

/// "<dataset>/<subject>": subject ids are only unique within a dataset.
std::string subject_key(const MESample& s);

struct Fold {
  std::string subject;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// One fold per subject, in sorted subject order. Throws std::invalid_argument
/// for fewer than two subjects.
std::vector<Fold> loso_split(const std::vector<MESample>& samples);

struct Prediction {
  std::size_t sample = 0;
  int truth = 0;
  int predicted = 0;
  DatasetId dataset = DatasetId::SYNTH;
};

struct FoldResult {
  std::string subject;
  std::vector<Prediction> predictions;
};

struct EvaluationResult {
  std::vector<FoldResult> folds;

  ConfusionMatrix pooled(int n_classes, std::optional<DatasetId> only = std::nullopt) const;
  /// Metrics per source dataset present, plus kCompositeName over everything.
  std::map<std::string, Metrics> metrics(int n_classes) const;
};

class FoldError : public std::runtime_error {
 public:
  FoldError(const std::string& fold, const std::string& what)
      : std::runtime_error("fold " + fold + ": " + what), fold_(fold) {}
  const std::string& fold() const { return fold_; }

 private:
  std::string fold_;
};

struct EvalOptions {
  bool oracle = false;  // predict the true label (harness sanity check)
  std::function<void(const Fold&, const TrainResult&)> on_fold_trained;
  std::function<void(const std::string&)> log;
};

/// Builds model inputs for every sample, optionally with per-sample key frames.
std::vector<SampleInputs> build_inputs(const std::vector<MESample>& samples, const ExperimentConfig& cfg,
                                       const std::vector<KeyFrames>* keys = nullptr);

/// LOSO over all subjects: per fold, train on `train_inputs` of the other
/// subjects and predict each of `test_sets` for the held-out subject.
/// Returns one EvaluationResult per test set. Fold f trains with seed
/// mix_seed(seed, f).
std::vector<EvaluationResult> evaluate_loso(const std::vector<MESample>& samples,
                                            const std::vector<SampleInputs>& train_inputs,
                                            const std::vector<std::vector<SampleInputs>>& test_sets,
                                            const ExperimentConfig& cfg, std::uint64_t seed,
                                            const EvalOptions& opts = {});

/// Composite-database evaluation with clean key frames.
EvaluationResult evaluate_cde(const std::vector<MESample>& samples, const ExperimentConfig& cfg, std::uint64_t seed,
                              const EvalOptions& opts = {});

using RunMetrics = std::map<std::string, Metrics>;

/// Runs `run(base_seed + r)` for r in [0, n_runs) and summarizes per key.
std::map<std::string, MetricSummary> repeat_runs(int n_runs, std::uint64_t base_seed,
                                                 const std::function<RunMetrics(std::uint64_t)>& run);

}  // namespace causalnet
