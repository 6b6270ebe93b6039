#include "causalnet/eval.hpp"

#include "causalnet/synth.hpp"

#include <set>

namespace causalnet {

std::string subject_key(const MESample& s) { return std::string(to_string(s.dataset_id)) + "/" + s.subject_id; }

std::vector<Fold> loso_split(const std::vector<MESample>& samples) {
  std::set<std::string> subjects;
  for (const auto& s : samples) subjects.insert(subject_key(s));
  if (subjects.size() < 2) throw std::invalid_argument("LOSO requires >= 2 subjects");
  std::vector<Fold> folds;
  for (const auto& subject : subjects) {
    Fold f;
    f.subject = subject;
    for (std::size_t i = 0; i < samples.size(); ++i)
      (subject_key(samples[i]) == subject ? f.test : f.train).push_back(i);
    folds.push_back(std::move(f));
  }
  return folds;
}

ConfusionMatrix EvaluationResult::pooled(int n_classes, std::optional<DatasetId> only) const {
  ConfusionMatrix cm(n_classes);
  for (const auto& f : folds)
    for (const auto& p : f.predictions)
      if (!only || p.dataset == *only) cm.add(p.truth, p.predicted);
  return cm;
}

std::map<std::string, Metrics> EvaluationResult::metrics(int n_classes) const {
  std::set<DatasetId> present;
  for (const auto& f : folds)
    for (const auto& p : f.predictions) present.insert(p.dataset);
  std::map<std::string, Metrics> out;
  for (const auto id : present) out[std::string(to_string(id))] = compute_metrics(pooled(n_classes, id));
  out[kCompositeName] = compute_metrics(pooled(n_classes));
  return out;
}

std::vector<SampleInputs> build_inputs(const std::vector<MESample>& samples, const ExperimentConfig& cfg,
                                       const std::vector<KeyFrames>* keys) {
  const PyramidalLucasKanade estimator(cfg.flow);
  std::vector<SampleInputs> out;
  out.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i)
    out.push_back(build_sample_inputs(samples[i], keys ? (*keys)[i] : samples[i].keyframes, estimator, cfg.input));
  return out;
}

std::vector<EvaluationResult> evaluate_loso(const std::vector<MESample>& samples,
                                            const std::vector<SampleInputs>& train_inputs,
                                            const std::vector<std::vector<SampleInputs>>& test_sets,
                                            const ExperimentConfig& cfg, std::uint64_t seed,
                                            const EvalOptions& opts) {
  if (train_inputs.size() != samples.size()) throw std::invalid_argument("evaluate_loso: inputs/sample mismatch");
  for (const auto& t : test_sets)
    if (t.size() != samples.size()) throw std::invalid_argument("evaluate_loso: test inputs/sample mismatch");

  const auto folds = loso_split(samples);
  std::vector<EvaluationResult> results(test_sets.size());
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const Fold& fold = folds[f];
    std::optional<TrainResult> trained;
    if (!opts.oracle) {
      std::vector<SampleInputs> xs;
      std::vector<int> ys;
      for (const auto i : fold.train) {
        xs.push_back(train_inputs[i]);
        ys.push_back(static_cast<int>(samples[i].label));
      }
      try {
        trained = train(xs, ys, cfg, mix_seed(seed, f));
      } catch (const std::exception& e) {
        throw FoldError(fold.subject, e.what());
      }
      if (opts.on_fold_trained) opts.on_fold_trained(fold, *trained);
    }
    for (std::size_t t = 0; t < test_sets.size(); ++t) {
      FoldResult fr{fold.subject, {}};
      for (const auto i : fold.test) {
        const int truth = static_cast<int>(samples[i].label);
        const int predicted = opts.oracle ? truth : classify(trained->model.forward(test_sets[t][i]));
        fr.predictions.push_back({i, truth, predicted, samples[i].dataset_id});
      }
      results[t].folds.push_back(std::move(fr));
    }
    if (opts.log) opts.log("fold " + std::to_string(f + 1) + "/" + std::to_string(folds.size()) + " (" + fold.subject + ") done");
  }
  return results;
}

EvaluationResult evaluate_cde(const std::vector<MESample>& samples, const ExperimentConfig& cfg, std::uint64_t seed,
                              const EvalOptions& opts) {
  for (const auto& s : samples)
    if (static_cast<int>(s.label) >= cfg.model.n_classes)
      throw std::invalid_argument("evaluate_cde: sample " + s.clip_id + " has a label outside the class range");
  const auto inputs = build_inputs(samples, cfg);
  return evaluate_loso(samples, inputs, {inputs}, cfg, seed, opts).front();
}

std::map<std::string, MetricSummary> repeat_runs(int n_runs, std::uint64_t base_seed,
                                                 const std::function<RunMetrics(std::uint64_t)>& run) {
  if (n_runs < 1) throw std::invalid_argument("repeat_runs: n_runs must be >= 1");
  std::map<std::string, std::vector<Metrics>> collected;
  for (int r = 0; r < n_runs; ++r)
    for (const auto& [name, m] : run(base_seed + static_cast<std::uint64_t>(r))) collected[name].push_back(m);
  std::map<std::string, MetricSummary> out;
  for (const auto& [name, runs] : collected) out[name] = summarize(runs);
  return out;
}

}  // namespace causalnet
