#include "causalnet/robustness.hpp"

#include "causalnet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace causalnet {

KeyFrames perturb_keyframes(const KeyFrames& kf, const std::array<double, 3>& offsets, int length) {
  if (length < 1) throw std::invalid_argument("perturb_keyframes: empty sequence");
  std::array<int, 3> idx{kf.onset, kf.apex, kf.offset};
  for (int k = 0; k < 3; ++k) {
    const long moved = idx[k] + std::lround(offsets[k]);
    idx[k] = static_cast<int>(std::clamp<long>(moved, 0, length - 1));
  }
  std::sort(idx.begin(), idx.end());
  return {idx[0], idx[1], idx[2]};
}

KeyFrames inject_noise(const KeyFrames& kf, const NoiseSpec& spec, int length, int frame_rate, std::uint64_t stream) {
  if (spec.std_frames < 0) throw std::invalid_argument("noise STD must be >= 0");
  const double sigma = spec.effective_std(frame_rate);
  if (sigma == 0) return perturb_keyframes(kf, {0, 0, 0}, length);
  std::mt19937_64 rng(mix_seed(spec.seed, stream));
  std::normal_distribution<double> normal(0.0, sigma);
  std::array<double, 3> offsets{};
  for (auto& o : offsets) o = normal(rng);
  return perturb_keyframes(kf, offsets, length);
}

KeyFrames simulate_spotting(const KeyFrames& kf, double apex_std, int length, std::uint64_t seed,
                            std::uint64_t stream, int half_window) {
  std::mt19937_64 rng(mix_seed(seed, stream, 0x5907));
  double offset = 0;
  if (apex_std > 0) offset = std::normal_distribution<double>(0.0, apex_std)(rng);
  const int apex = static_cast<int>(std::clamp<long>(std::lround(kf.apex + offset), 0, length - 1));
  return {std::max(0, apex - half_window), apex, std::min(length - 1, apex + half_window)};
}

std::string_view to_string(NoiseScope s) { return s == NoiseScope::train_and_test ? "train_and_test" : "test_only"; }

NoiseScope parse_noise_scope(std::string_view name) {
  if (name == "train_and_test") return NoiseScope::train_and_test;
  if (name == "test_only") return NoiseScope::test_only;
  throw std::invalid_argument("unknown noise scope '" + std::string(name) + "'");
}

namespace {

std::vector<KeyFrames> noisy_keys(const std::vector<MESample>& samples, double level, std::uint64_t run_seed,
                                  bool spotting) {
  std::vector<KeyFrames> keys;
  keys.reserve(samples.size());
  const NoiseSpec spec{level, kReferenceFrameRate, run_seed};
  const auto level_bits = static_cast<std::uint64_t>(std::llround(level * 1000));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    const auto stream = mix_seed(level_bits, i, 0x4e015e);
    keys.push_back(spotting ? simulate_spotting(s.keyframes, spec.effective_std(s.frame_rate), s.length(), run_seed, stream)
                            : inject_noise(s.keyframes, spec, s.length(), s.frame_rate, stream));
  }
  return keys;
}

}  // namespace

RobustnessReport run_sweep(const std::vector<MESample>& samples, const ExperimentConfig& cfg,
                           const SweepOptions& opts) {
  if (opts.levels.empty()) throw std::invalid_argument("run_sweep: no noise levels");
  for (const double l : opts.levels)
    if (!(l >= 0)) throw std::invalid_argument("run_sweep: noise levels must be >= 0");
  if (opts.n_runs < 1) throw std::invalid_argument("run_sweep: n_runs must be >= 1");

  RobustnessReport report;
  report.config = cfg;
  report.options = opts;
  std::vector<double> levels = opts.levels;
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

  EvalOptions eval_opts;
  eval_opts.oracle = opts.oracle;
  eval_opts.log = opts.log;
  const int n_classes = cfg.model.n_classes;

  std::vector<std::map<std::string, std::vector<Metrics>>> collected(levels.size());
  for (int r = 0; r < opts.n_runs; ++r) {
    const std::uint64_t seed = opts.base_seed + static_cast<std::uint64_t>(r);
    std::vector<std::vector<SampleInputs>> noisy(levels.size());
    for (std::size_t l = 0; l < levels.size(); ++l) {
      const auto keys = noisy_keys(samples, levels[l], seed, opts.spotting);
      noisy[l] = build_inputs(samples, cfg, &keys);
    }
    std::vector<EvaluationResult> results;
    if (opts.scope == NoiseScope::test_only) {
      const auto clean = build_inputs(samples, cfg);
      try {
        results = evaluate_loso(samples, clean, noisy, cfg, seed, eval_opts);
      } catch (const std::exception& e) {
        throw std::runtime_error("run " + std::to_string(r) + ": " + e.what());
      }
    } else {
      for (std::size_t l = 0; l < levels.size(); ++l) {
        if (opts.log) opts.log("run " + std::to_string(r) + " level " + std::to_string(levels[l]));
        try {
          results.push_back(evaluate_loso(samples, noisy[l], {noisy[l]}, cfg, seed, eval_opts).front());
        } catch (const std::exception& e) {
          throw std::runtime_error("level " + std::to_string(levels[l]) + ", run " + std::to_string(r) + ": " +
                                   e.what());
        }
      }
    }
    for (std::size_t l = 0; l < levels.size(); ++l)
      for (const auto& [name, m] : results[l].metrics(n_classes)) collected[l][name].push_back(m);
  }

  for (std::size_t l = 0; l < levels.size(); ++l) {
    LevelResult lr;
    lr.level = levels[l];
    for (const auto& [name, runs] : collected[l]) lr.datasets[name] = summarize(runs);
    report.levels.push_back(std::move(lr));
  }
  return report;
}

std::map<InputMode, MetricSummary> degradation_comparison(const std::vector<MESample>& samples,
                                                          const ExperimentConfig& cfg,
                                                          const std::vector<InputMode>& modes, double level,
                                                          const SweepOptions& opts) {
  std::map<InputMode, MetricSummary> out;
  for (const auto mode : modes) {
    ExperimentConfig c = cfg;
    c.input.mode = mode;
    SweepOptions o = opts;
    o.levels = {level};
    out[mode] = run_sweep(samples, c, o).levels.front().datasets.at(kCompositeName);
  }
  return out;
}

}  // namespace causalnet
