#pragma once

#include "causalnet/data_model.hpp"
#include "causalnet/eval.hpp"
#include "causalnet/metrics.hpp"
#include "causalnet/model_config.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace causalnet {

inline constexpr double kReferenceFrameRate = 200.0;

/// Gaussian key-frame error, specified in frames at the reference rate and
/// scaled by frame_rate / reference_rate for each clip.
struct NoiseSpec {
  double std_frames = 0;
  double reference_rate = kReferenceFrameRate;
  std::uint64_t seed = 0;

  double effective_std(int frame_rate) const { return std_frames * frame_rate / reference_rate; }
};

/// Adds rounded (half away from zero) offsets, clamps each index to
/// [0, length - 1], then sorts so onset <= apex <= offset.
KeyFrames perturb_keyframes(const KeyFrames& kf, const std::array<double, 3>& offsets, int length);

/// Independent normal perturbation of onset, apex and offset. The draw is a
/// pure function of (spec.seed, stream, effective STD).
KeyFrames inject_noise(const KeyFrames& kf, const NoiseSpec& spec, int length, int frame_rate, std::uint64_t stream);

/// Automatic-spotting stand-in: a noisy apex with onset/offset placed
/// `half_window` frames either side, clamped to the clip.
KeyFrames simulate_spotting(const KeyFrames& kf, double apex_std, int length, std::uint64_t seed,
                            std::uint64_t stream, int half_window = 25);

enum class NoiseScope { train_and_test, test_only };
std::string_view to_string(NoiseScope s);
NoiseScope parse_noise_scope(std::string_view name);

struct SweepOptions {
  std::vector<double> levels{0, 10, 20, 30};
  int n_runs = 1;
  std::uint64_t base_seed = 0;
  NoiseScope scope = NoiseScope::train_and_test;
  bool spotting = false;  // keys from simulate_spotting around a noisy apex
  bool oracle = false;
  std::function<void(const std::string&)> log;
};

struct LevelResult {
  double level = 0;
  std::map<std::string, MetricSummary> datasets;  // includes kCompositeName
};

struct RobustnessReport {
  std::vector<LevelResult> levels;  // ascending
  ExperimentConfig config;
  SweepOptions options;
};

/// Per run r (seed = base_seed + r) and level, perturbs every clip's key
/// frames with its own stream keyed by (level, run, sample), rebuilds the
/// inputs and runs LOSO. Level 0 reproduces evaluate_cde(seed).
RobustnessReport run_sweep(const std::vector<MESample>& samples, const ExperimentConfig& cfg,
                           const SweepOptions& opts);

/// Composite metrics per input mode at one noise level.
std::map<InputMode, MetricSummary> degradation_comparison(const std::vector<MESample>& samples,
                                                          const ExperimentConfig& cfg,
                                                          const std::vector<InputMode>& modes, double level,
                                                          const SweepOptions& opts);

}  // namespace causalnet
