#pragma once

#include "causalnet/data_model.hpp"

#include <cstdint>
#include <vector>

namespace causalnet {

/// Synthetic micro-expression clips. Each class moves a pair of Gaussian
/// blobs in a class-specific face region: the blobs displace along a class
/// direction while the expression rises (onset->apex) and return along the
/// opposite direction while it decays (apex->offset). The displacement is
/// exactly zero outside [onset, offset].
struct SynthOptions {
  int n_subjects = 5;
  int samples_per_subject = 12;
  std::uint64_t seed = 7;
  int length = 128;
  int side = 56;
  int frame_rate = 200;
  double min_amplitude = 1.6;  // px at peak
  double max_amplitude = 2.6;
  double frame_noise = 0.5;    // gray levels
};

/// Smooth 0 -> 1 -> 0 expression intensity over [onset, apex, offset].
double expression_profile(const KeyFrames& keys, double t);

/// Throws std::invalid_argument when n_subjects < 2.
std::vector<MESample> synth_dataset(const SynthOptions& opts);

inline std::vector<MESample> synth_dataset(int n_subjects, int samples_per_subject, std::uint64_t seed) {
  SynthOptions o;
  o.n_subjects = n_subjects;
  o.samples_per_subject = samples_per_subject;
  o.seed = seed;
  return synth_dataset(o);
}

/// Gaussian motion region of one class, in normalized image coordinates.
struct MotionBlob {
  double cx, cy;  // centre, [0, 1]
  double dx, dy;  // unit contraction direction (image coordinates, y down)
};

std::vector<MotionBlob> class_motion(EmotionClass c);

/// Deterministic 64-bit mix of several integers; used to key private RNG streams.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0, std::uint64_t d = 0);

}  // namespace causalnet
