#include "causalnet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace causalnet {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
  // splitmix64 finalizer folded over the inputs
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(a);
  h = mix(h ^ b);
  h = mix(h ^ c);
  h = mix(h ^ d);
  return h;
}

double expression_profile(const KeyFrames& keys, double t) {
  if (t <= keys.onset || t >= keys.offset) return 0.0;
  if (t <= keys.apex) {
    const double span = keys.apex - keys.onset;
    return span > 0 ? 0.5 * (1 - std::cos(std::numbers::pi * (t - keys.onset) / span)) : 1.0;
  }
  const double span = keys.offset - keys.apex;
  return span > 0 ? 0.5 * (1 + std::cos(std::numbers::pi * (t - keys.apex) / span)) : 1.0;
}

std::vector<MotionBlob> class_motion(EmotionClass c) {
  constexpr double s = 0.6, t = 0.8;
  switch (c) {
    case EmotionClass::negative:  // brows lowered and drawn together
      return {{0.40, 0.32, t, t}, {0.60, 0.32, -t, t}};
    case EmotionClass::positive:  // lip corners pulled up and out
      return {{0.32, 0.72, -s, -t}, {0.68, 0.72, s, -t}};
    case EmotionClass::surprise:  // outer brows raised
      return {{0.27, 0.24, 0.0, -1.0}, {0.73, 0.24, 0.0, -1.0}};
  }
  return {};
}

namespace {

struct Texture {
  struct Wave {
    double amp, fx, fy, phase;
  };
  std::vector<Wave> waves;
  double base = 128;

  double operator()(double x, double y) const {
    double v = base;
    for (const auto& w : waves) v += w.amp * std::sin(w.fx * x + w.fy * y + w.phase);
    return v;
  }
};

Texture subject_texture(std::uint64_t seed, int side) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> amp(7.0, 16.0), freq(0.25, 0.9), angle(0, 2 * std::numbers::pi),
      base(110.0, 145.0);
  Texture tex;
  tex.base = base(rng);
  const double scale = 56.0 / side;
  for (int k = 0; k < 10; ++k) {
    const double f = freq(rng) * scale, a = angle(rng);
    tex.waves.push_back({amp(rng), f * std::cos(a), f * std::sin(a), angle(rng)});
  }
  return tex;
}

}  // namespace

std::vector<MESample> synth_dataset(const SynthOptions& opts) {
  if (opts.n_subjects < 2) throw std::invalid_argument("LOSO requires >= 2 subjects");
  if (opts.samples_per_subject < 1) throw std::invalid_argument("samples_per_subject must be >= 1");
  if (opts.length < 16) throw std::invalid_argument("synthetic clips need >= 16 frames");
  if (opts.side < 28) throw std::invalid_argument("synthetic frames must be at least 28x28");

  static constexpr const char* kRawEmotion[] = {"disgust", "happiness", "surprise"};
  const int side = opts.side;
  const int length = opts.length;
  std::vector<MESample> out;
  out.reserve(static_cast<std::size_t>(opts.n_subjects) * opts.samples_per_subject);

  for (int s = 0; s < opts.n_subjects; ++s) {
    const Texture tex = subject_texture(mix_seed(opts.seed, 0x5b1ec7, s), side);
    Eigen::MatrixXd neutral(side, side);
    for (int y = 0; y < side; ++y)
      for (int x = 0; x < side; ++x) neutral(y, x) = tex(x, y);

    for (int k = 0; k < opts.samples_per_subject; ++k) {
      std::mt19937_64 rng(mix_seed(opts.seed, 0xc11b, s, k));
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      std::normal_distribution<double> noise(0.0, opts.frame_noise);

      MESample sample;
      sample.dataset_id = DatasetId::SYNTH;
      sample.frame_rate = opts.frame_rate;
      char buf[32];
      std::snprintf(buf, sizeof buf, "s%02d", s + 1);
      sample.subject_id = buf;
      std::snprintf(buf, sizeof buf, "clip_%03d", k);
      sample.clip_id = buf;
      sample.label = static_cast<EmotionClass>(k % kNumClasses);
      sample.raw_emotion = kRawEmotion[k % kNumClasses];

      auto frac = [&](double lo, double hi) { return static_cast<int>(std::lround((lo + (hi - lo) * unit(rng)) * length)); };
      KeyFrames& kf = sample.keyframes;
      kf.onset = frac(0.31, 0.41);
      kf.apex = kf.onset + std::max(2, frac(0.11, 0.17));
      kf.offset = std::min(length - 1, kf.apex + std::max(2, frac(0.11, 0.17)));

      const double amplitude = opts.min_amplitude + (opts.max_amplitude - opts.min_amplitude) * unit(rng);
      const double brightness = (unit(rng) - 0.5) * 10.0;
      const double sigma = 0.07 * side;
      auto blobs = class_motion(sample.label);
      for (auto& b : blobs) {
        b.cx = (b.cx + (unit(rng) - 0.5) * 0.04) * side;
        b.cy = (b.cy + (unit(rng) - 0.5) * 0.04) * side;
      }

      // Unit-intensity displacement field of this clip.
      Eigen::MatrixXd du = Eigen::MatrixXd::Zero(side, side), dv = Eigen::MatrixXd::Zero(side, side);
      for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x)
          for (const auto& b : blobs) {
            const double r2 = (x - b.cx) * (x - b.cx) + (y - b.cy) * (y - b.cy);
            const double g = amplitude * std::exp(-0.5 * r2 / (sigma * sigma));
            du(y, x) += g * b.dx;
            dv(y, x) += g * b.dy;
          }

      sample.frames.reserve(length);
      for (int t = 0; t < length; ++t) {
        const double a = expression_profile(kf, t);
        Frame f(side, side);
        for (int y = 0; y < side; ++y)
          for (int x = 0; x < side; ++x) {
            const double ux = a * du(y, x), vy = a * dv(y, x);
            double value = (std::abs(ux) + std::abs(vy) > 1e-6) ? tex(x - ux, y - vy) : neutral(y, x);
            value += brightness + noise(rng);
            f(y, x) = static_cast<std::uint8_t>(std::clamp(std::lround(value), 0L, 255L));
          }
        sample.frames.push_back(std::move(f));
      }
      out.push_back(std::move(sample));
    }
  }
  return out;
}

}  // namespace causalnet
