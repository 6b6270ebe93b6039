#pragma once

#include "causalnet/data_model.hpp"
#include "causalnet/image.hpp"

#include <Eigen/Core>

#include <memory>
#include <string_view>

namespace causalnet {

/// Side of the square model input.
inline constexpr int kInputSide = 28;
inline constexpr int kInputPixels = kInputSide * kInputSide;

/// 28x28x3 flow image stored pixel-major: row y*28+x, columns (u, v, strain),
/// each channel min-max normalized to [0, 1].
struct FlowImage {
  Eigen::MatrixXd data = Eigen::MatrixXd::Zero(kInputPixels, 3);
};

/// 28x28 (cos, sin) direction encoding, pixel-major like FlowImage. Pixels whose
/// resampled flow magnitude is below the gate threshold are exactly (0, 0).
struct DirectionMap {
  Eigen::MatrixXd data = Eigen::MatrixXd::Zero(kInputPixels, 2);
  Eigen::Array<bool, Eigen::Dynamic, 1> gate = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(kInputPixels, false);
};

/// Dense flow estimator warping frame a toward frame b.
class FlowEstimator {
 public:
  virtual ~FlowEstimator() = default;
  virtual FlowField estimate(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) const = 0;
};

/// Coarse-to-fine dense Lucas-Kanade with iterative warping and a Tikhonov
/// term on the structure tensor, so textureless regions resolve to zero flow.
class PyramidalLucasKanade final : public FlowEstimator {
 public:
  struct Options {
    int levels = 3;
    int iterations = 6;
    int window_radius = 5;
    double window_sigma = 2.5;
    double presmooth_sigma = 1.0;
    double regularization = 10.0;
    int min_level_side = 12;
  };

  PyramidalLucasKanade() = default;
  explicit PyramidalLucasKanade(Options opts) : opts_(opts) {}

  FlowField estimate(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) const override;
  const Options& options() const { return opts_; }

 private:
  Options opts_;
};

/// Throws std::invalid_argument on shape mismatch.
FlowField compute_flow(const Frame& a, const Frame& b, const FlowEstimator& estimator);
FlowField compute_flow(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const FlowEstimator& estimator);

/// sqrt(exx^2 + eyy^2 + 0.5 (exy + eyx)^2) with central differences inside and
/// one-sided differences on the border.
Eigen::MatrixXd compute_strain(const FlowField& flow);

/// Throws std::invalid_argument on non-finite input.
FlowImage build_flow_image(const FlowField& flow);

DirectionMap compute_direction_map(const FlowField& flow, double tau = 0.1);

/// Which key-frame pair feeds the two model branches.
enum class InputMode {
  full,        // onset->apex and apex->offset
  onset_apex,  // onset->apex in both branches
  apex_only,   // first frame->apex in both branches
};

std::string_view to_string(InputMode mode);
InputMode parse_input_mode(std::string_view name);

struct SampleInputs {
  FlowImage flow_oa;
  FlowImage flow_ao;
  DirectionMap dir_oa;
  DirectionMap dir_ao;
};

struct InputOptions {
  double tau = 0.1;
  InputMode mode = InputMode::full;
};

/// Pure function of (frames, keyframes); precomputed flows pass through.
SampleInputs build_sample_inputs(const MESample& sample, const FlowEstimator& estimator,
                                 const InputOptions& opts = {});

/// Same as above with the key frames overridden.
SampleInputs build_sample_inputs(const MESample& sample, const KeyFrames& keys, const FlowEstimator& estimator,
                                 const InputOptions& opts = {});

/// Hue in degrees per pixel (up = 0, clockwise in image coordinates); NaN where gated off.
Eigen::ArrayXd direction_hue(const DirectionMap& map);

/// HSV rendering: hue from angle, value 1 on gated pixels and 0 elsewhere.
RgbImage render_direction_hue(const DirectionMap& map, int scale = 8);
/// Grayscale rendering of one flow-image channel.
Frame render_flow_channel(const FlowImage& image, int channel, int scale = 8);

}  // namespace causalnet
