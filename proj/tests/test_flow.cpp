#include "causalnet/flow.hpp"
#include "causalnet/synth.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace causalnet;
using Eigen::MatrixXd;

namespace {

FlowField uniform_flow(int side, double u, double v) {
  return {MatrixXd::Constant(side, side, u), MatrixXd::Constant(side, side, v)};
}

/// Smooth texture evaluated at continuous coordinates.
double texture(double x, double y) {
  return 128 + 40 * std::sin(0.55 * x + 0.3 * y) + 35 * std::cos(0.4 * y - 0.2 * x) + 25 * std::sin(0.9 * x) * std::cos(0.7 * y);
}

MatrixXd textured(int side, double dx, double dy) {
  MatrixXd m(side, side);
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x) m(y, x) = texture(x - dx, y - dy);
  return m;
}

double mean_dot_on_gate(const DirectionMap& a, const DirectionMap& b) {
  double sum = 0;
  int n = 0;
  for (int i = 0; i < kInputPixels; ++i)
    if (a.gate(i) && b.gate(i)) {
      sum += a.data.row(i).dot(b.data.row(i));
      ++n;
    }
  return n ? sum / n : 0.0;
}

}  // namespace

// ---- strain --------------------------------------------------------------------

TEST(Strain, ConstantFlowIsZero) {
  const auto s = compute_strain(uniform_flow(12, 1.5, -0.7));
  EXPECT_LE(s.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Strain, LinearStretchAndShear) {
  const int n = 10;
  FlowField stretch{MatrixXd::Zero(n, n), MatrixXd::Zero(n, n)};
  FlowField shear = stretch;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      stretch.u(y, x) = x;
      shear.u(y, x) = y;
    }
  const auto a = compute_strain(stretch), b = compute_strain(shear);
  for (int y = 1; y < n - 1; ++y)
    for (int x = 1; x < n - 1; ++x) {
      EXPECT_NEAR(a(y, x), 1.0, 1e-12);
      EXPECT_NEAR(b(y, x), std::sqrt(0.5), 1e-12);
    }
}

TEST(Strain, TranslationInvariant) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0, 1);
  for (int trial = 0; trial < 10; ++trial) {
    FlowField f{MatrixXd::NullaryExpr(9, 11, [&] { return n(rng); }), MatrixXd::NullaryExpr(9, 11, [&] { return n(rng); })};
    FlowField g{f.u.array() + 3.25, f.v.array() - 1.5};
    EXPECT_LE((compute_strain(f) - compute_strain(g)).cwiseAbs().maxCoeff(), 1e-6);
  }
}

// ---- flow estimation ---------------------------------------------------------------

TEST(Flow, IdenticalFramesGiveNearZeroFlow) {
  const PyramidalLucasKanade est;
  const auto a = textured(56, 0, 0);
  const auto f = compute_flow(a, a, est);
  EXPECT_LE(f.u.cwiseAbs().maxCoeff(), 0.05);
  EXPECT_LE(f.v.cwiseAbs().maxCoeff(), 0.05);
}

TEST(Flow, RecoversKnownTranslation) {
  const PyramidalLucasKanade est;
  const auto f = compute_flow(textured(56, 0, 0), textured(56, 2, 0), est);
  const double mean_u = f.u.block(8, 8, 40, 40).mean();
  const double mean_v = f.v.block(8, 8, 40, 40).mean();
  EXPECT_GE(mean_u, 1.5);
  EXPECT_LE(mean_u, 2.5);
  EXPECT_LE(std::abs(mean_v), 0.5);
}

TEST(Flow, ShapeMismatchThrows) {
  const PyramidalLucasKanade est;
  const MatrixXd a = MatrixXd::Zero(20, 20), b = MatrixXd::Zero(20, 21);
  EXPECT_THROW(compute_flow(a, b, est), std::invalid_argument);
}

// ---- flow image ---------------------------------------------------------------

TEST(FlowImage, ZeroFlowIsZero) {
  const auto img = build_flow_image(uniform_flow(28, 0, 0));
  EXPECT_EQ(img.data, MatrixXd::Zero(kInputPixels, 3));
}

TEST(FlowImage, NativeResolutionIsOnlyNormalized) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-2, 2);
  FlowField f{MatrixXd::NullaryExpr(28, 28, [&] { return u(rng); }), MatrixXd::NullaryExpr(28, 28, [&] { return u(rng); })};
  const auto img = build_flow_image(f);
  const double lo = f.u.minCoeff(), hi = f.u.maxCoeff();
  for (int y = 0; y < 28; ++y)
    for (int x = 0; x < 28; ++x) EXPECT_NEAR(img.data(y * 28 + x, 0), (f.u(y, x) - lo) / (hi - lo), 1e-12);
  EXPECT_GE(img.data.minCoeff(), 0.0);
  EXPECT_LE(img.data.maxCoeff(), 1.0);
}

TEST(FlowImage, CheckerboardAveragesToConstant) {
  FlowField f{MatrixXd::Zero(56, 56), MatrixXd::Zero(56, 56)};
  for (int y = 0; y < 56; ++y)
    for (int x = 0; x < 56; ++x) f.u(y, x) = (x + y) % 2;
  const auto img = build_flow_image(f);
  EXPECT_EQ(img.data.col(0), Eigen::VectorXd::Zero(kInputPixels));
}

TEST(FlowImage, RejectsNonFinite) {
  auto f = uniform_flow(28, 0, 0);
  f.v(3, 3) = std::nan("");
  EXPECT_THROW(build_flow_image(f), std::invalid_argument);
}

// ---- direction map --------------------------------------------------------------

TEST(Direction, UniformRightAndUp) {
  const auto right = compute_direction_map(uniform_flow(28, 1, 0), 0.1);
  const auto up = compute_direction_map(uniform_flow(56, 0, -1), 0.1);
  for (int i = 0; i < kInputPixels; ++i) {
    EXPECT_TRUE(right.gate(i));
    EXPECT_NEAR(right.data(i, 0), 1.0, 1e-12);
    EXPECT_NEAR(right.data(i, 1), 0.0, 1e-12);
    EXPECT_NEAR(up.data(i, 0), 0.0, 1e-12);
    EXPECT_NEAR(up.data(i, 1), -1.0, 1e-12);
  }
}

TEST(Direction, GateZeroesWeakFlow) {
  const auto d = compute_direction_map(uniform_flow(28, 0.01, 0), 0.1);
  EXPECT_EQ(d.data, MatrixXd::Zero(kInputPixels, 2));
  EXPECT_FALSE(d.gate.any());
}

TEST(Direction, UnitNormAndScaleInvariance) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0, 1);
  FlowField f{MatrixXd::NullaryExpr(28, 28, [&] { return n(rng); }), MatrixXd::NullaryExpr(28, 28, [&] { return n(rng); })};
  const auto a = compute_direction_map(f, 0.1);
  const FlowField scaled{f.u * 3.0, f.v * 3.0};
  const auto b = compute_direction_map(scaled, 0.1);
  for (int i = 0; i < kInputPixels; ++i) {
    if (a.gate(i)) {
      EXPECT_NEAR(a.data.row(i).squaredNorm(), 1.0, 1e-6);
      EXPECT_TRUE(b.gate(i));
      EXPECT_LE((a.data.row(i) - b.data.row(i)).cwiseAbs().maxCoeff(), 1e-12);
    } else {
      EXPECT_EQ(a.data.row(i).cwiseAbs().sum(), 0.0);
    }
  }
}

TEST(Direction, HueConventionAndRendering) {
  const auto right = compute_direction_map(uniform_flow(28, 1, 0));
  const auto hue = direction_hue(right);
  for (int i = 0; i < kInputPixels; ++i) EXPECT_NEAR(hue(i), 90.0, 1e-9);
  const auto img = render_direction_hue(right, 1);
  for (int y = 0; y < 28; ++y)
    for (int x = 0; x < 28; ++x)
      for (int c = 0; c < 3; ++c) EXPECT_EQ(img.at(y, x)[c], img.at(0, 0)[c]);
  const auto black = render_direction_hue(compute_direction_map(uniform_flow(28, 0, 0)), 2);
  for (const auto b : black.data) EXPECT_EQ(b, 0);
  EXPECT_EQ(black.rows, 56);
}

TEST(InputMode, NamesRoundTrip) {
  for (const auto m : {InputMode::full, InputMode::onset_apex, InputMode::apex_only})
    EXPECT_EQ(parse_input_mode(to_string(m)), m);
  EXPECT_EQ(to_string(InputMode::full), "onset_apex_plus_apex_offset");
  EXPECT_THROW(parse_input_mode("sideways"), std::invalid_argument);
}

// ---- sample inputs ---------------------------------------------------------------

TEST(SampleInputs, OnsetEqualsApexGivesZeroFlowImage) {
  const auto s = synth_dataset(2, 1, 5).front();
  const PyramidalLucasKanade est;
  const KeyFrames k{s.keyframes.apex, s.keyframes.apex, s.keyframes.offset};
  const auto in = build_sample_inputs(s, k, est);
  EXPECT_EQ(in.flow_oa.data, MatrixXd::Zero(kInputPixels, 3));
}

TEST(SampleInputs, PrecomputedFlowsPassThrough) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0, 1);
  MESample s;
  s.keyframes = {0, 1, 2};
  s.flows = PrecomputedFlows{{MatrixXd::NullaryExpr(28, 28, [&] { return n(rng); }), MatrixXd::NullaryExpr(28, 28, [&] { return n(rng); })},
                             {MatrixXd::NullaryExpr(28, 28, [&] { return n(rng); }), MatrixXd::NullaryExpr(28, 28, [&] { return n(rng); })}};
  const PyramidalLucasKanade est;
  const auto in = build_sample_inputs(s, est);
  EXPECT_EQ(in.flow_oa.data, build_flow_image(s.flows->onset_apex).data);
  EXPECT_EQ(in.flow_ao.data, build_flow_image(s.flows->apex_offset).data);
  EXPECT_EQ(in.dir_ao.data, compute_direction_map(s.flows->apex_offset).data);
  InputOptions apex_only;
  apex_only.mode = InputMode::apex_only;
  EXPECT_THROW(build_sample_inputs(s, est, apex_only), std::invalid_argument);
}

TEST(SampleInputs, PureFunctionOfFramesAndKeys) {
  const auto s = synth_dataset(2, 1, 6).front();
  const PyramidalLucasKanade est;
  const auto a = build_sample_inputs(s, est), b = build_sample_inputs(s, est);
  EXPECT_EQ(a.flow_oa.data, b.flow_oa.data);
  EXPECT_EQ(a.dir_ao.data, b.dir_ao.data);
}

TEST(SampleInputs, SyntheticPhasesAreAntiparallel) {
  const PyramidalLucasKanade est;
  for (const auto& s : synth_dataset(2, 6, 9)) {
    const auto in = build_sample_inputs(s, est);
    EXPECT_LE(mean_dot_on_gate(in.dir_oa, in.dir_ao), -0.8) << s.clip_id;
  }
}

TEST(SampleInputs, ApexPastWindowLosesOnsetApexMotion) {
  // Onset-apex pair drawn after the expression ended: almost no gated motion.
  const auto s = synth_dataset(2, 3, 10)[1];
  const PyramidalLucasKanade est;
  const int late = std::min(s.length() - 1, s.keyframes.offset + 5);
  InputOptions o;
  o.mode = InputMode::onset_apex;
  const auto in = build_sample_inputs(s, {s.keyframes.offset + 1, late, late}, est, o);
  EXPECT_LT(in.dir_oa.gate.cast<double>().mean(), 0.10);
  const auto clean = build_sample_inputs(s, est, o);
  EXPECT_GT(clean.dir_oa.gate.cast<double>().mean(), in.dir_oa.gate.cast<double>().mean());
}
