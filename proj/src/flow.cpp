#include "causalnet/flow.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace causalnet {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;

std::vector<double> gaussian_kernel(int radius, double sigma) {
  std::vector<double> k(2 * radius + 1);
  double sum = 0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + radius];
  }
  for (auto& w : k) w /= sum;
  return k;
}

/// Separable filtering with replicated borders.
MatrixXd filter_separable(const MatrixXd& src, const std::vector<double>& k) {
  const int radius = static_cast<int>(k.size() / 2);
  const Index rows = src.rows();
  const Index cols = src.cols();
  MatrixXd tmp(rows, cols);
  for (Index y = 0; y < rows; ++y)
    for (Index x = 0; x < cols; ++x) {
      double acc = 0;
      for (int d = -radius; d <= radius; ++d) acc += k[d + radius] * src(y, std::clamp<Index>(x + d, 0, cols - 1));
      tmp(y, x) = acc;
    }
  MatrixXd out(rows, cols);
  for (Index y = 0; y < rows; ++y)
    for (Index x = 0; x < cols; ++x) {
      double acc = 0;
      for (int d = -radius; d <= radius; ++d) acc += k[d + radius] * tmp(std::clamp<Index>(y + d, 0, rows - 1), x);
      out(y, x) = acc;
    }
  return out;
}

MatrixXd smooth(const MatrixXd& src, double sigma) {
  if (sigma <= 0) return src;
  const int radius = std::max(1, static_cast<int>(std::ceil(2.5 * sigma)));
  return filter_separable(src, gaussian_kernel(radius, sigma));
}

/// d/dx (columns) and d/dy (rows): central inside, one-sided on the border.
MatrixXd diff_x(const MatrixXd& f) {
  const Index rows = f.rows(), cols = f.cols();
  MatrixXd d = MatrixXd::Zero(rows, cols);
  if (cols < 2) return d;
  for (Index y = 0; y < rows; ++y) {
    d(y, 0) = f(y, 1) - f(y, 0);
    d(y, cols - 1) = f(y, cols - 1) - f(y, cols - 2);
    for (Index x = 1; x + 1 < cols; ++x) d(y, x) = 0.5 * (f(y, x + 1) - f(y, x - 1));
  }
  return d;
}

MatrixXd diff_y(const MatrixXd& f) { return diff_x(f.transpose()).transpose(); }

double sample_bilinear(const MatrixXd& img, double y, double x) {
  const Index rows = img.rows(), cols = img.cols();
  y = std::clamp(y, 0.0, static_cast<double>(rows - 1));
  x = std::clamp(x, 0.0, static_cast<double>(cols - 1));
  const auto y0 = static_cast<Index>(std::floor(y));
  const auto x0 = static_cast<Index>(std::floor(x));
  const Index y1 = std::min(y0 + 1, rows - 1);
  const Index x1 = std::min(x0 + 1, cols - 1);
  const double fy = y - y0, fx = x - x0;
  return (1 - fy) * ((1 - fx) * img(y0, x0) + fx * img(y0, x1)) + fy * ((1 - fx) * img(y1, x0) + fx * img(y1, x1));
}

MatrixXd normalize_channel(const MatrixXd& c) {
  const double lo = c.minCoeff();
  const double hi = c.maxCoeff();
  if (!(hi > lo)) return MatrixXd::Zero(c.rows(), c.cols());
  return (c.array() - lo) / (hi - lo);
}

/// Row-major flatten so row index = y * cols + x.
Eigen::VectorXd flatten(const MatrixXd& m) {
  Eigen::VectorXd out(m.size());
  for (Index y = 0; y < m.rows(); ++y)
    for (Index x = 0; x < m.cols(); ++x) out(y * m.cols() + x) = m(y, x);
  return out;
}

void check_flow(const FlowField& flow) {
  if (flow.u.rows() != flow.v.rows() || flow.u.cols() != flow.v.cols())
    throw std::invalid_argument("flow u/v shape mismatch");
}

}  // namespace

FlowField PyramidalLucasKanade::estimate(const MatrixXd& a, const MatrixXd& b) const {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("compute_flow: frame shape mismatch");

  std::vector<MatrixXd> pyr_a{smooth(a, opts_.presmooth_sigma)};
  std::vector<MatrixXd> pyr_b{smooth(b, opts_.presmooth_sigma)};
  for (int l = 1; l < opts_.levels; ++l) {
    const Index r = pyr_a.back().rows() / 2, c = pyr_a.back().cols() / 2;
    if (std::min(r, c) < opts_.min_level_side) break;
    pyr_a.push_back(area_resize(pyr_a.back(), r, c));
    pyr_b.push_back(area_resize(pyr_b.back(), r, c));
  }

  const auto window = gaussian_kernel(opts_.window_radius, opts_.window_sigma);
  FlowField flow{MatrixXd::Zero(pyr_a.back().rows(), pyr_a.back().cols()),
                 MatrixXd::Zero(pyr_a.back().rows(), pyr_a.back().cols())};

  for (auto level = static_cast<int>(pyr_a.size()) - 1; level >= 0; --level) {
    const MatrixXd& la = pyr_a[level];
    const MatrixXd& lb = pyr_b[level];
    if (flow.rows() != la.rows() || flow.cols() != la.cols()) {
      const double sy = static_cast<double>(la.rows()) / flow.rows();
      const double sx = static_cast<double>(la.cols()) / flow.cols();
      flow.u = area_resize(flow.u, la.rows(), la.cols()) * sx;
      flow.v = area_resize(flow.v, la.rows(), la.cols()) * sy;
    }
    const MatrixXd ax = diff_x(la), ay = diff_y(la);
    const MatrixXd gxx = filter_separable(ax.cwiseProduct(ax), window);
    const MatrixXd gxy = filter_separable(ax.cwiseProduct(ay), window);
    const MatrixXd gyy = filter_separable(ay.cwiseProduct(ay), window);
    const int wr = opts_.window_radius;
    const double lambda = opts_.regularization;
    // Each pixel iterates on its own window, translated by its own flow.
    for (Index y = 0; y < la.rows(); ++y)
      for (Index x = 0; x < la.cols(); ++x) {
        const double a11 = gxx(y, x) + lambda, a12 = gxy(y, x), a22 = gyy(y, x) + lambda;
        const double det = a11 * a22 - a12 * a12;
        double u = flow.u(y, x), v = flow.v(y, x);
        for (int it = 0; it < opts_.iterations; ++it) {
          double bx = 0, by = 0;
          for (int dy = -wr; dy <= wr; ++dy) {
            const Index qy = std::clamp<Index>(y + dy, 0, la.rows() - 1);
            for (int dx = -wr; dx <= wr; ++dx) {
              const Index qx = std::clamp<Index>(x + dx, 0, la.cols() - 1);
              const double w = window[dy + wr] * window[dx + wr];
              const double r = sample_bilinear(lb, qy + v, qx + u) - la(qy, qx);
              bx += w * ax(qy, qx) * r;
              by += w * ay(qy, qx) * r;
            }
          }
          const double du = -(a22 * bx - a12 * by) / det;
          const double dv = -(a11 * by - a12 * bx) / det;
          u += du;
          v += dv;
          if (std::max(std::abs(du), std::abs(dv)) < 1e-3) break;
        }
        flow.u(y, x) = u;
        flow.v(y, x) = v;
      }
  }
  return flow;
}

FlowField compute_flow(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const FlowEstimator& estimator) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("compute_flow: frame shape mismatch");
  return estimator.estimate(a, b);
}

FlowField compute_flow(const Frame& a, const Frame& b, const FlowEstimator& estimator) {
  return compute_flow(to_double(a), to_double(b), estimator);
}

Eigen::MatrixXd compute_strain(const FlowField& flow) {
  check_flow(flow);
  const MatrixXd exx = diff_x(flow.u);
  const MatrixXd eyy = diff_y(flow.v);
  const MatrixXd exy = diff_y(flow.u);
  const MatrixXd eyx = diff_x(flow.v);
  return (exx.array().square() + eyy.array().square() + 0.5 * (exy + eyx).array().square()).sqrt();
}

FlowImage build_flow_image(const FlowField& flow) {
  check_flow(flow);
  if (!flow.u.allFinite() || !flow.v.allFinite()) throw std::invalid_argument("build_flow_image: non-finite flow");
  const MatrixXd strain = compute_strain(flow);
  FlowImage img;
  img.data.col(0) = flatten(normalize_channel(area_resize(flow.u, kInputSide, kInputSide)));
  img.data.col(1) = flatten(normalize_channel(area_resize(flow.v, kInputSide, kInputSide)));
  img.data.col(2) = flatten(normalize_channel(area_resize(strain, kInputSide, kInputSide)));
  return img;
}

DirectionMap compute_direction_map(const FlowField& flow, double tau) {
  check_flow(flow);
  const Eigen::VectorXd u = flatten(area_resize(flow.u, kInputSide, kInputSide));
  const Eigen::VectorXd v = flatten(area_resize(flow.v, kInputSide, kInputSide));
  DirectionMap map;
  for (Index i = 0; i < kInputPixels; ++i) {
    const double mag = std::hypot(u(i), v(i));
    if (!(mag >= tau) || mag == 0) continue;
    const double theta = std::atan2(v(i), u(i));
    map.data(i, 0) = std::cos(theta);
    map.data(i, 1) = std::sin(theta);
    map.gate(i) = true;
  }
  return map;
}

std::string_view to_string(InputMode mode) {
  switch (mode) {
    case InputMode::full: return "onset_apex_plus_apex_offset";
    case InputMode::onset_apex: return "onset_apex";
    case InputMode::apex_only: return "apex_only";
  }
  return "?";
}

InputMode parse_input_mode(std::string_view name) {
  if (name == "full" || name == "onset_apex_plus_apex_offset") return InputMode::full;
  if (name == "onset_apex") return InputMode::onset_apex;
  if (name == "apex_only") return InputMode::apex_only;
  throw std::invalid_argument("unknown input mode '" + std::string(name) + "'");
}

SampleInputs build_sample_inputs(const MESample& sample, const FlowEstimator& estimator, const InputOptions& opts) {
  return build_sample_inputs(sample, sample.keyframes, estimator, opts);
}

SampleInputs build_sample_inputs(const MESample& sample, const KeyFrames& keys, const FlowEstimator& estimator,
                                 const InputOptions& opts) {
  FlowField oa, ao;
  if (sample.flows) {
    if (opts.mode == InputMode::apex_only)
      throw std::invalid_argument("apex_only input needs frames, sample carries precomputed flows only");
    oa = sample.flows->onset_apex;
    ao = sample.flows->apex_offset;
  } else {
    const int n = sample.length();
    if (keys.onset < 0 || keys.onset > keys.apex || keys.apex > keys.offset || keys.offset >= n)
      throw std::invalid_argument("build_sample_inputs: key frames out of order or out of range");
    const auto frame = [&](int i) { return to_double(sample.frames[static_cast<std::size_t>(i)]); };
    switch (opts.mode) {
      case InputMode::full:
        oa = compute_flow(frame(keys.onset), frame(keys.apex), estimator);
        ao = compute_flow(frame(keys.apex), frame(keys.offset), estimator);
        break;
      case InputMode::onset_apex:
        oa = compute_flow(frame(keys.onset), frame(keys.apex), estimator);
        ao = oa;
        break;
      case InputMode::apex_only:
        oa = compute_flow(frame(0), frame(keys.apex), estimator);
        ao = oa;
        break;
    }
  }
  SampleInputs in;
  in.flow_oa = build_flow_image(oa);
  in.flow_ao = build_flow_image(ao);
  in.dir_oa = compute_direction_map(oa, opts.tau);
  in.dir_ao = compute_direction_map(ao, opts.tau);
  return in;
}

Eigen::ArrayXd direction_hue(const DirectionMap& map) {
  Eigen::ArrayXd hue = Eigen::ArrayXd::Constant(kInputPixels, std::numeric_limits<double>::quiet_NaN());
  for (Index i = 0; i < kInputPixels; ++i) {
    if (!map.gate(i)) continue;
    double deg = std::atan2(map.data(i, 1), map.data(i, 0)) * 180.0 / std::numbers::pi + 90.0;
    deg = std::fmod(deg + 360.0, 360.0);
    hue(i) = deg;
  }
  return hue;
}

RgbImage render_direction_hue(const DirectionMap& map, int scale) {
  const Eigen::ArrayXd hue = direction_hue(map);
  RgbImage img(kInputSide * scale, kInputSide * scale);
  for (int y = 0; y < img.rows; ++y)
    for (int x = 0; x < img.cols; ++x) {
      const Index i = (y / scale) * kInputSide + (x / scale);
      auto* px = img.at(y, x);
      if (std::isnan(hue(i))) continue;
      // HSV -> RGB with S = V = 1.
      const double h = hue(i) / 60.0;
      const double c = 1.0;
      const double xx = c * (1 - std::abs(std::fmod(h, 2.0) - 1));
      double r = 0, g = 0, b = 0;
      switch (static_cast<int>(h) % 6) {
        case 0: r = c, g = xx; break;
        case 1: r = xx, g = c; break;
        case 2: g = c, b = xx; break;
        case 3: g = xx, b = c; break;
        case 4: r = xx, b = c; break;
        default: r = c, b = xx; break;
      }
      px[0] = static_cast<std::uint8_t>(std::lround(255 * r));
      px[1] = static_cast<std::uint8_t>(std::lround(255 * g));
      px[2] = static_cast<std::uint8_t>(std::lround(255 * b));
    }
  return img;
}

Frame render_flow_channel(const FlowImage& image, int channel, int scale) {
  Frame out(kInputSide * scale, kInputSide * scale);
  for (Index y = 0; y < out.rows(); ++y)
    for (Index x = 0; x < out.cols(); ++x) {
      const double v = image.data((y / scale) * kInputSide + x / scale, channel);
      out(y, x) = static_cast<std::uint8_t>(std::lround(255 * std::clamp(v, 0.0, 1.0)));
    }
  return out;
}

}  // namespace causalnet
