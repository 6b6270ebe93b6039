#pragma once

// Attention operators on m x m token grids (row-major token order,
// token i at (x, y) = (i mod m, i / m)), each with its analytic backward.
// All functions are templated on the scalar type; finite-difference checks
// instantiate them in double.

#include <Eigen/Core>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace causalnet {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

struct GridGeometry {
  int m = 2;
  int radius = 1;

  int tokens() const { return m * m; }
  int x(int i) const { return i % m; }
  int y(int i) const { return i / m; }
  int squared_distance(int i, int j) const {
    const int dx = x(i) - x(j), dy = y(i) - y(j);
    return dx * dx + dy * dy;
  }
  void validate() const {
    if (m < 1) throw std::invalid_argument("grid side m must be >= 1");
    if (radius < 0) throw std::invalid_argument("neighborhood radius must be >= 0");
  }
};

/// Binary neighborhood mask: M(i,j) = 1 iff the squared grid distance is <= r.
template <typename Scalar = double>
Mat<Scalar> build_neighborhood_mask(const GridGeometry& geom) {
  geom.validate();
  const int n = geom.tokens();
  Mat<Scalar> mask(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) mask(i, j) = geom.squared_distance(i, j) <= geom.radius ? Scalar(1) : Scalar(0);
  return mask;
}

/// Pseudo-attention scores: 0 inside the neighborhood, -j * gamma outside,
/// where j is the (0-based) key column.
template <typename Scalar = double>
Mat<Scalar> build_pseudo_matrix(const GridGeometry& geom, Scalar gamma) {
  if (!(gamma > 0)) throw std::invalid_argument("pseudo-attention decay gamma must be > 0");
  geom.validate();
  const int n = geom.tokens();
  Mat<Scalar> pseudo = Mat<Scalar>::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (geom.squared_distance(i, j) > geom.radius) pseudo(i, j) = -Scalar(j) * gamma;
  return pseudo;
}

template <typename Scalar>
struct MaskPair {
  Mat<Scalar> mask;
  Mat<Scalar> pseudo;
  Scalar gamma{};

  static MaskPair make(const GridGeometry& geom, Scalar gamma) {
    return {build_neighborhood_mask<Scalar>(geom), build_pseudo_matrix<Scalar>(geom, gamma), gamma};
  }
  /// The gamma -> 0 limit: pseudo scores all zero.
  static MaskPair zero_decay(const GridGeometry& geom) {
    const auto mask = build_neighborhood_mask<Scalar>(geom);
    return {mask, Mat<Scalar>::Zero(mask.rows(), mask.cols()), Scalar(0)};
  }
};

/// Row softmax with max subtraction.
template <typename Derived>
Mat<typename Derived::Scalar> softmax_rows(const Eigen::MatrixBase<Derived>& scores) {
  using Scalar = typename Derived::Scalar;
  Mat<Scalar> out = scores.colwise() - scores.rowwise().maxCoeff();
  out = out.array().exp().matrix();
  const Vec<Scalar> sums = out.rowwise().sum();
  return sums.asDiagonal().inverse() * out;
}

/// Gradient of softmax_rows given its output and the upstream gradient.
template <typename Scalar>
Mat<Scalar> softmax_rows_backward(const Mat<Scalar>& probs, const Mat<Scalar>& grad_probs) {
  const Vec<Scalar> dot = probs.cwiseProduct(grad_probs).rowwise().sum();
  return probs.cwiseProduct(grad_probs.colwise() - dot);
}

/// Per-token affine map y = x W + b (a 1x1 convolution over the grid).
template <typename Scalar>
struct Projection {
  Mat<Scalar> weight;  // in x out
  Mat<Scalar> bias;    // 1 x out

  Projection() = default;
  Projection(Eigen::Index in, Eigen::Index out) : weight(Mat<Scalar>::Zero(in, out)), bias(Mat<Scalar>::Zero(1, out)) {}

  Mat<Scalar> operator()(const Mat<Scalar>& x) const {
    Mat<Scalar> y = x * weight;
    y.rowwise() += bias.row(0);
    return y;
  }

  /// Accumulates parameter gradients into `grad`; returns d/dx.
  Mat<Scalar> backward(const Mat<Scalar>& x, const Mat<Scalar>& grad_out, Projection& grad) const {
    grad.weight.noalias() += x.transpose() * grad_out;
    grad.bias += grad_out.colwise().sum();
    return grad_out * weight.transpose();
  }

  template <typename F>
  void visit(F&& f) {
    f("weight", weight);
    f("bias", bias);
  }
  template <typename F>
  void visit(F&& f) const {
    f("weight", weight);
    f("bias", bias);
  }
};

template <typename Scalar>
struct QkvProjections {
  Projection<Scalar> query, key, value;

  QkvProjections() = default;
  QkvProjections(Eigen::Index in, Eigen::Index dim) : query(in, dim), key(in, dim), value(in, dim) {}

  template <typename F>
  void visit(F&& f) {
    visit_impl(*this, f);
  }
  template <typename F>
  void visit(F&& f) const {
    visit_impl(*this, f);
  }

 private:
  template <typename Self, typename F>
  static void visit_impl(Self& self, F& f) {
    self.query.visit([&](const char* n, auto& m) { f(std::string("query.") + n, m); });
    self.key.visit([&](const char* n, auto& m) { f(std::string("key.") + n, m); });
    self.value.visit([&](const char* n, auto& m) { f(std::string("value.") + n, m); });
  }
};

template <typename Scalar>
void check_finite(const Mat<Scalar>& m, const char* what) {
  if (!m.allFinite()) throw std::domain_error(std::string(what) + ": non-finite input");
}

// ---------------------------------------------------------------------------
// Masked pseudo-attention
//   S = (Q K^T / sqrt(d_k)) .* M + P,   A = softmax_rows(S),   W = A .* M,
//   out = W V.
// Heads split the feature columns into equal blocks; d_k = D / heads.
// ---------------------------------------------------------------------------

template <typename Scalar>
struct PseudoAttentionResult {
  Mat<Scalar> output;
  std::vector<Mat<Scalar>> weights;  // masked attention per head (exact zeros at masked cells)
  std::vector<Mat<Scalar>> probs;    // full-row softmax per head (real + pseudo)
};

inline Eigen::Index head_dim(Eigen::Index dim, int heads) {
  if (heads < 1 || dim % heads != 0) throw std::invalid_argument("feature dim must be divisible by head count");
  return dim / heads;
}

template <typename Scalar>
PseudoAttentionResult<Scalar> masked_pseudo_attention(const Mat<Scalar>& q, const Mat<Scalar>& k,
                                                      const Mat<Scalar>& v, const MaskPair<Scalar>& masks,
                                                      int heads = 1) {
  const Eigen::Index n = q.rows();
  if (k.rows() != n || v.rows() != n || k.cols() != q.cols() || masks.mask.rows() != n || masks.mask.cols() != n)
    throw std::invalid_argument("masked_pseudo_attention: shape mismatch");
  check_finite(q, "masked_pseudo_attention");
  check_finite(k, "masked_pseudo_attention");
  check_finite(v, "masked_pseudo_attention");
  const Eigen::Index dk = head_dim(q.cols(), heads);
  const Eigen::Index dv = head_dim(v.cols(), heads);
  const Scalar scale = Scalar(1) / std::sqrt(Scalar(dk));

  PseudoAttentionResult<Scalar> r;
  r.output.resize(n, v.cols());
  for (int h = 0; h < heads; ++h) {
    const Mat<Scalar> scores =
        (q.middleCols(h * dk, dk) * k.middleCols(h * dk, dk).transpose() * scale).cwiseProduct(masks.mask) +
        masks.pseudo;
    Mat<Scalar> probs = softmax_rows(scores);
    Mat<Scalar> weights = probs.cwiseProduct(masks.mask);
    r.output.middleCols(h * dv, dv).noalias() = weights * v.middleCols(h * dv, dv);
    r.probs.push_back(std::move(probs));
    r.weights.push_back(std::move(weights));
  }
  return r;
}

template <typename Scalar>
struct QkvGrad {
  Mat<Scalar> q, k, v;
};

template <typename Scalar>
QkvGrad<Scalar> masked_pseudo_attention_backward(const Mat<Scalar>& q, const Mat<Scalar>& k, const Mat<Scalar>& v,
                                                 const MaskPair<Scalar>& masks,
                                                 const PseudoAttentionResult<Scalar>& fwd,
                                                 const Mat<Scalar>& grad_out) {
  const int heads = static_cast<int>(fwd.weights.size());
  const Eigen::Index dk = q.cols() / heads;
  const Eigen::Index dv = v.cols() / heads;
  const Scalar scale = Scalar(1) / std::sqrt(Scalar(dk));
  QkvGrad<Scalar> g{Mat<Scalar>::Zero(q.rows(), q.cols()), Mat<Scalar>::Zero(k.rows(), k.cols()),
                    Mat<Scalar>::Zero(v.rows(), v.cols())};
  for (int h = 0; h < heads; ++h) {
    const auto go = grad_out.middleCols(h * dv, dv);
    g.v.middleCols(h * dv, dv).noalias() = fwd.weights[h].transpose() * go;
    const Mat<Scalar> grad_weights = go * v.middleCols(h * dv, dv).transpose();
    const Mat<Scalar> grad_probs = grad_weights.cwiseProduct(masks.mask);
    const Mat<Scalar> grad_scores = softmax_rows_backward<Scalar>(fwd.probs[h], grad_probs);
    const Mat<Scalar> grad_logits = grad_scores.cwiseProduct(masks.mask) * scale;
    g.q.middleCols(h * dk, dk).noalias() = grad_logits * k.middleCols(h * dk, dk);
    g.k.middleCols(h * dk, dk).noalias() = grad_logits.transpose() * q.middleCols(h * dk, dk);
  }
  return g;
}

/// Row sums of the masked attention for an identical-token sequence with all
/// real scores equal to zero. A strictly decreasing result means the
/// pseudo scores encode absolute position.
struct MonotonicityReport {
  std::vector<double> row_sums;
  bool degenerate = false;        // gamma == 0: rows all equal
  std::optional<int> violation;   // first i with row_sums[i] <= row_sums[i+1]

  bool strictly_decreasing() const { return !degenerate && !violation; }
};

inline MonotonicityReport position_monotonicity_check(double gamma, const GridGeometry& geom = {}) {
  if (gamma < 0) throw std::invalid_argument("gamma must be >= 0");
  const auto masks = gamma > 0 ? MaskPair<double>::make(geom, gamma) : MaskPair<double>::zero_decay(geom);
  const int n = geom.tokens();
  // Identical tokens with zero query projection give Q K^T = 0 everywhere.
  const Mat<double> x = Mat<double>::Ones(n, 4);
  const Mat<double> q = Mat<double>::Zero(n, 4);
  const auto r = masked_pseudo_attention<double>(q, x, x, masks, 1);
  MonotonicityReport report;
  const Vec<double> sums = r.weights[0].rowwise().sum();
  report.row_sums.assign(sums.data(), sums.data() + sums.size());
  if (gamma == 0) {
    report.degenerate = true;
    return report;
  }
  for (int i = 0; i + 1 < n; ++i)
    if (!(report.row_sums[i] > report.row_sums[i + 1])) {
      report.violation = i;
      break;
    }
  return report;
}

// ---------------------------------------------------------------------------
// Spatial attention: masked pseudo self-attention inside each time step.
// ---------------------------------------------------------------------------

template <typename Scalar>
struct TemporalTokenPair {
  Mat<Scalar> first;   // t = 1
  Mat<Scalar> second;  // t = 2

  const Mat<Scalar>& operator[](int t) const { return t == 0 ? first : second; }
  Mat<Scalar>& operator[](int t) { return t == 0 ? first : second; }
};

template <typename Scalar>
struct ProjectedAttentionCache {
  Mat<Scalar> q, k, v;
  PseudoAttentionResult<Scalar> attn;
};

/// PosAttn(Q from `query_src`, K/V from `kv_src`); also the building block of
/// spatial self-attention (query_src == kv_src).
template <typename Scalar>
Mat<Scalar> projected_pseudo_attention(const Mat<Scalar>& query_src, const Mat<Scalar>& kv_src,
                                       const MaskPair<Scalar>& masks, const QkvProjections<Scalar>& proj, int heads,
                                       ProjectedAttentionCache<Scalar>* cache = nullptr) {
  ProjectedAttentionCache<Scalar> local;
  auto& c = cache ? *cache : local;
  c.q = proj.query(query_src);
  c.k = proj.key(kv_src);
  c.v = proj.value(kv_src);
  c.attn = masked_pseudo_attention<Scalar>(c.q, c.k, c.v, masks, heads);
  return c.attn.output;
}

/// Returns (d query_src, d kv_src); accumulates projection gradients.
template <typename Scalar>
std::pair<Mat<Scalar>, Mat<Scalar>> projected_pseudo_attention_backward(
    const Mat<Scalar>& query_src, const Mat<Scalar>& kv_src, const MaskPair<Scalar>& masks,
    const QkvProjections<Scalar>& proj, const ProjectedAttentionCache<Scalar>& cache, const Mat<Scalar>& grad_out,
    QkvProjections<Scalar>& grad) {
  const auto g = masked_pseudo_attention_backward<Scalar>(cache.q, cache.k, cache.v, masks, cache.attn, grad_out);
  Mat<Scalar> d_query = proj.query.backward(query_src, g.q, grad.query);
  Mat<Scalar> d_kv = proj.key.backward(kv_src, g.k, grad.key);
  d_kv += proj.value.backward(kv_src, g.v, grad.value);
  return {std::move(d_query), std::move(d_kv)};
}

template <typename Scalar>
struct SpatialCache {
  ProjectedAttentionCache<Scalar> step[2];
};

template <typename Scalar>
TemporalTokenPair<Scalar> spatial_attention(const TemporalTokenPair<Scalar>& pair, const MaskPair<Scalar>& masks,
                                            const QkvProjections<Scalar>& proj, int heads = 1,
                                            SpatialCache<Scalar>* cache = nullptr) {
  if (pair.first.rows() != pair.second.rows() || pair.first.cols() != pair.second.cols())
    throw std::invalid_argument("spatial_attention: token grids differ in shape");
  TemporalTokenPair<Scalar> out;
  for (int t = 0; t < 2; ++t)
    out[t] = projected_pseudo_attention<Scalar>(pair[t], pair[t], masks, proj, heads, cache ? &cache->step[t] : nullptr);
  return out;
}

template <typename Scalar>
TemporalTokenPair<Scalar> spatial_attention_backward(const TemporalTokenPair<Scalar>& pair,
                                                     const MaskPair<Scalar>& masks,
                                                     const QkvProjections<Scalar>& proj,
                                                     const SpatialCache<Scalar>& cache,
                                                     const TemporalTokenPair<Scalar>& grad_out,
                                                     QkvProjections<Scalar>& grad) {
  TemporalTokenPair<Scalar> d;
  for (int t = 0; t < 2; ++t) {
    auto [dq, dkv] =
        projected_pseudo_attention_backward<Scalar>(pair[t], pair[t], masks, proj, cache.step[t], grad_out[t], grad);
    d[t] = dq + dkv;
  }
  return d;
}

// ---------------------------------------------------------------------------
// Temporal causal attention: at each grid position p, token t=2 attends to
// the t=1 and t=2 tokens at p; token t=1 passes through unchanged.
// ---------------------------------------------------------------------------

template <typename Scalar>
struct TemporalCache {
  Mat<Scalar> q2, k1, k2, v1, v2;
  Mat<Scalar> w1, w2;  // n x heads softmax weights on (t=1, t=2)
};

template <typename Scalar>
TemporalTokenPair<Scalar> temporal_causal_attention(const TemporalTokenPair<Scalar>& pair,
                                                    const QkvProjections<Scalar>& proj, int heads = 1,
                                                    TemporalCache<Scalar>* cache = nullptr) {
  if (pair.first.rows() != pair.second.rows() || pair.first.cols() != pair.second.cols())
    throw std::invalid_argument("temporal_causal_attention: token grids differ in shape");
  TemporalCache<Scalar> local;
  auto& c = cache ? *cache : local;
  c.q2 = proj.query(pair.second);
  c.k1 = proj.key(pair.first);
  c.k2 = proj.key(pair.second);
  c.v1 = proj.value(pair.first);
  c.v2 = proj.value(pair.second);
  const Eigen::Index n = pair.first.rows();
  const Eigen::Index dk = head_dim(c.q2.cols(), heads);
  const Eigen::Index dv = head_dim(c.v1.cols(), heads);
  const Scalar scale = Scalar(1) / std::sqrt(Scalar(dk));
  c.w1.resize(n, heads);
  c.w2.resize(n, heads);
  TemporalTokenPair<Scalar> out{pair.first, Mat<Scalar>(n, c.v1.cols())};
  for (int h = 0; h < heads; ++h) {
    const auto q = c.q2.middleCols(h * dk, dk);
    const Vec<Scalar> l1 = q.cwiseProduct(c.k1.middleCols(h * dk, dk)).rowwise().sum() * scale;
    const Vec<Scalar> l2 = q.cwiseProduct(c.k2.middleCols(h * dk, dk)).rowwise().sum() * scale;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Scalar mx = std::max(l1(i), l2(i));
      const Scalar e1 = std::exp(l1(i) - mx), e2 = std::exp(l2(i) - mx);
      c.w1(i, h) = e1 / (e1 + e2);
      c.w2(i, h) = e2 / (e1 + e2);
    }
    out.second.middleCols(h * dv, dv) = c.w1.col(h).asDiagonal() * c.v1.middleCols(h * dv, dv) +
                                        c.w2.col(h).asDiagonal() * c.v2.middleCols(h * dv, dv);
  }
  return out;
}

template <typename Scalar>
TemporalTokenPair<Scalar> temporal_causal_attention_backward(const TemporalTokenPair<Scalar>& pair,
                                                             const QkvProjections<Scalar>& proj,
                                                             const TemporalCache<Scalar>& c,
                                                             const TemporalTokenPair<Scalar>& grad_out,
                                                             QkvProjections<Scalar>& grad) {
  const int heads = static_cast<int>(c.w1.cols());
  const Eigen::Index dk = c.q2.cols() / heads;
  const Eigen::Index dv = c.v1.cols() / heads;
  const Scalar scale = Scalar(1) / std::sqrt(Scalar(dk));
  Mat<Scalar> gq2 = Mat<Scalar>::Zero(c.q2.rows(), c.q2.cols());
  Mat<Scalar> gk1 = gq2, gk2 = gq2;
  Mat<Scalar> gv1 = Mat<Scalar>::Zero(c.v1.rows(), c.v1.cols());
  Mat<Scalar> gv2 = gv1;
  const Mat<Scalar>& go = grad_out.second;
  for (int h = 0; h < heads; ++h) {
    const auto gob = go.middleCols(h * dv, dv);
    gv1.middleCols(h * dv, dv) = c.w1.col(h).asDiagonal() * gob;
    gv2.middleCols(h * dv, dv) = c.w2.col(h).asDiagonal() * gob;
    const Vec<Scalar> gw1 = gob.cwiseProduct(c.v1.middleCols(h * dv, dv)).rowwise().sum();
    const Vec<Scalar> gw2 = gob.cwiseProduct(c.v2.middleCols(h * dv, dv)).rowwise().sum();
    const Vec<Scalar> mean = c.w1.col(h).cwiseProduct(gw1) + c.w2.col(h).cwiseProduct(gw2);
    const Vec<Scalar> gl1 = c.w1.col(h).cwiseProduct(gw1 - mean) * scale;
    const Vec<Scalar> gl2 = c.w2.col(h).cwiseProduct(gw2 - mean) * scale;
    gq2.middleCols(h * dk, dk) =
        gl1.asDiagonal() * c.k1.middleCols(h * dk, dk) + gl2.asDiagonal() * c.k2.middleCols(h * dk, dk);
    gk1.middleCols(h * dk, dk) = gl1.asDiagonal() * c.q2.middleCols(h * dk, dk);
    gk2.middleCols(h * dk, dk) = gl2.asDiagonal() * c.q2.middleCols(h * dk, dk);
  }
  TemporalTokenPair<Scalar> d;
  d.first = grad_out.first;
  d.first += proj.key.backward(pair.first, gk1, grad.key);
  d.first += proj.value.backward(pair.first, gv1, grad.value);
  d.second = proj.query.backward(pair.second, gq2, grad.query);
  d.second += proj.key.backward(pair.second, gk2, grad.key);
  d.second += proj.value.backward(pair.second, gv2, grad.value);
  return d;
}

// ---------------------------------------------------------------------------
// Causal relation mining: softmax(F B^T / sqrt(d_k)) (F + B).
// ---------------------------------------------------------------------------

template <typename Scalar>
struct RelationCache {
  Mat<Scalar> probs;
  Mat<Scalar> sum;
};

template <typename Scalar>
Mat<Scalar> causal_relation_mining(const Mat<Scalar>& forward_long, const Mat<Scalar>& backward_long,
                                   Eigen::Index dk, RelationCache<Scalar>* cache = nullptr) {
  if (forward_long.rows() != backward_long.rows() || forward_long.cols() != backward_long.cols())
    throw std::invalid_argument("causal_relation_mining: shape mismatch");
  if (dk <= 0) throw std::invalid_argument("causal_relation_mining: d_k must be positive");
  RelationCache<Scalar> local;
  auto& c = cache ? *cache : local;
  c.probs = softmax_rows(forward_long * backward_long.transpose() / std::sqrt(Scalar(dk)));
  c.sum = forward_long + backward_long;
  return c.probs * c.sum;
}

template <typename Scalar>
std::pair<Mat<Scalar>, Mat<Scalar>> causal_relation_mining_backward(const Mat<Scalar>& forward_long,
                                                                    const Mat<Scalar>& backward_long,
                                                                    Eigen::Index dk, const RelationCache<Scalar>& c,
                                                                    const Mat<Scalar>& grad_out) {
  const Scalar scale = Scalar(1) / std::sqrt(Scalar(dk));
  const Mat<Scalar> grad_sum = c.probs.transpose() * grad_out;
  const Mat<Scalar> grad_probs = grad_out * c.sum.transpose();
  const Mat<Scalar> grad_logits = softmax_rows_backward<Scalar>(c.probs, grad_probs) * scale;
  Mat<Scalar> d_forward = grad_logits * backward_long + grad_sum;
  Mat<Scalar> d_backward = grad_logits.transpose() * forward_long + grad_sum;
  return {std::move(d_forward), std::move(d_backward)};
}

}  // namespace causalnet
