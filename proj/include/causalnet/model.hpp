#pragma once

#include "causalnet/attention.hpp"
#include "causalnet/flow.hpp"
#include "causalnet/layers.hpp"
#include "causalnet/model_config.hpp"

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace causalnet {

/// Attention sub-block with optional residual + layer norm wrap.
template <typename Scalar>
struct AttentionBlock {
  QkvProjections<Scalar> proj;
  LayerNorm<Scalar> norm;

  AttentionBlock() = default;
  explicit AttentionBlock(Eigen::Index dim) : proj(dim, dim), norm(dim) {}

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
    self.proj.visit([&](const std::string& n, auto& m) { f(n, m); });
    self.norm.visit([&](const char* n, auto& m) { f(std::string("norm.") + n, m); });
  }
};

template <typename Scalar>
struct CabParams {
  AttentionBlock<Scalar> spatial;
  AttentionBlock<Scalar> temporal;

  CabParams() = default;
  explicit CabParams(Eigen::Index dim) : spatial(dim), temporal(dim) {}

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
    self.spatial.visit([&](const std::string& n, auto& m) { f("spatial." + n, m); });
    self.temporal.visit([&](const std::string& n, auto& m) { f("temporal." + n, m); });
  }
};

template <typename Scalar>
struct CausalNetParams {
  LiteConvEncoder<Scalar> flow_encoder;
  LiteConvEncoder<Scalar> direction_encoder;
  std::vector<AttentionBlock<Scalar>> cmplm;  // one block when shared, else one per direction
  std::vector<CabParams<Scalar>> cab;
  Projection<Scalar> classifier;              // (3 m^2 D) x n_classes

  CausalNetParams() = default;
  explicit CausalNetParams(const ModelConfig& c)
      : flow_encoder(3, c.encoder_c1, c.encoder_c2, c.feature_dim),
        direction_encoder(2, c.encoder_c1, c.encoder_c2, c.feature_dim),
        cmplm(c.shared_cmplm ? 1 : 2, AttentionBlock<Scalar>(c.feature_dim)),
        cab(c.cab_blocks, CabParams<Scalar>(c.feature_dim)),
        classifier(3 * 4 * c.feature_dim, c.n_classes) {}

  /// Visits every tensor with a stable dotted name, in a fixed order.
  template <typename F>
  void visit(F&& f) {
    visit_impl(*this, f);
  }
  template <typename F>
  void visit(F&& f) const {
    visit_impl(*this, f);
  }

  CausalNetParams zeros_like() const {
    CausalNetParams g = *this;
    g.visit([](const std::string&, Mat<Scalar>& m) { m.setZero(); });
    return g;
  }

  std::size_t size() const {
    std::size_t n = 0;
    visit([&](const std::string&, const Mat<Scalar>& m) { n += static_cast<std::size_t>(m.size()); });
    return n;
  }

 private:
  template <typename Self, typename F>
  static void visit_impl(Self& self, F& f) {
    self.flow_encoder.visit([&](const std::string& n, auto& m) { f("flow_encoder." + n, m); });
    self.direction_encoder.visit([&](const std::string& n, auto& m) { f("direction_encoder." + n, m); });
    for (std::size_t i = 0; i < self.cmplm.size(); ++i)
      self.cmplm[i].visit([&](const std::string& n, auto& m) { f("cmplm." + std::to_string(i) + "." + n, m); });
    for (std::size_t i = 0; i < self.cab.size(); ++i)
      self.cab[i].visit([&](const std::string& n, auto& m) { f("cab." + std::to_string(i) + "." + n, m); });
    self.classifier.visit([&](const char* n, auto& m) { f(std::string("classifier.") + n, m); });
  }
};

/// Model inputs in the model's scalar type.
template <typename Scalar>
struct ModelInputs {
  Mat<Scalar> flow_oa, flow_ao;  // 784 x 3
  Mat<Scalar> dir_oa, dir_ao;    // 784 x 2

  static ModelInputs from(const SampleInputs& s) {
    return {s.flow_oa.data.cast<Scalar>(), s.flow_ao.data.cast<Scalar>(), s.dir_oa.data.cast<Scalar>(),
            s.dir_ao.data.cast<Scalar>()};
  }
};

/// Argmax with ties resolved to the lowest index.
template <typename Derived>
int classify(const Eigen::MatrixBase<Derived>& logits) {
  int best = 0;
  for (Eigen::Index i = 1; i < logits.size(); ++i)
    if (logits(i) > logits(best)) best = static_cast<int>(i);
  return best;
}

/// Softmax cross-entropy of one sample; optionally writes d loss / d logits.
template <typename Scalar>
Scalar cross_entropy(const Vec<Scalar>& logits, int label, Vec<Scalar>* grad = nullptr) {
  const Scalar mx = logits.maxCoeff();
  const Vec<Scalar> e = (logits.array() - mx).exp();
  const Scalar sum = e.sum();
  if (grad) {
    *grad = e / sum;
    (*grad)(label) -= Scalar(1);
  }
  return std::log(sum) + mx - logits(label);
}

class NonFiniteActivation : public std::runtime_error {
 public:
  explicit NonFiniteActivation(const std::string& layer)
      : std::runtime_error("non-finite activation in " + layer), layer_(layer) {}
  const std::string& layer() const { return layer_; }

 private:
  std::string layer_;
};

/// End-to-end network: flow encoder -> tokens x1', x2'; direction encoder +
/// positional cross attention -> pos1', pos2'; bidirectional causal attention
/// blocks; relation mining over the long-range tokens; linear classifier on
/// concat(y_long, y_for_1, y_back_1).
template <typename Scalar>
class CausalNet {
 public:
  using Pair = TemporalTokenPair<Scalar>;
  using Params = CausalNetParams<Scalar>;

  struct BlockCache {
    ProjectedAttentionCache<Scalar> attn;
    Mat<Scalar> pre_norm;
    typename LayerNorm<Scalar>::Cache norm;
  };

  struct CabCache {
    Pair input;
    SpatialCache<Scalar> spatial;
    typename LayerNorm<Scalar>::Cache spatial_norm[2];
    Pair spatial_out;
    TemporalCache<Scalar> temporal;
    typename LayerNorm<Scalar>::Cache temporal_norm;
  };

  struct CmplmTrace {
    typename LiteConvEncoder<Scalar>::Cache enc[2];
    Mat<Scalar> x_pos[2];  // encoded direction tokens
    BlockCache block[2];
  };

  struct CabOutput {
    Pair forward_pair;   // (y_for_1', y_for_2')
    Pair backward_pair;  // (y_back_1', y_back_2')
    Mat<Scalar> y_long;
    Mat<Scalar> y_all;   // 3 m^2 x D
  };

  struct CabTrace {
    std::vector<CabCache> forward_blocks, backward_blocks;
    RelationCache<Scalar> relation;
  };

  struct Trace {
    typename LiteConvEncoder<Scalar>::Cache flow_enc[2];
    CmplmTrace cmplm;
    CabTrace cab;
    CabOutput cab_out;
    Mat<Scalar> features;  // 1 x 3 m^2 D
  };

  explicit CausalNet(const ModelConfig& cfg)
      : cfg_(cfg), geom_{2, cfg.radius}, masks_(MaskPair<Scalar>::make(geom_, Scalar(cfg.gamma))), params_(cfg) {
    if (cfg.heads < 1 || cfg.feature_dim % cfg.heads != 0)
      throw std::invalid_argument("feature_dim must be divisible by heads");
  }

  /// Glorot-uniform weights, zero biases, unit norm gains.
  static CausalNet initialized(const ModelConfig& cfg, std::uint64_t seed) {
    CausalNet net(cfg);
    std::mt19937_64 rng(seed);
    net.params_.visit([&](const std::string& name, Mat<Scalar>& m) {
      if (name.ends_with(".gain")) {
        m.setOnes();
      } else if (name.ends_with(".weight")) {
        const double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
        std::uniform_real_distribution<double> u(-limit, limit);
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = Scalar(u(rng));
      } else {
        m.setZero();
      }
    });
    return net;
  }

  const ModelConfig& config() const { return cfg_; }
  const MaskPair<Scalar>& masks() const { return masks_; }
  Params& params() { return params_; }
  const Params& params() const { return params_; }
  Eigen::Index relation_dk() const { return cfg_.relation_dk > 0 ? cfg_.relation_dk : cfg_.feature_dim; }

  // ---- forward pieces ------------------------------------------------------

  /// Position embeddings (pos1', pos2') from the two direction maps.
  std::pair<Mat<Scalar>, Mat<Scalar>> cmplm_forward(const Mat<Scalar>& dir_oa, const Mat<Scalar>& dir_ao,
                                                    CmplmTrace* trace = nullptr) const {
    CmplmTrace local;
    auto& t = trace ? *trace : local;
    t.x_pos[0] = params_.direction_encoder(dir_oa, &t.enc[0]);
    t.x_pos[1] = params_.direction_encoder(dir_ao, &t.enc[1]);
    Mat<Scalar> pos1 = block_forward(cmplm_block(0), t.x_pos[0], t.x_pos[1], t.block[0]);
    Mat<Scalar> pos2 = block_forward(cmplm_block(1), t.x_pos[1], t.x_pos[0], t.block[1]);
    return {std::move(pos1), std::move(pos2)};
  }

  /// One causal attention block applied to a time-ordered pair.
  Pair cab_block_forward(const CabParams<Scalar>& p, const Pair& in, CabCache* cache = nullptr) const {
    CabCache local;
    auto& c = cache ? *cache : local;
    c.input = in;
    Pair attended = spatial_attention<Scalar>(in, masks_, p.spatial.proj, cfg_.heads, &c.spatial);
    for (int t = 0; t < 2; ++t) {
      if (cfg_.residual_norm) c.spatial_out[t] = p.spatial.norm(in[t] + attended[t], &c.spatial_norm[t]);
      else c.spatial_out[t] = attended[t];
    }
    Pair temporal = temporal_causal_attention<Scalar>(c.spatial_out, p.temporal.proj, cfg_.heads, &c.temporal);
    if (cfg_.residual_norm)
      temporal.second = p.temporal.norm(c.spatial_out.second + temporal.second, &c.temporal_norm);
    return temporal;
  }

  Pair cab_stack_forward(const Pair& in, std::vector<CabCache>* caches = nullptr) const {
    if (caches) caches->resize(params_.cab.size());
    Pair x = in;
    for (std::size_t b = 0; b < params_.cab.size(); ++b)
      x = cab_block_forward(params_.cab[b], x, caches ? &(*caches)[b] : nullptr);
    return x;
  }

  /// a_t = x_t' + pos_t'; forward pair (a1, a2), backward pair (a2, a1).
  CabOutput cab_forward(const Mat<Scalar>& x1, const Mat<Scalar>& x2, const Mat<Scalar>& pos1,
                        const Mat<Scalar>& pos2, CabTrace* trace = nullptr) const {
    const Mat<Scalar> a1 = x1 + pos1;
    const Mat<Scalar> a2 = x2 + pos2;
    CabOutput out;
    out.forward_pair = cab_stack_forward({a1, a2}, trace ? &trace->forward_blocks : nullptr);
    out.backward_pair = cab_stack_forward({a2, a1}, trace ? &trace->backward_blocks : nullptr);
    out.y_long = causal_relation_mining<Scalar>(out.forward_pair.second, out.backward_pair.second, relation_dk(),
                                                trace ? &trace->relation : nullptr);
    const Eigen::Index n = a1.rows();
    out.y_all.resize(3 * n, a1.cols());
    out.y_all << out.y_long, out.forward_pair.first, out.backward_pair.first;
    return out;
  }

  Vec<Scalar> classify_features(const Mat<Scalar>& y_all, Mat<Scalar>* features = nullptr) const {
    Mat<Scalar> flat(1, y_all.size());
    for (Eigen::Index r = 0; r < y_all.rows(); ++r) flat.block(0, r * y_all.cols(), 1, y_all.cols()) = y_all.row(r);
    Vec<Scalar> logits = params_.classifier(flat).transpose();
    if (features) *features = std::move(flat);
    return logits;
  }

  Vec<Scalar> forward(const ModelInputs<Scalar>& in, Trace* trace = nullptr) const {
    Trace local;
    auto& t = trace ? *trace : local;
    const Mat<Scalar> x1 = params_.flow_encoder(in.flow_oa, &t.flow_enc[0]);
    const Mat<Scalar> x2 = params_.flow_encoder(in.flow_ao, &t.flow_enc[1]);
    require_finite(x1, "flow_encoder");
    require_finite(x2, "flow_encoder");
    const auto [pos1, pos2] = cmplm_forward(in.dir_oa, in.dir_ao, &t.cmplm);
    require_finite(pos1, "cmplm");
    require_finite(pos2, "cmplm");
    t.cab_out = cab_forward(x1, x2, pos1, pos2, &t.cab);
    require_finite(t.cab_out.y_all, "cab");
    Vec<Scalar> logits = classify_features(t.cab_out.y_all, &t.features);
    require_finite(logits, "classifier");
    return logits;
  }

  Vec<Scalar> forward(const SampleInputs& in) const { return forward(ModelInputs<Scalar>::from(in)); }

  // ---- backward ------------------------------------------------------------

  /// Backward of cab_block_forward. Accumulates into `grad`; returns d input.
  Pair cab_block_backward(const CabParams<Scalar>& p, const CabCache& c, const Pair& grad_out,
                          CabParams<Scalar>& grad) const {
    Pair g_temporal{grad_out.first, grad_out.second};
    Mat<Scalar> g_residual;
    if (cfg_.residual_norm) {
      g_temporal.second = p.temporal.norm.backward(c.temporal_norm, grad_out.second, grad.temporal.norm);
      g_residual = g_temporal.second;
    }
    Pair g_spatial_out = temporal_causal_attention_backward<Scalar>(c.spatial_out, p.temporal.proj, c.temporal,
                                                                    g_temporal, grad.temporal.proj);
    if (cfg_.residual_norm) g_spatial_out.second += g_residual;

    Pair g_attended, g_in;
    for (int t = 0; t < 2; ++t) {
      if (cfg_.residual_norm)
        g_attended[t] = p.spatial.norm.backward(c.spatial_norm[t], g_spatial_out[t], grad.spatial.norm);
      else
        g_attended[t] = g_spatial_out[t];
    }
    g_in = spatial_attention_backward<Scalar>(c.input, masks_, p.spatial.proj, c.spatial, g_attended,
                                              grad.spatial.proj);
    if (cfg_.residual_norm)
      for (int t = 0; t < 2; ++t) g_in[t] += g_attended[t];
    return g_in;
  }

  Pair cab_stack_backward(const std::vector<CabCache>& caches, const Pair& grad_out, Params& grad) const {
    Pair g = grad_out;
    for (auto b = static_cast<int>(params_.cab.size()) - 1; b >= 0; --b)
      g = cab_block_backward(params_.cab[b], caches[b], g, grad.cab[b]);
    return g;
  }

  /// Gradients of (x1', x2', pos1', pos2') given d y_all; accumulates CAB grads.
  std::array<Mat<Scalar>, 4> cab_backward(const CabTrace& trace, const CabOutput& out, const Mat<Scalar>& grad_y_all,
                                          Params& grad) const {
    const Eigen::Index n = out.y_long.rows();
    const Mat<Scalar> g_long = grad_y_all.topRows(n);
    auto [g_for2, g_back2] = causal_relation_mining_backward<Scalar>(out.forward_pair.second, out.backward_pair.second,
                                                                      relation_dk(), trace.relation, g_long);
    const Pair g_for = cab_stack_backward(trace.forward_blocks, {grad_y_all.middleRows(n, n), g_for2}, grad);
    const Pair g_back = cab_stack_backward(trace.backward_blocks, {grad_y_all.bottomRows(n), g_back2}, grad);
    const Mat<Scalar> g_a1 = g_for.first + g_back.second;
    const Mat<Scalar> g_a2 = g_for.second + g_back.first;
    return {g_a1, g_a2, g_a1, g_a2};
  }

  Params backward(const Trace& t, const Vec<Scalar>& grad_logits) const {
    Params grad = params_.zeros_like();
    backward(t, grad_logits, grad);
    return grad;
  }

  /// Accumulating form, for batches.
  void backward(const Trace& t, const Vec<Scalar>& grad_logits, Params& grad) const {
    const Mat<Scalar> g_features =
        params_.classifier.backward(t.features, grad_logits.transpose(), grad.classifier);
    const Eigen::Index d = cfg_.feature_dim;
    Mat<Scalar> g_y_all(t.cab_out.y_all.rows(), d);
    for (Eigen::Index r = 0; r < g_y_all.rows(); ++r) g_y_all.row(r) = g_features.block(0, r * d, 1, d);

    const auto g = cab_backward(t.cab, t.cab_out, g_y_all, grad);
    params_.flow_encoder.backward(t.flow_enc[0], g[0], grad.flow_encoder);
    params_.flow_encoder.backward(t.flow_enc[1], g[1], grad.flow_encoder);

    // CMPLM: pos1' = block(x_pos1 -> x_pos2), pos2' = block(x_pos2 -> x_pos1).
    const auto& c = t.cmplm;
    Mat<Scalar> g_xpos[2] = {Mat<Scalar>::Zero(c.x_pos[0].rows(), d), Mat<Scalar>::Zero(c.x_pos[1].rows(), d)};
    for (int b = 0; b < 2; ++b) {
      const int other = 1 - b;
      auto [gq, gkv] = block_backward(cmplm_block(b), c.x_pos[b], c.x_pos[other], c.block[b], g[2 + b],
                                      grad.cmplm[cmplm_index(b)]);
      g_xpos[b] += gq;
      g_xpos[other] += gkv;
    }
    params_.direction_encoder.backward(c.enc[0], g_xpos[0], grad.direction_encoder);
    params_.direction_encoder.backward(c.enc[1], g_xpos[1], grad.direction_encoder);
  }

 private:
  std::size_t cmplm_index(int branch) const { return params_.cmplm.size() == 1 ? 0 : static_cast<std::size_t>(branch); }
  const AttentionBlock<Scalar>& cmplm_block(int branch) const { return params_.cmplm[cmplm_index(branch)]; }

  Mat<Scalar> block_forward(const AttentionBlock<Scalar>& blk, const Mat<Scalar>& query_src,
                            const Mat<Scalar>& kv_src, BlockCache& c) const {
    Mat<Scalar> attended =
        projected_pseudo_attention<Scalar>(query_src, kv_src, masks_, blk.proj, cfg_.heads, &c.attn);
    if (!cfg_.residual_norm) return attended;
    c.pre_norm = query_src + attended;
    return blk.norm(c.pre_norm, &c.norm);
  }

  std::pair<Mat<Scalar>, Mat<Scalar>> block_backward(const AttentionBlock<Scalar>& blk, const Mat<Scalar>& query_src,
                                                     const Mat<Scalar>& kv_src, const BlockCache& c,
                                                     const Mat<Scalar>& grad_out, AttentionBlock<Scalar>& grad) const {
    Mat<Scalar> g_attended = cfg_.residual_norm ? blk.norm.backward(c.norm, grad_out, grad.norm) : grad_out;
    auto [gq, gkv] = projected_pseudo_attention_backward<Scalar>(query_src, kv_src, masks_, blk.proj, c.attn,
                                                                 g_attended, grad.proj);
    if (cfg_.residual_norm) gq += g_attended;
    return {std::move(gq), std::move(gkv)};
  }

  template <typename Derived>
  static void require_finite(const Eigen::MatrixBase<Derived>& m, const char* layer) {
    if (!m.allFinite()) throw NonFiniteActivation(layer);
  }

  ModelConfig cfg_;
  GridGeometry geom_;
  MaskPair<Scalar> masks_;
  Params params_;
};

}  // namespace causalnet
