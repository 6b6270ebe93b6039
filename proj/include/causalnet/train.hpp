#pragma once

#include "causalnet/model.hpp"

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

namespace causalnet {

class TrainingDiverged : public std::runtime_error {
 public:
  explicit TrainingDiverged(int epoch)
      : std::runtime_error("loss became NaN at epoch " + std::to_string(epoch)), epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

/// Adaptive-moment optimizer over every tensor of a parameter set.
template <typename Scalar>
class Adam {
 public:
  Adam(const CausalNetParams<Scalar>& shape, const TrainConfig& cfg)
      : cfg_(cfg), m_(shape.zeros_like()), v_(shape.zeros_like()) {}

  void step(CausalNetParams<Scalar>& params, const CausalNetParams<Scalar>& grad) {
    ++t_;
    const double bc1 = 1 - std::pow(cfg_.beta1, t_);
    const double bc2 = 1 - std::pow(cfg_.beta2, t_);
    const auto p = tensors(params);
    const auto g = tensors(const_cast<CausalNetParams<Scalar>&>(grad));
    const auto m = tensors(m_);
    const auto v = tensors(v_);
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i]->array() = Scalar(cfg_.beta1) * m[i]->array() + Scalar(1 - cfg_.beta1) * g[i]->array();
      v[i]->array() = Scalar(cfg_.beta2) * v[i]->array() + Scalar(1 - cfg_.beta2) * g[i]->array().square();
      p[i]->array() -= Scalar(cfg_.learning_rate) * (m[i]->array() / Scalar(bc1)) /
                       ((v[i]->array() / Scalar(bc2)).sqrt() + Scalar(cfg_.adam_eps));
    }
  }

 private:
  static std::vector<Mat<Scalar>*> tensors(CausalNetParams<Scalar>& p) {
    std::vector<Mat<Scalar>*> out;
    p.visit([&](const std::string&, Mat<Scalar>& m) { out.push_back(&m); });
    return out;
  }

  TrainConfig cfg_;
  CausalNetParams<Scalar> m_, v_;
  int t_ = 0;
};

struct TrainResult {
  CausalNet<double> model;
  std::vector<double> loss_curve;  // mean training loss per epoch
};

using EpochCallback = std::function<void(int epoch, double loss)>;

/// Mini-batch cross-entropy training. Weight init and batch order derive
/// from `seed` only, so equal (data, config, seed) give equal parameters.
TrainResult train(const std::vector<SampleInputs>& inputs, const std::vector<int>& labels,
                  const ExperimentConfig& cfg, std::uint64_t seed, const EpochCallback& on_epoch = {});

}  // namespace causalnet
