#include "causalnet/train.hpp"

#include "causalnet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace causalnet {

TrainResult train(const std::vector<SampleInputs>& inputs, const std::vector<int>& labels,
                  const ExperimentConfig& cfg, std::uint64_t seed, const EpochCallback& on_epoch) {
  if (inputs.empty()) throw std::invalid_argument("train: empty training split");
  if (inputs.size() != labels.size()) throw std::invalid_argument("train: inputs and labels differ in length");
  validate(cfg);

  TrainResult result{CausalNet<double>::initialized(cfg.model, mix_seed(seed, 0x1417)), {}};
  auto& net = result.model;
  Adam<double> opt(net.params(), cfg.train);
  std::mt19937_64 shuffle_rng(mix_seed(seed, 0x5a1f1e));

  std::vector<ModelInputs<double>> data;
  data.reserve(inputs.size());
  for (const auto& in : inputs) data.push_back(ModelInputs<double>::from(in));

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  const auto batch = static_cast<std::size_t>(cfg.train.batch_size);
  CausalNet<double>::Trace trace;
  Vec<double> grad_logits;

  for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      auto grad = net.params().zeros_like();
      for (std::size_t k = start; k < end; ++k) {
        const auto i = order[k];
        Vec<double> logits;
        try {
          logits = net.forward(data[i], &trace);
        } catch (const NonFiniteActivation&) {
          throw TrainingDiverged(epoch);
        }
        epoch_loss += cross_entropy<double>(logits, labels[i], &grad_logits);
        net.backward(trace, grad_logits / static_cast<double>(end - start), grad);
      }
      opt.step(net.params(), grad);
    }
    epoch_loss /= static_cast<double>(data.size());
    if (std::isnan(epoch_loss)) throw TrainingDiverged(epoch);
    result.loss_curve.push_back(epoch_loss);
    if (on_epoch) on_epoch(epoch, epoch_loss);
  }
  return result;
}

}  // namespace causalnet
