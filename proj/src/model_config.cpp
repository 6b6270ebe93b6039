#include "causalnet/model_config.hpp"

#include <cstdio>
#include <cstdlib>
#include <set>
#include <sstream>
#include <stdexcept>

namespace causalnet {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

}  // namespace

std::vector<std::pair<std::string, std::string>> to_key_values(const ExperimentConfig& c) {
  const auto& m = c.model;
  const auto& t = c.train;
  const auto& f = c.flow;
  return {
      {"model.n_classes", std::to_string(m.n_classes)},
      {"model.feature_dim", std::to_string(m.feature_dim)},
      {"model.encoder_c1", std::to_string(m.encoder_c1)},
      {"model.encoder_c2", std::to_string(m.encoder_c2)},
      {"model.heads", std::to_string(m.heads)},
      {"model.gamma", fmt_double(m.gamma)},
      {"model.radius", std::to_string(m.radius)},
      {"model.cab_blocks", std::to_string(m.cab_blocks)},
      {"model.residual_norm", fmt_bool(m.residual_norm)},
      {"model.shared_cmplm", fmt_bool(m.shared_cmplm)},
      {"model.relation_dk", std::to_string(m.relation_dk)},
      {"train.learning_rate", fmt_double(t.learning_rate)},
      {"train.epochs", std::to_string(t.epochs)},
      {"train.batch_size", std::to_string(t.batch_size)},
      {"train.beta1", fmt_double(t.beta1)},
      {"train.beta2", fmt_double(t.beta2)},
      {"train.adam_eps", fmt_double(t.adam_eps)},
      {"input.tau", fmt_double(c.input.tau)},
      {"input.mode", std::string(to_string(c.input.mode))},
      {"flow.levels", std::to_string(f.levels)},
      {"flow.iterations", std::to_string(f.iterations)},
      {"flow.window_radius", std::to_string(f.window_radius)},
      {"flow.window_sigma", fmt_double(f.window_sigma)},
      {"flow.presmooth_sigma", fmt_double(f.presmooth_sigma)},
      {"flow.regularization", fmt_double(f.regularization)},
      {"flow.min_level_side", std::to_string(f.min_level_side)},
  };
}

std::string dump_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "# causalnet experiment configuration\n";
  for (const auto& [k, v] : to_key_values(cfg)) out << k << "=" << v << "\n";
  return out.str();
}

ExperimentConfig parse_experiment_config(const KeyValueFile& file) {
  const ExperimentConfig defaults;
  std::set<std::string> known;
  for (const auto& [k, v] : to_key_values(defaults)) known.insert(k);
  for (const auto& [k, e] : file.entries())
    if (!known.count(k))
      throw ConfigError(file.source() + ":" + std::to_string(e.line) + ": unknown key '" + k + "'");

  auto i = [&](const char* k) { return static_cast<int>(file.get_int(k)); };
  ExperimentConfig c;
  c.model.n_classes = i("model.n_classes");
  c.model.feature_dim = i("model.feature_dim");
  c.model.encoder_c1 = i("model.encoder_c1");
  c.model.encoder_c2 = i("model.encoder_c2");
  c.model.heads = i("model.heads");
  c.model.gamma = file.get_double("model.gamma");
  c.model.radius = i("model.radius");
  c.model.cab_blocks = i("model.cab_blocks");
  c.model.residual_norm = file.get_bool("model.residual_norm");
  c.model.shared_cmplm = file.get_bool("model.shared_cmplm");
  c.model.relation_dk = i("model.relation_dk");
  c.train.learning_rate = file.get_double("train.learning_rate");
  c.train.epochs = i("train.epochs");
  c.train.batch_size = i("train.batch_size");
  c.train.beta1 = file.get_double("train.beta1");
  c.train.beta2 = file.get_double("train.beta2");
  c.train.adam_eps = file.get_double("train.adam_eps");
  c.input.tau = file.get_double("input.tau");
  try {
    c.input.mode = parse_input_mode(file.get_string("input.mode"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(file.source() + ":" + std::to_string(file.at("input.mode").line) + ": " + e.what());
  }
  c.flow.levels = i("flow.levels");
  c.flow.iterations = i("flow.iterations");
  c.flow.window_radius = i("flow.window_radius");
  c.flow.window_sigma = file.get_double("flow.window_sigma");
  c.flow.presmooth_sigma = file.get_double("flow.presmooth_sigma");
  c.flow.regularization = file.get_double("flow.regularization");
  c.flow.min_level_side = i("flow.min_level_side");
  try {
    validate(c);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(file.source() + ": " + e.what());
  }
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return parse_experiment_config(KeyValueFile::load(path));
}

void validate(const ExperimentConfig& c) {
  const auto& m = c.model;
  if (m.n_classes < 2) throw std::invalid_argument("model.n_classes must be >= 2");
  if (m.feature_dim < 1) throw std::invalid_argument("model.feature_dim must be >= 1");
  if (m.encoder_c1 < 1 || m.encoder_c2 < 1) throw std::invalid_argument("encoder channels must be >= 1");
  if (m.heads < 1 || m.feature_dim % m.heads != 0)
    throw std::invalid_argument("model.feature_dim must be divisible by model.heads");
  if (!(m.gamma > 0)) throw std::invalid_argument("model.gamma must be > 0");
  if (m.radius < 0) throw std::invalid_argument("model.radius must be >= 0");
  if (m.cab_blocks < 1) throw std::invalid_argument("model.cab_blocks must be >= 1");
  if (m.relation_dk < 0) throw std::invalid_argument("model.relation_dk must be >= 0");
  const auto& t = c.train;
  if (!(t.learning_rate > 0)) throw std::invalid_argument("train.learning_rate must be > 0");
  if (t.epochs < 1) throw std::invalid_argument("train.epochs must be >= 1");
  if (t.batch_size < 1) throw std::invalid_argument("train.batch_size must be >= 1");
  if (!(c.input.tau >= 0)) throw std::invalid_argument("input.tau must be >= 0");
  if (c.flow.levels < 1 || c.flow.iterations < 1) throw std::invalid_argument("flow levels/iterations must be >= 1");
}

ExperimentConfig desk_scale_config() {
  ExperimentConfig c;
  c.model.feature_dim = 16;
  c.model.encoder_c1 = 8;
  c.model.encoder_c2 = 16;
  c.train.learning_rate = 2e-3;
  c.train.epochs = 60;
  c.train.batch_size = 8;
  return c;
}

}  // namespace causalnet
