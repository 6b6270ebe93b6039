#pragma once

#include "causalnet/eval.hpp"
#include "causalnet/image.hpp"
#include "causalnet/model.hpp"
#include "causalnet/model_config.hpp"
#include "causalnet/robustness.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace causalnet {

inline constexpr const char* kToolVersion = "0.1.0";

using Json = nlohmann::ordered_json;

/// Config as an ordered JSON object of strings (same values as dump_config).
Json config_json(const ExperimentConfig& cfg);

/// {run_id, config, datasets:{name:{UF1,UAR,ACC,std:{UF1,UAR,ACC}}}, seeds}.
Json metrics_json(const std::string& run_id, const ExperimentConfig& cfg,
                            const std::map<std::string, MetricSummary>& summaries,
                            const std::vector<std::uint64_t>& seeds);

Json robustness_json(const std::string& run_id, const RobustnessReport& report);

/// One row per (level, metric): "level,metric,mean,std".
std::string robustness_csv(const RobustnessReport& report, const std::string& dataset = kCompositeName);

/// Metric-vs-level line plot, one colored line per metric (UF1 red, UAR
/// green, ACC blue), y axis fixed to [0, 1].
RgbImage plot_robustness(const RobustnessReport& report, const std::string& dataset = kCompositeName,
                         int width = 480, int height = 320);

/// Parses the CSV written by robustness_csv back into a report holding only
/// the named dataset.
RobustnessReport parse_robustness_csv(std::string_view text, const std::string& dataset = kCompositeName);

struct RunManifest {
  std::string run_id;
  ExperimentConfig config;
  std::map<std::string, std::string> artifacts;  // role -> path
  std::string tool_version = kToolVersion;
};

Json manifest_json(const RunManifest& m);

/// Timestamp (UTC, second resolution) plus seed.
std::string make_run_id(std::uint64_t seed);

/// Writes `text` atomically (temp file then rename). Throws IoError.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// Canonical JSON text (2-space indent, trailing newline).
std::string to_text(const Json& j);

/// Text checkpoint: config echo then every parameter tensor in hex floats,
/// so a reload is bit-exact.
void save_checkpoint(const std::filesystem::path& path, const ExperimentConfig& cfg, const CausalNet<double>& model);

struct Checkpoint {
  ExperimentConfig config;
  CausalNet<double> model;
};
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace causalnet
