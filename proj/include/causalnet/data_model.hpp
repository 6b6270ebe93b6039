#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace causalnet {

/// 8-bit grayscale frame, (rows, cols) = (H, W).
using Frame = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

enum class DatasetId { CASME2, SAMM, SMIC, SYNTH };

std::string_view to_string(DatasetId id);
DatasetId parse_dataset_id(std::string_view name);

enum class EmotionClass : int { negative = 0, positive = 1, surprise = 2 };
inline constexpr int kNumClasses = 3;

std::string_view to_string(EmotionClass c);
std::optional<EmotionClass> parse_emotion_class(std::string_view name);

/// 0-based onset/apex/offset frame indexes.
struct KeyFrames {
  int onset = 0;
  int apex = 0;
  int offset = 0;

  friend bool operator==(const KeyFrames&, const KeyFrames&) = default;
};

/// Dense displacement field between two frames, in pixels.
struct FlowField {
  Eigen::MatrixXd u;
  Eigen::MatrixXd v;

  Eigen::Index rows() const { return u.rows(); }
  Eigen::Index cols() const { return u.cols(); }
};

struct PrecomputedFlows {
  FlowField onset_apex;
  FlowField apex_offset;
};

struct MESample {
  std::vector<Frame> frames;
  std::optional<PrecomputedFlows> flows;
  KeyFrames keyframes;
  std::string subject_id;
  std::string clip_id;
  DatasetId dataset_id = DatasetId::SYNTH;
  int frame_rate = 200;
  std::string raw_emotion;
  EmotionClass label = EmotionClass::negative;

  /// Number of frames, or 0 when the clip only carries precomputed flows.
  int length() const { return static_cast<int>(frames.size()); }
};

/// Empty when the sample is valid; otherwise one message per violated invariant.
struct ValidationResult {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

ValidationResult validate_sample(const MESample& sample);

class UnknownEmotionError : public std::runtime_error {
 public:
  explicit UnknownEmotionError(const std::string& raw)
      : std::runtime_error("unknown emotion '" + raw + "'"), raw_(raw) {}
  const std::string& raw() const { return raw_; }

 private:
  std::string raw_;
};

/// Raw emotion string -> composite class. A mapped value of std::nullopt
/// means the clip is excluded from the composite task.
class LabelMapping {
 public:
  LabelMapping() = default;
  explicit LabelMapping(std::map<std::string, std::optional<EmotionClass>> table);

  /// Parses `raw=class` lines, `#` comments. Throws ConfigError on bad lines.
  static LabelMapping parse(std::string_view text);
  static LabelMapping load(const std::filesystem::path& path);
  /// The table shipped in config/label_mapping.txt, compiled in as a fallback.
  static LabelMapping megc2019();

  /// Lookup is case-insensitive. Throws UnknownEmotionError.
  std::optional<EmotionClass> map(std::string_view raw) const;

  const std::map<std::string, std::optional<EmotionClass>>& table() const { return table_; }

 private:
  std::map<std::string, std::optional<EmotionClass>> table_;
};

inline std::optional<EmotionClass> map_emotion(std::string_view raw, const LabelMapping& mapping) {
  return mapping.map(raw);
}

}  // namespace causalnet
