#include "causalnet/data_model.hpp"

#include "causalnet/config.hpp"

#include <algorithm>
#include <cctype>

namespace causalnet {

std::string_view to_string(DatasetId id) {
  switch (id) {
    case DatasetId::CASME2: return "CASME2";
    case DatasetId::SAMM: return "SAMM";
    case DatasetId::SMIC: return "SMIC";
    case DatasetId::SYNTH: return "SYNTH";
  }
  return "?";
}

DatasetId parse_dataset_id(std::string_view name) {
  if (name == "CASME2" || name == "CASME_II" || name == "CASMEII") return DatasetId::CASME2;
  if (name == "SAMM") return DatasetId::SAMM;
  if (name == "SMIC") return DatasetId::SMIC;
  if (name == "SYNTH") return DatasetId::SYNTH;
  throw std::invalid_argument("unknown dataset id '" + std::string(name) + "'");
}

std::string_view to_string(EmotionClass c) {
  switch (c) {
    case EmotionClass::negative: return "negative";
    case EmotionClass::positive: return "positive";
    case EmotionClass::surprise: return "surprise";
  }
  return "?";
}

std::optional<EmotionClass> parse_emotion_class(std::string_view name) {
  if (name == "negative") return EmotionClass::negative;
  if (name == "positive") return EmotionClass::positive;
  if (name == "surprise") return EmotionClass::surprise;
  return std::nullopt;
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool finite_flow(const FlowField& f) { return f.u.allFinite() && f.v.allFinite(); }

}  // namespace

ValidationResult validate_sample(const MESample& sample) {
  ValidationResult result;
  auto& out = result.violations;
  const auto& kf = sample.keyframes;

  if (sample.frame_rate <= 0) out.push_back("frame_rate must be positive");

  if (!sample.flows) {
    if (sample.frames.empty()) {
      out.push_back("frames empty and no precomputed flows");
    } else {
      const auto h = sample.frames.front().rows();
      const auto w = sample.frames.front().cols();
      if (h < 28 || w < 28) out.push_back("frames smaller than 28x28");
      for (const auto& f : sample.frames) {
        if (f.rows() != h || f.cols() != w) {
          out.push_back("frames differ in shape");
          break;
        }
      }
    }
  } else {
    for (const FlowField* f : {&sample.flows->onset_apex, &sample.flows->apex_offset}) {
      if (f->u.rows() != f->v.rows() || f->u.cols() != f->v.cols()) out.push_back("flow u/v shape mismatch");
      if (!finite_flow(*f)) out.push_back("flow contains non-finite values");
    }
  }

  if (kf.onset < 0) out.push_back("onset < 0");
  if (kf.apex < kf.onset) out.push_back("apex < onset");
  if (kf.offset < kf.apex) out.push_back("offset < apex");
  if (!sample.frames.empty() && kf.offset >= sample.length()) out.push_back("offset out of range");

  return result;
}

LabelMapping::LabelMapping(std::map<std::string, std::optional<EmotionClass>> table) {
  for (auto& [k, v] : table) table_.emplace(lower(k), v);
}

LabelMapping LabelMapping::parse(std::string_view text) {
  const auto kv = KeyValueFile::parse(text, "<label mapping>");
  std::map<std::string, std::optional<EmotionClass>> table;
  for (const auto& [raw, entry] : kv.entries()) {
    const std::string cls = lower(entry.value);
    if (cls == "excluded") {
      table.emplace(raw, std::nullopt);
      continue;
    }
    const auto parsed = parse_emotion_class(cls);
    if (!parsed) {
      throw ConfigError("label mapping line " + std::to_string(entry.line) + ": '" + entry.value +
                        "' is not one of negative, positive, surprise, excluded");
    }
    table.emplace(raw, *parsed);
  }
  return LabelMapping(std::move(table));
}

LabelMapping LabelMapping::load(const std::filesystem::path& path) {
  const auto kv = KeyValueFile::load(path);
  std::string text;
  for (const auto& [k, e] : kv.entries()) text += k + "=" + e.value + "\n";
  return parse(text);
}

LabelMapping LabelMapping::megc2019() {
  using E = EmotionClass;
  return LabelMapping({
      {"happiness", E::positive}, {"positive", E::positive},   {"surprise", E::surprise},
      {"negative", E::negative},  {"disgust", E::negative},    {"repression", E::negative},
      {"anger", E::negative},     {"contempt", E::negative},   {"fear", E::negative},
      {"sadness", E::negative},   {"others", std::nullopt},    {"other", std::nullopt},
  });
}

std::optional<EmotionClass> LabelMapping::map(std::string_view raw) const {
  const auto it = table_.find(lower(trim(raw)));
  if (it == table_.end()) throw UnknownEmotionError(std::string(raw));
  return it->second;
}

}  // namespace causalnet
