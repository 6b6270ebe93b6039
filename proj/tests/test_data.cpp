#include "causalnet/config.hpp"
#include "causalnet/data_model.hpp"
#include "causalnet/dataset_io.hpp"
#include "causalnet/image.hpp"
#include "causalnet/model_config.hpp"
#include "causalnet/synth.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>

using namespace causalnet;
namespace fs = std::filesystem;

namespace {

MESample tiny_sample(int length = 10) {
  MESample s;
  s.frames.assign(length, Frame::Zero(32, 32));
  s.keyframes = {2, 4, 6};
  s.subject_id = "s01";
  s.clip_id = "c1";
  return s;
}

bool has_violation(const ValidationResult& r, const std::string& text) {
  return std::any_of(r.violations.begin(), r.violations.end(),
                     [&](const std::string& v) { return v.find(text) != std::string::npos; });
}

fs::path fresh_dir(const std::string& name) {
  const auto p = fs::path(CAUSALNET_TEST_TMP) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

// ---- data model ------------------------------------------------------------------

TEST(Validate, Violations) {
  auto s = tiny_sample();
  EXPECT_TRUE(validate_sample(s).ok());
  s.keyframes = {3, 1, 6};
  EXPECT_TRUE(has_violation(validate_sample(s), "apex < onset"));
  s.keyframes = {2, 4, 10};
  EXPECT_TRUE(has_violation(validate_sample(s), "offset out of range"));
  s.keyframes = {2, 4, 6};
  s.frame_rate = 0;
  EXPECT_TRUE(has_violation(validate_sample(s), "frame_rate"));
  auto empty = tiny_sample(0);
  EXPECT_FALSE(validate_sample(empty).ok());
}

TEST(LabelMap, ShippedTable) {
  const auto m = LabelMapping::load(CAUSALNET_DEFAULT_LABEL_MAP);
  EXPECT_EQ(map_emotion("happiness", m), EmotionClass::positive);
  EXPECT_EQ(map_emotion("surprise", m), EmotionClass::surprise);
  EXPECT_EQ(map_emotion("Disgust", m), EmotionClass::negative);
  for (const char* neg : {"repression", "anger", "contempt", "fear", "sadness"})
    EXPECT_EQ(map_emotion(neg, m), EmotionClass::negative) << neg;
  EXPECT_EQ(map_emotion("others", m), std::nullopt);
  EXPECT_THROW(map_emotion("zzz-unknown", m), UnknownEmotionError);
  EXPECT_EQ(m.table(), LabelMapping::megc2019().table());
}

TEST(LabelMap, ParseErrors) {
  EXPECT_THROW(LabelMapping::parse("joy=ecstatic\n"), ConfigError);
  const auto m = LabelMapping::parse("# comment\njoy = positive\nmeh=excluded\n");
  EXPECT_EQ(m.map("JOY"), EmotionClass::positive);
  EXPECT_EQ(m.map("meh"), std::nullopt);
}

// ---- key=value config ----------------------------------------------------------------

TEST(Config, KeyValueParsing) {
  const auto f = KeyValueFile::parse("# c\na = 1\n\nb=true # trailing\nc=x\n", "t.cfg");
  EXPECT_EQ(f.get_int("a"), 1);
  EXPECT_TRUE(f.get_bool("b"));
  EXPECT_EQ(f.get_string("c"), "x");
  EXPECT_EQ(f.at("c").line, 5);
  try {
    f.get_string("missing");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("missing key 'missing'"), std::string::npos);
  }
  EXPECT_THROW(f.get_double("c"), ConfigError);
  EXPECT_THROW(KeyValueFile::parse("a=1\na=2\n"), ConfigError);
  EXPECT_THROW(KeyValueFile::parse("no equals sign\n"), ConfigError);
}

TEST(Config, DumpParseRoundTrip) {
  for (const auto& cfg : {ExperimentConfig{}, desk_scale_config()}) {
    const auto text = dump_config(cfg);
    const auto back = parse_experiment_config(KeyValueFile::parse(text));
    EXPECT_EQ(dump_config(back), text);
  }
}

TEST(Config, MissingKeyIsNamed) {
  std::string text = dump_config(desk_scale_config());
  const auto pos = text.find("train.epochs=");
  text.erase(pos, text.find('\n', pos) - pos + 1);
  try {
    parse_experiment_config(KeyValueFile::parse(text, "x.cfg"));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("train.epochs"), std::string::npos);
  }
}

TEST(Config, UnknownKeyAndBadValueCarryLine) {
  const std::string base = dump_config(desk_scale_config());
  try {
    parse_experiment_config(KeyValueFile::parse(base + "model.depth=3\n", "x.cfg"));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("x.cfg:28"), std::string::npos) << e.what();
  }
  std::string bad = base;
  const auto pos = bad.find("model.gamma=");
  bad.replace(pos, bad.find('\n', pos) - pos, "model.gamma=-1");
  EXPECT_THROW(parse_experiment_config(KeyValueFile::parse(bad)), ConfigError);
}

// ---- synthetic data ------------------------------------------------------------------

TEST(Synth, BalancedValidDeterministic) {
  const auto a = synth_dataset(5, 12, 7);
  const auto b = synth_dataset(5, 12, 7);
  ASSERT_EQ(a.size(), 60u);
  std::map<EmotionClass, int> counts;
  std::map<std::string, int> subjects;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++counts[a[i].label];
    ++subjects[a[i].subject_id];
    EXPECT_TRUE(validate_sample(a[i]).ok()) << a[i].clip_id;
    EXPECT_EQ(a[i].keyframes, b[i].keyframes);
    ASSERT_EQ(a[i].frames.size(), b[i].frames.size());
    for (std::size_t f = 0; f < a[i].frames.size(); ++f) ASSERT_EQ(a[i].frames[f], b[i].frames[f]);
  }
  for (const auto& [c, n] : counts) EXPECT_EQ(n, 20);
  EXPECT_EQ(subjects.size(), 5u);
  EXPECT_THROW(synth_dataset(1, 12, 7), std::invalid_argument);
}

TEST(Synth, MotionOnlyInsideExpressionWindow) {
  const auto s = synth_dataset(2, 1, 8).front();
  const auto& k = s.keyframes;
  EXPECT_EQ(expression_profile(k, k.onset), 0.0);
  EXPECT_EQ(expression_profile(k, k.offset), 0.0);
  EXPECT_EQ(expression_profile(k, k.onset - 3), 0.0);
  EXPECT_DOUBLE_EQ(expression_profile(k, k.apex), 1.0);
  EXPECT_GT(expression_profile(k, 0.5 * (k.onset + k.apex)), 0.0);
}

TEST(Synth, DistinctSeedsDiffer) {
  const auto a = synth_dataset(2, 2, 1), b = synth_dataset(2, 2, 2);
  EXPECT_NE(a[0].frames[a[0].keyframes.apex], b[0].frames[b[0].keyframes.apex]);
}

// ---- on-disk datasets -----------------------------------------------------------------

TEST(DatasetIo, RoundTrip) {
  const auto dir = fresh_dir("io_roundtrip");
  const auto samples = synth_dataset(2, 3, 11);
  write_dataset(dir, samples);
  const auto back = load_dataset(dir, LabelMapping::megc2019());
  ASSERT_EQ(back.size(), samples.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    const auto& a = samples[i];
    const auto it = std::find_if(back.begin(), back.end(), [&](const MESample& s) {
      return s.subject_id == a.subject_id && s.clip_id == a.clip_id;
    });
    ASSERT_NE(it, back.end());
    EXPECT_EQ(it->keyframes, a.keyframes);
    EXPECT_EQ(it->label, a.label);
    EXPECT_EQ(it->frame_rate, a.frame_rate);
    EXPECT_EQ(it->dataset_id, DatasetId::SYNTH);
    ASSERT_EQ(it->frames.size(), a.frames.size());
    EXPECT_EQ(it->frames[7], a.frames[7]);
  }
  // Key frames are 1-based on disk.
  std::ifstream meta(dir / "SYNTH" / samples[0].subject_id / samples[0].clip_id / "meta.txt");
  std::string text((std::istreambuf_iterator<char>(meta)), {});
  EXPECT_NE(text.find("onset=" + std::to_string(samples[0].keyframes.onset + 1)), std::string::npos);
}

TEST(DatasetIo, ExcludedClipsAreSkippedAndUnknownEmotionFails) {
  const auto dir = fresh_dir("io_excluded");
  auto samples = synth_dataset(2, 2, 12);
  samples[0].raw_emotion = "others";
  write_dataset(dir, samples);
  EXPECT_EQ(load_dataset(dir, LabelMapping::megc2019()).size(), samples.size() - 1);
  samples[1].raw_emotion = "bewildered";
  write_dataset(dir, samples);
  EXPECT_THROW(load_dataset(dir, LabelMapping::megc2019()), UnknownEmotionError);
  EXPECT_THROW(load_dataset(dir / "nope", LabelMapping::megc2019()), IoError);
}

TEST(Image, PngRoundTripAndAreaResize) {
  const auto dir = fresh_dir("png");
  Frame f(5, 7);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 7; ++x) f(y, x) = static_cast<std::uint8_t>(y * 40 + x);
  write_png(dir / "a.png", f);
  EXPECT_EQ(read_png_gray(dir / "a.png"), f);
  EXPECT_THROW(read_png_gray(dir / "missing.png"), IoError);

  Eigen::MatrixXd m(4, 4);
  m << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16;
  Eigen::MatrixXd expected(2, 2);
  expected << 3.5, 5.5, 11.5, 13.5;
  EXPECT_LE((area_resize(m, 2, 2) - expected).cwiseAbs().maxCoeff(), 1e-12);
  const auto w = area_weights(56, 28);
  EXPECT_LE((w.rowwise().sum().array() - 1).abs().maxCoeff(), 1e-12);
}
