// causalnet: synthesize data, train/evaluate with LOSO, sweep key-frame
// noise, and render flow visualizations.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime failure.

#include "causalnet/config.hpp"
#include "causalnet/dataset_io.hpp"
#include "causalnet/eval.hpp"
#include "causalnet/flow.hpp"
#include "causalnet/model_config.hpp"
#include "causalnet/report.hpp"
#include "causalnet/robustness.hpp"
#include "causalnet/synth.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace causalnet;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kRuntime = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::uint64_t seed = 0;
  std::string config;
  std::string out = "runs";
  bool quiet = false;
};

void progress(const Globals& g, const std::string& msg) {
  if (!g.quiet) std::cerr << msg << "\n";
}

ExperimentConfig load_config(const Globals& g) {
  if (g.config.empty()) return desk_scale_config();
  return load_experiment_config(g.config);
}

LabelMapping load_mapping(const std::string& path) {
  if (!path.empty()) return LabelMapping::load(path);
  if (fs::exists(CAUSALNET_DEFAULT_LABEL_MAP)) return LabelMapping::load(CAUSALNET_DEFAULT_LABEL_MAP);
  return LabelMapping::megc2019();
}

std::vector<MESample> load_data(const std::vector<std::string>& roots, const LabelMapping& mapping) {
  std::vector<MESample> all;
  for (const auto& root : roots) {
    if (!fs::exists(root)) throw DataError("data root not found: " + root);
    auto part = load_dataset(root, mapping);
    for (auto& s : part) all.push_back(std::move(s));
  }
  if (all.empty()) throw DataError("no usable clips under the given data roots");
  for (const auto& s : all) {
    const auto v = validate_sample(s);
    if (!v.ok()) throw DataError("clip " + s.clip_id + ": " + v.violations.front());
  }
  return all;
}

std::vector<double> parse_levels(const std::string& text) {
  std::vector<double> levels;
  for (const auto& cell : split(text, ',')) {
    const auto t = trim(cell);
    double v = 0;
    std::size_t used = 0;
    try {
      v = std::stod(t, &used);
    } catch (const std::exception&) {
      throw UsageError("invalid level '" + t + "'");
    }
    if (used != t.size() || !(v >= 0)) throw UsageError("invalid level '" + t + "' (levels must be >= 0)");
    levels.push_back(v);
  }
  if (levels.empty()) throw UsageError("--levels is empty");
  return levels;
}

std::string safe_name(std::string s) {
  for (auto& c : s)
    if (c == '/' || c == '\\') c = '_';
  return s;
}

// ---- commands ------------------------------------------------------------

struct SynthArgs {
  int subjects = 5;
  int per_subject = 12;
  int length = 128;
  int frame_rate = 200;
};

int cmd_synth(const Globals& g, const SynthArgs& a) {
  if (a.subjects < 2) throw UsageError("LOSO requires >= 2 subjects");
  if (a.per_subject < 1) throw UsageError("--per-subject must be >= 1");
  SynthOptions o;
  o.n_subjects = a.subjects;
  o.samples_per_subject = a.per_subject;
  o.seed = g.seed;
  o.length = a.length;
  o.frame_rate = a.frame_rate;
  const auto samples = synth_dataset(o);
  write_dataset(g.out, samples);
  std::map<std::string, int> per_class;
  for (const auto& s : samples) ++per_class[std::string(to_string(s.label))];
  std::cout << "wrote " << samples.size() << " clips (" << a.subjects << " subjects) to " << g.out << "\n";
  for (const auto& [c, n] : per_class) std::cout << "  " << c << ": " << n << "\n";
  return kOk;
}

struct TrainEvalArgs {
  std::vector<std::string> data;
  std::string label_map;
  int runs = 1;
  bool oracle = false;
  bool checkpoints = true;
};

int cmd_train_eval(const Globals& g, const TrainEvalArgs& a) {
  if (a.runs < 1) throw UsageError("--runs must be >= 1");
  const auto cfg = load_config(g);
  const auto samples = load_data(a.data, load_mapping(a.label_map));
  const fs::path out = g.out;
  fs::create_directories(out);

  RunManifest manifest{make_run_id(g.seed), cfg, {}};
  std::vector<std::uint64_t> seeds;
  const auto summaries = repeat_runs(a.runs, g.seed, [&](std::uint64_t seed) {
    seeds.push_back(seed);
    progress(g, "run seed " + std::to_string(seed));
    EvalOptions opts;
    opts.oracle = a.oracle;
    opts.log = [&](const std::string& m) { progress(g, "  " + m); };
    if (a.checkpoints)
      opts.on_fold_trained = [&](const Fold& f, const TrainResult& r) {
        const auto path = out / "checkpoints" / ("seed" + std::to_string(seed) + "_" + safe_name(f.subject) + ".ckpt");
        save_checkpoint(path, cfg, r.model);
        manifest.artifacts["checkpoint:" + std::to_string(seed) + ":" + f.subject] = path.string();
      };
    try {
      return evaluate_cde(samples, cfg, seed, opts).metrics(cfg.model.n_classes);
    } catch (const std::exception& e) {
      throw std::runtime_error("run seed " + std::to_string(seed) + ": " + e.what());
    }
  });

  const auto metrics_path = out / "metrics.json";
  write_text(metrics_path, to_text(metrics_json(manifest.run_id, cfg, summaries, seeds)));
  write_text(out / "config.txt", dump_config(cfg));
  manifest.artifacts["metrics"] = metrics_path.string();
  manifest.artifacts["config"] = (out / "config.txt").string();
  write_text(out / "manifest.json", to_text(manifest_json(manifest)));

  for (const auto& [name, s] : summaries)
    std::printf("%-10s UF1 %.4f (%.4f)  UAR %.4f (%.4f)  ACC %.4f (%.4f)\n", name.c_str(), s.mean.uf1, s.std.uf1,
                s.mean.uar, s.std.uar, s.mean.acc, s.std.acc);
  return kOk;
}

struct RobustnessArgs {
  std::vector<std::string> data;
  std::string label_map;
  std::string levels = "0,10,20,30";
  int runs = 1;
  std::string protocol = "train_and_test";
  bool spotting = false;
  bool oracle = false;
};

int cmd_robustness(const Globals& g, const RobustnessArgs& a) {
  if (a.runs < 1) throw UsageError("--runs must be >= 1");
  SweepOptions opts;
  opts.levels = parse_levels(a.levels);
  opts.n_runs = a.runs;
  opts.base_seed = g.seed;
  try {
    opts.scope = parse_noise_scope(a.protocol);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  opts.spotting = a.spotting;
  opts.oracle = a.oracle;
  opts.log = [&](const std::string& m) { progress(g, m); };
  const auto cfg = load_config(g);
  const auto samples = load_data(a.data, load_mapping(a.label_map));

  const auto report = run_sweep(samples, cfg, opts);
  const fs::path out = g.out;
  RunManifest manifest{make_run_id(g.seed), cfg, {}};
  write_text(out / "robustness.json", to_text(robustness_json(manifest.run_id, report)));
  write_text(out / "robustness.csv", robustness_csv(report));
  write_png(out / "robustness.png", plot_robustness(report));
  write_text(out / "config.txt", dump_config(cfg));
  for (const auto* name : {"robustness.json", "robustness.csv", "robustness.png", "config.txt"})
    manifest.artifacts[name] = (out / name).string();
  write_text(out / "manifest.json", to_text(manifest_json(manifest)));
  std::cout << robustness_csv(report);
  return kOk;
}

int cmd_plot(const std::string& csv, const std::string& png) {
  const auto report = parse_robustness_csv(read_text(csv));
  write_png(png, plot_robustness(report));
  std::cout << "wrote " << png << "\n";
  return kOk;
}

struct VisualizeArgs {
  std::string sample;
  std::string label_map;
  int scale = 8;
};

int cmd_visualize(const Globals& g, const VisualizeArgs& a) {
  const fs::path clip = fs::absolute(a.sample).lexically_normal();
  if (!fs::is_directory(clip)) throw DataError("sample directory not found: " + a.sample);
  const fs::path subject_dir = clip.parent_path();
  DatasetId ds = DatasetId::SYNTH;
  try {
    ds = parse_dataset_id(subject_dir.parent_path().filename().string());
  } catch (const std::exception&) {
    // unknown parent directory names fall back to SYNTH
  }
  const auto sample = load_clip(clip, ds, subject_dir.filename().string(), load_mapping(a.label_map));
  const auto cfg = load_config(g);
  const PyramidalLucasKanade estimator(cfg.flow);
  InputOptions in = cfg.input;
  in.mode = InputMode::full;
  const auto inputs = build_sample_inputs(sample, estimator, in);

  const fs::path out = g.out;
  fs::create_directories(out);
  write_png(out / "direction_onset_apex.png", render_direction_hue(inputs.dir_oa, a.scale));
  write_png(out / "direction_apex_offset.png", render_direction_hue(inputs.dir_ao, a.scale));
  const char* channels[] = {"u", "v", "strain"};
  for (int c = 0; c < 3; ++c) {
    write_png(out / ("flow_onset_apex_" + std::string(channels[c]) + ".png"),
              render_flow_channel(inputs.flow_oa, c, a.scale));
    write_png(out / ("flow_apex_offset_" + std::string(channels[c]) + ".png"),
              render_flow_channel(inputs.flow_ao, c, a.scale));
  }
  std::cout << "wrote visualizations for " << sample.clip_id << " to " << out.string() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CausalNet micro-expression recognition toolkit"};
  app.require_subcommand(0, 1);
  app.fallthrough();
  Globals g;
  bool dump = false;
  app.add_option("--seed", g.seed, "base random seed");
  app.add_option("--config", g.config, "key=value experiment config (default: desk-scale settings)");
  app.add_option("--out", g.out, "output directory");
  app.add_flag("--dump-config", dump, "print the effective configuration and exit");
  app.add_flag("-q,--quiet", g.quiet, "no progress on stderr");

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "write a synthetic dataset");
  synth->add_option("--subjects", sa.subjects, "number of subjects");
  synth->add_option("--per-subject", sa.per_subject, "clips per subject");
  synth->add_option("--length", sa.length, "frames per clip");
  synth->add_option("--frame-rate", sa.frame_rate, "frames per second");

  TrainEvalArgs ta;
  auto* train_eval = app.add_subcommand("train-eval", "LOSO composite evaluation over repeated runs");
  train_eval->add_option("--data", ta.data, "dataset root(s)")->required();
  train_eval->add_option("--label-map", ta.label_map, "emotion -> class table");
  train_eval->add_option("--runs", ta.runs, "independent runs (seeds seed..seed+runs-1)");
  train_eval->add_flag("--oracle-model", ta.oracle, "predict true labels (harness check)");
  train_eval->add_flag("!--no-checkpoints", ta.checkpoints, "skip per-fold checkpoints");

  RobustnessArgs ra;
  auto* robust = app.add_subcommand("robustness", "key-frame noise sweep");
  robust->add_option("--data", ra.data, "dataset root(s)")->required();
  robust->add_option("--label-map", ra.label_map, "emotion -> class table");
  robust->add_option("--levels", ra.levels, "comma-separated noise STDs in frames at 200 fps");
  robust->add_option("--runs", ra.runs, "independent runs per level");
  robust->add_option("--protocol", ra.protocol, "train_and_test or test_only");
  robust->add_flag("--spotting", ra.spotting, "simulate spotted keys (apex +/- 25 frames)");
  robust->add_flag("--oracle-model", ra.oracle, "predict true labels (harness check)");

  std::string plot_csv, plot_png;
  auto* plot = app.add_subcommand("plot", "render a robustness CSV as a PNG line plot");
  plot->add_option("csv", plot_csv, "robustness.csv")->required();
  plot->add_option("png", plot_png, "output PNG")->required();

  VisualizeArgs va;
  auto* visualize = app.add_subcommand("visualize", "flow channels and direction hue maps for one clip");
  visualize->add_option("--sample", va.sample, "clip directory")->required();
  visualize->add_option("--label-map", va.label_map, "emotion -> class table");
  visualize->add_option("--scale", va.scale, "pixel upscale factor");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (dump) {
      std::cout << dump_config(load_config(g));
      return kOk;
    }
    if (*synth) return cmd_synth(g, sa);
    if (*train_eval) return cmd_train_eval(g, ta);
    if (*robust) return cmd_robustness(g, ra);
    if (*plot) return cmd_plot(plot_csv, plot_png);
    if (*visualize) return cmd_visualize(g, va);
    std::cerr << app.help();
    return kUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const ConfigError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const IoError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const UnknownEmotionError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "failed: " << e.what() << "\n";
    return kRuntime;
  }
}
