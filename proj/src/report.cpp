#include "causalnet/report.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

namespace causalnet {

namespace {

Json metrics_obj(const Metrics& m) { return Json{{"UF1", m.uf1}, {"UAR", m.uar}, {"ACC", m.acc}}; }

Json summary_obj(const MetricSummary& s) {
  Json j = metrics_obj(s.mean);
  j["std"] = metrics_obj(s.std);
  j["runs"] = Json::array();
  for (const auto& r : s.runs) j["runs"].push_back(metrics_obj(r));
  return j;
}

const std::array<const char*, 3> kMetricNames{"UF1", "UAR", "ACC"};

double metric_value(const Metrics& m, int k) { return k == 0 ? m.uf1 : k == 1 ? m.uar : m.acc; }
double& metric_ref(Metrics& m, int k) { return k == 0 ? m.uf1 : k == 1 ? m.uar : m.acc; }

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void put(RgbImage& img, int x, int y, std::array<std::uint8_t, 3> c) {
  if (x < 0 || y < 0 || x >= img.cols || y >= img.rows) return;
  std::copy(c.begin(), c.end(), img.at(y, x));
}

void line(RgbImage& img, int x0, int y0, int x1, int y1, std::array<std::uint8_t, 3> c, int thick = 1) {
  const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  for (;;) {
    for (int oy = 0; oy < thick; ++oy)
      for (int ox = 0; ox < thick; ++ox) put(img, x0 + ox - thick / 2, y0 + oy - thick / 2, c);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

}  // namespace

Json config_json(const ExperimentConfig& cfg) {
  Json j = Json::object();
  for (const auto& [k, v] : to_key_values(cfg)) j[k] = v;
  return j;
}

Json metrics_json(const std::string& run_id, const ExperimentConfig& cfg,
                  const std::map<std::string, MetricSummary>& summaries, const std::vector<std::uint64_t>& seeds) {
  Json j;
  j["run_id"] = run_id;
  j["config"] = config_json(cfg);
  j["datasets"] = Json::object();
  for (const auto& [name, s] : summaries) j["datasets"][name] = summary_obj(s);
  j["seeds"] = seeds;
  return j;
}

Json robustness_json(const std::string& run_id, const RobustnessReport& report) {
  Json j;
  j["run_id"] = run_id;
  j["config"] = config_json(report.config);
  j["protocol"] = std::string(to_string(report.options.scope));
  j["key_source"] = report.options.spotting ? "simulated_spotting" : "annotation_noise";
  j["runs"] = report.options.n_runs;
  j["base_seed"] = report.options.base_seed;
  j["reference_rate"] = kReferenceFrameRate;
  j["levels"] = Json::array();
  for (const auto& l : report.levels) {
    Json e;
    e["level"] = l.level;
    e["datasets"] = Json::object();
    for (const auto& [name, s] : l.datasets) e["datasets"][name] = summary_obj(s);
    j["levels"].push_back(std::move(e));
  }
  return j;
}

std::string robustness_csv(const RobustnessReport& report, const std::string& dataset) {
  std::ostringstream out;
  out << "level,metric,mean,std\n";
  for (int k = 0; k < 3; ++k)
    for (const auto& l : report.levels) {
      const auto it = l.datasets.find(dataset);
      if (it == l.datasets.end()) continue;
      out << fmt(l.level) << "," << kMetricNames[k] << "," << fmt(metric_value(it->second.mean, k)) << ","
          << fmt(metric_value(it->second.std, k)) << "\n";
    }
  return out.str();
}

RobustnessReport parse_robustness_csv(std::string_view text, const std::string& dataset) {
  RobustnessReport r;
  std::map<double, LevelResult> by_level;
  std::istringstream in{std::string(text)};
  std::string row;
  int line_no = 0;
  while (std::getline(in, row)) {
    ++line_no;
    if (line_no == 1 || trim(row).empty()) continue;
    const auto cells = split(row, ',');
    if (cells.size() != 4) throw std::invalid_argument("CSV line " + std::to_string(line_no) + ": expected 4 fields");
    const auto k = std::find(kMetricNames.begin(), kMetricNames.end(), cells[1]) - kMetricNames.begin();
    if (k == 3) throw std::invalid_argument("CSV line " + std::to_string(line_no) + ": unknown metric " + cells[1]);
    const double level = std::stod(cells[0]);
    auto& lr = by_level[level];
    lr.level = level;
    auto& s = lr.datasets[dataset];
    metric_ref(s.mean, static_cast<int>(k)) = std::stod(cells[2]);
    metric_ref(s.std, static_cast<int>(k)) = std::stod(cells[3]);
  }
  for (auto& [_, lr] : by_level) r.levels.push_back(std::move(lr));
  return r;
}

RgbImage plot_robustness(const RobustnessReport& report, const std::string& dataset, int width, int height) {
  RgbImage img(height, width);
  std::fill(img.data.begin(), img.data.end(), std::uint8_t{255});
  const int left = 40, right = width - 20, top = 20, bottom = height - 30;
  const std::array<std::uint8_t, 3> black{0, 0, 0}, grid{220, 220, 220};
  for (int q = 0; q <= 4; ++q) {
    const int y = bottom - (bottom - top) * q / 4;
    line(img, left, y, right, y, grid);
    line(img, left - 5, y, left, y, black);
  }
  line(img, left, top, left, bottom, black);
  line(img, left, bottom, right, bottom, black);
  if (report.levels.empty()) return img;

  const double lo = report.levels.front().level, hi = report.levels.back().level;
  auto px = [&](double level) {
    if (hi == lo) return (left + right) / 2;
    return left + static_cast<int>(std::lround((level - lo) / (hi - lo) * (right - left)));
  };
  auto py = [&](double v) {
    return bottom - static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * (bottom - top)));
  };
  for (const auto& l : report.levels) line(img, px(l.level), bottom, px(l.level), bottom + 5, black);

  const std::array<std::array<std::uint8_t, 3>, 3> colors{{{214, 39, 40}, {44, 160, 44}, {31, 119, 180}}};
  for (int k = 0; k < 3; ++k) {
    int prev_x = -1, prev_y = -1;
    for (const auto& l : report.levels) {
      const auto it = l.datasets.find(dataset);
      if (it == l.datasets.end()) continue;
      const int x = px(l.level), y = py(metric_value(it->second.mean, k));
      if (prev_x >= 0) line(img, prev_x, prev_y, x, y, colors[k], 2);
      for (int oy = -3; oy <= 3; ++oy)
        for (int ox = -3; ox <= 3; ++ox) put(img, x + ox, y + oy, colors[k]);
      prev_x = x;
      prev_y = y;
    }
  }
  return img;
}

Json manifest_json(const RunManifest& m) {
  Json j;
  j["run_id"] = m.run_id;
  j["tool_version"] = m.tool_version;
  j["config"] = config_json(m.config);
  j["artifacts"] = Json::object();
  for (const auto& [role, path] : m.artifacts) j["artifacts"][role] = path;
  return j;
}

std::string make_run_id(std::uint64_t seed) {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return std::string(buf) + "-seed" + std::to_string(seed);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string to_text(const Json& j) { return j.dump(2) + "\n"; }

void save_checkpoint(const std::filesystem::path& path, const ExperimentConfig& cfg, const CausalNet<double>& model) {
  std::ostringstream out;
  out << "causalnet-checkpoint 1\n" << dump_config(cfg) << "end-config\n";
  char buf[48];
  model.params().visit([&](const std::string& name, const Mat<double>& m) {
    out << "tensor " << name << " " << m.rows() << " " << m.cols() << "\n";
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        std::snprintf(buf, sizeof buf, "%a", m(r, c));
        out << (c ? " " : "") << buf;
      }
      out << "\n";
    }
  });
  write_text(path, out.str());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  const std::string where = path.string();
  std::string row;
  if (!std::getline(in, row) || row != "causalnet-checkpoint 1") throw IoError(where + ": not a checkpoint");
  std::string cfg_text;
  bool closed = false;
  while (std::getline(in, row)) {
    if (row == "end-config") {
      closed = true;
      break;
    }
    cfg_text += row + "\n";
  }
  if (!closed) throw IoError(where + ": truncated config section");
  const ExperimentConfig cfg = parse_experiment_config(KeyValueFile::parse(cfg_text, where));
  CausalNet<double> model(cfg.model);
  model.params().visit([&](const std::string& name, Mat<double>& m) {
    std::string tag, got;
    Eigen::Index rows = 0, cols = 0;
    if (!(in >> tag >> got >> rows >> cols) || tag != "tensor" || got != name)
      throw IoError(where + ": expected tensor " + name);
    if (rows != m.rows() || cols != m.cols()) throw IoError(where + ": shape mismatch for " + name);
    std::string cell;
    for (Eigen::Index i = 0; i < rows * cols; ++i) {
      if (!(in >> cell)) throw IoError(where + ": truncated tensor " + name);
      m(i / cols, i % cols) = std::strtod(cell.c_str(), nullptr);
    }
  });
  return {cfg, std::move(model)};
}

}  // namespace causalnet
