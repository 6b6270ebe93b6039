#include "causalnet/dataset_io.hpp"

#include "causalnet/config.hpp"
#include "causalnet/image.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

namespace causalnet {

namespace fs = std::filesystem;

namespace {

std::vector<fs::path> sorted_children(const fs::path& dir, bool directories) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (directories ? e.is_directory() : e.is_regular_file()) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool is_dataset_name(const std::string& name) {
  try {
    parse_dataset_id(name);
    return true;
  } catch (const std::invalid_argument&) {
    return false;
  }
}

}  // namespace

void write_dataset(const fs::path& root, const std::vector<MESample>& samples) {
  for (const auto& s : samples) {
    if (s.frames.empty()) throw IoError("write_dataset: clip " + s.clip_id + " has no frames");
    const fs::path clip = root / std::string(to_string(s.dataset_id)) / s.subject_id / s.clip_id;
    fs::create_directories(clip / "frames");
    for (std::size_t i = 0; i < s.frames.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "%05zu.png", i + 1);
      write_png(clip / "frames" / name, s.frames[i]);
    }
    std::ofstream meta(clip / "meta.txt");
    if (!meta) throw IoError("cannot write " + (clip / "meta.txt").string());
    meta << "onset=" << s.keyframes.onset + 1 << "\n"
         << "apex=" << s.keyframes.apex + 1 << "\n"
         << "offset=" << s.keyframes.offset + 1 << "\n"
         << "emotion=" << s.raw_emotion << "\n"
         << "frame_rate=" << s.frame_rate << "\n";
  }
}

MESample load_clip(const fs::path& clip_dir, DatasetId dataset, const std::string& subject,
                   const LabelMapping& mapping) {
  const auto meta = KeyValueFile::load(clip_dir / "meta.txt");
  MESample s;
  s.dataset_id = dataset;
  s.subject_id = subject;
  s.clip_id = clip_dir.filename().string();
  s.keyframes.onset = static_cast<int>(meta.get_int("onset")) - 1;
  s.keyframes.apex = static_cast<int>(meta.get_int("apex")) - 1;
  s.keyframes.offset = static_cast<int>(meta.get_int("offset")) - 1;
  s.frame_rate = static_cast<int>(meta.get_int("frame_rate"));
  s.raw_emotion = meta.get_string("emotion");
  if (const auto cls = mapping.map(s.raw_emotion)) s.label = *cls;
  for (const auto& f : sorted_children(clip_dir / "frames", false)) {
    if (f.extension() == ".png") s.frames.push_back(read_png_gray(f));
  }
  return s;
}

std::vector<MESample> load_dataset(const fs::path& root, const LabelMapping& mapping) {
  if (!fs::is_directory(root)) throw IoError("dataset root " + root.string() + " is not a directory");
  std::vector<fs::path> dataset_dirs;
  if (is_dataset_name(root.filename().string())) {
    dataset_dirs.push_back(root);
  } else {
    for (const auto& d : sorted_children(root, true))
      if (is_dataset_name(d.filename().string())) dataset_dirs.push_back(d);
  }
  if (dataset_dirs.empty()) throw IoError("no dataset directories (CASME2, SAMM, SMIC, SYNTH) under " + root.string());

  std::vector<MESample> out;
  for (const auto& ddir : dataset_dirs) {
    const DatasetId id = parse_dataset_id(ddir.filename().string());
    for (const auto& subject : sorted_children(ddir, true)) {
      for (const auto& clip : sorted_children(subject, true)) {
        if (!fs::exists(clip / "meta.txt")) continue;
        MESample s = load_clip(clip, id, subject.filename().string(), mapping);
        if (!mapping.map(s.raw_emotion)) continue;
        out.push_back(std::move(s));
      }
    }
  }
  return out;
}

}  // namespace causalnet
