#pragma once

#include "causalnet/data_model.hpp"

#include <filesystem>
#include <vector>

namespace causalnet {

// On-disk layout:
//   <root>/<dataset_id>/<subject_id>/<clip_id>/frames/*.png
//   <root>/<dataset_id>/<subject_id>/<clip_id>/meta.txt
// meta.txt is key=value with onset, apex, offset (1-based, as in the
// annotation sheets), emotion and frame_rate.

/// Writes every sample; frame files are named 00001.png, 00002.png, ...
void write_dataset(const std::filesystem::path& root, const std::vector<MESample>& samples);

/// Loads every dataset directory under root (or root itself when it is a
/// dataset directory). Clips whose emotion maps to "excluded" are skipped.
/// Directory traversal is sorted, so the sample order is deterministic.
/// Throws IoError on unreadable files and ConfigError on malformed meta.
std::vector<MESample> load_dataset(const std::filesystem::path& root, const LabelMapping& mapping);

MESample load_clip(const std::filesystem::path& clip_dir, DatasetId dataset, const std::string& subject,
                   const LabelMapping& mapping);

}  // namespace causalnet
