// Copyright (C) 2026 ava-forge contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ava_forge/frame_plan.hpp"
#include "ava_forge/tracker.hpp"
#include "ava_forge/via_bridge.hpp"

namespace ava {

struct VideoSource {
    std::filesystem::path file;  // relative to <root>/videos unless absolute
    double duration = 0.0;       // seconds
};

inline const std::vector<std::string> kSplits = {"train", "val", "test"};
inline const std::vector<std::string> kAnnotatedSplits = {"train", "val"};

struct ProjectConfig {
    std::filesystem::path root = ".";
    int clip_length = 15;
    std::vector<VideoSource> videos;
    std::map<std::string, std::vector<std::string>> splits;  // split -> clip video ids
    std::vector<std::string> labels;
    std::optional<std::filesystem::path> label_map_file;
    double score_threshold = 0.0;
    TrackerConfig tracker;
    std::optional<ImageSize> image_size;
    ImageDims image_sizes;
    std::map<std::string, std::vector<int>> excluded;
    ExtractionOptions extraction;
    int jobs = 1;
    std::optional<std::string> only_split;
    bool quoted = false;

    void validate() const;
    LabelMap label_map() const;
    std::vector<std::string> active_splits(const std::vector<std::string>& candidates) const;
    std::optional<std::string> split_of(const std::string& video_id) const;
};

struct ConfigOverrides {
    std::optional<std::filesystem::path> root;
    std::optional<std::string> split;
    std::optional<int> jobs;
    std::optional<double> score_threshold;
    bool quoted = false;
};

/// Reads the JSON project file; relative paths resolve against its directory.
/// Overrides win over file values.
ProjectConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {});
ProjectConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir,
                           const ConfigOverrides& overrides = {});

/// Fixed locations inside the dataset root.
struct Layout {
    std::filesystem::path root;

    std::filesystem::path videos() const { return root / "videos"; }
    std::filesystem::path video_crop() const { return root / "video_crop"; }
    std::filesystem::path rawframes() const { return root / "rawframes"; }
    std::filesystem::path annotations() const { return root / "annotations"; }
    std::filesystem::path work() const { return root / "work"; }

    std::filesystem::path frame_plan() const { return work() / "frame_plan.json"; }
    std::filesystem::path raw_detections() const { return work() / "detections.dets"; }
    std::filesystem::path keyframes() const { return work() / "keyframes.dets"; }
    std::filesystem::path tracks() const { return work() / "tracks.dets"; }
    std::filesystem::path via_project(const std::string& split) const { return work() / "via" / (split + "_project.json"); }
    std::filesystem::path via_annotations(const std::string& split) const {
        return work() / "via" / (split + "_annotations.json");
    }
    std::filesystem::path instances(const std::string& split) const { return work() / (split + "_instances.json"); }

    std::filesystem::path proposals(const std::string& split) const {
        return annotations() / ("dense_proposals_" + split + ".pkl");
    }
    std::filesystem::path gt_csv(const std::string& split) const { return annotations() / (split + ".csv"); }
    std::filesystem::path included() const { return annotations() / "included_timestamps.csv"; }
    std::filesystem::path excluded(const std::string& split) const {
        return annotations() / (split + "_excluded_timestamps.csv");
    }
    std::filesystem::path label_map() const { return annotations() / "action_list.pbtxt"; }
};

struct RunContext {
    std::ostream& out;
    std::ostream& err;
    /// Executes external commands; defaults to run_command.
    CommandRunner runner;
};

inline const std::vector<std::string> kSubcommands = {"plan-frames", "extract",  "ingest",  "track",
                                                      "build-proposals", "export-via", "import-via", "build-gt",
                                                      "emit-aux", "validate", "all"};

/// Runs one pipeline stage. Returns 0 iff no error-level findings.
int run_subcommand(const std::string& name, const ProjectConfig& config, RunContext& ctx);

/// Width and height read from a baseline/progressive JPEG header.
std::optional<ImageSize> read_jpeg_size(const std::filesystem::path& path);

}  // namespace ava
