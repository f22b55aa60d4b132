// Copyright (C) 2026 ava-forge contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace ava {

inline constexpr int kExtractionFps = 30;

/// One equal-length clip cut from a source video. clip_index doubles as the
/// clip's video id in the dataset.
struct ClipSpec {
    std::filesystem::path source_path;
    int clip_index = 1;
    double start_offset = 0.0;
    int duration = 0;

    std::string video_id() const { return std::to_string(clip_index); }
    friend bool operator==(const ClipSpec&, const ClipSpec&) = default;
};

struct SegmentPlan {
    std::vector<ClipSpec> clips;
    std::vector<std::string> warnings;
};

struct KeyframeIndex {
    int frame_index;
    int second;
    friend bool operator==(const KeyframeIndex&, const KeyframeIndex&) = default;
};

/// A fully determined external invocation. Nothing here depends on the
/// environment besides `program`.
struct CommandPlan {
    std::string program;
    std::vector<std::string> args;
    std::filesystem::path output;
    int expected_outputs = 0;
    std::string description;

    friend bool operator==(const CommandPlan&, const CommandPlan&) = default;
};

struct ExtractionOptions {
    std::string program = "ffmpeg";
    int jpeg_quality = 2;  // ffmpeg -q:v, 2 is near-lossless
    int scale_width = 0;   // 0 keeps the source resolution
};

enum class FrameFindingKind { Missing, Extra };
enum class Severity { Warning, Error };

struct FrameFinding {
    FrameFindingKind kind;
    Severity severity;
    std::string filename;
};

struct RawframeReport {
    std::vector<FrameFinding> findings;
    bool empty() const noexcept { return findings.empty(); }
    bool has_errors() const;
};

/// 30 frames per second plus the closing frame: 30 * L + 1.
int expected_frame_count(int clip_len_s);

/// Every (30n+1, n) with 30n+1 <= frame_count, ascending.
std::vector<KeyframeIndex> keyframe_indices(int frame_count);

/// Back-to-back clips of clip_len_s from offset 0; a short tail is dropped.
SegmentPlan plan_segments(const std::filesystem::path& source, double source_duration_s, int clip_len_s,
                          int first_index = 1);

/// ffmpeg call cutting the clip out of its source into a standalone file.
CommandPlan plan_crop(const ClipSpec& clip, const std::filesystem::path& out_file,
                      const ExtractionOptions& opts = {});

/// ffmpeg call writing the clip as 30 fps stills img_00001.jpg... into out_dir.
CommandPlan plan_extraction(const ClipSpec& clip, const std::filesystem::path& out_dir,
                            const ExtractionOptions& opts = {});

std::string frame_filename(int frame_index);

RawframeReport validate_rawframes(const std::vector<std::string>& dir_listing, int clip_len_s);

/// Runs a plan without a shell; returns the exit status (127 when the program
/// could not be started).
int run_command(const CommandPlan& plan);

using CommandRunner = std::function<int(const CommandPlan&)>;

}  // namespace ava
