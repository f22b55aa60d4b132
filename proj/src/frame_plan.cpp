// Copyright (C) 2026 ava-forge contributors
// SPDX-License-Identifier: Apache-2.0

#include "ava_forge/frame_plan.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "ava_forge/core_model.hpp"

namespace ava {

namespace {

// Offsets are whole or fractional seconds; render without locale or
// trailing-zero noise so argument vectors stay reproducible.
std::string seconds_arg(double s) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", s);
    std::string out(buf);
    while (!out.empty() && out.back() == '0') out.pop_back();
    if (!out.empty() && out.back() == '.') out.pop_back();
    return out;
}

void check_clip(const ClipSpec& clip) {
    if (clip.duration <= 0) throw Error(ErrorKind::InvalidArgument, "clip duration must be positive");
    if (!(clip.start_offset >= 0.0)) throw Error(ErrorKind::InvalidArgument, "clip start offset must be >= 0");
    if (clip.clip_index < 1) throw Error(ErrorKind::InvalidArgument, "clip index must be >= 1");
}

}  // namespace

bool RawframeReport::has_errors() const {
    return std::any_of(findings.begin(), findings.end(),
                       [](const FrameFinding& f) { return f.severity == Severity::Error; });
}

int expected_frame_count(int clip_len_s) {
    if (clip_len_s < 1) throw Error(ErrorKind::InvalidArgument, "clip length must be >= 1 second");
    return kExtractionFps * clip_len_s + 1;
}

std::vector<KeyframeIndex> keyframe_indices(int frame_count) {
    std::vector<KeyframeIndex> out;
    for (int n = 0; keyframe_frame_index(n) <= frame_count; ++n) out.push_back({keyframe_frame_index(n), n});
    return out;
}

SegmentPlan plan_segments(const std::filesystem::path& source, double source_duration_s, int clip_len_s,
                          int first_index) {
    if (clip_len_s < 1) throw Error(ErrorKind::InvalidArgument, "clip length must be >= 1 second");
    if (!(source_duration_s > 0.0) || !std::isfinite(source_duration_s))
        throw Error(ErrorKind::InvalidArgument, "source duration must be positive");
    SegmentPlan plan;
    const auto n = static_cast<long long>(std::floor(source_duration_s / clip_len_s));
    if (n == 0) {
        plan.warnings.push_back(source.string() + ": " + seconds_arg(source_duration_s) +
                                " s is shorter than one " + std::to_string(clip_len_s) + " s clip; skipped");
        return plan;
    }
    for (long long i = 0; i < n; ++i)
        plan.clips.push_back({source, first_index + static_cast<int>(i), static_cast<double>(i * clip_len_s),
                              clip_len_s});
    const double rest = source_duration_s - static_cast<double>(n * clip_len_s);
    if (rest > 0.0)
        plan.warnings.push_back(source.string() + ": trailing " + seconds_arg(rest) + " s dropped");
    return plan;
}

CommandPlan plan_crop(const ClipSpec& clip, const std::filesystem::path& out_file, const ExtractionOptions& opts) {
    check_clip(clip);
    CommandPlan plan;
    plan.program = opts.program;
    plan.args = {"-hide_banner", "-loglevel", "error", "-y",
                 "-ss", seconds_arg(clip.start_offset),
                 "-t", std::to_string(clip.duration),
                 "-i", clip.source_path.string(),
                 "-c:v", "libx264", "-c:a", "aac",
                 out_file.string()};
    plan.output = out_file;
    plan.expected_outputs = 1;
    plan.description = "crop clip " + clip.video_id() + " (" + std::to_string(clip.duration) + " s from " +
                       seconds_arg(clip.start_offset) + " s) to " + out_file.string();
    return plan;
}

CommandPlan plan_extraction(const ClipSpec& clip, const std::filesystem::path& out_dir,
                            const ExtractionOptions& opts) {
    check_clip(clip);
    CommandPlan plan;
    plan.program = opts.program;
    plan.args = {"-hide_banner", "-loglevel", "error", "-y"};
    if (clip.start_offset > 0.0) {
        plan.args.push_back("-ss");
        plan.args.push_back(seconds_arg(clip.start_offset));
    }
    plan.args.insert(plan.args.end(), {"-t", std::to_string(clip.duration), "-i", clip.source_path.string()});
    std::string filter = "fps=" + std::to_string(kExtractionFps);
    if (opts.scale_width > 0) filter += ",scale=" + std::to_string(opts.scale_width) + ":-2";
    plan.args.insert(plan.args.end(), {"-vf", filter, "-q:v", std::to_string(opts.jpeg_quality),
                                       "-start_number", "1", (out_dir / "img_%05d.jpg").string()});
    plan.output = out_dir;
    plan.expected_outputs = expected_frame_count(clip.duration);
    plan.description = "extract " + std::to_string(plan.expected_outputs) + " frames of clip " + clip.video_id() +
                       " to " + out_dir.string();
    return plan;
}

std::string frame_filename(int frame_index) {
    if (frame_index < 1) throw Error(ErrorKind::InvalidArgument, "frame index must be >= 1");
    return "img_" + pad_timestamp(frame_index, 5) + ".jpg";
}

RawframeReport validate_rawframes(const std::vector<std::string>& dir_listing, int clip_len_s) {
    const int n = expected_frame_count(clip_len_s);
    std::set<std::string> expected;
    for (int i = 1; i <= n; ++i) expected.insert(frame_filename(i));
    const std::set<std::string> present(dir_listing.begin(), dir_listing.end());

    RawframeReport report;
    std::vector<std::string> missing;
    std::set_difference(expected.begin(), expected.end(), present.begin(), present.end(),
                        std::back_inserter(missing));
    // Extractors commonly stop one frame short of the closing frame; that alone is a warning.
    const bool off_by_one = missing.size() == 1 && missing.front() == frame_filename(n);
    for (auto& m : missing)
        report.findings.push_back({FrameFindingKind::Missing, off_by_one ? Severity::Warning : Severity::Error, m});
    std::vector<std::string> extra;
    std::set_difference(present.begin(), present.end(), expected.begin(), expected.end(), std::back_inserter(extra));
    for (auto& e : extra) report.findings.push_back({FrameFindingKind::Extra, Severity::Error, e});
    return report;
}

int run_command(const CommandPlan& plan) {
    std::vector<std::string> storage;
    storage.reserve(plan.args.size() + 1);
    storage.push_back(plan.program);
    storage.insert(storage.end(), plan.args.begin(), plan.args.end());
    std::vector<char*> argv;
    for (auto& s : storage) argv.push_back(s.data());
    argv.push_back(nullptr);

    std::fflush(nullptr);
    const pid_t pid = fork();
    if (pid < 0) return 127;
    if (pid == 0) {
        execvp(argv[0], argv.data());
        _exit(127);
    }
    int status = 0;
    if (waitpid(pid, &status, 0) < 0) return 127;
    if (WIFEXITED(status)) return WEXITSTATUS(status);
    return 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
}

}  // namespace ava
