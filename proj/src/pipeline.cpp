// Copyright (C) 2026 ava-forge contributors
// SPDX-License-Identifier: Apache-2.0

#include "ava_forge/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <json.hpp>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "ava_forge/ava_emit.hpp"
#include "ava_forge/detect_ingest.hpp"
#include "ava_forge/text_util.hpp"
#include "json_util.hpp"

namespace ava {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

void ProjectConfig::validate() const {
    if (clip_length < 1) throw Error(ErrorKind::InvalidArgument, "config: clip_length must be >= 1");
    if (clip_length > 999)
        throw Error(ErrorKind::InvalidArgument, "config: clip_length must fit 3-digit timestamps (<= 999)");
    if (!(score_threshold >= 0.0 && score_threshold <= 1.0))
        throw Error(ErrorKind::InvalidArgument, "config: score_threshold must lie in [0,1]");
    if (jobs < 1) throw Error(ErrorKind::InvalidArgument, "config: jobs must be >= 1");
    std::set<std::string> seen;
    for (const auto& [split, ids] : splits) {
        if (std::find(kSplits.begin(), kSplits.end(), split) == kSplits.end())
            throw Error(ErrorKind::InvalidArgument, "config: unknown split '" + split + "'");
        for (const auto& id : ids)
            if (!seen.insert(id).second)
                throw Error(ErrorKind::InvalidArgument, "config: video '" + id + "' assigned to more than one split");
    }
    if (only_split && std::find(kSplits.begin(), kSplits.end(), *only_split) == kSplits.end())
        throw Error(ErrorKind::InvalidArgument, "--split must be one of train, val, test");
}

LabelMap ProjectConfig::label_map() const {
    if (label_map_file) {
        std::ifstream in(*label_map_file);
        if (!in) throw Error(ErrorKind::Io, "cannot read label map " + label_map_file->string());
        std::stringstream ss;
        ss << in.rdbuf();
        return read_label_map(ss.str());
    }
    return LabelMap::from_names(labels);
}

std::vector<std::string> ProjectConfig::active_splits(const std::vector<std::string>& candidates) const {
    std::vector<std::string> out;
    for (const auto& s : candidates)
        if (!only_split || *only_split == s) out.push_back(s);
    return out;
}

std::optional<std::string> ProjectConfig::split_of(const std::string& video_id) const {
    if (splits.empty()) return std::string("train");
    for (const auto& [split, ids] : splits)
        if (std::find(ids.begin(), ids.end(), video_id) != ids.end()) return split;
    return std::nullopt;
}

ProjectConfig parse_config(const std::string& json_text, const fs::path& base_dir, const ConfigOverrides& overrides) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, std::string("config: malformed JSON: ") + e.what());
    }
    auto resolve = [&](const fs::path& p) { return p.is_absolute() ? p : base_dir / p; };
    ProjectConfig c;
    try {
        c.root = resolve(j.value("root", std::string(".")));
        c.clip_length = j.value("clip_length", 15);
        for (const auto& v : j.value("videos", json::array()))
            c.videos.push_back({v.at("file").get<std::string>(), v.at("duration").get<double>()});
        for (const auto& [split, ids] : detail::object_field(j, "splits").items())
            c.splits[split] = ids.get<std::vector<std::string>>();
        if (j.contains("labels")) c.labels = j.at("labels").get<std::vector<std::string>>();
        if (j.contains("label_map")) c.label_map_file = resolve(j.at("label_map").get<std::string>());
        c.score_threshold = j.value("score_threshold", 0.0);
        if (j.contains("tracker")) {
            const auto& t = j.at("tracker");
            c.tracker.max_age = t.value("max_age", c.tracker.max_age);
            c.tracker.n_init = t.value("n_init", c.tracker.n_init);
            c.tracker.max_iou_distance = t.value("max_iou_distance", c.tracker.max_iou_distance);
            c.tracker.max_cosine_distance = t.value("max_cosine_distance", c.tracker.max_cosine_distance);
            c.tracker.gating_threshold = t.value("gating_threshold", c.tracker.gating_threshold);
            c.tracker.gallery_size = t.value("gallery_size", c.tracker.gallery_size);
        }
        if (j.contains("image_size")) {
            const auto wh = j.at("image_size").get<std::vector<int>>();
            if (wh.size() != 2) throw Error(ErrorKind::InvalidArgument, "config: image_size must be [width, height]");
            c.image_size = ImageSize{wh[0], wh[1]};
        }
        for (const auto& [video, wh] : detail::object_field(j, "image_sizes").items()) {
            const auto v = wh.get<std::vector<int>>();
            if (v.size() != 2) throw Error(ErrorKind::InvalidArgument, "config: image_sizes entries must be [width, height]");
            c.image_sizes[video] = ImageSize{v[0], v[1]};
        }
        for (const auto& [video, secs] : detail::object_field(j, "excluded").items())
            c.excluded[video] = secs.get<std::vector<int>>();
        if (j.contains("ffmpeg")) c.extraction.program = j.at("ffmpeg").get<std::string>();
        c.extraction.jpeg_quality = j.value("jpeg_quality", c.extraction.jpeg_quality);
        c.extraction.scale_width = j.value("scale_width", c.extraction.scale_width);
        c.jobs = j.value("jobs", 1);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, std::string("config: ") + e.what());
    }
    if (const char* env = std::getenv("AVA_FORGE_FFMPEG"); env && *env) c.extraction.program = env;
    if (overrides.root) c.root = *overrides.root;
    if (overrides.split) c.only_split = *overrides.split;
    if (overrides.jobs) c.jobs = *overrides.jobs;
    if (overrides.score_threshold) c.score_threshold = *overrides.score_threshold;
    if (overrides.quoted) c.quoted = true;
    c.validate();
    return c;
}

ProjectConfig load_config(const fs::path& path, const ConfigOverrides& overrides) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot read config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.has_parent_path() ? path.parent_path() : fs::path("."), overrides);
}

// ---------------------------------------------------------------------------
// Helpers

std::optional<ImageSize> read_jpeg_size(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    auto byte = [&]() -> int { return in.get(); };
    if (byte() != 0xFF || byte() != 0xD8) return std::nullopt;
    for (;;) {
        int b = byte();
        while (b == 0xFF) b = byte();
        if (b < 0) return std::nullopt;
        const int marker = b;
        if (marker == 0xD9 || marker == 0xDA) return std::nullopt;
        const int len = (byte() << 8) | byte();
        if (len < 2 || !in) return std::nullopt;
        // SOF0..SOF15 except DHT (C4), JPG (C8) and DAC (CC).
        if (marker >= 0xC0 && marker <= 0xCF && marker != 0xC4 && marker != 0xC8 && marker != 0xCC) {
            byte();  // precision
            const int h = (byte() << 8) | byte();
            const int w = (byte() << 8) | byte();
            if (!in || w <= 0 || h <= 0) return std::nullopt;
            return ImageSize{w, h};
        }
        in.seekg(len - 2, std::ios::cur);
    }
}

namespace {

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot read " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::uint8_t> read_bytes(const fs::path& p) {
    const std::string s = read_text(p);
    return {s.begin(), s.end()};
}

void write_text(const fs::path& p, const std::string& text) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + p.string());
    out << text;
}

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
    write_text(p, std::string(bytes.begin(), bytes.end()));
}

void require(const fs::path& p, const std::string& producer) {
    if (!fs::exists(p))
        throw Error(ErrorKind::MissingPrerequisite, "missing " + p.string() + "; produce it with " + producer);
}

template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), n);
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
}

json plan_to_json(const CommandPlan& p) {
    return {{"program", p.program}, {"args", p.args}, {"output", p.output.string()},
            {"expected_outputs", p.expected_outputs}, {"description", p.description}};
}

CommandPlan plan_from_json(const json& j) {
    CommandPlan p;
    p.program = j.at("program").get<std::string>();
    p.args = j.at("args").get<std::vector<std::string>>();
    p.output = j.at("output").get<std::string>();
    p.expected_outputs = j.at("expected_outputs").get<int>();
    p.description = j.value("description", "");
    return p;
}

struct Stage {
    const ProjectConfig& config;
    RunContext& ctx;
    Layout layout;
    int status = 0;

    void info(const std::string& msg) { ctx.out << msg << '\n'; }
    void warn(const std::string& msg) { ctx.err << "warning: " << msg << '\n'; }
    void error(const std::string& msg) {
        ctx.err << "error: " << msg << '\n';
        status = 1;
    }

    // -- plan-frames / extract ------------------------------------------------

    void plan_frames() {
        json clips = json::array();
        int next_index = 1;
        for (const auto& v : config.videos) {
            const fs::path source = v.file.is_absolute() ? v.file : layout.videos() / v.file;
            const auto plan = plan_segments(source, v.duration, config.clip_length, next_index);
            for (const auto& w : plan.warnings) warn(w);
            for (const auto& clip : plan.clips) {
                const fs::path cropped = layout.video_crop() / (clip.video_id() + ".mp4");
                const ClipSpec from_crop{cropped, clip.clip_index, 0.0, clip.duration};
                clips.push_back({{"video_id", clip.video_id()},
                                 {"source", clip.source_path.string()},
                                 {"start", clip.start_offset},
                                 {"duration", clip.duration},
                                 {"crop", plan_to_json(plan_crop(clip, cropped, config.extraction))},
                                 {"extract", plan_to_json(plan_extraction(from_crop, layout.rawframes() / clip.video_id(),
                                                                          config.extraction))}});
                if (!config.split_of(clip.video_id()))
                    warn("clip " + clip.video_id() + " is not assigned to any split");
            }
            next_index += static_cast<int>(plan.clips.size());
        }
        json doc = {{"clip_length", config.clip_length},
                    {"frames_per_clip", expected_frame_count(config.clip_length)},
                    {"keyframes_per_clip", keyframe_indices(expected_frame_count(config.clip_length)).size()},
                    {"clips", clips}};
        write_text(layout.frame_plan(), doc.dump(2) + "\n");
        info("planned " + std::to_string(clips.size()) + " clips -> " + layout.frame_plan().string());
    }

    void extract() {
        require(layout.frame_plan(), "`ava-forge plan-frames`");
        const json doc = json::parse(read_text(layout.frame_plan()));
        const auto& clips = doc.at("clips");
        const int clip_len = doc.at("clip_length").get<int>();
        std::vector<std::string> problems(clips.size());
        std::vector<std::vector<std::string>> notes(clips.size());
        parallel_for(clips.size(), config.jobs, [&](std::size_t i) {
            const auto& c = clips[i];
            const std::string id = c.at("video_id").get<std::string>();
            auto crop = plan_from_json(c.at("crop"));
            auto extraction = plan_from_json(c.at("extract"));
            crop.program = extraction.program = config.extraction.program;
            fs::create_directories(layout.video_crop());
            if (int rc = ctx.runner(crop); rc != 0) {
                problems[i] = "clip " + id + ": crop failed with exit status " + std::to_string(rc);
                return;
            }
            const fs::path dir = layout.rawframes() / id;
            fs::create_directories(dir);
            if (int rc = ctx.runner(extraction); rc != 0) {
                problems[i] = "clip " + id + ": frame extraction failed with exit status " + std::to_string(rc);
                return;
            }
            std::vector<std::string> listing;
            for (const auto& entry : fs::directory_iterator(dir)) listing.push_back(entry.path().filename().string());
            const auto report = validate_rawframes(listing, clip_len);
            std::size_t errors = 0;
            for (const auto& f : report.findings) {
                const std::string what = (f.kind == FrameFindingKind::Missing ? "missing " : "unexpected ") + f.filename;
                if (f.severity == Severity::Error) ++errors;
                notes[i].push_back((f.severity == Severity::Error ? "E" : "W") + std::string("clip ") + id + ": " + what);
            }
            if (errors) problems[i] = "clip " + id + ": " + std::to_string(errors) + " rawframe problem(s)";
        });
        for (std::size_t i = 0; i < clips.size(); ++i) {
            for (const auto& n : notes[i]) (n[0] == 'E' ? ctx.err << "  " : ctx.err << "warning: ") << n.substr(1) << '\n';
            if (!problems[i].empty()) error(problems[i]);
        }
        info("extracted " + std::to_string(clips.size()) + " clips into " + layout.rawframes().string());
    }

    // -- ingest / track ---------------------------------------------------------

    void ingest() {
        require(layout.raw_detections(), "the external human detector (see README: detection interchange format)");
        auto parsed = parse_detections_text(read_text(layout.raw_detections()));
        for (const auto& w : parsed.warnings) warn(w);
        const auto before = detection_count(parsed.groups);
        const auto kept = filter_by_score(parsed.groups, config.score_threshold);
        for (const auto& [key, g] : kept)
            if (key.second() > config.clip_length)
                throw Error(ErrorKind::InvalidArgument, "detection at " + make_keyframe_key(key) +
                                                            " lies beyond the clip length");
        write_text(layout.keyframes(), write_detections(kept, parsed.header.dim));
        info("ingested " + std::to_string(detection_count(kept)) + " of " + std::to_string(before) + " detections in " +
             std::to_string(kept.size()) + " keyframes -> " + layout.keyframes().string());
    }

    void track() {
        require(layout.keyframes(), "`ava-forge ingest`");
        const auto parsed = parse_detections_text(read_text(layout.keyframes()));
        const auto videos = split_by_video(parsed.groups);
        std::vector<std::pair<std::string, std::vector<KeyframeDetections>>> work(videos.begin(), videos.end());
        std::vector<TrackedKeyframes> results(work.size());
        parallel_for(work.size(), config.jobs, [&](std::size_t i) {
            results[i] = track_video(work[i].second, config.tracker, std::make_pair(0, config.clip_length));
        });
        DetectionGroups out;
        std::size_t people = 0;
        for (const auto& tracked : results) {
            std::set<int> ids;
            for (const auto& [key, boxes] : tracked) {
                KeyframeDetections group{key, {}};
                for (const auto& b : boxes) {
                    group.detections.push_back({key.video_id(), key.second(), b.box, std::nullopt, b.person_id});
                    ids.insert(b.person_id);
                }
                out.emplace(key, std::move(group));
            }
            people += ids.size();
        }
        write_text(layout.tracks(), write_detections(out, 0, true));
        info("tracked " + std::to_string(work.size()) + " videos, " + std::to_string(people) + " person ids -> " +
             layout.tracks().string());
    }

    TrackedKeyframes load_tracked() {
        require(layout.tracks(), "`ava-forge track`");
        const auto parsed = parse_detections_text(read_text(layout.tracks()));
        if (!parsed.header.tracked && !parsed.groups.empty())
            throw Error(ErrorKind::Parse, layout.tracks().string() + " carries no person ids");
        TrackedKeyframes tracked;
        std::set<std::string> videos;
        for (const auto& [key, group] : parsed.groups) {
            videos.insert(key.video_id());
            auto& slot = tracked[key];
            for (const auto& d : group.detections) slot.push_back({d.box, *d.person_id});
        }
        for (const auto& [split, ids] : config.splits) videos.insert(ids.begin(), ids.end());
        for (const auto& v : videos)
            for (int s = 0; s <= config.clip_length; ++s) tracked[KeyframeRef(v, s)];
        return tracked;
    }

    // -- proposals ----------------------------------------------------------------

    void build_proposals() {
        const auto tracked = load_tracked();
        auto build = build_proposal_table(tracked);
        for (const auto& w : build.warnings) warn(w);
        std::map<std::string, ProposalTable> by_split;
        for (const auto& s : kSplits) by_split[s];
        for (auto& [key, rows] : build.table.entries) {
            const auto split = config.split_of(key.video_id());
            if (!split) continue;
            by_split[*split].entries.emplace(key, rows);
        }
        std::set<std::string> unassigned;
        for (const auto& [key, rows] : build.table.entries)
            if (!config.split_of(key.video_id())) unassigned.insert(key.video_id());
        for (const auto& v : unassigned) warn("video " + v + " is in no split; its proposals are not written");
        for (const auto& split : config.active_splits(kSplits)) {
            write_bytes(layout.proposals(split), encode_proposals(by_split[split]));
            info("wrote " + std::to_string(by_split[split].entries.size()) + " keys, " +
                 std::to_string(by_split[split].row_count()) + " proposals -> " + layout.proposals(split).string());
        }
    }

    ProposalTable load_proposals(const std::string& split) {
        require(layout.proposals(split), "`ava-forge build-proposals`");
        const auto bytes = read_bytes(layout.proposals(split));
        return decode_proposals(bytes);
    }

    // -- VIA ----------------------------------------------------------------------

    ImageDims image_dims(const std::set<std::string>& videos) {
        ImageDims dims;
        for (const auto& v : videos) {
            if (auto it = config.image_sizes.find(v); it != config.image_sizes.end()) {
                dims[v] = it->second;
            } else if (auto jpeg = read_jpeg_size(layout.rawframes() / v / frame_filename(1))) {
                dims[v] = *jpeg;
            } else if (config.image_size) {
                dims[v] = *config.image_size;
            } else {
                throw Error(ErrorKind::MissingPrerequisite,
                            "no frame size for video " + v + "; run `ava-forge extract` or set image_size in the config");
            }
        }
        return dims;
    }

    void export_via() {
        const auto labels = config.label_map();
        for (const auto& split : config.active_splits(kAnnotatedSplits)) {
            const auto table = load_proposals(split);
            std::set<std::string> videos;
            for (const auto& [key, rows] : table.entries) videos.insert(key.video_id());
            write_text(layout.via_project(split), export_via_project(table, image_dims(videos), labels));
            info("wrote VIA project for " + split + " (" + std::to_string(table.entries.size()) + " keyframes) -> " +
                 layout.via_project(split).string());
        }
    }

    bool via_pending(std::ostream& os) {
        bool pending = false;
        for (const auto& split : config.active_splits(kAnnotatedSplits)) {
            if (fs::exists(layout.via_annotations(split))) continue;
            pending = true;
            os << "  open " << layout.via_project(split).string() << " in VIA, adjust boxes, tick actions,\n"
               << "  and save the project as " << layout.via_annotations(split).string() << "\n";
        }
        return pending;
    }

    void import_via() {
        const auto labels = config.label_map();
        const auto tracked = load_tracked();
        for (const auto& split : config.active_splits(kAnnotatedSplits)) {
            require(layout.via_annotations(split), "the VIA annotation step on " + layout.via_project(split).string() +
                                                       " (project from `ava-forge export-via`)");
            std::set<std::string> videos;
            for (const auto& [key, b] : tracked)
                if (config.split_of(key.video_id()) == split) videos.insert(key.video_id());
            const auto imported = import_via_export(read_text(layout.via_annotations(split)), labels, image_dims(videos));
            for (const auto& u : imported.unlabeled) warn(split + ": region without actions left out: " + u);
            std::map<std::string, int> counters;
            const auto assigned = assign_person_ids(imported.instances, tracked, counters);
            for (const auto& w : assigned.warnings) warn(split + ": " + w);

            json instances = json::array();
            for (const auto& [inst, pid] : assigned.instances) {
                if (config.split_of(inst.key.video_id()) != split)
                    throw Error(ErrorKind::InvalidArgument, "annotation for video " + inst.key.video_id() +
                                                                " found in the " + split + " project");
                instances.push_back({{"video_id", inst.key.video_id()},
                                     {"second", inst.key.second()},
                                     {"box", {inst.box.x1(), inst.box.y1(), inst.box.x2(), inst.box.y2()}},
                                     {"actions", inst.action_ids},
                                     {"person_id", pid}});
            }
            json excluded = json::array();
            for (const auto& [v, s] : imported.excluded) excluded.push_back({v, s});
            json doc = {{"instances", instances}, {"excluded", excluded}, {"unlabeled", imported.unlabeled}};
            write_text(layout.instances(split), doc.dump(1) + "\n");
            info("imported " + std::to_string(instances.size()) + " annotated people for " + split + " -> " +
                 layout.instances(split).string());
        }
    }

    // -- ground truth and auxiliary files -----------------------------------------

    TimestampSets timestamps_for(const std::string& split, const json* instances_doc) {
        TimestampSets ts = default_timestamps(config.clip_length);
        for (const auto& [video, secs] : config.excluded)
            if (config.split_of(video) == split)
                for (int s : secs) ts.excluded.emplace(video, s);
        if (instances_doc)
            for (const auto& e : instances_doc->at("excluded")) ts.excluded.emplace(e[0].get<std::string>(), e[1].get<int>());
        return ts;
    }

    std::optional<json> load_instances(const std::string& split, bool required) {
        if (!fs::exists(layout.instances(split))) {
            if (required) require(layout.instances(split), "`ava-forge import-via`");
            return std::nullopt;
        }
        return json::parse(read_text(layout.instances(split)));
    }

    void build_gt() {
        const auto labels = config.label_map();
        for (const auto& split : config.active_splits(kAnnotatedSplits)) {
            const auto doc = load_instances(split, true);
            const auto ts = timestamps_for(split, &*doc);
            std::vector<GroundTruthRow> rows;
            for (const auto& inst : doc->at("instances")) {
                const std::string video = inst.at("video_id").get<std::string>();
                const int second = inst.at("second").get<int>();
                const std::string where = video + "," + pad_timestamp(second, 3);
                if (ts.excluded.count({video, second})) continue;
                if (!ts.included.count(second)) {
                    warn(split + ": annotation at " + where + " is outside the included timestamps; skipped");
                    continue;
                }
                const auto c = inst.at("box").get<std::vector<double>>();
                std::optional<BoundingBox> rounded;
                try {
                    double r[4];
                    for (int i = 0; i < 4; ++i) text::parse_double(text::format_fixed(c.at(i), 3), r[i]);
                    rounded.emplace(r[0], r[1], r[2], r[3]);
                } catch (const Error&) {
                    warn(split + ": box at " + where + " collapses at 3-decimal precision; skipped");
                    continue;
                }
                const auto actions = inst.at("actions").get<std::set<int>>();
                for (int a : actions)
                    if (!labels.contains_id(a))
                        throw Error(ErrorKind::InvalidArgument, "action id " + std::to_string(a) + " at " + where +
                                                                    " is not in the label map");
                auto expanded = expand_gt_rows(video, second, *rounded, actions, inst.at("person_id").get<int>());
                rows.insert(rows.end(), expanded.begin(), expanded.end());
            }
            const auto n = rows.size();
            write_text(layout.gt_csv(split),
                       write_gt_csv(std::move(rows), ts, config.quoted ? CsvStyle::Quoted : CsvStyle::Plain));
            info("wrote " + std::to_string(n) + " ground-truth rows -> " + layout.gt_csv(split).string());
        }
    }

    void emit_aux() {
        const auto labels = config.label_map();
        const auto global = default_timestamps(config.clip_length);
        write_text(layout.included(), write_timestamp_lists(global).first);
        for (const auto& split : config.active_splits(kAnnotatedSplits)) {
            const auto doc = load_instances(split, false);
            if (!doc) warn(split + ": no imported annotations yet; exclusions come from the config only");
            const auto ts = timestamps_for(split, doc ? &*doc : nullptr);
            write_text(layout.excluded(split), write_timestamp_lists(ts).second);
        }
        write_text(layout.label_map(), write_label_map(labels));
        info("wrote included/excluded timestamps and " + layout.label_map().string());
    }

    // -- validate -----------------------------------------------------------------

    void validate() {
        std::size_t findings = 0;
        auto report = [&](const std::string& scope, FindingCode code, const std::string& msg) {
            ++findings;
            error(scope + " [" + to_string(code) + "] " + msg);
        };
        auto readable = [&](const fs::path& p, const std::string& producer) {
            if (fs::exists(p)) return true;
            report(p.filename().string(), FindingCode::Unreadable, "missing; produced by " + producer);
            return false;
        };

        LabelMap labels;
        if (readable(layout.label_map(), "`ava-forge emit-aux`")) {
            try {
                labels = read_label_map(read_text(layout.label_map()));
            } catch (const Error& e) {
                report("action_list.pbtxt", FindingCode::Unreadable, e.what());
            }
        }
        std::set<int> included;
        if (readable(layout.included(), "`ava-forge emit-aux`")) {
            try {
                included = read_included_timestamps(read_text(layout.included()));
            } catch (const Error& e) {
                report("included_timestamps.csv", FindingCode::Unreadable, e.what());
            }
        }
        for (const auto& split : config.active_splits(kSplits)) {
            ProposalTable table;
            bool have_table = false;
            if (readable(layout.proposals(split), "`ava-forge build-proposals`")) {
                try {
                    table = decode_proposals(read_bytes(layout.proposals(split)));
                    have_table = true;
                } catch (const Error& e) {
                    report(layout.proposals(split).filename().string(), FindingCode::Unreadable, e.what());
                }
            }
            const bool annotated = std::find(kAnnotatedSplits.begin(), kAnnotatedSplits.end(), split) != kAnnotatedSplits.end();
            if (!annotated) {
                if (have_table) {
                    for (const auto& f : validate_dataset(table, {}, {}, labels))
                        report(split, f.code, f.message);
                }
                continue;
            }
            TimestampSets ts;
            ts.included = included;
            std::vector<GroundTruthRow> rows;
            bool ok = have_table;
            if (readable(layout.excluded(split), "`ava-forge emit-aux`")) {
                try {
                    ts.excluded = read_excluded_timestamps(read_text(layout.excluded(split)));
                } catch (const Error& e) {
                    report(layout.excluded(split).filename().string(), FindingCode::Unreadable, e.what());
                    ok = false;
                }
            } else {
                ok = false;
            }
            if (readable(layout.gt_csv(split), "`ava-forge build-gt`")) {
                try {
                    rows = read_gt_csv(read_text(layout.gt_csv(split)));
                } catch (const Error& e) {
                    report(layout.gt_csv(split).filename().string(), FindingCode::Unreadable, e.what());
                    ok = false;
                }
            } else {
                ok = false;
            }
            if (!ok) continue;
            for (const auto& f : validate_dataset(table, rows, ts, labels)) report(split, f.code, f.message);
            info(split + ": " + std::to_string(table.entries.size()) + " proposal keys, " + std::to_string(rows.size()) +
                 " ground-truth rows checked");
        }
        info(findings == 0 ? "validate: no findings" : "validate: " + std::to_string(findings) + " finding(s)");
    }

    void all() {
        for (auto step : {&Stage::plan_frames, &Stage::extract, &Stage::ingest, &Stage::track, &Stage::build_proposals,
                          &Stage::export_via}) {
            (this->*step)();
            if (status != 0) return;
        }
        std::ostringstream pending;
        if (via_pending(pending)) {
            info("paused for manual annotation:\n" + pending.str() + "then re-run `ava-forge all`.");
            return;
        }
        for (auto step : {&Stage::import_via, &Stage::build_gt, &Stage::emit_aux, &Stage::validate}) {
            (this->*step)();
            if (status != 0) return;
        }
    }
};

}  // namespace

int run_subcommand(const std::string& name, const ProjectConfig& config, RunContext& ctx) {
    if (!ctx.runner) ctx.runner = run_command;
    Stage stage{config, ctx, Layout{config.root}};
    try {
        if (name == "plan-frames") stage.plan_frames();
        else if (name == "extract") stage.extract();
        else if (name == "ingest") stage.ingest();
        else if (name == "track") stage.track();
        else if (name == "build-proposals") stage.build_proposals();
        else if (name == "export-via") stage.export_via();
        else if (name == "import-via") stage.import_via();
        else if (name == "build-gt") stage.build_gt();
        else if (name == "emit-aux") stage.emit_aux();
        else if (name == "validate") stage.validate();
        else if (name == "all") stage.all();
        else throw Error(ErrorKind::InvalidArgument, "unknown subcommand '" + name + "'");
    } catch (const Error& e) {
        stage.error(e.what());
    } catch (const json::exception& e) {
        stage.error(std::string("malformed intermediate file: ") + e.what());
    } catch (const fs::filesystem_error& e) {
        stage.error(e.what());
    }
    return stage.status;
}

}  // namespace ava
