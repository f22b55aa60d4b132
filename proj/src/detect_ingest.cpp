// Copyright (C) 2026 ava-forge contributors
// SPDX-License-Identifier: Apache-2.0

#include "ava_forge/detect_ingest.hpp"

#include <istream>
#include <set>
#include <sstream>

#include "ava_forge/text_util.hpp"

namespace ava {

namespace {

[[noreturn]] void fail(std::size_t line_no, const std::string& msg) {
    throw Error(ErrorKind::Parse, "detections line " + std::to_string(line_no) + ": " + msg);
}

DetectionHeader parse_header(std::string_view line, std::size_t line_no) {
    auto tok = text::split_whitespace(line);
    if (tok.size() < 2 || tok[0] != "#dets") fail(line_no, "expected '#dets v1 ...' header");
    if (tok[1] != "v1") fail(line_no, "unsupported schema version '" + std::string(tok[1]) + "'");
    DetectionHeader h;
    bool have_coords = false, have_dim = false;
    for (std::size_t i = 2; i < tok.size(); ++i) {
        auto eq = tok[i].find('=');
        if (eq == std::string_view::npos) fail(line_no, "bad header field '" + std::string(tok[i]) + "'");
        auto key = tok[i].substr(0, eq);
        auto val = tok[i].substr(eq + 1);
        if (key == "coords") {
            if (val == "pixel") h.coords = CoordMode::Pixel;
            else if (val == "normalized") h.coords = CoordMode::Normalized;
            else fail(line_no, "coords must be pixel or normalized");
            have_coords = true;
        } else if (key == "dim") {
            if (!text::parse_int(val, h.dim) || h.dim < 0) fail(line_no, "dim must be a non-negative integer");
            have_dim = true;
        } else if (key == "index") {
            if (val == "second") h.index = IndexMode::Second;
            else if (val == "frame") h.index = IndexMode::Frame;
            else fail(line_no, "index must be second or frame");
        } else if (key == "ids") {
            if (val != "0" && val != "1") fail(line_no, "ids must be 0 or 1");
            h.tracked = val == "1";
        } else {
            fail(line_no, "unknown header field '" + std::string(key) + "'");
        }
    }
    if (!have_coords || !have_dim) fail(line_no, "header must declare coords= and dim=");
    return h;
}

double num(std::string_view tok, std::size_t line_no, const char* what) {
    double v = 0;
    if (!text::parse_double(tok, v)) fail(line_no, std::string("bad ") + what + " '" + std::string(tok) + "'");
    return v;
}

int integer(std::string_view tok, std::size_t line_no, const char* what) {
    int v = 0;
    if (!text::parse_int(tok, v)) fail(line_no, std::string("bad ") + what + " '" + std::string(tok) + "'");
    return v;
}

DetectionRecord parse_record(std::string_view line, std::size_t line_no, const DetectionHeader& h) {
    auto tok = text::split_whitespace(line);
    const std::size_t expected =
        7 + (h.coords == CoordMode::Pixel ? 2 : 0) + (h.tracked ? 1 : 0) + static_cast<std::size_t>(h.dim);
    if (tok.size() != expected)
        fail(line_no, "expected " + std::to_string(expected) + " fields, got " + std::to_string(tok.size()));

    const std::string video_id(tok[0]);
    if (!is_valid_video_id(video_id)) fail(line_no, "invalid video id '" + video_id + "'");
    int second = integer(tok[1], line_no, "second");
    if (second < 0) fail(line_no, "negative second/frame index");
    if (h.index == IndexMode::Frame) {
        if (second < 1 || (second - 1) % 30 != 0)
            fail(line_no, "frame " + std::to_string(second) + " is not on the 30n+1 keyframe grid");
        second = (second - 1) / 30;
    }
    if (second > KeyframeRef::kMaxSecond) fail(line_no, "second exceeds 9999");

    const double x1 = num(tok[2], line_no, "x1"), y1 = num(tok[3], line_no, "y1");
    const double x2 = num(tok[4], line_no, "x2"), y2 = num(tok[5], line_no, "y2");
    const double score = num(tok[6], line_no, "score");
    if (score < 0.0 || score > 1.0) fail(line_no, "score outside [0,1]");

    std::size_t next = 7;
    std::optional<BoundingBox> box;
    try {
        if (h.coords == CoordMode::Pixel) {
            const int w = integer(tok[7], line_no, "frame width");
            const int hh = integer(tok[8], line_no, "frame height");
            next = 9;
            box = normalize_box(PixelBox{x1, y1, x2, y2, w, hh}).with_score(score);
        } else {
            box.emplace(x1, y1, x2, y2, score);
        }
    } catch (const Error& e) {
        fail(line_no, e.what());
    }

    std::optional<int> pid;
    if (h.tracked) {
        pid = integer(tok[next++], line_no, "person id");
        if (*pid < 0) fail(line_no, "negative person id");
    }

    std::optional<Eigen::VectorXd> emb;
    if (h.dim > 0) {
        Eigen::VectorXd e(h.dim);
        for (int i = 0; i < h.dim; ++i) e[i] = num(tok[next + i], line_no, "embedding value");
        if (e.norm() == 0.0) fail(line_no, "zero-norm embedding");
        emb = std::move(e);
    }
    return DetectionRecord{video_id, second, *box, std::move(emb), pid};
}

}  // namespace

bool operator==(const DetectionRecord& a, const DetectionRecord& b) {
    if (a.video_id != b.video_id || a.second != b.second || !(a.box == b.box) || a.person_id != b.person_id)
        return false;
    if (a.embedding.has_value() != b.embedding.has_value()) return false;
    if (!a.embedding) return true;
    return a.embedding->size() == b.embedding->size() && *a.embedding == *b.embedding;
}

IngestResult parse_detections(std::istream& in) {
    IngestResult result;
    std::optional<DetectionHeader> header;
    std::set<std::string> seen;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto line = text::trim(raw);
        if (line.empty()) continue;
        if (!header) {
            header = parse_header(line, line_no);
            continue;
        }
        if (line.front() == '#') fail(line_no, "unexpected comment or second header");
        // Canonicalize whitespace so "duplicate" means duplicate content.
        std::string canon;
        for (auto t : text::split_whitespace(line)) {
            if (!canon.empty()) canon += ' ';
            canon += t;
        }
        if (!seen.insert(canon).second) {
            result.warnings.push_back("line " + std::to_string(line_no) + ": duplicate detection ignored");
            continue;
        }
        auto rec = parse_record(line, line_no, *header);
        KeyframeRef key(rec.video_id, rec.second);
        auto it = result.groups.find(key);
        if (it == result.groups.end()) it = result.groups.emplace(key, KeyframeDetections{key, {}}).first;
        it->second.detections.push_back(std::move(rec));
    }
    if (header) result.header = *header;
    return result;
}

IngestResult parse_detections_text(const std::string& text) {
    std::istringstream in(text);
    return parse_detections(in);
}

std::string write_detections(const DetectionGroups& groups, int dim, bool with_person_ids) {
    std::string out = "#dets v1 coords=normalized dim=" + std::to_string(dim);
    if (with_person_ids) out += " ids=1";
    out += '\n';
    for (const auto& [key, group] : groups) {
        for (const auto& d : group.detections) {
            out += d.video_id + ' ' + std::to_string(d.second);
            for (double v : {d.box.x1(), d.box.y1(), d.box.x2(), d.box.y2(), d.box.score().value_or(1.0)})
                out += ' ' + text::format_shortest(v);
            if (with_person_ids) {
                if (!d.person_id) throw Error(ErrorKind::InvalidArgument, "detection without person id");
                out += ' ' + std::to_string(*d.person_id);
            }
            if (dim > 0) {
                if (!d.embedding || d.embedding->size() != dim)
                    throw Error(ErrorKind::InvalidArgument, "embedding dimension does not match " + std::to_string(dim));
                for (int i = 0; i < dim; ++i) out += ' ' + text::format_shortest((*d.embedding)[i]);
            }
            out += '\n';
        }
    }
    return out;
}

DetectionGroups filter_by_score(const DetectionGroups& groups, double threshold) {
    if (!(threshold >= 0.0 && threshold <= 1.0))
        throw Error(ErrorKind::InvalidArgument, "score threshold must lie in [0,1]");
    DetectionGroups out;
    for (const auto& [key, group] : groups) {
        KeyframeDetections kept{key, {}};
        for (const auto& d : group.detections)
            if (d.box.score().value_or(0.0) >= threshold) kept.detections.push_back(d);
        out.emplace(key, std::move(kept));
    }
    return out;
}

std::size_t detection_count(const DetectionGroups& groups) {
    std::size_t n = 0;
    for (const auto& [key, group] : groups) n += group.detections.size();
    return n;
}

std::map<std::string, std::vector<KeyframeDetections>> split_by_video(const DetectionGroups& groups) {
    std::map<std::string, std::vector<KeyframeDetections>> out;
    for (const auto& [key, group] : groups) out[key.video_id()].push_back(group);
    return out;
}

}  // namespace ava
