// Copyright (C) 2026 ava-forge contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ava_forge/core_model.hpp"

namespace ava {

/// One detector output at one keyframe. `box.score()` is always set.
struct DetectionRecord {
    std::string video_id;
    int second = 0;
    BoundingBox box;
    std::optional<Eigen::VectorXd> embedding;
    /// Present only in tracked interchange files.
    std::optional<int> person_id;
};

bool operator==(const DetectionRecord& a, const DetectionRecord& b);

struct KeyframeDetections {
    KeyframeRef key;
    std::vector<DetectionRecord> detections;
};

using DetectionGroups = std::map<KeyframeRef, KeyframeDetections>;

enum class CoordMode { Normalized, Pixel };
/// What the second column holds: the keyframe second, or the 1-based frame
/// index which must then lie on the 30n+1 grid.
enum class IndexMode { Second, Frame };

struct DetectionHeader {
    CoordMode coords = CoordMode::Normalized;
    int dim = 0;
    IndexMode index = IndexMode::Second;
    bool tracked = false;
};

struct IngestResult {
    DetectionHeader header;
    DetectionGroups groups;
    std::vector<std::string> warnings;
};

/// Parses the `#dets v1` interchange format:
///
///   #dets v1 coords=<pixel|normalized> dim=<D> [index=<second|frame>] [ids=1]
///   video_id second x1 y1 x2 y2 score [w h] [person_id] [e1 ... eD]
///
/// `w h` appear iff coords=pixel, `person_id` iff ids=1. Errors name the
/// offending line.
IngestResult parse_detections(std::istream& in);
IngestResult parse_detections_text(const std::string& text);

/// Inverse of parse_detections for normalized coordinates. Numbers use the
/// shortest round-trip form so parse(write(x)) == x.
std::string write_detections(const DetectionGroups& groups, int dim, bool with_person_ids = false);

/// Drops detections scoring below `threshold`; empty groups are kept.
DetectionGroups filter_by_score(const DetectionGroups& groups, double threshold);

std::size_t detection_count(const DetectionGroups& groups);

/// Groups of one video, ascending by second.
std::map<std::string, std::vector<KeyframeDetections>> split_by_video(const DetectionGroups& groups);

}  // namespace ava
