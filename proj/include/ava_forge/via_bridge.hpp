// Copyright (C) 2026 ava-forge contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ava_forge/ava_emit.hpp"
#include "ava_forge/core_model.hpp"
#include "ava_forge/tracker.hpp"

namespace ava {

struct ImageSize {
    int width = 0;
    int height = 0;
};

using ImageDims = std::map<std::string, ImageSize>;  // per video id

/// One human-confirmed box with its multi-label actions.
struct AnnotationInstance {
    KeyframeRef key;
    BoundingBox box;
    std::set<int> action_ids;
};

struct ViaImport {
    std::vector<AnnotationInstance> instances;
    /// Regions that carried no action; kept out of `instances` and reported.
    std::vector<std::string> unlabeled;
    /// Keyframes flagged with the file-level "exclude" attribute.
    std::set<std::pair<std::string, int>> excluded;
};

/// "rawframes/<video>/img_<5-digit frame>.jpg" for a keyframe.
std::string keyframe_image_path(const KeyframeRef& key);
/// Inverse of keyframe_image_path; the frame must sit on the 30n+1 grid.
KeyframeRef parse_keyframe_image_path(const std::string& path);

/// VIA3 image-annotation project: one file per proposal key, one rectangle
/// region per proposal row (pixel units), an "action" checkbox attribute over
/// the label map and a file-level "exclude" checkbox.
std::string export_via_project(const ProposalTable& proposals, const ImageDims& dims, const LabelMap& labels);

/// Reads a VIA3 project or a VIA2 region-list export (detected by shape).
ViaImport import_via_export(const std::string& document, const LabelMap& labels, const ImageDims& dims);

struct IdentifiedInstance {
    AnnotationInstance instance;
    int person_id;
};

struct IdAssignment {
    std::vector<IdentifiedInstance> instances;  // input order
    std::vector<std::string> warnings;
};

/// Minimum IoU for an annotated box to inherit a tracked person id.
inline constexpr double kMinIdIou = 0.3;

/// Per keyframe, optimal one-to-one matching of annotated boxes to tracked
/// boxes on 1 - IoU (max 0.7). Unmatched annotations get fresh ids from the
/// per-video counter; a video without a counter starts after its largest
/// tracked id.
IdAssignment assign_person_ids(const std::vector<AnnotationInstance>& instances, const TrackedKeyframes& tracked,
                               std::map<std::string, int>& next_id);

}  // namespace ava
