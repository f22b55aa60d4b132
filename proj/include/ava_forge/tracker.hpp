// Copyright (C) 2026 ava-forge contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <deque>
#include <map>
#include <optional>
#include <vector>

#include "ava_forge/core_model.hpp"
#include "ava_forge/detect_ingest.hpp"
#include "ava_forge/hungarian.hpp"
#include "ava_forge/kalman_filter.hpp"

namespace ava {

enum class TrackStatus { Tentative, Confirmed, Deleted };

struct TrackerConfig {
    int max_age = 3;  // keyframes a confirmed track survives unmatched
    int n_init = 3;   // matched keyframes needed for confirmation
    double max_iou_distance = 0.7;
    double max_cosine_distance = 0.2;
    double gating_threshold = kChi2Gate4Dof;
    std::size_t gallery_size = 100;
};

struct Track {
    int person_id = 0;
    KalmanState<double> state;
    TrackStatus status = TrackStatus::Tentative;
    int hits = 1;
    int time_since_update = 0;
    std::deque<Eigen::VectorXd> gallery;  // unit vectors, oldest first
};

/// min over the gallery of (1 - cosine similarity), in [0, 2].
double appearance_cost(const Track& track, const Eigen::VectorXd& embedding);

/// IoU of two corner-form [x1, y1, x2, y2] boxes that need not lie in the unit square.
double corner_iou(const Eigen::Vector4d& a, const Eigen::Vector4d& b);

struct TrackedBox {
    BoundingBox box;
    int person_id;
};

using TrackedKeyframes = std::map<KeyframeRef, std::vector<TrackedBox>>;

/// Per-video multi-object tracker running on keyframes: Kalman motion model,
/// Mahalanobis-gated matching cascade over confirmed tracks, IoU fallback and
/// a tentative -> confirmed -> deleted lifecycle.
class Tracker {
  public:
    explicit Tracker(TrackerConfig config = {});

    /// Advances one keyframe. Returns the person id of every detection, in
    /// input order.
    std::vector<int> step(const std::vector<DetectionRecord>& detections);

    const std::vector<Track>& tracks() const noexcept { return tracks_; }
    int next_id() const noexcept { return next_id_; }
    const TrackerConfig& config() const noexcept { return config_; }

  private:
    AssignmentResult match(const std::vector<int>& track_idx, const std::vector<int>& det_idx,
                           const std::vector<DetectionRecord>& dets, bool cascade_stage) const;

    TrackerConfig config_;
    std::vector<Track> tracks_;
    int next_id_ = 0;
};

/// Runs one fresh tracker over a video's keyframes. Seconds missing from the
/// input (and those in `second_range` outside it) are stepped as empty
/// keyframes; the output has an entry for every second of the covered range.
TrackedKeyframes track_video(const std::vector<KeyframeDetections>& keyframes, const TrackerConfig& config = {},
                             std::optional<std::pair<int, int>> second_range = std::nullopt);

}  // namespace ava
