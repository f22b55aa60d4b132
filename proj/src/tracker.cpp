// Copyright (C) 2026 ava-forge contributors
// SPDX-License-Identifier: Apache-2.0

#include "ava_forge/tracker.hpp"

#include <algorithm>

namespace ava {

namespace {

// Cost assigned to pairs that must never be matched. Any feasible cost is at
// most 2 (cosine distance), so everything above kFeasibleLimit is rejected.
constexpr double kInfeasible = 1e5;
constexpr double kFeasibleLimit = kInfeasible / 2;

Eigen::Vector4d corners(const BoundingBox& b) { return {b.x1(), b.y1(), b.x2(), b.y2()}; }

}  // namespace

double appearance_cost(const Track& track, const Eigen::VectorXd& embedding) {
    const double norm = embedding.norm();
    if (!(norm > 0.0)) throw Error(ErrorKind::InvalidArgument, "appearance_cost: zero-norm embedding");
    if (track.gallery.empty()) throw Error(ErrorKind::InvalidArgument, "appearance_cost: empty gallery");
    const Eigen::VectorXd unit = embedding / norm;
    double best = 2.0;
    for (const auto& g : track.gallery) {
        if (g.size() != unit.size())
            throw Error(ErrorKind::InvalidArgument, "appearance_cost: embedding dimension mismatch");
        best = std::min(best, 1.0 - g.dot(unit));
    }
    return std::clamp(best, 0.0, 2.0);
}

double corner_iou(const Eigen::Vector4d& a, const Eigen::Vector4d& b) {
    const double iw = std::min(a[2], b[2]) - std::max(a[0], b[0]);
    const double ih = std::min(a[3], b[3]) - std::max(a[1], b[1]);
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    const double inter = iw * ih;
    const double area_a = (a[2] - a[0]) * (a[3] - a[1]);
    const double area_b = (b[2] - b[0]) * (b[3] - b[1]);
    return inter / (area_a + area_b - inter);
}

Tracker::Tracker(TrackerConfig config) : config_(config) {
    if (config_.max_age < 1 || config_.n_init < 1 || config_.gallery_size < 1)
        throw Error(ErrorKind::InvalidArgument, "tracker: max_age, n_init and gallery size must be >= 1");
}

AssignmentResult Tracker::match(const std::vector<int>& track_idx, const std::vector<int>& det_idx,
                                const std::vector<DetectionRecord>& dets, bool cascade_stage) const {
    const auto rows = static_cast<Eigen::Index>(track_idx.size());
    const auto cols = static_cast<Eigen::Index>(det_idx.size());
    Eigen::MatrixXd cost(rows, cols);

    std::vector<Measurement<double>> zs;
    if (cascade_stage)
        for (int d : det_idx) zs.push_back(to_measurement<double>(dets[d].box));

    for (Eigen::Index r = 0; r < rows; ++r) {
        const Track& t = tracks_[track_idx[r]];
        const Eigen::Vector4d predicted = state_corners(t.state);
        std::vector<double> gate;
        if (cascade_stage) gate = gating_distance(t.state, zs);
        for (Eigen::Index c = 0; c < cols; ++c) {
            const DetectionRecord& d = dets[det_idx[c]];
            double value;
            if (cascade_stage && d.embedding && !t.gallery.empty()) {
                value = appearance_cost(t, *d.embedding);
                if (value > config_.max_cosine_distance) value = kInfeasible;
            } else {
                value = 1.0 - corner_iou(predicted, corners(d.box));
                if (value > config_.max_iou_distance) value = kInfeasible;
            }
            if (cascade_stage && gate[c] > config_.gating_threshold) value = kInfeasible;
            cost(r, c) = value;
        }
    }
    return hungarian_assign(cost, kFeasibleLimit);
}

std::vector<int> Tracker::step(const std::vector<DetectionRecord>& dets) {
    for (auto& t : tracks_) {
        t.state = kalman_predict(t.state);
        ++t.time_since_update;
    }

    std::vector<std::pair<int, int>> matched;  // (track, detection)
    std::vector<char> track_matched(tracks_.size(), false);
    std::vector<int> open_dets(dets.size());
    for (std::size_t i = 0; i < dets.size(); ++i) open_dets[i] = static_cast<int>(i);

    auto apply = [&](const std::vector<int>& track_idx, const AssignmentResult& r) {
        std::vector<char> det_taken(open_dets.size(), false);
        for (auto [row, col] : r.matches) {
            matched.emplace_back(track_idx[row], open_dets[col]);
            track_matched[track_idx[row]] = true;
            det_taken[col] = true;
        }
        std::vector<int> still_open;
        for (std::size_t c = 0; c < open_dets.size(); ++c)
            if (!det_taken[c]) still_open.push_back(open_dets[c]);
        open_dets = std::move(still_open);
    };

    // Matching cascade: confirmed tracks, most recently seen first.
    for (int level = 1; level <= config_.max_age && !open_dets.empty(); ++level) {
        std::vector<int> level_tracks;
        for (std::size_t i = 0; i < tracks_.size(); ++i)
            if (tracks_[i].status == TrackStatus::Confirmed && tracks_[i].time_since_update == level)
                level_tracks.push_back(static_cast<int>(i));
        if (level_tracks.empty()) continue;
        apply(level_tracks, match(level_tracks, open_dets, dets, true));
    }

    // IoU fallback over everything still unmatched.
    std::vector<int> rest;
    for (std::size_t i = 0; i < tracks_.size(); ++i)
        if (!track_matched[i]) rest.push_back(static_cast<int>(i));
    if (!rest.empty() && !open_dets.empty()) apply(rest, match(rest, open_dets, dets, false));

    std::vector<int> ids(dets.size(), -1);
    for (auto [ti, di] : matched) {
        Track& t = tracks_[ti];
        const DetectionRecord& d = dets[di];
        t.state = kalman_update(t.state, to_measurement<double>(d.box));
        ++t.hits;
        t.time_since_update = 0;
        if (d.embedding) {
            t.gallery.push_back(*d.embedding / d.embedding->norm());
            while (t.gallery.size() > config_.gallery_size) t.gallery.pop_front();
        }
        if (t.status == TrackStatus::Tentative && t.hits >= config_.n_init) t.status = TrackStatus::Confirmed;
        ids[di] = t.person_id;
    }

    for (std::size_t i = 0; i < tracks_.size(); ++i) {
        if (track_matched[i]) continue;
        Track& t = tracks_[i];
        if (t.status == TrackStatus::Tentative || t.time_since_update > config_.max_age)
            t.status = TrackStatus::Deleted;
    }

    for (int di : open_dets) {
        const DetectionRecord& d = dets[di];
        Track t;
        t.person_id = next_id_++;
        t.state = kalman_initiate(to_measurement<double>(d.box));
        t.status = config_.n_init <= 1 ? TrackStatus::Confirmed : TrackStatus::Tentative;
        if (d.embedding) t.gallery.push_back(*d.embedding / d.embedding->norm());
        ids[di] = t.person_id;
        tracks_.push_back(std::move(t));
    }

    std::erase_if(tracks_, [](const Track& t) { return t.status == TrackStatus::Deleted; });
    return ids;
}

TrackedKeyframes track_video(const std::vector<KeyframeDetections>& keyframes, const TrackerConfig& config,
                             std::optional<std::pair<int, int>> second_range) {
    TrackedKeyframes out;
    if (keyframes.empty() && !second_range) return out;

    std::string video_id;
    for (std::size_t i = 0; i < keyframes.size(); ++i) {
        const auto& k = keyframes[i].key;
        if (i == 0) video_id = k.video_id();
        if (k.video_id() != video_id)
            throw Error(ErrorKind::InvalidArgument, "track_video: keyframes from more than one video");
        if (i > 0 && !(keyframes[i - 1].key.second() < k.second()))
            throw Error(ErrorKind::InvalidArgument, "track_video: keyframes not strictly sorted by second");
    }
    if (keyframes.empty()) return out;

    int first = keyframes.front().key.second();
    int last = keyframes.back().key.second();
    if (second_range) {
        if (second_range->first > first || second_range->second < last)
            throw Error(ErrorKind::InvalidArgument, "track_video: detections outside the declared second range");
        first = second_range->first;
        last = second_range->second;
    }

    Tracker tracker(config);
    std::size_t next = 0;
    static const std::vector<DetectionRecord> kNone;
    for (int s = first; s <= last; ++s) {
        const bool present = next < keyframes.size() && keyframes[next].key.second() == s;
        const auto& dets = present ? keyframes[next].detections : kNone;
        const auto ids = tracker.step(dets);
        auto& slot = out[KeyframeRef(video_id, s)];
        for (std::size_t i = 0; i < dets.size(); ++i) slot.push_back({dets[i].box, ids[i]});
        if (present) ++next;
    }
    return out;
}

}  // namespace ava
