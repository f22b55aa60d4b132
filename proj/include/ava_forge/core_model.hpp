// Copyright (C) 2026 ava-forge contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ava {

enum class ErrorKind {
    InvalidArgument,
    DegenerateBox,
    Overflow,
    Parse,
    Truncated,
    UnknownOpcode,
    RowArity,
    Encoding,
    Numerical,
    Io,
    MissingPrerequisite,
};

/// Every failure raised by the library carries a kind so callers (and tests)
/// can tell them apart without parsing messages.
class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

  private:
    ErrorKind kind_;
};

/// Normalized corner-form box, (0,0) top-left and (1,1) bottom-right of the
/// image. Construction enforces 0 <= x1 < x2 <= 1, 0 <= y1 < y2 <= 1.
class BoundingBox {
  public:
    BoundingBox(double x1, double y1, double x2, double y2, std::optional<double> score = std::nullopt);

    double x1() const noexcept { return x1_; }
    double y1() const noexcept { return y1_; }
    double x2() const noexcept { return x2_; }
    double y2() const noexcept { return y2_; }
    double width() const noexcept { return x2_ - x1_; }
    double height() const noexcept { return y2_ - y1_; }
    double area() const noexcept { return width() * height(); }
    const std::optional<double>& score() const noexcept { return score_; }

    BoundingBox with_score(std::optional<double> score) const { return {x1_, y1_, x2_, y2_, score}; }

    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;

  private:
    double x1_, y1_, x2_, y2_;
    std::optional<double> score_;
};

/// Box in detector pixel space. Coordinates may overshoot the frame; they are
/// clamped by normalize_box.
struct PixelBox {
    double x1, y1, x2, y2;
    int frame_width;
    int frame_height;
};

/// (video_id, second) pair identifying one keyframe.
class KeyframeRef {
  public:
    static constexpr int kMaxSecond = 9999;

    KeyframeRef(std::string video_id, int second);

    const std::string& video_id() const noexcept { return video_id_; }
    int second() const noexcept { return second_; }

    friend auto operator<=>(const KeyframeRef&, const KeyframeRef&) = default;
    friend bool operator==(const KeyframeRef&, const KeyframeRef&) = default;

  private:
    std::string video_id_;
    int second_;
};

struct LabelEntry {
    std::string name;
    int id;
    friend bool operator==(const LabelEntry&, const LabelEntry&) = default;
};

/// Ordered action-name to id map. Ids are positive and strictly increasing,
/// names unique.
class LabelMap {
  public:
    LabelMap() = default;
    explicit LabelMap(std::vector<LabelEntry> entries);

    /// Names numbered 1..n in order.
    static LabelMap from_names(const std::vector<std::string>& names);

    const std::vector<LabelEntry>& entries() const noexcept { return entries_; }
    bool empty() const noexcept { return entries_.empty(); }
    std::size_t size() const noexcept { return entries_.size(); }
    bool contains_id(int id) const;
    std::optional<int> id_of(std::string_view name) const;
    std::optional<std::string> name_of(int id) const;

    friend bool operator==(const LabelMap&, const LabelMap&) = default;

  private:
    std::vector<LabelEntry> entries_;
};

/// Intersection over union; 0 for disjoint boxes.
double iou(const BoundingBox& a, const BoundingBox& b);

BoundingBox normalize_box(const PixelBox& p);

/// Renders "<video_id>,<second padded to 4 digits>".
std::string make_keyframe_key(const KeyframeRef& k);
KeyframeRef parse_keyframe_key(std::string_view key);

std::string pad_timestamp(int second, int width);

/// True when video_id is usable as a key component (non-empty, no comma, no whitespace).
bool is_valid_video_id(std::string_view video_id);

/// Frame index (1-based, 30 fps) of the keyframe for a given second.
constexpr int keyframe_frame_index(int second) { return 30 * second + 1; }

}  // namespace ava
