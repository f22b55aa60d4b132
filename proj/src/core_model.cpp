// Copyright (C) 2026 ava-forge contributors
// SPDX-License-Identifier: Apache-2.0

#include "ava_forge/core_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

namespace ava {

namespace {

bool in_unit(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

std::string fmt_box(double x1, double y1, double x2, double y2) {
    return "(" + std::to_string(x1) + "," + std::to_string(y1) + "," + std::to_string(x2) + "," +
           std::to_string(y2) + ")";
}

}  // namespace

BoundingBox::BoundingBox(double x1, double y1, double x2, double y2, std::optional<double> score)
    : x1_(x1), y1_(y1), x2_(x2), y2_(y2), score_(score) {
    if (!in_unit(x1) || !in_unit(y1) || !in_unit(x2) || !in_unit(y2))
        throw Error(ErrorKind::InvalidArgument, "box coordinates outside [0,1]: " + fmt_box(x1, y1, x2, y2));
    if (!(x1 < x2) || !(y1 < y2))
        throw Error(ErrorKind::DegenerateBox, "degenerate box " + fmt_box(x1, y1, x2, y2));
    if (score && !in_unit(*score))
        throw Error(ErrorKind::InvalidArgument, "box score outside [0,1]: " + std::to_string(*score));
}

bool is_valid_video_id(std::string_view video_id) {
    if (video_id.empty()) return false;
    return std::none_of(video_id.begin(), video_id.end(), [](char c) {
        return c == ',' || c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
    });
}

KeyframeRef::KeyframeRef(std::string video_id, int second) : video_id_(std::move(video_id)), second_(second) {
    if (!is_valid_video_id(video_id_))
        throw Error(ErrorKind::InvalidArgument, "invalid video id '" + video_id_ + "'");
    if (second_ < 0) throw Error(ErrorKind::InvalidArgument, "negative second " + std::to_string(second_));
    if (second_ > kMaxSecond)
        throw Error(ErrorKind::Overflow, "second " + std::to_string(second_) + " does not fit 4 digits");
}

LabelMap::LabelMap(std::vector<LabelEntry> entries) : entries_(std::move(entries)) {
    std::set<std::string> names;
    int prev = 0;
    for (const auto& e : entries_) {
        if (e.name.empty()) throw Error(ErrorKind::InvalidArgument, "empty label name");
        if (e.id <= prev)
            throw Error(ErrorKind::InvalidArgument,
                        "label ids must be positive and strictly increasing (at '" + e.name + "')");
        if (!names.insert(e.name).second) throw Error(ErrorKind::InvalidArgument, "duplicate label name '" + e.name + "'");
        prev = e.id;
    }
}

LabelMap LabelMap::from_names(const std::vector<std::string>& names) {
    std::vector<LabelEntry> entries;
    entries.reserve(names.size());
    for (std::size_t i = 0; i < names.size(); ++i) entries.push_back({names[i], static_cast<int>(i) + 1});
    return LabelMap(std::move(entries));
}

bool LabelMap::contains_id(int id) const {
    return std::any_of(entries_.begin(), entries_.end(), [id](const LabelEntry& e) { return e.id == id; });
}

std::optional<int> LabelMap::id_of(std::string_view name) const {
    for (const auto& e : entries_)
        if (e.name == name) return e.id;
    return std::nullopt;
}

std::optional<std::string> LabelMap::name_of(int id) const {
    for (const auto& e : entries_)
        if (e.id == id) return e.name;
    return std::nullopt;
}

double iou(const BoundingBox& a, const BoundingBox& b) {
    const double iw = std::min(a.x2(), b.x2()) - std::max(a.x1(), b.x1());
    const double ih = std::min(a.y2(), b.y2()) - std::max(a.y1(), b.y1());
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    const double inter = iw * ih;
    return inter / (a.area() + b.area() - inter);
}

BoundingBox normalize_box(const PixelBox& p) {
    if (p.frame_width <= 0 || p.frame_height <= 0)
        throw Error(ErrorKind::InvalidArgument, "frame dimensions must be positive");
    if (!std::isfinite(p.x1) || !std::isfinite(p.y1) || !std::isfinite(p.x2) || !std::isfinite(p.y2))
        throw Error(ErrorKind::InvalidArgument, "non-finite pixel coordinate");
    const double w = p.frame_width;
    const double h = p.frame_height;
    const double x1 = std::clamp(p.x1, 0.0, w) / w;
    const double y1 = std::clamp(p.y1, 0.0, h) / h;
    const double x2 = std::clamp(p.x2, 0.0, w) / w;
    const double y2 = std::clamp(p.y2, 0.0, h) / h;
    if (!(x1 < x2) || !(y1 < y2))
        throw Error(ErrorKind::DegenerateBox, "box degenerate after clamping to the frame " + fmt_box(x1, y1, x2, y2));
    return BoundingBox(x1, y1, x2, y2);
}

std::string pad_timestamp(int second, int width) {
    if (width <= 0) throw Error(ErrorKind::InvalidArgument, "pad width must be positive");
    if (second < 0) throw Error(ErrorKind::InvalidArgument, "negative timestamp " + std::to_string(second));
    std::string digits = std::to_string(second);
    if (static_cast<int>(digits.size()) > width)
        throw Error(ErrorKind::Overflow,
                    "timestamp " + digits + " does not fit " + std::to_string(width) + " digits");
    return std::string(width - digits.size(), '0') + digits;
}

std::string make_keyframe_key(const KeyframeRef& k) { return k.video_id() + "," + pad_timestamp(k.second(), 4); }

KeyframeRef parse_keyframe_key(std::string_view key) {
    const auto comma = key.find(',');
    if (comma == std::string_view::npos || key.find(',', comma + 1) != std::string_view::npos)
        throw Error(ErrorKind::Parse, "keyframe key must contain exactly one comma: '" + std::string(key) + "'");
    const auto digits = key.substr(comma + 1);
    if (digits.size() != 4) throw Error(ErrorKind::Parse, "keyframe second must be 4 digits: '" + std::string(key) + "'");
    int second = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), second);
    if (ec != std::errc{} || ptr != digits.data() + digits.size())
        throw Error(ErrorKind::Parse, "bad keyframe second in '" + std::string(key) + "'");
    return KeyframeRef(std::string(key.substr(0, comma)), second);
}

}  // namespace ava
