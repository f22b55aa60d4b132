// Copyright (C) 2026 ava-forge contributors
// SPDX-License-Identifier: Apache-2.0

#include "ava_forge/via_bridge.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <json.hpp>

#include "ava_forge/frame_plan.hpp"
#include "ava_forge/hungarian.hpp"
#include "ava_forge/text_util.hpp"
#include "json_util.hpp"

namespace ava {

using nlohmann::json;

namespace {

constexpr int kViaRect = 2;
constexpr int kViaCheckbox = 3;
constexpr const char* kActionAttr = "action";
constexpr const char* kExcludeAttr = "exclude";

const ImageSize& dims_for(const ImageDims& dims, const std::string& video) {
    auto it = dims.find(video);
    if (it == dims.end() || it->second.width <= 0 || it->second.height <= 0)
        throw Error(ErrorKind::InvalidArgument, "no image dimensions for video '" + video + "'");
    return it->second;
}

[[noreturn]] void via_fail(const std::string& msg) { throw Error(ErrorKind::Parse, "VIA document: " + msg); }

double as_number(const json& j, const std::string& what) {
    if (!j.is_number()) via_fail(what + " is not a number");
    return j.get<double>();
}

std::set<int> resolve_actions(const std::vector<std::string>& names, const LabelMap& labels, const std::string& where) {
    std::set<int> ids;
    for (const auto& n : names) {
        const auto id = labels.id_of(n);
        if (!id) throw Error(ErrorKind::Parse, "VIA document: unknown action name '" + n + "' at " + where);
        ids.insert(*id);
    }
    return ids;
}

std::string describe(const KeyframeRef& key, double x, double y, double w, double h) {
    return make_keyframe_key(key) + " rect(" + text::format_shortest(x) + "," + text::format_shortest(y) + "," +
           text::format_shortest(w) + "," + text::format_shortest(h) + ")";
}

ViaImport import_via3(const json& doc, const LabelMap& labels, const ImageDims& dims) {
    ViaImport out;
    const json& attrs = doc.value("attribute", json::object());
    std::string action_aid, exclude_aid;
    for (const auto& [aid, a] : attrs.items()) {
        const std::string name = a.value("aname", "");
        if (name == kActionAttr) action_aid = aid;
        else if (name == kExcludeAttr) exclude_aid = aid;
        else via_fail("unknown attribute name '" + name + "'");
    }

    std::map<std::string, KeyframeRef> file_keys;
    for (const auto& [fid, f] : detail::object_field(doc, "file").items())
        file_keys.emplace(fid, parse_keyframe_image_path(f.value("fname", "")));
    std::map<std::string, KeyframeRef> view_keys;
    for (const auto& [vid, v] : detail::object_field(doc, "view").items()) {
        const auto& fids = v.value("fid_list", json::array());
        if (fids.size() != 1) via_fail("view " + vid + " must reference exactly one file");
        auto it = file_keys.find(fids[0].get<std::string>());
        if (it == file_keys.end()) via_fail("view " + vid + " references a missing file");
        view_keys.emplace(vid, it->second);
    }

    auto option_names = [&](const std::string& aid, const json& value, const std::string& where) {
        std::vector<std::string> names;
        const auto& options = attrs.at(aid).value("options", json::object());
        const std::string csv = value.is_string() ? value.get<std::string>() : "";
        for (auto tok : text::split(csv, ',')) {
            tok = text::trim(tok);
            if (tok.empty()) continue;
            const std::string opt(tok);
            if (!options.contains(opt)) via_fail("option id '" + opt + "' undefined at " + where);
            names.push_back(options.at(opt).get<std::string>());
        }
        return names;
    };

    for (const auto& [mid, m] : detail::object_field(doc, "metadata").items()) {
        const std::string vid = m.value("vid", "");
        auto vk = view_keys.find(vid);
        if (vk == view_keys.end()) via_fail("metadata " + mid + " references a missing view");
        const KeyframeRef& key = vk->second;
        const json& av = m.value("av", json::object());
        for (const auto& [aid, value] : av.items())
            if (aid != action_aid && aid != exclude_aid) via_fail("metadata " + mid + " uses undefined attribute " + aid);

        const json& xy = m.value("xy", json::array());
        if (xy.empty()) {
            if (!exclude_aid.empty() && av.contains(exclude_aid) && !option_names(exclude_aid, av[exclude_aid], mid).empty())
                out.excluded.emplace(key.video_id(), key.second());
            continue;
        }
        if (xy.size() != 5 || as_number(xy[0], "shape id") != kViaRect)
            via_fail("metadata " + mid + " is not a rectangle");
        const double x = as_number(xy[1], "x"), y = as_number(xy[2], "y");
        const double w = as_number(xy[3], "width"), h = as_number(xy[4], "height");
        const auto& size = dims_for(dims, key.video_id());
        const BoundingBox box = normalize_box({x, y, x + w, y + h, size.width, size.height});
        std::vector<std::string> names;
        if (!action_aid.empty() && av.contains(action_aid)) names = option_names(action_aid, av[action_aid], mid);
        auto ids = resolve_actions(names, labels, mid);
        if (ids.empty()) {
            out.unlabeled.push_back(describe(key, x, y, w, h));
            continue;
        }
        out.instances.push_back({key, box, std::move(ids)});
    }
    return out;
}

std::vector<std::string> via2_selected(const json& value) {
    std::vector<std::string> names;
    if (value.is_object()) {
        for (const auto& [name, on] : value.items())
            if ((on.is_boolean() && on.get<bool>()) || (on.is_string() && on.get<std::string>() == "true"))
                names.push_back(name);
    } else if (value.is_string()) {
        for (auto tok : text::split(value.get<std::string>(), ',')) {
            tok = text::trim(tok);
            if (!tok.empty()) names.emplace_back(tok);
        }
    } else if (!value.is_null()) {
        via_fail("unsupported attribute value");
    }
    return names;
}

ViaImport import_via2(const json& images, const LabelMap& labels, const ImageDims& dims) {
    ViaImport out;
    for (const auto& [img_id, img] : images.items()) {
        if (!img.is_object() || !img.contains("filename")) via_fail("entry " + img_id + " has no filename");
        const KeyframeRef key = parse_keyframe_image_path(img.at("filename").get<std::string>());
        for (const auto& [aname, value] : detail::object_field(img, "file_attributes").items()) {
            if (aname != kExcludeAttr) via_fail("unknown file attribute name '" + aname + "'");
            if (!via2_selected(value).empty()) out.excluded.emplace(key.video_id(), key.second());
        }
        const auto& size = dims_for(dims, key.video_id());
        for (const auto& region : img.value("regions", json::array())) {
            const json& shape = region.value("shape_attributes", json::object());
            if (shape.value("name", "") != "rect") via_fail("region on " + img_id + " is not a rectangle");
            const double x = as_number(shape.value("x", json()), "x"), y = as_number(shape.value("y", json()), "y");
            const double w = as_number(shape.value("width", json()), "width");
            const double h = as_number(shape.value("height", json()), "height");
            const BoundingBox box = normalize_box({x, y, x + w, y + h, size.width, size.height});
            std::vector<std::string> names;
            for (const auto& [aname, value] : detail::object_field(region, "region_attributes").items()) {
                if (aname != kActionAttr) via_fail("unknown region attribute name '" + aname + "'");
                names = via2_selected(value);
            }
            auto ids = resolve_actions(names, labels, img_id);
            if (ids.empty()) {
                out.unlabeled.push_back(describe(key, x, y, w, h));
                continue;
            }
            out.instances.push_back({key, box, std::move(ids)});
        }
    }
    return out;
}

}  // namespace

std::string keyframe_image_path(const KeyframeRef& key) {
    return "rawframes/" + key.video_id() + "/" + frame_filename(keyframe_frame_index(key.second()));
}

KeyframeRef parse_keyframe_image_path(const std::string& path) {
    const std::filesystem::path p(path);
    const std::string name = p.filename().string();
    const std::string video = p.parent_path().filename().string();
    int frame = 0;
    if (name.size() != 13 || name.rfind("img_", 0) != 0 || name.substr(9) != ".jpg" ||
        !text::parse_int(std::string_view(name).substr(4, 5), frame))
        via_fail("file name '" + path + "' does not match rawframes/<video>/img_NNNNN.jpg");
    if (frame < 1 || (frame - 1) % 30 != 0) via_fail("frame " + std::to_string(frame) + " is not a keyframe");
    if (!is_valid_video_id(video)) via_fail("cannot read a video id from '" + path + "'");
    return KeyframeRef(video, (frame - 1) / 30);
}

std::string export_via_project(const ProposalTable& proposals, const ImageDims& dims, const LabelMap& labels) {
    json options = json::object();
    for (const auto& e : labels.entries()) options[std::to_string(e.id)] = e.name;

    json doc;
    json vids = json::array();
    json files = json::object(), views = json::object(), metadata = json::object();
    int fid = 0;
    for (const auto& [key, rows] : proposals.entries) {
        const auto& size = dims_for(dims, key.video_id());
        const std::string id = std::to_string(++fid);
        const std::string path = keyframe_image_path(key);
        files[id] = {{"fid", id}, {"fname", path}, {"type", 2}, {"loc", 1}, {"src", path}};
        views[id] = {{"fid_list", json::array({id})}};
        vids.push_back(id);
        for (Eigen::Index r = 0; r < rows.rows(); ++r) {
            const long x = std::lround(rows(r, 0) * size.width);
            const long y = std::lround(rows(r, 1) * size.height);
            const long w = std::lround((rows(r, 2) - rows(r, 0)) * size.width);
            const long h = std::lround((rows(r, 3) - rows(r, 1)) * size.height);
            metadata[id + "_" + pad_timestamp(static_cast<int>(r), 3)] = {
                {"vid", id}, {"flg", 0}, {"z", json::array()},
                {"xy", json::array({kViaRect, x, y, w, h})}, {"av", json::object()}};
        }
    }
    doc["project"] = {{"pid", "__VIA_PROJECT_ID__"},
                      {"rev", "__VIA_PROJECT_REV_ID__"},
                      {"rev_timestamp", "__VIA_PROJECT_REV_TIMESTAMP__"},
                      {"pname", "ava-forge"},
                      {"creator", "ava-forge"},
                      {"created", 0},
                      {"vid_list", vids}};
    doc["config"] = {{"file", {{"loc_prefix", {{"1", ""}, {"2", ""}, {"3", ""}, {"4", ""}}}}},
                     {"ui",
                      {{"file_content_align", "center"},
                       {"file_metadata_editor_visible", true},
                       {"spatial_metadata_editor_visible", true},
                       {"spatial_region_label_attribute_id", ""},
                       {"gtimeline_visible_row_count", "4"}}}};
    doc["attribute"] = {
        {"1",
         {{"aname", kActionAttr}, {"anchor_id", "FILE1_Z0_XY1"}, {"type", kViaCheckbox}, {"desc", "person actions"},
          {"options", options}, {"default_option_id", ""}}},
        {"2",
         {{"aname", kExcludeAttr}, {"anchor_id", "FILE1_Z0_XY0"}, {"type", kViaCheckbox},
          {"desc", "keep this keyframe out of train/val"}, {"options", {{"1", "exclude"}}}, {"default_option_id", ""}}}};
    doc["file"] = files;
    doc["view"] = views;
    doc["metadata"] = metadata;
    return doc.dump(1) + "\n";
}

ViaImport import_via_export(const std::string& document, const LabelMap& labels, const ImageDims& dims) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, std::string("VIA document: malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) via_fail("top level must be an object");
    try {
        if (doc.contains("project") && doc.contains("metadata")) return import_via3(doc, labels, dims);
        if (doc.contains("_via_img_metadata")) return import_via2(doc.at("_via_img_metadata"), labels, dims);
        return import_via2(doc, labels, dims);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, std::string("VIA document: ") + e.what());
    }
}

IdAssignment assign_person_ids(const std::vector<AnnotationInstance>& instances, const TrackedKeyframes& tracked,
                               std::map<std::string, int>& next_id) {
    IdAssignment out;
    std::map<KeyframeRef, std::vector<std::size_t>> by_key;
    for (std::size_t i = 0; i < instances.size(); ++i) by_key[instances[i].key].push_back(i);

    auto counter = [&](const std::string& video) -> int& {
        auto it = next_id.find(video);
        if (it != next_id.end()) return it->second;
        int start = 0;
        for (const auto& [key, boxes] : tracked)
            if (key.video_id() == video)
                for (const auto& b : boxes) start = std::max(start, b.person_id + 1);
        return next_id.emplace(video, start).first->second;
    };

    std::vector<int> ids(instances.size(), -1);
    for (const auto& [key, idx] : by_key) {
        std::vector<TrackedBox> candidates;
        if (auto it = tracked.find(key); it != tracked.end()) candidates = it->second;
        std::stable_sort(candidates.begin(), candidates.end(),
                         [](const TrackedBox& a, const TrackedBox& b) { return a.person_id < b.person_id; });
        Eigen::MatrixXd cost(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(candidates.size()));
        for (std::size_t r = 0; r < idx.size(); ++r)
            for (std::size_t c = 0; c < candidates.size(); ++c)
                cost(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                    1.0 - iou(instances[idx[r]].box, candidates[c].box);
        const auto result = hungarian_assign(cost, 1.0 - kMinIdIou);
        for (auto [r, c] : result.matches) ids[idx[r]] = candidates[c].person_id;
        for (int r : result.unmatched_rows) {
            int& next = counter(key.video_id());
            ids[idx[r]] = next++;
            out.warnings.push_back("annotation at " + make_keyframe_key(key) +
                                   " overlaps no tracked person; assigned new id " + std::to_string(ids[idx[r]]));
        }
    }
    for (std::size_t i = 0; i < instances.size(); ++i) out.instances.push_back({instances[i], ids[i]});
    return out;
}

}  // namespace ava
