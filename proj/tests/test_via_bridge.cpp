// Copyright (C) 2026 ava-forge contributors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <json.hpp>
#include <random>

#include "ava_forge/via_bridge.hpp"

using namespace ava;
using nlohmann::json;

namespace {

const LabelMap kLabels = LabelMap::from_names({"action1", "action2", "action3", "action4", "action5", "action6"});
const ImageDims kVga = {{"1", {640, 480}}, {"2", {640, 480}}};

ProposalTable one_row(const std::string& video, int second, double x1, double y1, double x2, double y2) {
    ProposalTable t;
    ProposalRows r(1, 5);
    r << x1, y1, x2, y2, 0.9;
    t.entries[KeyframeRef(video, second)] = r;
    return t;
}

BoundingBox span(double x1, double x2) { return BoundingBox(x1, 0.1, x2, 0.9); }

}  // namespace

TEST_CASE("keyframe image paths") {
    CHECK(keyframe_image_path(KeyframeRef("1", 2)) == "rawframes/1/img_00061.jpg");
    CHECK(keyframe_image_path(KeyframeRef("abc", 0)) == "rawframes/abc/img_00001.jpg");
    CHECK(parse_keyframe_image_path("rawframes/1/img_00061.jpg") == KeyframeRef("1", 2));
    CHECK_THROWS_AS(parse_keyframe_image_path("rawframes/1/img_00062.jpg"), Error);
    CHECK_THROWS_AS(parse_keyframe_image_path("rawframes/1/frame.jpg"), Error);
}

TEST_CASE("export layout") {
    ProposalTable t;
    ProposalRows rows(5, 5);
    rows << 0.670, 0.264, 0.928, 0.835, 0.330391,  //
        0.265, 0.164, 0.942, 0.866, 0.990325,      //
        0.000, 0.259, 0.180, 0.886, 0.229031,      //
        0.126, 0.352, 0.403, 0.848, 0.985255,      //
        0.142, 0.214, 0.634, 0.886, 0.053679;
    t.entries[KeyframeRef("1", 2)] = rows;
    const json doc = json::parse(export_via_project(t, kVga, kLabels));
    REQUIRE(doc["file"].size() == 1);
    CHECK(doc["file"]["1"]["fname"] == "rawframes/1/img_00061.jpg");
    CHECK(doc["metadata"].size() == 5);
    for (const auto& [mid, m] : doc["metadata"].items()) CHECK(m["vid"] == "1");
    const auto& options = doc["attribute"]["1"]["options"];
    CHECK(options.size() == 6);
    CHECK(options["6"] == "action6");

    const json full = json::parse(export_via_project(one_row("1", 2, 0, 0, 1, 1), kVga, kLabels));
    CHECK(full["metadata"].begin().value()["xy"] == json::array({2, 0, 0, 640, 480}));

    CHECK_THROWS_AS(export_via_project(one_row("zzz", 2, 0, 0, 1, 1), kVga, kLabels), Error);
    CHECK(export_via_project(t, kVga, kLabels) == export_via_project(t, kVga, kLabels));
}

TEST_CASE("import selected actions") {
    json doc = json::parse(export_via_project(one_row("1", 2, 0.114, 0.353, 0.401, 0.848), kVga, kLabels));
    doc["metadata"].begin().value()["av"] = {{"1", "1,6"}};
    const auto imp = import_via_export(doc.dump(), kLabels, kVga);
    REQUIRE(imp.instances.size() == 1);
    CHECK(imp.instances[0].action_ids == std::set<int>{1, 6});
    CHECK(imp.instances[0].key == KeyframeRef("1", 2));
    CHECK(imp.unlabeled.empty());
}

TEST_CASE("import pixel conversion") {
    const ImageDims square = {{"1", {1000, 1000}}};
    json doc = json::parse(export_via_project(one_row("1", 2, 0.1, 0.1, 0.2, 0.2), square, kLabels));
    auto& m = doc["metadata"].begin().value();
    m["xy"] = json::array({2, 114, 353, 287, 495});
    m["av"] = {{"1", "1"}};
    const auto imp = import_via_export(doc.dump(), kLabels, square);
    REQUIRE(imp.instances.size() == 1);
    CHECK(imp.instances[0].box == BoundingBox(0.114, 0.353, 0.401, 0.848));
}

TEST_CASE("import edge cases") {
    CHECK(import_via_export(export_via_project({}, kVga, kLabels), kLabels, kVga).instances.empty());
    CHECK(import_via_export("{}", kLabels, kVga).instances.empty());
    CHECK_THROWS_AS(import_via_export("{not json", kLabels, kVga), Error);

    json doc = json::parse(export_via_project(one_row("1", 2, 0.1, 0.1, 0.5, 0.5), kVga, kLabels));
    const auto unlabeled = import_via_export(doc.dump(), kLabels, kVga);
    CHECK(unlabeled.instances.empty());
    CHECK(unlabeled.unlabeled.size() == 1);

    json renamed = doc;
    renamed["attribute"]["1"]["aname"] = "activity";
    CHECK_THROWS_AS(import_via_export(renamed.dump(), kLabels, kVga), Error);

    json excluded = doc;
    excluded["metadata"]["1_file"] = {{"vid", "1"}, {"flg", 0}, {"z", json::array()}, {"xy", json::array()},
                                      {"av", {{"2", "1"}}}};
    const auto ex = import_via_export(excluded.dump(), kLabels, kVga);
    CHECK(ex.excluded == std::set<std::pair<std::string, int>>{{"1", 2}});
}

TEST_CASE("import region-list export") {
    const json via2 = {{"_via_img_metadata",
                        {{"img61",
                          {{"filename", "rawframes/1/img_00061.jpg"},
                           {"size", 0},
                           {"file_attributes", json::object()},
                           {"regions",
                            json::array({{{"shape_attributes",
                                           {{"name", "rect"}, {"x", 64}, {"y", 48}, {"width", 320}, {"height", 240}}},
                                          {"region_attributes",
                                           {{"action", {{"action1", true}, {"action4", true}, {"action2", false}}}}}},
                                         {{"shape_attributes",
                                           {{"name", "rect"}, {"x", 0}, {"y", 0}, {"width", 10}, {"height", 10}}},
                                          {"region_attributes", json::object()}}})}}}}}};
    const auto imp = import_via_export(via2.dump(), kLabels, kVga);
    REQUIRE(imp.instances.size() == 1);
    CHECK(imp.instances[0].action_ids == std::set<int>{1, 4});
    CHECK(imp.instances[0].box == BoundingBox(0.1, 0.1, 0.6, 0.6));
    CHECK(imp.unlabeled.size() == 1);
}

TEST_CASE("export then import stays within one pixel") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const ImageDims dims = {{"1", {640, 480}}, {"2", {1920, 1080}}};
    for (int trial = 0; trial < 50; ++trial) {
        ProposalTable t;
        for (int k = 0; k < 4; ++k) {
            ProposalRows rows(3, 5);
            for (int r = 0; r < 3; ++r) {
                double a = u(rng), b = u(rng), c = u(rng), d = u(rng);
                if (std::abs(a - b) < 0.01) b = std::min(1.0, a + 0.05);
                if (std::abs(c - d) < 0.01) d = std::min(1.0, c + 0.05);
                rows.row(r) << std::min(a, b), std::min(c, d), std::max(a, b), std::max(c, d), 0.5;
            }
            t.entries[KeyframeRef(k % 2 ? "1" : "2", k)] = rows;
        }
        json doc = json::parse(export_via_project(t, dims, kLabels));
        for (auto& [mid, m] : doc["metadata"].items()) m["av"] = {{"1", "2"}};
        const auto imp = import_via_export(doc.dump(), kLabels, dims);
        REQUIRE(imp.instances.size() == t.row_count());
        std::size_t i = 0;
        for (const auto& [key, rows] : t.entries) {
            const auto& size = dims.at(key.video_id());
            const double tol = 1.0 / std::min(size.width, size.height) + 1e-12;
            for (Eigen::Index r = 0; r < rows.rows(); ++r, ++i) {
                const auto& b = imp.instances[i].box;
                CHECK(imp.instances[i].key == key);
                CHECK(std::abs(b.x1() - rows(r, 0)) <= tol);
                CHECK(std::abs(b.y1() - rows(r, 1)) <= tol);
                CHECK(std::abs(b.x2() - rows(r, 2)) <= tol);
                CHECK(std::abs(b.y2() - rows(r, 3)) <= tol);
            }
        }
    }
}

TEST_CASE("person id attachment") {
    const KeyframeRef k("1", 5);
    const TrackedKeyframes tracked = {{k, {{span(0.1, 0.3), 0}, {span(0.5, 0.7), 1}, {span(0.8, 0.95), 2}}}};
    std::map<std::string, int> next;

    const auto a = assign_person_ids({{k, span(0.51, 0.7), {1}}}, tracked, next);
    CHECK(a.instances[0].person_id == 1);
    CHECK(a.warnings.empty());

    const auto b = assign_person_ids({{k, span(0.35, 0.45), {1}}, {k, span(0.36, 0.46), {2}}}, tracked, next);
    CHECK(b.instances[0].person_id == 3);
    CHECK(b.instances[1].person_id == 4);
    CHECK(b.warnings.size() == 2);
    CHECK(next.at("1") == 5);

    std::map<std::string, int> fresh;
    const auto c = assign_person_ids({{KeyframeRef("9", 2), span(0.1, 0.2), {1}}}, {}, fresh);
    CHECK(c.instances[0].person_id == 0);
}

TEST_CASE("person id attachment is globally optimal") {
    std::mt19937 rng(21);
    std::uniform_real_distribution<double> u(0.0, 0.6), w(0.15, 0.4);
    const KeyframeRef k("1", 3);
    int checked = 0;
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<BoundingBox> tr, an;
        for (int i = 0; i < 2; ++i) {
            double x = u(rng);
            tr.push_back(span(x, x + w(rng)));
            x = u(rng);
            an.push_back(span(x, x + w(rng)));
        }
        const TrackedKeyframes tracked = {{k, {{tr[0], 0}, {tr[1], 1}}}};
        // Only cases where both pairings are admissible, so the optimum is well defined.
        bool admissible = true;
        for (const auto& a : an)
            for (const auto& t : tr) admissible = admissible && iou(a, t) >= 0.3;
        if (!admissible) continue;
        std::map<std::string, int> next;
        const auto r = assign_person_ids({{k, an[0], {1}}, {k, an[1], {1}}}, tracked, next);
        const double straight = iou(an[0], tr[0]) + iou(an[1], tr[1]);
        const double crossed = iou(an[0], tr[1]) + iou(an[1], tr[0]);
        const double got = iou(an[0], tr[r.instances[0].person_id]) + iou(an[1], tr[r.instances[1].person_id]);
        CHECK(r.instances[0].person_id != r.instances[1].person_id);
        CHECK(got == doctest::Approx(std::max(straight, crossed)));
        ++checked;
    }
    CHECK(checked > 20);
}
