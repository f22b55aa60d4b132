// Copyright (C) 2026 ava-forge contributors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 on any failure.

#include <Eigen/Eigenvalues>
#include <chrono>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "ava_forge/ava_emit.hpp"
#include "ava_forge/core_model.hpp"
#include "ava_forge/frame_plan.hpp"
#include "ava_forge/hungarian.hpp"
#include "ava_forge/kalman_filter.hpp"
#include "ava_forge/pipeline.hpp"
#include "ava_forge/tracker.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace ava;
using namespace ava::testing;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(3);
    os << v;
    return os.str();
}

Outcome frame_arithmetic() {
    const auto t0 = Clock::now();
    const int frames = expected_frame_count(15);
    const auto idx = keyframe_indices(frames);
    const double elapsed = seconds_since(t0);
    bool ok = frames == 451 && idx.size() == 16 && idx.back().frame_index == 451 && idx.back().second == 15;
    const int head[4] = {1, 31, 61, 91};
    for (int i = 0; ok && i < 4; ++i) ok = idx[i].frame_index == head[i] && idx[i].second == i;
    ok = ok && elapsed < 1e-3;
    return {ok, std::to_string(frames) + " frames, " + std::to_string(idx.size()) + " keyframes, " +
                    fmt(elapsed * 1e3) + " ms"};
}

Outcome trim_rule(const EndToEnd& run) {
    const Layout layout{run.config.root};
    std::set<int> expected;
    for (int s = 2; s <= 13; ++s) expected.insert(s);
    bool ok = run.after_annotation.status == 0;
    std::string detail;
    for (const auto& split : {"train", "val"}) {
        const std::string bytes = slurp(layout.proposals(split));
        const auto table = decode_proposals(
            std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
        std::map<std::string, std::set<int>> keys;
        for (const auto& [k, rows] : table.entries) keys[k.video_id()].insert(k.second());
        ok = ok && keys.size() == 1;
        for (const auto& [video, secs] : keys) {
            ok = ok && secs == expected;
            detail += split + std::string(" video ") + video + ": " + std::to_string(secs.size()) + " keys " +
                      std::to_string(*secs.begin()) + ".." + std::to_string(*secs.rbegin()) + "; ";
        }
    }
    return {ok, detail};
}

Outcome key_formats() {
    const bool ok = make_keyframe_key(KeyframeRef("1", 2)) == "1,0002" && pad_timestamp(72, 3) == "072" &&
                    pad_timestamp(2, 3) == "002";
    return {ok, "\"" + make_keyframe_key(KeyframeRef("1", 2)) + "\", \"" + pad_timestamp(72, 3) + "\", \"" +
                    pad_timestamp(2, 3) + "\""};
}

Outcome gt_expansion() {
    const auto rows = expand_gt_rows("1", 2, BoundingBox(0.114, 0.353, 0.401, 0.848), {1, 6}, 0);
    const std::string got = write_gt_csv(rows, default_timestamps(15), CsvStyle::Quoted);
    const std::string expected =
        "\"1\",\"2\",\"0.114\",\"0.353\",\"0.401\",\"0.848\",\"1\",\"0\"\n"
        "\"1\",\"2\",\"0.114\",\"0.353\",\"0.401\",\"0.848\",\"6\",\"0\"\n";
    return {got == expected, std::to_string(rows.size()) + " rows, byte-exact " + (got == expected ? "yes" : "no")};
}

Outcome proposals_codec() {
    if (!python_available()) return {false, "python3 with pickle is required as the reference deserializer"};
    const auto t0 = Clock::now();
    const auto dir = scratch_dir("acceptance_pickle");
    std::mt19937_64 rng(20260);
    std::vector<ProposalTable> tables;
    std::vector<fs::path> files;
    int mismatches = 0;
    for (int i = 0; i < 200; ++i) {
        tables.push_back(random_proposal_table(rng));
        const auto enc = encode_proposals(tables.back());
        if (!(decode_proposals(enc) == tables.back())) ++mismatches;
        files.push_back(dir / ("table_" + std::to_string(i) + ".pkl"));
        spit(files.back(), std::string(enc.begin(), enc.end()));
    }
    json ref;
    try {
        ref = load_with_reference(files);
    } catch (const std::exception& e) {
        return {false, e.what()};
    }
    for (std::size_t i = 0; i < tables.size(); ++i)
        if (!ref.contains(files[i].string()) || !same_as_reference(tables[i], ref.at(files[i].string()))) ++mismatches;
    fs::remove_all(dir);
    const double elapsed = seconds_since(t0);
    return {mismatches == 0 && elapsed < 10.0,
            "200 tables, " + std::to_string(mismatches) + " mismatches, " + fmt(elapsed) + " s"};
}

Outcome hungarian_optimality() {
    const auto t0 = Clock::now();
    std::mt19937 rng(6);
    std::uniform_int_distribution<int> dim(1, 7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int failures = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = dim(rng), m = dim(rng);
        Eigen::MatrixXd c(n, m);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j) c(i, j) = u(rng);
        const auto r = hungarian_assign(c, std::numeric_limits<double>::max());
        double total = 0;
        for (auto [i, j] : r.matches) total += c(i, j);
        if (static_cast<int>(r.matches.size()) != std::min(n, m) ||
            std::abs(total - brute_force_assignment(c)) > 1e-12)
            ++failures;
    }
    const double elapsed = seconds_since(t0);
    return {failures == 0 && elapsed < 30.0,
            "1000 matrices, " + std::to_string(failures) + " failures, " + fmt(elapsed) + " s"};
}

Outcome kalman_numerics() {
    std::mt19937 rng(1234);
    std::uniform_real_distribution<double> u(0.1, 0.9), h(0.05, 0.7), noise(-0.03, 0.03);
    auto s = kalman_initiate(Measurement<double>(0.5, 0.5, 0.5, 0.3));
    double asym = 0.0, min_eig = 1.0;
    for (int cycle = 0; cycle < 1000; ++cycle) {
        if (cycle % 100 == 0) s = kalman_initiate(Measurement<double>(u(rng), u(rng), u(rng), h(rng)));
        s = kalman_predict(s);
        s = kalman_update(s, Measurement<double>(s.mean[0] + noise(rng), s.mean[1] + noise(rng),
                                                 std::max(0.05, s.mean[2] + noise(rng)),
                                                 std::max(0.02, s.mean[3] + noise(rng) / 3)));
        asym = std::max(asym, (s.covariance - s.covariance.transpose()).cwiseAbs().maxCoeff());
        min_eig = std::min(min_eig,
                           Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 8, 8>>(s.covariance).eigenvalues().minCoeff());
    }
    auto hand = kalman_initiate(Measurement<double>(0.5, 0.5, 0.5, 0.2));
    hand.mean[4] = 0.01;
    hand.mean[7] = -0.002;
    const Measurement<double> z(0.52, 0.49, 0.55, 0.21);
    const auto ours = kalman_update(kalman_predict(hand), z);
    const auto dense = dense_update(dense_predict(hand), z);
    const double diff = std::max((ours.mean - dense.mean).cwiseAbs().maxCoeff(),
                                 (ours.covariance - dense.covariance).cwiseAbs().maxCoeff());
    return {asym < 1e-9 && min_eig > -1e-9 && diff < 1e-9,
            "max asymmetry " + fmt(asym) + ", min eigenvalue " + fmt(min_eig) + ", oracle diff " + fmt(diff)};
}

Outcome track_confirmation() {
    auto run = [](int steps) {
        Tracker tr;
        std::vector<TrackStatus> seen;
        for (int s = 0; s < steps; ++s) {
            tr.step({{"1", s, BoundingBox(0.4, 0.2, 0.6, 0.9, 0.9), std::nullopt, std::nullopt}});
            seen.push_back(tr.tracks().at(0).status);
        }
        return seen;
    };
    const auto three = run(3);
    const auto two = run(2);
    const bool ok = three == std::vector<TrackStatus>{TrackStatus::Tentative, TrackStatus::Tentative,
                                                      TrackStatus::Confirmed} &&
                    two == std::vector<TrackStatus>{TrackStatus::Tentative, TrackStatus::Tentative} && run(3) == three;
    return {ok, "confirmed at keyframe 3, tentative after 2"};
}

Outcome id_stability() {
    const std::vector<KeyframeDetections> kf = {
        {KeyframeRef("1", 2),
         {{"1", 2, BoundingBox(0.114, 0.353, 0.401, 0.848, 0.99), std::nullopt, std::nullopt},
          {"1", 2, BoundingBox(0.253, 0.177, 0.932, 0.860, 0.99), std::nullopt, std::nullopt}}},
        {KeyframeRef("1", 3),
         {{"1", 3, BoundingBox(0.119, 0.355, 0.405, 0.845, 0.99), std::nullopt, std::nullopt},
          {"1", 3, BoundingBox(0.232, 0.201, 0.908, 0.861, 0.99), std::nullopt, std::nullopt}}},
    };
    const auto out = track_video(kf);
    const int a = out.at(KeyframeRef("1", 2)).at(1).person_id;
    const int b = out.at(KeyframeRef("1", 3)).at(1).person_id;
    const double overlap = iou(BoundingBox(0.253, 0.177, 0.932, 0.860), BoundingBox(0.232, 0.201, 0.908, 0.861));
    return {a == b && a == 1, "person ids " + std::to_string(a) + " and " + std::to_string(b) + ", IoU " + fmt(overlap)};
}

Outcome end_to_end(const EndToEnd& run, double elapsed) {
    const Layout layout{run.config.root};
    std::size_t present = 0;
    const std::vector<std::string> files = {"dense_proposals_train.pkl", "dense_proposals_val.pkl",
                                            "dense_proposals_test.pkl", "train.csv", "val.csv",
                                            "included_timestamps.csv", "train_excluded_timestamps.csv",
                                            "val_excluded_timestamps.csv", "action_list.pbtxt"};
    for (const auto& f : files) present += fs::exists(layout.annotations() / f);
    bool dirs = true;
    for (const auto& d : {"videos", "video_crop", "rawframes", "annotations"})
        dirs = dirs && fs::is_directory(run.config.root / d);
    const auto again = run_cli("validate", run.config);
    const bool clean = again.status == 0 && again.out.find("validate: no findings") != std::string::npos;
    const bool ok = run.before_annotation.status == 0 && run.after_annotation.status == 0 && present == files.size() &&
                    dirs && clean && elapsed < 60.0;
    std::string detail = std::to_string(present) + "/" + std::to_string(files.size()) + " annotation files, " +
                         (clean ? "0 findings" : "validate reported findings") + ", " + fmt(elapsed) + " s";
    if (!ok) detail += "\n" + run.after_annotation.err + again.err;
    return {ok, detail};
}

}  // namespace

int main() {
    const auto root = scratch_dir("acceptance_e2e");
    const auto t0 = Clock::now();
    std::optional<EndToEnd> run;
    std::string e2e_error;
    try {
        run = run_synthetic_end_to_end(root);
    } catch (const std::exception& e) {
        e2e_error = e.what();
    }
    const double e2e_seconds = seconds_since(t0);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"frame arithmetic", frame_arithmetic},
        {"trim rule", [&] { return run ? trim_rule(*run) : Outcome{false, e2e_error}; }},
        {"key and padding formats", key_formats},
        {"ground-truth expansion", gt_expansion},
        {"proposals codec", proposals_codec},
        {"hungarian optimality", hungarian_optimality},
        {"kalman numerics", kalman_numerics},
        {"track confirmation", track_confirmation},
        {"id stability", id_stability},
        {"end to end", [&] { return run ? end_to_end(*run, e2e_seconds) : Outcome{false, e2e_error}; }},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  " << (i + 1) << ". " << criteria[i].first << ": " << o.detail
                  << '\n';
    }
    fs::remove_all(root);
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " acceptance criteria passed\n";
    return failed ? 1 : 0;
}
