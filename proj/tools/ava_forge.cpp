// Copyright (C) 2026 ava-forge contributors
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "ava_forge/pipeline.hpp"

int main(int argc, char** argv) {
    CLI::App app{"ava-forge: compile videos and human detections into an AVA-format action dataset"};
    app.fallthrough();
    app.require_subcommand(1);

    std::filesystem::path config_path = "ava-forge.json";
    std::string root, split;
    int jobs = 0;
    double threshold = -1.0;
    bool quoted = false;
    app.add_option("--config", config_path, "project configuration (JSON)");
    app.add_option("--root", root, "dataset root (overrides the config)");
    app.add_option("--split", split, "restrict to one split")->check(CLI::IsMember({"train", "val", "test"}));
    app.add_option("--jobs", jobs, "worker count for per-video stages")->check(CLI::PositiveNumber);
    app.add_option("--score-threshold", threshold, "drop detections scoring below this")->check(CLI::Range(0.0, 1.0));
    app.add_flag("--quoted", quoted, "write ground-truth CSV with every field quoted");

    const std::map<std::string, std::string> help = {
        {"plan-frames", "plan clip cropping and 30 fps frame extraction"},
        {"extract", "run the planned ffmpeg commands and check rawframes/"},
        {"ingest", "parse, normalize and filter detections"},
        {"track", "assign person ids with the keyframe tracker"},
        {"build-proposals", "write dense_proposals_<split>.pkl"},
        {"export-via", "write VIA projects pre-filled with proposals"},
        {"import-via", "read annotated VIA projects and attach person ids"},
        {"build-gt", "write <split>.csv ground truth"},
        {"emit-aux", "write timestamp lists and the label map"},
        {"validate", "cross-check every annotation file"},
        {"all", "run every stage, pausing for the VIA step"},
    };
    for (const auto& name : ava::kSubcommands) app.add_subcommand(name, help.at(name));

    CLI11_PARSE(app, argc, argv);

    ava::ConfigOverrides overrides;
    if (!root.empty()) overrides.root = root;
    if (!split.empty()) overrides.split = split;
    if (jobs > 0) overrides.jobs = jobs;
    if (threshold >= 0.0) overrides.score_threshold = threshold;
    overrides.quoted = quoted;

    ava::ProjectConfig config;
    try {
        if (!std::filesystem::exists(config_path) && !root.empty() &&
            std::filesystem::exists(std::filesystem::path(root) / "ava-forge.json"))
            config_path = std::filesystem::path(root) / "ava-forge.json";
        config = ava::load_config(config_path, overrides);
    } catch (const ava::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }

    ava::RunContext ctx{std::cout, std::cerr, {}};
    return ava::run_subcommand(app.get_subcommands().front()->get_name(), config, ctx);
}
