// Copyright (C) 2026 ava-forge contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ava_forge/core_model.hpp"
#include "ava_forge/tracker.hpp"

namespace ava {

/// N x 5 block of [x1, y1, x2, y2, score] rows for one keyframe.
using ProposalRows = Eigen::Matrix<double, Eigen::Dynamic, 5, Eigen::RowMajor>;

struct ProposalTable {
    std::map<KeyframeRef, ProposalRows> entries;

    std::size_t row_count() const;
    friend bool operator==(const ProposalTable& a, const ProposalTable& b);
};

struct ProposalBuild {
    ProposalTable table;
    std::vector<std::string> warnings;
};

/// Keyframes trimmed from each end of a video when building proposals.
inline constexpr int kProposalTrim = 2;

/// Drops the first and last two keyframe seconds of every video and copies
/// the remaining boxes (with scores) into the table. Videos with fewer than
/// five keyframes are omitted with a warning.
ProposalBuild build_proposal_table(const TrackedKeyframes& tracked);

/// Serializes the table as a pickle protocol 2 stream restricted to
/// PROTO, EMPTY_DICT, MARK, BINUNICODE, EMPTY_LIST, BINFLOAT, APPENDS,
/// SETITEMS and STOP. Keys are "<video>,<SSSS>"; output is deterministic.
std::vector<std::uint8_t> encode_proposals(const ProposalTable& table);

/// Parses exactly what encode_proposals emits and nothing else.
ProposalTable decode_proposals(std::span<const std::uint8_t> bytes);

struct GroundTruthRow {
    std::string video_id;
    int second = 0;
    BoundingBox box;
    int action_id = 1;
    int person_id = 0;

    friend bool operator==(const GroundTruthRow&, const GroundTruthRow&) = default;
};

struct TimestampSets {
    std::set<int> included;
    std::set<std::pair<std::string, int>> excluded;

    void validate() const;
};

/// Included seconds for clips of clip_len_s after the two-keyframe trim: 2..L-2.
TimestampSets default_timestamps(int clip_len_s);

/// One row per action, ascending by action id.
std::vector<GroundTruthRow> expand_gt_rows(const std::string& video_id, int second, const BoundingBox& box,
                                           const std::set<int>& action_ids, int person_id);

enum class CsvStyle { Plain, Quoted };

/// `video_id,second,x1,y1,x2,y2,action_id,person_id` lines, coordinates at
/// three decimals, sorted by (video, second, person, action). Quoted style
/// wraps every field in double quotes.
std::string write_gt_csv(std::vector<GroundTruthRow> rows, const TimestampSets& timestamps,
                         CsvStyle style = CsvStyle::Plain);
std::vector<GroundTruthRow> read_gt_csv(const std::string& text);

/// (included text, excluded text).
std::pair<std::string, std::string> write_timestamp_lists(const TimestampSets& sets);
std::set<int> read_included_timestamps(const std::string& text);
std::set<std::pair<std::string, int>> read_excluded_timestamps(const std::string& text);

std::string write_label_map(const LabelMap& map);
LabelMap read_label_map(const std::string& text);

enum class FindingCode {
    MissingProposal,
    ExcludedTimestamp,
    NotIncluded,
    UnknownAction,
    InvalidBox,
    NegativePersonId,
    Unreadable,
};

struct Finding {
    FindingCode code;
    std::string message;
};

std::string to_string(FindingCode code);

/// Cross-file consistency checks. Empty iff the artifact set is consistent.
std::vector<Finding> validate_dataset(const ProposalTable& proposals, const std::vector<GroundTruthRow>& gt_rows,
                                      const TimestampSets& timestamps, const LabelMap& labels);

}  // namespace ava
