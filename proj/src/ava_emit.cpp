// Copyright (C) 2026 ava-forge contributors
// SPDX-License-Identifier: Apache-2.0

#include "ava_forge/ava_emit.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <tuple>

#include "ava_forge/text_util.hpp"

namespace ava {

// ---------------------------------------------------------------------------
// Proposal table

std::size_t ProposalTable::row_count() const {
    std::size_t n = 0;
    for (const auto& [key, rows] : entries) n += static_cast<std::size_t>(rows.rows());
    return n;
}

bool operator==(const ProposalTable& a, const ProposalTable& b) {
    if (a.entries.size() != b.entries.size()) return false;
    auto ib = b.entries.begin();
    for (const auto& [key, rows] : a.entries) {
        if (!(key == ib->first) || rows.rows() != ib->second.rows() || rows != ib->second) return false;
        ++ib;
    }
    return true;
}

ProposalBuild build_proposal_table(const TrackedKeyframes& tracked) {
    ProposalBuild out;
    std::map<std::string, std::vector<int>> seconds;
    for (const auto& [key, boxes] : tracked) seconds[key.video_id()].push_back(key.second());

    for (const auto& [video, secs] : seconds) {
        // Map iteration already yields ascending seconds per video.
        for (std::size_t i = 1; i < secs.size(); ++i)
            if (secs[i] != secs[i - 1] + 1)
                throw Error(ErrorKind::InvalidArgument, "video " + video + ": keyframe seconds are not contiguous (gap after " +
                                                            std::to_string(secs[i - 1]) + ")");
        if (secs.size() < 2 * kProposalTrim + 1) {
            out.warnings.push_back("video " + video + ": only " + std::to_string(secs.size()) +
                                   " keyframes, nothing left after trimming; omitted");
            continue;
        }
        const int first = secs.front() + kProposalTrim;
        const int last = secs.back() - kProposalTrim;
        for (int s = first; s <= last; ++s) {
            KeyframeRef key(video, s);
            const auto& boxes = tracked.at(key);
            ProposalRows rows(static_cast<Eigen::Index>(boxes.size()), 5);
            for (std::size_t r = 0; r < boxes.size(); ++r) {
                const auto& b = boxes[r].box;
                if (!b.score())
                    throw Error(ErrorKind::InvalidArgument, "proposal at " + make_keyframe_key(key) + " has no score");
                rows.row(static_cast<Eigen::Index>(r)) << b.x1(), b.y1(), b.x2(), b.y2(), *b.score();
            }
            out.table.entries.emplace(std::move(key), std::move(rows));
        }
    }
    return out;
}

namespace {

namespace op {
constexpr std::uint8_t Proto = 0x80;
constexpr std::uint8_t EmptyDict = 0x7D;
constexpr std::uint8_t Mark = 0x28;
constexpr std::uint8_t BinUnicode = 0x58;
constexpr std::uint8_t EmptyList = 0x5D;
constexpr std::uint8_t BinFloat = 0x47;
constexpr std::uint8_t Appends = 0x65;
constexpr std::uint8_t SetItems = 0x75;
constexpr std::uint8_t Stop = 0x2E;
}  // namespace op

void put_float(std::vector<std::uint8_t>& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(bits >> shift));
}

class PickleReader {
  public:
    explicit PickleReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint8_t peek() const {
        need(1);
        return bytes_[pos_];
    }

    std::uint8_t next_opcode() {
        const auto b = peek();
        ++pos_;
        switch (b) {
            case op::Proto: case op::EmptyDict: case op::Mark: case op::BinUnicode: case op::EmptyList:
            case op::BinFloat: case op::Appends: case op::SetItems: case op::Stop:
                return b;
            default:
                throw Error(ErrorKind::UnknownOpcode, "proposals: opcode 0x" + hex(b) + " at offset " +
                                                          std::to_string(pos_ - 1) + " is outside the accepted grammar");
        }
    }

    void expect(std::uint8_t want, const char* what) {
        const auto at = pos_;
        const auto got = next_opcode();
        if (got != want)
            throw Error(ErrorKind::Parse, "proposals: expected " + std::string(what) + " at offset " +
                                              std::to_string(at) + ", found opcode 0x" + hex(got));
    }

    double read_float() {
        need(8);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits = (bits << 8) | bytes_[pos_ + i];
        pos_ += 8;
        return std::bit_cast<double>(bits);
    }

    std::string read_string() {
        need(4);
        std::uint32_t len = 0;
        for (int i = 3; i >= 0; --i) len = (len << 8) | bytes_[pos_ + i];
        pos_ += 4;
        need(len);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), len);
        pos_ += len;
        return s;
    }

    std::uint8_t read_byte() {
        need(1);
        return bytes_[pos_++];
    }

    bool at_end() const { return pos_ == bytes_.size(); }
    std::size_t offset() const { return pos_; }

  private:
    static std::string hex(std::uint8_t b) {
        const char* digits = "0123456789ABCDEF";
        return {digits[b >> 4], digits[b & 0xF]};
    }

    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n)
            throw Error(ErrorKind::Truncated, "proposals: stream truncated at offset " + std::to_string(pos_));
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_proposals(const ProposalTable& table) {
    std::vector<std::uint8_t> out{op::Proto, 0x02, op::EmptyDict};
    if (!table.entries.empty()) {
        out.push_back(op::Mark);
        for (const auto& [key, rows] : table.entries) {
            const std::string k = make_keyframe_key(key);
            if (!text::is_valid_utf8(k))
                throw Error(ErrorKind::Encoding, "proposal key is not valid UTF-8: " + k);
            out.push_back(op::BinUnicode);
            const auto len = static_cast<std::uint32_t>(k.size());
            for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(len >> (8 * i)));
            out.insert(out.end(), k.begin(), k.end());
            out.push_back(op::EmptyList);
            out.push_back(op::Mark);
            for (Eigen::Index r = 0; r < rows.rows(); ++r) {
                out.push_back(op::EmptyList);
                out.push_back(op::Mark);
                for (Eigen::Index c = 0; c < 5; ++c) {
                    out.push_back(op::BinFloat);
                    put_float(out, rows(r, c));
                }
                out.push_back(op::Appends);
            }
            out.push_back(op::Appends);
        }
        out.push_back(op::SetItems);
    }
    out.push_back(op::Stop);
    return out;
}

ProposalTable decode_proposals(std::span<const std::uint8_t> bytes) {
    PickleReader in(bytes);
    in.expect(op::Proto, "PROTO");
    if (const auto version = in.read_byte(); version != 2)
        throw Error(ErrorKind::Parse, "proposals: unsupported protocol " + std::to_string(version));
    in.expect(op::EmptyDict, "EMPTY_DICT");

    ProposalTable table;
    const auto after_dict = in.next_opcode();
    if (after_dict == op::Mark) {
        do {
            in.expect(op::BinUnicode, "BINUNICODE key");
            const std::string key_text = in.read_string();
            if (!text::is_valid_utf8(key_text)) throw Error(ErrorKind::Encoding, "proposals: key is not valid UTF-8");
            KeyframeRef key = parse_keyframe_key(key_text);
            in.expect(op::EmptyList, "EMPTY_LIST");
            in.expect(op::Mark, "MARK");
            std::vector<std::array<double, 5>> rows;
            while (in.peek() == op::EmptyList) {
                in.next_opcode();
                in.expect(op::Mark, "MARK");
                std::vector<double> values;
                while (in.peek() == op::BinFloat) {
                    in.next_opcode();
                    values.push_back(in.read_float());
                }
                in.expect(op::Appends, "APPENDS");
                if (values.size() != 5)
                    throw Error(ErrorKind::RowArity, "proposals: row under '" + key_text + "' has " +
                                                         std::to_string(values.size()) + " values, expected 5");
                rows.push_back({values[0], values[1], values[2], values[3], values[4]});
            }
            in.expect(op::Appends, "APPENDS");
            ProposalRows block(static_cast<Eigen::Index>(rows.size()), 5);
            for (std::size_t r = 0; r < rows.size(); ++r)
                for (int c = 0; c < 5; ++c) block(static_cast<Eigen::Index>(r), c) = rows[r][c];
            if (!table.entries.emplace(std::move(key), std::move(block)).second)
                throw Error(ErrorKind::Parse, "proposals: duplicate key '" + key_text + "'");
        } while (in.peek() == op::BinUnicode);
        in.expect(op::SetItems, "SETITEMS");
        in.expect(op::Stop, "STOP");
    } else if (after_dict != op::Stop) {
        throw Error(ErrorKind::Parse, "proposals: expected MARK or STOP after EMPTY_DICT");
    }
    if (!in.at_end())
        throw Error(ErrorKind::Parse, "proposals: trailing bytes after STOP at offset " + std::to_string(in.offset()));
    return table;
}

// ---------------------------------------------------------------------------
// Ground truth CSV

void TimestampSets::validate() const {
    for (const auto& s : included)
        if (s < 0) throw Error(ErrorKind::InvalidArgument, "negative included timestamp");
    if (excluded.empty()) return;
    if (included.empty()) throw Error(ErrorKind::InvalidArgument, "excluded timestamps without any included range");
    const int lo = *included.begin();
    const int hi = *included.rbegin();
    for (const auto& [video, s] : excluded) {
        if (!is_valid_video_id(video)) throw Error(ErrorKind::InvalidArgument, "invalid video id '" + video + "'");
        if (s < lo || s > hi)
            throw Error(ErrorKind::InvalidArgument, "excluded timestamp " + video + "," + std::to_string(s) +
                                                        " lies outside the included range");
    }
}

TimestampSets default_timestamps(int clip_len_s) {
    TimestampSets t;
    for (int s = kProposalTrim; s <= clip_len_s - kProposalTrim; ++s) t.included.insert(s);
    return t;
}

std::vector<GroundTruthRow> expand_gt_rows(const std::string& video_id, int second, const BoundingBox& box,
                                           const std::set<int>& action_ids, int person_id) {
    if (action_ids.empty())
        throw Error(ErrorKind::InvalidArgument, "expand_gt_rows: person at " + video_id + "," + std::to_string(second) +
                                                    " has no action");
    const BoundingBox plain = box.with_score(std::nullopt);
    std::vector<GroundTruthRow> rows;
    for (int a : action_ids) rows.push_back({video_id, second, plain, a, person_id});
    return rows;
}

std::string write_gt_csv(std::vector<GroundTruthRow> rows, const TimestampSets& timestamps, CsvStyle style) {
    for (const auto& r : rows)
        if (timestamps.excluded.count({r.video_id, r.second}))
            throw Error(ErrorKind::InvalidArgument,
                        "ground-truth row at excluded timestamp " + r.video_id + "," + pad_timestamp(r.second, 3));
    std::stable_sort(rows.begin(), rows.end(), [](const GroundTruthRow& a, const GroundTruthRow& b) {
        return std::tie(a.video_id, a.second, a.person_id, a.action_id) <
               std::tie(b.video_id, b.second, b.person_id, b.action_id);
    });
    std::string out;
    const auto q = style == CsvStyle::Quoted ? "\"" : "";
    for (const auto& r : rows) {
        const std::string fields[] = {r.video_id,
                                      std::to_string(r.second),
                                      text::format_fixed(r.box.x1(), 3),
                                      text::format_fixed(r.box.y1(), 3),
                                      text::format_fixed(r.box.x2(), 3),
                                      text::format_fixed(r.box.y2(), 3),
                                      std::to_string(r.action_id),
                                      std::to_string(r.person_id)};
        for (std::size_t i = 0; i < std::size(fields); ++i) {
            if (i) out += ',';
            out += q;
            out += fields[i];
            out += q;
        }
        out += '\n';
    }
    return out;
}

namespace {

std::string_view unquote(std::string_view f) {
    f = text::trim(f);
    if (f.size() >= 2 && f.front() == '"' && f.back() == '"') f = f.substr(1, f.size() - 2);
    return f;
}

[[noreturn]] void csv_fail(const char* file, std::size_t line_no, const std::string& msg) {
    throw Error(ErrorKind::Parse, std::string(file) + " line " + std::to_string(line_no) + ": " + msg);
}

}  // namespace

std::vector<GroundTruthRow> read_gt_csv(const std::string& text) {
    std::vector<GroundTruthRow> rows;
    std::size_t line_no = 0;
    for (const auto& raw : text::split_lines(text)) {
        ++line_no;
        if (text::trim(raw).empty()) continue;
        const auto fields = text::split(raw, ',');
        if (fields.size() != 8) csv_fail("gt csv", line_no, "expected 8 fields, got " + std::to_string(fields.size()));
        int second = 0, action = 0, person = 0;
        double c[4];
        if (!text::parse_int(unquote(fields[1]), second)) csv_fail("gt csv", line_no, "bad second");
        for (int i = 0; i < 4; ++i)
            if (!text::parse_double(unquote(fields[2 + i]), c[i])) csv_fail("gt csv", line_no, "bad coordinate");
        if (!text::parse_int(unquote(fields[6]), action)) csv_fail("gt csv", line_no, "bad action id");
        if (!text::parse_int(unquote(fields[7]), person)) csv_fail("gt csv", line_no, "bad person id");
        try {
            rows.push_back({std::string(unquote(fields[0])), second, BoundingBox(c[0], c[1], c[2], c[3]), action, person});
        } catch (const Error& e) {
            csv_fail("gt csv", line_no, e.what());
        }
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Timestamp lists

std::pair<std::string, std::string> write_timestamp_lists(const TimestampSets& sets) {
    sets.validate();
    std::string included, excluded;
    for (int s : sets.included) included += pad_timestamp(s, 3) + '\n';
    for (const auto& [video, s] : sets.excluded) excluded += video + ',' + pad_timestamp(s, 3) + '\n';
    return {included, excluded};
}

std::set<int> read_included_timestamps(const std::string& text) {
    std::set<int> out;
    std::size_t line_no = 0;
    for (const auto& raw : text::split_lines(text)) {
        ++line_no;
        const auto f = unquote(raw);
        if (f.empty()) continue;
        int s = 0;
        if (!text::parse_int(f, s) || s < 0) csv_fail("included timestamps", line_no, "bad second");
        out.insert(s);
    }
    return out;
}

std::set<std::pair<std::string, int>> read_excluded_timestamps(const std::string& text) {
    std::set<std::pair<std::string, int>> out;
    std::size_t line_no = 0;
    for (const auto& raw : text::split_lines(text)) {
        ++line_no;
        if (text::trim(raw).empty()) continue;
        const auto fields = text::split(raw, ',');
        int s = 0;
        if (fields.size() != 2 || !text::parse_int(unquote(fields[1]), s) || s < 0)
            csv_fail("excluded timestamps", line_no, "expected 'video_id,SSS'");
        out.emplace(std::string(unquote(fields[0])), s);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Label map

namespace {

std::string escape_pbtxt(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out;
}

struct PbToken {
    enum Kind { Ident, String, Number, Colon, Open, Close, End } kind;
    std::string text;
};

class PbLexer {
  public:
    explicit PbLexer(std::string_view src) : src_(src) {}

    PbToken next() {
        skip();
        if (pos_ >= src_.size()) return {PbToken::End, {}};
        const char c = src_[pos_];
        if (c == ':') return ++pos_, PbToken{PbToken::Colon, ":"};
        if (c == '{') return ++pos_, PbToken{PbToken::Open, "{"};
        if (c == '}') return ++pos_, PbToken{PbToken::Close, "}"};
        if (c == '"' || c == '\'') {
            std::string s;
            ++pos_;
            while (pos_ < src_.size() && src_[pos_] != c) {
                if (src_[pos_] == '\\' && pos_ + 1 < src_.size()) ++pos_;
                s += src_[pos_++];
            }
            if (pos_ >= src_.size()) throw Error(ErrorKind::Parse, "label map: unterminated string");
            ++pos_;
            return {PbToken::String, s};
        }
        const auto start = pos_;
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '-') {
            while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '-'))
                ++pos_;
            return {PbToken::Number, std::string(src_.substr(start, pos_ - start))};
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
                ++pos_;
            return {PbToken::Ident, std::string(src_.substr(start, pos_ - start))};
        }
        throw Error(ErrorKind::Parse, std::string("label map: unexpected character '") + c + "'");
    }

  private:
    void skip() {
        while (pos_ < src_.size()) {
            if (std::isspace(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == ',' || src_[pos_] == ';') {
                ++pos_;
            } else if (src_[pos_] == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    std::string_view src_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string write_label_map(const LabelMap& map) {
    std::string out;
    for (const auto& e : map.entries())
        out += "item {\n  name: \"" + escape_pbtxt(e.name) + "\"\n  id: " + std::to_string(e.id) + "\n}\n\n";
    return out;
}

LabelMap read_label_map(const std::string& text) {
    PbLexer lex(text);
    std::vector<LabelEntry> entries;
    for (auto tok = lex.next(); tok.kind != PbToken::End; tok = lex.next()) {
        if (tok.kind != PbToken::Ident || tok.text != "item") throw Error(ErrorKind::Parse, "label map: expected 'item'");
        if (lex.next().kind != PbToken::Open) throw Error(ErrorKind::Parse, "label map: expected '{' after item");
        std::optional<std::string> name;
        std::optional<int> id;
        for (auto field = lex.next(); field.kind != PbToken::Close; field = lex.next()) {
            if (field.kind != PbToken::Ident) throw Error(ErrorKind::Parse, "label map: expected a field name");
            if (lex.next().kind != PbToken::Colon) throw Error(ErrorKind::Parse, "label map: expected ':'");
            const auto value = lex.next();
            if (field.text == "name" || field.text == "display_name") {
                if (value.kind != PbToken::String) throw Error(ErrorKind::Parse, "label map: name must be a string");
                if (field.text == "name" || !name) name = value.text;
            } else if (field.text == "id" || field.text == "label_id") {
                int v = 0;
                if (value.kind != PbToken::Number || !text::parse_int(value.text, v))
                    throw Error(ErrorKind::Parse, "label map: id must be an integer");
                id = v;
            } else {
                throw Error(ErrorKind::Parse, "label map: unknown field '" + field.text + "'");
            }
        }
        if (!name || !id) throw Error(ErrorKind::Parse, "label map: item needs both name and id");
        entries.push_back({*name, *id});
    }
    std::sort(entries.begin(), entries.end(), [](const LabelEntry& a, const LabelEntry& b) { return a.id < b.id; });
    return LabelMap(std::move(entries));
}

// ---------------------------------------------------------------------------
// Validator

std::string to_string(FindingCode code) {
    switch (code) {
        case FindingCode::MissingProposal: return "missing-proposal";
        case FindingCode::ExcludedTimestamp: return "excluded-timestamp";
        case FindingCode::NotIncluded: return "not-included";
        case FindingCode::UnknownAction: return "unknown-action";
        case FindingCode::InvalidBox: return "invalid-box";
        case FindingCode::NegativePersonId: return "negative-person-id";
        case FindingCode::Unreadable: return "unreadable";
    }
    return "unknown";
}

std::vector<Finding> validate_dataset(const ProposalTable& proposals, const std::vector<GroundTruthRow>& gt_rows,
                                      const TimestampSets& timestamps, const LabelMap& labels) {
    std::vector<Finding> findings;
    for (const auto& [key, rows] : proposals.entries) {
        for (Eigen::Index r = 0; r < rows.rows(); ++r) {
            try {
                BoundingBox(rows(r, 0), rows(r, 1), rows(r, 2), rows(r, 3), rows(r, 4));
            } catch (const Error& e) {
                findings.push_back({FindingCode::InvalidBox,
                                    "proposal " + make_keyframe_key(key) + " row " + std::to_string(r) + ": " + e.what()});
            }
        }
    }
    for (const auto& row : gt_rows) {
        const std::string where = row.video_id + "," + std::to_string(row.second);
        bool has_key = false;
        try {
            has_key = proposals.entries.count(KeyframeRef(row.video_id, row.second)) > 0;
        } catch (const Error&) {
        }
        if (!has_key) findings.push_back({FindingCode::MissingProposal, "gt row " + where + " has no proposal key"});
        if (timestamps.excluded.count({row.video_id, row.second}))
            findings.push_back({FindingCode::ExcludedTimestamp, "gt row " + where + " sits on an excluded timestamp"});
        if (!timestamps.included.count(row.second))
            findings.push_back({FindingCode::NotIncluded, "gt row " + where + " second is not in the included list"});
        if (!labels.contains_id(row.action_id))
            findings.push_back({FindingCode::UnknownAction,
                                "gt row " + where + " action " + std::to_string(row.action_id) + " not in label map"});
        const auto& b = row.box;
        if (!(b.x1() >= 0 && b.x1() < b.x2() && b.x2() <= 1 && b.y1() >= 0 && b.y1() < b.y2() && b.y2() <= 1))
            findings.push_back({FindingCode::InvalidBox, "gt row " + where + " box violates invariants"});
        if (row.person_id < 0)
            findings.push_back({FindingCode::NegativePersonId, "gt row " + where + " has a negative person id"});
    }
    return findings;
}

}  // namespace ava
