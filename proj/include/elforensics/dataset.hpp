#pragma once

// Canonical polling-station dataset: CSV ingestion, validation, emission and
// per-metric filtering.
//
// Canonical CSV: UTF-8, header
//     region,territory,station_id,registered,ballots,leader_votes
// one row per station, plain non-negative integers. Fields may be quoted
// RFC 4180 style but must not span lines. Rows are numbered by file line,
// the header being row 1.

#include <charconv>
#include <cstddef>
#include <fstream>
#include <iostream>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "elforensics/digest.hpp"
#include "elforensics/error.hpp"
#include "elforensics/metrics.hpp"
#include "elforensics/station.hpp"

namespace elforensics {

inline constexpr std::string_view kDatasetHeader =
    "region,territory,station_id,registered,ballots,leader_votes";

struct RowIssue {
    std::size_t row = 0;      // file line, header = 1
    std::string field;        // empty when the issue concerns the whole row
    std::string station_key;  // region/territory/station_id when known
    std::string message;

    std::string describe() const {
        std::string s = "row " + std::to_string(row);
        if (!station_key.empty()) s += " (" + station_key + ")";
        if (!field.empty()) s += ", field '" + field + "'";
        return s + ": " + message;
    }
};

class DatasetError : public Error {
public:
    explicit DatasetError(std::vector<RowIssue> issues)
        : Error(summarize(issues)), issues_(std::move(issues)) {}
    DatasetError(const std::string& message) : Error(message) {}

    const std::vector<RowIssue>& issues() const noexcept { return issues_; }

private:
    static std::string summarize(const std::vector<RowIssue>& issues) {
        std::string s = std::to_string(issues.size()) + " invalid row(s)";
        for (const auto& i : issues) s += "\n  " + i.describe();
        return s;
    }
    std::vector<RowIssue> issues_;
};

inline std::string station_key(const StationRecord& r) {
    return r.region + "/" + r.territory + "/" + r.station_id;
}

struct ElectionDataset {
    std::string election_id;
    std::vector<StationRecord> records;
    std::string source_digest;  // lowercase hex SHA-256 of the source bytes

    std::size_t size() const noexcept { return records.size(); }
};

struct IngestOptions {
    bool lenient = false;                 // skip bad rows instead of failing
    std::ostream* diagnostics = nullptr;  // lenient skip report; defaults to std::cerr
};

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line, bool& ok) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    ok = true;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"' && cur.empty()) {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (quoted) ok = false;
    fields.push_back(std::move(cur));
    return fields;
}

inline bool parse_count(std::string_view s, Count& out) {
    if (s.empty()) return false;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc{} && ptr == end && out >= 0 && s.front() != '-';
}

inline std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q.push_back('"');
        q.push_back(c);
    }
    q.push_back('"');
    return q;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failure on '" + path + "'");
    return bytes;
}

inline void write_file(const std::string& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failure on '" + path + "'");
}

}  // namespace detail

// Parses canonical CSV bytes. Strict mode collects every row problem and
// throws one DatasetError listing them all.
inline ElectionDataset parse_dataset(std::string_view bytes, std::string election_id,
                                     const IngestOptions& options = {}) {
    ElectionDataset ds;
    ds.election_id = std::move(election_id);
    ds.source_digest = sha256_hex(bytes);

    std::string_view text = bytes;
    if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

    std::vector<RowIssue> issues;
    std::set<std::tuple<std::string, std::string, std::string>> seen;
    std::size_t row = 0;
    bool header_seen = false;

    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
        ++row;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

        if (!header_seen) {
            if (line != kDatasetHeader)
                throw DatasetError("header mismatch: expected '" + std::string(kDatasetHeader) +
                                   "'");
            header_seen = true;
            continue;
        }
        if (line.empty()) continue;

        bool ok = true;
        auto fields = detail::split_csv_line(line, ok);
        if (!ok) {
            issues.push_back({row, "", "", "unterminated quoted field"});
            continue;
        }
        if (fields.size() != 6) {
            issues.push_back({row, "", "",
                              "expected 6 fields, found " + std::to_string(fields.size())});
            continue;
        }

        StationRecord r{fields[0], fields[1], fields[2], 0, 0, 0};
        const std::string key = station_key(r);
        if (r.station_id.empty()) {
            issues.push_back({row, "station_id", key, "empty station_id"});
            continue;
        }
        static constexpr const char* kCountFields[] = {"registered", "ballots", "leader_votes"};
        Count* targets[] = {&r.registered, &r.ballots, &r.leader_votes};
        bool counts_ok = true;
        for (int f = 0; f < 3; ++f) {
            if (!detail::parse_count(fields[3 + f], *targets[f])) {
                issues.push_back({row, kCountFields[f], key,
                                  "not a non-negative integer: '" + fields[3 + f] + "'"});
                counts_ok = false;
                break;
            }
        }
        if (!counts_ok) continue;
        if (r.ballots > r.registered) {
            issues.push_back({row, "ballots", key, "ballots exceed registered"});
            continue;
        }
        if (r.leader_votes > r.ballots) {
            issues.push_back({row, "leader_votes", key, "leader_votes exceed ballots"});
            continue;
        }
        if (!seen.emplace(r.region, r.territory, r.station_id).second) {
            issues.push_back({row, "station_id", key, "duplicate station key"});
            continue;
        }
        ds.records.push_back(std::move(r));
    }
    if (!header_seen) throw DatasetError("missing header row");

    if (!issues.empty()) {
        if (!options.lenient) throw DatasetError(std::move(issues));
        std::ostream& diag = options.diagnostics ? *options.diagnostics : std::cerr;
        for (const auto& i : issues) diag << "skipped " << i.describe() << '\n';
    }
    return ds;
}

inline ElectionDataset ingest(const std::string& path, std::string election_id,
                              const IngestOptions& options = {}) {
    return parse_dataset(detail::read_file(path), std::move(election_id), options);
}

inline std::string to_csv(const std::vector<StationRecord>& records) {
    std::string out(kDatasetHeader);
    out.push_back('\n');
    for (const auto& r : records) {
        out += detail::csv_field(r.region);
        out.push_back(',');
        out += detail::csv_field(r.territory);
        out.push_back(',');
        out += detail::csv_field(r.station_id);
        out.push_back(',');
        out += std::to_string(r.registered);
        out.push_back(',');
        out += std::to_string(r.ballots);
        out.push_back(',');
        out += std::to_string(r.leader_votes);
        out.push_back('\n');
    }
    return out;
}

// Builds a dataset from in-memory records, enforcing the same invariants as
// ingestion. The digest is taken over the canonical CSV serialization, so
// make_dataset(x).source_digest == ingest(emit(x)).source_digest.
inline ElectionDataset make_dataset(std::string election_id, std::vector<StationRecord> records) {
    const std::string csv = to_csv(records);
    return parse_dataset(csv, std::move(election_id));
}

inline void emit_dataset(const ElectionDataset& ds, const std::string& path) {
    detail::write_file(path, to_csv(ds.records));
}

struct FilterSpec {
    Count min_registered = 0;
    bool exclude_full_turnout = true;
    bool require_nonzero_ballots_for_leader = true;

    void validate() const {
        if (min_registered < 0) throw ConfigError("min_registered must be >= 0");
    }
};

struct ExclusionTally {
    std::size_t zero_registered = 0;
    std::size_t below_min_registered = 0;
    std::size_t full_turnout = 0;
    std::size_t zero_ballots = 0;

    std::size_t total() const noexcept {
        return zero_registered + below_min_registered + full_turnout + zero_ballots;
    }
    ExclusionTally& operator+=(const ExclusionTally& o) noexcept {
        zero_registered += o.zero_registered;
        below_min_registered += o.below_min_registered;
        full_turnout += o.full_turnout;
        zero_ballots += o.zero_ballots;
        return *this;
    }
    bool operator==(const ExclusionTally&) const = default;
};

struct FilterResult {
    std::vector<std::size_t> included;  // indices into dataset.records, file order
    ExclusionTally excluded;
};

enum class ExclusionReason { none, zero_registered, below_min_registered, full_turnout, zero_ballots };

// First applicable reason, checked in the order listed in ExclusionReason.
inline ExclusionReason exclusion_reason(const StationRecord& r, const FilterSpec& f,
                                        MetricKind metric) noexcept {
    if (r.registered == 0) return ExclusionReason::zero_registered;
    if (r.registered < f.min_registered) return ExclusionReason::below_min_registered;
    if (f.exclude_full_turnout && r.ballots == r.registered) return ExclusionReason::full_turnout;
    if (metric == MetricKind::leader_result && r.ballots == 0) return ExclusionReason::zero_ballots;
    return ExclusionReason::none;
}

inline FilterResult apply_filter(const ElectionDataset& ds, const FilterSpec& filter,
                                 MetricKind metric) {
    filter.validate();
    FilterResult out;
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
        switch (exclusion_reason(ds.records[i], filter, metric)) {
            case ExclusionReason::none: out.included.push_back(i); break;
            case ExclusionReason::zero_registered: ++out.excluded.zero_registered; break;
            case ExclusionReason::below_min_registered: ++out.excluded.below_min_registered; break;
            case ExclusionReason::full_turnout: ++out.excluded.full_turnout; break;
            case ExclusionReason::zero_ballots: ++out.excluded.zero_ballots; break;
        }
    }
    return out;
}

}  // namespace elforensics
