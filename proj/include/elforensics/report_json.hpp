#pragma once

// Deterministic JSON for reports: keys are emitted in a fixed order and
// doubles use the shortest representation that round-trips.
//
// Anomaly report schema (one object per election):
//   election_id, dataset_digest,
//   config { iterations, seed, percentile,
//            band { halfwidth, lo, hi }, jitter { enabled, draws },
//            filter { min_registered, exclude_full_turnout } },
//   included_stations,
//   excluded { zero_registered, below_min_registered, full_turnout, zero_ballots },
//   turnout | leader | either {
//       observed, expected, excess, threshold, lower_band, p_value,
//       per_integer [ { k, observed, expected } ] }

#include <json.hpp>

#include <string>
#include <vector>

#include "elforensics/anomaly.hpp"
#include "elforensics/regional.hpp"

namespace elforensics {

using Json = nlohmann::ordered_json;

inline Json to_json(const IntegerBand& b) {
    return Json{{"halfwidth", b.halfwidth}, {"lo", b.lo}, {"hi", b.hi}};
}

inline Json to_json(const JitterSpec& j) { return Json{{"enabled", j.enabled}, {"draws", j.draws}}; }

inline Json to_json(const FilterSpec& f) {
    return Json{{"min_registered", f.min_registered}, {"exclude_full_turnout", f.exclude_full_turnout}};
}

inline Json to_json(const ExclusionTally& t) {
    return Json{{"zero_registered", t.zero_registered},
                {"below_min_registered", t.below_min_registered},
                {"full_turnout", t.full_turnout},
                {"zero_ballots", t.zero_ballots}};
}

inline Json to_json(const AnomalyConfig& c) {
    return Json{{"iterations", c.iterations}, {"seed", c.seed},          {"percentile", c.percentile},
                {"band", to_json(c.band)},    {"jitter", to_json(c.jitter)}, {"filter", to_json(c.filter)}};
}

inline Json to_json(const MetricAnomaly& m) {
    Json per = Json::array();
    for (const auto& t : m.per_integer)
        per.push_back(Json{{"k", t.k}, {"observed", t.observed}, {"expected", t.expected}});
    return Json{{"observed", m.observed},   {"expected", m.expected},     {"excess", m.excess},
                {"threshold", m.threshold}, {"lower_band", m.lower_band}, {"p_value", m.p_value},
                {"per_integer", std::move(per)}};
}

inline Json to_json(const AnomalyReport& r) {
    return Json{{"election_id", r.election_id},
                {"dataset_digest", r.dataset_digest},
                {"config", to_json(r.config)},
                {"included_stations", r.included_count},
                {"excluded", to_json(r.excluded)},
                {"turnout", to_json(r.turnout)},
                {"leader", to_json(r.leader)},
                {"either", to_json(r.either)}};
}

inline Json to_json(const SeriesRow& row) {
    return Json{{"election_id", row.election_id},
                {"turnout_excess", row.turnout_excess},
                {"turnout_threshold", row.turnout_threshold},
                {"leader_excess", row.leader_excess},
                {"leader_threshold", row.leader_threshold},
                {"either_excess", row.either_excess},
                {"either_threshold", row.either_threshold},
                {"either_p_value", row.either_p_value}};
}

inline Json to_json(const AnomalySeries& s) {
    Json reports = Json::array(), table = Json::array();
    for (const auto& r : s.reports) reports.push_back(to_json(r));
    for (const auto& row : s.table) table.push_back(to_json(row));
    return Json{{"reports", std::move(reports)}, {"series", std::move(table)}};
}

inline Json to_json(const PeakAttribution& a) {
    Json groups = Json::array();
    for (const auto& [label, n] : a.per_group) groups.push_back(Json{{"group", label}, {"count", n}});
    return Json{{"metric", to_string(a.metric)},
                {"grouping", to_string(a.grouping)},
                {"bin_center", a.bin_center},
                {"halfwidth", a.halfwidth},
                {"total_in_bin", a.total_in_bin},
                {"top_share", a.top_share},
                {"per_group", std::move(groups)}};
}

inline Json to_json(const RoundProductHit& h) {
    return Json{{"group", h.group},
                {"target", h.target},
                {"station_count", h.station_count},
                {"mean_turnout", h.mean_turnout},
                {"mean_leader_result", h.mean_leader_result},
                {"leader_share", h.leader_share},
                {"distance", h.distance}};
}

inline Json to_json(const std::vector<RoundProductHit>& hits) {
    Json arr = Json::array();
    for (const auto& h : hits) arr.push_back(to_json(h));
    return arr;
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace elforensics
