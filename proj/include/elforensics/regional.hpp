#pragma once

// Regional analyses: who fills a histogram bin, and clusters of stations whose
// leader share (leader votes / registered) sits on a round value while their
// turnout does not.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "elforensics/dataset.hpp"
#include "elforensics/metrics.hpp"

namespace elforensics {

enum class Grouping { region, territory };

inline std::string_view to_string(Grouping g) noexcept {
    return g == Grouping::region ? "region" : "territory";
}

inline Grouping parse_grouping(std::string_view s) {
    if (s == "region") return Grouping::region;
    if (s == "territory") return Grouping::territory;
    throw ConfigError("unknown grouping '" + std::string(s) + "'");
}

// Territory labels are "region/territory".
inline std::string group_label(const StationRecord& r, Grouping g) {
    return g == Grouping::region ? r.region : r.region + "/" + r.territory;
}

struct PeakAttribution {
    MetricKind metric = MetricKind::turnout;
    Grouping grouping = Grouping::region;
    double bin_center = 0.0;
    double halfwidth = 0.05;
    std::size_t total_in_bin = 0;
    std::vector<std::pair<std::string, std::size_t>> per_group;  // count desc, then label
    double top_share = 0.0;
};

// Stations whose exact (jitter-free) percentage lies in
// [bin_center - halfwidth, bin_center + halfwidth]. Stations where the metric
// is undefined are skipped.
inline PeakAttribution attribute_bin(const ElectionDataset& ds, MetricKind metric, double bin_center,
                                     double halfwidth, Grouping grouping = Grouping::region) {
    if (!(bin_center >= 0.0 && bin_center <= 100.0)) throw ConfigError("bin center must be in [0, 100]");
    if (!(halfwidth > 0.0)) throw ConfigError("halfwidth must be positive");

    PeakAttribution a;
    a.metric = metric;
    a.grouping = grouping;
    a.bin_center = bin_center;
    a.halfwidth = halfwidth;
    std::map<std::string, std::size_t> counts;
    for (const auto& r : ds.records) {
        if (!metric_defined(r, metric)) continue;
        const double p = station_percent(r, metric);
        if (p < bin_center - halfwidth || p > bin_center + halfwidth) continue;
        ++counts[group_label(r, grouping)];
        ++a.total_in_bin;
    }
    a.per_group.assign(counts.begin(), counts.end());
    std::stable_sort(a.per_group.begin(), a.per_group.end(),
                     [](const auto& x, const auto& y) { return x.second > y.second; });
    if (a.total_in_bin > 0)
        a.top_share = static_cast<double>(a.per_group.front().second) / static_cast<double>(a.total_in_bin);
    return a;
}

struct ProductScanSpec {
    Grouping grouping = Grouping::region;
    double round_step = 0.5;  // leader-share targets are multiples of this
    double tolerance = 0.05;  // percentage points around a target
    std::size_t min_cluster = 20;
    IntegerBand turnout_band{0.05, 0, 100};  // turnouts treated as integer-centered

    void validate() const {
        if (!(round_step > 0.0)) throw ConfigError("round step must be positive");
        if (!(tolerance >= 0.0)) throw ConfigError("tolerance must be non-negative");
        turnout_band.validate();
    }
};

struct RoundProductHit {
    std::string group;
    double target = 0.0;  // round leader-share value, percent
    std::size_t station_count = 0;
    double mean_turnout = 0.0;
    double mean_leader_result = 0.0;
    double leader_share = 0.0;  // mean leader share of the cluster, percent
    double distance = 0.0;      // |leader_share - target|
};

// For every group, buckets stations whose leader share lies within tolerance
// of a multiple of round_step and whose turnout is not integer-centered;
// buckets with at least min_cluster stations are reported, largest first.
inline std::vector<RoundProductHit> round_product_scan(const ElectionDataset& ds,
                                                       const ProductScanSpec& spec = {}) {
    spec.validate();
    struct Acc {
        std::size_t n = 0;
        double turnout = 0.0, leader = 0.0, share = 0.0;
    };
    // (group, target index) -> members; members are summed in station-key
    // order so the output does not depend on record order.
    std::map<std::pair<std::string, long long>, std::vector<const StationRecord*>> buckets;
    for (const auto& r : ds.records) {
        if (r.registered <= 0 || r.ballots <= 0) continue;
        const double share = station_percent(r, MetricKind::leader_share);
        const long long idx = std::llround(share / spec.round_step);
        const double target = static_cast<double>(idx) * spec.round_step;
        if (std::abs(share - target) > spec.tolerance) continue;
        if (is_integer_hit(station_percent(r, MetricKind::turnout), spec.turnout_band)) continue;
        buckets[{group_label(r, spec.grouping), idx}].push_back(&r);
    }

    std::vector<RoundProductHit> hits;
    for (auto& [key, members] : buckets) {
        if (members.size() < spec.min_cluster) continue;
        std::sort(members.begin(), members.end(), [](const auto* a, const auto* b) {
            return std::tie(a->region, a->territory, a->station_id) <
                   std::tie(b->region, b->territory, b->station_id);
        });
        Acc acc;
        for (const auto* r : members) {
            ++acc.n;
            acc.turnout += station_percent(*r, MetricKind::turnout);
            acc.leader += station_percent(*r, MetricKind::leader_result);
            acc.share += station_percent(*r, MetricKind::leader_share);
        }
        RoundProductHit h;
        h.group = key.first;
        h.target = static_cast<double>(key.second) * spec.round_step;
        h.station_count = acc.n;
        h.mean_turnout = acc.turnout / static_cast<double>(acc.n);
        h.mean_leader_result = acc.leader / static_cast<double>(acc.n);
        h.leader_share = acc.share / static_cast<double>(acc.n);
        h.distance = std::abs(h.leader_share - h.target);
        hits.push_back(std::move(h));
    }
    std::stable_sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
        return a.station_count > b.station_count;
    });
    return hits;
}

}  // namespace elforensics
