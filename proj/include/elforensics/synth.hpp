#pragma once

// Synthetic elections: an honest generator (heterogeneous binomial counts) and
// round-percentage fraud injection with ground-truth labels.

#include <boost/random/beta_distribution.hpp>
#include <boost/random/binomial_distribution.hpp>
#include <boost/random/lognormal_distribution.hpp>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "elforensics/dataset.hpp"
#include "elforensics/metrics.hpp"
#include "elforensics/random.hpp"

namespace elforensics {

struct SynthSpec {
    std::string election_id = "synthetic";
    std::int64_t station_count = 1000;
    // log-normal station sizes, clamped
    double size_median = 1000.0;
    double size_sigma = 0.7;
    Count size_min = 10;
    Count size_max = 5000;
    // per-station true turnout and leader support ~ Beta
    double turnout_alpha = 7.0, turnout_beta = 3.0;
    double leader_alpha = 6.0, leader_beta = 4.0;
    int region_count = 20;
    int territories_per_region = 5;
    std::uint64_t seed = 0;

    void validate() const {
        if (station_count < 1) throw ConfigError("station count must be >= 1");
        if (!(size_median > 0 && size_sigma > 0 && turnout_alpha > 0 && turnout_beta > 0 &&
              leader_alpha > 0 && leader_beta > 0))
            throw ConfigError("distribution parameters must be positive");
        if (size_min < 1 || size_min > size_max) throw ConfigError("invalid station size clamp");
        if (region_count < 1 || territories_per_region < 1)
            throw ConfigError("region and territory counts must be >= 1");
    }
};

enum class FraudTarget { turnout, leader_result, both };

inline std::string_view to_string(FraudTarget t) noexcept {
    switch (t) {
        case FraudTarget::turnout: return "turnout";
        case FraudTarget::leader_result: return "leader_result";
        case FraudTarget::both: return "both";
    }
    return "unknown";
}

inline FraudTarget parse_fraud_target(std::string_view s) {
    if (s == "turnout") return FraudTarget::turnout;
    if (s == "leader_result" || s == "leader") return FraudTarget::leader_result;
    if (s == "both") return FraudTarget::both;
    throw ConfigError("unknown fraud target '" + std::string(s) + "'");
}

// Multiples of 5 in [60, 95] weigh 2, every other integer in [50, 99] weighs 1.
inline std::vector<std::pair<int, double>> default_target_weights() {
    std::vector<std::pair<int, double>> w;
    for (int t = 50; t <= 99; ++t) w.emplace_back(t, (t % 5 == 0 && t >= 60 && t <= 95) ? 2.0 : 1.0);
    return w;
}

struct FraudSpec {
    double fraction = 0.05;
    FraudTarget target_metric = FraudTarget::turnout;
    std::vector<std::pair<int, double>> target_weights = default_target_weights();
    std::uint64_t seed = 0;

    void validate() const {
        if (!(fraction >= 0.0 && fraction <= 1.0)) throw ConfigError("fraud fraction must be in [0, 1]");
        bool positive = false;
        for (const auto& [t, w] : target_weights) {
            if (!(w >= 0.0)) throw ConfigError("target weights must be non-negative");
            if (t < 0 || t > 100) throw ConfigError("targets must be in [0, 100]");
            positive = positive || w > 0.0;
        }
        if (!positive) throw ConfigError("at least one target weight must be positive");
    }
};

struct TruthLabel {
    std::string station_id;
    bool falsified = false;
    FraudTarget metric = FraudTarget::turnout;
    std::optional<int> turnout_target;
    std::optional<int> leader_target;
};

struct GroundTruth {
    std::vector<TruthLabel> labels;  // dataset order

    std::size_t falsified_count() const {
        return static_cast<std::size_t>(
            std::count_if(labels.begin(), labels.end(), [](const auto& l) { return l.falsified; }));
    }
};

inline ElectionDataset generate_honest(const SynthSpec& spec) {
    spec.validate();
    using boost::random::beta_distribution;
    using boost::random::binomial_distribution;
    using boost::random::lognormal_distribution;

    const lognormal_distribution<double> size_dist(std::log(spec.size_median), spec.size_sigma);
    const beta_distribution<double> turnout_dist(spec.turnout_alpha, spec.turnout_beta);
    const beta_distribution<double> leader_dist(spec.leader_alpha, spec.leader_beta);
    const int width = static_cast<int>(std::to_string(spec.station_count).size());

    std::vector<StationRecord> records;
    records.reserve(static_cast<std::size_t>(spec.station_count));
    for (std::int64_t i = 0; i < spec.station_count; ++i) {
        auto rng = substream(spec.seed, StreamTag::synth_station, static_cast<std::uint64_t>(i), 0);
        StationRecord r;
        const int region = static_cast<int>(i % spec.region_count);
        const int territory = static_cast<int>((i / spec.region_count) % spec.territories_per_region);
        r.region = "region-" + std::to_string(region + 1);
        r.territory = r.region + "-tik-" + std::to_string(territory + 1);
        std::string num = std::to_string(i + 1);
        r.station_id = "PS-" + std::string(static_cast<std::size_t>(width) - num.size(), '0') + num;

        const double size = std::round(lognormal_distribution<double>(size_dist)(rng));
        r.registered = std::clamp(static_cast<Count>(size), spec.size_min, spec.size_max);
        const double p = beta_distribution<double>(turnout_dist)(rng);
        r.ballots = binomial_distribution<Count, double>(r.registered, p)(rng);
        const double q = beta_distribution<double>(leader_dist)(rng);
        r.leader_votes = r.ballots > 0 ? binomial_distribution<Count, double>(r.ballots, q)(rng) : 0;
        records.push_back(std::move(r));
    }
    return make_dataset(spec.election_id, std::move(records));
}

namespace detail {

inline std::uint64_t uniform_index(SplitMix64& rng, std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(rng()) * n) >> 64);
}

inline int draw_target(SplitMix64& rng, const std::vector<std::pair<int, double>>& weights) {
    double total = 0.0;
    for (const auto& [t, w] : weights) total += w;
    double u = rng.uniform() * total;
    for (const auto& [t, w] : weights) {
        if (u < w) return t;
        u -= w;
    }
    for (auto it = weights.rbegin(); it != weights.rend(); ++it)
        if (it->second > 0.0) return it->first;
    return weights.back().first;
}

inline Count round_half_away(double x) { return static_cast<Count>(std::round(x)); }

}  // namespace detail

// Forces a station's turnout to `target` percent, rescaling leader votes in
// proportion so the leader result is preserved as closely as possible.
inline void falsify_turnout(StationRecord& r, int target) {
    const Count new_ballots = target_ballot_count(r.registered, target);
    if (r.ballots > 0) {
        const double scaled =
            static_cast<double>(r.leader_votes) * static_cast<double>(new_ballots) / r.ballots;
        r.leader_votes = std::min(detail::round_half_away(scaled), new_ballots);
    } else {
        r.leader_votes = 0;
    }
    r.ballots = new_ballots;
}

inline void falsify_leader(StationRecord& r, int target) {
    r.leader_votes = target_ballot_count(r.ballots, target);
}

struct FalsifiedElection {
    ElectionDataset dataset;
    GroundTruth truth;
};

inline FalsifiedElection inject_fraud(const ElectionDataset& ds, const FraudSpec& fraud) {
    fraud.validate();
    const std::size_t n = ds.records.size();
    const auto m = static_cast<std::size_t>(
        std::min<Count>(detail::round_half_away(fraud.fraction * static_cast<double>(n)),
                        static_cast<Count>(n)));

    // partial Fisher-Yates over station positions
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto pick = substream(fraud.seed, StreamTag::fraud_selection, 0, 0);
    for (std::size_t i = 0; i < m; ++i) {
        const auto j = i + static_cast<std::size_t>(detail::uniform_index(pick, n - i));
        std::swap(order[i], order[j]);
    }
    std::vector<bool> selected(n, false);
    for (std::size_t i = 0; i < m; ++i) selected[order[i]] = true;

    FalsifiedElection out;
    out.dataset = ds;
    out.truth.labels.reserve(n);
    for (std::size_t s = 0; s < n; ++s) {
        auto& rec = out.dataset.records[s];
        TruthLabel label;
        label.station_id = rec.station_id;
        if (selected[s]) {
            auto rng = substream(fraud.seed, StreamTag::fraud_target, s, 0);
            label.falsified = true;
            label.metric = fraud.target_metric;
            if (fraud.target_metric != FraudTarget::leader_result) {
                const int t = detail::draw_target(rng, fraud.target_weights);
                falsify_turnout(rec, t);
                label.turnout_target = t;
            }
            if (fraud.target_metric != FraudTarget::turnout) {
                const int t = detail::draw_target(rng, fraud.target_weights);
                falsify_leader(rec, t);
                label.leader_target = t;
            }
        }
        out.truth.labels.push_back(std::move(label));
    }
    out.dataset.source_digest = sha256_hex(to_csv(out.dataset.records));
    return out;
}

// CSV: station_id,label,target_metric,target_percent. Honest rows leave the
// last two fields empty; "both" rows write "turnout;leader" targets.
inline std::string truth_csv(const GroundTruth& truth) {
    std::string out = "station_id,label,target_metric,target_percent\n";
    for (const auto& l : truth.labels) {
        out += detail::csv_field(l.station_id);
        if (!l.falsified) {
            out += ",honest,,\n";
            continue;
        }
        out += ",falsified,";
        out += to_string(l.metric);
        out.push_back(',');
        if (l.turnout_target) out += std::to_string(*l.turnout_target);
        if (l.turnout_target && l.leader_target) out.push_back(';');
        if (l.leader_target) out += std::to_string(*l.leader_target);
        out.push_back('\n');
    }
    return out;
}

}  // namespace elforensics
