#pragma once

// Integer-percentage anomaly statistic.
//
// A station "hits" when its jittered turnout (or leader result) lies within
// the IntegerBand window of a whole percentage. The observed hit count is
// compared with the distribution of hit counts under a plug-in binomial null:
// every station is re-simulated with its own observed rates,
//     ballots* ~ Binomial(registered, ballots / registered)
//     leader*  ~ Binomial(ballots*, leader_votes / ballots)
// and scored by its hit probability over the jitter distribution. Each
// (iteration, station) pair owns a counter-based random substream, so the
// report does not depend on how the work is split across threads.

#include <algorithm>
#include <boost/random/binomial_distribution.hpp>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "elforensics/binomial_table.hpp"
#include "elforensics/dataset.hpp"
#include "elforensics/metrics.hpp"
#include "elforensics/parallel.hpp"
#include "elforensics/random.hpp"

namespace elforensics {

struct AnomalyConfig {
    int iterations = 10000;
    std::uint64_t seed = 0;
    IntegerBand band{};
    JitterSpec jitter{};
    FilterSpec filter{.min_registered = 0, .exclude_full_turnout = false};
    double percentile = 99.9;
    unsigned threads = 0;  // execution only; excluded from the report

    void validate() const {
        if (iterations < 100) throw ConfigError("iterations must be >= 100");
        if (!(percentile > 50.0 && percentile < 100.0))
            throw ConfigError("percentile must be in (50, 100)");
        band.validate();
        jitter.validate();
        filter.validate();
    }
};

struct IntegerTally {
    int k = 0;
    double observed = 0.0;
    double expected = 0.0;
};

struct MetricAnomaly {
    double observed = 0.0;    // mean hit count over the J jitter draws
    double expected = 0.0;    // mean hit count over Monte Carlo iterations
    double excess = 0.0;      // observed - expected
    double threshold = 0.0;   // upper percentile of (simulated count - expected)
    double lower_band = 0.0;  // matching lower percentile, display only
    double p_value = 1.0;     // (1 + #{simulated >= observed}) / (iterations + 1)
    std::vector<IntegerTally> per_integer;
};

struct AnomalyReport {
    std::string election_id;
    std::string dataset_digest;
    AnomalyConfig config;
    std::size_t included_count = 0;
    ExclusionTally excluded;
    MetricAnomaly turnout;
    MetricAnomaly leader;
    MetricAnomaly either;  // stations hitting on turnout or leader result
};

// Integer-hit counts for one jitter realization. The "either" per-integer
// tally credits a station to its turnout integer when turnout hits and to its
// leader integer otherwise, so each per-integer vector sums to its total.
struct IntegerCounts {
    std::int64_t turnout = 0;
    std::int64_t leader = 0;
    std::int64_t either = 0;
    std::vector<std::int64_t> per_integer_turnout;
    std::vector<std::int64_t> per_integer_leader;
    std::vector<std::int64_t> per_integer_either;

    explicit IntegerCounts(const IntegerBand& band = {})
        : per_integer_turnout(static_cast<std::size_t>(band.size()), 0),
          per_integer_leader(static_cast<std::size_t>(band.size()), 0),
          per_integer_either(static_cast<std::size_t>(band.size()), 0) {}
};

// Jitter for (station index, metric); return 0 for jitter-free counting.
using JitterSource = std::function<double(std::size_t station, MetricKind metric)>;

struct StationHits {
    std::optional<int> turnout;
    std::optional<int> leader;
};

// Classification of one station's (possibly simulated) counts.
inline StationHits classify_station(Count registered, Count ballots, Count leader_votes,
                                    double turnout_jitter, double leader_jitter,
                                    const IntegerBand& band) noexcept {
    StationHits h;
    if (registered > 0)
        h.turnout = is_integer_hit(100.0 * (static_cast<double>(ballots) + turnout_jitter) /
                                       static_cast<double>(registered),
                                   band);
    if (ballots > 0)
        h.leader = is_integer_hit(100.0 * (static_cast<double>(leader_votes) + leader_jitter) /
                                      static_cast<double>(ballots),
                                  band);
    return h;
}

inline void tally_hits(const StationHits& h, const IntegerBand& band, IntegerCounts& c) {
    if (h.turnout) {
        ++c.turnout;
        ++c.per_integer_turnout[static_cast<std::size_t>(*h.turnout - band.lo)];
    }
    if (h.leader) {
        ++c.leader;
        ++c.per_integer_leader[static_cast<std::size_t>(*h.leader - band.lo)];
    }
    if (h.turnout || h.leader) {
        ++c.either;
        const int k = h.turnout ? *h.turnout : *h.leader;
        ++c.per_integer_either[static_cast<std::size_t>(k - band.lo)];
    }
}

// Counts integer-hit stations among `indices`. Leader result is evaluated
// only where ballots > 0.
inline IntegerCounts count_integer_stations(const std::vector<StationRecord>& records,
                                            const std::vector<std::size_t>& indices,
                                            const IntegerBand& band, const JitterSource& jitter) {
    IntegerCounts c(band);
    for (std::size_t s : indices) {
        const auto& r = records[s];
        const double ut = jitter ? jitter(s, MetricKind::turnout) : 0.0;
        const double ul = jitter ? jitter(s, MetricKind::leader_result) : 0.0;
        tally_hits(classify_station(r.registered, r.ballots, r.leader_votes, ut, ul, band), band, c);
    }
    return c;
}

struct SimulatedCounts {
    Count ballots = 0;
    Count leader_votes = 0;
};

// Binomial resampler for one station. Ballots come from a tabulated
// inverse CDF built once per station; the leader draw, whose trial count
// changes every iteration, uses BTRD.
class StationSimulator {
public:
    using Binomial = boost::random::binomial_distribution<Count, double>;

    explicit StationSimulator(const StationRecord& r)
        : registered_(r.registered),
          leader_rate_(r.ballots > 0 ? static_cast<double>(r.leader_votes) / r.ballots : 0.0),
          ballots_(r.registered,
                   r.registered > 0 ? static_cast<double>(r.ballots) / r.registered : 0.0) {}

    SimulatedCounts operator()(SplitMix64& rng) const {
        SimulatedCounts s;
        s.ballots = ballots_(rng);
        if (s.ballots > 0 && leader_rate_ > 0.0)
            s.leader_votes = leader_rate_ >= 1.0 ? s.ballots : Binomial(s.ballots, leader_rate_)(rng);
        assert(0 <= s.leader_votes && s.leader_votes <= s.ballots && s.ballots <= registered_);
        return s;
    }

private:
    Count registered_;
    double leader_rate_;
    BinomialTable ballots_;
};

inline SimulatedCounts simulate_station(const StationRecord& r, SplitMix64& rng) {
    return StationSimulator(r)(rng);
}

// Type-7 (linear interpolation) quantile of an ascending-sorted sample.
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0.0;
    const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

// Fixed-point unit for hit probabilities. Null-sample sums are integers, so
// they do not depend on how stations are split across workers.
inline constexpr double kHitMassUnit = 4294967296.0;  // 2^32

inline std::int64_t to_hit_mass(double p) noexcept { return std::llround(p * kHitMassUnit); }

// Visits (k, probability) for every integer k in the band hit by
// 100 * (num + u) / den with u ~ U(-0.5, 0.5).
template <class Visit>
void jitter_hit_probabilities(Count num, Count den, const IntegerBand& band, Visit&& visit) {
    const double step = 100.0 / static_cast<double>(den);
    const double lo = (static_cast<double>(num) - 0.5) * step;
    const double hi = (static_cast<double>(num) + 0.5) * step;
    const int k0 = std::max(band.lo, static_cast<int>(std::ceil(lo - band.halfwidth)));
    const int k1 = std::min(band.hi, static_cast<int>(std::floor(hi + band.halfwidth)));
    for (int k = k0; k <= k1; ++k) {
        const double len = std::min(hi, k + band.halfwidth) - std::max(lo, k - band.halfwidth);
        if (len > 0.0) visit(k, len / step);
    }
}

namespace detail {

// Per-iteration simulated hit masses plus per-integer masses summed over all
// iterations, in kHitMassUnit.
struct NullSample {
    std::vector<std::int64_t> turnout, leader, either;
    std::vector<std::int64_t> per_integer_turnout, per_integer_leader, per_integer_either;

    NullSample(int iterations, const IntegerBand& band)
        : turnout(static_cast<std::size_t>(iterations), 0),
          leader(static_cast<std::size_t>(iterations), 0),
          either(static_cast<std::size_t>(iterations), 0),
          per_integer_turnout(static_cast<std::size_t>(band.size()), 0),
          per_integer_leader(static_cast<std::size_t>(band.size()), 0),
          per_integer_either(static_cast<std::size_t>(band.size()), 0) {}

    NullSample& operator+=(const NullSample& o) {
        for (std::size_t i = 0; i < turnout.size(); ++i) {
            turnout[i] += o.turnout[i];
            leader[i] += o.leader[i];
            either[i] += o.either[i];
        }
        for (std::size_t k = 0; k < per_integer_turnout.size(); ++k) {
            per_integer_turnout[k] += o.per_integer_turnout[k];
            per_integer_leader[k] += o.per_integer_leader[k];
            per_integer_either[k] += o.per_integer_either[k];
        }
        return *this;
    }
};

// Each simulated station contributes its hit probability over the jitter
// distribution, the limit of averaging infinitely many jitter draws.
inline void simulate_range(const ElectionDataset& ds, const std::vector<std::size_t>& indices,
                           std::size_t begin, std::size_t end, const AnomalyConfig& cfg,
                           NullSample& out) {
    const int iters = cfg.iterations;
    const bool jitter = cfg.jitter.enabled;
    const auto& band = cfg.band;
    const std::int64_t one = to_hit_mass(1.0);
    for (std::size_t i = begin; i < end; ++i) {
        const std::size_t station = indices[i];
        const auto& rec = ds.records[station];
        if (rec.registered <= 0) continue;
        const StationSimulator sim(rec);
        for (int it = 0; it < iters; ++it) {
            auto rng = substream(cfg.seed, StreamTag::monte_carlo, static_cast<std::uint64_t>(it),
                                 station);
            const auto s = sim(rng);
            std::int64_t t = 0, l = 0, e = 0;
            if (jitter) {
                double pt = 0.0;
                jitter_hit_probabilities(s.ballots, rec.registered, band, [&](int k, double p) {
                    const auto m = to_hit_mass(p);
                    const auto kk = static_cast<std::size_t>(k - band.lo);
                    t += m;
                    out.per_integer_turnout[kk] += m;
                    out.per_integer_either[kk] += m;
                    pt += p;
                });
                e = t;
                if (s.ballots > 0) {
                    const double miss = 1.0 - pt;
                    jitter_hit_probabilities(s.leader_votes, s.ballots, band, [&](int k, double p) {
                        const auto m = to_hit_mass(p);
                        const auto me = to_hit_mass(miss * p);
                        const auto kk = static_cast<std::size_t>(k - band.lo);
                        l += m;
                        e += me;
                        out.per_integer_leader[kk] += m;
                        out.per_integer_either[kk] += me;
                    });
                }
            } else {
                const auto h = classify_station(rec.registered, s.ballots, s.leader_votes, 0.0, 0.0, band);
                if (h.turnout) {
                    t = one;
                    out.per_integer_turnout[static_cast<std::size_t>(*h.turnout - band.lo)] += one;
                }
                if (h.leader) {
                    l = one;
                    out.per_integer_leader[static_cast<std::size_t>(*h.leader - band.lo)] += one;
                }
                if (h.turnout || h.leader) {
                    e = one;
                    const int k = h.turnout ? *h.turnout : *h.leader;
                    out.per_integer_either[static_cast<std::size_t>(k - band.lo)] += one;
                }
            }
            const auto idx = static_cast<std::size_t>(it);
            out.turnout[idx] += t;
            out.leader[idx] += l;
            out.either[idx] += e;
        }
    }
}

inline MetricAnomaly summarize(std::int64_t observed_sum, int draws,
                               const std::vector<std::int64_t>& simulated,
                               const std::vector<std::int64_t>& observed_per_integer,
                               const std::vector<std::int64_t>& simulated_per_integer,
                               const AnomalyConfig& cfg) {
    MetricAnomaly m;
    const double iters = static_cast<double>(simulated.size());
    m.observed = static_cast<double>(observed_sum) / draws;

    // simulated >= observed_sum / draws, compared exactly in integers
    const auto unit = static_cast<__int128>(to_hit_mass(1.0));
    const __int128 observed_scaled = static_cast<__int128>(observed_sum) * unit;
    __int128 total = 0;
    std::int64_t at_least = 0;
    for (auto c : simulated) {
        total += c;
        if (static_cast<__int128>(c) * draws >= observed_scaled) ++at_least;
    }
    m.expected = static_cast<double>(total) / kHitMassUnit / iters;
    m.excess = m.observed - m.expected;
    m.p_value = static_cast<double>(1 + at_least) / (iters + 1.0);

    std::vector<double> centered(simulated.size());
    for (std::size_t i = 0; i < simulated.size(); ++i)
        centered[i] = static_cast<double>(simulated[i]) / kHitMassUnit - m.expected;
    std::sort(centered.begin(), centered.end());
    m.threshold = quantile_sorted(centered, cfg.percentile / 100.0);
    m.lower_band = quantile_sorted(centered, 1.0 - cfg.percentile / 100.0);

    m.per_integer.reserve(observed_per_integer.size());
    for (std::size_t k = 0; k < observed_per_integer.size(); ++k) {
        m.per_integer.push_back({cfg.band.lo + static_cast<int>(k),
                                 static_cast<double>(observed_per_integer[k]) / draws,
                                 static_cast<double>(simulated_per_integer[k]) / kHitMassUnit / iters});
    }
    return m;
}

}  // namespace detail

// Observed jitter for draw d: one substream per (draw, station, metric).
inline JitterSource observed_jitter(std::uint64_t seed, int draw) {
    return [seed, draw](std::size_t station, MetricKind metric) {
        auto rng = substream(seed, StreamTag::observed_jitter, static_cast<std::uint64_t>(draw),
                             2 * static_cast<std::uint64_t>(station) +
                                 (metric == MetricKind::turnout ? 0 : 1));
        return draw_jitter(rng);
    };
}

inline AnomalyReport run_anomaly(const ElectionDataset& ds, const AnomalyConfig& cfg) {
    cfg.validate();
    const auto filtered = apply_filter(ds, cfg.filter, MetricKind::turnout);
    if (filtered.included.empty())
        throw Error("election '" + ds.election_id + "': no stations left after filtering");

    AnomalyReport rep;
    rep.election_id = ds.election_id;
    rep.dataset_digest = ds.source_digest;
    rep.config = cfg;
    rep.included_count = filtered.included.size();
    rep.excluded = filtered.excluded;

    const int draws = cfg.jitter.effective_draws();
    IntegerCounts observed(cfg.band);
    for (int d = 0; d < draws; ++d) {
        const auto c = count_integer_stations(
            ds.records, filtered.included, cfg.band,
            cfg.jitter.enabled ? observed_jitter(cfg.seed, d) : JitterSource{});
        observed.turnout += c.turnout;
        observed.leader += c.leader;
        observed.either += c.either;
        for (std::size_t k = 0; k < c.per_integer_turnout.size(); ++k) {
            observed.per_integer_turnout[k] += c.per_integer_turnout[k];
            observed.per_integer_leader[k] += c.per_integer_leader[k];
            observed.per_integer_either[k] += c.per_integer_either[k];
        }
    }

    const auto& idx = filtered.included;
    const unsigned threads = resolve_threads(cfg.threads);
    std::vector<detail::NullSample> partial(worker_count(idx.size(), threads),
                                            detail::NullSample(cfg.iterations, cfg.band));
    parallel_chunks(idx.size(), threads, [&](std::size_t b, std::size_t e, unsigned w) {
        detail::simulate_range(ds, idx, b, e, cfg, partial[w]);
    });
    detail::NullSample null_sample = std::move(partial.front());
    for (std::size_t w = 1; w < partial.size(); ++w) null_sample += partial[w];

    rep.turnout = detail::summarize(observed.turnout, draws, null_sample.turnout,
                                    observed.per_integer_turnout,
                                    null_sample.per_integer_turnout, cfg);
    rep.leader = detail::summarize(observed.leader, draws, null_sample.leader,
                                   observed.per_integer_leader,
                                   null_sample.per_integer_leader, cfg);
    rep.either = detail::summarize(observed.either, draws, null_sample.either,
                                   observed.per_integer_either,
                                   null_sample.per_integer_either, cfg);
    return rep;
}

struct SeriesRow {
    std::string election_id;
    double turnout_excess = 0, turnout_threshold = 0;
    double leader_excess = 0, leader_threshold = 0;
    double either_excess = 0, either_threshold = 0;
    double either_p_value = 1;
};

struct AnomalySeries {
    std::vector<AnomalyReport> reports;  // input order
    std::vector<SeriesRow> table;
};

inline SeriesRow series_row(const AnomalyReport& r) {
    return {r.election_id,    r.turnout.excess, r.turnout.threshold, r.leader.excess,
            r.leader.threshold, r.either.excess, r.either.threshold,  r.either.p_value};
}

inline AnomalySeries run_series(const std::vector<ElectionDataset>& datasets,
                                const AnomalyConfig& cfg) {
    if (datasets.empty()) throw ConfigError("anomaly series needs at least one dataset");
    AnomalySeries out;
    for (const auto& ds : datasets) {
        try {
            out.reports.push_back(run_anomaly(ds, cfg));
        } catch (const IoError& e) {
            throw IoError("election '" + ds.election_id + "': " + e.what());
        } catch (const Error& e) {
            const std::string msg = e.what();
            if (msg.rfind("election '", 0) == 0) throw;
            throw Error("election '" + ds.election_id + "': " + msg);
        }
        out.table.push_back(series_row(out.reports.back()));
    }
    return out;
}

}  // namespace elforensics
