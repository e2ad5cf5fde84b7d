#pragma once

// Percentages, the uniform numerator jitter, integer-proximity classification
// and round-target arithmetic. Everything here is a pure function; jitter
// values are supplied by the caller.

#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "elforensics/error.hpp"
#include "elforensics/station.hpp"

namespace elforensics {

enum class MetricKind {
    turnout,        // ballots / registered
    leader_result,  // leader_votes / ballots
    leader_share,   // leader_votes / registered
};

inline std::string_view to_string(MetricKind m) noexcept {
    switch (m) {
        case MetricKind::turnout: return "turnout";
        case MetricKind::leader_result: return "leader_result";
        case MetricKind::leader_share: return "leader_share";
    }
    return "unknown";
}

inline MetricKind parse_metric(std::string_view s) {
    if (s == "turnout") return MetricKind::turnout;
    if (s == "leader_result" || s == "leader") return MetricKind::leader_result;
    if (s == "leader_share") return MetricKind::leader_share;
    throw ConfigError("unknown metric '" + std::string(s) + "'");
}

struct JitterSpec {
    bool enabled = true;
    int draws = 100;  // J: realizations averaged by jitter-consuming statistics

    // Number of passes a statistic actually needs: with jitter off every
    // pass would be identical.
    int effective_draws() const noexcept { return enabled ? draws : 1; }

    void validate() const {
        if (draws < 1) throw ConfigError("jitter draws must be >= 1");
    }
};

// Window of +-halfwidth percentage points around each integer in [lo, hi].
struct IntegerBand {
    double halfwidth = 0.05;
    int lo = 1;
    int hi = 99;

    void validate() const {
        if (!(halfwidth > 0.0 && halfwidth <= 0.5))
            throw ConfigError("integer band halfwidth must be in (0, 0.5]");
        if (!(0 <= lo && lo <= hi && hi <= 100))
            throw ConfigError("integer band requires 0 <= lo <= hi <= 100");
    }

    int size() const noexcept { return hi - lo + 1; }
};

// 100 * (numerator + jitter) / denominator.
inline double percent(Count numerator, Count denominator, double jitter = 0.0) {
    if (denominator <= 0) throw UndefinedMetric("percentage with zero denominator");
    return 100.0 * (static_cast<double>(numerator) + jitter) / static_cast<double>(denominator);
}

// The integer k in [lo, hi] with |p - k| <= halfwidth, if any. When
// halfwidth == 0.5 and p sits exactly between two integers the lower one wins.
inline std::optional<int> is_integer_hit(double p, const IntegerBand& band) noexcept {
    if (!std::isfinite(p)) return std::nullopt;
    const double fl = std::floor(p);
    for (double k : {fl, fl + 1.0}) {
        if (k < band.lo || k > band.hi) continue;
        if (std::abs(p - k) <= band.halfwidth) return static_cast<int>(k);
    }
    return std::nullopt;
}

// Ballots needed for `registered` voters to show `target_percent` turnout,
// rounded half away from zero.
inline Count target_ballot_count(Count registered, double target_percent) {
    if (registered < 0) throw ConfigError("registered must be non-negative");
    if (!(target_percent >= 0.0 && target_percent <= 100.0))
        throw ConfigError("target percent must be in [0, 100]");
    const double exact = static_cast<double>(registered) * target_percent / 100.0;
    const auto rounded = static_cast<Count>(std::round(exact));
    return rounded > registered ? registered : rounded;
}

struct MetricFraction {
    Count numerator = 0;
    Count denominator = 0;
};

inline MetricFraction metric_fraction(const StationRecord& r, MetricKind m) noexcept {
    switch (m) {
        case MetricKind::turnout: return {r.ballots, r.registered};
        case MetricKind::leader_result: return {r.leader_votes, r.ballots};
        case MetricKind::leader_share: return {r.leader_votes, r.registered};
    }
    return {};
}

inline bool metric_defined(const StationRecord& r, MetricKind m) noexcept {
    return metric_fraction(r, m).denominator > 0;
}

inline double station_percent(const StationRecord& r, MetricKind m, double jitter = 0.0) {
    const auto f = metric_fraction(r, m);
    if (f.denominator <= 0)
        throw UndefinedMetric("station '" + r.station_id + "': " + std::string(to_string(m)) +
                              " undefined (zero denominator)");
    return percent(f.numerator, f.denominator, jitter);
}

}  // namespace elforensics
