#pragma once

#include <cstdint>
#include <string>

namespace elforensics {

using Count = std::int64_t;

// One polling station's counts. Invariant: 0 <= leader_votes <= ballots <= registered.
struct StationRecord {
    std::string region;     // administrative region
    std::string territory;  // territorial commission / city
    std::string station_id;
    Count registered = 0;
    Count ballots = 0;
    Count leader_votes = 0;

    bool operator==(const StationRecord&) const = default;
};

inline bool counts_consistent(const StationRecord& r) noexcept {
    return 0 <= r.leader_votes && r.leader_votes <= r.ballots && r.ballots <= r.registered;
}

}  // namespace elforensics
