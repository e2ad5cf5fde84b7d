#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "elforensics/random.hpp"
#include "elforensics/station.hpp"

namespace elforensics {

// Inverse-CDF sampler for a fixed Binomial(n, p), for parameters that are
// reused many times. The support is cut at 12 standard deviations from the
// mean (tail mass far below double resolution), the pmf is filled by the
// ratio recurrence outward from the mode, and lookups go through a guide
// table so a draw costs one uniform and O(1) expected comparisons.
class BinomialTable {
public:
    BinomialTable() = default;

    BinomialTable(Count n, double p) {
        if (n <= 0 || p <= 0.0) {
            lo_ = 0;
            degenerate_ = true;
            return;
        }
        if (p >= 1.0) {
            lo_ = n;
            degenerate_ = true;
            return;
        }
        degenerate_ = false;
        const double mean = static_cast<double>(n) * p;
        const double sd = std::sqrt(mean * (1.0 - p));
        lo_ = std::max<Count>(0, static_cast<Count>(std::floor(mean - 12.0 * sd - 1.0)));
        const Count hi = std::min<Count>(n, static_cast<Count>(std::ceil(mean + 12.0 * sd + 1.0)));
        const Count mode = std::clamp<Count>(static_cast<Count>(std::floor((n + 1) * p)), lo_, hi);

        const std::size_t size = static_cast<std::size_t>(hi - lo_ + 1);
        std::vector<double> pmf(size, 0.0);
        const double odds = p / (1.0 - p);
        const auto m = static_cast<std::size_t>(mode - lo_);
        pmf[m] = 1.0;
        for (std::size_t i = m; i > 0; --i) {
            // pmf(k-1) = pmf(k) * k / ((n - k + 1) * odds)
            const double k = static_cast<double>(lo_ + static_cast<Count>(i));
            pmf[i - 1] = pmf[i] * k / ((static_cast<double>(n) - k + 1.0) * odds);
        }
        for (std::size_t i = m; i + 1 < size; ++i) {
            // pmf(k+1) = pmf(k) * (n - k) / (k + 1) * odds
            const double k = static_cast<double>(lo_ + static_cast<Count>(i));
            pmf[i + 1] = pmf[i] * (static_cast<double>(n) - k) / (k + 1.0) * odds;
        }
        double total = 0.0;
        for (double v : pmf) total += v;

        cdf_.resize(size);
        double acc = 0.0;
        for (std::size_t i = 0; i < size; ++i) {
            acc += pmf[i] / total;
            cdf_[i] = acc;
        }
        cdf_.back() = 1.0;

        guide_.resize(size);
        std::size_t j = 0;
        for (std::size_t g = 0; g < size; ++g) {
            const double edge = static_cast<double>(g) / static_cast<double>(size);
            while (cdf_[j] <= edge) ++j;
            guide_[g] = static_cast<std::uint32_t>(j);
        }
    }

    Count operator()(SplitMix64& rng) const noexcept {
        if (degenerate_) return lo_;
        const double u = rng.uniform();
        std::size_t i = guide_[static_cast<std::size_t>(u * static_cast<double>(guide_.size()))];
        while (cdf_[i] <= u) ++i;
        return lo_ + static_cast<Count>(i);
    }

    Count support_lo() const noexcept { return lo_; }
    Count support_hi() const noexcept {
        return degenerate_ ? lo_ : lo_ + static_cast<Count>(cdf_.size()) - 1;
    }

private:
    Count lo_ = 0;
    bool degenerate_ = true;
    std::vector<double> cdf_;
    std::vector<std::uint32_t> guide_;
};

}  // namespace elforensics
