#pragma once

// Fixed-width jittered percentage histograms and local-median peak detection.
//
// Bin k has center c_k = 100 * k / K (K = 100 / bin_width) and covers the
// half-open window [c_k - w/2, c_k + w/2), so with 0.1% bins the 50% bin
// holds 50 +- 0.05. Values outside [0, 100] clamp into the end bins.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "elforensics/dataset.hpp"
#include "elforensics/format.hpp"
#include "elforensics/metrics.hpp"
#include "elforensics/parallel.hpp"
#include "elforensics/random.hpp"

namespace elforensics {

struct HistogramSpec {
    MetricKind metric = MetricKind::turnout;
    double bin_width = 0.1;
    JitterSpec jitter{};
    FilterSpec filter{};
    std::uint64_t seed = 0;
    unsigned threads = 1;  // execution only; never affects the counts

    int intervals() const { return static_cast<int>(std::lround(100.0 / bin_width)); }

    void validate() const {
        if (!(bin_width > 0.0) || !std::isfinite(bin_width))
            throw ConfigError("bin width must be positive");
        const double n = 100.0 / bin_width;
        if (std::abs(n - std::round(n)) > 1e-9 * n || n > 1e7)
            throw ConfigError("100 / bin width must be an integer");
        jitter.validate();
        filter.validate();
    }
};

// Bin layout shared by the histogram and anything that needs to place values.
class BinGrid {
public:
    explicit BinGrid(int intervals) : intervals_(intervals), width_(100.0 / intervals) {}

    int bin_count() const noexcept { return intervals_ + 1; }
    double width() const noexcept { return width_; }
    double center(int k) const noexcept { return 100.0 * k / intervals_; }
    // Neighbouring windows share one edge value so the grid tiles exactly.
    double lower(int k) const noexcept { return 100.0 * (2 * k - 1) / (2.0 * intervals_); }
    double upper(int k) const noexcept { return lower(k + 1); }

    int index(double v) const noexcept {
        if (!(v >= lower(0))) return 0;
        if (v >= upper(intervals_)) return intervals_;
        int k = static_cast<int>(std::floor(v / width_ + 0.5));
        k = std::clamp(k, 0, intervals_);
        // Settle floating-point ties against the exact window definition.
        while (k > 0 && v < lower(k)) --k;
        while (k < intervals_ && v >= upper(k)) ++k;
        return k;
    }

private:
    int intervals_;
    double width_;
};

struct Histogram {
    HistogramSpec spec;
    std::vector<std::uint64_t> counts;  // one increment per station per jitter draw
    int draws = 1;                      // J actually used (1 when jitter is off)
    std::size_t included_count = 0;
    ExclusionTally excluded;

    BinGrid grid() const { return BinGrid(spec.intervals()); }
    double normalized(int k) const noexcept {
        return static_cast<double>(counts[static_cast<std::size_t>(k)]) / draws;
    }
    double normalized_mass() const noexcept {
        std::uint64_t total = 0;
        for (auto c : counts) total += c;
        return static_cast<double>(total) / draws;
    }
};

inline Histogram build_histogram(const ElectionDataset& ds, const HistogramSpec& spec) {
    spec.validate();
    const BinGrid grid(spec.intervals());
    auto filtered = apply_filter(ds, spec.filter, spec.metric);

    Histogram h;
    h.spec = spec;
    h.draws = spec.jitter.effective_draws();
    h.included_count = filtered.included.size();
    h.excluded = filtered.excluded;
    h.counts.assign(static_cast<std::size_t>(grid.bin_count()), 0);

    const auto& idx = filtered.included;
    const unsigned threads = resolve_threads(spec.threads);
    std::vector<std::vector<std::uint64_t>> partial(worker_count(idx.size(), threads),
                                                    std::vector<std::uint64_t>(h.counts.size(), 0));
    parallel_chunks(idx.size(), threads, [&](std::size_t b, std::size_t e, unsigned w) {
        auto& local = partial[w];
        for (std::size_t i = b; i < e; ++i) {
            const std::size_t station = idx[i];
            const auto& rec = ds.records[station];
            for (int d = 0; d < h.draws; ++d) {
                double u = 0.0;
                if (spec.jitter.enabled) {
                    auto rng = substream(spec.seed, StreamTag::histogram_jitter,
                                         static_cast<std::uint64_t>(d), station);
                    u = draw_jitter(rng);
                }
                ++local[static_cast<std::size_t>(grid.index(station_percent(rec, spec.metric, u)))];
            }
        }
    });
    for (const auto& local : partial)
        for (std::size_t k = 0; k < local.size(); ++k) h.counts[k] += local[k];
    return h;
}

struct Peak {
    double bin_center = 0.0;
    double height = 0.0;      // normalized count
    double baseline = 0.0;    // median of the surrounding window
    double prominence = 0.0;  // height - baseline
    bool is_integer_centered = false;
};

// Local maxima whose height exceeds the median of the surrounding `window`
// bins by at least `min_prominence` (and by more than zero). Windows are
// shifted inward at the histogram edges. Sorted by prominence, descending.
inline std::vector<Peak> find_peaks(const Histogram& h, int window = 11,
                                    double min_prominence = 0.0) {
    const int n = static_cast<int>(h.counts.size());
    if (window < 3 || window % 2 == 0) throw ConfigError("peak window must be odd and >= 3");
    if (window > n) throw ConfigError("peak window larger than bin count");

    std::vector<double> height(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) height[static_cast<std::size_t>(k)] = h.normalized(k);

    const BinGrid grid = h.grid();
    const int half = window / 2;
    std::vector<double> buf(static_cast<std::size_t>(window));
    std::vector<Peak> peaks;
    for (int k = 0; k < n; ++k) {
        const double hk = height[static_cast<std::size_t>(k)];
        if (k > 0 && hk < height[static_cast<std::size_t>(k - 1)]) continue;
        if (k + 1 < n && hk <= height[static_cast<std::size_t>(k + 1)]) continue;

        const int start = std::clamp(k - half, 0, n - window);
        std::copy_n(height.begin() + start, window, buf.begin());
        std::nth_element(buf.begin(), buf.begin() + half, buf.end());
        const double baseline = buf[static_cast<std::size_t>(half)];
        const double prominence = hk - baseline;
        if (!(prominence > 0.0) || prominence < min_prominence) continue;

        const double c = grid.center(k);
        peaks.push_back({c, hk, baseline, prominence, std::abs(c - std::round(c)) < 1e-9});
    }
    std::stable_sort(peaks.begin(), peaks.end(),
                     [](const Peak& a, const Peak& b) { return a.prominence > b.prominence; });
    return peaks;
}

enum class PlotFormat { csv, svg };

inline PlotFormat parse_plot_format(std::string_view s) {
    if (s == "csv") return PlotFormat::csv;
    if (s == "svg") return PlotFormat::svg;
    throw ConfigError("unknown format '" + std::string(s) + "'");
}

// Rows `bin_center,count_normalized` for every non-empty bin.
inline std::string histogram_csv(const Histogram& h) {
    const BinGrid grid = h.grid();
    const int decimals = decimals_for_step(grid.width());
    std::string out = "bin_center,count_normalized\n";
    for (int k = 0; k < grid.bin_count(); ++k) {
        if (h.counts[static_cast<std::size_t>(k)] == 0) continue;
        out += format_fixed(grid.center(k), decimals);
        out.push_back(',');
        out += format_shortest(h.normalized(k));
        out.push_back('\n');
    }
    return out;
}

// Self-contained SVG line chart: one polyline per histogram, integer
// gridlines, axis labels, and the `annotate` most prominent peaks of each
// series marked.
inline std::string histogram_svg(const std::vector<const Histogram*>& series, int annotate = 5) {
    constexpr double kWidth = 1000, kHeight = 420;
    constexpr double kLeft = 70, kRight = 20, kTop = 30, kBottom = 50;
    constexpr double kPlotW = kWidth - kLeft - kRight, kPlotH = kHeight - kTop - kBottom;
    static constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

    double ymax = 0.0;
    for (const auto* h : series)
        for (int k = 0; k < static_cast<int>(h->counts.size()); ++k) ymax = std::max(ymax, h->normalized(k));
    if (ymax <= 0.0) ymax = 1.0;

    auto xpos = [&](double pct) { return kLeft + pct / 100.0 * kPlotW; };
    auto ypos = [&](double v) { return kTop + kPlotH - v / ymax * kPlotH; };
    auto f2 = [](double v) { return format_fixed(v, 2); };

    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + f2(kWidth) + "\" height=\"" +
         f2(kHeight) + "\" viewBox=\"0 0 " + f2(kWidth) + " " + f2(kHeight) + "\">\n";
    s += "<rect x=\"0\" y=\"0\" width=\"" + f2(kWidth) + "\" height=\"" + f2(kHeight) +
         "\" fill=\"white\"/>\n";

    s += "<g stroke-width=\"0.5\">\n";
    for (int i = 0; i <= 100; ++i) {
        const char* stroke = i % 10 == 0 ? "#bbbbbb" : "#eeeeee";
        s += "<line x1=\"" + f2(xpos(i)) + "\" y1=\"" + f2(kTop) + "\" x2=\"" + f2(xpos(i)) +
             "\" y2=\"" + f2(kTop + kPlotH) + "\" stroke=\"" + stroke + "\"/>\n";
    }
    s += "</g>\n";
    s += "<g font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">\n";
    for (int i = 0; i <= 100; i += 10)
        s += "<text x=\"" + f2(xpos(i)) + "\" y=\"" + f2(kTop + kPlotH + 15) + "\">" +
             std::to_string(i) + "</text>\n";
    s += "<text x=\"" + f2(kLeft + kPlotW / 2) + "\" y=\"" + f2(kHeight - 10) +
         "\">percentage (%)</text>\n";
    s += "<text transform=\"translate(18," + f2(kTop + kPlotH / 2) +
         ") rotate(-90)\">stations per bin</text>\n";
    s += "<text x=\"" + f2(kLeft - 6) + "\" y=\"" + f2(kTop + 4) + "\" text-anchor=\"end\">" +
         format_shortest(ymax) + "</text>\n";
    s += "</g>\n";
    s += "<rect x=\"" + f2(kLeft) + "\" y=\"" + f2(kTop) + "\" width=\"" + f2(kPlotW) +
         "\" height=\"" + f2(kPlotH) + "\" fill=\"none\" stroke=\"black\"/>\n";

    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& h = *series[i];
        const BinGrid grid = h.grid();
        const char* color = kColors[i % 4];
        s += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
             "\" stroke-width=\"1\" data-metric=\"" + std::string(to_string(h.spec.metric)) +
             "\" points=\"";
        for (int k = 0; k < grid.bin_count(); ++k) {
            if (k) s.push_back(' ');
            s += f2(xpos(grid.center(k))) + "," + f2(ypos(h.normalized(k)));
        }
        s += "\"/>\n";

        int window = std::min(11, grid.bin_count());
        if (window % 2 == 0) --window;
        const auto peaks = window >= 3 ? find_peaks(h, window) : std::vector<Peak>{};
        const int shown = std::min<int>(annotate, static_cast<int>(peaks.size()));
        const int decimals = decimals_for_step(grid.width());
        for (int p = 0; p < shown; ++p) {
            const double x = xpos(peaks[static_cast<std::size_t>(p)].bin_center);
            const double y = ypos(peaks[static_cast<std::size_t>(p)].height);
            s += "<circle cx=\"" + f2(x) + "\" cy=\"" + f2(y) + "\" r=\"3\" fill=\"" + color +
                 "\"/>\n";
            s += "<text x=\"" + f2(x) + "\" y=\"" + f2(y - 6) +
                 "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">" +
                 format_fixed(peaks[static_cast<std::size_t>(p)].bin_center, decimals) + "</text>\n";
        }
    }
    s += "</svg>\n";
    return s;
}

inline void emit_histogram(const Histogram& h, PlotFormat format, const std::string& path) {
    detail::write_file(path, format == PlotFormat::csv ? histogram_csv(h) : histogram_svg({&h}));
}

}  // namespace elforensics
