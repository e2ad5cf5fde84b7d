// elforensics: command-line front end.
//
// Exit codes: 0 success, 1 validation or domain failure, 2 I/O failure.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "elforensics/elforensics.hpp"

namespace ef = elforensics;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitIo = 2;

std::string election_id_for(const std::string& path) {
    return std::filesystem::path(path).stem().string();
}

// Seed from the command line, or a fresh one that is reported so the run can
// still be repeated.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& seed) {
    if (seed) return *seed;
    std::random_device rd;
    const std::uint64_t s = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    std::cerr << "seed: " << s << '\n';
    return s;
}

ef::ElectionDataset load(const std::string& path, bool lenient) {
    ef::IngestOptions opts;
    opts.lenient = lenient;
    return ef::ingest(path, election_id_for(path), opts);
}

void write_output(const std::optional<std::string>& out, const std::string& text) {
    if (out)
        ef::detail::write_file(*out, text);
    else
        std::cout << text;
}

struct CommonInput {
    bool lenient = false;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Integer-percentage fingerprints in polling-station election results"};
    app.set_version_flag("--version", std::string(ef::kVersion));
    app.require_subcommand(1);

    CommonInput common;
    unsigned threads = 0;

    // validate
    auto* validate = app.add_subcommand("validate", "Check a station CSV against the canonical schema");
    std::string validate_input;
    validate->add_option("input", validate_input, "Station CSV")->required();

    // histogram
    auto* histogram = app.add_subcommand("histogram", "Jittered percentage histogram (CSV or SVG)");
    std::string hist_input, hist_metric = "turnout", hist_format = "csv", hist_out;
    double bin_width = 0.1;
    int hist_draws = 100;
    std::optional<std::uint64_t> hist_seed;
    bool hist_no_jitter = false, include_full = false;
    ef::Count hist_min_registered = 0;
    histogram->add_option("input", hist_input, "Station CSV")->required();
    histogram->add_option("--metric", hist_metric, "turnout | leader_result | leader_share");
    histogram->add_option("--bin-width", bin_width, "Bin width in percentage points");
    histogram->add_option("--jitter-draws", hist_draws, "Jitter realizations averaged");
    histogram->add_option("--seed", hist_seed, "Random seed");
    histogram->add_flag("--no-jitter", hist_no_jitter, "Disable numerator jitter");
    histogram->add_flag("--include-full-turnout", include_full, "Keep stations with 100% turnout");
    histogram->add_option("--min-registered", hist_min_registered, "Drop smaller stations");
    histogram->add_option("--format", hist_format, "csv | svg");
    histogram->add_option("--out", hist_out, "Output file")->required();
    histogram->add_flag("--lenient", common.lenient, "Skip invalid rows instead of failing");
    histogram->add_option("--threads", threads, "Worker threads (0 = all processors)");

    // anomaly
    auto* anomaly = app.add_subcommand("anomaly", "Integer-percentage anomaly vs binomial Monte Carlo");
    std::vector<std::string> anomaly_inputs;
    std::string anomaly_out;
    ef::AnomalyConfig acfg;
    std::optional<std::uint64_t> anomaly_seed;
    bool anomaly_no_jitter = false;
    anomaly->add_option("inputs", anomaly_inputs, "Station CSVs, one per election, in series order")
        ->required();
    anomaly->add_option("--iterations", acfg.iterations, "Monte Carlo iterations");
    anomaly->add_option("--seed", anomaly_seed, "Random seed");
    anomaly->add_option("--integer-lo", acfg.band.lo, "Smallest integer percentage counted");
    anomaly->add_option("--integer-hi", acfg.band.hi, "Largest integer percentage counted");
    anomaly->add_option("--halfwidth", acfg.band.halfwidth, "Window around each integer");
    anomaly->add_option("--jitter-draws", acfg.jitter.draws, "Jitter draws averaged for the observed count");
    anomaly->add_flag("--no-jitter", anomaly_no_jitter, "Disable numerator jitter");
    anomaly->add_option("--percentile", acfg.percentile, "Significance percentile");
    anomaly->add_option("--min-registered", acfg.filter.min_registered, "Drop smaller stations");
    anomaly->add_flag("--exclude-full-turnout", acfg.filter.exclude_full_turnout,
                      "Drop stations with 100% turnout");
    anomaly->add_option("--out", anomaly_out, "Report JSON")->required();
    anomaly->add_flag("--lenient", common.lenient, "Skip invalid rows instead of failing");
    anomaly->add_option("--threads", threads, "Worker threads (0 = all processors)");

    // region
    auto* region = app.add_subcommand("region", "Attribute one histogram bin to regions");
    std::string region_input, region_metric = "turnout", group_by = "region";
    double bin_center = 0.0, region_halfwidth = 0.05;
    std::optional<std::string> region_out;
    region->add_option("input", region_input, "Station CSV")->required();
    region->add_option("--metric", region_metric, "turnout | leader_result | leader_share");
    region->add_option("--bin-center", bin_center, "Bin center, percent")->required();
    region->add_option("--halfwidth", region_halfwidth, "Half window, percentage points");
    region->add_option("--group-by", group_by, "region | territory");
    region->add_option("--out", region_out, "Attribution JSON (stdout if omitted)");
    region->add_flag("--lenient", common.lenient, "Skip invalid rows instead of failing");

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic election with injected fraud");
    ef::SynthSpec sspec;
    ef::FraudSpec fspec;
    std::string target_metric = "turnout", synth_out, truth_out;
    std::optional<std::uint64_t> synth_seed;
    synth->add_option("--stations", sspec.station_count, "Number of stations");
    synth->add_option("--fraud-fraction", fspec.fraction, "Fraction of stations falsified");
    synth->add_option("--target-metric", target_metric, "turnout | leader_result | both");
    synth->add_option("--seed", synth_seed, "Random seed");
    synth->add_option("--size-median", sspec.size_median, "Median registered voters");
    synth->add_option("--size-sigma", sspec.size_sigma, "Log-normal sigma of station size");
    synth->add_option("--size-min", sspec.size_min, "Smallest station");
    synth->add_option("--size-max", sspec.size_max, "Largest station");
    synth->add_option("--regions", sspec.region_count, "Number of synthetic regions");
    synth->add_option("--election-id", sspec.election_id, "Election label");
    synth->add_option("--out", synth_out, "Station CSV")->required();
    synth->add_option("--truth", truth_out, "Ground-truth CSV")->required();

    // product-scan
    auto* scan = app.add_subcommand("product-scan", "Find clusters with a round leader share");
    std::string scan_input, scan_group = "region";
    ef::ProductScanSpec pspec;
    std::optional<std::string> scan_out;
    scan->add_option("input", scan_input, "Station CSV")->required();
    scan->add_option("--group-by", scan_group, "region | territory");
    scan->add_option("--round-step", pspec.round_step, "Spacing of round targets, percent");
    scan->add_option("--tolerance", pspec.tolerance, "Window around a target, percentage points");
    scan->add_option("--min-cluster", pspec.min_cluster, "Smallest reported cluster");
    scan->add_option("--out", scan_out, "Hits JSON (stdout if omitted)");
    scan->add_flag("--lenient", common.lenient, "Skip invalid rows instead of failing");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitDomain;
    }

    try {
        if (*validate) {
            try {
                const auto ds = ef::ingest(validate_input, election_id_for(validate_input));
                std::cout << "ok: " << ds.size() << " stations, sha256 " << ds.source_digest << '\n';
            } catch (const ef::DatasetError& e) {
                std::cerr << e.what() << '\n';
                return kExitDomain;
            }
            return kExitOk;
        }

        if (*histogram) {
            ef::HistogramSpec spec;
            spec.metric = ef::parse_metric(hist_metric);
            spec.bin_width = bin_width;
            spec.jitter = {!hist_no_jitter, hist_draws};
            spec.filter.exclude_full_turnout = !include_full;
            spec.filter.min_registered = hist_min_registered;
            spec.seed = resolve_seed(hist_seed);
            spec.threads = threads;
            const auto format = ef::parse_plot_format(hist_format);
            const auto ds = load(hist_input, common.lenient);
            const auto h = ef::build_histogram(ds, spec);
            ef::emit_histogram(h, format, hist_out);

            ef::RunManifest m;
            m.command = "histogram";
            m.config = ef::Json{{"metric", ef::to_string(spec.metric)},
                                {"bin_width", spec.bin_width},
                                {"jitter", ef::to_json(spec.jitter)},
                                {"filter", ef::to_json(spec.filter)},
                                {"seed", spec.seed},
                                {"format", hist_format},
                                {"lenient", common.lenient}};
            m.inputs.emplace_back(hist_input, ds.source_digest);
            m.outputs.push_back(hist_out);
            m.write_beside(hist_out);
            return kExitOk;
        }

        if (*anomaly) {
            acfg.jitter.enabled = !anomaly_no_jitter;
            acfg.seed = resolve_seed(anomaly_seed);
            acfg.threads = threads;
            acfg.validate();
            std::vector<ef::ElectionDataset> datasets;
            for (const auto& in : anomaly_inputs) datasets.push_back(load(in, common.lenient));
            const auto series = ef::run_series(datasets, acfg);
            ef::detail::write_file(anomaly_out, ef::dump(ef::to_json(series)));

            ef::RunManifest m;
            m.command = "anomaly";
            m.config = ef::to_json(acfg);
            m.config["lenient"] = common.lenient;
            for (std::size_t i = 0; i < datasets.size(); ++i)
                m.inputs.emplace_back(anomaly_inputs[i], datasets[i].source_digest);
            m.outputs.push_back(anomaly_out);
            m.write_beside(anomaly_out);
            return kExitOk;
        }

        if (*region) {
            const auto ds = load(region_input, common.lenient);
            const auto a = ef::attribute_bin(ds, ef::parse_metric(region_metric), bin_center,
                                             region_halfwidth, ef::parse_grouping(group_by));
            write_output(region_out, ef::dump(ef::to_json(a)));
            if (region_out) {
                ef::RunManifest m;
                m.command = "region";
                m.config = ef::Json{{"metric", region_metric},
                                    {"bin_center", bin_center},
                                    {"halfwidth", region_halfwidth},
                                    {"group_by", group_by},
                                    {"lenient", common.lenient}};
                m.inputs.emplace_back(region_input, ds.source_digest);
                m.outputs.push_back(*region_out);
                m.write_beside(*region_out);
            }
            return kExitOk;
        }

        if (*synth) {
            const std::uint64_t seed = resolve_seed(synth_seed);
            sspec.seed = seed;
            fspec.seed = ef::mix64(seed ^ 0x5EEDF00DULL);
            fspec.target_metric = ef::parse_fraud_target(target_metric);
            const auto honest = ef::generate_honest(sspec);
            const auto fraud = ef::inject_fraud(honest, fspec);
            ef::emit_dataset(fraud.dataset, synth_out);
            ef::detail::write_file(truth_out, ef::truth_csv(fraud.truth));

            ef::RunManifest m;
            m.command = "synth";
            m.config = ef::Json{{"stations", sspec.station_count},
                                {"fraud_fraction", fspec.fraction},
                                {"target_metric", ef::to_string(fspec.target_metric)},
                                {"seed", seed},
                                {"size_median", sspec.size_median},
                                {"size_sigma", sspec.size_sigma},
                                {"size_min", sspec.size_min},
                                {"size_max", sspec.size_max},
                                {"regions", sspec.region_count},
                                {"election_id", sspec.election_id}};
            m.outputs = {synth_out, truth_out};
            m.write_beside(synth_out);
            return kExitOk;
        }

        if (*scan) {
            pspec.grouping = ef::parse_grouping(scan_group);
            const auto ds = load(scan_input, common.lenient);
            const auto hits = ef::round_product_scan(ds, pspec);
            write_output(scan_out, ef::dump(ef::to_json(hits)));
            if (scan_out) {
                ef::RunManifest m;
                m.command = "product-scan";
                m.config = ef::Json{{"group_by", scan_group},
                                    {"round_step", pspec.round_step},
                                    {"tolerance", pspec.tolerance},
                                    {"min_cluster", pspec.min_cluster},
                                    {"lenient", common.lenient}};
                m.inputs.emplace_back(scan_input, ds.source_digest);
                m.outputs.push_back(*scan_out);
                m.write_beside(*scan_out);
            }
            return kExitOk;
        }
    } catch (const ef::IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const ef::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitDomain;
    }
    return kExitDomain;
}
