#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <random>

#include "elforensics/anomaly.hpp"
#include "elforensics/synth.hpp"
#include "test_util.hpp"

using namespace elforensics;
using Catch::Approx;

namespace {

double binomial_pmf(Count n, double p, Count k) {
    const double lg = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
    return std::exp(lg + k * std::log(p) + (n - k) * std::log1p(-p));
}

// Pearson chi-square of sampled frequencies against the exact pmf, pooling
// cells with expected count < 5 into the tails.
double chi_square(const std::map<Count, int>& freq, Count n, double p, int draws, int& dof) {
    double stat = 0.0, pooled_obs = 0.0, pooled_exp = 0.0;
    dof = -1;
    for (Count k = 0; k <= n; ++k) {
        const double e = binomial_pmf(n, p, k) * draws;
        const auto it = freq.find(k);
        const double o = it == freq.end() ? 0.0 : it->second;
        if (e < 5.0) {
            pooled_obs += o;
            pooled_exp += e;
            continue;
        }
        stat += (o - e) * (o - e) / e;
        ++dof;
    }
    if (pooled_exp > 0.0) {
        stat += (pooled_obs - pooled_exp) * (pooled_obs - pooled_exp) / pooled_exp;
        ++dof;
    }
    return stat;
}

AnomalyConfig quick_config(std::uint64_t seed, int iterations = 200) {
    AnomalyConfig c;
    c.iterations = iterations;
    c.seed = seed;
    c.threads = 1;
    return c;
}

}  // namespace

TEST_CASE("count_integer_stations on the 1492/1755 station") {
    const std::vector<StationRecord> recs = {testutil::station("a", 1755, 1492, 746)};
    const IntegerBand band;
    const auto c = count_integer_stations(recs, {0}, band, {});
    CHECK(c.turnout == 1);
    CHECK(c.leader == 1);
    CHECK(c.either == 1);
    CHECK(c.per_integer_turnout[85 - band.lo] == 1);
    CHECK(c.per_integer_leader[50 - band.lo] == 1);
    CHECK(c.per_integer_either[85 - band.lo] == 1);  // credited to the turnout integer
}

TEST_CASE("count_integer_stations ignores non-integer and counts integer turnouts") {
    const std::vector<StationRecord> saratov = {testutil::station("s", 1000, 643, 400)};
    CHECK(count_integer_stations(saratov, {0}, IntegerBand{}, {}).turnout == 0);

    std::vector<StationRecord> recs;
    std::vector<std::size_t> idx;
    for (int i = 0; i < 100; ++i) {
        recs.push_back(testutil::station(std::to_string(i), 100 * (10 + i), (10 + i) * (50 + i % 40), 0));
        idx.push_back(static_cast<std::size_t>(i));
    }
    const auto c = count_integer_stations(recs, idx, IntegerBand{}, {});
    CHECK(c.turnout == 100);
    CHECK(c.leader == 0);  // zero leader votes: 0% is outside [1, 99]
    CHECK(c.either == 100);
}

TEST_CASE("per-integer tallies sum to the totals") {
    SynthSpec s;
    s.station_count = 3000;
    const auto ds = generate_honest(s);
    std::vector<std::size_t> idx(ds.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const auto c = count_integer_stations(ds.records, idx, IntegerBand{}, observed_jitter(4, 0));
    auto sum = [](const auto& v) { return std::accumulate(v.begin(), v.end(), std::int64_t{0}); };
    CHECK(sum(c.per_integer_turnout) == c.turnout);
    CHECK(sum(c.per_integer_leader) == c.leader);
    CHECK(sum(c.per_integer_either) == c.either);
    CHECK(c.either <= c.turnout + c.leader);
    CHECK(c.either >= std::max(c.turnout, c.leader));
}

TEST_CASE("simulate_station degenerate rates") {
    for (std::uint64_t i = 0; i < 50; ++i) {
        auto rng = substream(1, StreamTag::monte_carlo, i, 0);
        const auto none = simulate_station(testutil::station("a", 500, 0, 0), rng);
        CHECK(none.ballots == 0);
        CHECK(none.leader_votes == 0);
        const auto full = simulate_station(testutil::station("b", 500, 500, 500), rng);
        CHECK(full.ballots == 500);
        CHECK(full.leader_votes == 500);
    }
}

TEST_CASE("simulated ballots follow Binomial(registered, turnout) in mean and variance") {
    const auto rec = testutil::station("a", 1000, 850, 425);
    const StationSimulator sim(rec);
    constexpr int N = 100000;
    double sum = 0, sumsq = 0, lsum = 0;
    for (int i = 0; i < N; ++i) {
        auto rng = substream(42, StreamTag::monte_carlo, static_cast<std::uint64_t>(i), 0);
        const auto s = sim(rng);
        sum += s.ballots;
        sumsq += static_cast<double>(s.ballots) * s.ballots;
        lsum += s.leader_votes;
    }
    const double var = 1000 * 0.85 * 0.15;
    const double mean = sum / N;
    CHECK(std::abs(mean - 850.0) <= 3.0 * std::sqrt(var) / std::sqrt(N));
    CHECK(sumsq / N - mean * mean == Approx(var).epsilon(0.03));
    // E[leader*] = E[ballots*] * 0.5; Var = n p q (1/4) + n p (1/4)
    const double lvar = var * 0.25 + 850 * 0.25;
    CHECK(std::abs(lsum / N - 425.0) <= 3.0 * std::sqrt(lvar) / std::sqrt(N));
}

TEST_CASE("tabulated binomial matches the exact pmf") {
    struct Case {
        Count n;
        double p;
    };
    for (const auto& [n, p] : {Case{10, 0.3}, Case{1000, 0.85}, Case{5000, 0.5}, Case{37, 0.97}, Case{200000, 0.001}}) {
        const BinomialTable table(n, p);
        constexpr int draws = 200000;
        std::map<Count, int> freq;
        for (int i = 0; i < draws; ++i) {
            auto rng = substream(7, StreamTag::monte_carlo, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(n));
            const Count k = table(rng);
            REQUIRE(k >= 0);
            REQUIRE(k <= n);
            ++freq[k];
        }
        int dof = 0;
        const double stat = chi_square(freq, n, p, draws, dof);
        INFO("n=" << n << " p=" << p << " chi2=" << stat << " dof=" << dof);
        CHECK(stat < dof + 5.0 * std::sqrt(2.0 * dof));
    }
}

TEST_CASE("simulated counts always satisfy the station invariants") {
    std::mt19937_64 gen(10);
    for (int i = 0; i < 300; ++i) {
        const Count reg = std::uniform_int_distribution<Count>(1, 4000)(gen);
        const Count bal = std::uniform_int_distribution<Count>(0, reg)(gen);
        const Count lead = std::uniform_int_distribution<Count>(0, bal)(gen);
        const StationSimulator sim(testutil::station("x", reg, bal, lead));
        for (std::uint64_t it = 0; it < 50; ++it) {
            auto rng = substream(3, StreamTag::monte_carlo, it, static_cast<std::uint64_t>(i));
            const auto s = sim(rng);
            REQUIRE(0 <= s.leader_votes);
            REQUIRE(s.leader_votes <= s.ballots);
            REQUIRE(s.ballots <= reg);
        }
    }
}

TEST_CASE("quantile_sorted interpolates linearly") {
    const std::vector<double> v = {1, 2, 3, 4, 5};
    CHECK(quantile_sorted(v, 0.0) == 1.0);
    CHECK(quantile_sorted(v, 1.0) == 5.0);
    CHECK(quantile_sorted(v, 0.5) == 3.0);
    CHECK(quantile_sorted(v, 0.999) == Approx(4.996));
}

TEST_CASE("no observed hits gives a non-positive excess") {
    std::vector<StationRecord> recs;
    for (int i = 0; i < 200; ++i) recs.push_back(testutil::station(std::to_string(i), 1000, 503, 200));  // 50.3%, 39.76%
    auto cfg = quick_config(5);
    cfg.jitter.enabled = false;
    const auto rep = run_anomaly(make_dataset("e", recs), cfg);
    CHECK(rep.turnout.observed == 0.0);
    CHECK(rep.leader.observed == 0.0);
    CHECK(rep.either.observed == 0.0);
    CHECK(rep.turnout.excess == -rep.turnout.expected);
    CHECK(rep.either.excess <= 0.0);
    CHECK(rep.either.expected > 0.0);  // binomial noise does produce hits
    CHECK(rep.either.p_value == 1.0);
}

TEST_CASE("report invariants") {
    SynthSpec s;
    s.station_count = 2000;
    s.seed = 3;
    const auto ds = generate_honest(s);
    auto cfg = quick_config(9);
    cfg.jitter.draws = 7;
    const auto rep = run_anomaly(ds, cfg);
    CHECK(rep.included_count == ds.size());
    for (const auto* m : {&rep.turnout, &rep.leader, &rep.either}) {
        CHECK(m->excess == m->observed - m->expected);
        CHECK(m->p_value > 0.0);
        CHECK(m->p_value <= 1.0);
        CHECK(m->p_value >= 1.0 / (cfg.iterations + 1));
        CHECK(m->lower_band <= 0.0);
        CHECK(m->threshold >= 0.0);
        double obs = 0, exp = 0;
        for (const auto& t : m->per_integer) {
            obs += t.observed;
            exp += t.expected;
        }
        CHECK(obs == Approx(m->observed).margin(1e-9));
        CHECK(exp == Approx(m->expected).margin(1e-9));
        CHECK(m->per_integer.size() == 99);
    }
    CHECK(rep.either.observed <= rep.turnout.observed + rep.leader.observed);
}

TEST_CASE("run_anomaly is deterministic and thread-count independent") {
    SynthSpec s;
    s.station_count = 1500;
    const auto ds = generate_honest(s);
    auto cfg = quick_config(77);
    const auto a = run_anomaly(ds, cfg);
    cfg.threads = 5;
    const auto b = run_anomaly(ds, cfg);
    for (auto pm : {&AnomalyReport::turnout, &AnomalyReport::leader, &AnomalyReport::either}) {
        CHECK((a.*pm).observed == (b.*pm).observed);
        CHECK((a.*pm).expected == (b.*pm).expected);
        CHECK((a.*pm).threshold == (b.*pm).threshold);
        CHECK((a.*pm).p_value == (b.*pm).p_value);
    }
}

TEST_CASE("adding an integer-turnout station raises the observed count by one") {
    std::mt19937_64 gen(2);
    SynthSpec s;
    s.station_count = 300;
    auto base = generate_honest(s).records;
    auto cfg = quick_config(1, 100);
    cfg.jitter.enabled = false;
    for (int trial = 0; trial < 10; ++trial) {
        const auto before = run_anomaly(make_dataset("e", base), cfg);
        const Count reg = std::uniform_int_distribution<Count>(100, 3000)(gen) / 100 * 100;
        const int t = std::uniform_int_distribution<int>(1, 99)(gen);
        base.push_back(testutil::station("new-" + std::to_string(trial), reg, reg * t / 100, reg * t / 100 / 3));
        const auto after = run_anomaly(make_dataset("e", base), cfg);
        CHECK(after.turnout.observed == before.turnout.observed + 1);
        CHECK(after.either.observed >= before.either.observed);
    }
}

TEST_CASE("run_anomaly errors") {
    CHECK_THROWS_AS(run_anomaly(make_dataset("e", {}), quick_config(1)), Error);
    CHECK_THROWS_AS(run_anomaly(make_dataset("e", {testutil::station("a", 0, 0, 0)}), quick_config(1)), Error);
    const auto ds = make_dataset("e", {testutil::station("a", 10, 5, 1)});
    auto cfg = quick_config(1, 99);
    CHECK_THROWS_AS(run_anomaly(ds, cfg), ConfigError);
    cfg = quick_config(1);
    cfg.percentile = 50.0;
    CHECK_THROWS_AS(run_anomaly(ds, cfg), ConfigError);
    cfg.percentile = 100.0;
    CHECK_THROWS_AS(run_anomaly(ds, cfg), ConfigError);
}

TEST_CASE("null calibration: p-values of null-model data are close to uniform") {
    // Base election; each replicate redraws every station through the null
    // model itself and is then tested against it.
    SynthSpec s;
    s.station_count = 1000;
    s.seed = 2024;
    const auto base = generate_honest(s);
    std::vector<StationSimulator> sims;
    for (const auto& r : base.records) sims.emplace_back(r);

    constexpr int replicates = 400;
    int turnout05 = 0, leader05 = 0, either05 = 0;
    for (int rep = 0; rep < replicates; ++rep) {
        std::vector<StationRecord> recs = base.records;
        for (std::size_t i = 0; i < recs.size(); ++i) {
            auto rng = substream(555, StreamTag::synth_station, static_cast<std::uint64_t>(rep), i);
            const auto sim = sims[i](rng);
            recs[i].ballots = sim.ballots;
            recs[i].leader_votes = sim.leader_votes;
        }
        auto cfg = quick_config(static_cast<std::uint64_t>(rep), 200);
        cfg.jitter.draws = 10;
        const auto r = run_anomaly(make_dataset("null", recs), cfg);
        turnout05 += r.turnout.p_value <= 0.05;
        leader05 += r.leader.p_value <= 0.05;
        either05 += r.either.p_value <= 0.05;
    }
    const double ft = static_cast<double>(turnout05) / replicates;
    const double fl = static_cast<double>(leader05) / replicates;
    const double fe = static_cast<double>(either05) / replicates;
    INFO("turnout " << ft << " leader " << fl << " either " << fe);
    CHECK(std::abs(fe - 0.05) <= 0.02);
    CHECK(std::abs(ft - 0.05) <= 0.02);
    CHECK(std::abs(fl - 0.05) <= 0.02);
}

TEST_CASE("run_series keeps input order and names failing elections") {
    SynthSpec s;
    s.station_count = 3000;
    s.size_min = 1000;
    s.election_id = "honest";
    const auto honest = generate_honest(s);
    FraudSpec f;
    f.fraction = 0.05;
    f.seed = 3;
    auto fraud = inject_fraud(honest, f).dataset;
    fraud.election_id = "fraud";

    const auto cfg = quick_config(8);
    const auto single = run_series({honest}, cfg);
    REQUIRE(single.reports.size() == 1);
    CHECK(single.reports[0].either.observed == run_anomaly(honest, cfg).either.observed);
    CHECK(single.table[0].election_id == "honest");

    const auto two = run_series({honest, fraud}, cfg);
    REQUIRE(two.table.size() == 2);
    CHECK(two.table[0].election_id == "honest");
    CHECK(two.table[1].election_id == "fraud");
    CHECK(two.table[1].either_excess > two.table[0].either_excess);

    CHECK_THROWS_AS(run_series({}, cfg), ConfigError);
    try {
        run_series({honest, make_dataset("empty-one", {})}, cfg);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("empty-one") != std::string::npos);
    }
}

TEST_CASE("jitter hit probabilities match a fine scan over the jitter") {
    std::mt19937_64 gen(11);
    for (const IntegerBand band : {IntegerBand{}, IntegerBand{0.2, 10, 90}}) {
        for (int trial = 0; trial < 300; ++trial) {
            const Count den = std::uniform_int_distribution<Count>(1, trial < 150 ? 300 : 20000)(gen);
            const Count num = std::uniform_int_distribution<Count>(0, den)(gen);
            std::vector<double> exact(static_cast<std::size_t>(band.size()), 0.0);
            jitter_hit_probabilities(num, den, band, [&](int k, double p) {
                exact[static_cast<std::size_t>(k - band.lo)] += p;
            });
            constexpr int grid = 20000;
            std::vector<double> scan(exact.size(), 0.0);
            for (int g = 0; g < grid; ++g) {
                const double u = -0.5 + (g + 0.5) / grid;
                if (const auto k = is_integer_hit(percent(num, den, u), band))
                    scan[static_cast<std::size_t>(*k - band.lo)] += 1.0 / grid;
            }
            for (std::size_t k = 0; k < exact.size(); ++k)
                REQUIRE(std::abs(exact[k] - scan[k]) <= 2.0 / grid);
        }
    }
}
