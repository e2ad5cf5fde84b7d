#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "elforensics/synth.hpp"
#include "test_util.hpp"

using namespace elforensics;
using Catch::Approx;

TEST_CASE("tiny degenerate spec respects the support") {
    SynthSpec s;
    s.station_count = 1;
    s.size_min = s.size_max = 10;
    s.turnout_alpha = 1000;
    s.turnout_beta = 0.01;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        s.seed = seed;
        const auto ds = generate_honest(s);
        REQUIRE(ds.size() == 1);
        CHECK(ds.records[0].registered == 10);
        CHECK(ds.records[0].ballots >= 0);
        CHECK(ds.records[0].ballots <= 10);
    }
}

TEST_CASE("national turnout converges to the Beta mean") {
    SynthSpec s;
    s.station_count = 50000;
    s.seed = 99;
    const auto ds = generate_honest(s);
    double ballots = 0, registered = 0;
    for (const auto& r : ds.records) {
        ballots += r.ballots;
        registered += r.registered;
        REQUIRE(counts_consistent(r));
        REQUIRE(r.registered >= s.size_min);
        REQUIRE(r.registered <= s.size_max);
    }
    CHECK(std::abs(ballots / registered - 7.0 / (7.0 + 3.0)) <= 0.01);
}

TEST_CASE("generation is deterministic in the seed") {
    SynthSpec s;
    s.station_count = 500;
    s.seed = 3;
    const auto a = generate_honest(s);
    const auto b = generate_honest(s);
    CHECK(a.records == b.records);
    CHECK(a.source_digest == b.source_digest);
    s.seed = 4;
    CHECK(generate_honest(s).source_digest != a.source_digest);
}

TEST_CASE("synthetic labels") {
    SynthSpec s;
    s.station_count = 45;
    s.region_count = 4;
    const auto ds = generate_honest(s);
    CHECK(ds.records[0].station_id == "PS-01");
    CHECK(ds.records[44].station_id == "PS-45");
    CHECK(ds.records[0].region == "region-1");
    CHECK(ds.records[5].region == "region-2");
    CHECK(ds.records[4].territory == "region-1-tik-2");
}

TEST_CASE("turnout falsification follows the target arithmetic") {
    auto r = testutil::station("a", 1755, 1300, 650);
    falsify_turnout(r, 85);
    CHECK(r.ballots == 1492);
    CHECK(r.leader_votes == 746);  // round(650 * 1492 / 1300) = round(746.0)

    auto z = testutil::station("z", 100, 0, 0);
    falsify_turnout(z, 60);
    CHECK(z.ballots == 60);
    CHECK(z.leader_votes == 0);

    auto down = testutil::station("d", 1000, 900, 900);
    falsify_turnout(down, 50);
    CHECK(down.ballots == 500);
    CHECK(down.leader_votes == 500);
    CHECK(counts_consistent(down));
}

TEST_CASE("single-target injection on the 1755 station") {
    const auto ds = make_dataset("e", {testutil::station("a", 1755, 1300, 650)});
    FraudSpec f;
    f.fraction = 1.0;
    f.target_weights = {{85, 1.0}};
    const auto out = inject_fraud(ds, f);
    CHECK(out.dataset.records[0].ballots == 1492);
    CHECK(out.dataset.records[0].leader_votes == 746);
    REQUIRE(out.truth.labels.size() == 1);
    CHECK(out.truth.labels[0].falsified);
    CHECK(out.truth.labels[0].turnout_target == 85);
    CHECK_FALSE(out.truth.labels[0].leader_target);
}

TEST_CASE("zero fraction leaves the dataset untouched") {
    SynthSpec s;
    s.station_count = 300;
    const auto ds = generate_honest(s);
    FraudSpec f;
    f.fraction = 0.0;
    const auto out = inject_fraud(ds, f);
    CHECK(out.dataset.records == ds.records);
    CHECK(out.dataset.source_digest == ds.source_digest);
    CHECK(out.truth.falsified_count() == 0);
    CHECK(truth_csv(out.truth).find("falsified") == std::string::npos);
}

TEST_CASE("full fraction at 85 makes every large station an exact integer hit") {
    SynthSpec s;
    s.station_count = 2000;
    s.size_min = 1000;
    const auto ds = generate_honest(s);
    FraudSpec f;
    f.fraction = 1.0;
    f.target_weights = {{85, 1.0}};
    const auto out = inject_fraud(ds, f);
    for (const auto& r : out.dataset.records) {
        REQUIRE(counts_consistent(r));
        CHECK(is_integer_hit(station_percent(r, MetricKind::turnout), IntegerBand{}) == std::optional<int>(85));
    }
}

TEST_CASE("injection properties") {
    SynthSpec s;
    s.station_count = 4321;
    s.seed = 8;
    const auto ds = generate_honest(s);
    for (auto target : {FraudTarget::turnout, FraudTarget::leader_result, FraudTarget::both}) {
        for (double frac : {0.01, 0.05, 0.333, 1.0}) {
            FraudSpec f;
            f.fraction = frac;
            f.target_metric = target;
            f.seed = 17;
            const auto out = inject_fraud(ds, f);
            REQUIRE(out.truth.labels.size() == ds.size());
            CHECK(std::abs(static_cast<double>(out.truth.falsified_count()) - frac * ds.size()) <= 1.0);
            for (std::size_t i = 0; i < ds.size(); ++i) {
                const auto& rec = out.dataset.records[i];
                const auto& lab = out.truth.labels[i];
                REQUIRE(counts_consistent(rec));
                CHECK(lab.station_id == rec.station_id);
                if (!lab.falsified) {
                    CHECK(rec == ds.records[i]);
                    continue;
                }
                if (lab.turnout_target)
                    CHECK(std::abs(station_percent(rec, MetricKind::turnout) - *lab.turnout_target) <=
                          50.0 / rec.registered + 1e-9);
                if (lab.leader_target && rec.ballots > 0)
                    CHECK(std::abs(station_percent(rec, MetricKind::leader_result) - *lab.leader_target) <=
                          50.0 / rec.ballots + 1e-9);
                CHECK(lab.turnout_target.has_value() == (target != FraudTarget::leader_result));
                CHECK(lab.leader_target.has_value() == (target != FraudTarget::turnout));
            }
            CHECK(out.dataset.source_digest == sha256_hex(to_csv(out.dataset.records)));
        }
    }
}

TEST_CASE("targets follow the weights") {
    const auto w = default_target_weights();
    CHECK(w.size() == 50);
    CHECK(w.front() == std::pair<int, double>{50, 1.0});
    CHECK(std::find(w.begin(), w.end(), std::pair<int, double>{85, 2.0}) != w.end());
    CHECK(std::find(w.begin(), w.end(), std::pair<int, double>{55, 1.0}) != w.end());

    SynthSpec s;
    s.station_count = 20000;
    FraudSpec f;
    f.fraction = 1.0;
    f.target_weights = {{70, 3.0}, {80, 1.0}, {90, 0.0}};
    const auto out = inject_fraud(generate_honest(s), f);
    int seventy = 0, ninety = 0;
    for (const auto& l : out.truth.labels) {
        seventy += l.turnout_target == 70;
        ninety += l.turnout_target == 90;
    }
    CHECK(ninety == 0);
    CHECK(seventy / 20000.0 == Approx(0.75).margin(0.02));
}

TEST_CASE("truth csv layout") {
    GroundTruth t;
    t.labels.push_back({"PS-1", false});
    t.labels.push_back({"PS-2", true, FraudTarget::turnout, 85, std::nullopt});
    t.labels.push_back({"PS-3", true, FraudTarget::both, 80, 60});
    t.labels.push_back({"PS-4", true, FraudTarget::leader_result, std::nullopt, 70});
    CHECK(truth_csv(t) ==
          "station_id,label,target_metric,target_percent\n"
          "PS-1,honest,,\n"
          "PS-2,falsified,turnout,85\n"
          "PS-3,falsified,both,80;60\n"
          "PS-4,falsified,leader_result,70\n");
}

TEST_CASE("spec validation") {
    SynthSpec s;
    s.station_count = 0;
    CHECK_THROWS_AS(generate_honest(s), ConfigError);
    s.station_count = 10;
    s.turnout_alpha = 0;
    CHECK_THROWS_AS(generate_honest(s), ConfigError);

    const auto ds = make_dataset("e", {});
    FraudSpec f;
    f.fraction = 1.5;
    CHECK_THROWS_AS(inject_fraud(ds, f), ConfigError);
    f.fraction = 0.5;
    f.target_weights = {{80, 0.0}};
    CHECK_THROWS_AS(inject_fraud(ds, f), ConfigError);
    f.target_weights = {{80, -1.0}, {81, 2.0}};
    CHECK_THROWS_AS(inject_fraud(ds, f), ConfigError);
    CHECK_THROWS_AS(parse_fraud_target("everything"), ConfigError);
}
