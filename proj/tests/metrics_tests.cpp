#include <cmath>
#include <stdexcept>

#include <doctest.h>

#include "mlseq/metrics.hpp"

using namespace mlseq;

TEST_CASE("geo mean of the worked probabilities") {
    CHECK(geo_mean(LogProb::from_prob(0.1296), 4) == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(geo_mean(LogProb::certain(), 10) == 1.0);
    CHECK(geo_mean(LogProb::impossible(), 5) == 0.0);
    CHECK_THROWS_AS(geo_mean(LogProb::certain(), 0), std::invalid_argument);
}

TEST_CASE("geo mean preserves trajectory ordering") {
    double prev = -1.0;
    for (double p : {1e-30, 1e-9, 0.02, 0.5, 0.97, 1.0}) {
        double g = geo_mean(LogProb::from_prob(p), 7);
        CHECK(g > prev);
        prev = g;
    }
}

TEST_CASE("average geo mean follows the averaging rule") {
    const GeoEntry a{LogProb::from_prob(0.16), 4};
    const GeoEntry b{LogProb::from_prob(0.1296), 4};

    const GeoEntry single[] = {a};
    CHECK(avg_geo_mean(single) == doctest::Approx(0.632456).epsilon(1e-6));

    const GeoEntry twice[] = {a, a};
    CHECK(avg_geo_mean(twice) == doctest::Approx(avg_geo_mean(single)).epsilon(1e-15));

    const GeoEntry mixed[] = {a, b};
    CHECK(avg_geo_mean(mixed) == doctest::Approx(0.616228).epsilon(1e-6));

    CHECK_THROWS_AS(avg_geo_mean({}), std::invalid_argument);
    const GeoEntry bad[] = {a, GeoEntry{LogProb::certain(), 5}};
    CHECK_THROWS_AS(avg_geo_mean(bad), std::invalid_argument);
}

TEST_CASE("percentage recovery") {
    auto full = pct_recovery(0.632456, 0.6, 0.632456);
    REQUIRE(full.has_value());
    CHECK(*full == doctest::Approx(100.0).epsilon(1e-9));

    auto none = pct_recovery(0.6, 0.6, 0.632456);
    REQUIRE(none.has_value());
    CHECK(*none == 0.0);

    CHECK_FALSE(pct_recovery(0.61, 0.6, 0.6).has_value());

    auto self = pct_recovery(0.7, 0.5, 0.7);
    REQUIRE(self.has_value());
    CHECK(*self == doctest::Approx(100.0));
}

TEST_CASE("recovery report aggregates per policy") {
    std::vector<RecoveryRow> rows;
    auto push = [&](std::uint32_t chain, StateId state, const char* policy, double p) {
        RecoveryRow row;
        row.chain = chain;
        row.state = state;
        row.policy = policy;
        row.log_prob = LogProb::from_prob(p);
        row.geo_mean = geo_mean(row.log_prob, 4);
        rows.push_back(row);
    };
    push(0, 0, "greedy", 0.1296);
    push(0, 1, "greedy", 0.1296);
    push(0, 0, "optimal", 0.16);
    push(0, 1, "optimal", 0.16);
    push(0, 0, "rollout_l1", 0.16);
    push(0, 1, "rollout_l1", 0.1296);

    auto report = build_recovery_report(rows);
    CHECK(report.aggregates.at("greedy") == doctest::Approx(0.6));
    CHECK(report.aggregates.at("optimal") == doctest::Approx(0.632456).epsilon(1e-6));
    REQUIRE(report.recovery.at("rollout_l1").has_value());
    CHECK(*report.recovery.at("rollout_l1") == doctest::Approx(50.0).epsilon(1e-6));
    CHECK(*report.recovery.at("optimal") == doctest::Approx(100.0));
    CHECK(*report.recovery.at("greedy") == doctest::Approx(0.0));

    // rows come back sorted by (chain, state, policy)
    for (std::size_t i = 1; i < report.per_state.size(); ++i) {
        const auto& a = report.per_state[i - 1];
        const auto& b = report.per_state[i];
        CHECK((a.chain < b.chain ||
               (a.chain == b.chain &&
                (a.state < b.state ||
                 (a.state == b.state && a.policy <= b.policy)))));
    }
}

TEST_CASE("recovery is absent without both baselines") {
    std::vector<RecoveryRow> rows;
    RecoveryRow row;
    row.policy = "rollout_l1";
    row.log_prob = LogProb::from_prob(0.5);
    row.geo_mean = geo_mean(row.log_prob, 2);
    rows.push_back(row);
    auto report = build_recovery_report(rows);
    CHECK(report.recovery.empty());
}
