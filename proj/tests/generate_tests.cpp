#include <cmath>
#include <set>

#include <doctest.h>

#include "mlseq/chain_io.hpp"
#include "mlseq/generate.hpp"
#include "test_helpers.hpp"

using namespace mlseq;

TEST_CASE("generated rows have exactly q distinct successors") {
    GenSpec spec{100, 5, 12345, true};
    auto m = generate_chain(spec);
    REQUIRE(m.state_count() == 100);
    CHECK(spec.branching_percent() == doctest::Approx(5.0));
    for (StateId x = 0; x < 100; ++x) {
        const auto row = m.row(x);
        CHECK(row.size() == 5);
        std::set<StateId> distinct;
        for (const auto& t : row) distinct.insert(t.to);
        CHECK(distinct.size() == 5);
    }
    CHECK(validate_model(m).ok());
}

TEST_CASE("branching factor follows the spec sizes") {
    CHECK(GenSpec{1000, 10, 0, true}.branching_percent() == doctest::Approx(1.0));
}

TEST_CASE("same spec twice gives byte-identical files") {
    GenSpec spec{40, 4, 99, true};
    CHECK(encode_chain(generate_chain(spec)) == encode_chain(generate_chain(spec)));
    GenSpec other{40, 4, 100, true};
    CHECK(encode_chain(generate_chain(spec)) != encode_chain(generate_chain(other)));
}

TEST_CASE("all generated probabilities are strictly positive") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto m = generate_chain(GenSpec{30, 6, seed, true});
        for (StateId x = 0; x < 30; ++x) {
            for (const auto& t : m.row(x)) CHECK(t.prob > 0.0);
        }
    }
}

TEST_CASE("no-self-loop flag removes y == x") {
    auto m = generate_chain(GenSpec{20, 19, 7, false});
    for (StateId x = 0; x < 20; ++x) {
        for (const auto& t : m.row(x)) CHECK(t.to != x);
    }
}

TEST_CASE("bad out-degree is rejected") {
    CHECK_THROWS_AS(generate_chain(GenSpec{10, 0, 1, true}), std::invalid_argument);
    CHECK_THROWS_AS(generate_chain(GenSpec{10, 11, 1, true}), std::invalid_argument);
    CHECK_THROWS_AS(generate_chain(GenSpec{10, 10, 1, false}), std::invalid_argument);
    CHECK_NOTHROW(generate_chain(GenSpec{10, 10, 1, true}));
}

TEST_CASE("successor choice is marginally uniform") {
    // Over many seeds, state s appears among row 0's successors with
    // frequency q/S. Allow 3 standard errors.
    const std::uint32_t states = 20;
    const std::uint32_t q = 5;
    const int trials = 4000;
    std::vector<int> hits(states, 0);
    for (int t = 0; t < trials; ++t) {
        auto m = generate_chain(GenSpec{states, q, 50000 + static_cast<std::uint64_t>(t), true});
        for (const auto& tr : m.row(0)) hits[tr.to]++;
    }
    const double p = static_cast<double>(q) / states;
    const double se = std::sqrt(p * (1 - p) / trials);
    for (StateId s = 0; s < states; ++s) {
        const double freq = static_cast<double>(hits[s]) / trials;
        CHECK(std::abs(freq - p) <= 3.0 * se);
    }
}
