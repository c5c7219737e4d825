#include <cmath>
#include <random>

#include <doctest.h>

#include "mlseq/chain.hpp"
#include "mlseq/chain_io.hpp"
#include "test_helpers.hpp"

using namespace mlseq;
using mlseq::testing::three_state;
using mlseq::testing::two_state;

TEST_CASE("validate accepts the two-state chain") {
    CHECK(validate_model(two_state(0.6)).ok());
    CHECK(validate_model(three_state(0.6)).ok());
}

TEST_CASE("validate flags a non-stochastic row") {
    auto m = TransitionModel::from_rows({
        {{0, 0.5}, {1, 0.4}},  // sums to 0.9
        {{0, 1.0}},
    });
    auto result = validate_model(m);
    REQUIRE_FALSE(result.ok());
    CHECK(result.violations.front().row == 0);
    CHECK(result.violations.front().reason.find("not stochastic") != std::string::npos);
}

TEST_CASE("validate flags an unsorted row") {
    auto m = TransitionModel::from_rows({
        {{1, 0.5}, {0, 0.5}},
        {{0, 1.0}},
    });
    auto result = validate_model(m);
    REQUIRE_FALSE(result.ok());
    CHECK(result.violations.front().reason.find("not sorted ascending") !=
          std::string::npos);
}

TEST_CASE("validate flags duplicates, bad ids, empty rows") {
    auto dup = TransitionModel::from_rows({{{0, 0.5}, {0, 0.5}}, {{0, 1.0}}});
    CHECK(validate_model(dup).violations.front().reason.find("duplicate") !=
          std::string::npos);

    auto oob = TransitionModel::from_rows({{{5, 1.0}}, {{0, 1.0}}});
    CHECK(validate_model(oob).violations.front().reason.find("out of range") !=
          std::string::npos);

    auto empty = TransitionModel::from_rows({{{1, 1.0}}, {}});
    CHECK(validate_model(empty).violations.front().reason.find("empty") !=
          std::string::npos);
}

TEST_CASE("transition logprob on the two-state chain") {
    auto m = two_state(0.6);
    CHECK(transition_logprob(m, 0, 1).log() == doctest::Approx(std::log(0.4)));
    CHECK(transition_logprob(m, 1, 1).is_impossible());
    CHECK(transition_logprob(m, 1, 0).log() == 0.0);
    CHECK_THROWS_AS(transition_logprob(m, 2, 0), std::invalid_argument);
    CHECK_THROWS_AS(transition_logprob(m, 0, 7), std::invalid_argument);
}

TEST_CASE("trajectory logprob reproduces the closed forms") {
    auto m = two_state(0.6);
    const StateId stay[] = {0, 0, 0, 0};
    CHECK(trajectory_logprob(m, 0, stay).log() ==
          doctest::Approx(4 * std::log(0.6)).epsilon(1e-12));

    const StateId alt[] = {1, 0, 1, 0};
    CHECK(trajectory_logprob(m, 0, alt).log() ==
          doctest::Approx(std::log(0.16)).epsilon(1e-12));

    CHECK(trajectory_logprob(m, 0, {}).log() == 0.0);

    const StateId absent[] = {1, 1};
    CHECK(trajectory_logprob(m, 0, absent).is_impossible());
}

TEST_CASE("trajectory logprob matches the direct product") {
    // exp(sum of logs) vs product of row probabilities, over random walks
    std::mt19937_64 rng(7);
    for (int chain = 0; chain < 10; ++chain) {
        auto m = mlseq::testing::random_chain(12, 3, 100 + chain);
        StateId cur = static_cast<StateId>(rng() % 12);
        const StateId start = cur;
        std::vector<StateId> states;
        double product = 1.0;
        for (int step = 0; step < 20; ++step) {
            const auto row = m.row(cur);
            const auto& t = row[rng() % row.size()];
            product *= t.prob;
            states.push_back(t.to);
            cur = t.to;
        }
        const double via_logs = trajectory_logprob(m, start, states).prob();
        CHECK(via_logs == doctest::Approx(product).epsilon(1e-12));
    }
}

TEST_CASE("trajectory logprob is prefix-additive") {
    std::mt19937_64 rng(11);
    auto m = mlseq::testing::random_chain(15, 4, 555);
    for (int trial = 0; trial < 25; ++trial) {
        StateId start = static_cast<StateId>(rng() % 15);
        std::vector<StateId> s1, s2;
        StateId cur = start;
        for (int i = 0; i < 6; ++i) {
            const auto row = m.row(cur);
            cur = row[rng() % row.size()].to;
            s1.push_back(cur);
        }
        StateId mid = cur;
        for (int i = 0; i < 5; ++i) {
            const auto row = m.row(cur);
            cur = row[rng() % row.size()].to;
            s2.push_back(cur);
        }
        std::vector<StateId> whole = s1;
        whole.insert(whole.end(), s2.begin(), s2.end());
        const double split = trajectory_logprob(m, start, s1).log() +
                             trajectory_logprob(m, mid, s2).log();
        CHECK(trajectory_logprob(m, start, whole).log() ==
              doctest::Approx(split).epsilon(1e-12));
    }
}

TEST_CASE("row probabilities sum to one through the log view") {
    auto m = mlseq::testing::random_chain(30, 5, 77);
    for (StateId x = 0; x < 30; ++x) {
        double sum = 0.0;
        for (const auto& t : m.row(x)) {
            sum += transition_logprob(m, x, t.to).prob();
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("encode produces the documented format") {
    const std::string text = encode_chain(two_state(0.6));
    CHECK(text ==
          "MCHAIN 1\n"
          "states 2\n"
          "0 0 0.6\n"
          "0 1 0.4\n"
          "1 0 1\n");
}

TEST_CASE("encode/decode round-trip is exact") {
    SUBCASE("hand-built chains") {
        for (double p : {0.6, 0.7, 0.5000000000000001}) {
            auto m = two_state(p);
            CHECK(decode_chain(encode_chain(m)) == m);
            auto r = three_state(p);
            CHECK(decode_chain(encode_chain(r)) == r);
        }
    }
    SUBCASE("generated chains keep all 17-digit probabilities") {
        for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
            auto m = mlseq::testing::random_chain(25, 6, seed);
            CHECK(decode_chain(encode_chain(m)) == m);
        }
    }
    SUBCASE("comments survive decoding") {
        std::vector<std::string> comments{"one", "two"};
        auto m = two_state(0.6);
        CHECK(decode_chain(encode_chain(m, comments)) == m);
    }
}

TEST_CASE("decode errors name the line") {
    SUBCASE("bad header") {
        CHECK_THROWS_WITH_AS(decode_chain("NOPE\n"),
                             doctest::Contains("malformed header"), ParseError);
    }
    SUBCASE("out of range id") {
        try {
            decode_chain("MCHAIN 1\nstates 2\n0 0 0.5\n0 5 0.5\n1 0 1\n");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line() == 4);
            CHECK(std::string(e.what()).find("state id out of range, line 4") !=
                  std::string::npos);
        }
    }
    SUBCASE("duplicate edge") {
        CHECK_THROWS_WITH_AS(
            decode_chain("MCHAIN 1\nstates 2\n0 0 0.5\n0 0 0.5\n1 0 1\n"),
            doctest::Contains("duplicate edge"), ParseError);
    }
    SUBCASE("non-stochastic row") {
        CHECK_THROWS_WITH_AS(
            decode_chain("MCHAIN 1\nstates 2\n0 0 0.5\n0 1 0.4\n1 0 1\n"),
            doctest::Contains("not stochastic"), ParseError);
    }
    SUBCASE("out of order edges") {
        CHECK_THROWS_WITH_AS(
            decode_chain("MCHAIN 1\nstates 2\n0 1 0.4\n0 0 0.6\n1 0 1\n"),
            doctest::Contains("canonical order"), ParseError);
    }
    SUBCASE("missing row") {
        CHECK_THROWS_WITH_AS(decode_chain("MCHAIN 1\nstates 2\n0 0 1\n"),
                             doctest::Contains("no edges"), ParseError);
    }
}

TEST_CASE("golden fixture files parse to the reference chains") {
    auto ts = load_chain_file(mlseq::testing::data_dir() / "ts06.mc");
    CHECK(ts == two_state(0.6));
    auto tr = load_chain_file(mlseq::testing::data_dir() / "tr06.mc");
    CHECK(tr == three_state(0.6));
}
