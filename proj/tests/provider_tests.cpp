#include <cmath>

#include <doctest.h>

#include "mlseq/chain_io.hpp"
#include "mlseq/provider.hpp"
#include "test_helpers.hpp"

using namespace mlseq;
using mlseq::testing::random_chain;
using mlseq::testing::two_state;

namespace {

std::vector<std::string> to_keys(const Trajectory& t) {
    std::vector<std::string> keys;
    keys.reserve(t.states.size());
    for (StateId s : t.states) keys.push_back(std::to_string(s));
    return keys;
}

// A source that replays scripted replies, for protocol-contract tests.
class ScriptedSource final : public SuccessorSource {
public:
    explicit ScriptedSource(SuccessorList reply) : reply_(std::move(reply)) {}
    SuccessorList successors(const SuccessorQuery&) override { return reply_; }
    SourceTier tier() const override { return SourceTier::Generative; }

private:
    SuccessorList reply_;
};

}  // namespace

TEST_CASE("natural key ordering") {
    CHECK(natural_key_less("2", "10"));
    CHECK_FALSE(natural_key_less("10", "2"));
    CHECK(natural_key_less("0", "1"));
    CHECK(natural_key_less("abc", "abd"));
    CHECK(natural_key_less("007", "7"));  // equal value, lexicographic fallback
}

TEST_CASE("in-memory adapter returns rows in canonical order") {
    auto m = two_state(0.6);
    InMemorySource source(m);

    auto all = query_successors(source, SuccessorQuery{"0", std::nullopt});
    REQUIRE(all.entries.size() == 2);
    CHECK(all.entries[0].key == "0");
    CHECK(all.entries[0].prob == 0.6);
    CHECK(all.entries[1].key == "1");
    CHECK(all.entries[1].prob == 0.4);

    auto top1 = query_successors(source, SuccessorQuery{"0", 1u});
    REQUIRE(top1.entries.size() == 1);
    CHECK(top1.entries[0].key == "0");

    CHECK_THROWS_AS(query_successors(source, SuccessorQuery{"9", std::nullopt}),
                    NotFoundError);
    CHECK_THROWS_AS(query_successors(source, SuccessorQuery{"x", std::nullopt}),
                    NotFoundError);
}

TEST_CASE("provider decoding matches direct decoding byte for byte") {
    auto m = random_chain(30, 6, 12000);
    const std::size_t n = 18;
    InMemorySource source(m);
    DecodeEngine engine(m, n);

    std::vector<Policy> policies;
    policies.push_back(GreedyPolicy{});
    policies.push_back(RolloutSpec{});  // l=1 untruncated full width
    {
        RolloutSpec s;
        s.lookahead = 2;
        s.truncation = 4;
        s.width = 4;
        policies.push_back(s);
    }
    {
        RolloutSpec s;
        s.width = 3;
        s.level = 1;
        policies.push_back(s);
    }

    for (const auto& policy : policies) {
        for (StateId x = 0; x < 30; x += 5) {
            auto direct = engine.run(x, policy);
            auto [via_source, c] = decode_source(source, std::to_string(x), n, policy);
            CHECK(via_source.keys == to_keys(direct));
            CHECK(via_source.log_prob.log() == direct.log_prob.log());
        }
    }
}

TEST_CASE("exact ties keep provider and direct decodes identical") {
    // All probabilities equal; every Q-factor ties, so this exercises the
    // lexicographic tie-break through both code paths. Twelve states pushes
    // key ordering past the "10" < "2" lexicographic trap.
    std::vector<std::vector<std::pair<StateId, double>>> rows(12);
    for (StateId x = 0; x < 12; ++x) {
        for (StateId y = 0; y < 3; ++y) {
            rows[x].emplace_back((x + y * 4 + 1) % 12, 1.0 / 3.0);
        }
        std::sort(rows[x].begin(), rows[x].end());
    }
    auto m = TransitionModel::from_rows(rows);
    const std::size_t n = 8;
    InMemorySource source(m);
    DecodeEngine engine(m, n);
    RolloutSpec spec;
    spec.lookahead = 2;
    for (StateId x = 0; x < 12; ++x) {
        auto direct = engine.run(x, spec);
        auto [via_source, c] = decode_source(source, std::to_string(x), n, spec);
        CHECK(via_source.keys == to_keys(direct));
    }
}

TEST_CASE("optimal decoding requires an enumerable source") {
    auto m = two_state(0.6);
    SUBCASE("in-memory source supports it") {
        InMemorySource source(m);
        auto [traj, c] = decode_source(source, "0", 4, OptimalPolicy{});
        CHECK(traj.keys == std::vector<std::string>{"1", "0", "1", "0"});
    }
    SUBCASE("generative source reports a capability error") {
        ScriptedSource source(SuccessorList{{{"0", 0.6}, {"1", 0.4}}});
        CHECK_THROWS_AS(decode_source(source, "0", 4, OptimalPolicy{}),
                        CapabilityError);
    }
}

TEST_CASE("process source speaks the line protocol") {
    const std::string chain = (mlseq::testing::data_dir() / "ts06.mc").string();
    const std::string command =
        mlseq::testing::tool_path() + " serve --chain " + chain;

    ProcessSource source(command);
    auto list = query_successors(source, SuccessorQuery{"0", std::nullopt});
    REQUIRE(list.entries.size() == 2);
    CHECK(list.entries[0].prob == 0.6);

    auto m = load_chain_file(chain);
    DecodeEngine engine(m, 4);
    auto direct = engine.run(0, RolloutSpec{});
    auto [traj, c] = decode_source(source, "0", 4, RolloutSpec{});
    CHECK(traj.keys == to_keys(direct));
    CHECK(traj.log_prob.log() == direct.log_prob.log());

    CHECK_THROWS_AS(query_successors(source, SuccessorQuery{"9", std::nullopt}),
                    NotFoundError);
}

TEST_CASE("protocol violations are reported, not crashed on") {
    SUBCASE("unsorted entries") {
        ScriptedSource source(SuccessorList{{{"0", 0.2}, {"1", 0.8}}});
        CHECK_THROWS_AS(decode_source(source, "0", 3, GreedyPolicy{}),
                        ProtocolError);
    }
    SUBCASE("process exit mid-stream carries the partial decode") {
        ProcessSource source("head -c 0");  // exits immediately, no replies
        try {
            decode_source(source, "0", 5, GreedyPolicy{});
            FAIL("expected PartialDecodeError");
        } catch (const PartialDecodeError& e) {
            CHECK(e.partial().start == "0");
            CHECK(e.partial().keys.empty());
            CHECK(std::string(e.what()).find("0 of 5 steps") != std::string::npos);
        }
    }
    SUBCASE("garbage reply") {
        ProcessSource source("yes not-json");
        CHECK_THROWS_AS(decode_source(source, "0", 3, GreedyPolicy{}),
                        ProtocolError);
    }
}

TEST_CASE("scripted replies are validated against the wire contract") {
    const std::string chain = (mlseq::testing::data_dir() / "ts06.mc").string();
    const std::string serve =
        mlseq::testing::tool_path() + " serve --chain " + chain;

    SUBCASE("well-formed replies pass validation") {
        ProcessSource source(serve);
        CHECK_NOTHROW(query_successors(source, SuccessorQuery{"1", 1u}));
    }
    SUBCASE("probability above one") {
        ProcessSource source("printf '%s\\n' '{\"entries\":[[\"0\",1.5]]}'");
        CHECK_THROWS_WITH_AS(query_successors(source, SuccessorQuery{"0", 1u}),
                             doctest::Contains("out of (0,1]"), ProtocolError);
    }
    SUBCASE("descending order enforced") {
        ProcessSource source(
            "printf '%s\\n' '{\"entries\":[[\"0\",0.1],[\"1\",0.9]]}'");
        CHECK_THROWS_WITH_AS(query_successors(source, SuccessorQuery{"0", std::nullopt}),
                             doctest::Contains("not sorted"), ProtocolError);
    }
    SUBCASE("more entries than requested") {
        ProcessSource source(
            "printf '%s\\n' '{\"entries\":[[\"0\",0.6],[\"1\",0.4]]}'");
        CHECK_THROWS_WITH_AS(query_successors(source, SuccessorQuery{"0", 1u}),
                             doctest::Contains("more entries"), ProtocolError);
    }
}
