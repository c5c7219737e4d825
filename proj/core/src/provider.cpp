#include "mlseq/provider.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

namespace mlseq {

namespace {

bool all_digits(const std::string& s) {
    if (s.empty()) return false;
    return std::all_of(s.begin(), s.end(),
                       [](unsigned char c) { return std::isdigit(c); });
}

}  // namespace

bool natural_key_less(const std::string& a, const std::string& b) {
    if (all_digits(a) && all_digits(b)) {
        std::string_view va{a}, vb{b};
        while (va.size() > 1 && va.front() == '0') va.remove_prefix(1);
        while (vb.size() > 1 && vb.front() == '0') vb.remove_prefix(1);
        if (va.size() != vb.size()) return va.size() < vb.size();
        if (va != vb) return va < vb;
        return a < b;  // numerically equal (leading zeros); keep strict-weak order
    }
    return a < b;
}

SuccessorList query_successors(SuccessorSource& source, const SuccessorQuery& query) {
    return source.successors(query);
}

SuccessorList InMemorySource::successors(const SuccessorQuery& query) {
    if (query.top_k && *query.top_k == 0) {
        throw std::invalid_argument("topK must be >= 1");
    }
    std::uint64_t id = 0;
    {
        const char* first = query.state_key.data();
        const char* last = first + query.state_key.size();
        auto [ptr, ec] = std::from_chars(first, last, id);
        if (ec != std::errc{} || ptr != last || !all_digits(query.state_key) ||
            id >= model_->state_count()) {
            throw NotFoundError("unknown state key '" + query.state_key + "'");
        }
    }

    const auto row = model_->row(static_cast<StateId>(id));
    std::vector<std::size_t> idx(row.size());
    for (std::size_t i = 0; i < row.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [row](std::size_t a, std::size_t b) {
        if (row[a].prob != row[b].prob) return row[a].prob > row[b].prob;
        return row[a].to < row[b].to;
    });
    std::size_t take = idx.size();
    if (query.top_k) take = std::min<std::size_t>(take, *query.top_k);

    SuccessorList list;
    list.entries.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        list.entries.push_back(
            SuccessorEntry{std::to_string(row[idx[i]].to), row[idx[i]].prob});
    }
    return list;
}

// ---------------------------------------------------------------------------
// Decoding through a successor source
// ---------------------------------------------------------------------------

namespace {

// Contract every consumed reply must satisfy, whatever the source class.
void check_successor_contract(const SuccessorList& list,
                              const std::optional<std::uint32_t>& top_k,
                              const std::string& key) {
    if (list.entries.empty()) {
        throw ProtocolError("no successors returned for state '" + key + "'");
    }
    if (top_k && list.entries.size() > *top_k) {
        throw ProtocolError("more entries than requested for state '" + key + "'");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < list.entries.size(); ++i) {
        const auto& e = list.entries[i];
        if (!(e.prob > 0.0) || e.prob > 1.0) {
            throw ProtocolError("entry probability out of (0,1] for state '" + key +
                                "'");
        }
        if (i > 0 && e.prob > list.entries[i - 1].prob) {
            throw ProtocolError("entries not sorted for state '" + key + "'");
        }
        sum += e.prob;
    }
    if (sum > 1.0 + 1e-6) {
        throw ProtocolError("entry probabilities sum beyond 1 for state '" + key +
                            "'");
    }
}

// Per-decode state: reply cache (sources are stationary, so a key always
// yields the same list for a fixed topK) and memoized base-policy decisions
// for multi-iteration rollout.
class SourceRun {
public:
    SourceRun(SuccessorSource& source, std::size_t horizon,
              const RolloutSpec& spec, CostCounters& counters)
        : source_(source), n_(horizon), spec_(spec), counters_(counters) {
        truncated_ = spec_.truncation && *spec_.truncation < n_;
        m_ = truncated_ ? *spec_.truncation : 0;
        query_topk_ = spec_.width;  // nullopt = all
        memo_.resize(spec_.level);
    }

    // Returns (next key, ln p(next | key)).
    std::pair<std::string, double> step(const std::string& key, std::size_t k) {
        Decision d = decide(key, k, spec_.level);
        return {d.next, d.step_log};
    }

    const SuccessorList& succ(const std::string& key) {
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        SuccessorList list =
            source_.successors(SuccessorQuery{key, query_topk_});
        check_successor_contract(list, query_topk_, key);
        return cache_.emplace(key, std::move(list)).first->second;
    }

private:
    struct Decision {
        std::string next;
        double step_log = 0.0;
    };
    struct Cand {
        std::string to;
        double log_prob;
    };

    std::vector<Cand> candidates(const std::string& key) {
        const auto& list = succ(key);
        std::size_t take = list.entries.size();
        if (spec_.width) take = std::min<std::size_t>(take, *spec_.width);
        std::vector<Cand> out;
        out.reserve(take);
        for (std::size_t i = 0; i < take; ++i) {
            out.push_back(Cand{list.entries[i].key, std::log(list.entries[i].prob)});
        }
        // Enumeration order is ascending key, matching the id order a direct
        // decode uses, so exact Q-factor ties resolve identically.
        std::sort(out.begin(), out.end(), [](const Cand& a, const Cand& b) {
            return natural_key_less(a.to, b.to);
        });
        return out;
    }

    Decision decide(const std::string& key, std::size_t k, std::uint32_t level) {
        if (level < spec_.level) {
            auto& layer = memo_[level];
            auto it = layer.find({k, key});
            if (it != layer.end()) return it->second;
            Decision d = compute_decision(key, k, level);
            layer.emplace(std::make_pair(k, key), d);
            return d;
        }
        return compute_decision(key, k, level);
    }

    double greedy_tail(const std::string& from, std::size_t steps) {
        double acc = 0.0;
        std::string cur = from;
        for (std::size_t i = 0; i < steps; ++i) {
            const auto& list = succ(cur);
            counters_.comparisons += list.entries.size();
            ++counters_.base_policy_steps;
            acc += std::log(list.entries.front().prob);
            cur = list.entries.front().key;
        }
        return acc;
    }

    double base_tail(const std::string& from, std::size_t t0, std::size_t steps,
                     std::uint32_t base_level) {
        double acc = 0.0;
        std::string cur = from;
        for (std::size_t i = 0; i < steps; ++i) {
            Decision d = decide(cur, t0 + i, base_level);
            acc += d.step_log;
            cur = d.next;
            ++counters_.base_policy_steps;
        }
        return acc;
    }

    Decision compute_decision(const std::string& key, std::size_t k,
                              std::uint32_t level) {
        const std::size_t remaining = n_ - k;
        const std::size_t leff = std::min<std::size_t>(spec_.lookahead, remaining);
        const std::size_t after = remaining - leff;
        const std::size_t prob_steps =
            truncated_ ? std::min<std::size_t>(m_, after) : after;

        std::vector<std::string> cur(leff), best_path;
        double best = -std::numeric_limits<double>::infinity();
        double best_first_log = 0.0;
        double cur_first_log = 0.0;
        bool have = false;

        auto dfs = [&](auto&& self, const std::string& s, std::size_t depth,
                       double acc) -> void {
            if (depth == leff) {
                double score;
                if (level == 0) {
                    score = acc + greedy_tail(s, prob_steps);
                } else {
                    score = acc + base_tail(s, k + leff, prob_steps, level - 1);
                }
                ++counters_.comparisons;
                if (!have || score > best) {
                    best = score;
                    have = true;
                    best_path = cur;
                    best_first_log = cur_first_log;
                }
                return;
            }
            for (const Cand& c : candidates(s)) {
                cur[depth] = c.to;
                if (depth == 0) cur_first_log = c.log_prob;
                self(self, c.to, depth + 1, acc + c.log_prob);
            }
        };
        dfs(dfs, key, 0, 0.0);

        Decision d;
        d.next = best_path.front();
        d.step_log = best_first_log;
        return d;
    }

    struct PairHash {
        std::size_t operator()(const std::pair<std::size_t, std::string>& p) const {
            return std::hash<std::size_t>{}(p.first) * 1000003u ^
                   std::hash<std::string>{}(p.second);
        }
    };

    SuccessorSource& source_;
    std::size_t n_;
    RolloutSpec spec_;
    CostCounters& counters_;
    bool truncated_ = false;
    std::size_t m_ = 0;
    std::optional<std::uint32_t> query_topk_;
    std::unordered_map<std::string, SuccessorList> cache_;
    std::vector<std::unordered_map<std::pair<std::size_t, std::string>, Decision,
                                   PairHash>>
        memo_;
};

// Helpers append committed steps directly into `traj`, so an error thrown
// mid-run leaves the partial trajectory behind for the report.
void greedy_source_decode(SuccessorSource& source, std::size_t horizon,
                          CostCounters& counters, SourceTrajectory& traj,
                          double& acc) {
    std::string cur = traj.start;
    std::unordered_map<std::string, SuccessorEntry> cache;
    for (std::size_t k = 0; k < horizon; ++k) {
        auto it = cache.find(cur);
        if (it == cache.end()) {
            SuccessorList list = source.successors(SuccessorQuery{cur, 1u});
            check_successor_contract(list, 1u, cur);
            it = cache.emplace(cur, list.entries.front()).first;
        }
        counters.comparisons += 1;
        ++counters.base_policy_steps;
        acc += std::log(it->second.prob);
        std::string next = it->second.key;
        traj.keys.push_back(next);
        cur = std::move(next);
    }
}

void rollout_source_decode(SuccessorSource& source, std::size_t horizon,
                           const RolloutSpec& spec, CostCounters& counters,
                           SourceTrajectory& traj, double& acc) {
    SourceRun run(source, horizon, spec, counters);
    std::string cur = traj.start;
    for (std::size_t k = 0; k < horizon; ++k) {
        auto [next, step_log] = run.step(cur, k);
        acc += step_log;
        traj.keys.push_back(next);
        cur = std::move(next);
    }
}

void optimal_source_decode(SuccessorSource& source, std::size_t horizon,
                           CostCounters& counters, SourceTrajectory& traj,
                           double& acc) {
    const TransitionModel* model = source.enumerable_model();
    if (source.tier() != SourceTier::Enumerable || model == nullptr) {
        throw CapabilityError(
            "exact DP needs an enumerable source; this source only answers "
            "next-state queries");
    }
    std::uint64_t id = 0;
    const char* first = traj.start.data();
    const char* last = first + traj.start.size();
    auto [ptr, ec] = std::from_chars(first, last, id);
    if (ec != std::errc{} || ptr != last || id >= model->state_count()) {
        throw NotFoundError("unknown state key '" + traj.start + "'");
    }
    DecodeEngine engine(*model, horizon);
    Trajectory t = engine.optimal(static_cast<StateId>(id), &counters);
    traj.keys.reserve(t.states.size());
    for (StateId s : t.states) traj.keys.push_back(std::to_string(s));
    acc = t.log_prob.log();
}

}  // namespace

std::pair<SourceTrajectory, CostCounters> decode_source(SuccessorSource& source,
                                                        const std::string& start_key,
                                                        std::size_t horizon,
                                                        const Policy& policy) {
    CostCounters counters;
    SourceTrajectory traj;
    traj.start = start_key;
    double acc = 0.0;
    try {
        std::visit(
            [&](const auto& p) {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, GreedyPolicy>) {
                    greedy_source_decode(source, horizon, counters, traj, acc);
                } else if constexpr (std::is_same_v<T, OptimalPolicy>) {
                    optimal_source_decode(source, horizon, counters, traj, acc);
                } else {
                    rollout_source_decode(source, horizon, p, counters, traj, acc);
                }
            },
            policy);
    } catch (const PartialDecodeError&) {
        throw;
    } catch (const ProtocolError& e) {
        traj.log_prob = LogProb::from_log(acc);
        throw PartialDecodeError(std::string(e.what()) + "; decode stopped after " +
                                     std::to_string(traj.keys.size()) + " of " +
                                     std::to_string(horizon) + " steps",
                                 std::move(traj));
    }
    traj.log_prob = LogProb::from_log(acc);
    return {std::move(traj), counters};
}

}  // namespace mlseq
