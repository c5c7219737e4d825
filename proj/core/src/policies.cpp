#include "mlseq/policies.hpp"

#include "mlseq/errors.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace mlseq {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr StateId kInvalidState = std::numeric_limits<StateId>::max();

void check_state_arg(const TransitionModel& model, StateId x, const char* what) {
    if (x >= model.state_count()) {
        throw std::invalid_argument(std::string(what) + " state id " +
                                    std::to_string(x) + " out of range");
    }
}

void check_spec(const RolloutSpec& spec) {
    if (spec.lookahead < 1) throw std::invalid_argument("lookahead must be >= 1");
    if (spec.truncation && *spec.truncation < 1) {
        throw std::invalid_argument("truncation must be >= 1");
    }
    if (spec.width && *spec.width < 1) {
        throw std::invalid_argument("width must be >= 1");
    }
}

}  // namespace

StateId greedy_step(const TransitionModel& model, StateId x) {
    check_state_arg(model, x, "current");
    const auto row = model.row(x);
    assert(!row.empty());
    double best_p = -1.0;
    StateId best = kInvalidState;
    for (const auto& t : row) {
        if (t.prob > best_p || (t.prob == best_p && t.to < best)) {
            best_p = t.prob;
            best = t.to;
        }
    }
    return best;
}

LogProb greedy_tail_logprob(const TransitionModel& model, StateId y,
                            std::size_t steps) {
    check_state_arg(model, y, "tail start");
    LogProb total = LogProb::certain();
    StateId cur = y;
    for (std::size_t i = 0; i < steps; ++i) {
        StateId next = greedy_step(model, cur);
        total += transition_logprob(model, cur, next);
        cur = next;
    }
    return total;
}

ValueTable optimal_tables(const TransitionModel& model, std::size_t horizon) {
    const std::size_t n = model.state_count();
    ValueTable table(horizon, n);
    for (std::size_t k = horizon; k-- > 0;) {
        for (StateId x = 0; x < n; ++x) {
            double best = kNegInf;
            StateId best_id = kInvalidState;
            for (const auto& t : model.row(x)) {
                const double cand = t.log_prob + table.value(k + 1, t.to);
                if (cand > best || (cand == best && t.to < best_id)) {
                    best = cand;
                    best_id = t.to;
                }
            }
            table.value_ref(k, x) = best;
            table.best_ref(k, x) = best_id;
        }
    }
    return table;
}

Trajectory optimal_trajectory(const TransitionModel& model, StateId x0,
                              std::size_t horizon, const ValueTable& table) {
    check_state_arg(model, x0, "start");
    if (table.horizon() != horizon || table.state_count() != model.state_count()) {
        throw std::invalid_argument("value table does not match model/horizon");
    }
    Trajectory traj;
    traj.start = x0;
    traj.states.reserve(horizon);
    StateId cur = x0;
    for (std::size_t k = 0; k < horizon; ++k) {
        cur = table.best(k, cur);
        traj.states.push_back(cur);
    }
    traj.log_prob = LogProb::from_log(table.value(0, x0));
    return traj;
}

// ---------------------------------------------------------------------------
// DecodeEngine
// ---------------------------------------------------------------------------

DecodeEngine::DecodeEngine(const TransitionModel& model, std::size_t horizon)
    : model_(&model), horizon_(horizon) {
    auto validation = validate_model(model);
    if (!validation.ok()) {
        throw std::invalid_argument("invalid model: " +
                                    validation.violations.front().reason);
    }
    const std::size_t n = model.state_count();
    greedy_next_.resize(n);
    greedy_step_log_.resize(n);
    for (StateId x = 0; x < n; ++x) {
        StateId g = greedy_step(model, x);
        greedy_next_[x] = g;
        greedy_step_log_[x] = transition_logprob(model, x, g).log();
    }
    tail_log_.resize(n * (horizon + 1));
    tail_cost_.resize(n * (horizon + 1));
    for (StateId y = 0; y < n; ++y) {
        double* logs = tail_log_.data() + y * (horizon + 1);
        std::uint64_t* costs = tail_cost_.data() + y * (horizon + 1);
        logs[0] = 0.0;
        costs[0] = 0;
        StateId cur = y;
        double acc = 0.0;
        std::uint64_t cost = 0;
        for (std::size_t t = 1; t <= horizon; ++t) {
            cost += model.out_degree(cur);
            acc += greedy_step_log_[cur];
            cur = greedy_next_[cur];
            logs[t] = acc;
            costs[t] = cost;
        }
    }
}

const ValueTable& DecodeEngine::tables() const {
    std::call_once(table_once_, [this] {
        table_ = std::make_unique<ValueTable>(optimal_tables(*model_, horizon_));
    });
    return *table_;
}

// Per-decode evaluation state for the rollout family: lazily built top-w
// candidate lists, and memoized base-policy decisions for level >= 1 (only
// for the (time, state) pairs a tail simulation actually reaches).
class RolloutRun {
public:
    RolloutRun(const DecodeEngine& eng, const RolloutSpec& spec,
               CostCounters& counters)
        : eng_(eng),
          spec_(spec),
          counters_(counters),
          n_(eng.horizon()),
          state_count_(eng.model().state_count()) {
        // m >= N never truncates a tail, so it degrades to the untruncated
        // policy (and keeps tail-table lookups in range).
        truncated_ = spec.truncation && *spec.truncation < n_;
        m_ = truncated_ ? *spec.truncation : 0;
        memo_.resize(spec.level);
        cand_cache_.resize(state_count_);
        cand_built_.assign(state_count_, 0);
    }

    StateId step(StateId x, std::size_t k) {
        return compute_decision(x, k, spec_.level).next;
    }

private:
    struct Decision {
        StateId next = kInvalidState;
        double step_log = 0.0;
    };
    struct Cand {
        StateId to;
        double log_prob;
    };

    std::span<const Cand> candidates(StateId s) {
        if (!cand_built_[s]) {
            const auto row = eng_.model().row(s);
            auto& list = cand_cache_[s];
            if (spec_.width && *spec_.width < row.size()) {
                // Top-w by probability, min-id at equal probability; then
                // back to ascending id so enumeration stays lexicographic.
                std::vector<std::size_t> idx(row.size());
                for (std::size_t i = 0; i < row.size(); ++i) idx[i] = i;
                std::partial_sort(idx.begin(), idx.begin() + *spec_.width, idx.end(),
                                  [row](std::size_t a, std::size_t b) {
                                      if (row[a].prob != row[b].prob)
                                          return row[a].prob > row[b].prob;
                                      return row[a].to < row[b].to;
                                  });
                idx.resize(*spec_.width);
                std::sort(idx.begin(), idx.end());
                list.reserve(idx.size());
                for (std::size_t i : idx) list.push_back(Cand{row[i].to, row[i].log_prob});
            } else {
                list.reserve(row.size());
                for (const auto& t : row) list.push_back(Cand{t.to, t.log_prob});
            }
            cand_built_[s] = 1;
        }
        return cand_cache_[s];
    }

    Decision decide(StateId x, std::size_t k, std::uint32_t level) {
        if (level < spec_.level) {
            auto& layer = memo_[level];
            if (layer.empty()) layer.assign(n_ * state_count_, Decision{});
            Decision& slot = layer[k * state_count_ + x];
            if (slot.next == kInvalidState) slot = compute_decision(x, k, level);
            return slot;
        }
        return compute_decision(x, k, level);
    }

    // Log-probability of `steps` steps of the level-`base_level` rollout
    // policy from y at time t0.
    double base_tail_log(StateId y, std::size_t t0, std::size_t steps,
                         std::uint32_t base_level) {
        double acc = 0.0;
        StateId cur = y;
        for (std::size_t i = 0; i < steps; ++i) {
            Decision d = decide(cur, t0 + i, base_level);
            acc += d.step_log;
            cur = d.next;
            ++counters_.base_policy_steps;
        }
        return acc;
    }

    Decision compute_decision(StateId x, std::size_t k, std::uint32_t level) {
        const std::size_t remaining = n_ - k;  // >= 1
        const std::size_t leff =
            std::min<std::size_t>(spec_.lookahead, remaining);
        const std::size_t after = remaining - leff;
        const std::size_t prob_steps =
            truncated_ ? std::min<std::size_t>(m_, after) : after;
        // Truncated tails are charged their nominal m steps even where the
        // horizon clips the probability product; see CostCounters.
        const std::size_t walk_steps = truncated_ ? m_ : after;

        std::vector<StateId> cur(leff), best_path;
        double best = kNegInf;
        bool have = false;

        auto dfs = [&](auto&& self, StateId s, std::size_t depth,
                       double acc) -> void {
            if (depth == leff) {
                double score;
                if (level == 0) {
                    score = acc + eng_.greedy_tail_log(s, prob_steps);
                    counters_.comparisons += eng_.greedy_tail_cost(s, walk_steps);
                    counters_.base_policy_steps += walk_steps;
                } else {
                    score = acc + base_tail_log(s, k + leff, prob_steps, level - 1);
                }
                ++counters_.comparisons;
                // Leaves arrive in lexicographic id order, so keeping the
                // first strict maximum breaks ties toward the smallest
                // id sequence.
                if (!have || score > best) {
                    best = score;
                    have = true;
                    best_path = cur;
                }
                return;
            }
            for (const Cand& c : candidates(s)) {
                cur[depth] = c.to;
                self(self, c.to, depth + 1, acc + c.log_prob);
            }
        };
        dfs(dfs, x, 0, 0.0);

        Decision d;
        d.next = best_path.front();
        for (const Cand& c : candidates(x)) {
            if (c.to == d.next) {
                d.step_log = c.log_prob;
                break;
            }
        }
        return d;
    }

    const DecodeEngine& eng_;
    RolloutSpec spec_;
    CostCounters& counters_;
    std::size_t n_;
    std::size_t state_count_;
    bool truncated_ = false;
    std::size_t m_ = 0;
    std::vector<std::vector<Decision>> memo_;  // [level][k * S + x]
    std::vector<std::vector<Cand>> cand_cache_;
    std::vector<char> cand_built_;
};

Trajectory DecodeEngine::greedy(StateId x0, CostCounters* counters) const {
    check_state_arg(*model_, x0, "start");
    Trajectory traj;
    traj.start = x0;
    traj.states.reserve(horizon_);
    StateId cur = x0;
    for (std::size_t k = 0; k < horizon_; ++k) {
        cur = greedy_next_[cur];
        traj.states.push_back(cur);
    }
    traj.log_prob = trajectory_logprob(*model_, x0, traj.states);
    if (counters) {
        counters->comparisons += greedy_tail_cost(x0, horizon_);
        counters->base_policy_steps += horizon_;
    }
    return traj;
}

Trajectory DecodeEngine::optimal(StateId x0, CostCounters* counters) const {
    (void)counters;  // forward extraction performs no probability comparisons
    Trajectory traj = optimal_trajectory(*model_, x0, horizon_, tables());
    traj.log_prob = trajectory_logprob(*model_, x0, traj.states);
    return traj;
}

Trajectory DecodeEngine::rollout(StateId x0, const RolloutSpec& spec,
                                 CostCounters* counters) const {
    check_state_arg(*model_, x0, "start");
    check_spec(spec);
    CostCounters local;
    CostCounters& c = counters ? *counters : local;
    RolloutRun run(*this, spec, c);
    Trajectory traj;
    traj.start = x0;
    traj.states.reserve(horizon_);
    StateId cur = x0;
    for (std::size_t k = 0; k < horizon_; ++k) {
        cur = run.step(cur, k);
        traj.states.push_back(cur);
    }
    traj.log_prob = trajectory_logprob(*model_, x0, traj.states);
    return traj;
}

Trajectory DecodeEngine::run(StateId x0, const Policy& policy,
                             CostCounters* counters) const {
    return std::visit(
        [&](const auto& p) -> Trajectory {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, GreedyPolicy>) {
                return greedy(x0, counters);
            } else if constexpr (std::is_same_v<T, OptimalPolicy>) {
                return optimal(x0, counters);
            } else {
                return rollout(x0, p, counters);
            }
        },
        policy);
}

StateId DecodeEngine::rollout_step_at(StateId x, std::size_t k,
                                      const RolloutSpec& spec,
                                      CostCounters& counters) const {
    check_state_arg(*model_, x, "current");
    check_spec(spec);
    if (k >= horizon_) {
        throw std::invalid_argument("stage " + std::to_string(k) +
                                    " is past the horizon " +
                                    std::to_string(horizon_));
    }
    RolloutRun run(*this, spec, counters);
    return run.step(x, k);
}

StateId rollout_step(const TransitionModel& model, StateId x, std::size_t k,
                     std::size_t horizon, const RolloutSpec& spec,
                     CostCounters& counters) {
    DecodeEngine engine(model, horizon);
    return engine.rollout_step_at(x, k, spec, counters);
}

std::pair<Trajectory, CostCounters> decode(const TransitionModel& model,
                                           StateId x0, std::size_t horizon,
                                           const Policy& policy) {
    DecodeEngine engine(model, horizon);
    CostCounters counters;
    Trajectory traj = engine.run(x0, policy, &counters);
    return {std::move(traj), counters};
}

Trajectory brute_force_optimal(const TransitionModel& model, StateId x0,
                               std::size_t horizon) {
    check_state_arg(model, x0, "start");
    auto validation = validate_model(model);
    if (!validation.ok()) {
        throw std::invalid_argument("invalid model: " +
                                    validation.violations.front().reason);
    }
    const double q = static_cast<double>(model.max_out_degree());
    if (static_cast<double>(horizon) * std::log(std::max(q, 1.0)) >
        std::log(1e7)) {
        throw SizeGuardError("refusing exhaustive enumeration: up to " +
                             std::to_string(q) + "^" + std::to_string(horizon) +
                             " paths");
    }

    std::vector<StateId> cur(horizon), best_path;
    double best = kNegInf;
    bool have = false;

    auto dfs = [&](auto&& self, StateId s, std::size_t depth, double acc) -> void {
        if (depth == horizon) {
            if (!have || acc > best) {
                best = acc;
                have = true;
                best_path = cur;
            }
            return;
        }
        for (const auto& t : model.row(s)) {
            cur[depth] = t.to;
            self(self, t.to, depth + 1, acc + t.log_prob);
        }
    };
    dfs(dfs, x0, 0, 0.0);

    Trajectory traj;
    traj.start = x0;
    traj.states = std::move(best_path);
    traj.log_prob = LogProb::from_log(have ? best : 0.0);
    return traj;
}

}  // namespace mlseq
