#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <variant>
#include <vector>

#include "mlseq/chain.hpp"

namespace mlseq {

/// Tag for the policy that always takes the single most probable successor.
struct GreedyPolicy {};

/// Tag for the exact most-likely policy computed by backward DP.
struct OptimalPolicy {};

/// Configuration of the rollout family.
///   lookahead  - number of future selections scored before committing (>= 1)
///   truncation - cut base-policy tail simulations to m steps (nullopt = run
///                to the horizon)
///   width      - keep only the top-w most probable successors at every depth
///                of the lookahead tree (nullopt = all successors)
///   level      - 0: base policy is greedy; r > 0: base policy is the rollout
///                policy of level r-1 with this same spec
struct RolloutSpec {
    std::uint32_t lookahead = 1;
    std::optional<std::uint32_t> truncation;
    std::optional<std::uint32_t> width;
    std::uint32_t level = 0;
};

using Policy = std::variant<GreedyPolicy, OptimalPolicy, RolloutSpec>;

/// Work accounting: one comparison per candidate probability examined.
/// A greedy selection over a row of degree q costs q comparisons; each
/// candidate Q-factor examined at a rollout step costs one comparison plus
/// the comparisons of its tail simulation. Truncated tails are charged their
/// nominal m-step cost even where the horizon clips the probability product,
/// so a full decode with {lookahead 1, truncation m, width q} on a
/// fixed-out-degree chain records exactly (q^2 m + q) * N, an amplification
/// of q m + 1 over the greedy decode's q * N.
struct CostCounters {
    std::uint64_t comparisons = 0;
    std::uint64_t base_policy_steps = 0;

    CostCounters& operator+=(const CostCounters& other) {
        comparisons += other.comparisons;
        base_policy_steps += other.base_policy_steps;
        return *this;
    }
};

/// Backward-DP tables of best attainable tail log-probabilities.
/// value(k, x) is the log of the maximal occurrence probability of any
/// (N-k)-step sequence starting from x at time k; value(N, x) == 0.
/// best(k, x) is the minimal-id successor attaining it.
class ValueTable {
public:
    ValueTable(std::size_t horizon, std::size_t state_count)
        : horizon_(horizon),
          state_count_(state_count),
          values_((horizon + 1) * state_count, 0.0),
          argmax_(horizon * state_count, 0) {}

    std::size_t horizon() const { return horizon_; }
    std::size_t state_count() const { return state_count_; }

    double value(std::size_t k, StateId x) const {
        return values_[k * state_count_ + x];
    }
    StateId best(std::size_t k, StateId x) const {
        return argmax_[k * state_count_ + x];
    }

    double& value_ref(std::size_t k, StateId x) { return values_[k * state_count_ + x]; }
    StateId& best_ref(std::size_t k, StateId x) { return argmax_[k * state_count_ + x]; }

private:
    std::size_t horizon_;
    std::size_t state_count_;
    std::vector<double> values_;   // (N+1) x S, row-major by k
    std::vector<StateId> argmax_;  // N x S
};

/// Successor with maximal p(y|x); ties broken by minimal state id.
StateId greedy_step(const TransitionModel& model, StateId x);

/// Log-probability of the greedy trajectory of `steps` steps from y
/// (0 when steps == 0). This is the base-policy tail value used by rollout:
/// steps = N-k-1 untruncated, min(m, N-k-1) truncated.
LogProb greedy_tail_logprob(const TransitionModel& model, StateId y,
                            std::size_t steps);

/// Backward recursion over all states and stages; O(N * S * q).
ValueTable optimal_tables(const TransitionModel& model, std::size_t horizon);

/// Forward extraction from precomputed tables; the result's log_prob equals
/// value(0, x0). Throws std::invalid_argument on a table/model mismatch.
Trajectory optimal_trajectory(const TransitionModel& model, StateId x0,
                              std::size_t horizon, const ValueTable& table);

/// One rollout selection at time k of horizon N. Candidate sequences of
/// length min(lookahead, N-k) are enumerated over the top-w successors at
/// every depth; each is scored by its path probability times the base
/// policy's tail probability over min(m, N-k-l) steps. Returns the first
/// state of the maximizing sequence; exact ties go to the lexicographically
/// smallest id sequence.
StateId rollout_step(const TransitionModel& model, StateId x, std::size_t k,
                     std::size_t horizon, const RolloutSpec& spec,
                     CostCounters& counters);

/// Run the chosen step rule from k = 0 to N-1 starting at x0. The returned
/// trajectory's log_prob is recomputed with trajectory_logprob.
std::pair<Trajectory, CostCounters> decode(const TransitionModel& model,
                                           StateId x0, std::size_t horizon,
                                           const Policy& policy);

/// Exhaustive depth-first enumeration of all N-step paths; independent of
/// the DP route. Refuses (SizeGuardError) when max_out_degree^N > 10^7.
/// Ties go to the lexicographically smallest state sequence.
Trajectory brute_force_optimal(const TransitionModel& model, StateId x0,
                               std::size_t horizon);

/// Shared per-(model, horizon) precomputation for running many decodes over
/// one chain: greedy successor of every state, greedy tail log-probabilities
/// and their nominal comparison costs for every tail length, plus a lazily
/// built ValueTable. Immutable after construction apart from the lazy table,
/// which is guarded; decodes may run concurrently.
class DecodeEngine {
public:
    /// Validates the model (throws std::invalid_argument if invalid) and
    /// builds the greedy tables, O(S * (q + N)).
    DecodeEngine(const TransitionModel& model, std::size_t horizon);

    const TransitionModel& model() const { return *model_; }
    std::size_t horizon() const { return horizon_; }

    Trajectory greedy(StateId x0, CostCounters* counters = nullptr) const;
    Trajectory optimal(StateId x0, CostCounters* counters = nullptr) const;
    Trajectory rollout(StateId x0, const RolloutSpec& spec,
                       CostCounters* counters = nullptr) const;
    Trajectory run(StateId x0, const Policy& policy,
                   CostCounters* counters = nullptr) const;

    /// Builds the DP tables on first use.
    const ValueTable& tables() const;

    StateId greedy_successor(StateId x) const { return greedy_next_[x]; }

    /// Equals greedy_tail_logprob(model, y, steps) for steps <= horizon.
    double greedy_tail_log(StateId y, std::size_t steps) const {
        return tail_log_[y * (horizon_ + 1) + steps];
    }

    /// Comparisons a literal steps-long greedy walk from y would perform.
    std::uint64_t greedy_tail_cost(StateId y, std::size_t steps) const {
        return tail_cost_[y * (horizon_ + 1) + steps];
    }

    /// One rollout selection through this engine (fresh internal state).
    StateId rollout_step_at(StateId x, std::size_t k, const RolloutSpec& spec,
                            CostCounters& counters) const;

private:
    const TransitionModel* model_;
    std::size_t horizon_;
    std::vector<StateId> greedy_next_;        // per state
    std::vector<double> greedy_step_log_;     // ln p(greedy_next[x] | x)
    std::vector<double> tail_log_;            // S x (N+1)
    std::vector<std::uint64_t> tail_cost_;    // S x (N+1)
    mutable std::once_flag table_once_;
    mutable std::unique_ptr<ValueTable> table_;
};

}  // namespace mlseq
