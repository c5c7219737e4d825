#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mlseq/logprob.hpp"

namespace mlseq {

/// Row index into a TransitionModel.
using StateId = std::uint32_t;

/// One positive-probability edge out of a state.
struct Transition {
    StateId to = 0;
    double prob = 0.0;
    double log_prob = 0.0;  // ln(prob), precomputed once at construction

    friend bool operator==(const Transition& a, const Transition& b) {
        return a.to == b.to && a.prob == b.prob;
    }
};

/// Sparse row-stochastic transition structure of a finite Markov chain.
/// Rows are stored in compressed form; only strictly positive transitions
/// are kept, canonically sorted by ascending successor id. Immutable after
/// construction, so freely shareable across threads.
class TransitionModel {
public:
    TransitionModel() = default;

    /// Build from per-row (successor, probability) lists. Rows are stored
    /// exactly as given (no sorting, no renormalization) so that
    /// validate_model() can report what is actually there.
    static TransitionModel from_rows(
        std::vector<std::vector<std::pair<StateId, double>>> rows);

    std::size_t state_count() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }

    std::span<const Transition> row(StateId x) const {
        return {edges_.data() + offsets_[x], edges_.data() + offsets_[x + 1]};
    }

    std::size_t out_degree(StateId x) const { return offsets_[x + 1] - offsets_[x]; }
    std::size_t max_out_degree() const;
    std::size_t edge_count() const { return edges_.size(); }

    friend bool operator==(const TransitionModel& a, const TransitionModel& b) {
        return a.offsets_ == b.offsets_ && a.edges_ == b.edges_;
    }

private:
    std::vector<std::size_t> offsets_;  // state_count + 1 entries
    std::vector<Transition> edges_;
};

/// An N-step state sequence with its occurrence log-probability: the
/// product of the transition probabilities along (start, states...).
struct Trajectory {
    StateId start = 0;
    std::vector<StateId> states;
    LogProb log_prob;
};

struct Violation {
    std::size_t row = 0;
    std::string reason;
};

struct ValidationResult {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

/// Tolerance for a row's probabilities summing to 1 (absolute).
inline constexpr double kRowSumTolerance = 1e-9;

/// Check every model invariant: non-empty rows, in-range ids, rows sorted
/// strictly ascending with no duplicates, probabilities in (0,1], and row
/// sums within kRowSumTolerance of 1. Violations are data, not failures.
ValidationResult validate_model(const TransitionModel& model);

/// ln p(y|x); impossible() if y is not a listed successor of x.
/// Throws std::invalid_argument for out-of-range ids.
LogProb transition_logprob(const TransitionModel& model, StateId x, StateId y);

/// Sum of transition log-probs along consecutive pairs starting at
/// (start, states[0]). The empty sequence has log-probability 0.
/// Throws std::invalid_argument for out-of-range ids.
LogProb trajectory_logprob(const TransitionModel& model, StateId start,
                           std::span<const StateId> states);

}  // namespace mlseq
