#include "mlseq/chain.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mlseq {

TransitionModel TransitionModel::from_rows(
    std::vector<std::vector<std::pair<StateId, double>>> rows) {
    TransitionModel m;
    m.offsets_.reserve(rows.size() + 1);
    m.offsets_.push_back(0);
    std::size_t total = 0;
    for (const auto& row : rows) total += row.size();
    m.edges_.reserve(total);
    for (const auto& row : rows) {
        for (const auto& [to, prob] : row) {
            m.edges_.push_back(Transition{to, prob, std::log(prob)});
        }
        m.offsets_.push_back(m.edges_.size());
    }
    return m;
}

std::size_t TransitionModel::max_out_degree() const {
    std::size_t best = 0;
    for (std::size_t x = 0; x + 1 < offsets_.size(); ++x) {
        best = std::max(best, offsets_[x + 1] - offsets_[x]);
    }
    return best;
}

ValidationResult validate_model(const TransitionModel& model) {
    ValidationResult result;
    auto add = [&](std::size_t row, std::string reason) {
        result.violations.push_back(Violation{row, std::move(reason)});
    };

    const std::size_t n = model.state_count();
    if (n == 0) {
        add(0, "model has no states");
        return result;
    }

    for (StateId x = 0; x < n; ++x) {
        const auto row = model.row(x);
        if (row.empty()) {
            add(x, "row " + std::to_string(x) + " empty");
            continue;
        }
        double sum = 0.0;
        for (std::size_t i = 0; i < row.size(); ++i) {
            const auto& t = row[i];
            if (t.to >= n) {
                add(x, "row " + std::to_string(x) + " successor " +
                           std::to_string(t.to) + " out of range");
            }
            if (!(t.prob > 0.0) || t.prob > 1.0 || !std::isfinite(t.prob)) {
                add(x, "row " + std::to_string(x) + " probability " +
                           std::to_string(t.prob) + " not in (0,1]");
            }
            if (i > 0) {
                if (t.to == row[i - 1].to) {
                    add(x, "row " + std::to_string(x) + " duplicate successor " +
                               std::to_string(t.to));
                } else if (t.to < row[i - 1].to) {
                    add(x, "row " + std::to_string(x) + " not sorted ascending");
                }
            }
            sum += t.prob;
        }
        if (std::abs(sum - 1.0) > kRowSumTolerance) {
            std::ostringstream os;
            os << "row " << x << " not stochastic (sum " << sum << ")";
            add(x, os.str());
        }
    }
    return result;
}

namespace {

void check_state(const TransitionModel& model, StateId s, const char* what) {
    if (s >= model.state_count()) {
        throw std::invalid_argument(std::string(what) + " state id " +
                                    std::to_string(s) + " out of range (" +
                                    std::to_string(model.state_count()) + " states)");
    }
}

}  // namespace

LogProb transition_logprob(const TransitionModel& model, StateId x, StateId y) {
    check_state(model, x, "source");
    check_state(model, y, "target");
    for (const auto& t : model.row(x)) {
        if (t.to == y) return LogProb::from_log(t.log_prob);
    }
    return LogProb::impossible();
}

LogProb trajectory_logprob(const TransitionModel& model, StateId start,
                           std::span<const StateId> states) {
    check_state(model, start, "start");
    LogProb total = LogProb::certain();
    StateId cur = start;
    for (StateId next : states) {
        total += transition_logprob(model, cur, next);
        cur = next;
    }
    return total;
}

}  // namespace mlseq
