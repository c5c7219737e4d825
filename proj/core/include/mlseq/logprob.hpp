#pragma once

#include <cassert>
#include <cmath>
#include <compare>
#include <limits>

namespace mlseq {

/// A probability kept in the log domain. Products of probabilities become
/// sums, which is the only way chains of hundreds of sub-1 factors survive
/// double precision. Value is always <= 0; -infinity encodes probability 0
/// and is absorbing under combination.
class LogProb {
public:
    /// Probability 1.
    constexpr LogProb() = default;

    static constexpr LogProb certain() { return LogProb{}; }

    static constexpr LogProb impossible() {
        return LogProb(-std::numeric_limits<double>::infinity());
    }

    /// Wrap an already-computed log value.
    static constexpr LogProb from_log(double log_value) {
        assert(!(log_value > 1e-12));  // log of a probability
        return LogProb(log_value);
    }

    /// ln(p) for p in [0, 1]; p == 0 maps to -infinity.
    static LogProb from_prob(double p) {
        assert(p >= 0.0 && p <= 1.0);
        return LogProb(std::log(p));
    }

    double log() const { return value_; }
    double prob() const { return std::exp(value_); }
    bool is_impossible() const { return std::isinf(value_) && value_ < 0; }

    LogProb& operator+=(LogProb other) {
        value_ += other.value_;
        return *this;
    }
    friend LogProb operator+(LogProb a, LogProb b) { return a += b; }

    friend constexpr auto operator<=>(LogProb a, LogProb b) {
        return a.value_ <=> b.value_;
    }
    friend constexpr bool operator==(LogProb a, LogProb b) = default;

private:
    explicit constexpr LogProb(double v) : value_(v) {}

    double value_ = 0.0;
};

}  // namespace mlseq
