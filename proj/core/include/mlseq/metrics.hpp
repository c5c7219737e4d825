#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mlseq/chain.hpp"
#include "mlseq/logprob.hpp"

namespace mlseq {

/// Per-step average transition probability of an N-step trajectory:
/// exp(logProb / N). 0 for an impossible trajectory. Strictly monotone in
/// logProb for fixed N, so trajectory comparisons survive the transform.
double geo_mean(LogProb log_prob, std::size_t horizon);

struct GeoEntry {
    LogProb log_prob;
    std::size_t horizon = 0;
};

/// Arithmetic mean of per-trajectory geometric means. All entries must share
/// one horizon; throws std::invalid_argument on an empty list or mixed
/// horizons.
double avg_geo_mean(std::span<const GeoEntry> entries);

/// Recovery percentages below this denominator are reported as undefined
/// rather than clamped.
inline constexpr double kRecoveryDenominatorFloor = 1e-12;

/// 100 * (rollout - greedy) / (optimal - greedy), all in averaged
/// geometric-mean units; nullopt when greedy is already optimal to within
/// kRecoveryDenominatorFloor.
std::optional<double> pct_recovery(double rollout_avg, double greedy_avg,
                                   double optimal_avg);

struct RecoveryRow {
    std::uint32_t chain = 0;
    StateId state = 0;
    std::string policy;
    LogProb log_prob;
    double geo_mean = 0.0;
};

/// Geometric-mean summaries per (chain, state, policy), the cross-chain
/// averages, and the percentage-recovery score per policy.
struct RecoveryReport {
    std::vector<RecoveryRow> per_state;
    std::map<std::string, double> aggregates;  // policy -> avg geo mean
    std::map<std::string, std::optional<double>> recovery;  // vs greedy/optimal
};

/// Aggregate per-state rows into a report. Recovery percentages are filled
/// only when both baseline labels are present among the rows.
RecoveryReport build_recovery_report(std::vector<RecoveryRow> rows,
                                     const std::string& greedy_label = "greedy",
                                     const std::string& optimal_label = "optimal");

}  // namespace mlseq
