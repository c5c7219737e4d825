#include "mlseq/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mlseq {

double geo_mean(LogProb log_prob, std::size_t horizon) {
    if (horizon == 0) throw std::invalid_argument("horizon must be >= 1");
    if (log_prob.is_impossible()) return 0.0;
    return std::exp(log_prob.log() / static_cast<double>(horizon));
}

double avg_geo_mean(std::span<const GeoEntry> entries) {
    if (entries.empty()) throw std::invalid_argument("no entries to average");
    const std::size_t n = entries.front().horizon;
    double sum = 0.0;
    for (const auto& e : entries) {
        if (e.horizon != n) {
            throw std::invalid_argument("entries mix different horizons");
        }
        sum += geo_mean(e.log_prob, e.horizon);
    }
    return sum / static_cast<double>(entries.size());
}

std::optional<double> pct_recovery(double rollout_avg, double greedy_avg,
                                   double optimal_avg) {
    const double denom = optimal_avg - greedy_avg;
    if (denom < kRecoveryDenominatorFloor) return std::nullopt;
    return 100.0 * (rollout_avg - greedy_avg) / denom;
}

RecoveryReport build_recovery_report(std::vector<RecoveryRow> rows,
                                     const std::string& greedy_label,
                                     const std::string& optimal_label) {
    RecoveryReport report;
    report.per_state = std::move(rows);
    std::sort(report.per_state.begin(), report.per_state.end(),
              [](const RecoveryRow& a, const RecoveryRow& b) {
                  if (a.chain != b.chain) return a.chain < b.chain;
                  if (a.state != b.state) return a.state < b.state;
                  return a.policy < b.policy;
              });

    std::map<std::string, double> sums;
    std::map<std::string, std::size_t> counts;
    for (const auto& row : report.per_state) {
        sums[row.policy] += row.geo_mean;
        counts[row.policy] += 1;
    }
    for (const auto& [policy, sum] : sums) {
        report.aggregates[policy] = sum / static_cast<double>(counts[policy]);
    }

    const auto greedy_it = report.aggregates.find(greedy_label);
    const auto optimal_it = report.aggregates.find(optimal_label);
    if (greedy_it != report.aggregates.end() &&
        optimal_it != report.aggregates.end()) {
        for (const auto& [policy, avg] : report.aggregates) {
            report.recovery[policy] =
                pct_recovery(avg, greedy_it->second, optimal_it->second);
        }
    }
    return report;
}

}  // namespace mlseq
