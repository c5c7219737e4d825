#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mlseq/generate.hpp"
#include "mlseq/metrics.hpp"
#include "mlseq/policies.hpp"

namespace mlseq {

struct PolicyItem {
    std::string label;
    Policy policy;
};

/// A batch run: a set of chains (generated from seeds or loaded from files),
/// decoded under every configured policy from every initial state.
struct ExperimentConfig {
    // Generated chains: count + template. chain_seeds, when non-empty,
    // overrides derivation from seed_base (seed_base + index).
    std::uint32_t chain_count = 0;
    std::uint32_t states = 0;
    std::uint32_t out_degree = 0;
    std::uint64_t seed_base = 0;
    bool allow_self_loops = true;
    std::vector<std::uint64_t> chain_seeds;

    // Alternative: explicit chain files.
    std::vector<std::filesystem::path> chain_files;

    std::uint32_t horizon = 0;
    std::vector<PolicyItem> policies;
    bool recovery = false;  // require greedy+optimal baselines for recovery output
    std::filesystem::path output_dir;
    std::uint32_t threads = 0;  // 0 = hardware concurrency
    bool write_chains = false;

    /// Fill chain_seeds from seed_base when generating; validate counts,
    /// horizon, policies, and the recovery contract. Throws
    /// std::invalid_argument with a description on any problem.
    void resolve();
};

/// Parse the flat key-value config format (also produced as the manifest).
/// Keys: chains, states, out_degree, seed, self_loops, chain_seed (repeated),
/// chain_file (repeated), horizon, policy (repeated), recovery, out, threads,
/// write_chains. '#' starts a comment.
ExperimentConfig parse_experiment_config(std::string_view text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Spell a policy as config text, e.g. "rollout l=2 m=10 w=5 level=1".
std::string policy_to_string(const Policy& policy);
/// Default CSV-safe label, e.g. "rollout_l2_m10_w5_lv1".
std::string default_policy_label(const Policy& policy);
/// Parse "greedy" | "optimal" | "rollout [l=..] [m=..|none] [w=..|full] [level=..]",
/// with an optional "label:" prefix.
PolicyItem parse_policy_item(std::string_view text);

struct PolicyTiming {
    std::string label;
    double wall_ms = 0.0;
};

struct ExperimentResult {
    RecoveryReport report;
    std::vector<PolicyTiming> timings;
    std::filesystem::path per_state_csv;
    std::filesystem::path aggregate_csv;
    std::filesystem::path manifest;
};

/// Decode every (chain, state, policy) combination, write per_state.csv,
/// aggregate.csv, and manifest.txt under config.output_dir, and return the
/// report. Decodes run in a work pool; rows are sorted by (chain, state,
/// policy label) before writing, so output bytes are independent of the
/// parallelism level. Rerunning the manifest reproduces the CSVs
/// byte-for-byte.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// CSV renderings (also written by run_experiment).
std::string per_state_csv_text(const RecoveryReport& report);
std::string aggregate_csv_text(const RecoveryReport& report);

/// The manifest: a reloadable config echo (explicit per-chain seeds) plus
/// timing comments.
std::string render_manifest(const ExperimentConfig& resolved,
                            std::span<const PolicyTiming> timings);

}  // namespace mlseq
