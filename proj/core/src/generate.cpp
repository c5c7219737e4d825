#include "mlseq/generate.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <stdexcept>

namespace mlseq {

namespace {

// splitmix64 finalizer; decorrelates per-row seeds derived from (seed, row).
std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Uniform in (0,1): 53-bit mantissa draw, redrawing the (measure-zero but
// representable) exact 0 so every stored probability is strictly positive.
double uniform_open01(std::mt19937_64& rng) {
    for (;;) {
        double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        if (u > 0.0) return u;
    }
}

// Unbiased integer in [0, bound) by rejection.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    for (;;) {
        std::uint64_t v = rng();
        if (v < limit) return v % bound;
    }
}

}  // namespace

TransitionModel generate_chain(const GenSpec& spec) {
    const std::uint32_t n = spec.state_count;
    const std::uint32_t q = spec.out_degree;
    if (n == 0) throw std::invalid_argument("state_count must be positive");
    const std::uint32_t pool = spec.allow_self_loops ? n : n - 1;
    if (q == 0 || q > pool) {
        throw std::invalid_argument(
            "out_degree must be in [1, " + std::to_string(pool) + "], got " +
            std::to_string(q));
    }

    std::vector<std::vector<std::pair<StateId, double>>> rows(n);
    std::vector<StateId> candidates(pool);

    for (StateId x = 0; x < n; ++x) {
        // Independent stream per (seed, row): rows could be generated in any
        // order, or in parallel, with identical output.
        std::mt19937_64 rng(mix64(spec.seed ^ mix64(x + 1)));

        candidates.resize(pool);
        StateId fill = 0;
        for (StateId s = 0; s < n; ++s) {
            if (!spec.allow_self_loops && s == x) continue;
            candidates[fill++] = s;
        }

        // Partial Fisher-Yates: only the first q slots are settled.
        auto& row = rows[x];
        row.reserve(q);
        for (std::uint32_t i = 0; i < q; ++i) {
            std::uint64_t j = i + uniform_below(rng, pool - i);
            std::swap(candidates[i], candidates[j]);
        }
        std::sort(candidates.begin(), candidates.begin() + q);

        double sum = 0.0;
        std::vector<double> weights(q);
        for (std::uint32_t i = 0; i < q; ++i) {
            weights[i] = uniform_open01(rng);
            sum += weights[i];
        }
        for (std::uint32_t i = 0; i < q; ++i) {
            row.emplace_back(candidates[i], weights[i] / sum);
        }
    }
    return TransitionModel::from_rows(std::move(rows));
}

std::vector<std::string> describe_gen_spec(const GenSpec& spec) {
    std::vector<std::string> lines;
    lines.push_back("generated: states=" + std::to_string(spec.state_count) +
                    " out_degree=" + std::to_string(spec.out_degree) +
                    " seed=" + std::to_string(spec.seed) +
                    " self_loops=" + (spec.allow_self_loops ? "true" : "false"));
    lines.push_back("weights: iid uniform(0,1) draws normalized per row");
    lines.push_back("rng: mt19937_64 seeded per row via splitmix64(seed, row)");
    return lines;
}

}  // namespace mlseq
