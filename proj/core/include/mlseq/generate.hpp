#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mlseq/chain.hpp"

namespace mlseq {

/// Recipe for a random chain with fixed out-degree.
struct GenSpec {
    std::uint32_t state_count = 0;
    std::uint32_t out_degree = 0;  // q; branching factor = 100*q/state_count %
    std::uint64_t seed = 0;
    bool allow_self_loops = true;

    double branching_percent() const {
        return 100.0 * static_cast<double>(out_degree) /
               static_cast<double>(state_count);
    }
};

/// Generate a chain where every row has exactly q distinct successors drawn
/// uniformly without replacement, with probabilities obtained by normalizing
/// q independent Uniform(0,1) draws. Deterministic in the spec: the per-row
/// stream is derived from (seed, row) via splitmix64 feeding mt19937_64, so
/// rows are independent of generation order.
///
/// Throws std::invalid_argument if q == 0 or q exceeds the available
/// successor pool (state_count, or state_count - 1 without self-loops).
TransitionModel generate_chain(const GenSpec& spec);

/// Deterministic comment lines describing the spec, suitable for
/// encode_chain's header_comments.
std::vector<std::string> describe_gen_spec(const GenSpec& spec);

}  // namespace mlseq
