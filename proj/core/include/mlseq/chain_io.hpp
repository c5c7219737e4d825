#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "mlseq/chain.hpp"
#include "mlseq/errors.hpp"

namespace mlseq {

/// Render a double with the shortest decimal form that parses back to the
/// identical bit pattern (at most 17 significant digits). Used everywhere a
/// probability or score is written to a file, so round-trips are bit-exact.
std::string format_double(double value);

/// Canonical chain file text:
///   MCHAIN 1
///   states <n>
///   <x> <y> <p>        one line per edge, grouped by x asc, then y asc
/// Lines starting with '#' are comments.
std::string encode_chain(const TransitionModel& model);

/// Same, with comment lines (without the leading "#") inserted after the
/// header. Used by the generator to record how a chain was produced.
std::string encode_chain(const TransitionModel& model,
                         std::span<const std::string> header_comments);

/// Parse a chain document. Strict: canonical edge order is required, rows
/// must be stochastic within kRowSumTolerance and are not renormalized.
/// Throws ParseError naming the offending 1-based line.
TransitionModel decode_chain(std::string_view text);

TransitionModel load_chain_file(const std::filesystem::path& path);
void save_chain_file(const std::filesystem::path& path, const TransitionModel& model);

}  // namespace mlseq
