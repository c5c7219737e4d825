#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mlseq/chain.hpp"
#include "mlseq/errors.hpp"
#include "mlseq/policies.hpp"

namespace mlseq {

/// Request for the most probable successors of a state. State keys are
/// opaque strings; for in-memory chains they are decimal state ids.
struct SuccessorQuery {
    std::string state_key;
    std::optional<std::uint32_t> top_k;  // nullopt = all
};

struct SuccessorEntry {
    std::string key;
    double prob = 0.0;
};

/// Successors in canonical order: descending probability, ties by ascending
/// key (numeric-aware, so "2" sorts before "10"). A topK slice need not sum
/// to 1.
struct SuccessorList {
    std::vector<SuccessorEntry> entries;
};

/// What a source can support. Enumerable sources expose their full state
/// space, so exact DP is available; generative sources only answer
/// next-state queries and support the greedy/rollout families.
enum class SourceTier { Enumerable, Generative };

/// Abstraction over next-state probability sources: in-memory chains and
/// external generative models answer the same query.
class SuccessorSource {
public:
    virtual ~SuccessorSource() = default;

    /// Throws NotFoundError for unknown keys, ProtocolError for contract
    /// violations by external sources.
    virtual SuccessorList successors(const SuccessorQuery& query) = 0;

    virtual SourceTier tier() const = 0;

    /// Non-null only for enumerable sources; grants access to the full chain
    /// for DP-tier operations. Keys of such a source are decimal state ids.
    virtual const TransitionModel* enumerable_model() const { return nullptr; }
};

SuccessorList query_successors(SuccessorSource& source, const SuccessorQuery& query);

/// Adapter over a TransitionModel. Keys are decimal state ids; replies agree
/// exactly with the model's rows.
class InMemorySource final : public SuccessorSource {
public:
    explicit InMemorySource(const TransitionModel& model) : model_(&model) {}

    SuccessorList successors(const SuccessorQuery& query) override;
    SourceTier tier() const override { return SourceTier::Enumerable; }
    const TransitionModel* enumerable_model() const override { return model_; }

    const TransitionModel& model() const { return *model_; }

private:
    const TransitionModel* model_;
};

/// Child process speaking the line protocol over stdin/stdout:
///   request  {"op":"successors","state":"<key>","topK":<n>}   (0 = all)
///   reply    {"entries":[["<key>",<p>],...]}
///   error    {"error":"not_found"} or {"error":"<reason>"}
/// One request/reply per line, UTF-8. Queries are serialized per connection.
class ProcessSource final : public SuccessorSource {
public:
    /// Runs `command` via /bin/sh -c. Throws ProtocolError if it cannot be
    /// spawned.
    explicit ProcessSource(const std::string& command);
    ~ProcessSource() override;

    ProcessSource(const ProcessSource&) = delete;
    ProcessSource& operator=(const ProcessSource&) = delete;

    SuccessorList successors(const SuccessorQuery& query) override;
    SourceTier tier() const override { return SourceTier::Generative; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Trajectory over opaque state keys.
struct SourceTrajectory {
    std::string start;
    std::vector<std::string> keys;
    LogProb log_prob;
};

/// Carries how far a decode got before the source broke the protocol.
class PartialDecodeError : public ProtocolError {
public:
    PartialDecodeError(const std::string& message, SourceTrajectory partial)
        : ProtocolError(message), partial_(std::move(partial)) {}

    const SourceTrajectory& partial() const { return partial_; }

private:
    SourceTrajectory partial_;
};

/// Decode through the provider abstraction. Greedy and the rollout family
/// work on any tier and, for in-memory chains, produce trajectories
/// byte-identical to decoding against the model directly (with w <= topK).
/// The optimal policy requires an enumerable source; on a generative source
/// it throws CapabilityError.
std::pair<SourceTrajectory, CostCounters> decode_source(SuccessorSource& source,
                                                        const std::string& start_key,
                                                        std::size_t horizon,
                                                        const Policy& policy);

/// Ordering used for successor keys: numeric comparison when both keys are
/// plain decimal integers, lexicographic otherwise.
bool natural_key_less(const std::string& a, const std::string& b);

}  // namespace mlseq
