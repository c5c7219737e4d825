// mlseq: likely-sequence decoding for finite Markov chains.
//
// Subcommands:
//   gen     write a random fixed-out-degree chain file
//   decode  run one policy from one start state (chain file or provider)
//   exp     batch experiment over chains x states x policies, CSV output
//   oracle  brute-force most likely sequence (size guarded)
//   serve   answer successor queries for a chain file over stdin/stdout

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mlseq/chain_io.hpp"
#include "mlseq/experiment.hpp"
#include "mlseq/generate.hpp"
#include "mlseq/metrics.hpp"
#include "mlseq/policies.hpp"
#include "mlseq/provider.hpp"

namespace {

using namespace mlseq;

struct PolicyFlags {
    std::string policy = "greedy";
    std::uint32_t lookahead = 1;
    std::string truncate = "none";
    std::string width = "full";
    std::uint32_t level = 0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--policy", policy, "greedy | optimal | rollout")
            ->check(CLI::IsMember({"greedy", "optimal", "rollout"}));
        cmd->add_option("--lookahead", lookahead, "rollout lookahead depth (>= 1)");
        cmd->add_option("--truncate", truncate, "rollout tail cutoff M, or 'none'");
        cmd->add_option("--width", width, "candidate width W, or 'full'");
        cmd->add_option("--level", level, "rollout iteration level (0 = greedy base)");
    }

    Policy build() const {
        if (policy == "greedy") return GreedyPolicy{};
        if (policy == "optimal") return OptimalPolicy{};
        RolloutSpec spec;
        spec.lookahead = lookahead;
        if (truncate != "none") {
            spec.truncation = static_cast<std::uint32_t>(std::stoul(truncate));
        }
        if (width != "full") {
            spec.width = static_cast<std::uint32_t>(std::stoul(width));
        }
        spec.level = level;
        return spec;
    }
};

void print_counters(const CostCounters& counters) {
    std::cout << "comparisons " << counters.comparisons << "\n";
    std::cout << "base_policy_steps " << counters.base_policy_steps << "\n";
}

int cmd_gen(const GenSpec& spec, const std::string& out_path) {
    TransitionModel model = generate_chain(spec);
    auto comments = describe_gen_spec(spec);
    std::string text = encode_chain(model, comments);
    if (out_path == "-") {
        std::cout << text;
    } else {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) {
            std::cerr << "error: cannot write " << out_path << "\n";
            return 1;
        }
        out << text;
    }
    return 0;
}

int cmd_decode_chain(const std::string& chain_path, StateId start,
                     std::size_t horizon, const Policy& policy) {
    TransitionModel model = load_chain_file(chain_path);
    auto [traj, counters] = decode(model, start, horizon, policy);

    std::cout << "start " << traj.start << "\n";
    std::cout << "states";
    for (StateId s : traj.states) std::cout << ' ' << s;
    std::cout << "\n";
    std::cout << "logprob " << format_double(traj.log_prob.log()) << "\n";
    std::cout << "prob " << format_double(traj.log_prob.prob()) << "\n";
    if (horizon > 0) {
        std::cout << "geomean " << format_double(geo_mean(traj.log_prob, horizon))
                  << "\n";
    }
    print_counters(counters);
    return 0;
}

int cmd_decode_provider(const std::string& command, const std::string& start,
                        std::size_t horizon, const Policy& policy) {
    ProcessSource source(command);
    auto [traj, counters] = decode_source(source, start, horizon, policy);

    std::cout << "start " << traj.start << "\n";
    std::cout << "states";
    for (const auto& k : traj.keys) std::cout << ' ' << k;
    std::cout << "\n";
    std::cout << "logprob " << format_double(traj.log_prob.log()) << "\n";
    std::cout << "prob " << format_double(traj.log_prob.prob()) << "\n";
    if (horizon > 0) {
        std::cout << "geomean " << format_double(geo_mean(traj.log_prob, horizon))
                  << "\n";
    }
    print_counters(counters);
    return 0;
}

int cmd_oracle(const std::string& chain_path, StateId start, std::size_t horizon) {
    TransitionModel model = load_chain_file(chain_path);
    Trajectory traj = brute_force_optimal(model, start, horizon);
    std::cout << "start " << traj.start << "\n";
    std::cout << "states";
    for (StateId s : traj.states) std::cout << ' ' << s;
    std::cout << "\n";
    std::cout << "logprob " << format_double(traj.log_prob.log()) << "\n";
    std::cout << "prob " << format_double(traj.log_prob.prob()) << "\n";
    return 0;
}

int cmd_exp(const std::string& config_path, const std::string& out_dir,
            std::uint32_t threads) {
    ExperimentConfig config = load_experiment_config(config_path);
    if (!out_dir.empty()) config.output_dir = out_dir;
    if (config.output_dir.empty()) {
        std::cerr << "error: no output directory (give --out or 'out =' in config)\n";
        return 1;
    }
    if (threads != 0) config.threads = threads;

    ExperimentResult result = run_experiment(config);
    std::cout << "wrote " << result.per_state_csv.string() << "\n";
    std::cout << "wrote " << result.aggregate_csv.string() << "\n";
    std::cout << "wrote " << result.manifest.string() << "\n";
    for (const auto& [policy, avg] : result.report.aggregates) {
        std::cout << policy << " avg_geomean " << format_double(avg);
        auto it = result.report.recovery.find(policy);
        if (it != result.report.recovery.end()) {
            std::cout << " recovery ";
            if (it->second.has_value()) {
                std::cout << format_double(*it->second) << "%";
            } else {
                std::cout << "undefined";
            }
        }
        std::cout << "\n";
    }
    return 0;
}

// Successor server: one JSON request per line on stdin, one reply per line
// on stdout. This is the reference provider implementation; any generative
// model wrapper should behave the same way.
int cmd_serve(const std::string& chain_path) {
    TransitionModel model = load_chain_file(chain_path);
    InMemorySource source(model);

    std::string line;
    while (std::getline(std::cin, line)) {
        nlohmann::json reply;
        try {
            nlohmann::json request = nlohmann::json::parse(line, nullptr, false);
            if (request.is_discarded() || !request.is_object()) {
                reply = {{"error", "bad_request: not a JSON object"}};
            } else if (request.value("op", "") != "successors") {
                reply = {{"error", "bad_request: unknown op"}};
            } else if (!request.contains("state") || !request["state"].is_string()) {
                reply = {{"error", "bad_request: missing state"}};
            } else {
                SuccessorQuery query;
                query.state_key = request["state"].get<std::string>();
                const std::uint32_t top_k = request.value("topK", 0u);
                if (top_k > 0) query.top_k = top_k;
                SuccessorList list = source.successors(query);
                nlohmann::json entries = nlohmann::json::array();
                for (const auto& e : list.entries) {
                    entries.push_back({e.key, e.prob});
                }
                reply = {{"entries", std::move(entries)}};
            }
        } catch (const NotFoundError&) {
            reply = {{"error", "not_found"}};
        } catch (const std::exception& e) {
            reply = {{"error", std::string("bad_request: ") + e.what()}};
        }
        std::cout << reply.dump() << "\n" << std::flush;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"likely-sequence decoding for finite Markov chains"};
    app.require_subcommand(1);

    // gen
    GenSpec gen_spec;
    std::string gen_out = "-";
    auto* gen = app.add_subcommand("gen", "generate a random chain file");
    gen->add_option("--states", gen_spec.state_count, "number of states")->required();
    gen->add_option("--out-degree", gen_spec.out_degree, "successors per state (q)")
        ->required();
    gen->add_option("--seed", gen_spec.seed, "generator seed");
    gen->add_flag("--no-self-loops",
                  [&gen_spec](std::int64_t) { gen_spec.allow_self_loops = false; },
                  "exclude y == x from successor draws");
    gen->add_option("--out", gen_out, "output file ('-' = stdout)");

    // decode
    std::string decode_chain_path, decode_provider;
    StateId decode_start = 0;
    std::size_t decode_horizon = 0;
    std::string decode_start_key;
    PolicyFlags decode_flags;
    auto* dec = app.add_subcommand("decode", "decode one trajectory");
    auto* dec_chain = dec->add_option("--chain", decode_chain_path, "chain file");
    auto* dec_provider =
        dec->add_option("--provider", decode_provider,
                        "successor-server command run via /bin/sh -c");
    dec_chain->excludes(dec_provider);
    dec->add_option("--start", decode_start_key, "initial state")->required();
    dec->add_option("--horizon", decode_horizon, "steps to decode (N)")->required();
    decode_flags.attach(dec);

    // exp
    std::string exp_config, exp_out;
    std::uint32_t exp_threads = 0;
    auto* exp = app.add_subcommand("exp", "run a batch experiment");
    exp->add_option("--config", exp_config, "experiment config file")->required();
    exp->add_option("--out", exp_out, "output directory (overrides config)");
    exp->add_option("--threads", exp_threads, "worker threads (0 = hardware)");

    // oracle
    std::string oracle_chain;
    StateId oracle_start = 0;
    std::size_t oracle_horizon = 0;
    auto* orc = app.add_subcommand("oracle", "brute-force most likely sequence");
    orc->add_option("--chain", oracle_chain, "chain file")->required();
    orc->add_option("--start", oracle_start, "initial state")->required();
    orc->add_option("--horizon", oracle_horizon, "steps (N)")->required();

    // serve
    std::string serve_chain;
    auto* srv = app.add_subcommand("serve", "successor server over stdin/stdout");
    srv->add_option("--chain", serve_chain, "chain file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen(gen_spec, gen_out);
        if (dec->parsed()) {
            Policy policy = decode_flags.build();
            if (!decode_provider.empty()) {
                return cmd_decode_provider(decode_provider, decode_start_key,
                                           decode_horizon, policy);
            }
            if (decode_chain_path.empty()) {
                std::cerr << "error: decode needs --chain or --provider\n";
                return 1;
            }
            decode_start = static_cast<StateId>(std::stoul(decode_start_key));
            return cmd_decode_chain(decode_chain_path, decode_start, decode_horizon,
                                    policy);
        }
        if (exp->parsed()) return cmd_exp(exp_config, exp_out, exp_threads);
        if (orc->parsed()) return cmd_oracle(oracle_chain, oracle_start, oracle_horizon);
        if (srv->parsed()) return cmd_serve(serve_chain);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
