#include "mlseq/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "mlseq/chain_io.hpp"
#include "mlseq/parallel.hpp"

namespace mlseq {

namespace {

std::string trim(std::string_view s) {
    std::size_t a = 0, b = s.size();
    while (a < b && (s[a] == ' ' || s[a] == '\t')) ++a;
    while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) --b;
    return std::string(s.substr(a, b - a));
}

std::uint64_t parse_u64(const std::string& value, const std::string& key) {
    std::uint64_t out = 0;
    const char* first = value.data();
    const char* last = first + value.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc{} || ptr != last) {
        throw std::invalid_argument("config: bad integer for '" + key + "': " + value);
    }
    return out;
}

bool parse_bool(const std::string& value, const std::string& key) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw std::invalid_argument("config: bad boolean for '" + key + "': " + value);
}

bool valid_label(const std::string& s) {
    if (s.empty()) return false;
    return std::all_of(s.begin(), s.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '_' || c == '-' || c == '.';
    });
}

}  // namespace

std::string policy_to_string(const Policy& policy) {
    return std::visit(
        [](const auto& p) -> std::string {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, GreedyPolicy>) {
                return "greedy";
            } else if constexpr (std::is_same_v<T, OptimalPolicy>) {
                return "optimal";
            } else {
                std::string out = "rollout l=" + std::to_string(p.lookahead);
                out += " m=";
                out += p.truncation ? std::to_string(*p.truncation) : "none";
                out += " w=";
                out += p.width ? std::to_string(*p.width) : "full";
                out += " level=" + std::to_string(p.level);
                return out;
            }
        },
        policy);
}

std::string default_policy_label(const Policy& policy) {
    return std::visit(
        [](const auto& p) -> std::string {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, GreedyPolicy>) {
                return "greedy";
            } else if constexpr (std::is_same_v<T, OptimalPolicy>) {
                return "optimal";
            } else {
                std::string out = "rollout_l" + std::to_string(p.lookahead);
                if (p.truncation) out += "_m" + std::to_string(*p.truncation);
                if (p.width) out += "_w" + std::to_string(*p.width);
                if (p.level > 0) out += "_lv" + std::to_string(p.level);
                return out;
            }
        },
        policy);
}

PolicyItem parse_policy_item(std::string_view text) {
    std::string body = trim(text);
    std::string label;

    if (auto colon = body.find(':'); colon != std::string::npos) {
        std::string head = trim(body.substr(0, colon));
        if (valid_label(head)) {
            label = head;
            body = trim(body.substr(colon + 1));
        }
    }

    std::istringstream in(body);
    std::string kind;
    in >> kind;

    PolicyItem item;
    if (kind == "greedy") {
        item.policy = GreedyPolicy{};
    } else if (kind == "optimal") {
        item.policy = OptimalPolicy{};
    } else if (kind == "rollout") {
        RolloutSpec spec;
        std::string token;
        while (in >> token) {
            auto eq = token.find('=');
            if (eq == std::string::npos) {
                throw std::invalid_argument("policy: expected key=value, got '" +
                                            token + "'");
            }
            std::string key = token.substr(0, eq);
            std::string value = token.substr(eq + 1);
            if (key == "l" || key == "lookahead") {
                spec.lookahead = static_cast<std::uint32_t>(parse_u64(value, key));
            } else if (key == "m" || key == "truncate") {
                if (value == "none") {
                    spec.truncation.reset();
                } else {
                    spec.truncation = static_cast<std::uint32_t>(parse_u64(value, key));
                }
            } else if (key == "w" || key == "width") {
                if (value == "full") {
                    spec.width.reset();
                } else {
                    spec.width = static_cast<std::uint32_t>(parse_u64(value, key));
                }
            } else if (key == "level") {
                spec.level = static_cast<std::uint32_t>(parse_u64(value, key));
            } else {
                throw std::invalid_argument("policy: unknown option '" + key + "'");
            }
        }
        if (spec.lookahead < 1) throw std::invalid_argument("policy: lookahead must be >= 1");
        if (spec.truncation && *spec.truncation < 1) {
            throw std::invalid_argument("policy: truncation must be >= 1 or none");
        }
        if (spec.width && *spec.width < 1) {
            throw std::invalid_argument("policy: width must be >= 1 or full");
        }
        item.policy = spec;
    } else {
        throw std::invalid_argument("policy: unknown kind '" + kind + "'");
    }

    std::string extra;
    if (!std::holds_alternative<RolloutSpec>(item.policy) && in >> extra) {
        throw std::invalid_argument("policy: unexpected token '" + extra + "'");
    }

    item.label = label.empty() ? default_policy_label(item.policy) : label;
    return item;
}

ExperimentConfig parse_experiment_config(std::string_view text) {
    ExperimentConfig config;
    std::size_t pos = 0, line_no = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string line = trim(text.substr(pos, nl - pos));
        pos = nl + 1;
        ++line_no;
        if (line.empty() || line.front() == '#') continue;

        auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": expected 'key = value'");
        }
        std::string key = trim(std::string_view(line).substr(0, eq));
        std::string value = trim(std::string_view(line).substr(eq + 1));

        if (key == "chains") {
            config.chain_count = static_cast<std::uint32_t>(parse_u64(value, key));
        } else if (key == "states") {
            config.states = static_cast<std::uint32_t>(parse_u64(value, key));
        } else if (key == "out_degree") {
            config.out_degree = static_cast<std::uint32_t>(parse_u64(value, key));
        } else if (key == "seed") {
            config.seed_base = parse_u64(value, key);
        } else if (key == "self_loops") {
            config.allow_self_loops = parse_bool(value, key);
        } else if (key == "chain_seed") {
            config.chain_seeds.push_back(parse_u64(value, key));
        } else if (key == "chain_file") {
            config.chain_files.emplace_back(value);
        } else if (key == "horizon") {
            config.horizon = static_cast<std::uint32_t>(parse_u64(value, key));
        } else if (key == "policy") {
            config.policies.push_back(parse_policy_item(value));
        } else if (key == "recovery") {
            config.recovery = parse_bool(value, key);
        } else if (key == "out") {
            config.output_dir = value;
        } else if (key == "threads") {
            config.threads = static_cast<std::uint32_t>(parse_u64(value, key));
        } else if (key == "write_chains") {
            config.write_chains = parse_bool(value, key);
        } else {
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": unknown key '" + key + "'");
        }
    }
    return config;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open config: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_experiment_config(buf.str());
}

void ExperimentConfig::resolve() {
    if (horizon == 0) throw std::invalid_argument("config: horizon must be >= 1");
    if (policies.empty()) throw std::invalid_argument("config: no policies given");

    for (std::size_t i = 0; i < policies.size(); ++i) {
        for (std::size_t j = i + 1; j < policies.size(); ++j) {
            if (policies[i].label == policies[j].label) {
                throw std::invalid_argument("config: duplicate policy label '" +
                                            policies[i].label + "'");
            }
        }
    }

    if (chain_files.empty()) {
        if (!chain_seeds.empty()) {
            chain_count = static_cast<std::uint32_t>(chain_seeds.size());
        }
        if (chain_count == 0) {
            throw std::invalid_argument("config: need chains > 0 or chain_file entries");
        }
        if (states == 0 || out_degree == 0) {
            throw std::invalid_argument("config: generated chains need states and out_degree");
        }
        if (chain_seeds.empty()) {
            chain_seeds.reserve(chain_count);
            for (std::uint32_t i = 0; i < chain_count; ++i) {
                chain_seeds.push_back(seed_base + i);
            }
        }
    } else {
        if (chain_count != 0 && chain_count != chain_files.size()) {
            throw std::invalid_argument("config: chains count conflicts with chain_file list");
        }
        chain_count = static_cast<std::uint32_t>(chain_files.size());
        if (!chain_seeds.empty()) {
            throw std::invalid_argument("config: chain_seed and chain_file are exclusive");
        }
    }

    if (recovery) {
        bool has_greedy = false, has_optimal = false;
        for (const auto& p : policies) {
            has_greedy |= std::holds_alternative<GreedyPolicy>(p.policy);
            has_optimal |= std::holds_alternative<OptimalPolicy>(p.policy);
        }
        if (!has_optimal) {
            throw std::invalid_argument(
                "config: recovery requested but no optimal policy configured");
        }
        if (!has_greedy) {
            throw std::invalid_argument(
                "config: recovery requested but no greedy policy configured");
        }
    }
}

std::string render_manifest(const ExperimentConfig& resolved,
                            std::span<const PolicyTiming> timings) {
    std::string out;
    out += "# mlseq experiment manifest\n";
    out += "# reload with: mlseq exp --config <this file> --out <dir>\n";
    out += "horizon = " + std::to_string(resolved.horizon) + "\n";
    if (resolved.chain_files.empty()) {
        out += "states = " + std::to_string(resolved.states) + "\n";
        out += "out_degree = " + std::to_string(resolved.out_degree) + "\n";
        out += std::string("self_loops = ") +
               (resolved.allow_self_loops ? "true" : "false") + "\n";
        for (std::uint64_t s : resolved.chain_seeds) {
            out += "chain_seed = " + std::to_string(s) + "\n";
        }
    } else {
        for (const auto& f : resolved.chain_files) {
            out += "chain_file = " + f.string() + "\n";
        }
    }
    for (const auto& p : resolved.policies) {
        out += "policy = " + p.label + ": " + policy_to_string(p.policy) + "\n";
    }
    out += std::string("recovery = ") + (resolved.recovery ? "true" : "false") + "\n";
    out += std::string("write_chains = ") +
           (resolved.write_chains ? "true" : "false") + "\n";
    out += "# threads are a runtime choice; outputs do not depend on them\n";
    for (const auto& t : timings) {
        out += "# timing " + t.label + ": " + format_double(t.wall_ms) + " ms\n";
    }
    return out;
}

std::string per_state_csv_text(const RecoveryReport& report) {
    std::string out = "chain,state,policy,logprob,geomean\n";
    for (const auto& row : report.per_state) {
        out += std::to_string(row.chain);
        out += ',';
        out += std::to_string(row.state);
        out += ',';
        out += row.policy;
        out += ',';
        out += format_double(row.log_prob.log());
        out += ',';
        out += format_double(row.geo_mean);
        out += '\n';
    }
    return out;
}

std::string aggregate_csv_text(const RecoveryReport& report) {
    std::string out = "policy,avg_geomean,recovery_pct\n";
    for (const auto& [policy, avg] : report.aggregates) {
        out += policy;
        out += ',';
        out += format_double(avg);
        out += ',';
        auto it = report.recovery.find(policy);
        if (it != report.recovery.end() && it->second.has_value()) {
            out += format_double(*it->second);
        } else {
            out += "undefined";
        }
        out += '\n';
    }
    return out;
}

namespace {

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("short write to " + path.string());
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config_in) {
    ExperimentConfig config = config_in;
    config.resolve();

    std::filesystem::create_directories(config.output_dir);

    std::vector<TransitionModel> chains;
    chains.reserve(config.chain_count);
    if (config.chain_files.empty()) {
        for (std::uint32_t i = 0; i < config.chain_count; ++i) {
            GenSpec spec{config.states, config.out_degree, config.chain_seeds[i],
                         config.allow_self_loops};
            chains.push_back(generate_chain(spec));
        }
    } else {
        for (const auto& path : config.chain_files) {
            chains.push_back(load_chain_file(path));
        }
    }

    if (config.write_chains) {
        for (std::uint32_t i = 0; i < chains.size(); ++i) {
            char name[32];
            std::snprintf(name, sizeof(name), "chain_%04u.mc", i);
            save_chain_file(config.output_dir / name, chains[i]);
        }
    }

    // unique_ptr because the engine's lazy-table guard makes it immovable
    std::vector<std::unique_ptr<DecodeEngine>> engines;
    engines.reserve(chains.size());
    for (const auto& chain : chains) {
        engines.push_back(std::make_unique<DecodeEngine>(chain, config.horizon));
    }

    // One slot per (chain, state); states differ per chain when loading files.
    std::vector<std::size_t> state_offset(chains.size() + 1, 0);
    for (std::size_t c = 0; c < chains.size(); ++c) {
        state_offset[c + 1] = state_offset[c] + chains[c].state_count();
    }
    const std::size_t decode_count = state_offset.back();

    std::vector<RecoveryRow> rows;
    rows.reserve(decode_count * config.policies.size());
    std::vector<PolicyTiming> timings;

    for (const auto& item : config.policies) {
        std::vector<RecoveryRow> slot(decode_count);
        const auto t0 = std::chrono::steady_clock::now();
        parallel_for(decode_count, config.threads, [&](std::size_t i) {
            const std::size_t c =
                static_cast<std::size_t>(
                    std::upper_bound(state_offset.begin(), state_offset.end(), i) -
                    state_offset.begin()) -
                1;
            const StateId x0 = static_cast<StateId>(i - state_offset[c]);
            Trajectory traj = engines[c]->run(x0, item.policy);
            RecoveryRow& row = slot[i];
            row.chain = static_cast<std::uint32_t>(c);
            row.state = x0;
            row.policy = item.label;
            row.log_prob = traj.log_prob;
            row.geo_mean = geo_mean(traj.log_prob, config.horizon);
        });
        const auto t1 = std::chrono::steady_clock::now();
        timings.push_back(PolicyTiming{
            item.label,
            std::chrono::duration<double, std::milli>(t1 - t0).count()});
        rows.insert(rows.end(), std::make_move_iterator(slot.begin()),
                    std::make_move_iterator(slot.end()));
    }

    std::string greedy_label = "greedy", optimal_label = "optimal";
    for (const auto& item : config.policies) {
        if (std::holds_alternative<GreedyPolicy>(item.policy)) greedy_label = item.label;
        if (std::holds_alternative<OptimalPolicy>(item.policy)) optimal_label = item.label;
    }

    ExperimentResult result;
    result.report = build_recovery_report(std::move(rows), greedy_label, optimal_label);
    result.timings = std::move(timings);
    result.per_state_csv = config.output_dir / "per_state.csv";
    result.aggregate_csv = config.output_dir / "aggregate.csv";
    result.manifest = config.output_dir / "manifest.txt";

    write_text_file(result.per_state_csv, per_state_csv_text(result.report));
    write_text_file(result.aggregate_csv, aggregate_csv_text(result.report));
    write_text_file(result.manifest, render_manifest(config, result.timings));
    return result;
}

}  // namespace mlseq
