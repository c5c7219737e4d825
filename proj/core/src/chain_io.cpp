#include "mlseq/chain_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <system_error>

namespace mlseq {

std::string format_double(double value) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    (void)ec;
    return std::string(buf, end);
}

namespace {

void append_edges(std::string& out, const TransitionModel& model) {
    for (StateId x = 0; x < model.state_count(); ++x) {
        for (const auto& t : model.row(x)) {
            out += std::to_string(x);
            out += ' ';
            out += std::to_string(t.to);
            out += ' ';
            out += format_double(t.prob);
            out += '\n';
        }
    }
}

}  // namespace

std::string encode_chain(const TransitionModel& model) {
    return encode_chain(model, {});
}

std::string encode_chain(const TransitionModel& model,
                         std::span<const std::string> header_comments) {
    std::string out = "MCHAIN 1\n";
    out += "states " + std::to_string(model.state_count()) + "\n";
    for (const auto& c : header_comments) {
        out += "# ";
        out += c;
        out += '\n';
    }
    append_edges(out, model);
    return out;
}

namespace {

struct LineReader {
    std::string_view text;
    std::size_t pos = 0;
    std::size_t line_no = 0;

    // Returns false at end of input. Strips one trailing '\r' for tolerance.
    bool next(std::string_view& line) {
        if (pos >= text.size()) return false;
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        return true;
    }
};

bool is_skippable(std::string_view line) {
    return line.empty() || line.front() == '#';
}

std::uint64_t parse_uint(std::string_view token, const char* what,
                         std::size_t line_no) {
    std::uint64_t value = 0;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) {
        throw ParseError(std::string("bad ") + what + " '" + std::string(token) + "'",
                         line_no);
    }
    return value;
}

double parse_prob(std::string_view token, std::size_t line_no) {
    double value = 0.0;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || !std::isfinite(value)) {
        throw ParseError("bad probability '" + std::string(token) + "'", line_no);
    }
    if (!(value > 0.0) || value > 1.0) {
        throw ParseError("probability out of range (0,1]", line_no);
    }
    return value;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
        if (j > i) fields.push_back(line.substr(i, j - i));
        i = j;
    }
    return fields;
}

}  // namespace

TransitionModel decode_chain(std::string_view text) {
    LineReader reader{text};
    std::string_view line;

    if (!reader.next(line) || line != "MCHAIN 1") {
        throw ParseError("malformed header, expected 'MCHAIN 1'",
                         reader.line_no == 0 ? 1 : reader.line_no);
    }
    if (!reader.next(line)) throw ParseError("missing 'states' line", reader.line_no + 1);

    auto header = split_fields(line);
    if (header.size() != 2 || header[0] != "states") {
        throw ParseError("malformed header, expected 'states <n>'", reader.line_no);
    }
    std::uint64_t n = parse_uint(header[1], "state count", reader.line_no);
    if (n == 0 || n > (std::uint64_t{1} << 31)) {
        throw ParseError("state count out of range", reader.line_no);
    }
    const StateId state_count = static_cast<StateId>(n);

    std::vector<std::vector<std::pair<StateId, double>>> rows(state_count);
    bool any_edge = false;
    StateId last_x = 0, last_y = 0;  // canonical-order enforcement
    std::vector<double> sums(state_count, 0.0);
    std::vector<std::size_t> row_last_line(state_count, 0);

    auto close_row = [&](StateId x) {
        if (rows[x].empty()) return;
        if (std::abs(sums[x] - 1.0) > kRowSumTolerance) {
            std::ostringstream os;
            os << "row " << x << " not stochastic (sum " << sums[x] << ")";
            throw ParseError(os.str(), row_last_line[x]);
        }
    };

    while (reader.next(line)) {
        if (is_skippable(line)) continue;
        auto fields = split_fields(line);
        if (fields.size() != 3) {
            throw ParseError("expected edge '<x> <y> <p>'", reader.line_no);
        }
        std::uint64_t xv = parse_uint(fields[0], "state id", reader.line_no);
        std::uint64_t yv = parse_uint(fields[1], "state id", reader.line_no);
        if (xv >= state_count || yv >= state_count) {
            throw ParseError("state id out of range", reader.line_no);
        }
        double p = parse_prob(fields[2], reader.line_no);
        StateId x = static_cast<StateId>(xv);
        StateId y = static_cast<StateId>(yv);
        if (any_edge) {
            if (x < last_x || (x == last_x && y < last_y)) {
                throw ParseError("edges out of canonical order", reader.line_no);
            }
            if (x == last_x && y == last_y) {
                throw ParseError("duplicate edge", reader.line_no);
            }
            if (x != last_x) close_row(last_x);
        }
        rows[x].emplace_back(y, p);
        sums[x] += p;
        row_last_line[x] = reader.line_no;
        last_x = x;
        last_y = y;
        any_edge = true;
    }
    if (any_edge) close_row(last_x);

    for (StateId x = 0; x < state_count; ++x) {
        if (rows[x].empty()) {
            throw ParseError("row " + std::to_string(x) + " has no edges",
                             reader.line_no);
        }
    }
    return TransitionModel::from_rows(std::move(rows));
}

TransitionModel load_chain_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open chain file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return decode_chain(buf.str());
}

void save_chain_file(const std::filesystem::path& path, const TransitionModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write chain file: " + path.string());
    out << encode_chain(model);
}

}  // namespace mlseq
