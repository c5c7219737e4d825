#include <sys/types.h>
#include <sys/wait.h>

#include <csignal>
#include <cstdio>
#include <mutex>
#include <unistd.h>

#include <json.hpp>

#include "mlseq/provider.hpp"

namespace mlseq {

namespace {

// A dead provider must surface as EPIPE/EOF, not kill the host process.
void ignore_sigpipe_once() {
    static std::once_flag flag;
    std::call_once(flag, [] { std::signal(SIGPIPE, SIG_IGN); });
}

}  // namespace

struct ProcessSource::Impl {
    pid_t pid = -1;
    FILE* to_child = nullptr;
    FILE* from_child = nullptr;
    std::string command;
    std::mutex turn;  // one request/reply in flight per connection

    ~Impl() {
        if (to_child) fclose(to_child);
        if (from_child) fclose(from_child);
        if (pid > 0) {
            // The server exits on stdin EOF; give it a moment, then insist.
            for (int i = 0; i < 200; ++i) {
                if (waitpid(pid, nullptr, WNOHANG) != 0) return;
                usleep(10000);
            }
            kill(pid, SIGKILL);
            waitpid(pid, nullptr, 0);
        }
    }
};

ProcessSource::ProcessSource(const std::string& command)
    : impl_(std::make_unique<Impl>()) {
    ignore_sigpipe_once();
    impl_->command = command;

    int to_pipe[2];    // parent -> child
    int from_pipe[2];  // child -> parent
    if (pipe(to_pipe) != 0) throw ProtocolError("cannot create pipe");
    if (pipe(from_pipe) != 0) {
        close(to_pipe[0]);
        close(to_pipe[1]);
        throw ProtocolError("cannot create pipe");
    }

    pid_t pid = fork();
    if (pid < 0) {
        close(to_pipe[0]);
        close(to_pipe[1]);
        close(from_pipe[0]);
        close(from_pipe[1]);
        throw ProtocolError("cannot fork provider process");
    }
    if (pid == 0) {
        dup2(to_pipe[0], STDIN_FILENO);
        dup2(from_pipe[1], STDOUT_FILENO);
        close(to_pipe[0]);
        close(to_pipe[1]);
        close(from_pipe[0]);
        close(from_pipe[1]);
        execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }

    close(to_pipe[0]);
    close(from_pipe[1]);
    impl_->pid = pid;
    impl_->to_child = fdopen(to_pipe[1], "w");
    impl_->from_child = fdopen(from_pipe[0], "r");
    if (!impl_->to_child || !impl_->from_child) {
        throw ProtocolError("cannot attach to provider process");
    }
}

ProcessSource::~ProcessSource() = default;

SuccessorList ProcessSource::successors(const SuccessorQuery& query) {
    if (query.top_k && *query.top_k == 0) {
        throw std::invalid_argument("topK must be >= 1");
    }

    nlohmann::json request = {
        {"op", "successors"},
        {"state", query.state_key},
        {"topK", query.top_k ? *query.top_k : 0u},  // 0 = all
    };
    const std::string line = request.dump();
    std::lock_guard lock(impl_->turn);
    if (fputs(line.c_str(), impl_->to_child) == EOF ||
        fputc('\n', impl_->to_child) == EOF || fflush(impl_->to_child) != 0) {
        throw ProtocolError("provider process is not accepting requests (" +
                            impl_->command + ")");
    }

    std::string reply;
    for (;;) {
        int c = fgetc(impl_->from_child);
        if (c == EOF) {
            throw ProtocolError("provider process exited mid-stream (" +
                                impl_->command + ")");
        }
        if (c == '\n') break;
        reply.push_back(static_cast<char>(c));
    }

    nlohmann::json doc = nlohmann::json::parse(reply, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw ProtocolError("provider reply is not a JSON object: " + reply);
    }
    if (doc.contains("error")) {
        const std::string err = doc["error"].is_string()
                                    ? doc["error"].get<std::string>()
                                    : doc["error"].dump();
        if (err == "not_found") {
            throw NotFoundError("provider does not know state '" +
                                query.state_key + "'");
        }
        throw ProtocolError("provider error: " + err);
    }
    if (!doc.contains("entries") || !doc["entries"].is_array()) {
        throw ProtocolError("provider reply lacks 'entries': " + reply);
    }

    SuccessorList list;
    double sum = 0.0;
    for (const auto& item : doc["entries"]) {
        if (!item.is_array() || item.size() != 2 || !item[0].is_string() ||
            !item[1].is_number()) {
            throw ProtocolError("malformed entry in provider reply: " + reply);
        }
        SuccessorEntry entry{item[0].get<std::string>(), item[1].get<double>()};
        if (!(entry.prob > 0.0) || entry.prob > 1.0) {
            throw ProtocolError("entry probability out of (0,1]: " + reply);
        }
        if (!list.entries.empty() && entry.prob > list.entries.back().prob) {
            throw ProtocolError("entries not sorted by descending probability");
        }
        sum += entry.prob;
        list.entries.push_back(std::move(entry));
    }
    if (list.entries.empty()) {
        throw ProtocolError("provider returned no successors for state '" +
                            query.state_key + "'");
    }
    if (sum > 1.0 + 1e-6) {
        throw ProtocolError("entry probabilities sum beyond 1");
    }
    if (query.top_k && list.entries.size() > *query.top_k) {
        throw ProtocolError("provider returned more entries than requested");
    }
    return list;
}

}  // namespace mlseq
