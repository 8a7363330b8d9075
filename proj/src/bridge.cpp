#include "bridge.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>

#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

namespace metamorph::detail {

namespace {

/// One bridge child process talking newline-delimited JSON over a socketpair
/// attached to its stdin/stdout.
class BridgeProcess {
  public:
    explicit BridgeProcess(const std::vector<std::string> &argv) {
        if (argv.empty()) {
            throw BackendError("BridgeDown", "empty bridge command");
        }
        int fds[2];
        if (socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0) {
            throw BackendError("BridgeDown", std::string("socketpair: ") + std::strerror(errno));
        }
        std::vector<char *> args;
        for (const auto &a : argv) {
            args.push_back(const_cast<char *>(a.c_str()));
        }
        args.push_back(nullptr);
        pid_ = fork();
        if (pid_ < 0) {
            close(fds[0]);
            close(fds[1]);
            throw BackendError("BridgeDown", std::string("fork: ") + std::strerror(errno));
        }
        if (pid_ == 0) {
            dup2(fds[1], STDIN_FILENO);
            dup2(fds[1], STDOUT_FILENO);
            execvp(args[0], args.data());
            _exit(127);
        }
        close(fds[1]);
        fd_ = fds[0];
    }

    BridgeProcess(const BridgeProcess &) = delete;
    BridgeProcess &operator=(const BridgeProcess &) = delete;

    ~BridgeProcess() { terminate(); }

    void send(const Json &message) {
        const std::string line = message.dump() + "\n";
        std::size_t done = 0;
        while (done < line.size()) {
            const ssize_t n = ::send(fd_, line.data() + done, line.size() - done, MSG_NOSIGNAL);
            if (n < 0 && errno == EINTR) {
                continue;
            }
            if (n <= 0) {
                throw BackendError("BridgeDown", "bridge closed its input");
            }
            done += static_cast<std::size_t>(n);
        }
    }

    Json receive() {
        for (;;) {
            if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
                std::string line = buffer_.substr(0, nl);
                buffer_.erase(0, nl + 1);
                if (line.empty()) {
                    continue;
                }
                try {
                    return Json::parse(line);
                } catch (const Json::parse_error &e) {
                    throw BackendError("Protocol", std::string("malformed bridge line: ") + e.what());
                }
            }
            char chunk[65536];
            const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
            if (n < 0 && errno == EINTR) {
                continue;
            }
            if (n <= 0) {
                throw BackendError("BridgeDown", "bridge exited");
            }
            buffer_.append(chunk, static_cast<std::size_t>(n));
        }
    }

    void terminate() noexcept {
        if (fd_ >= 0) {
            close(fd_);
            fd_ = -1;
        }
        if (pid_ > 0) {
            int status = 0;
            for (int i = 0; i < 200; ++i) {
                if (waitpid(pid_, &status, WNOHANG) == pid_) {
                    pid_ = -1;
                    return;
                }
                usleep(10000);
            }
            kill(pid_, SIGKILL);
            waitpid(pid_, &status, 0);
            pid_ = -1;
        }
    }

  private:
    pid_t pid_ = -1;
    int fd_ = -1;
    std::string buffer_;
};

int major_of(const std::string &version) { return std::atoi(version.c_str()); }

class BridgeSut final : public Sut {
  public:
    BridgeSut(SutDescriptor descriptor, const SutOptions &options)
        : descriptor_(std::move(descriptor)), process_(options.bridge_command) {
        Json hello;
        try {
            hello = call("hello", Json{{"protocol", kBridgeProtocolVersion}});
        } catch (const BackendError &e) {
            if (e.kind() == "Protocol") {
                throw BackendError("HandshakeFailed", e.what());
            }
            throw;
        }
        const std::string theirs = hello.value("protocol", std::string{});
        if (theirs.empty() || major_of(theirs) != major_of(kBridgeProtocolVersion)) {
            throw BackendError("HandshakeFailed", "bridge protocol " + theirs + " is incompatible with " +
                                                      kBridgeProtocolVersion);
        }
        const Json described = call("describe", Json{{"fmu", descriptor_.fmu.string()}});
        InterfaceSpec spec;
        try {
            spec = InterfaceSpec::from_json(described, ".payload");
        } catch (const SchemaError &e) {
            throw BackendError("Protocol", std::string("describe payload: ") + e.what());
        }
        if (descriptor_.interface.variables.empty()) {
            descriptor_.interface = std::move(spec);
        }
    }

    ~BridgeSut() override {
        try {
            call("shutdown", Json::object());
        } catch (...) {
        }
    }

    const SutDescriptor &descriptor() const override { return descriptor_; }

    SignalBundle simulate(const SignalBundle &inputs, const TimeGrid &grid) override {
        if (!(inputs.grid() == grid)) {
            throw InterfaceMismatch("input grid differs from the simulation grid");
        }
        const auto names = descriptor_.interface.inputs();
        for (const auto &name : names) {
            if (!inputs.contains(name)) {
                throw InterfaceMismatch("missing input " + name);
            }
        }
        const std::size_t n = grid.size();
        const long long id = ++next_id_;
        for (std::size_t offset = 0; offset < n; offset += kBridgeChunk) {
            const std::size_t end = std::min(n, offset + kBridgeChunk);
            Json slice = Json::object();
            for (const auto &name : names) {
                const auto &v = inputs.at(name).values;
                slice[name] = std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(offset),
                                                  v.begin() + static_cast<std::ptrdiff_t>(end));
            }
            Json payload{{"fmu", descriptor_.fmu.string()},
                         {"grid", grid.to_json()},
                         {"inputs", std::move(slice)},
                         {"chunk", Json{{"offset", offset}, {"more", end < n}}}};
            process_.send(Json{{"cmd", "simulate"}, {"id", id}, {"payload", std::move(payload)}});
        }

        std::map<std::string, std::vector<double>> collected;
        try {
            receive_outputs(id, collected);
        } catch (const Json::exception &e) {
            throw BackendError("Protocol", std::string("simulate payload: ") + e.what());
        }
        SignalBundle out(grid);
        for (const auto &name : descriptor_.interface.outputs()) {
            auto it = collected.find(name);
            if (it == collected.end()) {
                throw BackendError("Protocol", "bridge omitted output " + name);
            }
            try {
                out.put(Trace(name, grid, std::move(it->second)));
            } catch (const GridError &e) {
                throw BackendError("Protocol", e.what());
            }
        }
        return out;
    }

  private:
    void receive_outputs(long long id, std::map<std::string, std::vector<double>> &collected) {
        for (;;) {
            const Json payload = expect_response(id);
            const Json &outputs = payload.at("outputs");
            const std::size_t offset = payload.at("chunk").at("offset").get<std::size_t>();
            for (const auto &[name, values] : outputs.items()) {
                auto &dst = collected[name];
                if (dst.size() != offset) {
                    throw BackendError("Protocol", "out-of-order chunk for " + name);
                }
                for (const auto &x : values) {
                    dst.push_back(x.get<double>());
                }
            }
            if (!payload.at("chunk").at("more").get<bool>()) {
                break;
            }
        }
    }

    Json call(const std::string &cmd, Json payload) {
        const long long id = ++next_id_;
        process_.send(Json{{"cmd", cmd}, {"id", id}, {"payload", std::move(payload)}});
        return expect_response(id);
    }

    Json expect_response(long long id) {
        const Json r = process_.receive();
        if (!r.is_object() || !r.contains("id") || r.at("id") != id || !r.contains("ok")) {
            throw BackendError("Protocol", "unexpected response " + r.dump());
        }
        if (!r.at("ok").get<bool>()) {
            const Json err = r.value("error", Json::object());
            std::string code = err.value("code", std::string("Protocol"));
            if (code != "BadFmu" && code != "SimFault") {
                code = "Protocol";
            }
            throw BackendError(code, err.value("message", std::string{}));
        }
        return r.value("payload", Json::object());
    }

    SutDescriptor descriptor_;
    BridgeProcess process_;
    long long next_id_ = 0;
};

} // namespace

std::unique_ptr<Sut> open_bridge(const SutDescriptor &descriptor, const SutOptions &options) {
    return std::make_unique<BridgeSut>(descriptor, options);
}

} // namespace metamorph::detail
