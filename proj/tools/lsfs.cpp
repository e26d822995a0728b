#include "lsfs/bench.hpp"
#include "lsfs/runtime.hpp"
#include "lsfs/service.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <chrono>
#include <csignal>
#include <iostream>
#include <thread>
#include <unistd.h>

namespace {

using namespace lsfs;

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

void wait_for_interrupt() {
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    while (!g_interrupted) {
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
}

struct Globals {
    std::string root;
    bool json = false;
    std::string log_level = "warn";
};

RuntimeConfig load_config(const Globals& g) {
    auto config = RuntimeConfig::from_env();
    if (!g.root.empty()) {
        config.root = g.root;
    }
    return config;
}

/// Reads y/n from the terminal. Nothing else counts as approval.
Approver tty_approver() {
    return [](const PendingAction& action) {
        std::cerr << "about to run: " << action.preview << "\napprove? [y/N] " << std::flush;
        std::string answer;
        if (!std::getline(std::cin, answer)) {
            return false;
        }
        return answer == "y" || answer == "Y" || answer == "yes";
    };
}

int emit(const Transcript& t, bool json) {
    if (json) {
        std::cout << t.to_json().dump(2) << "\n";
    } else {
        std::cout << t.render();
    }
    return t.exit_code();
}

int cmd_init(const Globals& g) {
    auto config = load_config(g);
    auto rt = Runtime::open(config);
    const auto report = rt->supervisor().scan_once();
    rt->persist();
    if (g.json) {
        std::cout << to_json(report).dump(2) << "\n";
    } else {
        std::cout << "initialized " << rt->config().state_dir().string() << "\nindexed " << report.created.size()
                  << " file(s)\n";
        for (const auto& e : report.errors) {
            std::cout << "skipped " << e.path << ": " << e.message << "\n";
        }
    }
    return 0;
}

int cmd_prompt(const Globals& g, const std::vector<std::string>& words, bool no_input) {
    auto rt = Runtime::open(load_config(g));
    const bool interactive = !no_input && isatty(STDIN_FILENO);
    const auto approver = interactive ? tty_approver() : Approver{};
    if (!words.empty()) {
        std::string text;
        for (const auto& w : words) {
            text += (text.empty() ? "" : " ") + w;
        }
        const auto t = rt->run_prompt(text, approver);
        rt->persist();
        return emit(t, g.json);
    }

    // REPL: one prompt per line until EOF.
    int last = 0;
    std::string line;
    while (true) {
        if (interactive) {
            std::cerr << "lsfs> " << std::flush;
        }
        if (!std::getline(std::cin, line)) {
            break;
        }
        if (line.find_first_not_of(" \t") == std::string::npos) {
            continue;
        }
        if (line == "exit" || line == "quit") {
            break;
        }
        last = emit(rt->run_prompt(line, approver), g.json);
        rt->persist();
    }
    return last;
}

int cmd_exec(const Globals& g, const std::string& api, const std::vector<std::string>& kvs, bool no_input) {
    auto rt = Runtime::open(load_config(g));
    nlohmann::json args = nlohmann::json::object();
    for (const auto& kv : kvs) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw Error(ErrorCode::InvalidArgument, "--arg expects key=value, got '" + kv + "'");
        }
        args[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    Transcript t;
    try {
        const auto call = rt->parser().normalizer().build(api, args, "");
        const bool interactive = !no_input && isatty(STDIN_FILENO);
        t = rt->run_call(call, interactive ? tty_approver() : Approver{});
    } catch (const Error& e) {
        t.error = e.code();
        t.error_message = e.what();
        t.error_details = e.details();
    }
    rt->persist();
    return emit(t, g.json);
}

int cmd_watch(const Globals& g, std::optional<std::int64_t> interval) {
    auto config = load_config(g);
    if (interval) {
        config.scan_interval_ms = *interval;
    }
    auto rt = Runtime::open(config);
    const bool json = g.json;
    rt->supervisor().on_report([&rt, json](const ScanReport& report) {
        if (json) {
            std::cout << to_json(report).dump() << "\n" << std::flush;
        } else {
            std::cout << format_rfc3339(report.scanned_at) << " changed=" << report.changed.size()
                      << " created=" << report.created.size() << " deleted=" << report.deleted.size()
                      << " restored=" << report.restored.size() << " errors=" << report.errors.size() << "\n"
                      << std::flush;
        }
        try {
            rt->persist();
        } catch (const Error& e) {
            spdlog::error("persist failed: {}", e.what());
        }
    });
    rt->supervisor().run(std::chrono::milliseconds(config.scan_interval_ms));
    std::cerr << "watching " << rt->config().root.string() << " every " << config.scan_interval_ms
              << " ms; Ctrl-C to stop\n";
    wait_for_interrupt();
    rt->supervisor().stop();
    rt->persist();
    return 0;
}

int cmd_serve(const Globals& g, const std::string& host, std::optional<int> port, bool watch) {
    auto config = load_config(g);
    if (port) {
        config.http_port = static_cast<std::uint16_t>(*port);
    }
    auto rt = Runtime::open(config);
    HttpService service(*rt);
    const auto bound = service.bind(host, config.http_port.value_or(8080));
    if (watch) {
        rt->supervisor().on_report([&rt](const ScanReport&) { rt->persist(); });
        rt->supervisor().run(std::chrono::milliseconds(config.scan_interval_ms));
    }
    service.start();
    std::cerr << "serving " << rt->config().root.string() << " on http://" << host << ":" << bound << "\n";
    wait_for_interrupt();
    service.stop();
    rt->supervisor().stop();
    rt->persist();
    return 0;
}

int cmd_bench(const Globals& g, const std::string& suite, const std::vector<std::size_t>& sizes, std::uint64_t seed,
              std::size_t reps, std::int64_t latency_ms) {
    using namespace lsfs::bench;
    nlohmann::json out = nlohmann::json::object();
    const bool all = suite == "all";
    if (all || suite == "retrieval") {
        const auto runs = retrieval_suite(sizes, seed);
        out["retrieval"] = nlohmann::json::array();
        for (const auto& r : runs) {
            out["retrieval"].push_back(to_json(r));
        }
        if (!g.json) {
            std::cout << "# retrieval\n" << render_retrieval(runs) << "\n";
        }
    }
    if (all || suite == "speed") {
        const auto run = speed_comparison(sizes.empty() ? 40 : sizes.back(), latency_ms, seed);
        out["speed"] = to_json(run);
        if (!g.json) {
            std::cout << "# speed\n" << render_speed(run) << "\n";
        }
    }
    if (all || suite == "rollback") {
        ScratchDir scratch("bench-rollback");
        std::vector<std::size_t> ks;
        for (std::size_t k = 5; k <= 40; k += 5) {
            ks.push_back(k);
        }
        const auto run = rollback_suite(40, ks, reps, scratch.path());
        out["rollback"] = to_json(run);
        if (!g.json) {
            std::cout << "# rollback\n" << render_rollback(run) << "\n";
        }
    }
    if (all || suite == "sharing") {
        ScratchDir scratch("bench-sharing");
        const auto run = sharing_suite(20, scratch.path());
        out["sharing"] = to_json(run);
        if (!g.json) {
            std::cout << "# sharing\n" << render_sharing(run) << "\n";
        }
    }
    if (g.json) {
        std::cout << out.dump(2) << "\n";
    }
    return 0;
}

int cmd_versions(const Globals& g, const std::string& directory, const std::string& name, bool show_content) {
    auto rt = Runtime::open(load_config(g));
    const auto chain = rt->recorder().chain({directory, name});
    if (chain.empty()) {
        throw Error(ErrorCode::NotFound, "no versions recorded for " + directory + "/" + name);
    }
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < chain.size(); ++i) {
        const auto& v = chain[i];
        const auto k = chain.size() - i;
        if (g.json) {
            nlohmann::json row{{"seq", v.seq},
                               {"k", k},
                               {"recorded_at", format_rfc3339(v.recorded_at)},
                               {"size_bytes", v.content.size()}};
            if (show_content) {
                row["content"] = v.content;
            }
            rows.push_back(std::move(row));
        } else {
            std::cout << "seq=" << v.seq << " k=" << k << " recorded_at=" << format_rfc3339(v.recorded_at)
                      << " bytes=" << v.content.size() << "\n";
            if (show_content) {
                std::cout << v.content << (v.content.empty() || v.content.back() == '\n' ? "" : "\n");
            }
        }
    }
    if (g.json) {
        std::cout << rows.dump(2) << "\n";
    }
    return 0;
}

int cmd_links(const Globals& g, const std::optional<std::string>& revoke) {
    auto rt = Runtime::open(load_config(g));
    if (revoke) {
        const auto link = rt->apis().revoke_link(*revoke);
        std::cout << (g.json ? to_json(link).dump(2) : "revoked " + link.token) << "\n";
        return 0;
    }
    const auto links = rt->shares().list();
    if (g.json) {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& l : links) {
            rows.push_back(to_json(l));
        }
        std::cout << rows.dump(2) << "\n";
        return 0;
    }
    for (const auto& l : links) {
        std::cout << l.token << "  " << l.key.directory << "/" << l.key.name << "  "
                  << (l.revoked ? "revoked" : l.expires_at ? "expires " + format_rfc3339(*l.expires_at) : "no expiry")
                  << "  " << l.url << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    spdlog::set_default_logger(spdlog::stderr_color_mt("lsfs"));

    CLI::App app{"lsfs: semantic file system over a directory tree"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--root", g.root, "Managed root (default: $LSFS_ROOT or .)");
    app.add_flag("--json", g.json, "Machine-readable output");
    app.add_option("--log-level", g.log_level, "trace|debug|info|warn|error|off")->capture_default_str();

    auto* init = app.add_subcommand("init", "Create state and index the files already under the root");

    auto* prompt = app.add_subcommand("prompt", "Run one prompt, or read prompts from stdin when none is given");
    std::vector<std::string> words;
    bool no_input = false;
    prompt->add_option("text", words, "Prompt text");
    prompt->add_flag("--no-input", no_input, "Never ask for approval; irreversible calls are refused");

    auto* exec = app.add_subcommand("exec", "Call one API directly with schema-checked arguments");
    std::string api;
    std::vector<std::string> kvs;
    bool exec_no_input = false;
    exec->add_option("api", api, "API name")->required();
    exec->add_option("--arg", kvs, "key=value (repeatable)");
    exec->add_flag("--no-input", exec_no_input, "Never ask for approval");

    auto* watch = app.add_subcommand("watch", "Run the supervisor until interrupted");
    std::optional<std::int64_t> interval;
    watch->add_option("--interval-ms", interval, "Scan period");

    auto* serve = app.add_subcommand("serve", "HTTP API and share links");
    std::string host = "127.0.0.1";
    std::optional<int> port;
    bool serve_watch = false;
    serve->add_option("--host", host)->capture_default_str();
    serve->add_option("--port", port, "Default: $LSFS_HTTP_PORT or 8080");
    serve->add_flag("--watch", serve_watch, "Also run the supervisor");

    auto* bench = app.add_subcommand("bench", "Synthetic retrieval, speed, rollback and sharing runs");
    std::string suite = "all";
    std::vector<std::size_t> sizes{10, 20, 40};
    std::uint64_t seed = 7;
    std::size_t reps = 5;
    std::int64_t latency = 20;
    bench->add_option("suite", suite)->check(CLI::IsMember({"all", "retrieval", "speed", "rollback", "sharing"}));
    bench->add_option("--files", sizes, "Corpus sizes")->capture_default_str();
    bench->add_option("--seed", seed)->capture_default_str();
    bench->add_option("--reps", reps, "Rollback repetitions per k")->capture_default_str();
    bench->add_option("--latency-ms", latency, "Simulated LLM latency for the speed run")->capture_default_str();

    auto* versions = app.add_subcommand("versions", "Version chain of one file, oldest first");
    std::string v_dir, v_name;
    bool v_content = false;
    versions->add_option("directory", v_dir)->required();
    versions->add_option("name", v_name)->required();
    versions->add_flag("--content", v_content, "Print each snapshot");

    auto* links = app.add_subcommand("links", "List share links");
    std::optional<std::string> revoke;
    links->add_option("--revoke", revoke, "Token to revoke");

    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(spdlog::level::from_str(g.log_level));

    try {
        if (*init) {
            return cmd_init(g);
        }
        if (*prompt) {
            return cmd_prompt(g, words, no_input);
        }
        if (*exec) {
            return cmd_exec(g, api, kvs, exec_no_input);
        }
        if (*watch) {
            return cmd_watch(g, interval);
        }
        if (*serve) {
            return cmd_serve(g, host, port, serve_watch);
        }
        if (*bench) {
            return cmd_bench(g, suite, sizes, seed, reps, latency);
        }
        if (*versions) {
            return cmd_versions(g, v_dir, v_name, v_content);
        }
        if (*links) {
            return cmd_links(g, revoke);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
