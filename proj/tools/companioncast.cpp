// companioncast: batch simulation, transcript verification, trigger planning
// and the session server.

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "companioncast/engine_config.hpp"
#include "companioncast/errors.hpp"
#include "companioncast/scheduler.hpp"
#include "companioncast/server.hpp"
#include "companioncast/session.hpp"
#include "companioncast/timeline.hpp"

namespace cc = companioncast;

namespace {

std::optional<std::string> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        return std::nullopt;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<std::string> split_lines(const std::string& s) {
    std::vector<std::string> lines;
    std::istringstream in(s);
    for (std::string line; std::getline(in, line);) {
        lines.push_back(line);
    }
    return lines;
}

cc::EngineConfig load_config(const std::string& path) {
    return path.empty() ? cc::EngineConfig{} : cc::EngineConfig::load(path);
}

cc::UserMessage parse_user_message(const std::string& spec) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos) {
        throw cc::ValidationError(fmt::format("--user-message '{}': expected T:TEXT", spec));
    }
    try {
        return cc::UserMessage{std::stod(spec.substr(0, colon)), spec.substr(colon + 1)};
    } catch (const std::invalid_argument&) {
        throw cc::ValidationError(fmt::format("--user-message '{}': T must be a number", spec));
    }
}

int run_simulate(const std::string& timeline_path, const std::string& config_path, const std::string& team,
                 std::uint64_t seed, const std::string& out_path, const std::vector<std::string>& messages) {
    const auto side = cc::team_side_from_string(team);
    if (!side) {
        throw cc::ValidationError("--team must be home or away");
    }
    const auto config = load_config(config_path);
    auto doc = std::make_shared<const cc::TimelineDoc>(cc::load_timeline_file(timeline_path));
    cc::SimulationOptions opts;
    opts.supported_team = *side;
    opts.seed = seed;
    for (const auto& m : messages) {
        opts.user_messages.push_back(parse_user_message(m));
    }
    const auto result = cc::simulate(doc, config, cc::make_services(config), opts);

    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw cc::NotFoundError(fmt::format("cannot write '{}'", out_path));
    }
    out << result.transcript_jsonl;
    std::cerr << fmt::format("{} events, {} conversations -> {}\n", result.events.size(),
                             result.conversations.size(), out_path);
    return 0;
}

int run_verify(const std::string& transcript_path, const std::string& golden_path) {
    const auto a = read_file(transcript_path);
    const auto b = read_file(golden_path);
    if (!a || !b) {
        std::cerr << fmt::format("cannot read '{}'\n", a ? golden_path : transcript_path);
        return 2;
    }
    if (*a == *b) {
        std::cout << "transcripts are identical\n";
        return 0;
    }
    const auto la = split_lines(*a);
    const auto lb = split_lines(*b);
    std::size_t differing = 0;
    std::optional<std::size_t> first;
    for (std::size_t i = 0; i < std::max(la.size(), lb.size()); ++i) {
        const bool same = i < la.size() && i < lb.size() && la[i] == lb[i];
        if (!same) {
            ++differing;
            if (!first) {
                first = i;
            }
        }
    }
    std::cout << fmt::format("transcripts differ: {} vs {} lines, {} differing lines\n", la.size(), lb.size(),
                             differing);
    if (first) {
        std::cout << fmt::format("first difference at line {}:\n  transcript: {}\n  golden:     {}\n", *first + 1,
                                 *first < la.size() ? la[*first] : "<missing>",
                                 *first < lb.size() ? lb[*first] : "<missing>");
    } else {
        std::cout << "lines match; byte-level difference (line endings or trailing newline)\n";
    }
    return 1;
}

int run_plan(const std::string& timeline_path, const std::string& config_path) {
    const auto config = load_config(config_path);
    const auto doc = cc::load_timeline_file(timeline_path);
    for (const auto& d : cc::plan_timeline(doc, config.scheduler)) {
        nlohmann::ordered_json j = {{"trigger_t", d.trigger_t},
                                    {"fire", d.fire},
                                    {"kind", cc::to_string(d.scenario.kind)},
                                    {"intensity", cc::to_string(d.scenario.intensity)},
                                    {"rounds_total", d.scenario.rounds_total}};
        j["suppressed_reason"] =
            d.suppressed_reason ? nlohmann::ordered_json(cc::to_string(*d.suppressed_reason)) : nlohmann::ordered_json();
        std::cout << j.dump() << '\n';
    }
    return 0;
}

cc::Server* g_server = nullptr;

void on_signal(int) {
    if (g_server) {
        g_server->stop();
    }
}

int run_serve(const std::string& config_path, const std::string& address, unsigned short port, int threads,
              const std::vector<std::string>& timelines) {
    const auto config = load_config(config_path);
    auto engine = std::make_shared<cc::Engine>(config, cc::make_services(config));
    for (const auto& path : timelines) {
        const auto id = engine->add_timeline(cc::load_timeline_file(path));
        spdlog::info("loaded timeline {} from {}", id, path);
    }
    cc::Server server(engine, cc::ServerOptions{address, port, threads});
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    server.start();
    server.wait();
    g_server = nullptr;
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-agent co-viewing engine"};
    app.require_subcommand(1);

    std::string timeline_path;
    std::string config_path;
    std::string team = "home";
    std::uint64_t seed = 0;
    std::string out_path;
    std::vector<std::string> messages;
    auto* simulate = app.add_subcommand("simulate", "Run a whole timeline with scripted backends, no server");
    simulate->add_option("--timeline", timeline_path, "Timeline JSON file")->required()->check(CLI::ExistingFile);
    simulate->add_option("--config", config_path, "Engine config JSON file")->check(CLI::ExistingFile);
    simulate->add_option("--team", team, "Supported team")->check(CLI::IsMember({"home", "away"}));
    simulate->add_option("--seed", seed, "Seed for scripted backends");
    simulate->add_option("--out", out_path, "Transcript output (JSON lines)")->required();
    simulate->add_option("--user-message", messages, "Viewer message as T:TEXT (repeatable)");

    std::string transcript_path;
    std::string golden_path;
    auto* verify = app.add_subcommand("verify", "Compare a transcript with a golden file byte for byte");
    verify->add_option("--transcript", transcript_path)->required();
    verify->add_option("--golden", golden_path)->required();

    auto* plan = app.add_subcommand("plan", "Print the trigger plan for a timeline");
    plan->add_option("--timeline", timeline_path)->required()->check(CLI::ExistingFile);
    plan->add_option("--config", config_path)->check(CLI::ExistingFile);

    std::string address = "127.0.0.1";
    unsigned short port = 8080;
    int threads = 2;
    std::vector<std::string> preload;
    auto* serve = app.add_subcommand("serve", "Run the HTTP + WebSocket session server");
    serve->add_option("--config", config_path)->check(CLI::ExistingFile);
    serve->add_option("--address", address);
    serve->add_option("--port", port);
    serve->add_option("--threads", threads);
    serve->add_option("--timeline", preload, "Timeline to preload (repeatable)")->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    spdlog::set_level(spdlog::level::warn);
    if (serve->parsed()) {
        spdlog::set_level(spdlog::level::info);
    }
    try {
        if (simulate->parsed()) {
            return run_simulate(timeline_path, config_path, team, seed, out_path, messages);
        }
        if (verify->parsed()) {
            return run_verify(transcript_path, golden_path);
        }
        if (plan->parsed()) {
            return run_plan(timeline_path, config_path);
        }
        return run_serve(config_path, address, port, threads, preload);
    } catch (const cc::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
