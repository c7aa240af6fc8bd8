// dnsinj: DNS name-injection toolkit driver.
//
// Exit codes: 0 clean, 1 injection findings, 2 usage error, 3 runtime error.

#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "dnsinj/net.hpp"
#include "dnsinj/payloads.hpp"
#include "dnsinj/proxy.hpp"
#include "dnsinj/report.hpp"
#include "dnsinj/resolver_sim.hpp"
#include "dnsinj/scanner.hpp"
#include "dnsinj/sim_server.hpp"
#include "dnsinj/validation.hpp"

using namespace dnsinj;

namespace {

volatile std::sig_atomic_t g_stop = 0;
void on_signal(int) { g_stop = 1; }

wire::RawName parse_name(const std::string& text) {
    return wire::from_presentation(text);
}

payloads::ZoneFile make_zone(const std::string& attacker,
                             const std::string& target,
                             const std::string& inject_ip) {
    auto ip = wire::parse_ipv4(inject_ip);
    if (!ip)
        throw CLI::ValidationError("--inject-ip", "not an IPv4 address");
    return payloads::build_payload_zone(parse_name(attacker),
                                        parse_name(target), *ip);
}

validation::DecoderProfile stub_by_name(const std::string& name) {
    if (name == "glibc")
        return validation::profiles::glibc_like();
    if (name == "musl")
        return validation::profiles::musl_like();
    if (name == "uclibc")
        return validation::profiles::uclibc_like();
    if (name == "dietlibc")
        return validation::profiles::dietlibc_like();
    if (name == "escape-only")
        return validation::profiles::escape_only();
    throw CLI::ValidationError("--stub", "unknown profile: " + name);
}

net::Endpoint parse_endpoint(const std::string& text) {
    auto colon = text.rfind(':');
    if (colon == std::string::npos)
        return {text, 53};
    return {text.substr(0, colon),
            static_cast<uint16_t>(std::stoul(text.substr(colon + 1)))};
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path);
    out << content;
}

struct ChainOptions {
    std::string recursive = "transparent";
    bool forwarder = false;
    bool cross_zone = false;
    std::string stub = "glibc";
    std::string app_cache = "none";
    bool lowercase = false;
    std::string version;

    void attach(CLI::App* cmd) {
        cmd->add_option("--recursive", recursive,
                        "recursive behaviour: transparent|reencode")
            ->check(CLI::IsMember({"transparent", "reencode"}));
        cmd->add_flag("--forwarder", forwarder, "insert a caching forwarder");
        cmd->add_flag("--cross-zone", cross_zone,
                      "forwarder caches cross-zone CNAME chain records");
        cmd->add_option("--stub", stub,
                        "stub profile: glibc|musl|uclibc|dietlibc|escape-only");
        cmd->add_option("--app-cache", app_cache,
                        "application cache keying: none|query|all")
            ->check(CLI::IsMember({"none", "query", "all"}));
        cmd->add_flag("--lowercase", lowercase,
                      "recursive lowercases names (0x20 normalization)");
        cmd->add_option("--version-banner", version,
                        "version.bind CH TXT banner for serve-sim");
    }

    sim::SimChainConfig build() const {
        sim::SimChainConfig cfg;
        cfg.recursive = recursive == "reencode"
                            ? sim::RecursiveProfile::DecodeReencode
                            : sim::RecursiveProfile::Transparent;
        cfg.forwarder.present = forwarder;
        cfg.forwarder.cross_zone_cname_caching = cross_zone;
        cfg.stub = stub_by_name(stub);
        cfg.app_cache.present = app_cache != "none";
        cfg.app_cache.keyed_by =
            app_cache == "all"
                ? sim::AppCacheConfig::Keying::AllNamesInResponse
                : sim::AppCacheConfig::Keying::QueryNameOnly;
        cfg.lowercase_normalize = lowercase;
        cfg.version_banner = version;
        return cfg;
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"DNS injection-safety toolkit"};
    app.require_subcommand(1);

    std::string attacker = "attacker.com";
    std::string target = "target.com";
    std::string inject_ip = "6.6.6.6";
    app.add_option("--attacker", attacker, "attacker-controlled zone origin")
        ->capture_default_str();
    app.add_option("--target", target, "victim domain to poison")
        ->capture_default_str();
    app.add_option("--inject-ip", inject_ip, "address injected payloads carry")
        ->capture_default_str();

    // genzone
    auto* genzone = app.add_subcommand("genzone", "emit the payload zone file");
    std::string zone_out, catalog_out;
    genzone->add_option("--out", zone_out, "zone file path (default stdout)");
    genzone->add_option("--catalog", catalog_out, "also write catalog JSON");

    // simulate
    auto* simulate =
        app.add_subcommand("simulate", "run a resolver-chain scenario");
    std::string payload_id;
    bool forward_mode = false;
    ChainOptions sim_chain;
    simulate->add_option("--payload", payload_id, "payload id")->required();
    simulate->add_flag("--forward", forward_mode,
                       "trace per-stage name handling instead of poisoning");
    sim_chain.attach(simulate);

    // serve-sim
    auto* serve = app.add_subcommand(
        "serve-sim", "serve a simulated resolver chain over loopback UDP");
    uint16_t serve_port = 0;
    std::string ns_log_path;
    ChainOptions serve_chain;
    serve->add_option("--port", serve_port, "UDP port (0 picks one)");
    serve->add_option("--ns-log", ns_log_path,
                      "write the attacker nameserver query log here on exit");
    serve_chain.attach(serve);

    // scan
    auto* scan = app.add_subcommand("scan", "two-stage injection scan");
    std::vector<std::string> scan_targets;
    std::string out_dir = ".";
    double qps = 100.0;
    int timeout_ms = 3000;
    int retries = 2;
    uint64_t seed = 1;
    size_t workers = 4;
    scan->add_option("--target-server", scan_targets,
                     "resolver ip[:port], repeatable")
        ->required();
    scan->add_option("--out-dir", out_dir, "directory for result files")
        ->capture_default_str();
    scan->add_option("--qps", qps, "global query rate cap")
        ->capture_default_str();
    scan->add_option("--timeout-ms", timeout_ms, "per-query timeout")
        ->capture_default_str();
    scan->add_option("--retries", retries, "retries with fresh prefixes")
        ->capture_default_str();
    scan->add_option("--seed", seed, "prefix RNG seed")->capture_default_str();
    scan->add_option("--workers", workers, "worker threads")
        ->capture_default_str();

    // proxy
    auto* proxy_cmd =
        app.add_subcommand("proxy", "sanitizing DNS forwarding proxy");
    std::string upstream = "127.0.0.1:53";
    uint16_t proxy_port = 0;
    std::string policy_path;
    proxy_cmd->add_option("--upstream", upstream, "upstream resolver ip:port")
        ->capture_default_str();
    proxy_cmd->add_option("--port", proxy_port, "listen port (0 picks one)");
    proxy_cmd->add_option("--policy", policy_path, "policy JSON file");

    // report
    auto* report_cmd =
        app.add_subcommand("report", "render decoder-profile matrices");
    std::string which = "forward";
    report_cmd->add_option("--matrix", which, "forward|reverse|both")
        ->check(CLI::IsMember({"forward", "reverse", "both"}));

    CLI11_PARSE(app, argc, argv);

    try {
        payloads::ZoneFile zone = make_zone(attacker, target, inject_ip);

        if (*genzone) {
            std::string text = payloads::emit_zonefile(zone);
            if (zone_out.empty())
                std::cout << text;
            else
                write_file(zone_out, text);
            if (!catalog_out.empty())
                write_file(catalog_out, payloads::catalog_json(zone));
            return 0;
        }

        if (*simulate) {
            sim::SimChainConfig cfg = sim_chain.build();
            if (forward_mode) {
                auto stages = sim::run_forward_lookup(cfg, zone, payload_id);
                for (const auto& s : stages)
                    std::cout << s.stage << ": "
                              << validation::verdict_name(s.outcome.verdict)
                              << " \"" << s.outcome.presentation.text
                              << "\"\n";
                return 0;
            }
            sim::ScenarioOutcome outcome = sim::run_injection_scenario(
                cfg, zone, payload_id, payloads::victim_name(zone));
            for (const auto& ev : outcome.trace)
                std::cout << "[" << ev.component << "] " << ev.event << "\n";
            std::cout << (outcome.poisoned ? "POISONED" : "not poisoned")
                      << "\n";
            return outcome.poisoned ? 1 : 0;
        }

        if (*serve) {
            sim::SimServer server(serve_chain.build(), &zone, serve_port);
            server.start();
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cout << "listening on " << server.endpoint().str()
                      << std::endl;
            while (!g_stop)
                std::this_thread::sleep_for(std::chrono::milliseconds(100));
            server.stop();
            if (!ns_log_path.empty())
                write_file(ns_log_path, server.ns_log_text());
            return 0;
        }

        if (*scan) {
            scanner::ScannerConfig cfg;
            for (const auto& t : scan_targets)
                cfg.targets.push_back(parse_endpoint(t));
            cfg.zone = &zone;
            cfg.qps = qps;
            cfg.timeout_ms = timeout_ms;
            cfg.retries = retries;
            cfg.seed = seed;
            cfg.workers = workers;
            scanner::Scanner sc(cfg);
            scanner::Campaign campaign = sc.run();
            scanner::Report rep = scanner::aggregate_report(campaign);
            write_file(out_dir + "/results.jsonl",
                       scanner::results_jsonl(campaign));
            write_file(out_dir + "/report.csv", scanner::report_csv(rep));
            write_file(out_dir + "/report.json", scanner::report_json(rep));
            std::cout << report::render_scan_matrix(rep);
            bool findings = false;
            for (const auto& p : rep.per_payload)
                findings = findings || p.cache_injected > 0;
            return findings ? 1 : 0;
        }

        if (*proxy_cmd) {
            proxy::ProxyPolicy policy;
            if (!policy_path.empty()) {
                std::ifstream in(policy_path);
                if (!in)
                    throw std::runtime_error("cannot read " + policy_path);
                std::string text((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
                policy = proxy::policy_from_json(text);
            }
            proxy::Proxy px(policy, parse_endpoint(upstream), proxy_port);
            px.start();
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cout << "proxying " << px.endpoint().str() << " -> "
                      << upstream << std::endl;
            while (!g_stop)
                std::this_thread::sleep_for(std::chrono::milliseconds(100));
            px.stop();
            std::cout << px.stats().summary_json() << std::endl;
            return 0;
        }

        if (*report_cmd) {
            if (which == "forward" || which == "both")
                std::cout << report::render_matrix(
                    report::stub_forward_matrix(zone));
            if (which == "reverse" || which == "both")
                std::cout << report::render_matrix(
                    report::stub_reverse_matrix(zone));
            return 0;
        }
    } catch (const CLI::Error& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
