#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <algorithm>
#include <set>

#include "dnsinj/resolver_sim.hpp"
#include "dnsinj/scanner.hpp"
#include "dnsinj/sim_server.hpp"

using namespace dnsinj;
using namespace dnsinj::scanner;
using dnsinj::wire::RawName;

namespace {

payloads::ZoneFile make_zone() {
    return payloads::build_payload_zone(RawName({"attacker", "com"}),
                                        RawName({"target", "com"}),
                                        {6, 6, 6, 6});
}

sim::SimChainConfig transparent_config(std::string banner = {}) {
    sim::SimChainConfig cfg;
    cfg.recursive = sim::RecursiveProfile::Transparent;
    cfg.version_banner = std::move(banner);
    return cfg;
}

sim::SimChainConfig vulnerable_config(std::string banner = {}) {
    sim::SimChainConfig cfg;
    cfg.recursive = sim::RecursiveProfile::DecodeReencode;
    cfg.forwarder.present = true;
    cfg.forwarder.cross_zone_cname_caching = true;
    cfg.version_banner = std::move(banner);
    return cfg;
}

const std::map<std::string, ProbeVerdict>&
row_for(const Report& report, const net::Endpoint& target) {
    for (const auto& [name, row] : report.matrix)
        if (name == target.str())
            return row;
    static const std::map<std::string, ProbeVerdict> empty;
    return empty;
}

} // namespace

TEST_CASE("random prefixes are 13 base32 chars with fresh entropy") {
    std::mt19937_64 rng(42);
    std::set<std::string> seen;
    const std::string alphabet = "abcdefghijklmnopqrstuvwxyz234567";
    for (int i = 0; i < 2000; ++i) {
        std::string p = Scanner::random_prefix(rng);
        REQUIRE(p.size() == 13);
        for (char c : p)
            REQUIRE(alphabet.find(c) != std::string::npos);
        seen.insert(std::move(p));
    }
    CHECK(seen.size() == 2000); // 65 bits of entropy: collisions mean a bug
}

TEST_CASE("baseline record type requirements scope the scan") {
    payloads::ZoneFile zone = make_zone();
    auto need = [&](const char* id) {
        const auto* e = zone.find(id);
        REQUIRE(e);
        return Scanner::required_baseline_rtype(*e, zone);
    };
    CHECK(need("base") == wire::kTypeCNAME);
    CHECK(need("slash") == wire::kTypeCNAME);
    CHECK(need("injectdot_cname") == wire::kTypeCNAME);
    CHECK(need("injectzero_cname") == wire::kTypeCNAME);
    CHECK(need("ldap_srv") == wire::kTypeSRV);
    CHECK(need("eduroam_srv") == wire::kTypeSRV);
    CHECK(need("radsec_3") == wire::kTypeSRV);
    CHECK(need("spf_exp") == wire::kTypeTXT);
    // the zero-spliced owner still sits under the controlled zone: in scope
    CHECK(need("injectzero_direct") == wire::kTypeA);
    // the dotted-label owner does not: direct probing needs the victim zone
    CHECK(!need("injectdot_direct").has_value());
    // the radsec NAPTR shapes are stub-suite material
    CHECK(!need("radsec_1").has_value());
    CHECK(!need("radsec_2").has_value());
    // reverse suite is a stub-side concern, not a resolver probe
    CHECK(!need("ptr_1").has_value());
    CHECK(!need("ptr_8").has_value());
}

TEST_CASE("dns client talks to a sim server and times out on dead ports") {
    payloads::ZoneFile zone = make_zone();
    sim::SimServer server(transparent_config(), &zone);
    server.start();

    DnsClient client({2000});
    auto reply = client.query_once(
        server.endpoint(),
        {payloads::baseline_a_name(zone.origin), wire::kTypeA, wire::kClassIN});
    REQUIRE(reply.has_value());
    REQUIRE(reply->answers.size() == 1);
    CHECK(reply->answers[0].rdata ==
          wire::Rdata{wire::ARdata{{192, 0, 2, 1}}});

    DnsClient impatient({200});
    CHECK(!impatient.query_once({"127.0.0.1", 9}, // discard port, no listener
                                {RawName({"x"}), wire::kTypeA, wire::kClassIN})
               .has_value());
}

TEST_CASE("scan verdicts separate transparent and vulnerable resolvers") {
    payloads::ZoneFile zone = make_zone();
    sim::SimServer clean(transparent_config("bind-9.16"), &zone);
    sim::SimServer vuln(vulnerable_config("dnsmasq-2.79"), &zone);
    clean.start();
    vuln.start();

    ScannerConfig cfg;
    cfg.targets = {clean.endpoint(), vuln.endpoint()};
    cfg.zone = &zone;
    cfg.qps = 0; // uncapped for the unit test
    cfg.timeout_ms = 2000;
    cfg.retries = 1;
    cfg.seed = 7;
    cfg.workers = 2;
    Campaign campaign = Scanner(cfg).run();
    Report report = aggregate_report(campaign);

    CHECK(report.targets_total == 2);
    CHECK(report.targets_gated == 2);
    CHECK(report.fingerprints.at("bind-9.16") == 1);
    CHECK(report.fingerprints.at("dnsmasq-2.79") == 1);

    const auto& clean_row = row_for(report, clean.endpoint());
    const auto& vuln_row = row_for(report, vuln.endpoint());
    REQUIRE(!clean_row.empty());
    REQUIRE(!vuln_row.empty());

    // the transparent chain never alters a payload and never gets poisoned
    for (const auto& [id, verdict] : clean_row) {
        CAPTURE(id);
        CHECK(verdict == ProbeVerdict::Transparent);
    }

    CHECK(vuln_row.at("base") == ProbeVerdict::Transparent);
    CHECK(vuln_row.at("slash") == ProbeVerdict::Transparent);
    CHECK(vuln_row.at("injectdot_cname") == ProbeVerdict::CacheInjected);
    CHECK(vuln_row.at("injectzero_cname") == ProbeVerdict::CacheInjected);
    // the victim record planted by the earlier cname probes is prefix-free
    // and persists in the forwarder cache; stage 2 observes server state
    CHECK(vuln_row.at("injectzero_direct") == ProbeVerdict::CacheInjected);

    // stage-1 observations carry the re-encoded names the chain served
    for (const auto& r : campaign.results) {
        if (r.target == vuln.endpoint() && r.payload_id == "injectdot_cname")
            CHECK(r.stage1_observed == "www.target.com.");
        if (r.target == clean.endpoint() && r.payload_id == "injectdot_cname")
            CHECK(r.stage1_observed == "www\\.target.com.");
    }

    // per-payload aggregation: 2 responsive targets each, one injected
    for (const auto& p : report.per_payload) {
        CAPTURE(p.id);
        CHECK(p.denominator == 2);
        CHECK(p.unsupported == 0);
        if (p.id == "injectdot_cname" || p.id == "injectzero_cname") {
            CHECK(p.cache_injected == 1);
            CHECK(p.injected_pct == doctest::Approx(50.0));
        }
    }
    CHECK(report.any_injection_pct == doctest::Approx(50.0));
}

TEST_CASE("scan prefixes correlate with the attacker nameserver log") {
    payloads::ZoneFile zone = make_zone();
    sim::SimServer server(transparent_config(), &zone);
    server.start();

    ScannerConfig cfg;
    cfg.targets = {server.endpoint()};
    cfg.zone = &zone;
    cfg.qps = 0;
    cfg.timeout_ms = 2000;
    cfg.retries = 0;
    cfg.seed = 99;
    Campaign campaign = Scanner(cfg).run();
    server.stop();

    std::set<std::string> logged;
    for (const auto& line : server.ns_log())
        logged.insert(line.prefix);
    size_t correlated = 0;
    for (const auto& r : campaign.results)
        if (!r.prefix.empty() && logged.count(r.prefix))
            ++correlated;
    CHECK(correlated == campaign.results.size());

    // probes never reuse a correlation prefix
    std::set<std::string> used;
    for (const auto& r : campaign.results) {
        CHECK(!used.count(r.prefix));
        used.insert(r.prefix);
    }
}

TEST_CASE("unresponsive targets gate out as unsupported") {
    payloads::ZoneFile zone = make_zone();
    ScannerConfig cfg;
    cfg.targets = {{"127.0.0.1", 9}}; // nothing listens here
    cfg.zone = &zone;
    cfg.qps = 0;
    cfg.timeout_ms = 100;
    cfg.retries = 0;
    cfg.seed = 1;
    Campaign campaign = Scanner(cfg).run();
    Report report = aggregate_report(campaign);

    REQUIRE(report.targets_total == 1);
    CHECK(report.targets_gated == 0);
    CHECK(report.fingerprints.count("unknown") == 1);
    for (const auto& r : campaign.results)
        CHECK(r.verdict == ProbeVerdict::Unsupported);
    for (const auto& p : report.per_payload) {
        CHECK(p.denominator == 0);
        CHECK(p.injected_pct == 0);
    }
    CHECK(report.any_injection_pct == 0);
}

TEST_CASE("aggregation math on a synthetic campaign") {
    Campaign c;
    net::Endpoint t1{"127.0.0.1", 1001};
    net::Endpoint t2{"127.0.0.1", 1002};
    net::Endpoint t3{"127.0.0.1", 1003};
    for (auto& [ep, ok] : std::vector<std::pair<net::Endpoint, bool>>{
             {t1, true}, {t2, true}, {t3, false}}) {
        BaselineResult b;
        b.target = ep;
        b.ok = {{wire::kTypeA, ok}, {wire::kTypeCNAME, true}};
        b.version = ok ? "bind-9.16" : "unknown";
        c.baselines.push_back(b);
    }
    auto add = [&](const net::Endpoint& ep, const char* id, ProbeVerdict v) {
        ProbeResult r;
        r.target = ep;
        r.payload_id = id;
        r.verdict = v;
        c.results.push_back(r);
    };
    add(t1, "p1", ProbeVerdict::CacheInjected);
    add(t1, "p2", ProbeVerdict::Transparent);
    add(t2, "p1", ProbeVerdict::Misinterpreted);
    add(t2, "p2", ProbeVerdict::CacheInjected);
    add(t3, "p1", ProbeVerdict::Unsupported);
    add(t3, "p2", ProbeVerdict::CacheInjected); // ungated: excluded from union

    Report r = aggregate_report(c);
    CHECK(r.targets_total == 3);
    CHECK(r.targets_gated == 2);
    CHECK(r.fingerprints.at("bind-9.16") == 2);

    for (const auto& p : r.per_payload) {
        if (p.id == "p1") {
            CHECK(p.denominator == 2); // unsupported result excluded
            CHECK(p.cache_injected == 1);
            CHECK(p.misinterpreted == 1);
            CHECK(p.injected_pct == doctest::Approx(50.0));
        } else {
            CHECK(p.denominator == 3);
            CHECK(p.cache_injected == 2);
            CHECK(p.injected_pct == doctest::Approx(100.0 * 2 / 3));
        }
    }
    // both gated targets saw at least one injection: 2/2
    CHECK(r.any_injection_pct == doctest::Approx(100.0));
}

TEST_CASE("result serializations are machine-readable") {
    Campaign c;
    ProbeResult r;
    r.target = {"127.0.0.1", 5300};
    r.payload_id = "injectdot_cname";
    r.verdict = ProbeVerdict::CacheInjected;
    r.prefix = "abcdefghijklm";
    r.stage1_observed = "www.target.com.";
    r.stage2_attempted = true;
    r.ts = 1724400000.25;
    c.results.push_back(r);
    BaselineResult b;
    b.target = r.target;
    b.ok = {{wire::kTypeCNAME, true}};
    b.version = "dnsmasq-2.79";
    c.baselines.push_back(b);

    std::string jsonl = results_jsonl(c);
    auto line = nlohmann::json::parse(jsonl.substr(0, jsonl.find('\n')));
    CHECK(line["target"] == "127.0.0.1:5300");
    CHECK(line["payload"] == "injectdot_cname");
    CHECK(line["verdict"] == "CacheInjected");
    CHECK(line["prefix"] == "abcdefghijklm");
    CHECK(line["stage2_attempted"] == true);

    Report report = aggregate_report(c);
    std::string csv = report_csv(report);
    CHECK(csv.find("payload,transparent,modified,misinterpreted,"
                   "cache_injected,no_response,unsupported,denominator,"
                   "injected_pct") == 0);
    CHECK(csv.find("injectdot_cname,0,0,0,1,0,0,1,100") != std::string::npos);

    auto j = nlohmann::json::parse(report_json(report));
    CHECK(j["targets_total"] == 1);
    CHECK(j["fingerprints"]["dnsmasq-2.79"] == 1);
    REQUIRE(j["payloads"].is_array());
    CHECK(j["payloads"][0]["payload"] == "injectdot_cname");
}

TEST_CASE("the global qps cap paces datagram sends") {
    payloads::ZoneFile zone = make_zone();
    sim::SimServer server(transparent_config(), &zone);
    server.start();

    ScannerConfig cfg;
    cfg.targets = {server.endpoint()};
    cfg.zone = &zone;
    cfg.qps = 200;
    cfg.timeout_ms = 2000;
    cfg.retries = 0;
    cfg.seed = 3;
    Campaign campaign = Scanner(cfg).run();

    REQUIRE(campaign.send_times.size() > 10);
    auto times = campaign.send_times;
    std::sort(times.begin(), times.end());
    double span = times.back() - times.front();
    double min_span =
        static_cast<double>(times.size() - 1) / cfg.qps * 0.8; // 20% slack
    CHECK(span >= min_span);
}
