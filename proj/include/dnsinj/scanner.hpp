#pragma once

#include <atomic>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dnsinj/net.hpp"
#include "dnsinj/payloads.hpp"
#include "dnsinj/wire.hpp"

namespace dnsinj::scanner {

struct DnsClientConfig {
    int timeout_ms = 3000;
};

/// One-shot UDP query helper with TCP fallback on truncation. Retries live
/// at the probe layer because each retry must use a fresh query name.
class DnsClient {
public:
    explicit DnsClient(DnsClientConfig cfg = {}) : cfg_(cfg) {}

    std::optional<wire::Message> query_once(const net::Endpoint& server,
                                            const wire::Question& q);

private:
    DnsClientConfig cfg_;
};

enum class ProbeVerdict {
    Transparent,    // payload came back byte-identical
    Modified,       // answered, but the payload was altered or withheld
    Misinterpreted, // answer shows the naive re-encoding of the payload
    CacheInjected,  // stage-2 victim query returned the injected address
    NoResponse,
    Unsupported, // baseline for this record type failed; not probed
};

struct ProbeResult {
    net::Endpoint target;
    std::string payload_id;
    ProbeVerdict verdict = ProbeVerdict::NoResponse;
    std::string prefix;          // correlation label sent on the wire
    std::string stage1_observed; // strict rendering of the delivered name
    bool stage2_attempted = false;
    double ts = 0; // unix seconds at probe start
};

struct BaselineResult {
    net::Endpoint target;
    std::map<uint16_t, bool> ok; // per probed record type
    std::string version;         // version.bind banner or "unknown"

    bool all_ok() const;
};

struct ScannerConfig {
    std::vector<net::Endpoint> targets;
    const payloads::ZoneFile* zone = nullptr;
    double qps = 100.0; // global cap across all workers
    int timeout_ms = 3000;
    int retries = 2; // additional attempts after the first
    uint64_t seed = 1;
    size_t workers = 4;
};

struct Campaign {
    std::vector<BaselineResult> baselines;
    std::vector<ProbeResult> results;
    std::vector<double> send_times; // every datagram send, unix seconds
};

class Scanner {
public:
    explicit Scanner(ScannerConfig cfg);

    Campaign run();
    void abort() { abort_ = true; }

    /// 13 base32 characters: 65 bits of correlation entropy per query.
    static std::string random_prefix(std::mt19937_64& rng);

    /// The benign record type a payload's delivery depends on; nullopt for
    /// payloads outside the resolver-scan scope (reverse and NAPTR suites).
    static std::optional<uint16_t>
    required_baseline_rtype(const payloads::PayloadEntry& entry,
                            const payloads::ZoneFile& zone);

private:
    ScannerConfig cfg_;
    std::atomic<bool> abort_{false};
};

struct PayloadReport {
    std::string id;
    size_t transparent = 0;
    size_t modified = 0;
    size_t misinterpreted = 0;
    size_t cache_injected = 0;
    size_t no_response = 0;
    size_t unsupported = 0;
    size_t denominator = 0; // responsive, baseline-passing population
    double injected_pct = 0;
};

struct Report {
    size_t targets_total = 0;
    size_t targets_gated = 0; // passed every baseline type
    std::vector<PayloadReport> per_payload;
    double any_injection_pct = 0; // gated targets with >=1 CacheInjected
    std::map<std::string, size_t> fingerprints;
    // target -> payload id -> verdict, for matrix rendering
    std::vector<std::pair<std::string, std::map<std::string, ProbeVerdict>>>
        matrix;
};

Report aggregate_report(const Campaign& campaign);

std::string results_jsonl(const Campaign& campaign);
std::string report_csv(const Report& report);
std::string report_json(const Report& report);

const char* verdict_label(ProbeVerdict v);

} // namespace dnsinj::scanner
