#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dnsinj/payloads.hpp"
#include "dnsinj/validation.hpp"
#include "dnsinj/wire.hpp"

namespace dnsinj::sim {

using wire::RawName;

class SimError : public std::runtime_error {
public:
    enum class Code { UnknownPayload, NoCacheInChain };

    SimError(Code code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    Code code() const { return code_; }

private:
    Code code_;
};

enum class RecursiveProfile {
    Transparent,    // passes record bytes through untouched
    DecodeReencode, // decodes names naively to strings, re-encodes on send
};

struct ForwarderConfig {
    bool present = false;
    // dnsmasq-style: answer future queries from CNAME-chain records whose
    // owner lies outside the queried name.
    bool cross_zone_cname_caching = false;
};

struct AppCacheConfig {
    enum class Keying { QueryNameOnly, AllNamesInResponse };
    bool present = false;
    Keying keyed_by = Keying::QueryNameOnly;
};

struct SimChainConfig {
    RecursiveProfile recursive = RecursiveProfile::Transparent;
    ForwarderConfig forwarder;
    validation::DecoderProfile stub = validation::profiles::glibc_like();
    AppCacheConfig app_cache;
    bool lowercase_normalize = false; // recursive lowercases letters only
    std::string version_banner;       // version.bind CH TXT reply; empty refuses
};

struct TraceEvent {
    std::string component;
    std::string event;
};

struct CacheEntry {
    wire::Rdata rdata;
    uint32_t ttl = 60;
    std::string inserted_via; // payload id when known
};

struct ScenarioOutcome {
    bool poisoned = false;
    std::optional<std::pair<RawName, uint16_t>> poisoned_key;
    std::optional<wire::Rdata> observed_answer;
    std::vector<TraceEvent> trace;
};

/// Attacker-nameserver role: wraps lookup_payload results into an
/// authoritative response; NXDOMAIN on miss.
wire::Message sim_answer(const payloads::ZoneFile& zone, const RawName& qname,
                         uint16_t qtype, uint16_t id = 0);

using NsQueryHook =
    std::function<void(const RawName& qname, uint16_t qtype)>;

/// Deterministic stateful model of attacker NS + recursive + optional
/// forwarder + stub + optional application cache. Caches persist across
/// queries, which is the whole point.
class SimChain {
public:
    SimChain(SimChainConfig cfg, const payloads::ZoneFile* zone);

    /// Resolution as a network client of the chain sees it (recursive and
    /// forwarder caches apply; stub and app cache do not).
    wire::Message resolve_wire(const RawName& qname, uint16_t qtype,
                               std::vector<TraceEvent>* trace = nullptr,
                               const std::string& context = {});

    struct AppResult {
        bool answered = false;
        std::optional<wire::Rdata> rdata;
        validation::Verdict stub_verdict = validation::Verdict::Faithful;
        bool from_app_cache = false;
    };

    /// Full chain including the stub decode step and application cache.
    AppResult resolve_app(const RawName& qname, uint16_t qtype,
                          std::vector<TraceEvent>* trace = nullptr,
                          const std::string& context = {});

    const SimChainConfig& config() const { return cfg_; }
    int ns_queries() const { return ns_queries_; }
    void clear_caches();

    std::optional<CacheEntry> forwarder_cached(const RawName& name,
                                               uint16_t rtype) const;
    std::optional<CacheEntry> recursive_cached(const RawName& name,
                                               uint16_t rtype) const;
    std::optional<wire::Rdata> app_cached(const std::string& name_text,
                                          uint16_t rtype) const;

    void set_ns_query_hook(NsQueryHook hook) { ns_hook_ = std::move(hook); }

private:
    wire::Message recursive_resolve(const RawName& qname, uint16_t qtype,
                                    std::vector<TraceEvent>* trace,
                                    const std::string& context);

    using CacheKey = std::pair<RawName, uint16_t>;

    SimChainConfig cfg_;
    const payloads::ZoneFile* zone_;
    std::map<CacheKey, CacheEntry> recursive_cache_;
    std::map<CacheKey, CacheEntry> forwarder_cache_;
    std::map<std::pair<std::string, uint16_t>, wire::Rdata> app_cache_;
    int ns_queries_ = 0;
    NsQueryHook ns_hook_;
};

/// Two-stage cache poisoning scenario: serve the payload, then query the
/// would-be-poisoned name.
ScenarioOutcome run_injection_scenario(const SimChainConfig& cfg,
                                       const payloads::ZoneFile& zone,
                                       const std::string& payload_id,
                                       const RawName& target_domain);

struct StageOutcome {
    std::string stage; // "recursive", "forwarder", "stub"
    validation::DecodedOutcome outcome;
};

/// What each chain stage hands upward for the payload's carried name.
std::vector<StageOutcome> run_forward_lookup(const SimChainConfig& cfg,
                                             const payloads::ZoneFile& zone,
                                             const std::string& payload_id);

/// The domain name a payload entry actually smuggles (CNAME/PTR/SRV target,
/// NAPTR replacement; owner for TXT-only entries).
RawName payload_carried_name(const payloads::PayloadEntry& entry);

/// Naive decode-to-string then re-encode by splitting on dots; models the
/// RFC 1034 non-compliant resolver behaviour.
RawName reencode_naive(const RawName& name);

} // namespace dnsinj::sim
