#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dnsinj/wire.hpp"

namespace dnsinj::payloads {

using wire::RawName;
using wire::ResourceRecord;

enum class Effect { Transparent, CacheInject, AppInject, Oversize };

struct PayloadEntry {
    std::string id;
    std::vector<ResourceRecord> records;
    RawName trigger_qname;
    uint16_t trigger_qtype = wire::kTypeA;
    Effect expected_effect = Effect::Transparent;
    // Free-form notes, e.g. the raw dig-escaped form of ambiguous records.
    std::map<std::string, std::string> metadata;
};

struct ZoneFile {
    RawName origin;
    uint32_t default_ttl = 60;
    std::vector<ResourceRecord> boilerplate; // SOA, NS, baseline records
    std::vector<PayloadEntry> entries;
    RawName target_domain;
    std::array<uint8_t, 4> inject_ip{};

    std::vector<ResourceRecord> all_records() const;
    const PayloadEntry* find(const std::string& id) const;
};

// Baseline owner names (one per probed record type) live in the zone
// boilerplate so chains terminate and scanners have something benign to ask.
RawName baseline_a_name(const RawName& origin);
RawName baseline_cname_name(const RawName& origin);
RawName baseline_srv_name(const RawName& origin);
RawName baseline_txt_name(const RawName& origin);

/// The hostname the injection payloads try to plant: "www" under the
/// victim domain, which both the dot and zero payloads collapse to.
RawName victim_name(const ZoneFile& zone);

/// Materializes the full malicious record catalog for the given attacker
/// and target domains.
ZoneFile build_payload_zone(const RawName& attacker_domain,
                            const RawName& target_domain,
                            std::array<uint8_t, 4> inject_ip);

/// Master-file rendering using strict escaping; parse_zonefile() of the
/// result yields byte-identical records.
std::string emit_zonefile(const ZoneFile& zone);

/// Parses master-file text emitted by emit_zonefile back into records.
std::vector<ResourceRecord> parse_zonefile(const std::string& text);

// Wildcard-prefix matching strips at most this many leading labels, which
// covers the scanner's one random label plus forwarder-added ones.
constexpr size_t kMaxWildcardStrip = 3;

/// Authoritative lookup: exact owner match with randomized-prefix wildcard
/// support. Returns the answer chain; empty means NXDOMAIN upstream.
std::vector<ResourceRecord> lookup_payload(const ZoneFile& zone,
                                           const RawName& qname,
                                           uint16_t qtype);

/// Catalog listing as JSON: id, trigger_qname, qtype, expected_effect.
std::string catalog_json(const ZoneFile& zone);

const char* effect_name(Effect e);

} // namespace dnsinj::payloads
