#pragma once

#include <atomic>
#include <string>
#include <thread>
#include <vector>

#include "dnsinj/net.hpp"
#include "dnsinj/validation.hpp"
#include "dnsinj/wire.hpp"

namespace dnsinj::proxy {

using wire::Message;
using wire::RawName;

enum class Action {
    Pass,        // nothing wrong, forward untouched
    Drop,        // swallow the response entirely
    Refuse,      // replace with an empty REFUSED reply
    StripRecord, // remove tainted records, keep the rest
    EscapeAndPass, // rewrite tainted names into their escaped form
};

enum class ViolationClass {
    DotConfusion,   // 0x2E inside a label
    ZeroTruncation, // 0x00 inside a label
    InvalidHostname, // fails LDH but decodes unambiguously
};

struct Violation {
    ViolationClass cls;
    RawName name;     // the offending name as received
    std::string where; // "owner" or "rdata", plus the record type
};

struct ProxyPolicy {
    Action answer_action = Action::Refuse;
    bool validate_owner_names = true;
    bool validate_rdata_names = true;
    // Glob patterns over presentation labels. A label matching a pattern is
    // excused from InvalidHostname findings (service labels like _ldap).
    // Misinterpretation classes are never excused.
    std::vector<std::string> owner_allowlist{"_*"};
};

/// Parses {"action": "refuse", "allowlist": ["_*"], ...}; missing keys keep
/// their defaults.
ProxyPolicy policy_from_json(const std::string& json_text);
std::string policy_to_json(const ProxyPolicy& policy);

struct SanitizeResult {
    Action action = Action::Pass;
    Message response;          // meaningful unless action == Drop
    std::vector<Violation> violations;
    size_t records_stripped = 0;
    size_t names_escaped = 0;
};

/// Core filtering decision for one upstream response. Tainted answer
/// records trigger the policy action; tainted authority/additional records
/// are always stripped.
SanitizeResult sanitize_response(const Message& response,
                                 const ProxyPolicy& policy);

/// '*' and '?' glob match over a single presentation label.
bool glob_match(const std::string& pattern, const std::string& text);

struct ProxyStats {
    std::atomic<uint64_t> responses_total{0};
    std::atomic<uint64_t> passed{0};
    std::atomic<uint64_t> refused{0};
    std::atomic<uint64_t> dropped{0};
    std::atomic<uint64_t> records_stripped{0};
    std::atomic<uint64_t> names_escaped{0};
    std::atomic<uint64_t> upstream_timeouts{0};
    std::atomic<uint64_t> dot_confusion{0};
    std::atomic<uint64_t> zero_truncation{0};
    std::atomic<uint64_t> invalid_hostname{0};

    std::string summary_json() const;
};

/// Blocking UDP+TCP forwarding proxy. Queries pass through untouched;
/// responses go through sanitize_response. Upstream timeout yields SERVFAIL.
class Proxy {
public:
    Proxy(ProxyPolicy policy, net::Endpoint upstream, uint16_t port = 0,
          int upstream_timeout_ms = 3000);
    ~Proxy();
    Proxy(const Proxy&) = delete;
    Proxy& operator=(const Proxy&) = delete;

    void start();
    void stop();
    net::Endpoint endpoint() const { return {"127.0.0.1", port_}; }
    const ProxyStats& stats() const { return stats_; }

private:
    void udp_loop();
    void tcp_loop();
    std::vector<uint8_t> process(const std::vector<uint8_t>& query_bytes);

    ProxyPolicy policy_;
    net::Endpoint upstream_;
    int upstream_timeout_ms_;
    net::UdpSocket udp_;
    int tcp_fd_ = -1;
    uint16_t port_ = 0;
    std::thread udp_thread_;
    std::thread tcp_thread_;
    std::atomic<bool> running_{false};
    ProxyStats stats_;
};

const char* action_name(Action a);
const char* violation_name(ViolationClass c);

} // namespace dnsinj::proxy
