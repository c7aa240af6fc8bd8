#include "dnsinj/proxy.hpp"

#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cstring>
#include <set>

#include <json.hpp>

namespace dnsinj::proxy {

using validation::Misinterpretation;
using wire::NameRdata;
using wire::RawName;
using wire::ResourceRecord;

bool glob_match(const std::string& pattern, const std::string& text) {
    size_t p = 0, t = 0;
    size_t star_p = std::string::npos, star_t = 0;
    while (t < text.size()) {
        if (p < pattern.size() &&
            (pattern[p] == '?' || pattern[p] == text[t])) {
            ++p;
            ++t;
        } else if (p < pattern.size() && pattern[p] == '*') {
            star_p = p++;
            star_t = t;
        } else if (star_p != std::string::npos) {
            p = star_p + 1;
            t = ++star_t;
        } else {
            return false;
        }
    }
    while (p < pattern.size() && pattern[p] == '*')
        ++p;
    return p == pattern.size();
}

namespace {

bool label_is_ldh(const std::string& label) {
    if (label.empty() || label.front() == '-' || label.back() == '-')
        return false;
    for (unsigned char c : label)
        if (!(std::isalnum(c) || c == '-'))
            return false;
    return true;
}

bool label_allowlisted(const std::string& label,
                       const std::vector<std::string>& patterns) {
    return std::any_of(patterns.begin(), patterns.end(),
                       [&](const std::string& p) { return glob_match(p, label); });
}

// One escaped label, kept as literal label content. Dots use the decimal
// form so the rewritten label carries no 0x2E or 0x00 byte at all; naive
// decoders downstream print "www\046target" instead of misreading a dot.
std::string escape_label(const std::string& label) {
    std::string out;
    char buf[5];
    for (unsigned char c : label) {
        if (c == '\\') {
            out += "\\\\";
        } else if (c == '.' || c < 0x21 || c > 0x7E) {
            std::snprintf(buf, sizeof buf, "\\%03u", c);
            out += buf;
        } else {
            out.push_back(static_cast<char>(c));
        }
    }
    return out;
}

RawName escape_name(const RawName& name) {
    std::vector<std::string> labels;
    for (const auto& l : name.labels())
        labels.push_back(escape_label(l));
    return RawName(std::move(labels));
}

void check_name(const RawName& name, const std::string& where,
                const ProxyPolicy& policy, std::vector<Violation>& out) {
    Misinterpretation mis = validation::classify_misinterpretation(name);
    if (mis == Misinterpretation::DotConfusion || mis == Misinterpretation::Both)
        out.push_back({ViolationClass::DotConfusion, name, where});
    if (mis == Misinterpretation::ZeroTruncation || mis == Misinterpretation::Both)
        out.push_back({ViolationClass::ZeroTruncation, name, where});
    if (mis != Misinterpretation::None)
        return; // already fatal; hostname shape is moot
    for (const auto& label : name.labels()) {
        if (label_is_ldh(label))
            continue;
        // Service labels like _ldap are legitimate non-hostnames; the
        // allowlist excuses exactly this class, never misinterpretations.
        if (label_allowlisted(label, policy.owner_allowlist))
            continue;
        out.push_back({ViolationClass::InvalidHostname, name, where});
        return;
    }
}

struct RecordCheck {
    std::vector<Violation> violations;
    std::vector<RawName*> tainted_names; // for EscapeAndPass rewrites
};

RecordCheck check_record(ResourceRecord& rr, const ProxyPolicy& policy) {
    RecordCheck out;
    auto probe = [&](RawName& n, const std::string& where) {
        size_t before = out.violations.size();
        check_name(n, where + " " + wire::rtype_name(rr.rtype), policy,
                   out.violations);
        if (out.violations.size() > before)
            out.tainted_names.push_back(&n);
    };
    if (policy.validate_owner_names)
        probe(rr.owner, "owner");
    if (policy.validate_rdata_names) {
        // TXT rdata is free-form text, never a domain name; it is exempt by
        // construction since only name-bearing rdata is probed.
        if (auto* n = std::get_if<NameRdata>(&rr.rdata))
            probe(n->target, "rdata");
        else if (auto* s = std::get_if<wire::SrvRdata>(&rr.rdata))
            probe(s->target, "rdata");
        else if (auto* na = std::get_if<wire::NaptrRdata>(&rr.rdata))
            probe(na->replacement, "rdata");
        else if (auto* soa = std::get_if<wire::SoaRdata>(&rr.rdata)) {
            probe(soa->mname, "rdata");
        }
    }
    return out;
}

} // namespace

SanitizeResult sanitize_response(const Message& response,
                                 const ProxyPolicy& policy) {
    SanitizeResult out;
    out.response = response;

    std::vector<size_t> tainted_answers;
    for (size_t i = 0; i < out.response.answers.size(); ++i) {
        RecordCheck rc = check_record(out.response.answers[i], policy);
        if (!rc.violations.empty()) {
            tainted_answers.push_back(i);
            out.violations.insert(out.violations.end(), rc.violations.begin(),
                                  rc.violations.end());
        }
    }

    // Authority and additional records are never worth refusing over; they
    // are silently stripped regardless of the answer action.
    auto scrub_section = [&](std::vector<ResourceRecord>& section) {
        auto it = std::remove_if(section.begin(), section.end(),
                                 [&](ResourceRecord& rr) {
                                     RecordCheck rc = check_record(rr, policy);
                                     if (rc.violations.empty())
                                         return false;
                                     out.violations.insert(
                                         out.violations.end(),
                                         rc.violations.begin(),
                                         rc.violations.end());
                                     ++out.records_stripped;
                                     return true;
                                 });
        section.erase(it, section.end());
    };
    scrub_section(out.response.authority);
    scrub_section(out.response.additional);

    if (tainted_answers.empty()) {
        out.action =
            out.records_stripped > 0 ? Action::StripRecord : Action::Pass;
        return out;
    }

    out.action = policy.answer_action;
    switch (policy.answer_action) {
    case Action::Pass:
        break;
    case Action::Drop:
        break;
    case Action::Refuse: {
        Message refused;
        refused.id = response.id;
        refused.flags = response.flags;
        refused.flags.qr = true;
        refused.flags.rcode = wire::kRcodeRefused;
        refused.questions = response.questions;
        out.response = std::move(refused);
        break;
    }
    case Action::StripRecord: {
        // A stripped CNAME poisons everything it pointed at: the rest of
        // the chain is attacker-chosen data.
        std::set<size_t> strip(tainted_answers.begin(), tainted_answers.end());
        std::vector<RawName> poisoned;
        for (size_t i : strip)
            if (auto* n = std::get_if<NameRdata>(
                    &out.response.answers[i].rdata))
                poisoned.push_back(n->target);
        bool grew = true;
        while (grew) {
            grew = false;
            for (size_t i = 0; i < out.response.answers.size(); ++i) {
                if (strip.count(i))
                    continue;
                const auto& rr = out.response.answers[i];
                if (std::find(poisoned.begin(), poisoned.end(), rr.owner) ==
                    poisoned.end())
                    continue;
                strip.insert(i);
                grew = true;
                if (auto* n = std::get_if<NameRdata>(&rr.rdata))
                    poisoned.push_back(n->target);
            }
        }
        std::vector<ResourceRecord> kept;
        for (size_t i = 0; i < out.response.answers.size(); ++i)
            if (!strip.count(i))
                kept.push_back(out.response.answers[i]);
        out.records_stripped += strip.size();
        out.response.answers = std::move(kept);
        break;
    }
    case Action::EscapeAndPass: {
        for (size_t i : tainted_answers) {
            RecordCheck rc = check_record(out.response.answers[i], policy);
            for (RawName* n : rc.tainted_names) {
                *n = escape_name(*n);
                ++out.names_escaped;
            }
        }
        break;
    }
    }
    return out;
}

ProxyPolicy policy_from_json(const std::string& json_text) {
    ProxyPolicy policy;
    nlohmann::json j = nlohmann::json::parse(json_text);
    if (j.contains("action")) {
        std::string a = j["action"];
        if (a == "drop")
            policy.answer_action = Action::Drop;
        else if (a == "refuse")
            policy.answer_action = Action::Refuse;
        else if (a == "strip")
            policy.answer_action = Action::StripRecord;
        else if (a == "escape")
            policy.answer_action = Action::EscapeAndPass;
        else
            throw std::invalid_argument("unknown proxy action: " + a);
    }
    if (j.contains("validate_owner_names"))
        policy.validate_owner_names = j["validate_owner_names"];
    if (j.contains("validate_rdata_names"))
        policy.validate_rdata_names = j["validate_rdata_names"];
    if (j.contains("allowlist"))
        policy.owner_allowlist =
            j["allowlist"].get<std::vector<std::string>>();
    return policy;
}

std::string policy_to_json(const ProxyPolicy& policy) {
    const char* a = "refuse";
    switch (policy.answer_action) {
    case Action::Drop: a = "drop"; break;
    case Action::Refuse: a = "refuse"; break;
    case Action::StripRecord: a = "strip"; break;
    case Action::EscapeAndPass: a = "escape"; break;
    case Action::Pass: a = "pass"; break;
    }
    nlohmann::json j = {
        {"action", a},
        {"validate_owner_names", policy.validate_owner_names},
        {"validate_rdata_names", policy.validate_rdata_names},
        {"allowlist", policy.owner_allowlist},
    };
    return j.dump(2);
}

std::string ProxyStats::summary_json() const {
    nlohmann::json j = {
        {"responses_total", responses_total.load()},
        {"passed", passed.load()},
        {"refused", refused.load()},
        {"dropped", dropped.load()},
        {"records_stripped", records_stripped.load()},
        {"names_escaped", names_escaped.load()},
        {"upstream_timeouts", upstream_timeouts.load()},
        {"violations",
         {{"dot_confusion", dot_confusion.load()},
          {"zero_truncation", zero_truncation.load()},
          {"invalid_hostname", invalid_hostname.load()}}},
    };
    return j.dump(2);
}

Proxy::Proxy(ProxyPolicy policy, net::Endpoint upstream, uint16_t port,
             int upstream_timeout_ms)
    : policy_(std::move(policy)), upstream_(std::move(upstream)),
      upstream_timeout_ms_(upstream_timeout_ms) {
    udp_.bind({"127.0.0.1", port});
    port_ = udp_.local_port();

    tcp_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (tcp_fd_ < 0)
        throw std::runtime_error("proxy tcp socket failed");
    int one = 1;
    setsockopt(tcp_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port_);
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    if (::bind(tcp_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
        ::listen(tcp_fd_, 16) != 0)
        throw std::runtime_error("proxy tcp bind/listen failed");

    timeval tv{0, 50 * 1000};
    setsockopt(tcp_fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
}

Proxy::~Proxy() {
    stop();
    if (tcp_fd_ >= 0)
        ::close(tcp_fd_);
}

void Proxy::start() {
    if (running_.exchange(true))
        return;
    udp_thread_ = std::thread([this] { udp_loop(); });
    tcp_thread_ = std::thread([this] { tcp_loop(); });
}

void Proxy::stop() {
    if (!running_.exchange(false))
        return;
    if (udp_thread_.joinable())
        udp_thread_.join();
    if (tcp_thread_.joinable())
        tcp_thread_.join();
}

std::vector<uint8_t> Proxy::process(const std::vector<uint8_t>& query_bytes) {
    auto servfail = [&]() -> std::vector<uint8_t> {
        Message fail;
        try {
            Message q = wire::decode_message(query_bytes);
            fail.id = q.id;
            fail.questions = q.questions;
        } catch (const wire::CodecError&) {
        }
        fail.flags.qr = true;
        fail.flags.rcode = wire::kRcodeServFail;
        return wire::encode_message(fail);
    };

    auto upstream_bytes =
        net::udp_exchange(upstream_, query_bytes, upstream_timeout_ms_);
    if (!upstream_bytes) {
        ++stats_.upstream_timeouts;
        return servfail();
    }

    Message response;
    try {
        response = wire::decode_message(*upstream_bytes);
    } catch (const wire::CodecError&) {
        return servfail();
    }

    SanitizeResult result = sanitize_response(response, policy_);
    ++stats_.responses_total;
    for (const auto& v : result.violations) {
        switch (v.cls) {
        case ViolationClass::DotConfusion: ++stats_.dot_confusion; break;
        case ViolationClass::ZeroTruncation: ++stats_.zero_truncation; break;
        case ViolationClass::InvalidHostname: ++stats_.invalid_hostname; break;
        }
    }
    stats_.records_stripped += result.records_stripped;
    stats_.names_escaped += result.names_escaped;
    switch (result.action) {
    case Action::Pass: ++stats_.passed; break;
    case Action::Refuse: ++stats_.refused; break;
    case Action::Drop: ++stats_.dropped; return {};
    case Action::StripRecord: break;
    case Action::EscapeAndPass: break;
    }
    try {
        return wire::encode_message(result.response);
    } catch (const wire::CodecError&) {
        // escape rewriting can overflow the 63-octet label cap
        return servfail();
    }
}

void Proxy::udp_loop() {
    while (running_) {
        auto dgram = udp_.recv(50);
        if (!dgram)
            continue;
        std::vector<uint8_t> reply = process(dgram->payload);
        if (!reply.empty())
            udp_.send_to(dgram->peer, reply);
    }
}

void Proxy::tcp_loop() {
    while (running_) {
        int client = ::accept(tcp_fd_, nullptr, nullptr);
        if (client < 0)
            continue;
        timeval tv{2, 0};
        setsockopt(client, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
        std::vector<uint8_t> buf;
        size_t want = 2;
        bool ok = true;
        while (buf.size() < want) {
            uint8_t chunk[4096];
            ssize_t n = ::recv(client, chunk, sizeof chunk, 0);
            if (n <= 0) {
                ok = false;
                break;
            }
            buf.insert(buf.end(), chunk, chunk + n);
            if (buf.size() >= 2)
                want = 2 + (static_cast<size_t>(buf[0]) << 8 | buf[1]);
        }
        if (ok) {
            std::vector<uint8_t> query(buf.begin() + 2, buf.end());
            std::vector<uint8_t> reply = process(query);
            if (!reply.empty()) {
                std::vector<uint8_t> framed = wire::frame_tcp(reply);
                size_t sent = 0;
                while (sent < framed.size()) {
                    ssize_t n = ::send(client, framed.data() + sent,
                                       framed.size() - sent, 0);
                    if (n <= 0)
                        break;
                    sent += static_cast<size_t>(n);
                }
            }
        }
        ::close(client);
    }
}

const char* action_name(Action a) {
    switch (a) {
    case Action::Pass: return "Pass";
    case Action::Drop: return "Drop";
    case Action::Refuse: return "Refuse";
    case Action::StripRecord: return "StripRecord";
    case Action::EscapeAndPass: return "EscapeAndPass";
    }
    return "?";
}

const char* violation_name(ViolationClass c) {
    switch (c) {
    case ViolationClass::DotConfusion: return "DotConfusion";
    case ViolationClass::ZeroTruncation: return "ZeroTruncation";
    case ViolationClass::InvalidHostname: return "InvalidHostname";
    }
    return "?";
}

} // namespace dnsinj::proxy
