#include "dnsinj/scanner.hpp"

#include <algorithm>
#include <chrono>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "dnsinj/resolver_sim.hpp"

namespace dnsinj::scanner {

using payloads::PayloadEntry;
using payloads::ZoneFile;
using wire::Message;
using wire::Question;
using wire::RawName;

namespace {

double now_unix() {
    using namespace std::chrono;
    return duration<double>(system_clock::now().time_since_epoch()).count();
}

std::string strict_text(const RawName& n) {
    return wire::to_presentation(n, wire::EscapeStyle::Strict).text;
}

// Global QPS cap shared by all workers; one token per datagram.
class RateLimiter {
public:
    explicit RateLimiter(double qps)
        : interval_(qps > 0 ? std::chrono::duration<double>(1.0 / qps)
                            : std::chrono::duration<double>(0)) {}

    void acquire() {
        if (interval_.count() <= 0)
            return;
        std::chrono::steady_clock::time_point wake;
        {
            std::lock_guard lock(mu_);
            auto now = std::chrono::steady_clock::now();
            if (next_ < now)
                next_ = now;
            wake = next_;
            next_ += std::chrono::duration_cast<
                std::chrono::steady_clock::duration>(interval_);
        }
        std::this_thread::sleep_until(wake);
    }

private:
    std::mutex mu_;
    std::chrono::steady_clock::time_point next_{};
    std::chrono::duration<double> interval_;
};

} // namespace

std::optional<wire::Message> DnsClient::query_once(const net::Endpoint& server,
                                                   const wire::Question& q) {
    static std::atomic<uint16_t> id_source{0x1000};
    Message query;
    query.id = id_source++;
    query.flags.rd = true;
    query.questions.push_back(q);
    std::vector<uint8_t> bytes = wire::encode_message(query);

    auto reply_bytes = net::udp_exchange(server, bytes, cfg_.timeout_ms);
    if (!reply_bytes)
        return std::nullopt;
    Message reply;
    try {
        reply = wire::decode_message(*reply_bytes);
    } catch (const wire::CodecError&) {
        return std::nullopt;
    }
    if (reply.flags.tc) {
        auto tcp_reply =
            net::tcp_exchange(server, wire::frame_tcp(bytes), cfg_.timeout_ms);
        if (tcp_reply) {
            try {
                std::vector<uint8_t> payload = wire::unframe_tcp(*tcp_reply);
                reply = wire::decode_message(payload);
            } catch (const wire::CodecError&) {
            }
        }
    }
    return reply;
}

std::string Scanner::random_prefix(std::mt19937_64& rng) {
    static const char alphabet[] = "abcdefghijklmnopqrstuvwxyz234567";
    std::uniform_int_distribution<int> pick(0, 31);
    std::string out;
    for (int i = 0; i < 13; ++i)
        out.push_back(alphabet[pick(rng)]);
    return out;
}

std::optional<uint16_t>
Scanner::required_baseline_rtype(const PayloadEntry& entry,
                                 const ZoneFile& zone) {
    if (!entry.trigger_qname.ends_with(zone.origin))
        return std::nullopt; // direct-query payloads live outside the zone
    if (entry.trigger_qtype == wire::kTypePTR ||
        entry.trigger_qtype == wire::kTypeNAPTR)
        return std::nullopt; // stub-side suites, not resolver probes
    if (!entry.records.empty() &&
        entry.records.front().rtype == wire::kTypeCNAME)
        return wire::kTypeCNAME;
    return entry.trigger_qtype;
}

Scanner::Scanner(ScannerConfig cfg) : cfg_(std::move(cfg)) {}

namespace {

struct ProbeContext {
    const ScannerConfig* cfg;
    RateLimiter* limiter;
    std::mutex* send_mu;
    std::vector<double>* send_times;
    std::atomic<bool>* abort;
};

std::optional<Message> timed_query(ProbeContext& ctx, DnsClient& client,
                                   const net::Endpoint& target,
                                   const Question& q) {
    ctx.limiter->acquire();
    {
        std::lock_guard lock(*ctx.send_mu);
        ctx.send_times->push_back(now_unix());
    }
    return client.query_once(target, q);
}

std::string fingerprint(ProbeContext& ctx, DnsClient& client,
                        const net::Endpoint& target) {
    Question q{RawName({"version", "bind"}), wire::kTypeTXT, wire::kClassCH};
    auto reply = timed_query(ctx, client, target, q);
    if (!reply)
        return "unknown";
    if (reply->flags.rcode != wire::kRcodeNoError || reply->answers.empty())
        return "refused";
    const auto* txt = std::get_if<wire::TxtRdata>(&reply->answers[0].rdata);
    if (!txt || txt->strings.empty())
        return "unknown";
    return txt->strings[0];
}

BaselineResult probe_baseline(ProbeContext& ctx, DnsClient& client,
                              const net::Endpoint& target,
                              std::mt19937_64& rng) {
    const ZoneFile& zone = *ctx.cfg->zone;
    BaselineResult out;
    out.target = target;
    out.version = fingerprint(ctx, client, target);

    struct BaselineProbe {
        uint16_t rtype;
        RawName qname;
    };
    const std::vector<BaselineProbe> probes = {
        {wire::kTypeA, payloads::baseline_a_name(zone.origin)},
        {wire::kTypeCNAME, payloads::baseline_cname_name(zone.origin)},
        {wire::kTypeSRV, payloads::baseline_srv_name(zone.origin)},
        {wire::kTypeTXT, payloads::baseline_txt_name(zone.origin)},
    };
    for (const auto& probe : probes) {
        bool ok = false;
        for (int attempt = 0; attempt <= ctx.cfg->retries && !ok; ++attempt) {
            if (ctx.abort->load())
                break;
            RawName qname =
                probe.qname.with_prefix(Scanner::random_prefix(rng));
            auto reply =
                timed_query(ctx, client, target, {qname, probe.rtype});
            if (!reply || reply->flags.rcode != wire::kRcodeNoError)
                continue;
            ok = std::any_of(reply->answers.begin(), reply->answers.end(),
                             [&](const wire::ResourceRecord& rr) {
                                 return rr.rtype == probe.rtype;
                             });
        }
        out.ok[probe.rtype] = ok;
    }
    return out;
}

// The name (or text) the payload is supposed to deliver, as observed in a
// response. Empty optional: the response does not carry the payload at all.
std::optional<RawName> observed_payload_name(const PayloadEntry& entry,
                                             const RawName& qname,
                                             const Message& reply) {
    for (auto it = reply.answers.rbegin(); it != reply.answers.rend(); ++it) {
        const auto& rr = *it;
        if (const auto* n = std::get_if<wire::NameRdata>(&rr.rdata)) {
            if (rr.rtype == wire::kTypeCNAME && rr.owner == qname)
                return n->target;
            if (rr.rtype == entry.trigger_qtype)
                return n->target;
        } else if (const auto* s = std::get_if<wire::SrvRdata>(&rr.rdata)) {
            if (rr.rtype == entry.trigger_qtype)
                return s->target;
        } else if (const auto* na = std::get_if<wire::NaptrRdata>(&rr.rdata)) {
            if (rr.rtype == entry.trigger_qtype)
                return na->replacement;
        }
    }
    return std::nullopt;
}

ProbeResult probe_payload(ProbeContext& ctx, DnsClient& client,
                          const net::Endpoint& target,
                          const PayloadEntry& entry, std::mt19937_64& rng) {
    const ZoneFile& zone = *ctx.cfg->zone;
    ProbeResult out;
    out.target = target;
    out.payload_id = entry.id;
    out.ts = now_unix();

    // Oversize payloads (TXT) are judged on delivery of the full text.
    bool txt_payload = entry.trigger_qtype == wire::kTypeTXT;
    const wire::TxtRdata* expected_txt = nullptr;
    if (txt_payload)
        for (const auto& rr : entry.records)
            if (rr.owner == entry.trigger_qname)
                expected_txt = std::get_if<wire::TxtRdata>(&rr.rdata);

    // Direct-query payloads carry the hostile name in the record owner, not
    // in any rdata; those are judged against the (prefixed) query name.
    bool owner_carried =
        !txt_payload && !entry.records.empty() &&
        sim::payload_carried_name(entry) == entry.records.front().owner &&
        !std::holds_alternative<wire::NameRdata>(entry.records.front().rdata);

    RawName expected = sim::payload_carried_name(entry);
    RawName reencoded = sim::reencode_naive(expected);

    std::optional<Message> reply;
    for (int attempt = 0; attempt <= ctx.cfg->retries; ++attempt) {
        if (ctx.abort->load())
            break;
        // One-shot rule: every attempt gets a fresh prefix; a name that may
        // have been consumed upstream is never replayed.
        std::string prefix = Scanner::random_prefix(rng);
        RawName qname = entry.trigger_qname.with_prefix(prefix);
        Question q{qname, entry.trigger_qtype, wire::kClassIN};
        auto first = timed_query(ctx, client, target, q);
        if (!first)
            continue;
        // Second identical query: a caching chain now answers from cache,
        // which is the state stage 2 interrogates.
        auto second = timed_query(ctx, client, target, q);
        reply = second ? second : first;
        out.prefix = prefix;

        if (reply->flags.rcode != wire::kRcodeNoError) {
            out.verdict = ProbeVerdict::Modified;
            break;
        }
        if (txt_payload) {
            const wire::TxtRdata* got = nullptr;
            for (const auto& rr : reply->answers)
                if (rr.rtype == wire::kTypeTXT)
                    got = std::get_if<wire::TxtRdata>(&rr.rdata);
            out.verdict = got && expected_txt && *got == *expected_txt
                              ? ProbeVerdict::Transparent
                              : ProbeVerdict::Modified;
            break;
        }
        std::optional<RawName> observed;
        RawName want_expected = expected;
        RawName want_reencoded = reencoded;
        if (owner_carried) {
            want_expected = qname;
            want_reencoded = sim::reencode_naive(qname);
            for (const auto& rr : reply->answers)
                if (rr.rtype == entry.trigger_qtype)
                    observed = rr.owner;
        } else {
            observed = observed_payload_name(entry, qname, *reply);
        }
        if (!observed) {
            out.verdict = ProbeVerdict::Modified;
            break;
        }
        out.stage1_observed = strict_text(*observed);
        if (*observed == want_expected)
            out.verdict = ProbeVerdict::Transparent;
        else if (*observed == want_reencoded)
            out.verdict = ProbeVerdict::Misinterpreted;
        else
            out.verdict = ProbeVerdict::Modified;
        break;
    }
    if (!reply) {
        out.verdict = ProbeVerdict::NoResponse;
        return out;
    }

    if (entry.expected_effect == payloads::Effect::CacheInject) {
        out.stage2_attempted = true;
        RawName victim = payloads::victim_name(zone);
        Question victim_q{victim, wire::kTypeA, wire::kClassIN};
        for (int attempt = 0; attempt <= ctx.cfg->retries; ++attempt) {
            if (ctx.abort->load())
                break;
            auto stage2 = timed_query(ctx, client, target, victim_q);
            if (!stage2)
                continue;
            wire::Rdata want = wire::ARdata{zone.inject_ip};
            bool injected = std::any_of(
                stage2->answers.begin(), stage2->answers.end(),
                [&](const wire::ResourceRecord& rr) {
                    return rr.owner == victim && rr.rdata == want;
                });
            if (injected)
                out.verdict = ProbeVerdict::CacheInjected;
            break;
        }
    }
    return out;
}

} // namespace

bool BaselineResult::all_ok() const {
    return !ok.empty() &&
           std::all_of(ok.begin(), ok.end(),
                       [](const auto& kv) { return kv.second; });
}

Campaign Scanner::run() {
    if (!cfg_.zone)
        throw std::invalid_argument("scanner needs a payload zone");
    Campaign campaign;
    RateLimiter limiter(cfg_.qps);
    std::mutex send_mu;
    std::mutex out_mu;
    ProbeContext ctx{&cfg_, &limiter, &send_mu, &campaign.send_times, &abort_};

    std::atomic<size_t> next{0};
    size_t nworkers = std::max<size_t>(1, std::min(cfg_.workers,
                                                   cfg_.targets.size()));
    std::vector<std::thread> workers;
    for (size_t w = 0; w < nworkers; ++w) {
        workers.emplace_back([&, w] {
            DnsClient client({cfg_.timeout_ms});
            for (;;) {
                size_t i = next++;
                if (i >= cfg_.targets.size() || abort_.load())
                    return;
                const net::Endpoint& target = cfg_.targets[i];
                // Per-target work is sequential, so at most one probe (two
                // queries back to back) is in flight per target.
                std::mt19937_64 rng(cfg_.seed ^ (0x9e3779b97f4a7c15ULL * (i + 1)));
                BaselineResult baseline =
                    probe_baseline(ctx, client, target, rng);
                std::vector<ProbeResult> local;
                for (const auto& entry : cfg_.zone->entries) {
                    auto need = required_baseline_rtype(entry, *cfg_.zone);
                    if (!need)
                        continue;
                    if (abort_.load())
                        break;
                    auto it = baseline.ok.find(*need);
                    if (it == baseline.ok.end() || !it->second) {
                        ProbeResult r;
                        r.target = target;
                        r.payload_id = entry.id;
                        r.verdict = ProbeVerdict::Unsupported;
                        r.ts = now_unix();
                        local.push_back(std::move(r));
                        continue;
                    }
                    local.push_back(
                        probe_payload(ctx, client, target, entry, rng));
                }
                std::lock_guard lock(out_mu);
                campaign.baselines.push_back(std::move(baseline));
                campaign.results.insert(campaign.results.end(), local.begin(),
                                        local.end());
            }
        });
    }
    for (auto& t : workers)
        t.join();
    return campaign;
}

Report aggregate_report(const Campaign& campaign) {
    Report report;
    report.targets_total = campaign.baselines.size();
    std::map<std::string, bool> gated;
    for (const auto& b : campaign.baselines) {
        gated[b.target.str()] = b.all_ok();
        if (b.all_ok())
            ++report.targets_gated;
        ++report.fingerprints[b.version];
    }

    std::map<std::string, PayloadReport> per_payload;
    std::map<std::string, std::map<std::string, ProbeVerdict>> matrix;
    std::map<std::string, bool> any_injected;
    for (const auto& r : campaign.results) {
        PayloadReport& p = per_payload[r.payload_id];
        p.id = r.payload_id;
        switch (r.verdict) {
        case ProbeVerdict::Transparent: ++p.transparent; break;
        case ProbeVerdict::Modified: ++p.modified; break;
        case ProbeVerdict::Misinterpreted: ++p.misinterpreted; break;
        case ProbeVerdict::CacheInjected: ++p.cache_injected; break;
        case ProbeVerdict::NoResponse: ++p.no_response; break;
        case ProbeVerdict::Unsupported: ++p.unsupported; break;
        }
        if (r.verdict != ProbeVerdict::Unsupported)
            ++p.denominator;
        matrix[r.target.str()][r.payload_id] = r.verdict;
        if (r.verdict == ProbeVerdict::CacheInjected &&
            gated[r.target.str()])
            any_injected[r.target.str()] = true;
    }
    for (auto& [id, p] : per_payload) {
        if (p.denominator > 0)
            p.injected_pct = 100.0 * static_cast<double>(p.cache_injected) /
                             static_cast<double>(p.denominator);
        report.per_payload.push_back(p);
    }
    if (report.targets_gated > 0)
        report.any_injection_pct =
            100.0 * static_cast<double>(any_injected.size()) /
            static_cast<double>(report.targets_gated);
    for (auto& [target, row] : matrix)
        report.matrix.emplace_back(target, row);
    return report;
}

std::string results_jsonl(const Campaign& campaign) {
    std::string out;
    for (const auto& r : campaign.results) {
        nlohmann::json j = {
            {"ts", r.ts},
            {"target", r.target.str()},
            {"payload", r.payload_id},
            {"verdict", verdict_label(r.verdict)},
            {"prefix", r.prefix},
            {"stage2_attempted", r.stage2_attempted},
        };
        if (!r.stage1_observed.empty())
            j["stage1_observed"] = r.stage1_observed;
        out += j.dump() + "\n";
    }
    return out;
}

std::string report_csv(const Report& report) {
    std::ostringstream os;
    os << "payload,transparent,modified,misinterpreted,cache_injected,"
          "no_response,unsupported,denominator,injected_pct\n";
    for (const auto& p : report.per_payload) {
        os << p.id << ',' << p.transparent << ',' << p.modified << ','
           << p.misinterpreted << ',' << p.cache_injected << ','
           << p.no_response << ',' << p.unsupported << ',' << p.denominator
           << ',' << p.injected_pct << '\n';
    }
    return os.str();
}

std::string report_json(const Report& report) {
    nlohmann::json per = nlohmann::json::array();
    for (const auto& p : report.per_payload)
        per.push_back({{"payload", p.id},
                       {"transparent", p.transparent},
                       {"modified", p.modified},
                       {"misinterpreted", p.misinterpreted},
                       {"cache_injected", p.cache_injected},
                       {"no_response", p.no_response},
                       {"unsupported", p.unsupported},
                       {"denominator", p.denominator},
                       {"injected_pct", p.injected_pct}});
    nlohmann::json j = {
        {"targets_total", report.targets_total},
        {"targets_gated", report.targets_gated},
        {"any_injection_pct", report.any_injection_pct},
        {"fingerprints", report.fingerprints},
        {"payloads", per},
    };
    return j.dump(2);
}

const char* verdict_label(ProbeVerdict v) {
    switch (v) {
    case ProbeVerdict::Transparent: return "Transparent";
    case ProbeVerdict::Modified: return "Modified";
    case ProbeVerdict::Misinterpreted: return "Misinterpreted";
    case ProbeVerdict::CacheInjected: return "CacheInjected";
    case ProbeVerdict::NoResponse: return "NoResponse";
    case ProbeVerdict::Unsupported: return "Unsupported";
    }
    return "?";
}

} // namespace dnsinj::scanner
