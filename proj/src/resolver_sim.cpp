#include "dnsinj/resolver_sim.hpp"

#include <algorithm>

namespace dnsinj::sim {

namespace {

using validation::DecoderProfile;
using wire::EscapeStyle;
using wire::Message;
using wire::NameRdata;
using wire::Rdata;
using wire::ResourceRecord;

DecoderProfile transparent_profile() {
    return {"transparent", EscapeStyle::Strict, false, false};
}

DecoderProfile naive_profile() {
    return {"naive", EscapeStyle::Naive, false, false};
}

void trace_push(std::vector<TraceEvent>* trace, std::string component,
                std::string event) {
    if (trace)
        trace->push_back({std::move(component), std::move(event)});
}

std::string strict_text(const RawName& name) {
    return wire::to_presentation(name, EscapeStyle::Strict).text;
}

// Rewrites every domain name embedded in a record. Used for the
// decode/re-encode and lowercasing recursive behaviours.
template <typename Fn>
void map_record_names(ResourceRecord& rr, Fn&& fn) {
    rr.owner = fn(rr.owner);
    if (auto* n = std::get_if<NameRdata>(&rr.rdata))
        n->target = fn(n->target);
    else if (auto* s = std::get_if<wire::SrvRdata>(&rr.rdata))
        s->target = fn(s->target);
    else if (auto* na = std::get_if<wire::NaptrRdata>(&rr.rdata))
        na->replacement = fn(na->replacement);
    else if (auto* soa = std::get_if<wire::SoaRdata>(&rr.rdata)) {
        soa->mname = fn(soa->mname);
        soa->rname = fn(soa->rname);
    }
}

std::vector<const RawName*> record_names(const ResourceRecord& rr) {
    std::vector<const RawName*> out{&rr.owner};
    if (const auto* n = std::get_if<NameRdata>(&rr.rdata))
        out.push_back(&n->target);
    else if (const auto* s = std::get_if<wire::SrvRdata>(&rr.rdata))
        out.push_back(&s->target);
    else if (const auto* na = std::get_if<wire::NaptrRdata>(&rr.rdata))
        out.push_back(&na->replacement);
    return out;
}

// Application cache keys compare the strings apps would compare: trailing
// root dots stripped so naive and strict renderings of the same clean name
// collide the way they do in real configs.
std::string app_key_text(const std::string& text) {
    if (text.size() > 1 && text.back() == '.')
        return text.substr(0, text.size() - 1);
    return text;
}

} // namespace

RawName reencode_naive(const RawName& name) {
    return RawName::from_dotted(
        wire::to_presentation(name, EscapeStyle::Naive).text);
}

wire::Message sim_answer(const payloads::ZoneFile& zone, const RawName& qname,
                         uint16_t qtype, uint16_t id) {
    Message msg;
    msg.id = id;
    msg.flags.qr = true;
    msg.flags.aa = true;
    msg.questions.push_back({qname, qtype, wire::kClassIN});
    if (!qname.ends_with(zone.origin)) {
        msg.flags.rcode = wire::kRcodeRefused;
        return msg;
    }
    msg.answers = payloads::lookup_payload(zone, qname, qtype);
    if (msg.answers.empty()) {
        msg.flags.rcode = wire::kRcodeNxDomain;
        for (const auto& rr : zone.boilerplate)
            if (rr.rtype == wire::kTypeSOA) {
                msg.authority.push_back(rr);
                break;
            }
    }
    return msg;
}

SimChain::SimChain(SimChainConfig cfg, const payloads::ZoneFile* zone)
    : cfg_(std::move(cfg)), zone_(zone) {}

void SimChain::clear_caches() {
    recursive_cache_.clear();
    forwarder_cache_.clear();
    app_cache_.clear();
}

std::optional<CacheEntry> SimChain::forwarder_cached(const RawName& name,
                                                     uint16_t rtype) const {
    auto it = forwarder_cache_.find({name, rtype});
    if (it == forwarder_cache_.end())
        return std::nullopt;
    return it->second;
}

std::optional<CacheEntry> SimChain::recursive_cached(const RawName& name,
                                                     uint16_t rtype) const {
    auto it = recursive_cache_.find({name, rtype});
    if (it == recursive_cache_.end())
        return std::nullopt;
    return it->second;
}

std::optional<wire::Rdata> SimChain::app_cached(const std::string& name_text,
                                                uint16_t rtype) const {
    auto it = app_cache_.find({app_key_text(name_text), rtype});
    if (it == app_cache_.end())
        return std::nullopt;
    return it->second;
}

namespace {

// Follows CNAME entries inside one cache; a hit requires the chain to end
// in a record of the requested type.
std::optional<std::vector<ResourceRecord>>
cache_chase(const std::map<std::pair<RawName, uint16_t>, CacheEntry>& cache,
            const RawName& qname, uint16_t qtype) {
    std::vector<ResourceRecord> answers;
    RawName cur = qname;
    for (int hops = 0; hops < 9; ++hops) {
        auto direct = cache.find({cur, qtype});
        if (direct != cache.end()) {
            answers.push_back(
                {cur, qtype, wire::kClassIN, direct->second.ttl,
                 direct->second.rdata});
            return answers;
        }
        if (qtype == wire::kTypeCNAME)
            break;
        auto alias = cache.find({cur, wire::kTypeCNAME});
        if (alias == cache.end())
            break;
        answers.push_back({cur, wire::kTypeCNAME, wire::kClassIN,
                           alias->second.ttl, alias->second.rdata});
        cur = std::get<NameRdata>(alias->second.rdata).target;
    }
    return std::nullopt;
}

} // namespace

wire::Message SimChain::recursive_resolve(const RawName& qname, uint16_t qtype,
                                          std::vector<TraceEvent>* trace,
                                          const std::string& context) {
    Message msg;
    msg.flags.qr = true;
    msg.flags.ra = true;
    msg.questions.push_back({qname, qtype, wire::kClassIN});

    if (auto hit = cache_chase(recursive_cache_, qname, qtype)) {
        trace_push(trace, "recursive",
                   "cache hit " + strict_text(qname) + " " +
                       wire::rtype_name(qtype));
        msg.answers = std::move(*hit);
        return msg;
    }
    trace_push(trace, "recursive", "cache miss, contacting nameserver");

    ++ns_queries_;
    if (ns_hook_)
        ns_hook_(qname, qtype);
    Message upstream = sim_answer(*zone_, qname, qtype);
    trace_push(trace, "nameserver",
               "answered " + std::to_string(upstream.answers.size()) +
                   " record(s), rcode " +
                   std::to_string(upstream.flags.rcode));

    if (cfg_.recursive == RecursiveProfile::DecodeReencode) {
        for (auto& rr : upstream.answers)
            map_record_names(rr, [&](const RawName& n) {
                RawName re = reencode_naive(n);
                if (re != n)
                    trace_push(trace, "recursive",
                               "re-encoded " + strict_text(n) + " as " +
                                   strict_text(re));
                return re;
            });
    }
    if (cfg_.lowercase_normalize)
        for (auto& rr : upstream.answers)
            map_record_names(rr,
                             [](const RawName& n) { return n.lowercased(); });

    for (const auto& rr : upstream.answers)
        if (rr.owner == qname) {
            recursive_cache_[{rr.owner, rr.rtype}] =
                {rr.rdata, rr.ttl, context};
            trace_push(trace, "recursive",
                       "cached " + strict_text(rr.owner) + " " +
                           wire::rtype_name(rr.rtype));
        }

    msg.flags.rcode = upstream.flags.rcode;
    msg.flags.aa = false;
    msg.answers = std::move(upstream.answers);
    msg.authority = std::move(upstream.authority);
    return msg;
}

wire::Message SimChain::resolve_wire(const RawName& qname, uint16_t qtype,
                                     std::vector<TraceEvent>* trace,
                                     const std::string& context) {
    if (!cfg_.forwarder.present)
        return recursive_resolve(qname, qtype, trace, context);

    if (auto hit = cache_chase(forwarder_cache_, qname, qtype)) {
        trace_push(trace, "forwarder",
                   "cache hit " + strict_text(qname) + " " +
                       wire::rtype_name(qtype));
        Message msg;
        msg.flags.qr = true;
        msg.flags.ra = true;
        msg.questions.push_back({qname, qtype, wire::kClassIN});
        msg.answers = std::move(*hit);
        return msg;
    }
    trace_push(trace, "forwarder", "cache miss, asking recursive");

    Message msg = recursive_resolve(qname, qtype, trace, context);
    for (const auto& rr : msg.answers) {
        bool own = rr.owner == qname;
        if (!own && !cfg_.forwarder.cross_zone_cname_caching)
            continue;
        forwarder_cache_[{rr.owner, rr.rtype}] = {rr.rdata, rr.ttl, context};
        trace_push(trace, "forwarder",
                   std::string(own ? "cached " : "cached cross-zone ") +
                       strict_text(rr.owner) + " " +
                       wire::rtype_name(rr.rtype));
    }
    return msg;
}

SimChain::AppResult SimChain::resolve_app(const RawName& qname, uint16_t qtype,
                                          std::vector<TraceEvent>* trace,
                                          const std::string& context) {
    AppResult out;
    std::string query_key =
        app_key_text(wire::to_presentation(qname, cfg_.stub.escape_style).text);

    if (cfg_.app_cache.present) {
        auto it = app_cache_.find({query_key, qtype});
        if (it != app_cache_.end()) {
            trace_push(trace, "app-cache", "hit " + query_key);
            out.answered = true;
            out.rdata = it->second;
            out.from_app_cache = true;
            return out;
        }
    }

    Message msg = resolve_wire(qname, qtype, trace, context);
    if (msg.flags.rcode != wire::kRcodeNoError || msg.answers.empty()) {
        trace_push(trace, "stub", "no usable answer");
        return out;
    }

    // The stub decodes every name in the answer section; the worst verdict
    // across them is what the application experiences.
    auto rank = [](validation::Verdict v) {
        switch (v) {
        case validation::Verdict::Faithful: return 0;
        case validation::Verdict::Misinterpreted: return 1;
        case validation::Verdict::Truncated: return 2;
        case validation::Verdict::Rejected: return 3;
        }
        return 0;
    };
    std::vector<std::string> seen_texts;
    for (const auto& rr : msg.answers)
        for (const RawName* n : record_names(rr)) {
            validation::DecodedOutcome o =
                validation::process_name(*n, cfg_.stub);
            if (rank(o.verdict) > rank(out.stub_verdict))
                out.stub_verdict = o.verdict;
            seen_texts.push_back(app_key_text(o.presentation.text));
        }
    trace_push(trace, "stub",
               std::string("verdict ") +
                   validation::verdict_name(out.stub_verdict));
    if (out.stub_verdict == validation::Verdict::Rejected)
        return out;

    const ResourceRecord* final_rr = nullptr;
    for (const auto& rr : msg.answers)
        if (rr.rtype == qtype)
            final_rr = &rr;
    if (!final_rr)
        final_rr = &msg.answers.back();
    out.answered = true;
    out.rdata = final_rr->rdata;

    if (cfg_.app_cache.present) {
        std::vector<std::string> keys{query_key};
        if (cfg_.app_cache.keyed_by ==
            AppCacheConfig::Keying::AllNamesInResponse)
            keys.insert(keys.end(), seen_texts.begin(), seen_texts.end());
        for (const auto& k : keys) {
            if (app_cache_.emplace(std::pair{k, qtype}, *out.rdata).second)
                trace_push(trace, "app-cache", "stored " + k);
        }
    }
    return out;
}

RawName payload_carried_name(const payloads::PayloadEntry& entry) {
    for (const auto& rr : entry.records) {
        if (const auto* n = std::get_if<NameRdata>(&rr.rdata))
            return n->target;
        if (const auto* s = std::get_if<wire::SrvRdata>(&rr.rdata))
            return s->target;
        if (const auto* na = std::get_if<wire::NaptrRdata>(&rr.rdata))
            return na->replacement;
    }
    return entry.records.empty() ? entry.trigger_qname
                                 : entry.records.front().owner;
}

ScenarioOutcome run_injection_scenario(const SimChainConfig& cfg,
                                       const payloads::ZoneFile& zone,
                                       const std::string& payload_id,
                                       const RawName& target_domain) {
    const payloads::PayloadEntry* entry = zone.find(payload_id);
    if (!entry)
        throw SimError(SimError::Code::UnknownPayload,
                       "unknown payload id: " + payload_id);
    if (!cfg.forwarder.present && !cfg.app_cache.present)
        throw SimError(SimError::Code::NoCacheInChain,
                       "injection scenario needs a forwarder or app cache");

    ScenarioOutcome out;
    SimChain chain(cfg, &zone);

    trace_push(&out.trace, "scenario",
               "stage1: deliver payload " + payload_id + " via " +
                   strict_text(entry->trigger_qname));
    chain.resolve_app(entry->trigger_qname, entry->trigger_qtype, &out.trace,
                      payload_id);

    int ns_before = chain.ns_queries();
    trace_push(&out.trace, "scenario",
               "stage2: query victim name " + strict_text(target_domain));
    SimChain::AppResult victim =
        chain.resolve_app(target_domain, wire::kTypeA, &out.trace, "victim");
    int ns_during_stage2 = chain.ns_queries() - ns_before;
    trace_push(&out.trace, "scenario",
               "stage2 contacted nameserver " +
                   std::to_string(ns_during_stage2) + " time(s)");

    wire::Rdata want = wire::ARdata{zone.inject_ip};
    out.poisoned = victim.answered && victim.rdata && *victim.rdata == want &&
                   ns_during_stage2 == 0;
    if (victim.rdata)
        out.observed_answer = victim.rdata;
    if (out.poisoned)
        out.poisoned_key = {{target_domain, wire::kTypeA}};
    trace_push(&out.trace, "scenario",
               out.poisoned ? "poisoned=true" : "poisoned=false");
    return out;
}

std::vector<StageOutcome> run_forward_lookup(const SimChainConfig& cfg,
                                             const payloads::ZoneFile& zone,
                                             const std::string& payload_id) {
    const payloads::PayloadEntry* entry = zone.find(payload_id);
    if (!entry)
        throw SimError(SimError::Code::UnknownPayload,
                       "unknown payload id: " + payload_id);

    std::vector<StageOutcome> stages;
    RawName current = payload_carried_name(*entry);

    if (cfg.recursive == RecursiveProfile::DecodeReencode) {
        stages.push_back(
            {"recursive", validation::process_name(current, naive_profile())});
        current = reencode_naive(current);
    } else {
        stages.push_back({"recursive", validation::process_name(
                                           current, transparent_profile())});
    }
    if (cfg.lowercase_normalize)
        current = current.lowercased();

    if (cfg.forwarder.present)
        stages.push_back({"forwarder", validation::process_name(
                                           current, transparent_profile())});

    stages.push_back({"stub", validation::process_name(current, cfg.stub)});
    return stages;
}

} // namespace dnsinj::sim
