#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include "dnsinj/proxy.hpp"
#include "dnsinj/scanner.hpp"
#include "dnsinj/sim_server.hpp"

using namespace dnsinj;
using namespace dnsinj::proxy;
using dnsinj::wire::RawName;

namespace {

wire::Message answer_msg(std::vector<wire::ResourceRecord> answers,
                         uint16_t qtype = wire::kTypeA) {
    wire::Message msg;
    msg.id = 0x4242;
    msg.flags.qr = true;
    msg.flags.ra = true;
    if (!answers.empty())
        msg.questions.push_back({answers.front().owner, qtype, wire::kClassIN});
    msg.answers = std::move(answers);
    return msg;
}

const RawName kDotted({"www.target", "com"});
const RawName kZeroed(
    {"www", "target", std::string("com\0", 4), "attacker", "com"});

} // namespace

TEST_CASE("glob matching over labels") {
    CHECK(glob_match("_*", "_ldap"));
    CHECK(glob_match("_*", "_"));
    CHECK(!glob_match("_*", "ldap"));
    CHECK(glob_match("*", "anything at all"));
    CHECK(glob_match("*", ""));
    CHECK(glob_match("a?c", "abc"));
    CHECK(!glob_match("a?c", "ac"));
    CHECK(glob_match("xn--*", "xn--nxasmq6b"));
    CHECK(glob_match("a*b*c", "a-x-b-y-c"));
    CHECK(!glob_match("a*b*c", "a-x-b-y"));
    CHECK(!glob_match("", "x"));
    CHECK(glob_match("", ""));
}

TEST_CASE("zero-spliced answer is refused under the default policy") {
    wire::Message msg = answer_msg({
        {RawName({"injectzero", "attacker", "com"}), wire::kTypeCNAME,
         wire::kClassIN, 60, wire::NameRdata{kZeroed}},
        {kZeroed, wire::kTypeA, wire::kClassIN, 60, wire::ARdata{{6, 6, 6, 6}}},
    });
    SanitizeResult r = sanitize_response(msg, ProxyPolicy{});
    CHECK(r.action == Action::Refuse);
    CHECK(r.response.flags.rcode == wire::kRcodeRefused);
    CHECK(r.response.answers.empty());
    REQUIRE(r.response.questions.size() == 1);
    bool saw_zero = false;
    for (const auto& v : r.violations)
        saw_zero = saw_zero || v.cls == ViolationClass::ZeroTruncation;
    CHECK(saw_zero);
}

TEST_CASE("dotted-label answer is refused and classified") {
    wire::Message msg = answer_msg({
        {RawName({"injectdot", "attacker", "com"}), wire::kTypeCNAME,
         wire::kClassIN, 60, wire::NameRdata{kDotted}},
    });
    SanitizeResult r = sanitize_response(msg, ProxyPolicy{});
    CHECK(r.action == Action::Refuse);
    REQUIRE(!r.violations.empty());
    CHECK(r.violations[0].cls == ViolationClass::DotConfusion);
    CHECK(r.violations[0].where.find("rdata") != std::string::npos);
}

TEST_CASE("clean cname chains pass untouched") {
    wire::Message msg = answer_msg({
        {RawName({"cnamebase", "attacker", "com"}), wire::kTypeCNAME,
         wire::kClassIN, 60,
         wire::NameRdata{RawName({"works", "cnameslash", "attacker", "com"})}},
        {RawName({"works", "cnameslash", "attacker", "com"}), wire::kTypeA,
         wire::kClassIN, 60, wire::ARdata{{192, 0, 2, 1}}},
    });
    SanitizeResult r = sanitize_response(msg, ProxyPolicy{});
    CHECK(r.action == Action::Pass);
    CHECK(r.violations.empty());
    CHECK(r.response == msg);
}

TEST_CASE("service-label owners are excused, hostile rdata is not") {
    RawName owner({"_ldap", "_tcp", "attacker", "com"});
    wire::Message msg = answer_msg(
        {{owner, wire::kTypeSRV, wire::kClassIN, 60,
          wire::SrvRdata{0, 0, 389, RawName({"/dc=attacker,dc=com"})}}},
        wire::kTypeSRV);
    SanitizeResult r = sanitize_response(msg, ProxyPolicy{});
    CHECK(r.action == Action::Refuse);
    REQUIRE(r.violations.size() == 1); // only the rdata name, not the owner
    CHECK(r.violations[0].cls == ViolationClass::InvalidHostname);
    CHECK(r.violations[0].where.find("rdata") != std::string::npos);

    // without rdata validation the record sails through on the allowlist
    ProxyPolicy lax;
    lax.validate_rdata_names = false;
    CHECK(sanitize_response(msg, lax).action == Action::Pass);

    // without the allowlist, the underscore owner is flagged as well
    ProxyPolicy strict;
    strict.owner_allowlist.clear();
    CHECK(sanitize_response(msg, strict).violations.size() == 2);
}

TEST_CASE("allowlists never excuse misinterpretable names") {
    ProxyPolicy wide_open;
    wide_open.owner_allowlist = {"*"};

    wire::Message slashed = answer_msg({
        {RawName({"t/t", "cnameslash", "attacker", "com"}), wire::kTypeA,
         wire::kClassIN, 60, wire::ARdata{{192, 0, 2, 1}}},
    });
    CHECK(sanitize_response(slashed, wide_open).action == Action::Pass);

    wire::Message dotted = answer_msg({
        {kDotted, wire::kTypeA, wire::kClassIN, 60, wire::ARdata{{6, 6, 6, 6}}},
    });
    SanitizeResult r = sanitize_response(dotted, wide_open);
    CHECK(r.action == Action::Refuse);
    CHECK(r.violations[0].cls == ViolationClass::DotConfusion);
}

TEST_CASE("txt rdata is free-form and exempt") {
    wire::Message msg = answer_msg(
        {{RawName({"exp", "attacker", "com"}), wire::kTypeTXT, wire::kClassIN,
          60, wire::TxtRdata{{"anything\tgoes\nhere", std::string(255, 'A')}}}},
        wire::kTypeTXT);
    SanitizeResult r = sanitize_response(msg, ProxyPolicy{});
    CHECK(r.action == Action::Pass);
    CHECK(r.violations.empty());
}

TEST_CASE("strip action removes the tainted record and its downstream chain") {
    RawName q({"cnamebase", "attacker", "com"});
    RawName clean2({"end", "attacker", "com"});
    wire::Message msg = answer_msg({
        // tainted link: dotted CNAME target
        {q, wire::kTypeCNAME, wire::kClassIN, 60, wire::NameRdata{kDotted}},
        // continuation of the chain under the dotted owner
        {kDotted, wire::kTypeCNAME, wire::kClassIN, 60,
         wire::NameRdata{clean2}},
        // clean-looking terminal record, reachable only via the chain
        {clean2, wire::kTypeA, wire::kClassIN, 60, wire::ARdata{{6, 6, 6, 6}}},
        // unrelated clean record survives
        {RawName({"other", "attacker", "com"}), wire::kTypeA, wire::kClassIN,
         60, wire::ARdata{{192, 0, 2, 7}}},
    });
    ProxyPolicy policy;
    policy.answer_action = Action::StripRecord;
    SanitizeResult r = sanitize_response(msg, policy);
    CHECK(r.action == Action::StripRecord);
    CHECK(r.records_stripped == 3);
    REQUIRE(r.response.answers.size() == 1);
    CHECK(r.response.answers[0].owner == RawName({"other", "attacker", "com"}));
}

TEST_CASE("escape action rewrites tainted names losslessly") {
    wire::Message msg = answer_msg({
        {RawName({"injectdot", "attacker", "com"}), wire::kTypeCNAME,
         wire::kClassIN, 60, wire::NameRdata{kDotted}},
    });
    ProxyPolicy policy;
    policy.answer_action = Action::EscapeAndPass;
    SanitizeResult r = sanitize_response(msg, policy);
    CHECK(r.action == Action::EscapeAndPass);
    CHECK(r.names_escaped == 1);
    const auto& target =
        std::get<wire::NameRdata>(r.response.answers[0].rdata).target;
    CHECK(target == RawName({"www\\046target", "com"}));
    // the rewritten label carries no dot byte: a naive decoder prints the
    // escape sequence instead of misreading a dot
    CHECK(validation::classify_misinterpretation(target) ==
          validation::Misinterpretation::None);
}

TEST_CASE("authority and additional sections are always scrubbed") {
    wire::Message msg = answer_msg({
        {RawName({"cnamebase", "attacker", "com"}), wire::kTypeA,
         wire::kClassIN, 60, wire::ARdata{{192, 0, 2, 1}}},
    });
    msg.authority.push_back({RawName({"attacker", "com"}), wire::kTypeNS,
                             wire::kClassIN, 60, wire::NameRdata{kDotted}});
    msg.additional.push_back(
        {kZeroed, wire::kTypeA, wire::kClassIN, 60, wire::ARdata{{6, 6, 6, 6}}});
    msg.additional.push_back({RawName({"ns1", "attacker", "com"}), wire::kTypeA,
                              wire::kClassIN, 60,
                              wire::ARdata{{192, 0, 2, 53}}});
    SanitizeResult r = sanitize_response(msg, ProxyPolicy{});
    // answers were clean, so the overall action is a strip, not a refusal
    CHECK(r.action == Action::StripRecord);
    CHECK(r.records_stripped == 2);
    CHECK(r.response.answers.size() == 1);
    CHECK(r.response.authority.empty());
    REQUIRE(r.response.additional.size() == 1);
    CHECK(r.response.additional[0].owner == RawName({"ns1", "attacker", "com"}));
}

TEST_CASE("policy json round-trips and rejects unknown actions") {
    ProxyPolicy policy;
    policy.answer_action = Action::StripRecord;
    policy.validate_owner_names = false;
    policy.owner_allowlist = {"_*", "xn--*"};
    ProxyPolicy back = policy_from_json(policy_to_json(policy));
    CHECK(back.answer_action == Action::StripRecord);
    CHECK(back.validate_owner_names == false);
    CHECK(back.validate_rdata_names == true);
    CHECK(back.owner_allowlist == policy.owner_allowlist);

    CHECK(policy_from_json("{}").answer_action == Action::Refuse);
    CHECK_THROWS_AS((void)policy_from_json(R"({"action":"explode"})"),
                    std::invalid_argument);
}

TEST_CASE("live proxy filters a poisoning chain and forwards clean traffic") {
    auto zone = payloads::build_payload_zone(RawName({"attacker", "com"}),
                                             RawName({"target", "com"}),
                                             {6, 6, 6, 6});
    sim::SimChainConfig upstream_cfg; // transparent: payloads arrive verbatim
    sim::SimServer upstream(upstream_cfg, &zone);
    upstream.start();

    Proxy proxy(ProxyPolicy{}, upstream.endpoint());
    proxy.start();
    scanner::DnsClient client({2000});

    auto clean = client.query_once(
        proxy.endpoint(), {payloads::baseline_a_name(zone.origin), wire::kTypeA,
                           wire::kClassIN});
    REQUIRE(clean.has_value());
    CHECK(clean->flags.rcode == wire::kRcodeNoError);
    REQUIRE(clean->answers.size() == 1);
    CHECK(clean->answers[0].rdata == wire::Rdata{wire::ARdata{{192, 0, 2, 1}}});

    auto hostile = client.query_once(
        proxy.endpoint(), {RawName::from_dotted("injectdot.attacker.com"),
                           wire::kTypeA, wire::kClassIN});
    REQUIRE(hostile.has_value());
    CHECK(hostile->flags.rcode == wire::kRcodeRefused);
    CHECK(hostile->answers.empty());

    CHECK(proxy.stats().responses_total.load() == 2);
    CHECK(proxy.stats().passed.load() == 1);
    CHECK(proxy.stats().refused.load() == 1);
    CHECK(proxy.stats().dot_confusion.load() >= 1);

    auto summary = nlohmann::json::parse(proxy.stats().summary_json());
    CHECK(summary["refused"] == 1);
    CHECK(summary["violations"]["dot_confusion"] >= 1);

    // TCP path goes through the same filter
    wire::Message q;
    q.id = 77;
    q.flags.rd = true;
    q.questions.push_back({RawName::from_dotted("injectzero.attacker.com"),
                           wire::kTypeA, wire::kClassIN});
    auto framed = net::tcp_exchange(proxy.endpoint(),
                                    wire::frame_tcp(wire::encode_message(q)),
                                    2000);
    REQUIRE(framed.has_value());
    wire::Message tcp_reply = wire::decode_message(wire::unframe_tcp(*framed));
    CHECK(tcp_reply.id == 77);
    CHECK(tcp_reply.flags.rcode == wire::kRcodeRefused);
}

TEST_CASE("dead upstream yields servfail and counts a timeout") {
    Proxy proxy(ProxyPolicy{}, {"127.0.0.1", 9}, 0, 200);
    proxy.start();
    scanner::DnsClient client({2000});
    auto reply = client.query_once(
        proxy.endpoint(), {RawName({"x"}), wire::kTypeA, wire::kClassIN});
    REQUIRE(reply.has_value());
    CHECK(reply->flags.rcode == wire::kRcodeServFail);
    CHECK(proxy.stats().upstream_timeouts.load() == 1);
    CHECK(proxy.stats().responses_total.load() == 0);
}
