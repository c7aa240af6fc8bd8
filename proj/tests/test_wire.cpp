#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cstdio>
#include <random>

#include "dnsinj/wire.hpp"

using namespace dnsinj::wire;

namespace {

// Independent byte-level reference encoder: length-prefixed labels, root
// terminator, no compression. Deliberately written without reusing any
// library code so it can catch encoder bugs.
std::vector<uint8_t> reference_encode(const std::vector<std::string>& labels) {
    std::vector<uint8_t> out;
    for (const auto& l : labels) {
        out.push_back(static_cast<uint8_t>(l.size()));
        out.insert(out.end(), l.begin(), l.end());
    }
    out.push_back(0);
    return out;
}

// Independent escaping reference for a single byte in a label.
std::string reference_escape_byte(unsigned char c) {
    if (c == '.')
        return "\\.";
    if (c == '\\')
        return "\\\\";
    if (c < 0x21 || c > 0x7E) {
        char buf[5];
        std::snprintf(buf, sizeof buf, "\\%03u", c);
        return buf;
    }
    return std::string(1, static_cast<char>(c));
}

RawName random_name(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> label_count(1, 5);
    std::uniform_int_distribution<int> label_len(1, 63);
    std::uniform_int_distribution<int> byte(0, 255);
    std::vector<std::string> labels;
    size_t encoded = 1; // root byte
    int want = label_count(rng);
    for (int i = 0; i < want; ++i) {
        int len = label_len(rng);
        if (encoded + static_cast<size_t>(len) + 1 > kMaxNameLen)
            break;
        std::string label;
        for (int j = 0; j < len; ++j)
            label.push_back(static_cast<char>(byte(rng)));
        encoded += static_cast<size_t>(len) + 1;
        labels.push_back(std::move(label));
    }
    if (labels.empty())
        labels.push_back("x");
    return RawName(std::move(labels));
}

} // namespace

TEST_CASE("known names encode to reference bytes") {
    CHECK(encode_name(RawName({"www", "example", "com"})) ==
          reference_encode({"www", "example", "com"}));
    CHECK(encode_name(RawName()) == std::vector<uint8_t>{0});

    // zero-byte splice payload: the third label carries a trailing 0x00
    std::string tld("com\0", 4);
    std::vector<uint8_t> got =
        encode_name(RawName({"www", "target", tld, "attacker", "com"}));
    CHECK(got == reference_encode({"www", "target", tld, "attacker", "com"}));
    // the spliced label is length 4: 'c' 'o' 'm' 0x00
    CHECK(got[4 + 7] == 4);
    CHECK(got[4 + 7 + 4] == 0x00);
}

TEST_CASE("dot-in-label wire name decodes per escape style") {
    const std::vector<uint8_t> wire = {0x03, 0x61, 0x2E, 0x62, 0x02, 0x3C,
                                       0x3E, 0x03, 0x63, 0x6F, 0x6D, 0x00};
    DecodedName dn = decode_name(wire, 0);
    CHECK(dn.next_offset == wire.size());
    REQUIRE(dn.name.label_count() == 3);
    CHECK(dn.name.labels()[0] == "a.b");
    CHECK(dn.name.labels()[1] == "<>");
    CHECK(dn.name.labels()[2] == "com");
    CHECK(to_presentation(dn.name, EscapeStyle::Strict).text == "a\\.b.<>.com.");
    CHECK(to_presentation(dn.name, EscapeStyle::Naive).text == "a.b.<>.com.");
}

TEST_CASE("escaping matches the byte-level reference for all 256 values") {
    for (int c = 0; c < 256; ++c) {
        std::string label(1, static_cast<char>(c));
        RawName n({label, "x"});
        std::string expected =
            reference_escape_byte(static_cast<unsigned char>(c)) + ".x.";
        CHECK_MESSAGE(to_presentation(n, EscapeStyle::Strict).text == expected,
                      "byte ", c);
        CHECK(from_presentation(expected) == n);
    }
}

TEST_CASE("escape-only style additionally escapes at signs") {
    RawName n({"t@t", "x"});
    CHECK(to_presentation(n, EscapeStyle::Strict).text == "t@t.x.");
    CHECK(to_presentation(n, EscapeStyle::EscapeOnly).text == "t\\@t.x.");
}

TEST_CASE("naive style truncates at zero bytes and keeps dots") {
    RawName zero({"www", "target", std::string("com\0", 4), "attacker", "com"});
    CHECK(to_presentation(zero, EscapeStyle::Naive).text == "www.target.com");
    RawName dot({"www.target", "com"});
    CHECK(to_presentation(dot, EscapeStyle::Naive).text == "www.target.com.");
}

TEST_CASE("presentation parsing errors") {
    CHECK(from_presentation(".") == RawName());
    CHECK(from_presentation("\\046.") == RawName({"."}));
    CHECK_THROWS_AS((void)from_presentation("a..b"), CodecError);
    CHECK_THROWS_AS((void)from_presentation("a.\\"), CodecError);
    CHECK_THROWS_AS((void)from_presentation("\\999."), CodecError);
    CHECK_THROWS_AS((void)from_presentation("\\25"), CodecError);
    try {
        (void)from_presentation("\\300.");
        FAIL("expected BadEscape");
    } catch (const CodecError& e) {
        CHECK(e.code() == CodecError::Code::BadEscape);
    }
}

TEST_CASE("name size invariants are enforced") {
    CHECK_THROWS_AS((void)encode_name(RawName({std::string(64, 'a')})),
                    CodecError);
    std::vector<std::string> labels(32, std::string(7, 'a')); // 32*8+1 = 257
    try {
        (void)encode_name(RawName(labels));
        FAIL("expected NameTooLong");
    } catch (const CodecError& e) {
        CHECK(e.code() == CodecError::Code::NameTooLong);
    }
    CHECK_THROWS_AS((void)encode_name(RawName({"a", "", "b"})), CodecError);
}

TEST_CASE("10k random names round-trip through wire and presentation") {
    auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(0xDECAFBAD);
    for (int i = 0; i < 10000; ++i) {
        RawName n = random_name(rng);
        std::vector<uint8_t> bytes = encode_name(n);
        DecodedName dn = decode_name(bytes, 0);
        REQUIRE(dn.name == n);
        REQUIRE(dn.next_offset == bytes.size());
        PresentationName p = to_presentation(n, EscapeStyle::Strict);
        REQUIRE(from_presentation(p.text) == n);
    }
    auto elapsed = std::chrono::steady_clock::now() - start;
    CHECK(std::chrono::duration_cast<std::chrono::seconds>(elapsed).count() <
          5);
}

TEST_CASE("compression pointers reuse suffixes and decode transparently") {
    std::vector<uint8_t> buf;
    CompressionMap map;
    RawName a({"www", "example", "com"});
    RawName b({"mail", "example", "com"});
    encode_name(a, buf, &map);
    size_t a_end = buf.size();
    encode_name(b, buf, &map);
    // second name: 1+4 label bytes plus a 2-byte pointer
    CHECK(buf.size() == a_end + 5 + 2);
    CHECK((buf[buf.size() - 2] & 0xC0) == 0xC0);
    CHECK(decode_name(buf, 0).name == a);
    CHECK(decode_name(buf, a_end).name == b);
}

TEST_CASE("self-referencing compression pointer raises PointerLoop") {
    // minimal header, then a name that points at its own offset (12)
    std::vector<uint8_t> msg(12, 0);
    msg[5] = 1; // qdcount = 1
    msg.push_back(0xC0);
    msg.push_back(0x0C);
    msg.push_back(0x00); // qtype/qclass would follow
    try {
        (void)decode_name(msg, 12);
        FAIL("expected PointerLoop");
    } catch (const CodecError& e) {
        CHECK(e.code() == CodecError::Code::PointerLoop);
    }
}

TEST_CASE("messages round-trip including typed rdata") {
    Message msg;
    msg.id = 0xBEEF;
    msg.flags.qr = true;
    msg.flags.rd = true;
    msg.flags.ra = true;
    msg.questions.push_back({RawName({"injectdot", "attacker", "com"}), kTypeA,
                             kClassIN});
    msg.answers.push_back({RawName({"injectdot", "attacker", "com"}),
                           kTypeCNAME, kClassIN, 60,
                           NameRdata{RawName({"www.target", "com"})}});
    msg.answers.push_back({RawName({"www.target", "com"}), kTypeA, kClassIN,
                           60, ARdata{{6, 6, 6, 6}}});
    msg.authority.push_back(
        {RawName({"attacker", "com"}), kTypeSOA, kClassIN, 60,
         SoaRdata{RawName({"ns1", "attacker", "com"}),
                  RawName({"hostmaster", "attacker", "com"}), 1, 2, 3, 4, 5}});
    msg.additional.push_back(
        {RawName({"x"}), kTypeSRV, kClassIN, 1,
         SrvRdata{1, 2, 2083, RawName({"6", "6", "6", "6"})}});
    msg.additional.push_back(
        {RawName({"x"}), kTypeNAPTR, kClassIN, 1,
         NaptrRdata{10, 20, "S", "x-eduroam:radius.tls", "",
                    RawName({"@6", "6"})}});
    msg.additional.push_back({RawName({"x"}), kTypeTXT, kClassIN, 1,
                              TxtRdata{{"v=spf1", std::string(255, 'A')}}});
    msg.additional.push_back({RawName({"x"}), 999, kClassIN, 1,
                              OpaqueRdata{{1, 2, 3}}});

    std::vector<uint8_t> bytes = encode_message(msg);
    CHECK(decode_message(bytes) == msg);
}

TEST_CASE("section count mismatch is distinguished from truncation") {
    Message msg;
    msg.questions.push_back({RawName({"a"}), kTypeA, kClassIN});
    std::vector<uint8_t> bytes = encode_message(msg);

    // claim one answer that is not present: buffer ends at a record boundary
    std::vector<uint8_t> lying = bytes;
    lying[7] = 1; // ancount
    try {
        (void)decode_message(lying);
        FAIL("expected CountMismatch");
    } catch (const CodecError& e) {
        CHECK(e.code() == CodecError::Code::CountMismatch);
    }

    // chop the question mid-record: plain truncation
    std::vector<uint8_t> chopped(bytes.begin(), bytes.end() - 2);
    try {
        (void)decode_message(chopped);
        FAIL("expected Truncated");
    } catch (const CodecError& e) {
        CHECK(e.code() == CodecError::Code::Truncated);
    }
}

TEST_CASE("tcp framing round-trips") {
    std::vector<uint8_t> payload = {1, 2, 3, 4};
    std::vector<uint8_t> framed = frame_tcp(payload);
    REQUIRE(framed.size() == 6);
    CHECK(framed[0] == 0);
    CHECK(framed[1] == 4);
    CHECK(unframe_tcp(framed) == payload);
    CHECK_THROWS_AS((void)unframe_tcp(std::vector<uint8_t>{0}), CodecError);
}

TEST_CASE("ipv4 helpers") {
    CHECK(format_ipv4({6, 6, 6, 6}) == "6.6.6.6");
    CHECK(parse_ipv4("192.0.2.53") == std::array<uint8_t, 4>{192, 0, 2, 53});
    CHECK(!parse_ipv4("192.0.2"));
    CHECK(!parse_ipv4("1.2.3.999"));
    CHECK(!parse_ipv4("a.b.c.d"));
}
