#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace dnsinj::wire {

// Record type codes used throughout the toolkit. Anything else is carried
// as opaque rdata.
enum RType : uint16_t {
    kTypeA = 1,
    kTypeNS = 2,
    kTypeCNAME = 5,
    kTypeSOA = 6,
    kTypePTR = 12,
    kTypeTXT = 16,
    kTypeSRV = 33,
    kTypeNAPTR = 35,
};

enum RClass : uint16_t {
    kClassIN = 1,
    kClassCH = 3,
};

enum Rcode : uint8_t {
    kRcodeNoError = 0,
    kRcodeFormErr = 1,
    kRcodeServFail = 2,
    kRcodeNxDomain = 3,
    kRcodeNotImp = 4,
    kRcodeRefused = 5,
};

class CodecError : public std::runtime_error {
public:
    enum class Code {
        LabelTooLong,
        NameTooLong,
        EmptyLabel,
        PointerLoop,
        TruncatedName,
        Truncated,
        BadEscape,
        CountMismatch,
        BadRcode,
    };

    CodecError(Code code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    Code code() const { return code_; }

private:
    Code code_;
};

constexpr size_t kMaxLabelLen = 63;
constexpr size_t kMaxNameLen = 255;   // encoded length including root byte
constexpr int kMaxPointerJumps = 127; // decode bound; guarantees termination

/// A domain name in line (wire) format: an ordered list of raw byte labels.
/// Labels carry arbitrary byte values including 0x00 and 0x2E; nothing is
/// folded or escaped at this layer. An empty label list is the root name.
class RawName {
public:
    RawName() = default;
    explicit RawName(std::vector<std::string> labels);

    /// Builds from an already-valid hostname-ish dotted string. Splits on
    /// '.' with no escape processing; use presentation::from_presentation
    /// for the full escape grammar.
    static RawName from_dotted(const std::string& text);

    const std::vector<std::string>& labels() const { return labels_; }
    bool is_root() const { return labels_.empty(); }
    size_t label_count() const { return labels_.size(); }

    /// Encoded length: one length byte per label + label bytes + root byte.
    size_t encoded_size() const;

    bool ends_with(const RawName& suffix) const;

    /// Name with the first `n` labels removed.
    RawName without_prefix(size_t n) const;

    /// `prefix` labels prepended to this name.
    RawName with_prefix(const RawName& prefix) const;
    RawName with_prefix(const std::string& label) const;

    RawName lowercased() const;

    bool operator==(const RawName& other) const { return labels_ == other.labels_; }
    bool operator!=(const RawName& other) const { return labels_ != other.labels_; }
    bool operator<(const RawName& other) const { return labels_ < other.labels_; }

private:
    std::vector<std::string> labels_;
};

enum class EscapeStyle {
    Strict,     // byte-lossless RFC 4343 rendering
    Naive,      // verbatim bytes, 0x00 terminates, dots ambiguous
    EscapeOnly, // Strict plus dig-style '@' escaping; models escaping stubs
};

/// An escaped textual rendering of a RawName plus the style that produced it.
struct PresentationName {
    std::string text;
    EscapeStyle style = EscapeStyle::Strict;
};

PresentationName to_presentation(const RawName& name, EscapeStyle style);

/// Inverse of to_presentation(·, Strict). Accepts "\.", "\\", "\DDD" and
/// "\X" for any other X; unescaped '.' splits labels.
RawName from_presentation(const std::string& text);

/// Suffix-offset table for name compression. Keyed by the strict rendering
/// of each suffix already emitted.
using CompressionMap = std::map<std::string, uint16_t>;

/// Appends the wire encoding of `name` to `out`. When a compression map is
/// given, reuses the longest previously emitted suffix via a 2-byte pointer
/// and records new suffix offsets.
void encode_name(const RawName& name, std::vector<uint8_t>& out,
                 CompressionMap* compression = nullptr);

std::vector<uint8_t> encode_name(const RawName& name);

struct DecodedName {
    RawName name;
    size_t next_offset; // position after the name in the original stream
};

DecodedName decode_name(std::span<const uint8_t> buffer, size_t offset);

struct ARdata {
    std::array<uint8_t, 4> addr{};
    bool operator==(const ARdata&) const = default;
};

struct NameRdata { // CNAME, PTR, NS
    RawName target;
    bool operator==(const NameRdata&) const = default;
};

struct SrvRdata {
    uint16_t priority = 0;
    uint16_t weight = 0;
    uint16_t port = 0;
    RawName target;
    bool operator==(const SrvRdata&) const = default;
};

struct NaptrRdata {
    uint16_t order = 0;
    uint16_t preference = 0;
    std::string flags;
    std::string service;
    std::string regexp;
    RawName replacement;
    bool operator==(const NaptrRdata&) const = default;
};

struct TxtRdata {
    // One or more character-strings, each at most 255 bytes.
    std::vector<std::string> strings;
    bool operator==(const TxtRdata&) const = default;
};

struct SoaRdata {
    RawName mname;
    RawName rname;
    uint32_t serial = 1;
    uint32_t refresh = 3600;
    uint32_t retry = 900;
    uint32_t expire = 604800;
    uint32_t minimum = 60;
    bool operator==(const SoaRdata&) const = default;
};

struct OpaqueRdata {
    std::vector<uint8_t> bytes; // preserved byte-for-byte
    bool operator==(const OpaqueRdata&) const = default;
};

using Rdata = std::variant<ARdata, NameRdata, SrvRdata, NaptrRdata, TxtRdata,
                           SoaRdata, OpaqueRdata>;

struct ResourceRecord {
    RawName owner;
    uint16_t rtype = kTypeA;
    uint16_t rclass = kClassIN;
    uint32_t ttl = 60;
    Rdata rdata;
    bool operator==(const ResourceRecord&) const = default;
};

struct Flags {
    bool qr = false;
    uint8_t opcode = 0;
    bool aa = false;
    bool tc = false;
    bool rd = false;
    bool ra = false;
    uint8_t rcode = kRcodeNoError;
    bool operator==(const Flags&) const = default;
};

struct Question {
    RawName qname;
    uint16_t qtype = kTypeA;
    uint16_t qclass = kClassIN;
    bool operator==(const Question&) const = default;
};

struct Message {
    uint16_t id = 0;
    Flags flags;
    std::vector<Question> questions;
    std::vector<ResourceRecord> answers;
    std::vector<ResourceRecord> authority;
    std::vector<ResourceRecord> additional;
    bool operator==(const Message&) const = default;
};

/// Encodes without name compression so zone wire images stay deterministic.
std::vector<uint8_t> encode_message(const Message& msg);

Message decode_message(std::span<const uint8_t> buffer);

/// TCP framing: 2-byte big-endian length prefix.
std::vector<uint8_t> frame_tcp(std::span<const uint8_t> payload);
std::vector<uint8_t> unframe_tcp(std::span<const uint8_t> framed);

std::string rtype_name(uint16_t rtype);
std::optional<uint16_t> rtype_code(const std::string& name);

std::string format_ipv4(const std::array<uint8_t, 4>& addr);
std::optional<std::array<uint8_t, 4>> parse_ipv4(const std::string& text);

} // namespace dnsinj::wire
