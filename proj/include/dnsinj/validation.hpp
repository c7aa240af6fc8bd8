#pragma once

#include <span>
#include <string>

#include "dnsinj/wire.hpp"

namespace dnsinj::validation {

using wire::EscapeStyle;
using wire::PresentationName;
using wire::RawName;

/// How a stub resolver converts and checks a decoded domain name.
struct DecoderProfile {
    std::string name;
    EscapeStyle escape_style = EscapeStyle::Strict;
    bool validates_hostname = false;
    // Embedded zero bytes abort the decode outright instead of silently
    // truncating (observed musl behaviour, distinct from naive truncation).
    bool rejects_zero_byte = false;
};

namespace profiles {
DecoderProfile glibc_like();    // Strict escaping + hostname validation
DecoderProfile musl_like();     // naive decode, validates the perceived name
DecoderProfile uclibc_like();   // naive decode, no validation
DecoderProfile dietlibc_like(); // same observable behaviour as uclibc
DecoderProfile escape_only();   // netbsd-like: escapes, never validates
} // namespace profiles

enum class Verdict {
    Faithful,
    Misinterpreted, // naive dot confusion changed the perceived name
    Truncated,      // a zero byte cut the decoded string short
    Rejected,       // hostname validation failed
};

struct DecodedOutcome {
    PresentationName presentation;
    Verdict verdict = Verdict::Faithful;
};

enum class Misinterpretation { None, DotConfusion, ZeroTruncation, Both };

/// Reverse (PTR) lookups skip the forward-path checks in the naive libcs:
/// their validation lives in gethostbyname, not in the shared decoder, so
/// only Strict-style profiles keep validating PTR results.
enum class LookupDirection { Forward, Reverse };

/// LDH check per RFC 1123: labels of A-Z a-z 0-9 '-', no leading or
/// trailing hyphen, leading digits permitted.
bool is_valid_hostname(const RawName& name);

Misinterpretation classify_misinterpretation(const RawName& name);

/// Decompress -> decode -> validate under the given profile.
DecodedOutcome decode_pipeline(std::span<const uint8_t> buffer, size_t offset,
                               const DecoderProfile& profile);

/// Same pipeline applied to an already-decoded RawName (the wire step
/// elided); used by the chain simulator on typed records.
DecodedOutcome process_name(const RawName& name, const DecoderProfile& profile,
                            LookupDirection direction = LookupDirection::Forward);

const char* verdict_name(Verdict v);
const char* misinterpretation_name(Misinterpretation m);

} // namespace dnsinj::validation
