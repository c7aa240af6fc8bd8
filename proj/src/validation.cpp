#include "dnsinj/validation.hpp"

namespace dnsinj::validation {

namespace profiles {

DecoderProfile glibc_like() {
    return {"glibc-like", EscapeStyle::Strict, true, false};
}

DecoderProfile musl_like() {
    return {"musl-like", EscapeStyle::Naive, true, true};
}

DecoderProfile uclibc_like() {
    return {"uclibc-like", EscapeStyle::Naive, false, false};
}

DecoderProfile dietlibc_like() {
    return {"dietlibc-like", EscapeStyle::Naive, false, false};
}

DecoderProfile escape_only() {
    return {"escape-only", EscapeStyle::EscapeOnly, false, false};
}

} // namespace profiles

namespace {

bool is_ldh_label(const std::string& label) {
    if (label.empty())
        return false;
    if (label.front() == '-' || label.back() == '-')
        return false;
    for (unsigned char c : label) {
        bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
                  (c >= '0' && c <= '9') || c == '-';
        if (!ok)
            return false;
    }
    return true;
}

// The name an application perceives after a naive decode: the truncated
// verbatim string re-split on dots. Empty labels make it invalid.
bool perceived_name_is_hostname(const std::string& naive_text) {
    if (naive_text.empty() || naive_text == ".")
        return false;
    std::string current;
    size_t checked = 0;
    for (size_t i = 0; i <= naive_text.size(); ++i) {
        bool at_sep = i == naive_text.size() || naive_text[i] == '.';
        if (at_sep) {
            if (i == naive_text.size() && current.empty() && checked > 0)
                break; // trailing root dot
            if (!is_ldh_label(current))
                return false;
            ++checked;
            current.clear();
        } else {
            current.push_back(naive_text[i]);
        }
    }
    return checked > 0;
}

bool contains_zero_byte(const RawName& name) {
    for (const auto& label : name.labels())
        if (label.find('\0') != std::string::npos)
            return true;
    return false;
}

} // namespace

bool is_valid_hostname(const RawName& name) {
    if (name.is_root())
        return false;
    for (const auto& label : name.labels())
        if (!is_ldh_label(label))
            return false;
    return true;
}

Misinterpretation classify_misinterpretation(const RawName& name) {
    bool dot = false;
    bool zero = false;
    for (const auto& label : name.labels()) {
        dot = dot || label.find('.') != std::string::npos;
        zero = zero || label.find('\0') != std::string::npos;
    }
    if (dot && zero)
        return Misinterpretation::Both;
    if (dot)
        return Misinterpretation::DotConfusion;
    if (zero)
        return Misinterpretation::ZeroTruncation;
    return Misinterpretation::None;
}

DecodedOutcome process_name(const RawName& name, const DecoderProfile& profile,
                            LookupDirection direction) {
    bool forward = direction == LookupDirection::Forward;
    // Strict decoders validate in the shared decode path, so both lookup
    // directions are covered; naive decoders only check in gethostbyname.
    bool validates = profile.validates_hostname &&
                     (forward || profile.escape_style == EscapeStyle::Strict);
    DecodedOutcome out;
    if (profile.rejects_zero_byte && forward && contains_zero_byte(name)) {
        out.presentation = wire::to_presentation(name, EscapeStyle::Strict);
        out.verdict = Verdict::Rejected;
        return out;
    }
    out.presentation = wire::to_presentation(name, profile.escape_style);
    Misinterpretation mis = classify_misinterpretation(name);
    if (profile.escape_style == EscapeStyle::Naive) {
        if (validates && !perceived_name_is_hostname(out.presentation.text)) {
            out.verdict = Verdict::Rejected;
        } else if (mis == Misinterpretation::ZeroTruncation ||
                   mis == Misinterpretation::Both) {
            out.verdict = Verdict::Truncated;
        } else if (mis == Misinterpretation::DotConfusion) {
            out.verdict = Verdict::Misinterpreted;
        } else {
            out.verdict = Verdict::Faithful;
        }
        return out;
    }
    // Strict and EscapeOnly render losslessly; only validation can fail.
    if (validates && !is_valid_hostname(name))
        out.verdict = Verdict::Rejected;
    else
        out.verdict = Verdict::Faithful;
    return out;
}

DecodedOutcome decode_pipeline(std::span<const uint8_t> buffer, size_t offset,
                               const DecoderProfile& profile) {
    wire::DecodedName dn = wire::decode_name(buffer, offset);
    return process_name(dn.name, profile);
}

const char* verdict_name(Verdict v) {
    switch (v) {
    case Verdict::Faithful: return "Faithful";
    case Verdict::Misinterpreted: return "Misinterpreted";
    case Verdict::Truncated: return "Truncated";
    case Verdict::Rejected: return "Rejected";
    }
    return "?";
}

const char* misinterpretation_name(Misinterpretation m) {
    switch (m) {
    case Misinterpretation::None: return "None";
    case Misinterpretation::DotConfusion: return "DotConfusion";
    case Misinterpretation::ZeroTruncation: return "ZeroTruncation";
    case Misinterpretation::Both: return "Both";
    }
    return "?";
}

} // namespace dnsinj::validation
