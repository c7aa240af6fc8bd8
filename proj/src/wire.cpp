#include "dnsinj/wire.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>
#include <sstream>

namespace dnsinj::wire {

namespace {

void check_labels(const std::vector<std::string>& labels) {
    size_t encoded = 1; // root byte
    for (const auto& label : labels) {
        if (label.empty())
            throw CodecError(CodecError::Code::EmptyLabel, "empty label");
        if (label.size() > kMaxLabelLen)
            throw CodecError(CodecError::Code::LabelTooLong,
                             "label exceeds 63 octets");
        encoded += 1 + label.size();
    }
    if (encoded > kMaxNameLen)
        throw CodecError(CodecError::Code::NameTooLong,
                         "name exceeds 255 octets");
}

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v & 0xFF));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v >> 24));
    out.push_back(static_cast<uint8_t>(v >> 16));
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v & 0xFF));
}

class Reader {
public:
    Reader(std::span<const uint8_t> buf, size_t offset)
        : buf_(buf), pos_(offset) {}

    size_t pos() const { return pos_; }
    void seek(size_t pos) { pos_ = pos; }

    uint8_t u8() {
        need(1);
        return buf_[pos_++];
    }

    uint16_t u16() {
        need(2);
        uint16_t v = static_cast<uint16_t>(buf_[pos_] << 8 | buf_[pos_ + 1]);
        pos_ += 2;
        return v;
    }

    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v = v << 8 | buf_[pos_ + i];
        pos_ += 4;
        return v;
    }

    std::vector<uint8_t> bytes(size_t n) {
        need(n);
        std::vector<uint8_t> out(buf_.begin() + pos_, buf_.begin() + pos_ + n);
        pos_ += n;
        return out;
    }

    std::string str(size_t n) {
        need(n);
        std::string out(reinterpret_cast<const char*>(buf_.data()) + pos_, n);
        pos_ += n;
        return out;
    }

    bool at_end() const { return pos_ >= buf_.size(); }
    size_t remaining() const { return pos_ <= buf_.size() ? buf_.size() - pos_ : 0; }

private:
    void need(size_t n) const {
        if (pos_ + n > buf_.size())
            throw CodecError(CodecError::Code::Truncated, "message truncated");
    }

    std::span<const uint8_t> buf_;
    size_t pos_;
};

} // namespace

RawName::RawName(std::vector<std::string> labels) : labels_(std::move(labels)) {
    check_labels(labels_);
}

RawName RawName::from_dotted(const std::string& text) {
    std::vector<std::string> labels;
    std::string current;
    for (char c : text) {
        if (c == '.') {
            if (!current.empty()) {
                labels.push_back(current);
                current.clear();
            }
        } else {
            current.push_back(c);
        }
    }
    if (!current.empty())
        labels.push_back(current);
    return RawName(std::move(labels));
}

size_t RawName::encoded_size() const {
    size_t n = 1;
    for (const auto& label : labels_)
        n += 1 + label.size();
    return n;
}

bool RawName::ends_with(const RawName& suffix) const {
    if (suffix.labels_.size() > labels_.size())
        return false;
    return std::equal(suffix.labels_.rbegin(), suffix.labels_.rend(),
                      labels_.rbegin());
}

RawName RawName::without_prefix(size_t n) const {
    if (n >= labels_.size())
        return RawName();
    return RawName(std::vector<std::string>(labels_.begin() + n, labels_.end()));
}

RawName RawName::with_prefix(const RawName& prefix) const {
    std::vector<std::string> labels = prefix.labels_;
    labels.insert(labels.end(), labels_.begin(), labels_.end());
    return RawName(std::move(labels));
}

RawName RawName::with_prefix(const std::string& label) const {
    std::vector<std::string> labels{label};
    labels.insert(labels.end(), labels_.begin(), labels_.end());
    return RawName(std::move(labels));
}

RawName RawName::lowercased() const {
    std::vector<std::string> labels = labels_;
    for (auto& label : labels)
        for (auto& c : label)
            c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return RawName(std::move(labels));
}

PresentationName to_presentation(const RawName& name, EscapeStyle style) {
    PresentationName out;
    out.style = style;
    if (name.is_root()) {
        out.text = ".";
        return out;
    }
    if (style == EscapeStyle::Naive) {
        // Verbatim bytes; a zero byte terminates the output string.
        std::string text;
        for (const auto& label : name.labels()) {
            for (char c : label) {
                if (c == '\0') {
                    out.text = text;
                    return out;
                }
                text.push_back(c);
            }
            text.push_back('.');
        }
        out.text = text;
        return out;
    }
    std::string text;
    for (const auto& label : name.labels()) {
        for (unsigned char c : label) {
            if (c == '.' || c == '\\') {
                text.push_back('\\');
                text.push_back(static_cast<char>(c));
            } else if (style == EscapeStyle::EscapeOnly && c == '@') {
                text.push_back('\\');
                text.push_back('@');
            } else if (c < 0x21 || c > 0x7E) {
                char buf[5];
                std::snprintf(buf, sizeof buf, "\\%03u", c);
                text.append(buf);
            } else {
                text.push_back(static_cast<char>(c));
            }
        }
        text.push_back('.');
    }
    out.text = text;
    return out;
}

RawName from_presentation(const std::string& text) {
    if (text == ".")
        return RawName();
    std::vector<std::string> labels;
    std::string current;
    bool label_open = false; // saw content or an explicit separator position
    size_t i = 0;
    while (i < text.size()) {
        char c = text[i];
        if (c == '\\') {
            if (i + 1 >= text.size())
                throw CodecError(CodecError::Code::BadEscape,
                                 "dangling backslash");
            char next = text[i + 1];
            if (std::isdigit(static_cast<unsigned char>(next))) {
                if (i + 3 >= text.size() ||
                    !std::isdigit(static_cast<unsigned char>(text[i + 2])) ||
                    !std::isdigit(static_cast<unsigned char>(text[i + 3])))
                    throw CodecError(CodecError::Code::BadEscape,
                                     "\\DDD needs three digits");
                int value = (next - '0') * 100 + (text[i + 2] - '0') * 10 +
                            (text[i + 3] - '0');
                if (value > 255)
                    throw CodecError(CodecError::Code::BadEscape,
                                     "\\DDD value exceeds 255");
                current.push_back(static_cast<char>(value));
                i += 4;
            } else {
                current.push_back(next);
                i += 2;
            }
            label_open = true;
        } else if (c == '.') {
            if (current.empty())
                throw CodecError(CodecError::Code::EmptyLabel,
                                 "empty label in presentation name");
            labels.push_back(current);
            current.clear();
            label_open = false;
            ++i;
        } else {
            current.push_back(c);
            label_open = true;
            ++i;
        }
    }
    if (!current.empty())
        labels.push_back(current);
    else if (label_open)
        throw CodecError(CodecError::Code::EmptyLabel, "trailing empty label");
    return RawName(std::move(labels));
}

void encode_name(const RawName& name, std::vector<uint8_t>& out,
                 CompressionMap* compression) {
    check_labels(name.labels());
    RawName rest = name;
    size_t skipped = 0;
    while (!rest.is_root()) {
        if (compression) {
            auto key = to_presentation(rest, EscapeStyle::Strict).text;
            auto it = compression->find(key);
            if (it != compression->end()) {
                put_u16(out, static_cast<uint16_t>(0xC000 | it->second));
                return;
            }
            if (out.size() <= 0x3FFF)
                (*compression)[key] = static_cast<uint16_t>(out.size());
        }
        const std::string& label = name.labels()[skipped];
        out.push_back(static_cast<uint8_t>(label.size()));
        out.insert(out.end(), label.begin(), label.end());
        ++skipped;
        rest = rest.without_prefix(1);
    }
    out.push_back(0x00);
}

std::vector<uint8_t> encode_name(const RawName& name) {
    std::vector<uint8_t> out;
    encode_name(name, out);
    return out;
}

DecodedName decode_name(std::span<const uint8_t> buffer, size_t offset) {
    if (offset >= buffer.size())
        throw CodecError(CodecError::Code::TruncatedName,
                         "name offset outside buffer");
    std::vector<std::string> labels;
    std::set<size_t> visited;
    size_t pos = offset;
    size_t next_offset = 0;
    bool jumped = false;
    int jumps = 0;
    size_t encoded = 1;
    for (;;) {
        if (pos >= buffer.size())
            throw CodecError(CodecError::Code::TruncatedName,
                             "name runs past buffer");
        uint8_t len = buffer[pos];
        if ((len & 0xC0) == 0xC0) {
            if (pos + 1 >= buffer.size())
                throw CodecError(CodecError::Code::TruncatedName,
                                 "truncated compression pointer");
            size_t target = static_cast<size_t>(len & 0x3F) << 8 | buffer[pos + 1];
            if (!jumped) {
                next_offset = pos + 2;
                jumped = true;
            }
            if (!visited.insert(pos).second || ++jumps > kMaxPointerJumps)
                throw CodecError(CodecError::Code::PointerLoop,
                                 "compression pointer loop");
            pos = target;
            continue;
        }
        if (len & 0xC0)
            throw CodecError(CodecError::Code::TruncatedName,
                             "reserved label type");
        if (len == 0) {
            if (!jumped)
                next_offset = pos + 1;
            break;
        }
        if (pos + 1 + len > buffer.size())
            throw CodecError(CodecError::Code::TruncatedName,
                             "label runs past buffer");
        encoded += 1 + len;
        if (encoded > kMaxNameLen)
            throw CodecError(CodecError::Code::NameTooLong,
                             "decoded name exceeds 255 octets");
        labels.emplace_back(reinterpret_cast<const char*>(buffer.data()) + pos + 1,
                            len);
        pos += 1 + len;
    }
    return DecodedName{RawName(std::move(labels)), next_offset};
}

namespace {

void encode_rdata(const ResourceRecord& rr, std::vector<uint8_t>& out) {
    size_t len_pos = out.size();
    put_u16(out, 0); // patched below
    std::visit(
        [&](const auto& rd) {
            using T = std::decay_t<decltype(rd)>;
            if constexpr (std::is_same_v<T, ARdata>) {
                out.insert(out.end(), rd.addr.begin(), rd.addr.end());
            } else if constexpr (std::is_same_v<T, NameRdata>) {
                encode_name(rd.target, out);
            } else if constexpr (std::is_same_v<T, SrvRdata>) {
                put_u16(out, rd.priority);
                put_u16(out, rd.weight);
                put_u16(out, rd.port);
                encode_name(rd.target, out);
            } else if constexpr (std::is_same_v<T, NaptrRdata>) {
                put_u16(out, rd.order);
                put_u16(out, rd.preference);
                for (const std::string* s : {&rd.flags, &rd.service, &rd.regexp}) {
                    if (s->size() > 255)
                        throw CodecError(CodecError::Code::LabelTooLong,
                                         "NAPTR string exceeds 255 bytes");
                    out.push_back(static_cast<uint8_t>(s->size()));
                    out.insert(out.end(), s->begin(), s->end());
                }
                encode_name(rd.replacement, out);
            } else if constexpr (std::is_same_v<T, TxtRdata>) {
                for (const auto& s : rd.strings) {
                    if (s.size() > 255)
                        throw CodecError(CodecError::Code::LabelTooLong,
                                         "TXT character-string exceeds 255 bytes");
                    out.push_back(static_cast<uint8_t>(s.size()));
                    out.insert(out.end(), s.begin(), s.end());
                }
            } else if constexpr (std::is_same_v<T, SoaRdata>) {
                encode_name(rd.mname, out);
                encode_name(rd.rname, out);
                put_u32(out, rd.serial);
                put_u32(out, rd.refresh);
                put_u32(out, rd.retry);
                put_u32(out, rd.expire);
                put_u32(out, rd.minimum);
            } else if constexpr (std::is_same_v<T, OpaqueRdata>) {
                out.insert(out.end(), rd.bytes.begin(), rd.bytes.end());
            }
        },
        rr.rdata);
    size_t rdlen = out.size() - len_pos - 2;
    out[len_pos] = static_cast<uint8_t>(rdlen >> 8);
    out[len_pos + 1] = static_cast<uint8_t>(rdlen & 0xFF);
}

void encode_record(const ResourceRecord& rr, std::vector<uint8_t>& out) {
    encode_name(rr.owner, out);
    put_u16(out, rr.rtype);
    put_u16(out, rr.rclass);
    put_u32(out, rr.ttl);
    encode_rdata(rr, out);
}

Rdata decode_rdata(std::span<const uint8_t> buffer, Reader& r, uint16_t rtype,
                   uint16_t rdlen) {
    size_t start = r.pos();
    size_t end = start + rdlen;
    auto decode_embedded_name = [&]() {
        DecodedName dn = decode_name(buffer, r.pos());
        r.seek(dn.next_offset);
        return dn.name;
    };
    switch (rtype) {
    case kTypeA: {
        if (rdlen != 4)
            break;
        ARdata rd;
        auto bytes = r.bytes(4);
        std::copy(bytes.begin(), bytes.end(), rd.addr.begin());
        return rd;
    }
    case kTypeNS:
    case kTypeCNAME:
    case kTypePTR: {
        NameRdata rd{decode_embedded_name()};
        if (r.pos() != end)
            throw CodecError(CodecError::Code::Truncated,
                             "rdata length mismatch");
        return rd;
    }
    case kTypeSRV: {
        SrvRdata rd;
        rd.priority = r.u16();
        rd.weight = r.u16();
        rd.port = r.u16();
        rd.target = decode_embedded_name();
        if (r.pos() != end)
            throw CodecError(CodecError::Code::Truncated,
                             "rdata length mismatch");
        return rd;
    }
    case kTypeNAPTR: {
        NaptrRdata rd;
        rd.order = r.u16();
        rd.preference = r.u16();
        rd.flags = r.str(r.u8());
        rd.service = r.str(r.u8());
        rd.regexp = r.str(r.u8());
        rd.replacement = decode_embedded_name();
        if (r.pos() != end)
            throw CodecError(CodecError::Code::Truncated,
                             "rdata length mismatch");
        return rd;
    }
    case kTypeTXT: {
        TxtRdata rd;
        while (r.pos() < end)
            rd.strings.push_back(r.str(r.u8()));
        if (r.pos() != end)
            throw CodecError(CodecError::Code::Truncated,
                             "rdata length mismatch");
        return rd;
    }
    case kTypeSOA: {
        SoaRdata rd;
        rd.mname = decode_embedded_name();
        rd.rname = decode_embedded_name();
        rd.serial = r.u32();
        rd.refresh = r.u32();
        rd.retry = r.u32();
        rd.expire = r.u32();
        rd.minimum = r.u32();
        if (r.pos() != end)
            throw CodecError(CodecError::Code::Truncated,
                             "rdata length mismatch");
        return rd;
    }
    default:
        break;
    }
    r.seek(start);
    return OpaqueRdata{r.bytes(rdlen)};
}

ResourceRecord decode_record(std::span<const uint8_t> buffer, Reader& r) {
    ResourceRecord rr;
    DecodedName dn = decode_name(buffer, r.pos());
    rr.owner = dn.name;
    r.seek(dn.next_offset);
    rr.rtype = r.u16();
    rr.rclass = r.u16();
    rr.ttl = r.u32();
    uint16_t rdlen = r.u16();
    if (r.remaining() < rdlen)
        throw CodecError(CodecError::Code::Truncated, "rdata truncated");
    rr.rdata = decode_rdata(buffer, r, rr.rtype, rdlen);
    return rr;
}

} // namespace

std::vector<uint8_t> encode_message(const Message& msg) {
    std::vector<uint8_t> out;
    put_u16(out, msg.id);
    uint16_t flags = 0;
    flags |= msg.flags.qr ? 0x8000 : 0;
    flags |= static_cast<uint16_t>(msg.flags.opcode & 0xF) << 11;
    flags |= msg.flags.aa ? 0x0400 : 0;
    flags |= msg.flags.tc ? 0x0200 : 0;
    flags |= msg.flags.rd ? 0x0100 : 0;
    flags |= msg.flags.ra ? 0x0080 : 0;
    flags |= msg.flags.rcode & 0xF;
    put_u16(out, flags);
    put_u16(out, static_cast<uint16_t>(msg.questions.size()));
    put_u16(out, static_cast<uint16_t>(msg.answers.size()));
    put_u16(out, static_cast<uint16_t>(msg.authority.size()));
    put_u16(out, static_cast<uint16_t>(msg.additional.size()));
    for (const auto& q : msg.questions) {
        encode_name(q.qname, out);
        put_u16(out, q.qtype);
        put_u16(out, q.qclass);
    }
    for (const auto* section : {&msg.answers, &msg.authority, &msg.additional})
        for (const auto& rr : *section)
            encode_record(rr, out);
    return out;
}

Message decode_message(std::span<const uint8_t> buffer) {
    Reader r(buffer, 0);
    Message msg;
    msg.id = r.u16();
    uint16_t flags = r.u16();
    msg.flags.qr = flags & 0x8000;
    msg.flags.opcode = (flags >> 11) & 0xF;
    msg.flags.aa = flags & 0x0400;
    msg.flags.tc = flags & 0x0200;
    msg.flags.rd = flags & 0x0100;
    msg.flags.ra = flags & 0x0080;
    msg.flags.rcode = flags & 0xF;
    uint16_t qd = r.u16();
    uint16_t an = r.u16();
    uint16_t ns = r.u16();
    uint16_t ar = r.u16();
    auto guard_count = [&](const char* what) {
        // A section count pointing past the end of the buffer is a header
        // lie, not a short read.
        if (r.at_end())
            throw CodecError(CodecError::Code::CountMismatch, what);
    };
    for (uint16_t i = 0; i < qd; ++i) {
        guard_count("question count exceeds data");
        Question q;
        DecodedName dn = decode_name(buffer, r.pos());
        q.qname = dn.name;
        r.seek(dn.next_offset);
        q.qtype = r.u16();
        q.qclass = r.u16();
        msg.questions.push_back(std::move(q));
    }
    struct Section {
        uint16_t count;
        std::vector<ResourceRecord>* out;
        const char* what;
    };
    for (auto [count, out, what] :
         {Section{an, &msg.answers, "answer count exceeds data"},
          Section{ns, &msg.authority, "authority count exceeds data"},
          Section{ar, &msg.additional, "additional count exceeds data"}}) {
        for (uint16_t i = 0; i < count; ++i) {
            guard_count(what);
            out->push_back(decode_record(buffer, r));
        }
    }
    return msg;
}

std::vector<uint8_t> frame_tcp(std::span<const uint8_t> payload) {
    if (payload.size() > 0xFFFF)
        throw CodecError(CodecError::Code::Truncated,
                         "payload too large for TCP frame");
    std::vector<uint8_t> out;
    put_u16(out, static_cast<uint16_t>(payload.size()));
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

std::vector<uint8_t> unframe_tcp(std::span<const uint8_t> framed) {
    if (framed.size() < 2)
        throw CodecError(CodecError::Code::Truncated, "short TCP frame");
    size_t len = static_cast<size_t>(framed[0]) << 8 | framed[1];
    if (framed.size() < 2 + len)
        throw CodecError(CodecError::Code::Truncated, "TCP frame truncated");
    return std::vector<uint8_t>(framed.begin() + 2, framed.begin() + 2 + len);
}

std::string rtype_name(uint16_t rtype) {
    switch (rtype) {
    case kTypeA: return "A";
    case kTypeNS: return "NS";
    case kTypeCNAME: return "CNAME";
    case kTypeSOA: return "SOA";
    case kTypePTR: return "PTR";
    case kTypeTXT: return "TXT";
    case kTypeSRV: return "SRV";
    case kTypeNAPTR: return "NAPTR";
    default: return "TYPE" + std::to_string(rtype);
    }
}

std::optional<uint16_t> rtype_code(const std::string& name) {
    static const std::map<std::string, uint16_t> table = {
        {"A", kTypeA},     {"NS", kTypeNS},   {"CNAME", kTypeCNAME},
        {"SOA", kTypeSOA}, {"PTR", kTypePTR}, {"TXT", kTypeTXT},
        {"SRV", kTypeSRV}, {"NAPTR", kTypeNAPTR},
    };
    auto it = table.find(name);
    if (it != table.end())
        return it->second;
    if (name.rfind("TYPE", 0) == 0) {
        uint16_t v = 0;
        auto [p, ec] = std::from_chars(name.data() + 4, name.data() + name.size(), v);
        if (ec == std::errc() && p == name.data() + name.size())
            return v;
    }
    return std::nullopt;
}

std::string format_ipv4(const std::array<uint8_t, 4>& addr) {
    std::ostringstream os;
    os << int(addr[0]) << '.' << int(addr[1]) << '.' << int(addr[2]) << '.'
       << int(addr[3]);
    return os.str();
}

std::optional<std::array<uint8_t, 4>> parse_ipv4(const std::string& text) {
    std::array<uint8_t, 4> addr{};
    int part = 0;
    size_t i = 0;
    for (int octet = 0; octet < 4; ++octet) {
        if (i >= text.size() || !std::isdigit(static_cast<unsigned char>(text[i])))
            return std::nullopt;
        part = 0;
        while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
            part = part * 10 + (text[i] - '0');
            if (part > 255)
                return std::nullopt;
            ++i;
        }
        addr[octet] = static_cast<uint8_t>(part);
        if (octet < 3) {
            if (i >= text.size() || text[i] != '.')
                return std::nullopt;
            ++i;
        }
    }
    if (i != text.size())
        return std::nullopt;
    return addr;
}

} // namespace dnsinj::wire
