#include "dnsinj/sim_server.hpp"

#include <chrono>
#include <cstdio>

namespace dnsinj::sim {

namespace {

double now_unix() {
    using namespace std::chrono;
    return duration<double>(system_clock::now().time_since_epoch()).count();
}

std::string escape_label(const std::string& label) {
    std::string text = wire::to_presentation(wire::RawName({label}),
                                             wire::EscapeStyle::Strict)
                           .text;
    text.pop_back(); // single-label rendering carries a root dot
    return text;
}

} // namespace

std::string NsLogLine::str() const {
    char ts_buf[32];
    snprintf(ts_buf, sizeof ts_buf, "%.6f", ts);
    return std::string(ts_buf) + " " + prefix + " " + qname + " " + qtype +
           " " + src;
}

SimServer::SimServer(SimChainConfig cfg, const payloads::ZoneFile* zone,
                     uint16_t port)
    : cfg_(cfg), chain_(std::move(cfg), zone) {
    sock_.bind({"127.0.0.1", port});
    port_ = sock_.local_port();
}

SimServer::~SimServer() { stop(); }

void SimServer::start() {
    if (running_.exchange(true))
        return;
    thread_ = std::thread([this] { serve_loop(); });
}

void SimServer::stop() {
    if (!running_.exchange(false))
        return;
    if (thread_.joinable())
        thread_.join();
}

std::vector<NsLogLine> SimServer::ns_log() const {
    std::lock_guard lock(mu_);
    return log_;
}

std::string SimServer::ns_log_text() const {
    std::string out;
    for (const auto& line : ns_log())
        out += line.str() + "\n";
    return out;
}

wire::Message SimServer::handle(const wire::Message& query,
                                const net::Endpoint& src) {
    wire::Message reply;
    reply.id = query.id;
    reply.flags.qr = true;
    reply.flags.ra = true;
    reply.questions = query.questions;
    if (query.questions.empty()) {
        reply.flags.rcode = wire::kRcodeFormErr;
        return reply;
    }
    const wire::Question& q = query.questions.front();

    // version.bind CH TXT is the fingerprinting channel.
    if (q.qclass == wire::kClassCH && q.qtype == wire::kTypeTXT) {
        wire::RawName version_bind({"version", "bind"});
        if (q.qname.lowercased() == version_bind && !cfg_.version_banner.empty()) {
            reply.answers.push_back({q.qname, wire::kTypeTXT, wire::kClassCH,
                                     0, wire::TxtRdata{{cfg_.version_banner}}});
        } else {
            reply.flags.rcode = wire::kRcodeRefused;
        }
        return reply;
    }

    std::lock_guard lock(mu_);
    chain_.set_ns_query_hook([&](const wire::RawName& qname, uint16_t qtype) {
        NsLogLine line;
        line.ts = now_unix();
        line.prefix = qname.is_root() ? "."
                                      : escape_label(qname.labels().front());
        line.qname = wire::to_presentation(qname, wire::EscapeStyle::Strict).text;
        line.qtype = wire::rtype_name(qtype);
        line.src = src.str();
        log_.push_back(std::move(line));
    });
    wire::Message chained = chain_.resolve_wire(q.qname, q.qtype);
    chain_.set_ns_query_hook(nullptr);
    reply.flags.rcode = chained.flags.rcode;
    reply.answers = std::move(chained.answers);
    reply.authority = std::move(chained.authority);
    return reply;
}

void SimServer::serve_loop() {
    while (running_) {
        auto dgram = sock_.recv(50);
        if (!dgram)
            continue;
        wire::Message query;
        try {
            query = wire::decode_message(dgram->payload);
        } catch (const wire::CodecError&) {
            continue; // garbage in, silence out
        }
        try {
            wire::Message reply = handle(query, dgram->peer);
            sock_.send_to(dgram->peer, wire::encode_message(reply));
        } catch (const std::exception&) {
            wire::Message fail;
            fail.id = query.id;
            fail.flags.qr = true;
            fail.flags.rcode = wire::kRcodeServFail;
            fail.questions = query.questions;
            sock_.send_to(dgram->peer, wire::encode_message(fail));
        }
    }
}

} // namespace dnsinj::sim
