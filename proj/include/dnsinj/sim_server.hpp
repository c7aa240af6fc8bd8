#pragma once

#include <atomic>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "dnsinj/net.hpp"
#include "dnsinj/resolver_sim.hpp"

namespace dnsinj::sim {

/// One attacker-nameserver query as the zone operator would log it.
struct NsLogLine {
    double ts = 0; // unix seconds
    std::string prefix; // leftmost label of the queried name
    std::string qname;  // strict rendering
    std::string qtype;
    std::string src; // ip:port of the querying client

    std::string str() const;
};

/// A simulated resolver chain listening on loopback UDP. Each instance
/// keeps its own cache state, so a fleet of servers models a fleet of
/// independent open resolvers.
class SimServer {
public:
    SimServer(SimChainConfig cfg, const payloads::ZoneFile* zone,
              uint16_t port = 0);
    ~SimServer();
    SimServer(const SimServer&) = delete;
    SimServer& operator=(const SimServer&) = delete;

    void start();
    void stop();
    net::Endpoint endpoint() const { return {"127.0.0.1", port_}; }

    std::vector<NsLogLine> ns_log() const;
    /// Renders the log in the on-disk format, one line per query.
    std::string ns_log_text() const;

    SimChain& chain() { return chain_; }

private:
    void serve_loop();
    wire::Message handle(const wire::Message& query, const net::Endpoint& src);

    SimChainConfig cfg_;
    SimChain chain_;
    net::UdpSocket sock_;
    uint16_t port_ = 0;
    std::thread thread_;
    std::atomic<bool> running_{false};
    mutable std::mutex mu_; // guards chain_ and log_
    std::vector<NsLogLine> log_;
};

} // namespace dnsinj::sim
