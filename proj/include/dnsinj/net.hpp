#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dnsinj::net {

struct Endpoint {
    std::string host = "127.0.0.1";
    uint16_t port = 0;

    std::string str() const { return host + ":" + std::to_string(port); }
    bool operator==(const Endpoint&) const = default;
    bool operator<(const Endpoint& o) const {
        return host != o.host ? host < o.host : port < o.port;
    }
};

struct Datagram {
    std::vector<uint8_t> payload;
    Endpoint peer;
};

/// Thin RAII wrapper over a POSIX UDP socket.
class UdpSocket {
public:
    UdpSocket();
    ~UdpSocket();
    UdpSocket(const UdpSocket&) = delete;
    UdpSocket& operator=(const UdpSocket&) = delete;

    /// Binds to host:port; port 0 picks an ephemeral port.
    void bind(const Endpoint& local);
    uint16_t local_port() const;

    void send_to(const Endpoint& peer, const std::vector<uint8_t>& payload);

    /// Blocks up to timeout_ms; nullopt on timeout.
    std::optional<Datagram> recv(int timeout_ms);

    int fd() const { return fd_; }

private:
    int fd_ = -1;
};

/// One UDP request/response exchange; nullopt on timeout.
std::optional<std::vector<uint8_t>> udp_exchange(const Endpoint& peer,
                                                 const std::vector<uint8_t>& payload,
                                                 int timeout_ms);

/// One TCP exchange with 2-byte length framing (DNS over TCP).
std::optional<std::vector<uint8_t>> tcp_exchange(const Endpoint& peer,
                                                 const std::vector<uint8_t>& framed,
                                                 int timeout_ms);

} // namespace dnsinj::net
