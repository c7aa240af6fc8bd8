#include "dnsinj/net.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <stdexcept>

namespace dnsinj::net {

namespace {

sockaddr_in make_addr(const Endpoint& ep) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(ep.port);
    if (inet_pton(AF_INET, ep.host.c_str(), &addr.sin_addr) != 1)
        throw std::runtime_error("bad IPv4 address: " + ep.host);
    return addr;
}

Endpoint from_addr(const sockaddr_in& addr) {
    char buf[INET_ADDRSTRLEN] = {};
    inet_ntop(AF_INET, &addr.sin_addr, buf, sizeof buf);
    return {buf, ntohs(addr.sin_port)};
}

bool wait_readable(int fd, int timeout_ms) {
    pollfd pfd{fd, POLLIN, 0};
    for (;;) {
        int rc = poll(&pfd, 1, timeout_ms);
        if (rc > 0)
            return true;
        if (rc == 0)
            return false;
        if (errno != EINTR)
            throw std::runtime_error(std::string("poll: ") + strerror(errno));
    }
}

} // namespace

UdpSocket::UdpSocket() {
    fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd_ < 0)
        throw std::runtime_error(std::string("socket: ") + strerror(errno));
}

UdpSocket::~UdpSocket() {
    if (fd_ >= 0)
        ::close(fd_);
}

void UdpSocket::bind(const Endpoint& local) {
    sockaddr_in addr = make_addr(local);
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0)
        throw std::runtime_error(std::string("bind: ") + strerror(errno));
}

uint16_t UdpSocket::local_port() const {
    sockaddr_in addr{};
    socklen_t len = sizeof addr;
    if (getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len) != 0)
        throw std::runtime_error(std::string("getsockname: ") +
                                 strerror(errno));
    return ntohs(addr.sin_port);
}

void UdpSocket::send_to(const Endpoint& peer,
                        const std::vector<uint8_t>& payload) {
    sockaddr_in addr = make_addr(peer);
    ssize_t n = ::sendto(fd_, payload.data(), payload.size(), 0,
                         reinterpret_cast<sockaddr*>(&addr), sizeof addr);
    if (n < 0)
        throw std::runtime_error(std::string("sendto: ") + strerror(errno));
}

std::optional<Datagram> UdpSocket::recv(int timeout_ms) {
    if (!wait_readable(fd_, timeout_ms))
        return std::nullopt;
    std::vector<uint8_t> buf(65535);
    sockaddr_in addr{};
    socklen_t len = sizeof addr;
    ssize_t n = ::recvfrom(fd_, buf.data(), buf.size(), 0,
                           reinterpret_cast<sockaddr*>(&addr), &len);
    if (n < 0) {
        if (errno == EAGAIN || errno == EWOULDBLOCK)
            return std::nullopt;
        throw std::runtime_error(std::string("recvfrom: ") + strerror(errno));
    }
    buf.resize(static_cast<size_t>(n));
    return Datagram{std::move(buf), from_addr(addr)};
}

std::optional<std::vector<uint8_t>> udp_exchange(
    const Endpoint& peer, const std::vector<uint8_t>& payload,
    int timeout_ms) {
    UdpSocket sock;
    sock.send_to(peer, payload);
    auto got = sock.recv(timeout_ms);
    if (!got)
        return std::nullopt;
    return std::move(got->payload);
}

std::optional<std::vector<uint8_t>> tcp_exchange(
    const Endpoint& peer, const std::vector<uint8_t>& framed,
    int timeout_ms) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0)
        throw std::runtime_error(std::string("socket: ") + strerror(errno));
    struct Closer {
        int fd;
        ~Closer() { ::close(fd); }
    } closer{fd};

    sockaddr_in addr = make_addr(peer);
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0)
        return std::nullopt;
    size_t sent = 0;
    while (sent < framed.size()) {
        ssize_t n = ::send(fd, framed.data() + sent, framed.size() - sent, 0);
        if (n <= 0)
            return std::nullopt;
        sent += static_cast<size_t>(n);
    }
    std::vector<uint8_t> out;
    size_t want = 2; // length prefix first, then the payload it announces
    while (out.size() < want) {
        if (!wait_readable(fd, timeout_ms))
            return std::nullopt;
        uint8_t buf[4096];
        ssize_t n = ::recv(fd, buf, sizeof buf, 0);
        if (n <= 0)
            return std::nullopt;
        out.insert(out.end(), buf, buf + n);
        if (out.size() >= 2)
            want = 2 + (static_cast<size_t>(out[0]) << 8 | out[1]);
    }
    return out;
}

} // namespace dnsinj::net
