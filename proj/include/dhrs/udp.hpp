#pragma once

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dhrs {

struct UdpEndpoint {
    sockaddr_in addr{};

    static UdpEndpoint resolve(const std::string& host, std::uint16_t port) {
        addrinfo hints{};
        hints.ai_family = AF_INET;
        hints.ai_socktype = SOCK_DGRAM;
        addrinfo* res = nullptr;
        if (int rc = ::getaddrinfo(host.c_str(), nullptr, &hints, &res); rc != 0 || !res)
            throw std::runtime_error("cannot resolve " + host + ": " + ::gai_strerror(rc));
        UdpEndpoint ep;
        std::memcpy(&ep.addr, res->ai_addr, sizeof(sockaddr_in));
        ::freeaddrinfo(res);
        ep.addr.sin_port = htons(port);
        return ep;
    }

    std::uint16_t port() const { return ntohs(addr.sin_port); }
};

/// Blocking IPv4 datagram socket with a receive timeout.
class UdpSocket {
public:
    UdpSocket() {
        fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
        if (fd_ < 0) throw std::runtime_error(std::string("socket: ") + std::strerror(errno));
        int size = 4 << 20;
        ::setsockopt(fd_, SOL_SOCKET, SO_RCVBUF, &size, sizeof size);
        ::setsockopt(fd_, SOL_SOCKET, SO_SNDBUF, &size, sizeof size);
    }
    UdpSocket(const UdpSocket&) = delete;
    UdpSocket& operator=(const UdpSocket&) = delete;
    ~UdpSocket() {
        if (fd_ >= 0) ::close(fd_);
    }

    void bind(const std::string& host, std::uint16_t port) {
        UdpEndpoint ep = UdpEndpoint::resolve(host, port);
        if (::bind(fd_, reinterpret_cast<const sockaddr*>(&ep.addr), sizeof ep.addr) != 0)
            throw std::runtime_error("bind " + host + ":" + std::to_string(port) + ": " + std::strerror(errno));
    }

    std::uint16_t local_port() const {
        sockaddr_in a{};
        socklen_t len = sizeof a;
        ::getsockname(fd_, reinterpret_cast<sockaddr*>(&a), &len);
        return ntohs(a.sin_port);
    }

    void send_to(const UdpEndpoint& to, std::span<const std::uint8_t> bytes) {
        const auto n = ::sendto(fd_, bytes.data(), bytes.size(), 0, reinterpret_cast<const sockaddr*>(&to.addr),
                                sizeof to.addr);
        if (n < 0 || static_cast<std::size_t>(n) != bytes.size())
            throw std::runtime_error(std::string("sendto: ") + std::strerror(errno));
    }

    struct Received {
        std::vector<std::uint8_t> bytes;
        UdpEndpoint from;
    };

    /// Waits up to timeout for one datagram.
    std::optional<Received> receive(std::chrono::milliseconds timeout) {
        pollfd p{fd_, POLLIN, 0};
        const int rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
        if (rc < 0 && errno != EINTR) throw std::runtime_error(std::string("poll: ") + std::strerror(errno));
        if (rc <= 0) return std::nullopt;
        Received r;
        r.bytes.resize(65536);
        socklen_t len = sizeof r.from.addr;
        const auto n = ::recvfrom(fd_, r.bytes.data(), r.bytes.size(), 0, reinterpret_cast<sockaddr*>(&r.from.addr), &len);
        if (n < 0) {
            if (errno == EINTR || errno == EAGAIN) return std::nullopt;
            throw std::runtime_error(std::string("recvfrom: ") + std::strerror(errno));
        }
        r.bytes.resize(static_cast<std::size_t>(n));
        return r;
    }

private:
    int fd_ = -1;
};

}  // namespace dhrs
