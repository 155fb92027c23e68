#pragma once

#include <feelgrid/bus.hpp>

#include <atomic>
#include <cstdint>
#include <functional>
#include <string>
#include <thread>

namespace feelgrid
{

/// TCP endpoint for the operator console: line-delimited JSON envelopes in
/// both directions. Every bus envelope is forwarded to every client; clients
/// may publish user/query and session/event.
class ConsoleBridge
{
public:
    using CataloguePayload = std::function<Json()>;

    /// Binds immediately; throws Error(bridge_error) when the port is taken.
    /// Port 0 picks a free port.
    ConsoleBridge(Bus& bus, std::uint16_t port, CataloguePayload catalogue,
                  const std::string& bind_address = "127.0.0.1");
    ~ConsoleBridge();

    ConsoleBridge(const ConsoleBridge&) = delete;
    ConsoleBridge& operator=(const ConsoleBridge&) = delete;

    std::uint16_t port() const noexcept
    {
        return port_;
    }
    std::size_t client_count() const noexcept
    {
        return clients_.load();
    }
    void stop();

private:
    void run();

    Bus& bus_;
    CataloguePayload catalogue_;
    Subscription feed_;
    int listen_fd_ = -1;
    std::uint16_t port_ = 0;
    std::atomic<bool> running_{true};
    std::atomic<std::size_t> clients_{0};
    std::thread worker_;
};

} // namespace feelgrid
