#include <feelgrid/bridge.hpp>
#include <feelgrid/error.hpp>

#include <fmt/format.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <vector>

namespace feelgrid
{
namespace
{

struct Client
{
    int fd;
    std::string inbox;
};

bool send_line(int fd, const std::string& line)
{
    std::string data = line + "\n";
    std::size_t sent = 0;
    while (sent < data.size())
    {
        const auto n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
        if (n < 0 && errno == EINTR)
            continue;
        if (n <= 0)
            return false;
        sent += static_cast<std::size_t>(n);
    }
    return true;
}

Json error_payload(const std::string& message)
{
    return Json{{"kind", "error"}, {"message", message}};
}

} // namespace

ConsoleBridge::ConsoleBridge(Bus& bus, std::uint16_t port, CataloguePayload catalogue,
                             const std::string& bind_address)
: bus_(bus), catalogue_(std::move(catalogue)), feed_(bus.subscribe("+/+"))
{
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0)
        throw Error(Errc::bridge_error, fmt::format("socket: {}", std::strerror(errno)));
    const int reuse = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &reuse, sizeof reuse);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, bind_address.c_str(), &addr.sin_addr) != 1)
    {
        ::close(listen_fd_);
        throw Error(Errc::bridge_error, fmt::format("bad bind address '{}'", bind_address));
    }
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 8) != 0)
    {
        const int err = errno;
        ::close(listen_fd_);
        throw Error(Errc::bridge_error, fmt::format("cannot listen on {}:{}: {}", bind_address, port, std::strerror(err)));
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    worker_ = std::thread([this] { run(); });
}

ConsoleBridge::~ConsoleBridge()
{
    stop();
}

void ConsoleBridge::stop()
{
    running_ = false;
    if (worker_.joinable())
        worker_.join();
    if (listen_fd_ >= 0)
    {
        ::close(listen_fd_);
        listen_fd_ = -1;
    }
}

void ConsoleBridge::run()
{
    std::vector<Client> clients;
    auto drop = [&](std::size_t i) {
        ::close(clients[i].fd);
        clients.erase(clients.begin() + static_cast<std::ptrdiff_t>(i));
        clients_ = clients.size();
    };

    while (running_)
    {
        std::vector<pollfd> fds;
        fds.push_back({listen_fd_, POLLIN, 0});
        for (const auto& c : clients)
            fds.push_back({c.fd, POLLIN, 0});
        ::poll(fds.data(), fds.size(), 20);

        if (fds[0].revents & POLLIN)
        {
            const int fd = ::accept(listen_fd_, nullptr, nullptr);
            if (fd >= 0)
            {
                Envelope hello{"vis/catalogue", catalogue_ ? catalogue_() : Json{{"charts", Json::array()}}, 0, 0};
                if (send_line(fd, hello.to_line()))
                {
                    clients.push_back({fd, {}});
                    clients_ = clients.size();
                }
                else
                    ::close(fd);
            }
        }

        for (std::size_t i = clients.size(); i-- > 0;)
        {
            if (!(fds[i + 1].revents & (POLLIN | POLLHUP | POLLERR)))
                continue;
            char buf[4096];
            const auto n = ::recv(clients[i].fd, buf, sizeof buf, 0);
            if (n <= 0)
            {
                drop(i);
                continue;
            }
            auto& inbox = clients[i].inbox;
            inbox.append(buf, static_cast<std::size_t>(n));
            for (auto pos = inbox.find('\n'); pos != std::string::npos; pos = inbox.find('\n'))
            {
                const std::string line = inbox.substr(0, pos);
                inbox.erase(0, pos + 1);
                if (line.find_first_not_of(" \r\t") == std::string::npos)
                    continue;
                try
                {
                    auto e = Envelope::from_line(line);
                    if (e.topic != "user/query" && e.topic != "session/event")
                        throw Error(Errc::unknown_topic, fmt::format("console may not publish to '{}'", e.topic));
                    bus_.publish(e.topic, std::move(e.payload));
                }
                catch (const Error& err)
                {
                    Envelope reply{"session/event", error_payload(err.what()), 0, 0};
                    send_line(clients[i].fd, reply.to_line());
                }
            }
        }

        for (auto& e : feed_.drain())
        {
            const auto line = e.to_line();
            for (std::size_t i = clients.size(); i-- > 0;)
                if (!send_line(clients[i].fd, line))
                    drop(i);
        }
    }
    for (auto& c : clients)
        ::close(c.fd);
    clients_ = 0;
}

} // namespace feelgrid
