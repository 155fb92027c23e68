#pragma once

#include <json.hpp>

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace feelgrid
{

using Json = nlohmann::json;

struct Envelope
{
    std::string topic;
    Json payload;
    std::uint64_t seq = 0;
    std::int64_t timestamp = 0;

    /// One line of JSON without the trailing newline.
    std::string to_line() const;
    static Envelope from_line(std::string_view line);
};

/// Declared topics, in table order.
const std::vector<std::string>& topic_table();

/// Throws Error(unknown_topic) or Error(schema_violation).
void validate_payload(std::string_view topic, const Json& payload);

/// Exact topics or single-level `+` wildcards. Throws Error(invalid_pattern).
void validate_pattern(std::string_view pattern);
bool topic_matches(std::string_view pattern, std::string_view topic);

namespace detail
{
struct BusState;
struct SubscriberQueue;
} // namespace detail

/// Per-subscriber ordered queue; unsubscribes on destruction.
class Subscription
{
public:
    Subscription() = default;
    Subscription(std::weak_ptr<detail::BusState> bus, std::shared_ptr<detail::SubscriberQueue> queue);
    Subscription(Subscription&&) noexcept = default;
    Subscription& operator=(Subscription&& other) noexcept;
    Subscription(const Subscription&) = delete;
    Subscription& operator=(const Subscription&) = delete;
    ~Subscription();

    std::optional<Envelope> try_pop();
    std::optional<Envelope> pop_for(std::chrono::milliseconds timeout);
    std::vector<Envelope> drain();
    /// No envelope is returned after this call.
    void unsubscribe();
    bool active() const;

private:
    std::weak_ptr<detail::BusState> bus_;
    std::shared_ptr<detail::SubscriberQueue> queue_;
};

/// In-process topic bus. Safe for concurrent publish and subscribe.
class Bus
{
public:
    using Clock = std::function<std::int64_t()>;

    /// Default clock: milliseconds since the bus was created.
    Bus();
    explicit Bus(Clock clock);

    std::uint64_t publish(std::string_view topic, Json payload);
    Subscription subscribe(std::string_view pattern);

private:
    std::shared_ptr<detail::BusState> state_;
};

} // namespace feelgrid
