#include <feelgrid/bus.hpp>
#include <feelgrid/error.hpp>

#include <fmt/format.h>

#include <algorithm>

namespace feelgrid
{
namespace detail
{

struct SubscriberQueue
{
    std::string pattern;
    std::mutex mutex;
    std::condition_variable ready;
    std::deque<Envelope> items;
    bool active = true;
};

struct BusState
{
    std::mutex mutex;
    Bus::Clock clock;
    std::map<std::string, std::uint64_t, std::less<>> seq;
    std::vector<std::shared_ptr<SubscriberQueue>> subscribers;
};

} // namespace detail

namespace
{

std::vector<std::string_view> split_levels(std::string_view s)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;)
    {
        const auto pos = s.find('/', start);
        out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos)
            return out;
        start = pos + 1;
    }
}

struct Requirement
{
    const char* key;
    Json::value_t type;
};

void require(std::string_view topic, const Json& payload, std::initializer_list<Requirement> keys)
{
    if (!payload.is_object())
        throw Error(Errc::schema_violation, fmt::format("{} payload must be an object", topic));
    for (const auto& k : keys)
    {
        if (!payload.contains(k.key))
            throw Error(Errc::schema_violation, fmt::format("{} payload lacks '{}'", topic, k.key));
        const auto actual = payload.at(k.key).type();
        const bool number = k.type == Json::value_t::number_float &&
                            (actual == Json::value_t::number_integer || actual == Json::value_t::number_unsigned ||
                             actual == Json::value_t::number_float);
        if (!number && actual != k.type)
            throw Error(Errc::schema_violation, fmt::format("{} payload field '{}' has the wrong type", topic, k.key));
    }
}

} // namespace

std::string Envelope::to_line() const
{
    nlohmann::ordered_json j;
    j["topic"] = topic;
    j["seq"] = seq;
    j["timestamp"] = timestamp;
    j["payload"] = payload;
    return j.dump();
}

Envelope Envelope::from_line(std::string_view line)
{
    try
    {
        const auto j = Json::parse(line);
        Envelope e;
        e.topic = j.at("topic").get<std::string>();
        e.payload = j.value("payload", Json::object());
        e.seq = j.value("seq", std::uint64_t{0});
        e.timestamp = j.value("timestamp", std::int64_t{0});
        return e;
    }
    catch (const Json::exception& ex)
    {
        throw Error(Errc::schema_violation, fmt::format("malformed envelope: {}", ex.what()));
    }
}

const std::vector<std::string>& topic_table()
{
    static const std::vector<std::string> topics = {
        "vis/catalogue", "user/query", "agent/response", "agent/command", "device/frame", "session/event",
    };
    return topics;
}

void validate_payload(std::string_view topic, const Json& payload)
{
    using V = Json::value_t;
    if (topic == "vis/catalogue")
        require(topic, payload, {{"charts", V::array}});
    else if (topic == "user/query")
        require(topic, payload, {{"transcript", V::string}});
    else if (topic == "agent/response")
        require(topic, payload, {{"text", V::string}, {"chunks", V::array}});
    else if (topic == "agent/command")
        require(topic, payload, {{"kind", V::string}});
    else if (topic == "device/frame")
        require(topic, payload, {{"frame_id", V::number_float}, {"pins", V::string}});
    else if (topic == "session/event")
        require(topic, payload, {{"kind", V::string}});
    else
        throw Error(Errc::unknown_topic, fmt::format("topic '{}' is not declared", topic));
}

void validate_pattern(std::string_view pattern)
{
    if (pattern.empty())
        throw Error(Errc::invalid_pattern, "empty topic pattern");
    for (auto level : split_levels(pattern))
    {
        if (level.empty())
            throw Error(Errc::invalid_pattern, fmt::format("empty level in '{}'", pattern));
        if (level != "+" && (level.find('+') != std::string_view::npos || level.find('#') != std::string_view::npos))
            throw Error(Errc::invalid_pattern, fmt::format("bad wildcard in '{}'", pattern));
    }
}

bool topic_matches(std::string_view pattern, std::string_view topic)
{
    const auto p = split_levels(pattern);
    const auto t = split_levels(topic);
    if (p.size() != t.size())
        return false;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (p[i] != "+" && p[i] != t[i])
            return false;
    return true;
}

Subscription::Subscription(std::weak_ptr<detail::BusState> bus, std::shared_ptr<detail::SubscriberQueue> queue)
: bus_(std::move(bus)), queue_(std::move(queue))
{
}

Subscription& Subscription::operator=(Subscription&& other) noexcept
{
    if (this != &other)
    {
        unsubscribe();
        bus_ = std::move(other.bus_);
        queue_ = std::move(other.queue_);
    }
    return *this;
}

Subscription::~Subscription()
{
    unsubscribe();
}

void Subscription::unsubscribe()
{
    if (!queue_)
        return;
    if (auto bus = bus_.lock())
    {
        std::lock_guard lock(bus->mutex);
        std::erase(bus->subscribers, queue_);
    }
    {
        std::lock_guard lock(queue_->mutex);
        queue_->active = false;
        queue_->items.clear();
    }
    queue_->ready.notify_all();
    queue_.reset();
}

bool Subscription::active() const
{
    if (!queue_)
        return false;
    std::lock_guard lock(queue_->mutex);
    return queue_->active;
}

std::optional<Envelope> Subscription::try_pop()
{
    if (!queue_)
        return std::nullopt;
    std::lock_guard lock(queue_->mutex);
    if (queue_->items.empty())
        return std::nullopt;
    Envelope e = std::move(queue_->items.front());
    queue_->items.pop_front();
    return e;
}

std::optional<Envelope> Subscription::pop_for(std::chrono::milliseconds timeout)
{
    if (!queue_)
        return std::nullopt;
    std::unique_lock lock(queue_->mutex);
    queue_->ready.wait_for(lock, timeout, [&] { return !queue_->items.empty() || !queue_->active; });
    if (queue_->items.empty())
        return std::nullopt;
    Envelope e = std::move(queue_->items.front());
    queue_->items.pop_front();
    return e;
}

std::vector<Envelope> Subscription::drain()
{
    std::vector<Envelope> out;
    while (auto e = try_pop())
        out.push_back(std::move(*e));
    return out;
}

Bus::Bus()
: Bus([start = std::chrono::steady_clock::now()] {
      return static_cast<std::int64_t>(
          std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count());
  })
{
}

Bus::Bus(Clock clock) : state_(std::make_shared<detail::BusState>())
{
    state_->clock = std::move(clock);
}

std::uint64_t Bus::publish(std::string_view topic, Json payload)
{
    validate_payload(topic, payload);
    std::lock_guard lock(state_->mutex);
    auto it = state_->seq.find(topic);
    if (it == state_->seq.end())
        it = state_->seq.emplace(std::string(topic), 0).first;
    Envelope e{std::string(topic), std::move(payload), ++it->second, state_->clock()};
    for (const auto& q : state_->subscribers)
    {
        if (!topic_matches(q->pattern, topic))
            continue;
        {
            std::lock_guard qlock(q->mutex);
            q->items.push_back(e);
        }
        q->ready.notify_one();
    }
    return e.seq;
}

Subscription Bus::subscribe(std::string_view pattern)
{
    validate_pattern(pattern);
    auto q = std::make_shared<detail::SubscriberQueue>();
    q->pattern = std::string(pattern);
    std::lock_guard lock(state_->mutex);
    state_->subscribers.push_back(q);
    return Subscription(state_, q);
}

} // namespace feelgrid
