#pragma once

#include <feelgrid/agent.hpp>

#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace feelgrid
{

inline constexpr int port_schema_version = 1;

struct PortSelection
{
    std::string name; // point_A
    std::vector<std::pair<std::string, std::string>> fields;
};

struct PortRequest
{
    std::string transcript;
    std::string augmented;
    std::string chart;
    std::vector<Column> schema;
    std::vector<PortSelection> selections;
    std::vector<std::string> catalogue;

    std::string to_json() const;
};

struct PortReply
{
    std::optional<IntentCategory> intent;
    std::optional<Task> task;
    std::string answer;
    std::map<std::string, double> cited_values;

    /// Throws Error(port_schema) on malformed bodies.
    static PortReply parse(std::string_view body);
};

/// Optional external language-model adapter. Implementations throw
/// Error(port_timeout) or Error(port_schema); callers fall back to the rule path.
class ModelPort
{
public:
    virtual ~ModelPort() = default;
    virtual PortReply ask(const PortRequest& request) = 0;
};

/// POSTs the request JSON to `url` and parses the reply.
class HttpModelPort : public ModelPort
{
public:
    explicit HttpModelPort(std::string url,
                           std::chrono::milliseconds timeout = std::chrono::seconds(10));

    PortReply ask(const PortRequest& request) override;

private:
    std::string scheme_host_port_;
    std::string path_;
    std::chrono::milliseconds timeout_;
};

/// HttpModelPort for FEELGRID_MODEL_URL, or null when unset.
std::shared_ptr<ModelPort> model_port_from_env();

/// Cited values that disagree with the computed result, as "key: cited vs actual".
std::vector<std::string> verify_citations(const std::map<std::string, double>& cited,
                                          const AnalyticResult& result);

} // namespace feelgrid
