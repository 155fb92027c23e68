#include <feelgrid/error.hpp>
#include <feelgrid/model_port.hpp>

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

#include <cmath>
#include <cstdlib>

namespace feelgrid
{

std::string PortRequest::to_json() const
{
    nlohmann::ordered_json j;
    j["version"] = port_schema_version;
    j["transcript"] = transcript;
    j["augmented"] = augmented;
    j["chart"] = chart;
    auto schema_json = nlohmann::ordered_json::array();
    for (const auto& c : schema)
        schema_json.push_back({{"name", c.name}, {"type", to_string(c.type)}});
    j["schema"] = std::move(schema_json);
    auto sel = nlohmann::ordered_json::array();
    for (const auto& s : selections)
    {
        nlohmann::ordered_json fields = nlohmann::ordered_json::object();
        for (const auto& [k, v] : s.fields)
            fields[k] = v;
        sel.push_back({{"name", s.name}, {"fields", std::move(fields)}});
    }
    j["selections"] = std::move(sel);
    j["catalogue"] = catalogue;
    return j.dump();
}

PortReply PortReply::parse(std::string_view body)
{
    nlohmann::json j;
    try
    {
        j = nlohmann::json::parse(body);
    }
    catch (const nlohmann::json::exception& e)
    {
        throw Error(Errc::port_schema, fmt::format("reply is not JSON: {}", e.what()));
    }
    if (!j.is_object())
        throw Error(Errc::port_schema, "reply must be an object");

    PortReply r;
    try
    {
        if (j.contains("intent") && !j["intent"].is_null())
        {
            const auto name = j["intent"].get<std::string>();
            r.intent = parse_intent_category(name);
            if (!r.intent)
                throw Error(Errc::port_schema, fmt::format("unknown intent '{}'", name));
        }
        if (j.contains("task") && !j["task"].is_null())
        {
            const auto name = j["task"].get<std::string>();
            for (int t = 0; t <= static_cast<int>(Task::value_at); ++t)
                if (to_string(static_cast<Task>(t)) == name)
                    r.task = static_cast<Task>(t);
            if (!r.task)
                throw Error(Errc::port_schema, fmt::format("unknown task '{}'", name));
        }
        if (j.contains("answer"))
            r.answer = j["answer"].get<std::string>();
        if (j.contains("cited_values"))
        {
            if (!j["cited_values"].is_object())
                throw Error(Errc::port_schema, "cited_values must be an object");
            for (const auto& [k, v] : j["cited_values"].items())
                r.cited_values[k] = v.get<double>();
        }
    }
    catch (const nlohmann::json::exception& e)
    {
        throw Error(Errc::port_schema, fmt::format("bad reply field: {}", e.what()));
    }
    return r;
}

HttpModelPort::HttpModelPort(std::string url, std::chrono::milliseconds timeout) : timeout_(timeout)
{
    const auto scheme_end = url.find("://");
    const auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    if (path_start == std::string::npos)
    {
        scheme_host_port_ = url;
        path_ = "/";
    }
    else
    {
        scheme_host_port_ = url.substr(0, path_start);
        path_ = url.substr(path_start);
    }
}

PortReply HttpModelPort::ask(const PortRequest& request)
{
    httplib::Client client(scheme_host_port_);
    const auto secs = static_cast<time_t>(timeout_.count() / 1000);
    const auto usecs = static_cast<time_t>((timeout_.count() % 1000) * 1000);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    auto res = client.Post(path_, request.to_json(), "application/json");
    if (!res)
        throw Error(Errc::port_timeout,
                    fmt::format("model endpoint {} failed: {}", scheme_host_port_, httplib::to_string(res.error())));
    if (res->status != 200)
        throw Error(Errc::port_schema, fmt::format("model endpoint returned HTTP {}", res->status));
    return PortReply::parse(res->body);
}

std::shared_ptr<ModelPort> model_port_from_env()
{
    const char* url = std::getenv("FEELGRID_MODEL_URL");
    if (!url || !*url)
        return nullptr;
    return std::make_shared<HttpModelPort>(url);
}

std::vector<std::string> verify_citations(const std::map<std::string, double>& cited, const AnalyticResult& result)
{
    std::vector<std::string> out;
    auto check = [&](const std::string& key, double actual) {
        const double claimed = cited.at(key);
        if (std::abs(claimed - actual) > 1e-9 * std::max(1.0, std::abs(actual)))
            out.push_back(fmt::format("{}: cited {} vs computed {}", key, claimed, actual));
    };
    for (const auto& [key, value] : cited)
    {
        (void)value;
        if (result.points.empty())
        {
            out.push_back(fmt::format("{}: nothing computed", key));
            continue;
        }
        if (key == "min")
            check(key, result.min);
        else if (key == "max")
            check(key, result.max);
        else if (key == "mean")
            check(key, result.mean);
        else if (key == "count")
            check(key, static_cast<double>(result.points.size()));
        else if (key == "start")
            check(key, result.points.front().y);
        else if (key == "end")
            check(key, result.points.back().y);
        else if (key == "value" || key == "sum" || key == "difference")
            check(key, result.value);
        else
            out.push_back(fmt::format("{}: not a verifiable quantity", key));
    }
    return out;
}

} // namespace feelgrid
