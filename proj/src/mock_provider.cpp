#include "pii/mock_provider.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include <json.hpp>

#include "pii/errors.hpp"
#include "pii/preprocess.hpp"

namespace pii {

using nlohmann::json;

ScriptedProvider::ScriptedProvider(std::vector<std::string> outputs, bool repeat_last)
    : outputs_(std::move(outputs)), repeat_last_(repeat_last) {}

ChatResult ScriptedProvider::complete(const ChatRequest&) {
    ++calls_;
    if (next_ >= outputs_.size()) {
        if (!repeat_last_ || outputs_.empty())
            throw ProviderUnavailable("scripted provider ran out of outputs");
        next_ = outputs_.size() - 1;
    }
    const std::string& out = outputs_[next_++];
    if (out.empty()) throw ProviderUnavailable("scripted transport failure");
    return {out, 1, id()};
}

EmbeddingVector ScriptedProvider::embed(const std::string& text) {
    return fallback_embedding(text);
}

EchoProvider::EchoProvider(const std::vector<AnnotatedMessage>& gold) {
    for (const auto& am : gold) {
        std::vector<Annotation> anns;
        std::set<std::pair<std::string, std::string>> seen;
        for (const auto& a : am.annotations) {
            if (a.placement != Placement::body) continue;
            if (seen.insert({a.data_type, a.value}).second) anns.push_back(a);
        }
        by_body_[normalize_body(am.message.body).normalized] = std::move(anns);
    }
}

ChatResult EchoProvider::complete(const ChatRequest& req) {
    json input = json::parse(req.structured_input.empty() ? "{}" : req.structured_input);
    std::string body = input.value("body", "");
    auto it = by_body_.find(body);
    const std::vector<Annotation>* anns = it == by_body_.end() ? nullptr : &it->second;

    json out;
    if (req.task == "classify") {
        std::set<std::string> labels;
        if (anns)
            for (const auto& a : *anns) labels.insert(a.data_type);
        out["labels"] = labels;
    } else {
        out["annotations"] = json::array();
        if (anns)
            for (const auto& a : *anns)
                out["annotations"].push_back({{"data_type", a.data_type}, {"value", a.value}});
    }
    return {out.dump(), 1, id()};
}

// ---------------------------------------------------------------------------
// Synthetic-traffic mock

namespace {

std::string slug(const std::string& label) {
    std::string out;
    for (char c : label) {
        auto u = static_cast<unsigned char>(c);
        if (std::isalnum(u)) out.push_back(static_cast<char>(std::tolower(u)));
        else if (!out.empty() && out.back() != '-') out.push_back('-');
    }
    while (!out.empty() && out.back() == '-') out.pop_back();
    return out.empty() ? "field" : out;
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    a ^= b + 0x9E3779B97F4A7C15ull + (a << 6) + (a >> 2);
    return a;
}

std::string value_for(const std::string& label, std::uint64_t token) {
    return slug(label) + "-" + std::to_string(token % 100000);
}

}  // namespace

ChatResult SynthProvider::complete(const ChatRequest& req) {
    json input = json::parse(req.structured_input.empty() ? "{}" : req.structured_input);
    json out;

    if (req.task == "scenario") {
        auto labels = input.at("labels").get<std::vector<std::string>>();
        auto index = input.value("index", 0);
        out["id"] = "scenario-" + std::to_string(index);
        out["goal"] = "Submit a form carrying " + std::to_string(labels.size()) +
                      " kinds of personal data";
        out["hosts"] = {"api.example.com", "app.example.org"};
        out["endpoints"] = {"/v1/submit", "/v1/profile"};
        out["methods"] = {"POST"};
        out["content_types"] = {"application/json"};
        out["pii_plan"] = json::array();
        for (const auto& l : labels)
            out["pii_plan"].push_back(
                {{"label", l}, {"weight", 1.0}, {"placements", {"body"}}});
    } else if (req.task == "request") {
        auto labels = input.at("labels").get<std::vector<std::string>>();
        auto index = input.value("index", 0);
        std::uint64_t h = mix(seed_, static_cast<std::uint64_t>(index));

        json body = json::object();
        json anns = json::array();
        int n = 0;
        for (const auto& l : labels) {
            std::string v = value_for(l, mix(h, static_cast<std::uint64_t>(n)));
            body[slug(l)] = v;
            anns.push_back({{"data_type", l}, {"value", v}, {"placement", "body"}});
            ++n;
        }
        out["method"] = "POST";
        out["path"] = input.value("endpoint", "/v1/submit");
        out["headers"] = {{"Host", input.value("host", "api.example.com")},
                          {"Content-Type", "application/json"}};
        out["body"] = body.dump();
        out["annotations"] = anns;
    } else if (req.task == "response") {
        auto labels = input.value("labels", std::vector<std::string>{});
        std::string label = labels.empty() ? "" : labels.front();
        json body = json::object();
        json anns = json::array();
        if (!label.empty()) {
            std::string v = value_for(label, mix(seed_, 0xACC0u));
            body[slug(label)] = v;
            anns.push_back({{"data_type", label}, {"value", v}, {"placement", "body"}});
        }
        body["status"] = "created";
        out["status"] = 201;
        out["headers"] = {{"Content-Type", "application/json"}};
        out["body"] = body.dump();
        out["annotations"] = anns;
    } else {
        throw ProviderUnavailable("synth mock cannot serve task \"" + req.task + "\"");
    }
    return {out.dump(), 1, id()};
}

std::shared_ptr<Provider> make_mock_provider(const std::string& spec,
                                             const std::vector<AnnotatedMessage>* gold,
                                             std::uint64_t seed) {
    if (spec == "mock" || spec == "mock:synth") return std::make_shared<SynthProvider>(seed);
    if (spec == "mock:echo") {
        if (!gold) throw Error("echo mock needs a gold dataset");
        return std::make_shared<EchoProvider>(*gold);
    }
    throw Error("unknown mock provider \"" + spec + "\"");
}

}  // namespace pii
