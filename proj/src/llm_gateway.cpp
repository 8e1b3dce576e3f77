#include "pii/llm_gateway.hpp"

#include <chrono>
#include <cstdlib>
#include <mutex>
#include <random>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "pii/errors.hpp"

namespace pii {

using nlohmann::json;

ProviderConfig provider_config_from_env(ProviderConfig base) {
    if (const char* v = std::getenv("PII_KIT_API_BASE")) base.base_url = v;
    if (const char* v = std::getenv("PII_KIT_API_KEY")) base.api_key = v;
    if (const char* v = std::getenv("PII_KIT_MODEL")) base.model = v;
    if (const char* v = std::getenv("PII_KIT_EMBED_MODEL")) base.embed_model = v;
    if (!base.base_url.empty()) base.kind = "openai";
    return base;
}

namespace {

std::mutex g_audit_mutex;

class OpenAiProvider : public Provider {
public:
    explicit OpenAiProvider(ProviderConfig cfg) : cfg_(std::move(cfg)) {
        if (cfg_.base_url.empty())
            throw ProviderUnavailable("openai provider requires a base URL");
    }

    ChatResult complete(const ChatRequest& req) override {
        json messages = json::array();
        messages.push_back({{"role", "system"}, {"content", req.system_prompt}});
        for (const auto& [input, output] : req.exemplars) {
            messages.push_back({{"role", "user"}, {"content", input}});
            messages.push_back({{"role", "assistant"}, {"content", output}});
        }
        messages.push_back({{"role", "user"}, {"content", req.user_content}});

        json payload = {{"model", cfg_.model},
                        {"messages", messages},
                        {"temperature", req.decode.temperature},
                        {"max_tokens", req.decode.max_output_tokens},
                        {"response_format", {{"type", "json_object"}}}};

        json resp = post("/v1/chat/completions", payload);
        if (!resp.contains("choices") || resp["choices"].empty())
            throw ProviderUnavailable("completion response carries no choices");
        const auto& choice = resp["choices"][0];
        if (choice.value("finish_reason", "stop") == "length")
            throw ResponseTruncated("completion hit the output token limit");
        std::string text = choice.at("message").at("content").get<std::string>();
        if (text.empty()) throw ProviderUnavailable("completion response is empty");
        return {text, 1, id()};
    }

    EmbeddingVector embed(const std::string& text) override {
        if (text.empty()) throw Error("cannot embed empty text");
        json payload = {{"model", cfg_.embed_model.empty() ? cfg_.model : cfg_.embed_model},
                        {"input", text}};
        json resp = post("/v1/embeddings", payload);
        if (!resp.contains("data") || resp["data"].empty())
            throw ProviderUnavailable("embedding response carries no data");
        EmbeddingVector v;
        for (const auto& x : resp["data"][0].at("embedding")) v.values.push_back(x.get<double>());
        if (v.values.empty() || v.is_zero())
            throw ProviderUnavailable("embedding response is degenerate");
        return v;
    }

    std::string id() const override { return "openai:" + cfg_.model; }

private:
    json post(const std::string& endpoint, const json& payload) {
        httplib::Client client(cfg_.base_url);
        client.set_read_timeout(120, 0);
        httplib::Headers headers;
        if (!cfg_.api_key.empty())
            headers.emplace("Authorization", "Bearer " + cfg_.api_key);
        auto res = client.Post(endpoint, headers, payload.dump(), "application/json");
        if (!res)
            throw ProviderUnavailable("transport failure calling " + cfg_.base_url + endpoint);
        if (res->status < 200 || res->status >= 300)
            throw ProviderUnavailable("HTTP " + std::to_string(res->status) + " from " +
                                      endpoint + ": " + res->body);
        try {
            return json::parse(res->body);
        } catch (const json::exception& e) {
            throw ProviderUnavailable(std::string("provider returned invalid JSON: ") + e.what());
        }
    }

    ProviderConfig cfg_;
};

}  // namespace

std::unique_ptr<Provider> make_openai_provider(const ProviderConfig& cfg) {
    return std::make_unique<OpenAiProvider>(cfg);
}

Gateway::Gateway(std::shared_ptr<Provider> provider, RetryPolicy retry)
    : provider_(std::move(provider)), retry_(retry) {}

ChatResult Gateway::complete(const ChatRequest& req) {
    std::string last_error;
    static thread_local std::mt19937_64 rng{std::random_device{}()};
    for (int attempt = 1; attempt <= retry_.max_attempts; ++attempt) {
        try {
            ChatResult res = provider_->complete(req);
            res.attempt_count = attempt;
            {
                std::lock_guard<std::mutex> lock(g_audit_mutex);
                audit_log_.push_back(res);
            }
            return res;
        } catch (const ResponseTruncated&) {
            throw;
        } catch (const Error& e) {
            last_error = e.what();
            if (attempt == retry_.max_attempts) break;
            double backoff = static_cast<double>(retry_.backoff_ms) * (1 << (attempt - 1));
            std::uniform_real_distribution<double> jitter(1.0 - retry_.jitter,
                                                          1.0 + retry_.jitter);
            auto ms = static_cast<long>(backoff * jitter(rng));
            if (ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(ms));
        }
    }
    throw ProviderUnavailable("provider failed after " + std::to_string(retry_.max_attempts) +
                              " attempts; last error: " + last_error);
}

EmbeddingVector Gateway::embed(const std::string& text) {
    if (text.empty()) throw Error("cannot embed empty text");
    std::string last_error;
    for (int attempt = 1; attempt <= retry_.max_attempts; ++attempt) {
        try {
            return provider_->embed(text);
        } catch (const Error& e) {
            last_error = e.what();
        }
    }
    throw ProviderUnavailable("embedding failed after " + std::to_string(retry_.max_attempts) +
                              " attempts; last error: " + last_error);
}

}  // namespace pii
