#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pii/embedding.hpp"

namespace pii {

struct DecodeParams {
    double temperature = 0.0;
    int max_output_tokens = 4096;
};

// One chat-completion call. `task` names the output schema the stage expects
// ("classify", "annotate", "review", "scenario", "request", "response");
// deterministic mock providers dispatch on it and read `structured_input`,
// remote providers consume only the rendered prompt text.
struct ChatRequest {
    std::string system_prompt;
    std::string user_content;
    std::vector<std::pair<std::string, std::string>> exemplars;  // (input, expected output)
    std::string task;
    std::string structured_input;  // JSON payload mirroring user_content
    DecodeParams decode;
};

struct ChatResult {
    std::string raw_text;
    int attempt_count = 1;
    std::string provider_id;
};

class Provider {
public:
    virtual ~Provider() = default;
    virtual ChatResult complete(const ChatRequest& req) = 0;
    virtual EmbeddingVector embed(const std::string& text) = 0;
    virtual std::string id() const = 0;
};

struct RetryPolicy {
    int max_attempts = 3;
    int backoff_ms = 1000;  // doubled per attempt
    double jitter = 0.2;
};

struct ProviderConfig {
    std::string kind = "mock";  // "mock" | "openai"
    std::string base_url;
    std::string api_key;
    std::string model;
    std::string embed_model;
    RetryPolicy retry;
    int max_in_flight = 4;
};

// Reads PII_KIT_API_BASE / PII_KIT_API_KEY / PII_KIT_MODEL / PII_KIT_EMBED_MODEL
// on top of the given defaults.
ProviderConfig provider_config_from_env(ProviderConfig base = {});

// OpenAI-compatible provider: POST <base>/v1/chat/completions and
// POST <base>/v1/embeddings, retrying per policy with exponential backoff.
std::unique_ptr<Provider> make_openai_provider(const ProviderConfig& cfg);

// Wraps a provider with the retry policy and an audit trail of raw responses.
class Gateway {
public:
    Gateway(std::shared_ptr<Provider> provider, RetryPolicy retry = {});

    ChatResult complete(const ChatRequest& req);
    EmbeddingVector embed(const std::string& text);

    const std::vector<ChatResult>& audit_log() const { return audit_log_; }
    Provider& provider() { return *provider_; }
    int max_in_flight() const { return max_in_flight_; }
    void set_max_in_flight(int n) { max_in_flight_ = n; }

private:
    std::shared_ptr<Provider> provider_;
    RetryPolicy retry_;
    int max_in_flight_ = 4;
    std::vector<ChatResult> audit_log_;
};

}  // namespace pii
