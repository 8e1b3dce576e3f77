#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "pii/http_model.hpp"
#include "pii/llm_gateway.hpp"

namespace pii {

// Deterministic providers that make every pipeline runnable with zero network
// access. All of them embed via the fallback embedder.

// Replays a fixed sequence of outcomes; an empty-string entry raises a
// transport failure. Used to exercise retry and validation paths.
class ScriptedProvider : public Provider {
public:
    explicit ScriptedProvider(std::vector<std::string> outputs, bool repeat_last = true);

    ChatResult complete(const ChatRequest& req) override;
    EmbeddingVector embed(const std::string& text) override;
    std::string id() const override { return "mock:scripted"; }

    int calls() const { return calls_; }

private:
    std::vector<std::string> outputs_;
    bool repeat_last_;
    int calls_ = 0;
    std::size_t next_ = 0;
};

// Dispatches on ChatRequest::task with a user-supplied handler.
class CallbackProvider : public Provider {
public:
    using Handler = std::function<std::string(const ChatRequest&)>;
    explicit CallbackProvider(Handler h) : handler_(std::move(h)) {}

    ChatResult complete(const ChatRequest& req) override { return {handler_(req), 1, id()}; }
    EmbeddingVector embed(const std::string& text) override { return fallback_embedding(text); }
    std::string id() const override { return "mock:callback"; }

private:
    Handler handler_;
};

// Ground-truth echo: answers classification and annotation calls with the gold
// annotations of the message whose (normalized) body matches the input.
class EchoProvider : public Provider {
public:
    explicit EchoProvider(const std::vector<AnnotatedMessage>& gold);

    ChatResult complete(const ChatRequest& req) override;
    EmbeddingVector embed(const std::string& text) override { return fallback_embedding(text); }
    std::string id() const override { return "mock:echo"; }

private:
    // normalized body -> deduplicated body-placement (label, value) pairs
    std::map<std::string, std::vector<Annotation>> by_body_;
};

// Taxonomy-driven synthetic-traffic mock: fabricates valid scenario, request,
// and response JSON deterministically from the structured input and seed.
class SynthProvider : public Provider {
public:
    explicit SynthProvider(std::uint64_t seed = 0) : seed_(seed) {}

    ChatResult complete(const ChatRequest& req) override;
    EmbeddingVector embed(const std::string& text) override { return fallback_embedding(text); }
    std::string id() const override { return "mock:synth"; }

private:
    std::uint64_t seed_;
};

std::shared_ptr<Provider> make_mock_provider(const std::string& spec,
                                             const std::vector<AnnotatedMessage>* gold = nullptr,
                                             std::uint64_t seed = 0);

}  // namespace pii
