#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "eaagent/kg.hpp"
#include "eaagent/retrieval.hpp"

namespace eaagent {

enum class PromptTag { plan, align, reflect, rewrite };
inline constexpr std::size_t kPromptTagCount = 4;

const char* to_string(PromptTag tag);
std::optional<PromptTag> prompt_tag_from_string(std::string_view s);

struct ChatRequest {
    Iri entity;
    PromptTag tag = PromptTag::plan;
    std::string system_text;  // may be empty; then no system message is sent
    std::string user_text;    // must be non-empty
    double temperature = 0.1;
    std::size_t max_tokens = 128;
};

struct TokenUsage {
    std::size_t prompt = 0;
    std::size_t completion = 0;

    std::size_t total() const noexcept { return prompt + completion; }
    TokenUsage& operator+=(const TokenUsage& other) {
        prompt += other.prompt;
        completion += other.completion;
        return *this;
    }
    friend bool operator==(const TokenUsage&, const TokenUsage&) = default;
};

struct ChatResponse {
    std::string text;
    TokenUsage usage;
    // True when the backend reported no usage and counts were estimated.
    bool usage_estimated = false;
};

class LlmBackend {
public:
    virtual ~LlmBackend() = default;
    virtual ChatResponse complete(const ChatRequest& request) = 0;
    virtual std::string_view name() const = 0;
};

// Whitespace-word + punctuation-character count. Crude but deterministic;
// responses carrying real usage numbers always win over this.
std::size_t estimate_tokens(std::string_view text);

class TokenLedger {
public:
    void record(const Iri& entity, PromptTag tag, const TokenUsage& usage, bool estimated);

    TokenUsage entity_total(const Iri& entity) const;
    TokenUsage tag_total(const Iri& entity, PromptTag tag) const;
    TokenUsage global_total() const;
    std::size_t entities_touched() const;
    std::size_t calls() const noexcept { return calls_; }
    bool any_estimated() const noexcept { return any_estimated_; }

    struct Summary {
        std::size_t entities = 0;
        std::size_t calls = 0;
        TokenUsage total;
        double avg_tokens_per_entity = 0.0;
        bool any_estimated = false;
        std::map<Iri, TokenUsage> per_entity;
    };
    Summary summary() const;

private:
    std::map<Iri, std::array<TokenUsage, kPromptTagCount>> per_entity_;
    std::size_t calls_ = 0;
    bool any_estimated_ = false;
};

// Serializes ledger updates and enforces the optional per-run token budget:
// once the running total reaches the budget, further calls are refused.
class LlmGateway {
public:
    explicit LlmGateway(LlmBackend& backend,
                        std::optional<std::size_t> token_budget = std::nullopt);

    ChatResponse complete(const ChatRequest& request);

    TokenLedger::Summary ledger_summary() const;
    const LlmBackend& backend() const noexcept { return backend_; }

private:
    LlmBackend& backend_;
    std::optional<std::size_t> token_budget_;
    mutable std::mutex mutex_;
    TokenLedger ledger_;
};

// Replays canned responses: per-(entity, tag) FIFO queues first, then the
// per-tag default. Unscripted requests are refused, which keeps fixture gaps
// loud instead of silently succeeding.
class ScriptedMockBackend final : public LlmBackend {
public:
    struct Reply {
        std::string text;
        std::optional<TokenUsage> usage;  // estimated from the texts if absent
    };

    void set_default(PromptTag tag, Reply reply);
    void push(const Iri& entity, PromptTag tag, Reply reply);

    ChatResponse complete(const ChatRequest& request) override;
    std::string_view name() const override { return "scripted-mock"; }
    std::size_t calls() const;

private:
    mutable std::mutex mutex_;
    std::map<std::pair<Iri, PromptTag>, std::deque<Reply>> queues_;
    std::map<PromptTag, Reply> defaults_;
    std::size_t calls_ = 0;
};

// Answers alignment and reflection with the gold target and planning and
// rewriting with a fixed three-step sequence. Gives test runs a backend whose
// behaviour is exactly predictable from the link file.
class OracleMockBackend final : public LlmBackend {
public:
    explicit OracleMockBackend(GoldMap gold);

    ChatResponse complete(const ChatRequest& request) override;
    std::string_view name() const override { return "oracle-mock"; }

private:
    GoldMap gold_;
};

struct HttpBackendConfig {
    std::string endpoint;  // http(s)://host[:port][/prefix]
    std::string model;
    std::string api_key;   // falls back to $EA_AGENT_API_KEY
    std::size_t max_attempts = 3;
    std::chrono::milliseconds initial_backoff{200};
    std::chrono::milliseconds timeout{60000};
    // Ask the server for greedy decoding regardless of request temperature.
    bool force_greedy = false;
};

// OpenAI-compatible chat-completions client. Transport faults and 5xx retry
// with exponential backoff up to max_attempts; 4xx never retries.
class HttpBackend final : public LlmBackend {
public:
    explicit HttpBackend(HttpBackendConfig config);

    ChatResponse complete(const ChatRequest& request) override;
    std::string_view name() const override { return "http"; }

private:
    HttpBackendConfig config_;
    std::string base_;  // scheme://host[:port]
    std::string path_;  // resource path of the completions endpoint
};

// Builds the wire-format request body; exposed for tests.
std::string chat_request_body(const ChatRequest& request, const std::string& model,
                              bool force_greedy);

// Parses a chat-completions response body; estimates usage if absent.
ChatResponse parse_chat_response(const std::string& body, const ChatRequest& request);

}  // namespace eaagent
