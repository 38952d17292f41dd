#include "eaagent/llm.hpp"

#include <cctype>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace eaagent {

const char* to_string(PromptTag tag) {
    switch (tag) {
        case PromptTag::plan: return "plan";
        case PromptTag::align: return "align";
        case PromptTag::reflect: return "reflect";
        case PromptTag::rewrite: return "rewrite";
    }
    return "?";
}

std::optional<PromptTag> prompt_tag_from_string(std::string_view s) {
    if (s == "plan") return PromptTag::plan;
    if (s == "align") return PromptTag::align;
    if (s == "reflect") return PromptTag::reflect;
    if (s == "rewrite") return PromptTag::rewrite;
    return std::nullopt;
}

std::size_t estimate_tokens(std::string_view text) {
    std::size_t words = 0;
    std::size_t punct = 0;
    bool in_word = false;
    for (char c : text) {
        unsigned char uc = static_cast<unsigned char>(c);
        if (std::isspace(uc)) {
            in_word = false;
            continue;
        }
        if (std::ispunct(uc)) ++punct;
        if (!in_word) {
            ++words;
            in_word = true;
        }
    }
    return words + punct;
}

void TokenLedger::record(const Iri& entity, PromptTag tag, const TokenUsage& usage,
                         bool estimated) {
    per_entity_[entity][static_cast<std::size_t>(tag)] += usage;
    ++calls_;
    if (estimated) any_estimated_ = true;
}

TokenUsage TokenLedger::entity_total(const Iri& entity) const {
    TokenUsage total;
    auto it = per_entity_.find(entity);
    if (it == per_entity_.end()) return total;
    for (const auto& u : it->second) total += u;
    return total;
}

TokenUsage TokenLedger::tag_total(const Iri& entity, PromptTag tag) const {
    auto it = per_entity_.find(entity);
    if (it == per_entity_.end()) return {};
    return it->second[static_cast<std::size_t>(tag)];
}

TokenUsage TokenLedger::global_total() const {
    TokenUsage total;
    for (const auto& [entity, per_tag] : per_entity_)
        for (const auto& u : per_tag) total += u;
    return total;
}

std::size_t TokenLedger::entities_touched() const { return per_entity_.size(); }

TokenLedger::Summary TokenLedger::summary() const {
    Summary s;
    s.entities = per_entity_.size();
    s.calls = calls_;
    s.any_estimated = any_estimated_;
    for (const auto& [entity, per_tag] : per_entity_) {
        TokenUsage et;
        for (const auto& u : per_tag) et += u;
        s.per_entity.emplace(entity, et);
        s.total += et;
    }
    if (s.entities > 0)
        s.avg_tokens_per_entity =
            static_cast<double>(s.total.total()) / static_cast<double>(s.entities);
    return s;
}

LlmGateway::LlmGateway(LlmBackend& backend, std::optional<std::size_t> token_budget)
    : backend_(backend), token_budget_(token_budget) {}

ChatResponse LlmGateway::complete(const ChatRequest& request) {
    if (request.user_text.empty()) throw DataError("chat request has empty user text");
    if (token_budget_) {
        std::lock_guard<std::mutex> lock(mutex_);
        std::size_t used = ledger_.global_total().total();
        if (used >= *token_budget_) throw BudgetExceededError(used, *token_budget_);
    }
    ChatResponse response = backend_.complete(request);
    {
        std::lock_guard<std::mutex> lock(mutex_);
        ledger_.record(request.entity, request.tag, response.usage, response.usage_estimated);
    }
    return response;
}

TokenLedger::Summary LlmGateway::ledger_summary() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return ledger_.summary();
}

void ScriptedMockBackend::set_default(PromptTag tag, Reply reply) {
    std::lock_guard<std::mutex> lock(mutex_);
    defaults_[tag] = std::move(reply);
}

void ScriptedMockBackend::push(const Iri& entity, PromptTag tag, Reply reply) {
    std::lock_guard<std::mutex> lock(mutex_);
    queues_[{entity, tag}].push_back(std::move(reply));
}

ChatResponse ScriptedMockBackend::complete(const ChatRequest& request) {
    Reply reply;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        ++calls_;
        auto qit = queues_.find({request.entity, request.tag});
        if (qit != queues_.end() && !qit->second.empty()) {
            reply = std::move(qit->second.front());
            qit->second.pop_front();
        } else {
            auto dit = defaults_.find(request.tag);
            if (dit == defaults_.end())
                throw BackendRefusalError(
                    0, "no scripted reply for " + request.entity.str() + " tag " +
                           to_string(request.tag));
            reply = dit->second;
        }
    }
    ChatResponse response;
    response.text = reply.text;
    if (reply.usage) {
        response.usage = *reply.usage;
    } else {
        response.usage.prompt = estimate_tokens(request.system_text) +
                                estimate_tokens(request.user_text);
        response.usage.completion = estimate_tokens(response.text);
    }
    response.usage_estimated = false;
    return response;
}

std::size_t ScriptedMockBackend::calls() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return calls_;
}

namespace {

constexpr const char* kOraclePlanText =
    "1. AttributeTripleSelector\n2. RelationTripleSelector\n3. EntityAlignmentTool";

}  // namespace

OracleMockBackend::OracleMockBackend(GoldMap gold) : gold_(std::move(gold)) {}

ChatResponse OracleMockBackend::complete(const ChatRequest& request) {
    ChatResponse response;
    switch (request.tag) {
        case PromptTag::plan:
        case PromptTag::rewrite:
            response.text = kOraclePlanText;
            break;
        case PromptTag::align:
        case PromptTag::reflect: {
            auto it = gold_.find(request.entity);
            if (it == gold_.end()) throw MissingGoldError(request.entity.str());
            response.text = "[" + it->second.str() + "]";
            break;
        }
    }
    response.usage.prompt =
        estimate_tokens(request.system_text) + estimate_tokens(request.user_text);
    response.usage.completion = estimate_tokens(response.text);
    response.usage_estimated = false;
    return response;
}

std::string chat_request_body(const ChatRequest& request, const std::string& model,
                              bool force_greedy) {
    nlohmann::json messages = nlohmann::json::array();
    if (!request.system_text.empty())
        messages.push_back({{"role", "system"}, {"content", request.system_text}});
    messages.push_back({{"role", "user"}, {"content", request.user_text}});

    nlohmann::json body{
        {"model", model},
        {"messages", std::move(messages)},
        {"temperature", force_greedy ? 0.0 : request.temperature},
        {"max_tokens", request.max_tokens},
    };
    return body.dump();
}

ChatResponse parse_chat_response(const std::string& body, const ChatRequest& request) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
        throw TransportError("unparseable backend response: " + std::string(e.what()));
    }

    ChatResponse response;
    try {
        response.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception&) {
        throw TransportError("backend response missing choices[0].message.content");
    }

    if (j.contains("usage") && j["usage"].is_object() &&
        j["usage"].contains("prompt_tokens") && j["usage"].contains("completion_tokens") &&
        j["usage"]["prompt_tokens"].is_number() && j["usage"]["completion_tokens"].is_number()) {
        response.usage.prompt = j["usage"]["prompt_tokens"].get<std::size_t>();
        response.usage.completion = j["usage"]["completion_tokens"].get<std::size_t>();
        response.usage_estimated = false;
    } else {
        response.usage.prompt =
            estimate_tokens(request.system_text) + estimate_tokens(request.user_text);
        response.usage.completion = estimate_tokens(response.text);
        response.usage_estimated = true;
    }
    return response;
}

namespace {

// scheme://host[:port][/prefix] -> ("scheme://host:port", prefix). The
// completions path is appended unless the prefix already names it.
std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
    auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos)
        throw ConfigError("backend endpoint needs a scheme: " + endpoint);
    auto path_start = endpoint.find('/', scheme_end + 3);
    std::string base = (path_start == std::string::npos) ? endpoint
                                                         : endpoint.substr(0, path_start);
    std::string prefix = (path_start == std::string::npos) ? "" : endpoint.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

    std::string path;
    if (prefix.size() >= 17 && prefix.compare(prefix.size() - 17, 17, "/chat/completions") == 0)
        path = prefix;
    else
        path = prefix + "/v1/chat/completions";
    return {std::move(base), std::move(path)};
}

}  // namespace

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
    if (config_.endpoint.empty()) throw ConfigError("http backend needs an endpoint");
    if (config_.model.empty()) throw ConfigError("http backend needs a model name");
    if (config_.max_attempts == 0) throw ConfigError("max_attempts must be positive");
    if (config_.api_key.empty()) {
        if (const char* env = std::getenv("EA_AGENT_API_KEY")) config_.api_key = env;
    }
    auto [base, path] = split_endpoint(config_.endpoint);
    base_ = std::move(base);
    path_ = std::move(path);
}

ChatResponse HttpBackend::complete(const ChatRequest& request) {
    const std::string body = chat_request_body(request, config_.model, config_.force_greedy);

    std::string last_error;
    auto backoff = config_.initial_backoff;
    for (std::size_t attempt = 1; attempt <= config_.max_attempts; ++attempt) {
        if (attempt > 1) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }

        httplib::Client client(base_);
        client.set_connection_timeout(config_.timeout);
        client.set_read_timeout(config_.timeout);
        client.set_write_timeout(config_.timeout);

        httplib::Headers headers;
        if (!config_.api_key.empty())
            headers.emplace("Authorization", "Bearer " + config_.api_key);

        auto result = client.Post(path_, headers, body, "application/json");
        if (!result) {
            last_error = httplib::to_string(result.error());
            continue;
        }
        if (result->status >= 200 && result->status < 300)
            return parse_chat_response(result->body, request);
        if (result->status >= 500) {
            last_error = "HTTP " + std::to_string(result->status);
            continue;
        }
        // 4xx is the server telling us the request itself is bad; do not retry.
        throw BackendRefusalError(result->status, result->body);
    }
    throw TransportError("backend unreachable after " + std::to_string(config_.max_attempts) +
                         " attempts: " + last_error);
}

}  // namespace eaagent
