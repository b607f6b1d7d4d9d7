#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vulnprompt/corpus.hpp"
#include "vulnprompt/prompt.hpp"

namespace vulnprompt::llmdriver {

enum class BackendKind { HttpChat, Replay, Scripted };

struct ChatBackendSpec {
    BackendKind kind = BackendKind::Scripted;
    std::string model_id = "gpt-4";
    double temperature = 0.0;
    std::string endpoint;                 // e.g. https://api.openai.com
    std::string path = "/v1/chat/completions";
    std::string api_key_env = "VULNPROMPT_API_KEY";
    std::string scripted_reply = "Yes.";  // Scripted backend canned answer
    std::string cache_dir;                // replay store directory
    bool strict_replay = true;            // miss is an error vs. empty reply
    int request_timeout_seconds = 60;
    int max_retries = 3;

    static ChatBackendSpec from_json(const std::string& text);
    std::string to_json() const;
};

struct Message {
    std::string role;  // "user" | "assistant"
    std::string text;
};

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    // Completes the transcript; the last message is the pending user turn.
    virtual std::string complete(const std::vector<Message>& transcript) = 0;
};

// Builds the backend for a spec. Scripted and Replay backends never touch
// the network; HttpChat records into the replay store when cache_dir is set.
std::unique_ptr<ChatBackend> make_backend(const ChatBackendSpec& spec);

// Scripted backend with an injectable reply function, used by tests; also
// tracks the peak number of concurrent complete() calls.
class ScriptedBackend : public ChatBackend {
public:
    explicit ScriptedBackend(std::function<std::string(const std::vector<Message>&)> fn);
    explicit ScriptedBackend(std::string fixed_reply);
    std::string complete(const std::vector<Message>& transcript) override;
    int max_observed_concurrency() const;

private:
    struct State;
    std::shared_ptr<State> state_;
};

class ReplayMissError : public std::runtime_error {
public:
    explicit ReplayMissError(const std::string& key)
        : std::runtime_error("no replay entry for " + key) {}
};

// Stable content hash (hex SHA-256) of model, temperature and user turns.
std::string cache_key(const ChatBackendSpec& spec, const std::vector<Message>& transcript);

class ChatSession {
public:
    ChatSession(ChatBackend& backend, const ChatBackendSpec& spec)
        : backend_(backend), spec_(spec) {}

    // Appends the user turn, obtains and appends the assistant reply.
    std::string submit(const std::string& user_turn);

    const std::vector<Message>& turns() const { return turns_; }
    std::string key() const { return cache_key(spec_, turns_); }

private:
    ChatBackend& backend_;
    ChatBackendSpec spec_;
    std::vector<Message> turns_;
};

enum class Answer { Yes, No, Abstain };
enum class Polarity { BuggyQuestion, CorrectQuestion };
enum class Predicted { Vulnerable, NonVulnerable, Excluded };

struct Verdict {
    Answer value = Answer::Abstain;
    Polarity polarity = Polarity::BuggyQuestion;
    Predicted predicted_label = Predicted::Excluded;
    bool ambiguous = false;  // both yes and no in the deciding sentence
};

// Scans the first sentence, then the whole reply, for a standalone yes/no.
Verdict classify_response(const std::string& text, Polarity polarity);

Predicted derive_label(Answer value, Polarity polarity);

struct RunRecord {
    std::string sample_id;
    std::string plan;            // plan actually used (after any downgrade)
    std::string requested_plan;  // plan asked for
    bool downgraded = false;
    std::vector<Message> turns;
    Verdict verdict;
    std::optional<std::string> error;  // per-sample failure, sample Excluded
    double latency_ms = 0.0;
    std::string cache_key;

    std::string to_json() const;
    static RunRecord from_json(const std::string& text);
};

struct RunOptions {
    int max_in_flight = 1;
    std::string record_dir;  // when set, each record is persisted on completion
    bool resume = true;      // skip samples whose record file already exists
};

// One record per sample, in corpus order regardless of completion order.
std::vector<RunRecord> run_detection(const corpus::Corpus& corpus,
                                     const prompt::PromptPlan& plan,
                                     const ChatBackendSpec& backend,
                                     const RunOptions& options = {});

// File name a record is stored under: <sample>.<plan>.json with ':' and '/'
// replaced by '_'.
std::string record_filename(const std::string& sample_id, const std::string& plan);

}  // namespace vulnprompt::llmdriver
