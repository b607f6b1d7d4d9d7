#include "vulnprompt/llmdriver.hpp"

#include <openssl/evp.h>

#include <atomic>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include <httplib.h>

#include "vulnprompt/apiseq.hpp"
#include "vulnprompt/dataflow.hpp"
#include "vulnprompt/syntax.hpp"

namespace vulnprompt::llmdriver {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

json transcript_to_json(const std::vector<Message>& transcript) {
    json messages = json::array();
    for (const Message& m : transcript) messages.push_back({{"role", m.role}, {"content", m.text}});
    return messages;
}

}  // namespace

std::string cache_key(const ChatBackendSpec& spec, const std::vector<Message>& transcript) {
    // Only content that shapes the reply: model, temperature, user turns.
    std::string payload = spec.model_id + "\x1f" + std::to_string(spec.temperature);
    for (const Message& m : transcript)
        if (m.role == "user") payload += "\x1f" + m.text;
    return sha256_hex(payload);
}

ChatBackendSpec ChatBackendSpec::from_json(const std::string& text) {
    json j = json::parse(text);
    ChatBackendSpec spec;
    std::string kind = j.value("kind", "scripted");
    if (kind == "http")
        spec.kind = BackendKind::HttpChat;
    else if (kind == "replay")
        spec.kind = BackendKind::Replay;
    else if (kind == "scripted")
        spec.kind = BackendKind::Scripted;
    else
        throw DataError("unknown backend kind: " + kind);
    spec.model_id = j.value("model", spec.model_id);
    spec.temperature = j.value("temperature", spec.temperature);
    spec.endpoint = j.value("endpoint", spec.endpoint);
    spec.path = j.value("path", spec.path);
    spec.api_key_env = j.value("api_key_env", spec.api_key_env);
    spec.scripted_reply = j.value("reply", spec.scripted_reply);
    spec.cache_dir = j.value("cache", spec.cache_dir);
    spec.strict_replay = j.value("strict", spec.strict_replay);
    spec.request_timeout_seconds = j.value("timeout", spec.request_timeout_seconds);
    spec.max_retries = j.value("max_retries", spec.max_retries);
    return spec;
}

std::string ChatBackendSpec::to_json() const {
    json j;
    switch (kind) {
        case BackendKind::HttpChat: j["kind"] = "http"; break;
        case BackendKind::Replay: j["kind"] = "replay"; break;
        case BackendKind::Scripted: j["kind"] = "scripted"; break;
    }
    j["model"] = model_id;
    j["temperature"] = temperature;
    if (!endpoint.empty()) j["endpoint"] = endpoint;
    if (!cache_dir.empty()) j["cache"] = cache_dir;
    return j.dump();
}

// --- scripted ----------------------------------------------------------------

struct ScriptedBackend::State {
    std::function<std::string(const std::vector<Message>&)> fn;
    std::atomic<int> in_flight{0};
    std::atomic<int> peak{0};
};

ScriptedBackend::ScriptedBackend(std::function<std::string(const std::vector<Message>&)> fn)
    : state_(std::make_shared<State>()) {
    state_->fn = std::move(fn);
}

ScriptedBackend::ScriptedBackend(std::string fixed_reply)
    : ScriptedBackend([reply = std::move(fixed_reply)](const std::vector<Message>&) {
          return reply;
      }) {}

std::string ScriptedBackend::complete(const std::vector<Message>& transcript) {
    int now = ++state_->in_flight;
    int prev = state_->peak.load();
    while (now > prev && !state_->peak.compare_exchange_weak(prev, now)) {
    }
    std::string reply = state_->fn(transcript);
    --state_->in_flight;
    return reply;
}

int ScriptedBackend::max_observed_concurrency() const { return state_->peak.load(); }

// --- replay store --------------------------------------------------------------

namespace {

class ReplayStore {
public:
    explicit ReplayStore(std::string dir) : dir_(std::move(dir)) {}

    std::optional<std::string> lookup(const std::string& key) const {
        fs::path file = fs::path(dir_) / (key + ".json");
        std::ifstream in(file);
        if (!in) return std::nullopt;
        json j = json::parse(in);
        const auto& messages = j.at("messages");
        for (auto it = messages.rbegin(); it != messages.rend(); ++it)
            if ((*it).at("role") == "assistant") return (*it).at("content").get<std::string>();
        return std::nullopt;
    }

    void store(const std::string& key, const ChatBackendSpec& spec,
               const std::vector<Message>& transcript, const std::string& reply) const {
        fs::create_directories(dir_);
        json j;
        j["model"] = spec.model_id;
        j["temperature"] = spec.temperature;
        json messages = transcript_to_json(transcript);
        messages.push_back({{"role", "assistant"}, {"content", reply}});
        j["messages"] = std::move(messages);
        fs::path file = fs::path(dir_) / (key + ".json");
        fs::path tmp = fs::path(dir_) / (key + ".json.tmp");
        {
            std::ofstream out(tmp);
            out << j.dump(2) << '\n';
        }
        fs::rename(tmp, file);  // writers are serialized per key
    }

private:
    std::string dir_;
};

class ReplayBackend : public ChatBackend {
public:
    explicit ReplayBackend(ChatBackendSpec spec)
        : spec_(std::move(spec)), store_(spec_.cache_dir) {}

    std::string complete(const std::vector<Message>& transcript) override {
        std::string key = cache_key(spec_, transcript);
        auto reply = store_.lookup(key);
        if (reply) return *reply;
        if (spec_.strict_replay) throw ReplayMissError(key);
        return "";
    }

private:
    ChatBackendSpec spec_;
    ReplayStore store_;
};

class HttpChatBackend : public ChatBackend {
public:
    explicit HttpChatBackend(ChatBackendSpec spec) : spec_(std::move(spec)) {}

    std::string complete(const std::vector<Message>& transcript) override {
        json body;
        body["model"] = spec_.model_id;
        body["messages"] = transcript_to_json(transcript);
        body["temperature"] = spec_.temperature;

        std::string error;
        int backoff_ms = 500;
        for (int attempt = 0; attempt <= spec_.max_retries; ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
                backoff_ms *= 2;
            }
            try {
                httplib::Client client(spec_.endpoint);
                client.set_read_timeout(spec_.request_timeout_seconds, 0);
                httplib::Headers headers;
                const char* key = std::getenv(spec_.api_key_env.c_str());
                if (key) headers.emplace("Authorization", std::string("Bearer ") + key);
                auto res = client.Post(spec_.path, headers, body.dump(), "application/json");
                if (!res) {
                    error = "transport failure";
                    continue;
                }
                if (res->status >= 500) {
                    error = "server error " + std::to_string(res->status);
                    continue;
                }
                if (res->status != 200)
                    throw TransportError("chat request failed with status " +
                                         std::to_string(res->status) + ": " + res->body);
                json reply = json::parse(res->body);
                return reply.at("choices").at(0).at("message").at("content").get<std::string>();
            } catch (const json::exception& e) {
                throw TransportError(std::string("malformed chat response: ") + e.what());
            }
        }
        throw TransportError("retries exhausted: " + error);
    }

private:
    ChatBackendSpec spec_;
};

// Writes every live reply into the replay store, making the run replayable.
class RecordingBackend : public ChatBackend {
public:
    RecordingBackend(std::unique_ptr<ChatBackend> inner, ChatBackendSpec spec)
        : inner_(std::move(inner)), spec_(std::move(spec)), store_(spec_.cache_dir) {}

    std::string complete(const std::vector<Message>& transcript) override {
        std::string key = cache_key(spec_, transcript);
        auto cached = store_.lookup(key);
        if (cached) return *cached;
        std::string reply = inner_->complete(transcript);
        std::lock_guard<std::mutex> lock(write_mutex_);
        store_.store(key, spec_, transcript, reply);
        return reply;
    }

private:
    std::unique_ptr<ChatBackend> inner_;
    ChatBackendSpec spec_;
    ReplayStore store_;
    std::mutex write_mutex_;
};

}  // namespace

std::unique_ptr<ChatBackend> make_backend(const ChatBackendSpec& spec) {
    std::unique_ptr<ChatBackend> backend;
    switch (spec.kind) {
        case BackendKind::Scripted:
            backend = std::make_unique<ScriptedBackend>(spec.scripted_reply);
            break;
        case BackendKind::Replay:
            return std::make_unique<ReplayBackend>(spec);
        case BackendKind::HttpChat:
            backend = std::make_unique<HttpChatBackend>(spec);
            break;
    }
    if (!spec.cache_dir.empty())
        return std::make_unique<RecordingBackend>(std::move(backend), spec);
    return backend;
}

std::string ChatSession::submit(const std::string& user_turn) {
    turns_.push_back({"user", user_turn});
    std::string reply = backend_.complete(turns_);
    turns_.push_back({"assistant", reply});
    return reply;
}

// --- verdicts ---------------------------------------------------------------

Predicted derive_label(Answer value, Polarity polarity) {
    if (value == Answer::Abstain) return Predicted::Excluded;
    bool yes = value == Answer::Yes;
    bool buggy = polarity == Polarity::BuggyQuestion;
    return yes == buggy ? Predicted::Vulnerable : Predicted::NonVulnerable;
}

namespace {

struct SentenceScan {
    bool yes = false;
    bool no = false;
};

std::vector<SentenceScan> scan_sentences(const std::string& text) {
    std::vector<SentenceScan> sentences(1);
    std::string word;
    auto flush_word = [&] {
        if (word == "yes") sentences.back().yes = true;
        if (word == "no") sentences.back().no = true;
        word.clear();
    };
    for (char c : text) {
        if (std::isalpha(static_cast<unsigned char>(c))) {
            word += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else {
            flush_word();
            if (c == '.' || c == '!' || c == '?' || c == '\n') sentences.emplace_back();
        }
    }
    flush_word();
    return sentences;
}

bool looks_like_refusal(const std::string& text) {
    std::string lower;
    lower.reserve(text.size());
    for (char c : text) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    for (const char* phrase : {"cannot", "can't", "unable to", "as an ai", "i'm sorry", "i am sorry"})
        if (lower.find(phrase) != std::string::npos) return true;
    return false;
}

}  // namespace

Verdict classify_response(const std::string& text, Polarity polarity) {
    Verdict v;
    v.polarity = polarity;
    for (const SentenceScan& s : scan_sentences(text)) {
        if (!s.yes && !s.no) continue;
        v.value = s.yes ? Answer::Yes : Answer::No;  // yes beats no
        v.ambiguous = s.yes && s.no;
        v.predicted_label = derive_label(v.value, polarity);
        return v;
    }
    v.value = Answer::Abstain;
    v.predicted_label = Predicted::Excluded;
    (void)looks_like_refusal(text);  // refusals and silent non-answers both abstain
    return v;
}

// --- run records --------------------------------------------------------------

namespace {

const char* answer_name(Answer a) {
    switch (a) {
        case Answer::Yes: return "yes";
        case Answer::No: return "no";
        case Answer::Abstain: return "abstain";
    }
    return "?";
}

Answer answer_from(const std::string& s) {
    if (s == "yes") return Answer::Yes;
    if (s == "no") return Answer::No;
    return Answer::Abstain;
}

const char* predicted_name(Predicted p) {
    switch (p) {
        case Predicted::Vulnerable: return "vul";
        case Predicted::NonVulnerable: return "non-vul";
        case Predicted::Excluded: return "excluded";
    }
    return "?";
}

Predicted predicted_from(const std::string& s) {
    if (s == "vul") return Predicted::Vulnerable;
    if (s == "non-vul") return Predicted::NonVulnerable;
    return Predicted::Excluded;
}

}  // namespace

std::string RunRecord::to_json() const {
    json j;
    j["sample_id"] = sample_id;
    j["plan"] = plan;
    j["requested_plan"] = requested_plan;
    j["downgraded"] = downgraded;
    j["turns"] = transcript_to_json(turns);
    j["verdict"] = {
        {"value", answer_name(verdict.value)},
        {"polarity", verdict.polarity == Polarity::BuggyQuestion ? "buggy" : "correct"},
        {"predicted", predicted_name(verdict.predicted_label)},
        {"ambiguous", verdict.ambiguous},
    };
    if (error) j["error"] = *error;
    j["latency_ms"] = latency_ms;
    j["cache_key"] = cache_key;
    return j.dump();
}

RunRecord RunRecord::from_json(const std::string& text) {
    json j = json::parse(text);
    RunRecord r;
    r.sample_id = j.at("sample_id").get<std::string>();
    r.plan = j.at("plan").get<std::string>();
    r.requested_plan = j.value("requested_plan", r.plan);
    r.downgraded = j.value("downgraded", false);
    for (const auto& m : j.value("turns", json::array()))
        r.turns.push_back({m.at("role").get<std::string>(), m.at("content").get<std::string>()});
    const auto& v = j.at("verdict");
    r.verdict.value = answer_from(v.at("value").get<std::string>());
    r.verdict.polarity = v.value("polarity", "buggy") == "correct"
                             ? Polarity::CorrectQuestion
                             : Polarity::BuggyQuestion;
    r.verdict.predicted_label = predicted_from(v.at("predicted").get<std::string>());
    r.verdict.ambiguous = v.value("ambiguous", false);
    if (j.contains("error") && !j["error"].is_null()) r.error = j["error"].get<std::string>();
    r.latency_ms = j.value("latency_ms", 0.0);
    r.cache_key = j.value("cache_key", "");
    return r;
}

std::string record_filename(const std::string& sample_id, const std::string& plan) {
    std::string name = sample_id + "." + plan + ".json";
    for (char& c : name)
        if (c == ':' || c == '/' || c == '\\') c = '_';
    return name;
}

// --- runner ---------------------------------------------------------------------

namespace {

struct Features {
    std::optional<std::string> api_text;
    std::optional<std::string> df_text;
};

Features extract_features(const corpus::Sample& sample, const prompt::PromptPlan& plan) {
    Features f;
    if (!plan.needs_api() && !plan.needs_df()) return f;
    auto tree = syntax::parse(sample.code, sample.language);
    if (plan.needs_api())
        f.api_text = prompt::render_api_description(apiseq::extract_api_sequence(tree));
    if (plan.needs_df()) {
        auto tokens = syntax::leaves(tree);
        f.df_text = prompt::render_df_description(dataflow::extract_dataflow(tree, tokens));
    }
    return f;
}

// Walks the downgrade links until the plan's feature requirements are met.
const prompt::PromptPlan* effective_plan(const prompt::PromptPlan* plan, const Features& f,
                                         bool have_summary) {
    for (int hops = 0; plan && hops < 4; ++hops) {
        if (plan->needs_api() && (!f.api_text || f.api_text->empty()) && plan->without_api) {
            plan = prompt::find_plan(*plan->without_api);
            continue;
        }
        if (plan->needs_df() && (!f.df_text || f.df_text->empty()) && plan->without_df) {
            plan = prompt::find_plan(*plan->without_df);
            continue;
        }
        if (plan->needs_summary() && !have_summary && plan->without_summary) {
            plan = prompt::find_plan(*plan->without_summary);
            continue;
        }
        break;
    }
    return plan;
}

RunRecord run_one(const corpus::Sample& sample, const prompt::PromptPlan& requested,
                  ChatBackend& backend, const ChatBackendSpec& spec) {
    RunRecord record;
    record.sample_id = sample.id;
    record.requested_plan = requested.name;
    auto started = std::chrono::steady_clock::now();
    try {
        Features features = extract_features(sample, requested);
        const prompt::PromptPlan* plan = effective_plan(&requested, features, false);
        if (!plan) throw MissingFeatureError("no usable plan for " + requested.name);
        record.plan = plan->name;
        record.downgraded = plan->name != requested.name;

        prompt::RenderedPrompt rendered =
            prompt::render_prompt(*plan, sample.code, features.api_text, features.df_text);

        ChatSession session(backend, spec);
        std::string reply;
        for (const std::string& turn : rendered.turns) reply = session.submit(turn);
        record.turns = session.turns();
        record.cache_key = session.key();
        Polarity polarity = plan->reverse_question() ? Polarity::CorrectQuestion
                                                     : Polarity::BuggyQuestion;
        record.verdict = classify_response(reply, polarity);
    } catch (const std::exception& e) {
        record.error = e.what();
        record.verdict.value = Answer::Abstain;
        record.verdict.predicted_label = Predicted::Excluded;
        if (record.plan.empty()) record.plan = requested.name;
    }
    record.latency_ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - started)
                            .count();
    return record;
}

}  // namespace

std::vector<RunRecord> run_detection(const corpus::Corpus& corpus,
                                     const prompt::PromptPlan& plan,
                                     const ChatBackendSpec& backend_spec,
                                     const RunOptions& options) {
    std::unique_ptr<ChatBackend> backend = make_backend(backend_spec);
    std::vector<RunRecord> records(corpus.samples.size());

    if (!options.record_dir.empty()) fs::create_directories(options.record_dir);

    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= corpus.samples.size()) return;
            const corpus::Sample& sample = corpus.samples[i];
            fs::path record_file;
            if (!options.record_dir.empty()) {
                record_file = fs::path(options.record_dir) /
                              record_filename(sample.id, plan.name);
                if (options.resume && fs::exists(record_file)) {
                    std::ifstream in(record_file);
                    std::string text((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
                    try {
                        records[i] = RunRecord::from_json(text);
                        continue;
                    } catch (const std::exception&) {
                        // unreadable record: recompute below
                    }
                }
            }
            records[i] = run_one(sample, plan, *backend, backend_spec);
            if (!record_file.empty()) {
                fs::path tmp = record_file;
                tmp += ".tmp";
                {
                    std::ofstream out(tmp);
                    out << records[i].to_json() << '\n';
                }
                fs::rename(tmp, record_file);
            }
        }
    };

    int workers = std::max(1, options.max_in_flight);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
    return records;
}

}  // namespace vulnprompt::llmdriver
