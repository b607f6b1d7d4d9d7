#include "vulnprompt.h"

#include <cstring>
#include <functional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "vulnprompt/apiseq.hpp"
#include "vulnprompt/dataflow.hpp"
#include "vulnprompt/pipeline.hpp"
#include "vulnprompt/prompt.hpp"
#include "vulnprompt/syntax.hpp"

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& text) {
    char* out = new char[text.size() + 1];
    std::memcpy(out, text.c_str(), text.size() + 1);
    return out;
}

void set_out(char** slot, const std::string& text) {
    if (slot) *slot = dup_string(text);
}

class UsageError : public std::runtime_error {
public:
    explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

vp_status guard(const std::function<void()>& body) {
    try {
        body();
        g_last_error.clear();
        return VP_OK;
    } catch (const UsageError& e) {
        g_last_error = e.what();
        return VP_ERR_USAGE;
    } catch (const vulnprompt::TransportError& e) {
        g_last_error = e.what();
        return VP_ERR_BACKEND;
    } catch (const vulnprompt::llmdriver::ReplayMissError& e) {
        g_last_error = e.what();
        return VP_ERR_BACKEND;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return VP_ERR_DATA;
    }
}

const char* require(const char* value, const char* name) {
    if (!value) throw UsageError(std::string(name) + " must not be null");
    return value;
}

vulnprompt::Language parse_language(const char* lang) {
    try {
        return vulnprompt::language_from_string(require(lang, "lang"));
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
}

}  // namespace

extern "C" {

const char* vp_last_error(void) { return g_last_error.c_str(); }

void vp_string_free(char* text) { delete[] text; }

vp_status vp_ingest(const char* input, const char* lang, uint64_t seed, int top_k,
                    int budget, const char* out_path, char** summary_out) {
    return guard([&] {
        vulnprompt::pipeline::IngestOptions options;
        options.input = require(input, "input");
        options.language = parse_language(lang);
        options.seed = seed;
        options.top_k = top_k;
        options.budget = budget;
        options.out = require(out_path, "out_path");
        if (budget < 1) throw UsageError("budget must be positive");
        auto summary = vulnprompt::pipeline::ingest(options);
        set_out(summary_out, summary.table());
    });
}

vp_status vp_extract(const char* corpus_path, const char* feature, const char* out_path,
                     char** summary_out) {
    return guard([&] {
        vulnprompt::pipeline::ExtractOptions options;
        options.corpus_path = require(corpus_path, "corpus_path");
        options.feature = require(feature, "feature");
        options.out = require(out_path, "out_path");
        if (options.feature != "api" && options.feature != "df")
            throw UsageError("feature must be api or df");
        auto summary = vulnprompt::pipeline::extract(options);
        set_out(summary_out, std::to_string(summary.extracted) + " " +
                                 std::to_string(summary.failures.size()));
    });
}

vp_status vp_run(const char* corpus_path, const char* plan, const char* backend_json,
                 int max_in_flight, const char* out_dir, char** summary_out) {
    return guard([&] {
        vulnprompt::pipeline::RunConfig config;
        config.corpus_path = require(corpus_path, "corpus_path");
        config.plan = require(plan, "plan");
        if (!vulnprompt::prompt::find_plan(config.plan))
            throw UsageError("unknown plan: " + config.plan);
        try {
            config.backend = vulnprompt::llmdriver::ChatBackendSpec::from_json(
                require(backend_json, "backend_json"));
        } catch (const nlohmann::json::exception& e) {
            throw UsageError(std::string("bad backend spec: ") + e.what());
        }
        config.max_in_flight = max_in_flight > 0 ? max_in_flight : 1;
        config.out_dir = require(out_dir, "out_dir");
        auto summary = vulnprompt::pipeline::run(config);
        set_out(summary_out, std::to_string(summary.total) + " " +
                                 std::to_string(summary.downgraded) + " " +
                                 std::to_string(summary.errors));
    });
}

vp_status vp_score(const char* runs_dir, const char* corpus_path, const char* format,
                   int strict, const char* out_dir, char** files_out) {
    return guard([&] {
        vulnprompt::pipeline::ScoreOptions options;
        options.runs_dir = require(runs_dir, "runs_dir");
        options.corpus_path = require(corpus_path, "corpus_path");
        try {
            options.format =
                vulnprompt::eval::report_format_from_string(require(format, "format"));
        } catch (const std::exception& e) {
            throw UsageError(e.what());
        }
        options.strict = strict != 0;
        options.out_dir = require(out_dir, "out_dir");
        auto files = vulnprompt::pipeline::score(options);
        std::ostringstream joined;
        for (const std::string& f : files) joined << f << '\n';
        set_out(files_out, joined.str());
    });
}

vp_status vp_render_prompt(const char* plan, const char* code, const char* lang,
                           char** turns_json_out) {
    return guard([&] {
        const auto* found = vulnprompt::prompt::find_plan(require(plan, "plan"));
        if (!found) throw UsageError(std::string("unknown plan: ") + plan);
        vulnprompt::Language language = parse_language(lang);
        std::string source = require(code, "code");

        std::optional<std::string> api_text, df_text;
        if (found->needs_api() || found->needs_df()) {
            auto tree = vulnprompt::syntax::parse(source, language);
            if (found->needs_api())
                api_text = vulnprompt::prompt::render_api_description(
                    vulnprompt::apiseq::extract_api_sequence(tree));
            if (found->needs_df()) {
                auto tokens = vulnprompt::syntax::leaves(tree);
                df_text = vulnprompt::prompt::render_df_description(
                    vulnprompt::dataflow::extract_dataflow(tree, tokens));
            }
        }
        auto rendered =
            vulnprompt::prompt::render_prompt(*found, source, api_text, df_text);
        nlohmann::json turns = nlohmann::json::array();
        for (const std::string& turn : rendered.turns) turns.push_back(turn);
        set_out(turns_json_out, turns.dump());
    });
}

vp_status vp_extract_api_json(const char* code, const char* lang, char** json_out) {
    return guard([&] {
        auto tree =
            vulnprompt::syntax::parse(require(code, "code"), parse_language(lang));
        set_out(json_out,
                vulnprompt::apiseq::to_json(vulnprompt::apiseq::extract_api_sequence(tree)));
    });
}

vp_status vp_extract_dataflow_json(const char* code, const char* lang, char** json_out) {
    return guard([&] {
        auto tree =
            vulnprompt::syntax::parse(require(code, "code"), parse_language(lang));
        auto tokens = vulnprompt::syntax::leaves(tree);
        set_out(json_out, vulnprompt::dataflow::to_json(
                              vulnprompt::dataflow::extract_dataflow(tree, tokens)));
    });
}

}  // extern "C"
