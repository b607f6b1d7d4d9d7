#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vulnprompt/corpus.hpp"
#include "vulnprompt/eval.hpp"
#include "vulnprompt/llmdriver.hpp"

namespace vulnprompt::pipeline {

struct IngestOptions {
    std::string input;  // JSONL file or a directory tree of source files
    Language language = Language::Java;
    uint64_t seed = 0;
    int top_k = 50;
    int budget = 700;
    std::string out;
};

struct IngestSummary {
    // CWE -> (vulnerable, non-vulnerable) after all filters.
    std::map<std::string, std::pair<int, int>> types;
    int accepted = 0;
    std::map<std::string, int> rejected;  // rejection kind -> count

    std::string table() const;
};

// Directory trees follow the SARD layout: one function per file, the label
// read from a bad/good marker in the file name, the CWE from a CWE-prefixed
// path component, and the group from the name with the marker removed.
IngestSummary ingest(const IngestOptions& options);

corpus::Corpus load_input(const std::string& input, Language language);

struct ExtractOptions {
    std::string corpus_path;
    std::string feature;  // "api" | "df"
    std::string out;
};

struct ExtractSummary {
    int extracted = 0;
    std::vector<std::pair<std::string, std::string>> failures;  // id, reason
};

ExtractSummary extract(const ExtractOptions& options);

struct RunConfig {
    std::string corpus_path;
    std::string plan;
    llmdriver::ChatBackendSpec backend;
    int max_in_flight = 1;
    std::string out_dir;
    bool resume = true;
};

struct RunSummary {
    int total = 0;
    int downgraded = 0;
    int errors = 0;
};

RunSummary run(const RunConfig& config);

struct ScoreOptions {
    std::string runs_dir;
    std::string corpus_path;
    eval::ReportFormat format = eval::ReportFormat::Markdown;
    std::string out_dir;
    bool strict = false;
};

// Scores every plan found in the records directory; returns the paths of
// the emitted report files.
std::vector<std::string> score(const ScoreOptions& options);

}  // namespace vulnprompt::pipeline
