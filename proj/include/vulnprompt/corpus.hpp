#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "vulnprompt/types.hpp"

namespace vulnprompt::corpus {

struct Sample {
    std::string id;
    Language language = Language::Java;
    std::string code;
    Label label = Label::NonVulnerable;
    std::optional<std::string> cwe;    // e.g. "CWE-193"
    std::optional<std::string> group;  // links a bad function to its patches
    std::string provenance;
};

enum class RejectionKind { Duplicate, TooShort, TooLong, CrossClassCall, Unparseable };

std::string to_string(RejectionKind kind);

struct RejectionReason {
    RejectionKind kind;
    std::string detail;
};

struct Corpus {
    std::vector<Sample> samples;

    std::map<std::string, int> language_profile() const;
    // Keyed by CWE id; samples without one are tallied under "".
    std::map<std::string, int> type_histogram() const;
};

// Removes line and block comments. Newlines inside a removed comment are
// kept so line numbers of the remaining code do not shift.
std::string strip_comments(const std::string& code, Language language);

// Rewrites bad/good/VULN/PATCHED (and, for C/C++, CVE ids) inside function
// names, at the declaration and at self-recursive call sites only.
std::string scrub_identifiers(const std::string& code, Language language);

// Comment stripping + identifier scrubbing + the per-sample filters
// (line minimum, token budget, cross-class-call heuristic for Java).
std::variant<Sample, RejectionReason> preprocess_sample(const Sample& sample,
                                                        int budget = 700);

// Whitespace-normalized leaf-token stream; the duplicate-detection key.
std::string dedup_key(const std::string& code, Language language);

// Appends `sample` unless an equal dedup key was seen; returns the
// rejection for duplicates.
class DedupFilter {
public:
    std::optional<RejectionReason> admit(const Sample& sample);

private:
    std::map<std::string, std::string> seen_;  // key -> first sample id
};

// For each group holding one vulnerable sample and at least one
// non-vulnerable one, keeps exactly one non-vulnerable sample, chosen by a
// seed-stable RNG. Other samples pass through unchanged.
Corpus pair_mixed_cases(const Corpus& corpus, uint64_t seed);

// Keeps samples whose CWE is among the k most frequent; ties at rank k
// broken by lexicographic CWE id.
Corpus filter_top_types(const Corpus& corpus, int k);

Corpus load_jsonl(const std::string& path);
void save_jsonl(const Corpus& corpus, const std::string& path);

Sample sample_from_json_line(const std::string& line);
std::string sample_to_json_line(const Sample& sample);

}  // namespace vulnprompt::corpus
