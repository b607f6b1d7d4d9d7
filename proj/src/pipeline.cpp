#include "vulnprompt/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "vulnprompt/apiseq.hpp"
#include "vulnprompt/dataflow.hpp"
#include "vulnprompt/prompt.hpp"
#include "vulnprompt/syntax.hpp"

namespace vulnprompt::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool extension_matches(const fs::path& path, Language language) {
    std::string ext = path.extension().string();
    switch (language) {
        case Language::Java: return ext == ".java";
        case Language::C: return ext == ".c";
        case Language::Cpp: return ext == ".cpp" || ext == ".cc" || ext == ".cxx";
    }
    return false;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

corpus::Sample sample_from_file(const fs::path& root, const fs::path& file,
                                Language language) {
    corpus::Sample sample;
    sample.id = fs::relative(file, root).generic_string();
    sample.language = language;
    sample.code = read_file(file);
    sample.provenance = "dir:" + root.filename().string();

    std::string stem = file.stem().string();
    static const std::regex good_bad("(_?)(bad|good)([0-9]*)(G2B|B2G)?");
    std::smatch m;
    if (std::regex_search(stem, m, good_bad)) {
        sample.label = m[2] == "bad" ? Label::Vulnerable : Label::NonVulnerable;
        std::string group = stem.substr(0, m.position(0)) +
                            stem.substr(m.position(0) + m.length(0));
        sample.group = fs::relative(file.parent_path(), root).generic_string() + "/" + group;
    } else {
        sample.label = Label::NonVulnerable;
    }

    static const std::regex cwe_pattern("CWE[-_]?([0-9]+)");
    for (const fs::path& part : fs::relative(file, root)) {
        std::string text = part.string();
        if (std::regex_search(text, m, cwe_pattern)) {
            sample.cwe = "CWE-" + m[1].str();
            break;
        }
    }
    return sample;
}

corpus::Corpus load_directory(const fs::path& root, Language language) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(root))
        if (entry.is_regular_file() && extension_matches(entry.path(), language))
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    corpus::Corpus out;
    for (const fs::path& file : files)
        out.samples.push_back(sample_from_file(root, file, language));
    return out;
}

}  // namespace

corpus::Corpus load_input(const std::string& input, Language language) {
    fs::path path(input);
    if (fs::is_directory(path)) return load_directory(path, language);
    if (!fs::exists(path)) throw DataError("input not found: " + input);
    return corpus::load_jsonl(input);
}

std::string IngestSummary::table() const {
    std::ostringstream out;
    out << "Type\t#Vul\t#Non-Vul\tAll\n";
    int vul = 0, nonvul = 0;
    for (const auto& [cwe, counts] : types) {
        out << (cwe.empty() ? "(none)" : cwe) << '\t' << counts.first << '\t'
            << counts.second << '\t' << counts.first + counts.second << '\n';
        vul += counts.first;
        nonvul += counts.second;
    }
    out << "Total\t" << vul << '\t' << nonvul << '\t' << vul + nonvul << '\n';
    if (!rejected.empty()) {
        out << "Rejected:";
        for (const auto& [kind, count] : rejected) out << ' ' << kind << '=' << count;
        out << '\n';
    }
    return out.str();
}

IngestSummary ingest(const IngestOptions& options) {
    corpus::Corpus raw = load_input(options.input, options.language);

    IngestSummary summary;
    corpus::Corpus kept;
    corpus::DedupFilter dedup;
    for (const corpus::Sample& sample : raw.samples) {
        auto result = corpus::preprocess_sample(sample, options.budget);
        if (auto* rejection = std::get_if<corpus::RejectionReason>(&result)) {
            ++summary.rejected[corpus::to_string(rejection->kind)];
            continue;
        }
        corpus::Sample& clean = std::get<corpus::Sample>(result);
        if (auto rejection = dedup.admit(clean)) {
            ++summary.rejected[corpus::to_string(rejection->kind)];
            continue;
        }
        kept.samples.push_back(std::move(clean));
    }

    kept = corpus::pair_mixed_cases(kept, options.seed);
    if (options.top_k > 0) kept = corpus::filter_top_types(kept, options.top_k);

    for (const corpus::Sample& sample : kept.samples) {
        auto& counts = summary.types[sample.cwe.value_or("")];
        (sample.label == Label::Vulnerable ? counts.first : counts.second) += 1;
    }
    summary.accepted = static_cast<int>(kept.samples.size());
    corpus::save_jsonl(kept, options.out);
    return summary;
}

ExtractSummary extract(const ExtractOptions& options) {
    if (options.feature != "api" && options.feature != "df")
        throw DataError("unknown feature: " + options.feature);
    corpus::Corpus c = corpus::load_jsonl(options.corpus_path);
    std::ofstream out(options.out);
    if (!out) throw DataError("cannot write " + options.out);

    ExtractSummary summary;
    for (const corpus::Sample& sample : c.samples) {
        json line;
        line["id"] = sample.id;
        try {
            auto tree = syntax::parse(sample.code, sample.language);
            if (options.feature == "api") {
                line["api"] =
                    json::parse(apiseq::to_json(apiseq::extract_api_sequence(tree)));
            } else {
                auto tokens = syntax::leaves(tree);
                line["df"] =
                    json::parse(dataflow::to_json(dataflow::extract_dataflow(tree, tokens)));
            }
            ++summary.extracted;
        } catch (const std::exception& e) {
            line["error"] = e.what();
            summary.failures.emplace_back(sample.id, e.what());
        }
        out << line.dump() << '\n';
    }
    return summary;
}

RunSummary run(const RunConfig& config) {
    const prompt::PromptPlan* plan = prompt::find_plan(config.plan);
    if (!plan) throw DataError("unknown plan: " + config.plan);
    corpus::Corpus c = corpus::load_jsonl(config.corpus_path);

    llmdriver::RunOptions options;
    options.max_in_flight = config.max_in_flight;
    options.record_dir = config.out_dir;
    options.resume = config.resume;
    std::vector<llmdriver::RunRecord> records =
        llmdriver::run_detection(c, *plan, config.backend, options);

    RunSummary summary;
    summary.total = static_cast<int>(records.size());
    for (const llmdriver::RunRecord& record : records) {
        if (record.downgraded) ++summary.downgraded;
        if (record.error) ++summary.errors;
    }
    return summary;
}

std::vector<std::string> score(const ScoreOptions& options) {
    corpus::Corpus c = corpus::load_jsonl(options.corpus_path);

    std::map<std::string, std::vector<llmdriver::RunRecord>> by_plan;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(options.runs_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".json")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const fs::path& file : files) {
        llmdriver::RunRecord record = llmdriver::RunRecord::from_json(read_file(file));
        by_plan[record.requested_plan].push_back(std::move(record));
    }

    std::string language = "mixed";
    auto profile = c.language_profile();
    if (profile.size() == 1) language = profile.begin()->first;

    fs::create_directories(options.out_dir);
    std::vector<std::string> emitted;
    for (const auto& [plan, records] : by_plan) {
        eval::Report report =
            eval::build_report(records, c, plan, language, options.strict);
        fs::path report_path = fs::path(options.out_dir) /
                               eval::report_filename(plan, language, options.format);
        eval::emit_report(report, options.format, report_path.string());
        emitted.push_back(report_path.string());

        fs::path types_path =
            fs::path(options.out_dir) / eval::per_type_filename(plan, language);
        std::ofstream types(types_path);
        if (!types) throw DataError("cannot write " + types_path.string());
        types << eval::render_per_type_csv(report);
        emitted.push_back(types_path.string());
    }
    return emitted;
}

}  // namespace vulnprompt::pipeline
