#include "vulnprompt/eval.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <unordered_map>

#include <json.hpp>

namespace vulnprompt::eval {

using llmdriver::Predicted;
using llmdriver::RunRecord;
using nlohmann::json;

namespace {

std::unordered_map<std::string, const corpus::Sample*> index_by_id(const corpus::Corpus& c) {
    std::unordered_map<std::string, const corpus::Sample*> by_id;
    for (const corpus::Sample& s : c.samples) by_id.emplace(s.id, &s);
    return by_id;
}

const corpus::Sample& resolve(
    const std::unordered_map<std::string, const corpus::Sample*>& by_id,
    const RunRecord& record) {
    auto it = by_id.find(record.sample_id);
    if (it == by_id.end()) throw UnknownSampleError(record.sample_id);
    return *it->second;
}

}  // namespace

ReportFormat report_format_from_string(const std::string& s) {
    if (s == "json") return ReportFormat::Json;
    if (s == "csv") return ReportFormat::Csv;
    if (s == "markdown") return ReportFormat::Markdown;
    throw DataError("unknown report format: " + s);
}

ConfusionCounts tally(const std::vector<RunRecord>& records, const corpus::Corpus& corpus,
                      bool strict) {
    auto by_id = index_by_id(corpus);
    std::set<std::string> seen;
    ConfusionCounts counts;
    for (const RunRecord& record : records) {
        const corpus::Sample& sample = resolve(by_id, record);
        if (!seen.insert(record.sample_id).second)
            throw DuplicateSampleError(record.sample_id);
        ClassCounts& labeled =
            sample.label == Label::Vulnerable ? counts.vul : counts.nonvul;
        if (record.verdict.predicted_label == Predicted::Excluded) {
            if (strict)
                ++labeled.total;  // kept in the denominator as a miss
            else
                ++counts.excluded;
            continue;
        }
        ++labeled.total;
        bool predicted_vul = record.verdict.predicted_label == Predicted::Vulnerable;
        ClassCounts& predicted = predicted_vul ? counts.vul : counts.nonvul;
        ++predicted.predicted;
        bool correct = predicted_vul == (sample.label == Label::Vulnerable);
        if (correct) ++labeled.detected;
    }
    return counts;
}

ClassMetrics class_metrics(const ConfusionCounts& counts, Label which) {
    const ClassCounts& c = which == Label::Vulnerable ? counts.vul : counts.nonvul;
    ClassMetrics m;
    m.detected = c.detected;
    m.total = c.total;
    m.recall = c.total > 0 ? static_cast<double>(c.detected) / c.total : 0.0;
    m.precision = c.predicted > 0 ? static_cast<double>(c.detected) / c.predicted : 0.0;
    m.f1 = m.precision + m.recall > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    return m;
}

double overall_accuracy(const ConfusionCounts& counts) {
    int total = counts.vul.total + counts.nonvul.total;
    if (total == 0) return 0.0;
    return static_cast<double>(counts.vul.detected + counts.nonvul.detected) / total;
}

std::map<std::string, TypeAccuracy> per_type_accuracy(const std::vector<RunRecord>& records,
                                                      const corpus::Corpus& corpus,
                                                      bool strict) {
    auto by_id = index_by_id(corpus);
    std::map<std::string, std::pair<int, int>> counts;  // cwe -> (correct, total)
    for (const RunRecord& record : records) {
        const corpus::Sample& sample = resolve(by_id, record);
        bool excluded = record.verdict.predicted_label == Predicted::Excluded;
        if (excluded && !strict) continue;
        auto& [correct, total] = counts[sample.cwe.value_or("")];
        ++total;
        if (excluded) continue;
        bool predicted_vul = record.verdict.predicted_label == Predicted::Vulnerable;
        if (predicted_vul == (sample.label == Label::Vulnerable)) ++correct;
    }
    std::map<std::string, TypeAccuracy> out;
    for (const auto& [cwe, pair] : counts) {
        TypeAccuracy acc;
        acc.count = pair.second;
        acc.accuracy = pair.second > 0 ? static_cast<double>(pair.first) / pair.second : 0.0;
        out.emplace(cwe, acc);
    }
    return out;
}

Report build_report(const std::vector<RunRecord>& records, const corpus::Corpus& corpus,
                    const std::string& plan, const std::string& language, bool strict) {
    ConfusionCounts counts = tally(records, corpus, strict);
    Report report;
    report.plan = plan;
    report.language = language;
    report.vul = class_metrics(counts, Label::Vulnerable);
    report.nonvul = class_metrics(counts, Label::NonVulnerable);
    report.accuracy = overall_accuracy(counts);
    report.excluded = counts.excluded;
    report.all_excluded =
        !records.empty() && counts.vul.total + counts.nonvul.total == 0;
    report.per_type = per_type_accuracy(records, corpus, strict);
    return report;
}

double round3(double value) { return std::floor(value * 1000.0 + 0.5) / 1000.0; }

std::string format3(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", round3(value));
    return buf;
}

namespace {

json class_to_json(const ClassMetrics& m) {
    return {
        {"precision", m.precision}, {"recall", m.recall},   {"f1", m.f1},
        {"detected", m.detected},   {"total", m.total},
    };
}

std::string render_json(const Report& r) {
    json j;
    j["plan"] = r.plan;
    j["language"] = r.language;
    j["classes"] = {{"vul", class_to_json(r.vul)}, {"non-vul", class_to_json(r.nonvul)}};
    j["accuracy"] = r.accuracy;
    j["excluded"] = r.excluded;
    j["all_excluded"] = r.all_excluded;
    json types = json::object();
    for (const auto& [cwe, acc] : r.per_type)
        types[cwe] = {{"accuracy", acc.accuracy}, {"count", acc.count}};
    j["per_type"] = std::move(types);
    return j.dump(2) + "\n";
}

std::string render_csv(const Report& r) {
    std::string out = "plan,class,precision,recall,f1,detected,total,accuracy\n";
    auto row = [&](const char* cls, const ClassMetrics& m) {
        out += r.plan + "," + cls + "," + format3(m.precision) + "," + format3(m.recall) +
               "," + format3(m.f1) + "," + std::to_string(m.detected) + "," +
               std::to_string(m.total) + "," + format3(r.accuracy) + "\n";
    };
    row("vul", r.vul);
    row("non-vul", r.nonvul);
    return out;
}

std::string render_markdown(const Report& r) {
    std::string out;
    out += "| Plan | Class | P | R | F1 | Det. | Acc |\n";
    out += "| --- | --- | --- | --- | --- | --- | --- |\n";
    auto row = [&](const char* cls, const ClassMetrics& m, bool with_acc) {
        out += "| " + r.plan + " | " + cls + " | " + format3(m.precision) + " | " +
               format3(m.recall) + " | " + format3(m.f1) + " | " +
               std::to_string(m.detected) + "/" + std::to_string(m.total) + " | " +
               (with_acc ? format3(r.accuracy) : std::string()) + " |\n";
    };
    row("Vulnerable", r.vul, true);
    row("Non-vulnerable", r.nonvul, false);
    if (r.all_excluded) out += "\nWarning: every sample was excluded.\n";
    return out;
}

std::string sanitize(std::string name) {
    for (char& c : name)
        if (c == ':' || c == '/' || c == '\\') c = '_';
    return name;
}

}  // namespace

std::string render_report(const Report& report, ReportFormat format) {
    switch (format) {
        case ReportFormat::Json: return render_json(report);
        case ReportFormat::Csv: return render_csv(report);
        case ReportFormat::Markdown: return render_markdown(report);
    }
    return "";
}

std::string render_per_type_csv(const Report& report) {
    std::string out = "cwe,accuracy,count\n";
    for (const auto& [cwe, acc] : report.per_type)
        out += cwe + "," + format3(acc.accuracy) + "," + std::to_string(acc.count) + "\n";
    return out;
}

std::string report_filename(const std::string& plan, const std::string& language,
                            ReportFormat format) {
    const char* suffix = format == ReportFormat::Json      ? "json"
                         : format == ReportFormat::Csv     ? "csv"
                                                           : "markdown";
    return sanitize(plan) + "." + language + "." + suffix;
}

std::string per_type_filename(const std::string& plan, const std::string& language) {
    return sanitize(plan) + "." + language + ".types.csv";
}

void emit_report(const Report& report, ReportFormat format, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write report file " + path);
    out << render_report(report, format);
    if (!out) throw DataError("failed writing report file " + path);
}

}  // namespace vulnprompt::eval
