#pragma once

#include <map>
#include <string>
#include <vector>

#include "vulnprompt/corpus.hpp"
#include "vulnprompt/llmdriver.hpp"

namespace vulnprompt::eval {

class DuplicateSampleError : public DataError {
public:
    explicit DuplicateSampleError(const std::string& id)
        : DataError("duplicate record for sample " + id) {}
};

class UnknownSampleError : public DataError {
public:
    explicit UnknownSampleError(const std::string& ids)
        : DataError("records reference unknown sample ids: " + ids) {}
};

struct ClassCounts {
    int detected = 0;   // correctly predicted as this class
    int total = 0;      // labeled this class, not excluded
    int predicted = 0;  // predicted this class, not excluded
};

struct ConfusionCounts {
    ClassCounts vul;
    ClassCounts nonvul;
    int excluded = 0;
};

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    int detected = 0;
    int total = 0;
};

struct TypeAccuracy {
    double accuracy = 0.0;
    int count = 0;  // non-excluded samples of this type
};

struct Report {
    std::string plan;
    std::string language;
    ClassMetrics vul;
    ClassMetrics nonvul;
    double accuracy = 0.0;
    int excluded = 0;
    bool all_excluded = false;
    std::map<std::string, TypeAccuracy> per_type;  // keyed by CWE id
};

enum class ReportFormat { Json, Csv, Markdown };

ReportFormat report_format_from_string(const std::string& s);

// Excluded verdicts leave both denominators unless strict, which keeps the
// sample in its class total as an undetected miss.
ConfusionCounts tally(const std::vector<llmdriver::RunRecord>& records,
                      const corpus::Corpus& corpus, bool strict = false);

ClassMetrics class_metrics(const ConfusionCounts& counts, Label which);

double overall_accuracy(const ConfusionCounts& counts);

std::map<std::string, TypeAccuracy> per_type_accuracy(
    const std::vector<llmdriver::RunRecord>& records, const corpus::Corpus& corpus,
    bool strict = false);

Report build_report(const std::vector<llmdriver::RunRecord>& records,
                    const corpus::Corpus& corpus, const std::string& plan,
                    const std::string& language, bool strict = false);

// Half-up rounding to 3 decimals, applied only when a report is emitted.
double round3(double value);
std::string format3(double value);

std::string render_report(const Report& report, ReportFormat format);

// Bar-chart-ready per-type data: header "cwe,accuracy,count", one row per CWE.
std::string render_per_type_csv(const Report& report);

// "<plan>.<language>.<format>" with path-hostile characters replaced.
std::string report_filename(const std::string& plan, const std::string& language,
                            ReportFormat format);
std::string per_type_filename(const std::string& plan, const std::string& language);

void emit_report(const Report& report, ReportFormat format, const std::string& path);

}  // namespace vulnprompt::eval
