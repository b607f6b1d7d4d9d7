#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "helpers.hpp"
#include "vulnprompt/eval.hpp"

using namespace vulnprompt;
using namespace vulnprompt::eval;
using llmdriver::Predicted;
using llmdriver::RunRecord;

namespace {

corpus::Sample labeled(std::string id, Label label, std::string cwe = "CWE-000") {
    corpus::Sample s;
    s.id = std::move(id);
    s.language = Language::Java;
    s.code = "void f() { }";
    s.label = label;
    s.cwe = std::move(cwe);
    return s;
}

RunRecord predicted(std::string id, Predicted value) {
    RunRecord r;
    r.sample_id = std::move(id);
    r.plan = "r-b";
    r.requested_plan = "r-b";
    r.verdict.predicted_label = value;
    r.verdict.value = value == Predicted::Excluded ? llmdriver::Answer::Abstain
                                                   : llmdriver::Answer::Yes;
    return r;
}

}  // namespace

TEST_CASE("excluded samples leave the denominators") {
    corpus::Corpus c;
    c.samples = {labeled("a", Label::Vulnerable), labeled("b", Label::Vulnerable),
                 labeled("c", Label::Vulnerable)};
    std::vector<RunRecord> records = {predicted("a", Predicted::Vulnerable),
                                      predicted("b", Predicted::Vulnerable),
                                      predicted("c", Predicted::Excluded)};
    ConfusionCounts counts = tally(records, c);
    CHECK(counts.vul.detected == 2);
    CHECK(counts.vul.total == 2);
    CHECK(counts.excluded == 1);
}

TEST_CASE("all-correct runs detect every sample") {
    corpus::Corpus c;
    c.samples = {labeled("a", Label::Vulnerable), labeled("b", Label::NonVulnerable)};
    std::vector<RunRecord> records = {predicted("a", Predicted::Vulnerable),
                                      predicted("b", Predicted::NonVulnerable)};
    ConfusionCounts counts = tally(records, c);
    CHECK(counts.vul.detected == counts.vul.total);
    CHECK(counts.nonvul.detected == counts.nonvul.total);
}

TEST_CASE("a mixed six-record fixture matches the hand tally") {
    corpus::Corpus c;
    c.samples = {labeled("a", Label::Vulnerable),    labeled("b", Label::Vulnerable),
                 labeled("c", Label::Vulnerable),    labeled("d", Label::NonVulnerable),
                 labeled("e", Label::NonVulnerable), labeled("f", Label::NonVulnerable)};
    std::vector<RunRecord> records = {
        predicted("a", Predicted::Vulnerable),     // hit
        predicted("b", Predicted::NonVulnerable),  // miss
        predicted("c", Predicted::Excluded),       // excluded
        predicted("d", Predicted::NonVulnerable),  // hit
        predicted("e", Predicted::Vulnerable),     // miss
        predicted("f", Predicted::NonVulnerable),  // hit
    };
    ConfusionCounts counts = tally(records, c);
    CHECK(counts.vul.detected == 1);
    CHECK(counts.vul.total == 2);
    CHECK(counts.vul.predicted == 2);
    CHECK(counts.nonvul.detected == 2);
    CHECK(counts.nonvul.total == 3);
    CHECK(counts.nonvul.predicted == 3);
    CHECK(counts.excluded == 1);
    CHECK(overall_accuracy(counts) == doctest::Approx(3.0 / 5.0));
}

TEST_CASE("duplicate record ids are rejected") {
    corpus::Corpus c;
    c.samples = {labeled("a", Label::Vulnerable)};
    std::vector<RunRecord> records = {predicted("a", Predicted::Vulnerable),
                                      predicted("a", Predicted::Vulnerable)};
    CHECK_THROWS_AS(tally(records, c), DuplicateSampleError);
}

TEST_CASE("records naming unknown samples are rejected") {
    corpus::Corpus c;
    c.samples = {labeled("a", Label::Vulnerable)};
    std::vector<RunRecord> records = {predicted("ghost", Predicted::Vulnerable)};
    CHECK_THROWS_AS(tally(records, c), UnknownSampleError);
}

TEST_CASE("class metrics reproduce the printed vulnerable row") {
    ConfusionCounts counts;
    counts.vul = {1091, 1171, 1656};
    counts.nonvul = {352, 917, 0};
    ClassMetrics m = class_metrics(counts, Label::Vulnerable);
    CHECK(round3(m.recall) == doctest::Approx(0.932));
    CHECK(round3(m.precision) == doctest::Approx(0.659));
    CHECK(round3(m.f1) == doctest::Approx(0.772));
    CHECK(round3(overall_accuracy(counts)) == doctest::Approx(0.691));
}

TEST_CASE("zero detections yield zero metrics") {
    ConfusionCounts counts;
    counts.vul = {0, 10, 0};
    ClassMetrics m = class_metrics(counts, Label::Vulnerable);
    CHECK(m.precision == 0.0);
    CHECK(m.recall == 0.0);
    CHECK(m.f1 == 0.0);
}

TEST_CASE("per-type accuracy splits by CWE and sorts by id") {
    corpus::Corpus c;
    c.samples = {labeled("a", Label::Vulnerable, "CWE-200"),
                 labeled("b", Label::Vulnerable, "CWE-200"),
                 labeled("c", Label::Vulnerable, "CWE-089"),
                 labeled("d", Label::NonVulnerable, "CWE-089")};
    std::vector<RunRecord> records = {
        predicted("a", Predicted::Vulnerable), predicted("b", Predicted::NonVulnerable),
        predicted("c", Predicted::Vulnerable), predicted("d", Predicted::NonVulnerable)};
    auto types = per_type_accuracy(records, c);
    REQUIRE(types.size() == 2);
    CHECK(types.begin()->first == "CWE-089");
    CHECK(types.at("CWE-089").accuracy == doctest::Approx(1.0));
    CHECK(types.at("CWE-089").count == 2);
    CHECK(types.at("CWE-200").accuracy == doctest::Approx(0.5));
}

TEST_CASE("metrics are independent of record order") {
    corpus::Corpus c;
    std::vector<RunRecord> records;
    std::mt19937 rng(99);
    for (int i = 0; i < 40; ++i) {
        std::string id = "s" + std::to_string(i);
        Label label = i % 3 == 0 ? Label::Vulnerable : Label::NonVulnerable;
        c.samples.push_back(labeled(id, label));
        Predicted p = i % 5 == 0   ? Predicted::Excluded
                      : i % 2 == 0 ? Predicted::Vulnerable
                                   : Predicted::NonVulnerable;
        records.push_back(predicted(id, p));
    }
    Report base = build_report(records, c, "r-b", "java");
    for (int round = 0; round < 5; ++round) {
        std::shuffle(records.begin(), records.end(), rng);
        Report shuffled = build_report(records, c, "r-b", "java");
        CHECK(shuffled.accuracy == base.accuracy);
        CHECK(shuffled.vul.f1 == base.vul.f1);
        CHECK(shuffled.nonvul.precision == base.nonvul.precision);
    }
}

TEST_CASE("excluding a wrong prediction never lowers recall") {
    corpus::Corpus c;
    c.samples = {labeled("a", Label::Vulnerable), labeled("b", Label::Vulnerable),
                 labeled("c", Label::Vulnerable)};
    std::vector<RunRecord> wrong = {predicted("a", Predicted::Vulnerable),
                                    predicted("b", Predicted::NonVulnerable),
                                    predicted("c", Predicted::Vulnerable)};
    std::vector<RunRecord> excluded = {predicted("a", Predicted::Vulnerable),
                                       predicted("b", Predicted::Excluded),
                                       predicted("c", Predicted::Vulnerable)};
    double before = class_metrics(tally(wrong, c), Label::Vulnerable).recall;
    double after = class_metrics(tally(excluded, c), Label::Vulnerable).recall;
    CHECK(after >= before);
}

TEST_CASE("strict mode counts excluded samples as wrong") {
    corpus::Corpus c;
    c.samples = {labeled("a", Label::Vulnerable), labeled("b", Label::Vulnerable)};
    std::vector<RunRecord> records = {predicted("a", Predicted::Vulnerable),
                                      predicted("b", Predicted::Excluded)};
    ConfusionCounts lax = tally(records, c, false);
    CHECK(lax.vul.total == 1);
    ConfusionCounts strict = tally(records, c, true);
    CHECK(strict.vul.total == 2);
    CHECK(strict.vul.detected == 1);
    CHECK(strict.excluded == 0);
}

TEST_CASE("rounding is half-up at three decimals") {
    CHECK(format3(0.6585) == "0.659");
    CHECK(format3(0.0005) == "0.001");
    CHECK(format3(0.1234) == "0.123");
    CHECK(format3(1.0) == "1.000");
}

TEST_CASE("markdown reports render a table-shaped row pair") {
    corpus::Corpus c;
    c.samples = {labeled("a", Label::Vulnerable), labeled("b", Label::NonVulnerable)};
    std::vector<RunRecord> records = {predicted("a", Predicted::Vulnerable),
                                      predicted("b", Predicted::NonVulnerable)};
    Report report = build_report(records, c, "r-b", "java");
    std::string md = render_report(report, ReportFormat::Markdown);
    CHECK(md.find("| Plan | Class | P | R | F1 | Det. | Acc |") != std::string::npos);
    CHECK(md.find("| r-b | Vulnerable | 1.000 | 1.000 | 1.000 | 1/1 | 1.000 |") !=
          std::string::npos);
}

TEST_CASE("empty reports emit headers only") {
    Report report;
    report.plan = "r-b";
    std::string csv = render_report(report, ReportFormat::Csv);
    CHECK(csv.find("plan,class,precision") == 0);
    std::string types = render_per_type_csv(report);
    CHECK(types == "cwe,accuracy,count\n");
}

TEST_CASE("json reports are lossless for the numeric fields") {
    corpus::Corpus c;
    c.samples = {labeled("a", Label::Vulnerable), labeled("b", Label::Vulnerable),
                 labeled("d", Label::NonVulnerable)};
    std::vector<RunRecord> records = {predicted("a", Predicted::Vulnerable),
                                      predicted("b", Predicted::NonVulnerable),
                                      predicted("d", Predicted::NonVulnerable)};
    Report report = build_report(records, c, "r-b", "java");
    std::string json = render_report(report, ReportFormat::Json);
    // 2/3 f1 survives with full precision, not the printed 3 decimals
    CHECK(json.find("0.6666666666666666") != std::string::npos);
}

TEST_CASE("report filenames follow plan.language.format") {
    CHECK(report_filename("r-b", "java", ReportFormat::Markdown) == "r-b.java.markdown");
    CHECK(report_filename("chain:r-b", "c", ReportFormat::Json) == "chain_r-b.c.json");
    CHECK(per_type_filename("r-b", "java") == "r-b.java.types.csv");
}

TEST_CASE("accuracy equals the det-weighted mean of recalls") {
    corpus::Corpus c;
    std::vector<RunRecord> records;
    for (int i = 0; i < 24; ++i) {
        std::string id = "s" + std::to_string(i);
        Label label = i < 10 ? Label::Vulnerable : Label::NonVulnerable;
        c.samples.push_back(labeled(id, label));
        records.push_back(predicted(id, i % 4 == 0 ? Predicted::Vulnerable
                                                   : Predicted::NonVulnerable));
    }
    ConfusionCounts counts = tally(records, c);
    double vul_r = class_metrics(counts, Label::Vulnerable).recall;
    double nonvul_r = class_metrics(counts, Label::NonVulnerable).recall;
    double weighted = (vul_r * counts.vul.total + nonvul_r * counts.nonvul.total) /
                      (counts.vul.total + counts.nonvul.total);
    CHECK(overall_accuracy(counts) == doctest::Approx(weighted));
}
