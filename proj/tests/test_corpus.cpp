#include <doctest.h>

#include <fstream>

#include "helpers.hpp"
#include "vulnprompt/corpus.hpp"
#include "vulnprompt/syntax.hpp"

using namespace vulnprompt;

namespace {

corpus::Sample java_sample(std::string id, std::string code,
                           Label label = Label::NonVulnerable) {
    corpus::Sample s;
    s.id = std::move(id);
    s.language = Language::Java;
    s.code = std::move(code);
    s.label = label;
    s.cwe = "CWE-000";
    return s;
}

}  // namespace

TEST_CASE("line comment removal keeps the residue") {
    CHECK(corpus::strip_comments("int x; // bad hint", Language::Java) == "int x; ");
}

TEST_CASE("block comment removal keeps the residue") {
    CHECK(corpus::strip_comments("/*CWE-89*/ f();", Language::C) == " f();");
}

TEST_CASE("newlines inside a removed block comment are kept") {
    std::string out = corpus::strip_comments("a();/* one\n two */b();", Language::Java);
    CHECK(out == "a();\nb();");
}

TEST_CASE("string literals survive comment stripping") {
    std::string code = "String s = \"// not a comment /* either */\";";
    CHECK(corpus::strip_comments(code, Language::Java) == code);
}

TEST_CASE("javadoc fixture matches the hand-stripped oracle token for token") {
    std::string stripped =
        corpus::strip_comments(testutil::fixture("javadoc_full.java"), Language::Java);
    std::string expected = testutil::fixture("javadoc_stripped.java");
    CHECK(corpus::dedup_key(stripped, Language::Java) ==
          corpus::dedup_key(expected, Language::Java));
}

TEST_CASE("bad in a Java function name becomes func") {
    CHECK(corpus::scrub_identifiers("public void bad() { }", Language::Java) ==
          "public void func() { }");
}

TEST_CASE("CVE ids and VULN markers leave C function names") {
    CHECK(corpus::scrub_identifiers("void CVE_2014_0160_VULN_hb() { }", Language::C) ==
          "void _func_hb() { }");
}

TEST_CASE("non-function identifiers are untouched") {
    CHECK(corpus::scrub_identifiers("int f() { int goodness; return goodness; }",
                                    Language::C) ==
          "int f() { int goodness; return goodness; }");
}

TEST_CASE("self-recursive call sites are rewritten with the declaration") {
    std::string out = corpus::scrub_identifiers(
        "int badCount(int n) { if (n == 0) return 0; return badCount(n - 1); }",
        Language::C);
    CHECK(out ==
          "int funcCount(int n) { if (n == 0) return 0; return funcCount(n - 1); }");
}

TEST_CASE("two-line functions are rejected as too short") {
    auto result = corpus::preprocess_sample(java_sample("s", "void f() { g(); }"));
    auto* rejection = std::get_if<corpus::RejectionReason>(&result);
    REQUIRE(rejection != nullptr);
    CHECK(rejection->kind == corpus::RejectionKind::TooShort);
}

TEST_CASE("token budget boundary sits exactly at the limit") {
    std::string body;
    for (int i = 0; i < 200; ++i) body += "x = " + std::to_string(i) + ";\n";
    std::string code = "void f() {\n" + body + "}";
    auto tree = syntax::parse(code, Language::Java);
    int tokens = static_cast<int>(syntax::leaves(tree).size());

    auto at_limit = corpus::preprocess_sample(java_sample("a", code), tokens);
    CHECK(std::holds_alternative<corpus::Sample>(at_limit));

    auto over = corpus::preprocess_sample(java_sample("b", code), tokens - 1);
    auto* rejection = std::get_if<corpus::RejectionReason>(&over);
    REQUIRE(rejection != nullptr);
    CHECK(rejection->kind == corpus::RejectionKind::TooLong);
}

TEST_CASE("the Kerberos example is accepted and renamed") {
    auto result = corpus::preprocess_sample(
        java_sample("kerberos", testutil::fixture("kerberos.java"), Label::Vulnerable));
    auto* sample = std::get_if<corpus::Sample>(&result);
    REQUIRE(sample != nullptr);
    CHECK(sample->code.find("void func()") != std::string::npos);
    CHECK(sample->code.find("bad") == std::string::npos);
}

TEST_CASE("preprocessing is idempotent") {
    auto first = corpus::preprocess_sample(
        java_sample("kerberos", testutil::fixture("kerberos.java")));
    auto* once = std::get_if<corpus::Sample>(&first);
    REQUIRE(once != nullptr);
    auto second = corpus::preprocess_sample(*once);
    auto* twice = std::get_if<corpus::Sample>(&second);
    REQUIRE(twice != nullptr);
    CHECK(once->code == twice->code);
}

TEST_CASE("unresolvable receiver classes are rejected") {
    std::string code =
        "void f() {\n  int x = 1;\n  ProjectHelper.run(x);\n  g(x);\n}";
    auto result = corpus::preprocess_sample(java_sample("s", code));
    auto* rejection = std::get_if<corpus::RejectionReason>(&result);
    REQUIRE(rejection != nullptr);
    CHECK(rejection->kind == corpus::RejectionKind::CrossClassCall);
}

TEST_CASE("duplicates differ only in comments and spacing") {
    corpus::DedupFilter filter;
    CHECK_FALSE(filter.admit(java_sample("a", "void f() { g(); h(); }")));
    auto rejection =
        filter.admit(java_sample("b", "void f() {\n  g();  /* noise */ h();\n}"));
    REQUIRE(rejection.has_value());
    CHECK(rejection->kind == corpus::RejectionKind::Duplicate);
}

TEST_CASE("mixed groups keep the vulnerable sample and one patch") {
    corpus::Corpus c;
    auto with_group = [&](std::string id, Label label) {
        auto s = java_sample(std::move(id), "void f() { }", label);
        s.group = "g1";
        c.samples.push_back(std::move(s));
    };
    with_group("bad", Label::Vulnerable);
    with_group("good1", Label::NonVulnerable);
    with_group("good2", Label::NonVulnerable);

    corpus::Corpus paired = corpus::pair_mixed_cases(c, 42);
    REQUIRE(paired.samples.size() == 2);
    CHECK(paired.samples[0].id == "bad");

    // seed-stable across repeated calls
    for (int i = 0; i < 5; ++i)
        CHECK(corpus::pair_mixed_cases(c, 42).samples[1].id == paired.samples[1].id);
}

TEST_CASE("groups without both sides pass through") {
    corpus::Corpus c;
    auto lone = java_sample("bad", "void f() { }", Label::Vulnerable);
    lone.group = "only";
    c.samples.push_back(lone);
    c.samples.push_back(java_sample("free", "void g() { }"));
    corpus::Corpus paired = corpus::pair_mixed_cases(c, 7);
    CHECK(paired.samples.size() == 2);
}

TEST_CASE("filter_top_types keeps the k most frequent CWEs") {
    corpus::Corpus c;
    auto typed = [&](std::string id, std::string cwe) {
        auto s = java_sample(std::move(id), "void f() { }");
        s.cwe = std::move(cwe);
        c.samples.push_back(std::move(s));
    };
    for (int i = 0; i < 5; ++i) typed("a" + std::to_string(i), "CWE-A");
    for (int i = 0; i < 3; ++i) typed("b" + std::to_string(i), "CWE-B");
    typed("c0", "CWE-C");

    corpus::Corpus top = corpus::filter_top_types(c, 2);
    auto histogram = top.type_histogram();
    CHECK(histogram.size() == 2);
    CHECK(histogram.at("CWE-A") == 5);
    CHECK(histogram.at("CWE-B") == 3);
    CHECK(corpus::filter_top_types(c, 3).samples.size() == c.samples.size());
}

TEST_CASE("ties at rank k break by CWE id") {
    corpus::Corpus c;
    auto typed = [&](std::string id, std::string cwe) {
        auto s = java_sample(std::move(id), "void f() { }");
        s.cwe = std::move(cwe);
        c.samples.push_back(std::move(s));
    };
    typed("a", "CWE-200");
    typed("b", "CWE-100");
    corpus::Corpus top = corpus::filter_top_types(c, 1);
    REQUIRE(top.samples.size() == 1);
    CHECK(top.samples[0].cwe == "CWE-100");
}

TEST_CASE("JSONL round-trip preserves order and fields") {
    corpus::Corpus c;
    auto a = java_sample("first", "void f() { }", Label::Vulnerable);
    a.group = "grp";
    a.provenance = "unit";
    c.samples.push_back(a);
    c.samples.push_back(java_sample("second", "void g() { }"));

    auto dir = testutil::fresh_dir("jsonl");
    std::string path = (dir / "corpus.jsonl").string();
    corpus::save_jsonl(c, path);
    corpus::Corpus back = corpus::load_jsonl(path);
    REQUIRE(back.samples.size() == 2);
    CHECK(back.samples[0].id == "first");
    CHECK(back.samples[0].group == "grp");
    CHECK(back.samples[0].label == Label::Vulnerable);
    CHECK(back.samples[1].id == "second");
}

TEST_CASE("a corrupt JSONL line is reported with its line number") {
    auto dir = testutil::fresh_dir("jsonl_bad");
    std::string path = (dir / "broken.jsonl").string();
    {
        std::ofstream out(path);
        out << corpus::sample_to_json_line(java_sample("ok", "void f() { }")) << "\n";
        out << "{ not json\n";
    }
    try {
        corpus::load_jsonl(path);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("2") != std::string::npos);
    }
}
