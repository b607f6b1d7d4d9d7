#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "helpers.hpp"
#include "vulnprompt.h"

namespace fs = std::filesystem;

namespace {

std::string take(char* text) {
    std::string out = text ? text : "";
    vp_string_free(text);
    return out;
}

fs::path write_corpus(const fs::path& dir) {
    fs::path path = dir / "corpus.jsonl";
    std::ofstream out(path);
    out << R"({"id":"v1","language":"java","code":"void f() {\n int a = 1;\n IO.writeLine(a);\n}","label":"vul","cwe":"CWE-000","group":null,"provenance":"unit"})"
        << "\n";
    out << R"({"id":"n1","language":"java","code":"void g() {\n int b = 2;\n IO.writeLine(b);\n}","label":"non-vul","cwe":"CWE-000","group":null,"provenance":"unit"})"
        << "\n";
    return path;
}

}  // namespace

TEST_CASE("api extraction over the C boundary") {
    char* out = nullptr;
    vp_status status = vp_extract_api_json(
        "void f() { IO.writeLine(name.trim()); }", "java", &out);
    CHECK(status == VP_OK);
    CHECK(take(out).find("IO.writeLine") != std::string::npos);
}

TEST_CASE("dataflow extraction over the C boundary") {
    char* out = nullptr;
    vp_status status = vp_extract_dataflow_json(
        "void f() {\n int a = 1;\n int b = a;\n}", "java", &out);
    CHECK(status == VP_OK);
    CHECK(take(out).find("comes_from") != std::string::npos);
}

TEST_CASE("prompt rendering over the C boundary") {
    char* out = nullptr;
    vp_status status = vp_render_prompt("r-b", "int f() { return 0; }", "java", &out);
    CHECK(status == VP_OK);
    CHECK(take(out).find("vulnerability detection system") != std::string::npos);
}

TEST_CASE("unknown plan names are usage errors") {
    char* out = nullptr;
    CHECK(vp_render_prompt("bogus", "int f() { return 0; }", "java", &out) ==
          VP_ERR_USAGE);
    CHECK(std::string(vp_last_error()).find("bogus") != std::string::npos);
}

TEST_CASE("unknown languages are usage errors") {
    char* out = nullptr;
    CHECK(vp_extract_api_json("int f() { return 0; }", "cobol", &out) == VP_ERR_USAGE);
}

TEST_CASE("null arguments are usage errors") {
    CHECK(vp_render_prompt(nullptr, "x", "java", nullptr) == VP_ERR_USAGE);
}

TEST_CASE("missing inputs are data errors") {
    char* out = nullptr;
    CHECK(vp_extract("/nonexistent/corpus.jsonl", "api", "/tmp/x.jsonl", &out) ==
          VP_ERR_DATA);
    CHECK(std::string(vp_last_error()).find("corpus.jsonl") != std::string::npos);
}

TEST_CASE("full pipeline runs through the C API") {
    auto dir = testutil::fresh_dir("capi_pipe");
    fs::path corpus = write_corpus(dir);

    char* summary = nullptr;
    CHECK(vp_run(corpus.string().c_str(), "r-b", R"({"kind":"scripted","reply":"Yes."})",
                 2, (dir / "runs").string().c_str(), &summary) == VP_OK);
    CHECK(take(summary) == "2 0 0");

    char* files = nullptr;
    CHECK(vp_score((dir / "runs").string().c_str(), corpus.string().c_str(), "json", 0,
                   (dir / "reports").string().c_str(), &files) == VP_OK);
    std::string listing = take(files);
    CHECK(listing.find("r-b.java.json") != std::string::npos);
    CHECK(fs::exists(dir / "reports" / "r-b.java.json"));
}

TEST_CASE("replay misses surface as backend errors") {
    auto dir = testutil::fresh_dir("capi_replay");
    fs::path corpus = write_corpus(dir);
    char* summary = nullptr;
    vp_status status =
        vp_run(corpus.string().c_str(), "r-b",
               (R"({"kind":"replay","cache":")" + (dir / "empty").string() + R"("})")
                   .c_str(),
               1, (dir / "runs").string().c_str(), &summary);
    // per-sample replay misses are recorded, not fatal
    CHECK(status == VP_OK);
    CHECK(take(summary) == "2 0 2");
}
