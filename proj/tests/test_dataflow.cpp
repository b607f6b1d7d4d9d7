#include <doctest.h>

#include <set>

#include "df_fixtures.hpp"
#include "df_oracle.hpp"
#include "helpers.hpp"
#include "vulnprompt/dataflow.hpp"
#include "vulnprompt/syntax.hpp"

using namespace vulnprompt;
using dataflow::DataFlowEdge;
using dataflow::EdgeKind;

namespace {

using df_fixtures::Fixture;
using df_fixtures::kFixtures;


std::set<DataFlowEdge> implementation_edges(const Fixture& fixture) {
    auto tree = syntax::parse(fixture.code, fixture.language);
    auto tokens = syntax::leaves(tree);
    auto graph = dataflow::extract_dataflow(tree, tokens);
    return {graph.edges.begin(), graph.edges.end()};
}

std::set<DataFlowEdge> oracle_edges(const Fixture& fixture) {
    auto tree = syntax::parse(fixture.code, fixture.language);
    auto tokens = syntax::leaves(tree);
    return df_oracle::solve(tree, tokens);
}

std::string describe(const std::set<DataFlowEdge>& edges) {
    std::string out;
    for (const auto& e : edges) {
        out += e.target.name + "@" + std::to_string(e.target.position) +
               (e.kind == EdgeKind::ComesFrom ? " <- " : " := ") + e.source.text + "@" +
               std::to_string(e.source.position);
        if (e.loop_back) out += " (loop)";
        out += "; ";
    }
    return out;
}

}  // namespace

TEST_CASE("edge sets equal the reference worklist solver on every fixture") {
    for (const Fixture& fixture : kFixtures) {
        CAPTURE(fixture.name);
        auto impl = implementation_edges(fixture);
        auto oracle = oracle_edges(fixture);
        if (impl != oracle) {
            MESSAGE("impl:   " << describe(impl));
            MESSAGE("oracle: " << describe(oracle));
        }
        CHECK(impl == oracle);
    }
}

TEST_CASE("the fixture suite is large enough") {
    CHECK(std::size(kFixtures) >= 25);
}

TEST_CASE("straight-line flow matches a hand-computed graph") {
    // tokens: void1 f2 (3 )4 {5 int6 a7 =8 1 9 ...
    Fixture fixture{"hand", Language::Java,
                    "void f() {\n int a = 1;\n int b = a;\n}"};
    auto impl = implementation_edges(fixture);
    std::set<DataFlowEdge> expected = {
        {{"a", 7}, {"1", 9, true}, EdgeKind::ComputedFrom, false},
        {{"b", 12}, {"a", 14, false}, EdgeKind::ComputedFrom, false},
        {{"a", 14}, {"a", 7, false}, EdgeKind::ComesFrom, false},
    };
    CHECK(impl == expected);
}

TEST_CASE("loop-back edges are flagged") {
    Fixture fixture{"loop", Language::Java,
                    "void f(int n) {\n int i = 0;\n while (i < n) {\n  i = i + 1;\n }\n}"};
    auto impl = implementation_edges(fixture);
    bool found = false;
    for (const auto& e : impl)
        if (e.loop_back && e.target.name == "i") found = true;
    CHECK(found);
}

TEST_CASE("branch merges keep both reaching definitions") {
    Fixture fixture{"merge", Language::Java,
                    "void f(int p) {\n int x = 0;\n if (p > 0) {\n  x = 1;\n } else {\n"
                    "  x = 2;\n }\n int y = x;\n}"};
    auto impl = implementation_edges(fixture);
    int sources_of_final_use = 0;
    for (const auto& e : impl)
        if (e.kind == EdgeKind::ComesFrom && e.target.name == "x") ++sources_of_final_use;
    CHECK(sources_of_final_use == 2);
}

TEST_CASE("variables are reported in token order") {
    auto tree = syntax::parse("void f() {\n int a = 1;\n int b = a;\n}", Language::Java);
    auto tokens = syntax::leaves(tree);
    auto vars = dataflow::extract_variables(tree, tokens);
    REQUIRE_FALSE(vars.empty());
    for (size_t i = 1; i < vars.size(); ++i)
        CHECK(vars[i - 1].position <= vars[i].position);
}

TEST_CASE("json serialization tags constants and loop backs") {
    auto tree = syntax::parse(
        "void f(int n) {\n int i = 0;\n while (i < n) {\n  i = i + 1;\n }\n}",
        Language::Java);
    auto tokens = syntax::leaves(tree);
    std::string json = dataflow::to_json(dataflow::extract_dataflow(tree, tokens));
    CHECK(json.find("\"const\":\"0\"") != std::string::npos);
    CHECK(json.find("\"loop_back\":true") != std::string::npos);
    CHECK(json.find("comes_from") != std::string::npos);
    CHECK(json.find("computed_from") != std::string::npos);
}
