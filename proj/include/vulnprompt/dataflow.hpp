#pragma once

#include <string>
#include <vector>

#include "vulnprompt/syntax.hpp"

namespace vulnprompt::dataflow {

struct VarOccurrence {
    std::string name;
    int position = 0;  // 1-based token index

    auto operator<=>(const VarOccurrence&) const = default;
};

enum class EdgeKind { ComesFrom, ComputedFrom };

struct EdgeSource {
    std::string text;          // variable name or constant spelling
    int position = 0;
    bool is_constant = false;

    auto operator<=>(const EdgeSource&) const = default;
};

struct DataFlowEdge {
    VarOccurrence target;
    EdgeSource source;
    EdgeKind kind = EdgeKind::ComesFrom;
    bool loop_back = false;  // definition reaches a use earlier in token order

    auto operator<=>(const DataFlowEdge&) const = default;
};

struct DataFlowGraph {
    std::vector<DataFlowEdge> edges;       // ordered by target position
    std::vector<VarOccurrence> variables;  // every def or use occurrence
};

// Identifier leaves acting as variable definitions or uses. Field accesses
// (o.f, p->f) count as one composite variable anchored at the base token.
std::vector<VarOccurrence> extract_variables(const syntax::SyntaxTree& tree,
                                             const syntax::TokenStream& tokens);

// Where-the-value-comes-from edges: ComputedFrom for each definition's RHS
// operands, ComesFrom for each use's reaching definitions, computed
// path-insensitively over sequence / if-else / loops / early return.
DataFlowGraph extract_dataflow(const syntax::SyntaxTree& tree,
                               const syntax::TokenStream& tokens);

std::string to_json(const DataFlowGraph& graph);

}  // namespace vulnprompt::dataflow
