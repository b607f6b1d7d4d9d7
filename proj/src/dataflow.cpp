#include "vulnprompt/dataflow.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>

#include <json.hpp>

namespace vulnprompt::dataflow {

using syntax::SyntaxTree;
using syntax::TokenStream;

namespace {

bool is_constant_kind(const std::string& kind) {
    return kind.find("literal") != std::string::npos || kind == "true" ||
           kind == "false" || kind == "null" || kind == "nullptr" ||
           kind == "character_literal" || kind == "concatenated_string";
}

bool is_loop_kind(const std::string& kind) {
    return kind == "while_statement" || kind == "for_statement" ||
           kind == "do_statement" || kind == "enhanced_for_statement" ||
           kind == "range_based_for_statement";
}

struct Definition {
    VarOccurrence occ;
};

// Reaching definitions: variable name -> set of definition ids.
using Env = std::map<std::string, std::set<int>>;

Env merge(const Env& a, const Env& b) {
    Env out = a;
    for (const auto& [name, defs] : b) out[name].insert(defs.begin(), defs.end());
    return out;
}

struct Analyzer {
    const SyntaxTree& tree;
    std::unordered_map<uint32_t, int> pos_by_byte;  // token start byte -> position

    std::vector<Definition> defs;
    std::set<DataFlowEdge> edges;
    std::set<VarOccurrence> occurrences;

    static constexpr int kMaxLoopIterations = 24;

    int position_of(int32_t node) const {
        auto it = pos_by_byte.find(tree.node(node).start_byte);
        return it == pos_by_byte.end() ? 0 : it->second;
    }

    // --- variable shapes -------------------------------------------------

    // A node that reads or writes a single (possibly composite) variable.
    // Returns false for anything else.
    bool variable_shape(int32_t id, VarOccurrence& out) const {
        const auto& n = tree.node(id);
        if (n.kind == "identifier" || n.kind == "this") {
            out = {tree.text(id), position_of(id)};
            return out.position != 0;
        }
        if (n.kind == "field_access" || n.kind == "field_expression") {
            int32_t base = tree.child_by_field(id, "object");
            if (base < 0) base = tree.child_by_field(id, "argument");
            if (base < 0 && !n.children.empty()) base = n.children.front();
            if (base < 0) return false;
            int32_t anchor = base;
            while (!tree.node(anchor).children.empty())
                anchor = tree.node(anchor).children.front();
            out = {tree.text(id), position_of(anchor)};
            return out.position != 0;
        }
        return false;
    }

    // --- emission ---------------------------------------------------------

    void use(const VarOccurrence& occ, Env& env) {
        occurrences.insert(occ);
        auto it = env.find(occ.name);
        if (it == env.end()) return;
        for (int d : it->second) {
            const VarOccurrence& def = defs[static_cast<size_t>(d)].occ;
            if (def.position == occ.position) continue;  // self-definition site
            edges.insert({occ,
                          {def.name, def.position, false},
                          EdgeKind::ComesFrom,
                          def.position > occ.position});
        }
    }

    void define(const VarOccurrence& occ, int32_t rhs, Env& env) {
        occurrences.insert(occ);
        int id = static_cast<int>(defs.size());
        defs.push_back({occ});
        if (rhs >= 0) {
            std::vector<std::pair<EdgeSource, bool>> operands;
            collect_operands(rhs, operands);
            for (auto& [src, ignore] : operands) {
                if (src.position == occ.position && !src.is_constant) continue;
                edges.insert({occ, src, EdgeKind::ComputedFrom, false});
            }
        }
        env[occ.name] = {id};
    }

    void define_root(const VarOccurrence& occ, Env& env) {
        occurrences.insert(occ);
        int id = static_cast<int>(defs.size());
        defs.push_back({occ});
        env[occ.name] = {id};
    }

    // Variable occurrences and constants inside an expression, for the
    // ComputedFrom side of a definition.
    void collect_operands(int32_t id, std::vector<std::pair<EdgeSource, bool>>& out) const {
        const auto& n = tree.node(id);
        VarOccurrence occ;
        if (variable_shape(id, occ)) {
            out.push_back({{occ.name, occ.position, false}, false});
            return;
        }
        if (is_constant_kind(n.kind)) {
            int pos = position_of(id);
            if (pos != 0) out.push_back({{tree.text(id), pos, true}, false});
            return;
        }
        if (n.kind == "method_invocation" || n.kind == "call_expression") {
            // Operands of a call are its receiver and arguments.
            int32_t obj = tree.child_by_field(id, "object");
            int32_t args = tree.child_by_field(id, "arguments");
            if (obj >= 0) collect_operands(obj, out);
            if (args >= 0) collect_operands(args, out);
            return;
        }
        if (n.kind == "object_creation_expression") {
            int32_t args = tree.child_by_field(id, "arguments");
            if (args >= 0) collect_operands(args, out);
            return;
        }
        for (int32_t c : n.children) collect_operands(c, out);
    }

    // --- flow -------------------------------------------------------------

    struct Flow {
        Env env;
        bool returned = false;
    };

    void flow_params(int32_t fn, Env& env) {
        for (int32_t id = fn; id < static_cast<int32_t>(tree.nodes().size()); ++id) {
            if (tree.node(id).start_byte >= tree.node(fn).end_byte && id != fn) break;
            const auto& n = tree.node(id);
            if (n.kind == "formal_parameter") {
                int32_t name = tree.child_by_field(id, "name");
                if (name >= 0) define_root({tree.text(name), position_of(name)}, env);
            } else if (n.kind == "parameter_declaration") {
                int32_t decl = tree.child_by_field(id, "declarator");
                while (decl >= 0 && tree.node(decl).kind != "identifier") {
                    int32_t next = tree.child_by_field(decl, "declarator");
                    if (next < 0) break;
                    decl = next;
                }
                if (decl >= 0 && tree.node(decl).kind == "identifier")
                    define_root({tree.text(decl), position_of(decl)}, env);
            }
        }
    }

    bool flow(int32_t id, Env& env) {  // returns "definitely returned"
        const auto& n = tree.node(id);
        const std::string& kind = n.kind;

        if (kind == "method_declaration" || kind == "constructor_declaration" ||
            kind == "function_definition" || kind == "lambda_expression") {
            Env local;
            flow_params(id, local);
            int32_t body = tree.child_by_field(id, "body");
            if (body >= 0) flow(body, local);
            return false;
        }

        if (kind == "if_statement") {
            int32_t cond = tree.child_by_field(id, "condition");
            if (cond >= 0) flow(cond, env);
            int32_t cons = tree.child_by_field(id, "consequence");
            int32_t alt = tree.child_by_field(id, "alternative");
            if (alt >= 0 && tree.node(alt).kind == "else_clause") {
                for (int32_t c : tree.node(alt).children)
                    if (tree.node(c).named) {
                        alt = c;
                        break;
                    }
            }
            Env then_env = env;
            bool then_ret = cons >= 0 ? flow(cons, then_env) : false;
            Env else_env = env;
            bool else_ret = alt >= 0 ? flow(alt, else_env) : false;
            if (then_ret && else_ret) {
                env = merge(then_env, else_env);
                return true;
            }
            if (then_ret)
                env = std::move(else_env);
            else if (else_ret)
                env = std::move(then_env);
            else
                env = merge(then_env, else_env);
            return false;
        }

        if (kind == "while_statement") {
            int32_t cond = tree.child_by_field(id, "condition");
            int32_t body = tree.child_by_field(id, "body");
            run_loop(env, cond, body, -1, false);
            return false;
        }
        if (kind == "for_statement") {
            int32_t init = tree.child_by_field(id, "init");
            if (init < 0) init = tree.child_by_field(id, "initializer");
            if (init >= 0) flow(init, env);
            run_loop(env, tree.child_by_field(id, "condition"),
                     tree.child_by_field(id, "body"), tree.child_by_field(id, "update"),
                     false);
            return false;
        }
        if (kind == "do_statement") {
            run_loop(env, tree.child_by_field(id, "condition"),
                     tree.child_by_field(id, "body"), -1, true);
            return false;
        }
        if (kind == "enhanced_for_statement" || kind == "range_based_for_statement") {
            int32_t value = tree.child_by_field(id, "value");
            if (value < 0) value = tree.child_by_field(id, "right");
            if (value >= 0) flow(value, env);
            int32_t name = tree.child_by_field(id, "name");
            if (name < 0) {
                int32_t decl = tree.child_by_field(id, "declarator");
                if (decl >= 0 && tree.node(decl).kind == "identifier") name = decl;
            }
            if (name >= 0) define({tree.text(name), position_of(name)}, value, env);
            run_loop(env, -1, tree.child_by_field(id, "body"), -1, false);
            return false;
        }

        if (kind == "switch_expression" || kind == "switch_statement") {
            int32_t cond = tree.child_by_field(id, "condition");
            if (cond >= 0) flow(cond, env);
            int32_t body = tree.child_by_field(id, "body");
            if (body < 0) return false;
            // if-chain lowering: each case group branches off the condition env
            Env out = env;
            for (int32_t c : tree.node(body).children) {
                const auto& ck = tree.node(c).kind;
                if (ck == "switch_block_statement_group" || ck == "case_statement" ||
                    ck == "switch_rule") {
                    Env branch = env;
                    flow(c, branch);
                    out = merge(out, branch);
                }
            }
            env = std::move(out);
            return false;
        }

        if (kind == "return_statement") {
            for (int32_t c : n.children) flow(c, env);
            return true;
        }

        if (kind == "local_variable_declaration" || kind == "declaration" ||
            kind == "field_declaration") {
            for (int32_t c : n.children) flow(c, env);
            return false;
        }
        if (kind == "variable_declarator" || kind == "init_declarator") {
            int32_t value = tree.child_by_field(id, "value");
            int32_t name = tree.child_by_field(id, "name");
            if (name < 0) {
                int32_t decl = tree.child_by_field(id, "declarator");
                while (decl >= 0 && tree.node(decl).kind != "identifier")
                    decl = tree.child_by_field(decl, "declarator");
                name = decl;
            }
            if (value >= 0) {
                flow(value, env);
                if (name >= 0) define({tree.text(name), position_of(name)}, value, env);
            }
            // declaration without initializer introduces no definition
            return false;
        }

        if (kind == "assignment_expression") {
            int32_t lhs = tree.child_by_field(id, "left");
            int32_t rhs = tree.child_by_field(id, "right");
            bool compound = false;
            for (int32_t c : n.children) {
                const auto& ck = tree.node(c).kind;
                if (!tree.node(c).named && ck.size() >= 2 && ck.back() == '=' &&
                    ck != "=" && ck != "==" && ck != "!=" && ck != "<=" && ck != ">=")
                    compound = true;
            }
            VarOccurrence target;
            bool simple_lhs = lhs >= 0 && variable_shape(lhs, target);
            if (compound && simple_lhs) use(target, env);
            if (rhs >= 0) flow(rhs, env);
            if (simple_lhs) {
                define(target, rhs, env);
            } else if (lhs >= 0 && tree.node(lhs).kind == "array_access") {
                int32_t index = tree.child_by_field(lhs, "index");
                if (index >= 0) flow(index, env);
                int32_t base = tree.child_by_field(lhs, "array");
                VarOccurrence b;
                if (base >= 0 && variable_shape(base, b)) {
                    use(b, env);
                    define(b, rhs, env);
                }
            } else if (lhs >= 0 && tree.node(lhs).kind == "subscript_expression") {
                int32_t index = tree.child_by_field(lhs, "index");
                if (index < 0) index = tree.child_by_field(lhs, "indices");
                if (index >= 0) flow(index, env);
                int32_t base = tree.child_by_field(lhs, "argument");
                VarOccurrence b;
                if (base >= 0 && variable_shape(base, b)) {
                    use(b, env);
                    define(b, rhs, env);
                }
            } else if (lhs >= 0) {
                flow(lhs, env);  // exotic target: record uses only
            }
            return false;
        }

        if (kind == "update_expression") {  // x++ / --x: use then redefine
            int32_t arg = tree.child_by_field(id, "argument");
            if (arg < 0)
                for (int32_t c : n.children)
                    if (tree.node(c).named) arg = c;
            VarOccurrence occ;
            if (arg >= 0 && variable_shape(arg, occ)) {
                use(occ, env);
                define(occ, -1, env);
            } else if (arg >= 0) {
                flow(arg, env);
            }
            return false;
        }

        if (kind == "method_invocation") {
            int32_t obj = tree.child_by_field(id, "object");
            int32_t args = tree.child_by_field(id, "arguments");
            if (obj >= 0) flow(obj, env);
            if (args >= 0) flow(args, env);
            return false;
        }
        if (kind == "call_expression") {
            int32_t fn = tree.child_by_field(id, "function");
            int32_t args = tree.child_by_field(id, "arguments");
            // the callee name is not a variable; a computed callee is
            if (fn >= 0 && tree.node(fn).kind != "identifier" &&
                tree.node(fn).kind != "field_expression")
                flow(fn, env);
            if (args >= 0) flow(args, env);
            return false;
        }

        VarOccurrence occ;
        if (variable_shape(id, occ)) {
            // bare `this` is not a data-flow variable
            if (tree.node(id).kind != "this") use(occ, env);
            return false;
        }
        if (is_constant_kind(kind)) return false;
        if (kind == "type_identifier" || kind == "scoped_type_identifier") return false;

        bool returned = false;
        for (int32_t c : n.children) {
            bool r = flow(c, env);
            returned = returned || r;
        }
        return returned && (kind == "block" || kind == "compound_statement" ||
                            kind == "program" || kind == "labeled_statement" ||
                            kind == "expression_statement");
    }

    // Fixpoint over a loop's condition/body/update. `body_first` models
    // do-while ordering.
    void run_loop(Env& env, int32_t cond, int32_t body, int32_t update,
                  bool body_first) {
        Env entry = env;
        Env cur = env;
        for (int i = 0; i < kMaxLoopIterations; ++i) {
            Env snapshot = cur;
            Env work = cur;
            if (body_first) {
                if (body >= 0) flow(body, work);
                if (cond >= 0) flow(cond, work);
            } else {
                if (cond >= 0) flow(cond, work);
                if (body >= 0) flow(body, work);
                if (update >= 0) flow(update, work);
            }
            cur = merge(entry, work);
            if (body_first) env = work;  // body runs at least once
            if (cur == snapshot) break;
        }
        if (!body_first) env = cur;
        if (!body_first && cond >= 0) {
            // exit passes through the condition one final time with the
            // stabilized environment; edges are deduplicated
            Env work = cur;
            flow(cond, work);
        }
    }

};

}  // namespace

std::vector<VarOccurrence> extract_variables(const SyntaxTree& tree,
                                             const TokenStream& tokens) {
    DataFlowGraph g = extract_dataflow(tree, tokens);
    return g.variables;
}

DataFlowGraph extract_dataflow(const SyntaxTree& tree, const TokenStream& tokens) {
    Analyzer a{tree};
    for (const auto& tok : tokens) a.pos_by_byte[tok.start_byte] = tok.position;
    Env env;
    a.flow(tree.root(), env);

    DataFlowGraph graph;
    graph.edges.assign(a.edges.begin(), a.edges.end());
    std::sort(graph.edges.begin(), graph.edges.end(),
              [](const DataFlowEdge& x, const DataFlowEdge& y) {
                  if (x.target.position != y.target.position)
                      return x.target.position < y.target.position;
                  if (x.kind != y.kind) return x.kind < y.kind;
                  return x.source < y.source;
              });
    graph.variables.assign(a.occurrences.begin(), a.occurrences.end());
    std::sort(graph.variables.begin(), graph.variables.end(),
              [](const VarOccurrence& x, const VarOccurrence& y) {
                  return x.position < y.position;
              });
    return graph;
}

std::string to_json(const DataFlowGraph& graph) {
    nlohmann::json edges = nlohmann::json::array();
    for (const DataFlowEdge& e : graph.edges) {
        nlohmann::json j;
        j["target"] = {{"name", e.target.name}, {"pos", e.target.position}};
        if (e.source.is_constant)
            j["source"] = {{"const", e.source.text}, {"pos", e.source.position}};
        else
            j["source"] = {{"name", e.source.text}, {"pos", e.source.position}};
        j["kind"] = e.kind == EdgeKind::ComesFrom ? "comes_from" : "computed_from";
        if (e.loop_back) j["loop_back"] = true;
        edges.push_back(std::move(j));
    }
    return edges.dump();
}

}  // namespace vulnprompt::dataflow
