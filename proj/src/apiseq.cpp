#include "vulnprompt/apiseq.hpp"

#include <map>

#include <json.hpp>

namespace vulnprompt::apiseq {

using syntax::SyntaxTree;

namespace {

// Snippet-level symbol table: declared name -> declared type text.
std::map<std::string, std::string> build_symbol_table(const SyntaxTree& tree) {
    std::map<std::string, std::string> table;
    auto remember = [&](int32_t type, int32_t name) {
        if (type >= 0 && name >= 0) table[tree.text(name)] = tree.text(type);
    };
    for (int32_t id = 0; id < static_cast<int32_t>(tree.nodes().size()); ++id) {
        const auto& n = tree.node(id);
        if (n.kind == "local_variable_declaration" || n.kind == "field_declaration") {
            int32_t type = tree.child_by_field(id, "type");
            for (int32_t c : n.children)
                if (tree.node(c).kind == "variable_declarator")
                    remember(type, tree.child_by_field(c, "name"));
        } else if (n.kind == "formal_parameter" || n.kind == "enhanced_for_statement" ||
                   n.kind == "catch_formal_parameter" || n.kind == "resource") {
            remember(tree.child_by_field(id, "type"), tree.child_by_field(id, "name"));
        }
    }
    return table;
}

std::string resolve_with(const SyntaxTree& tree, int32_t call_site,
                         const std::map<std::string, std::string>& symbols) {
    int32_t obj = tree.child_by_field(call_site, "object");
    if (obj < 0) return "";
    if (tree.node(obj).kind == "identifier") {
        auto it = symbols.find(tree.text(obj));
        if (it != symbols.end()) return it->second;
    }
    // Static calls and unresolvable chains keep the receiver text.
    return tree.text(obj);
}

struct JavaWalker {
    const SyntaxTree& tree;
    const std::map<std::string, std::string>& symbols;
    std::vector<ApiCall>& out;

    void walk(int32_t id) {
        const auto& n = tree.node(id);
        if (n.kind == "do_statement") {
            // The loop rule orders condition before body regardless of
            // source order.
            int32_t cond = tree.child_by_field(id, "condition");
            int32_t body = tree.child_by_field(id, "body");
            if (cond >= 0) walk(cond);
            if (body >= 0) walk(body);
            return;
        }
        for (int32_t c : n.children) walk(c);
        if (n.kind == "object_creation_expression") {
            int32_t type = tree.child_by_field(id, "type");
            out.push_back({type >= 0 ? tree.text(type) : "", "new", id});
        } else if (n.kind == "method_invocation") {
            int32_t name = tree.child_by_field(id, "name");
            out.push_back({resolve_with(tree, id, symbols),
                           name >= 0 ? tree.text(name) : "", id});
        }
    }
};

void walk_c(const SyntaxTree& tree, int32_t id, std::vector<ApiCall>& out) {
    const auto& n = tree.node(id);
    if (n.kind == "call_expression") {
        int32_t fn = tree.child_by_field(id, "function");
        if (fn >= 0) out.push_back({"", tree.text(fn), id});
    }
    for (int32_t c : n.children) walk_c(tree, c, out);
}

}  // namespace

std::string resolve_receiver(const SyntaxTree& tree, int32_t call_site) {
    return resolve_with(tree, call_site, build_symbol_table(tree));
}

ApiCallSequence extract_api_sequence(const syntax::SyntaxTree& tree) {
    if (tree.nodes().empty()) throw UnparseableError("empty tree");
    ApiCallSequence seq;
    if (tree.language() == Language::Java) {
        auto symbols = build_symbol_table(tree);
        JavaWalker walker{tree, symbols, seq.calls};
        walker.walk(tree.root());
    } else {
        walk_c(tree, tree.root(), seq.calls);
    }
    return seq;
}

std::string to_json(const ApiCallSequence& seq) {
    return nlohmann::json(seq.rendered()).dump();
}

ApiCallSequence from_json(const std::string& text) {
    ApiCallSequence seq;
    for (const auto& item : nlohmann::json::parse(text)) {
        std::string s = item.get<std::string>();
        size_t dot = s.rfind('.');
        if (dot == std::string::npos)
            seq.calls.push_back({"", s, -1});
        else
            seq.calls.push_back({s.substr(0, dot), s.substr(dot + 1), -1});
    }
    return seq;
}

}  // namespace vulnprompt::apiseq
