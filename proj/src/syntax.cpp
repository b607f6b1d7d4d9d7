#include "vulnprompt/syntax.hpp"

#include <tree_sitter/api.h>

#include <cstring>
#include <memory>

extern "C" const TSLanguage* tree_sitter_java(void);
extern "C" const TSLanguage* tree_sitter_c(void);
extern "C" const TSLanguage* tree_sitter_cpp(void);

namespace vulnprompt::syntax {

namespace {

const TSLanguage* grammar_for(Language lang) {
    switch (lang) {
        case Language::Java: return tree_sitter_java();
        case Language::C: return tree_sitter_c();
        case Language::Cpp: return tree_sitter_cpp();
    }
    return nullptr;
}

struct ParserHandle {
    TSParser* p;
    ParserHandle() : p(ts_parser_new()) {}
    ~ParserHandle() { ts_parser_delete(p); }
};

struct TreeHandle {
    TSTree* t = nullptr;
    ~TreeHandle() {
        if (t) ts_tree_delete(t);
    }
};

// Copies the subtree rooted at `cursor` into the arena, shifting byte
// offsets left by `offset`. Returns the new node's index or -1 when the
// node lies outside [offset, offset+limit).
int32_t copy_subtree(TSTreeCursor* cursor, std::vector<Node>& arena, int32_t parent,
                     uint32_t offset, uint32_t limit) {
    TSNode ts = ts_tree_cursor_current_node(cursor);
    uint32_t start = ts_node_start_byte(ts);
    uint32_t end = ts_node_end_byte(ts);
    if (end <= offset || start >= offset + limit) return -1;
    if (start == end) return -1;  // zero-width "missing" node

    int32_t id = static_cast<int32_t>(arena.size());
    arena.emplace_back();
    {
        Node& n = arena.back();
        n.kind = ts_node_type(ts);
        const char* field = ts_tree_cursor_current_field_name(cursor);
        n.field = field ? field : "";
        n.start_byte = start < offset ? 0 : start - offset;
        n.end_byte = end - offset > limit ? limit : end - offset;
        n.named = ts_node_is_named(ts);
        n.error = ts_node_has_error(ts);
        n.parent = parent;
    }
    if (ts_tree_cursor_goto_first_child(cursor)) {
        do {
            int32_t child = copy_subtree(cursor, arena, id, offset, limit);
            if (child >= 0) arena[static_cast<size_t>(id)].children.push_back(child);
        } while (ts_tree_cursor_goto_next_sibling(cursor));
        ts_tree_cursor_goto_parent(cursor);
    }
    return id;
}

SyntaxTree copy_tree(TSNode root, Language lang, const std::string& source,
                     uint32_t offset, uint32_t limit, bool reroot) {
    SyntaxTree tree;
    tree.language_ = lang;
    tree.source_ = source;
    if (reroot) {
        // Synthetic root covering the unwrapped snippet; children are the
        // surviving subtrees of `root`.
        Node program;
        program.kind = "program";
        program.named = true;
        program.start_byte = 0;
        program.end_byte = limit;
        tree.nodes_.push_back(std::move(program));
        TSTreeCursor cursor = ts_tree_cursor_new(root);
        bool any_error = false;
        if (ts_tree_cursor_goto_first_child(&cursor)) {
            do {
                TSNode child = ts_tree_cursor_current_node(&cursor);
                if (!ts_node_is_named(child)) continue;  // wrapper braces
                int32_t id = copy_subtree(&cursor, tree.nodes_, 0, offset, limit);
                if (id >= 0) {
                    tree.nodes_[0].children.push_back(id);
                    any_error = any_error || tree.nodes_[static_cast<size_t>(id)].error;
                }
            } while (ts_tree_cursor_goto_next_sibling(&cursor));
        }
        ts_tree_cursor_delete(&cursor);
        tree.nodes_[0].error = any_error;
    } else {
        TSTreeCursor cursor = ts_tree_cursor_new(root);
        copy_subtree(&cursor, tree.nodes_, -1, offset, limit);
        ts_tree_cursor_delete(&cursor);
    }
    return tree;
}

bool parse_once(const std::string& text, Language lang, TreeHandle& out) {
    ParserHandle parser;
    ts_parser_set_language(parser.p, grammar_for(lang));
    out.t = ts_parser_parse_string(parser.p, nullptr, text.data(),
                                   static_cast<uint32_t>(text.size()));
    return out.t != nullptr;
}

bool is_whitespace_only(const std::string& s) {
    return s.find_first_not_of(" \t\r\n") == std::string::npos;
}

void sexp_rec(const SyntaxTree& tree, int32_t id, std::string& out) {
    const Node& n = tree.node(id);
    out += '(';
    out += n.kind;
    out += ' ';
    out += std::to_string(n.start_byte);
    out += "..";
    out += std::to_string(n.end_byte);
    for (int32_t c : n.children) {
        out += ' ';
        sexp_rec(tree, c, out);
    }
    out += ')';
}

void collect_leaves(const SyntaxTree& tree, int32_t id, TokenStream& out) {
    const Node& n = tree.node(id);
    if (is_comment_kind(n.kind)) return;
    bool atomic = n.kind.find("literal") != std::string::npos;
    if (n.children.empty() || atomic) {
        if (n.start_byte == n.end_byte) return;
        Token tok;
        tok.text = tree.source().substr(n.start_byte, n.end_byte - n.start_byte);
        tok.start_byte = n.start_byte;
        tok.end_byte = n.end_byte;
        tok.node = id;
        out.push_back(std::move(tok));
        return;
    }
    for (int32_t c : n.children) collect_leaves(tree, c, out);
}

}  // namespace

bool is_comment_kind(std::string_view kind) {
    return kind == "comment" || kind == "line_comment" || kind == "block_comment";
}

int32_t SyntaxTree::child_by_field(int32_t id, std::string_view field) const {
    for (int32_t c : node(id).children)
        if (node(c).field == field) return c;
    return -1;
}

int32_t SyntaxTree::child_by_kind(int32_t id, std::string_view kind) const {
    for (int32_t c : node(id).children)
        if (node(c).kind == kind) return c;
    return -1;
}

std::string SyntaxTree::sexp() const {
    std::string out;
    if (!nodes_.empty()) sexp_rec(*this, 0, out);
    return out;
}

SyntaxTree parse(const std::string& code, Language language) {
    if (code.empty() || is_whitespace_only(code))
        throw UnparseableError("empty input");

    TreeHandle direct;
    if (!parse_once(code, language, direct))
        throw UnparseableError("parser failure");
    TSNode root = ts_tree_root_node(direct.t);

    if (language == Language::Java && ts_node_has_error(root)) {
        // SARD snippets are bare method declarations; retry inside a
        // synthetic class wrapper.
        static const std::string prefix = "class __W {\n";
        static const std::string suffix = "\n}\n";
        TreeHandle wrapped;
        if (parse_once(prefix + code + suffix, language, wrapped)) {
            TSNode wroot = ts_tree_root_node(wrapped.t);
            if (!ts_node_has_error(wroot)) {
                TSNode decl = ts_node_named_child(wroot, 0);
                TSNode body = ts_node_child_by_field_name(decl, "body", 4);
                if (!ts_node_is_null(body)) {
                    return copy_tree(body, language, code,
                                     static_cast<uint32_t>(prefix.size()),
                                     static_cast<uint32_t>(code.size()), true);
                }
            }
        }
    }

    if (ts_node_has_error(root)) {
        // tolerate local errors as long as something usable parsed; reject
        // input whose top level is nothing but error recovery
        bool usable = false;
        uint32_t n = ts_node_named_child_count(root);
        for (uint32_t i = 0; i < n; ++i) {
            TSNode child = ts_node_named_child(root, i);
            if (strcmp(ts_node_type(child), "ERROR") != 0 && !ts_node_has_error(child)) {
                usable = true;
                break;
            }
        }
        if (!usable)
            throw UnparseableError("input is not parseable as " + to_string(language));
    }

    SyntaxTree tree = copy_tree(root, language, code, 0,
                                static_cast<uint32_t>(code.size()), false);
    if (tree.nodes().empty()) throw UnparseableError("no syntax nodes");
    return tree;
}

TokenStream leaves(const SyntaxTree& tree) {
    TokenStream out;
    collect_leaves(tree, tree.root(), out);
    for (size_t i = 0; i < out.size(); ++i)
        out[i].position = static_cast<int>(i) + 1;
    return out;
}

}  // namespace vulnprompt::syntax
