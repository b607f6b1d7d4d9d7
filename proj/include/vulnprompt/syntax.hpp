#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "vulnprompt/types.hpp"

namespace vulnprompt::syntax {

// Concrete syntax tree copied out of the parser into a flat arena.
// Nodes are addressed by index; index 0 is the root.
struct Node {
    std::string kind;
    std::string field;       // field name this node has in its parent, or ""
    uint32_t start_byte = 0;
    uint32_t end_byte = 0;
    bool named = false;
    bool error = false;      // this node or a descendant is an error-recovery node
    int32_t parent = -1;
    std::vector<int32_t> children;
};

struct Token {
    std::string text;
    int position = 0;        // 1-based index in the stream
    uint32_t start_byte = 0;
    uint32_t end_byte = 0;
    int32_t node = -1;       // leaf node handle
};

class SyntaxTree {
public:
    Language language() const { return language_; }
    const std::string& source() const { return source_; }
    const std::vector<Node>& nodes() const { return nodes_; }
    const Node& node(int32_t id) const { return nodes_[static_cast<size_t>(id)]; }
    int32_t root() const { return 0; }
    bool has_errors() const { return nodes_.empty() ? true : nodes_[0].error; }

    std::string text(int32_t id) const {
        const Node& n = node(id);
        return source_.substr(n.start_byte, n.end_byte - n.start_byte);
    }

    // First child with the given field name, or -1.
    int32_t child_by_field(int32_t id, std::string_view field) const;
    // First child with the given kind, or -1.
    int32_t child_by_kind(int32_t id, std::string_view kind) const;

    // Stable (kind byte-span) dump used by golden tests.
    std::string sexp() const;

    Language language_ = Language::Java;
    std::string source_;
    std::vector<Node> nodes_;
};

using TokenStream = std::vector<Token>;

// Parses a function-level snippet. Java snippets may be bare method
// declarations; they are parsed inside a synthetic wrapper class and the
// wrapper is not part of the resulting tree.
// Throws UnparseableError when nothing parses.
SyntaxTree parse(const std::string& code, Language language);

// Source-ordered, 1-based concrete tokens. Comment leaves are skipped.
TokenStream leaves(const SyntaxTree& tree);

bool is_comment_kind(std::string_view kind);

}  // namespace vulnprompt::syntax
