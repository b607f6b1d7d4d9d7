#pragma once

#include <string>
#include <vector>

#include "vulnprompt/syntax.hpp"

namespace vulnprompt::apiseq {

struct ApiCall {
    std::string qualifier;  // class / receiver name; empty for bare C calls
    std::string member;     // method name, or "new" for constructors
    int32_t node = -1;      // call-site node handle

    std::string rendered() const {
        return qualifier.empty() ? member : qualifier + "." + member;
    }
    bool operator==(const ApiCall& other) const {
        return qualifier == other.qualifier && member == other.member;
    }
};

struct ApiCallSequence {
    std::vector<ApiCall> calls;

    std::vector<std::string> rendered() const {
        std::vector<std::string> out;
        out.reserve(calls.size());
        for (const ApiCall& c : calls) out.push_back(c.rendered());
        return out;
    }
};

// Java: the DEEPAPI traversal rules (constructors as C.new, argument calls
// before the enclosing call, all branches kept). C/C++: every
// call_expression callee name in pre-order source order.
ApiCallSequence extract_api_sequence(const syntax::SyntaxTree& tree);

// Declared type of a Java call receiver from the snippet's own
// declarations; falls back to the receiver text and to "" for
// implicit-this calls. Total.
std::string resolve_receiver(const syntax::SyntaxTree& tree, int32_t call_site);

// JSON array of "qualifier.member" strings.
std::string to_json(const ApiCallSequence& seq);
ApiCallSequence from_json(const std::string& text);

}  // namespace vulnprompt::apiseq
