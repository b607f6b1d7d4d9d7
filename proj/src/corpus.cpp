#include "vulnprompt/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <random>
#include <regex>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "vulnprompt/syntax.hpp"

namespace vulnprompt {

Language language_from_string(const std::string& s) {
    if (s == "java") return Language::Java;
    if (s == "c") return Language::C;
    if (s == "cpp" || s == "c++" || s == "cxx") return Language::Cpp;
    throw DataError("unknown language: " + s);
}

Label label_from_string(const std::string& s) {
    if (s == "vul") return Label::Vulnerable;
    if (s == "non-vul") return Label::NonVulnerable;
    throw DataError("unknown label: " + s);
}

}  // namespace vulnprompt

namespace vulnprompt::corpus {

using nlohmann::json;
using syntax::SyntaxTree;

std::string to_string(RejectionKind kind) {
    switch (kind) {
        case RejectionKind::Duplicate: return "duplicate";
        case RejectionKind::TooShort: return "too-short";
        case RejectionKind::TooLong: return "too-long";
        case RejectionKind::CrossClassCall: return "cross-class-call";
        case RejectionKind::Unparseable: return "unparseable";
    }
    return "?";
}

std::map<std::string, int> Corpus::language_profile() const {
    std::map<std::string, int> out;
    for (const Sample& s : samples) out[vulnprompt::to_string(s.language)]++;
    return out;
}

std::map<std::string, int> Corpus::type_histogram() const {
    std::map<std::string, int> out;
    for (const Sample& s : samples) out[s.cwe.value_or("")]++;
    return out;
}

namespace {

struct Edit {
    uint32_t start;
    uint32_t end;
    std::string replacement;
};

std::string apply_edits(const std::string& text, std::vector<Edit> edits) {
    std::sort(edits.begin(), edits.end(),
              [](const Edit& a, const Edit& b) { return a.start > b.start; });
    std::string out = text;
    for (const Edit& e : edits)
        out.replace(e.start, e.end - e.start, e.replacement);
    return out;
}

uint64_t fnv1a(const std::string& s) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

void replace_all(std::string& s, const std::string& from, const std::string& to) {
    size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
}

// The identifier naming a C/C++ function, reached by following declarator
// fields through pointer/parenthesized wrappers.
int32_t c_function_name_node(const SyntaxTree& tree, int32_t definition) {
    int32_t cur = tree.child_by_field(definition, "declarator");
    while (cur >= 0) {
        const auto& n = tree.node(cur);
        if (n.kind == "identifier" || n.kind == "field_identifier") return cur;
        int32_t next = tree.child_by_field(cur, "declarator");
        if (next < 0) {
            // qualified_identifier and friends: take the last identifier leaf
            for (auto it = n.children.rbegin(); it != n.children.rend(); ++it)
                if (tree.node(*it).kind == "identifier") return *it;
            return -1;
        }
        cur = next;
    }
    return -1;
}

// Identifier nodes that name a function: its declaration plus
// self-recursive call sites.
std::vector<int32_t> function_name_sites(const SyntaxTree& tree) {
    std::vector<int32_t> decls;
    std::set<std::string> names;
    for (int32_t id = 0; id < static_cast<int32_t>(tree.nodes().size()); ++id) {
        const auto& n = tree.node(id);
        if (tree.language() == Language::Java) {
            if (n.kind == "method_declaration" || n.kind == "constructor_declaration") {
                int32_t name = tree.child_by_field(id, "name");
                if (name >= 0) {
                    decls.push_back(name);
                    names.insert(tree.text(name));
                }
            }
        } else if (n.kind == "function_definition") {
            int32_t name = c_function_name_node(tree, id);
            if (name >= 0) {
                decls.push_back(name);
                names.insert(tree.text(name));
            }
        }
    }
    for (int32_t id = 0; id < static_cast<int32_t>(tree.nodes().size()); ++id) {
        const auto& n = tree.node(id);
        if (tree.language() == Language::Java && n.kind == "method_invocation") {
            if (tree.child_by_field(id, "object") >= 0) continue;
            int32_t name = tree.child_by_field(id, "name");
            if (name >= 0 && names.count(tree.text(name))) decls.push_back(name);
        } else if (tree.language() != Language::Java && n.kind == "call_expression") {
            int32_t fn = tree.child_by_field(id, "function");
            if (fn >= 0 && tree.node(fn).kind == "identifier" && names.count(tree.text(fn)))
                decls.push_back(fn);
        }
    }
    return decls;
}

// Receiver class names that look like JDK or SARD test-support classes
// (java.*, javax.*, testcasesupport.*); snippets cannot resolve them but
// they do not indicate a project-local cross-class call.
const std::unordered_set<std::string>& jdk_allowlist() {
    static const std::unordered_set<std::string> names = {
        "String", "Integer", "Long", "Double", "Float", "Short", "Byte",
        "Character", "Boolean", "Object", "Math", "System", "Thread",
        "Runtime", "StringBuilder", "StringBuffer", "Arrays", "Collections",
        "Objects", "Optional", "Exception", "Throwable", "Class", "Void",
        "Files", "Paths", "Pattern", "Matcher", "Base64", "UUID", "Random",
        "SecureRandom", "MessageDigest", "KeyGenerator", "KeyPairGenerator",
        "Cipher", "Mac", "KerberosPrincipal", "KerberosKey", "InetAddress",
        "URL", "URI", "URLConnection", "Logger", "Level", "TimeUnit",
        "Locale", "Charset", "StandardCharsets", "Calendar", "Date",
        "DriverManager", "InputStreamReader", "BufferedReader", "Socket",
        "ServerSocket", "IO", "AbstractTestCase", "AbstractTestCaseBase",
    };
    return names;
}

bool java_has_cross_class_call(const SyntaxTree& tree) {
    // Names with an in-snippet declared type: locals, parameters, fields.
    std::set<std::string> declared;
    for (int32_t id = 0; id < static_cast<int32_t>(tree.nodes().size()); ++id) {
        const auto& n = tree.node(id);
        if (n.kind == "variable_declarator") {
            int32_t name = tree.child_by_field(id, "name");
            if (name >= 0) declared.insert(tree.text(name));
        } else if (n.kind == "formal_parameter" || n.kind == "catch_formal_parameter" ||
                   n.kind == "enhanced_for_statement") {
            int32_t name = tree.child_by_field(id, "name");
            if (name >= 0) declared.insert(tree.text(name));
        }
    }
    for (int32_t id = 0; id < static_cast<int32_t>(tree.nodes().size()); ++id) {
        if (tree.node(id).kind != "method_invocation") continue;
        int32_t obj = tree.child_by_field(id, "object");
        if (obj < 0) continue;
        if (tree.node(obj).kind != "identifier") continue;
        std::string receiver = tree.text(obj);
        if (declared.count(receiver)) continue;
        if (receiver.empty() || !isupper(static_cast<unsigned char>(receiver[0])))
            continue;  // unknown lowercase receiver: assumed a variable
        if (jdk_allowlist().count(receiver)) continue;
        if (receiver.rfind("java.", 0) == 0 || receiver.rfind("javax.", 0) == 0 ||
            receiver.rfind("testcasesupport.", 0) == 0)
            continue;
        return true;
    }
    return false;
}

int non_blank_lines(const std::string& code) {
    int count = 0;
    size_t begin = 0;
    while (begin <= code.size()) {
        size_t end = code.find('\n', begin);
        size_t stop = end == std::string::npos ? code.size() : end;
        std::string_view line(code.data() + begin, stop - begin);
        if (line.find_first_not_of(" \t\r") != std::string_view::npos) count++;
        if (end == std::string::npos) break;
        begin = end + 1;
    }
    return count;
}

}  // namespace

std::string strip_comments(const std::string& code, Language language) {
    SyntaxTree tree = syntax::parse(code, language);
    std::vector<Edit> edits;
    for (int32_t id = 0; id < static_cast<int32_t>(tree.nodes().size()); ++id) {
        const auto& n = tree.node(id);
        if (!syntax::is_comment_kind(n.kind)) continue;
        std::string body = tree.text(id);
        std::string keep(std::count(body.begin(), body.end(), '\n'), '\n');
        edits.push_back({n.start_byte, n.end_byte, keep});
    }
    return apply_edits(code, std::move(edits));
}

std::string scrub_identifiers(const std::string& code, Language language) {
    SyntaxTree tree = syntax::parse(code, language);
    static const std::regex cve_id(R"(CVE[-_][0-9]{4}[-_][0-9]{3,})");
    std::vector<Edit> edits;
    for (int32_t site : function_name_sites(tree)) {
        const auto& n = tree.node(site);
        std::string name = tree.text(site);
        if (language != Language::Java) name = std::regex_replace(name, cve_id, "");
        replace_all(name, "bad", "func");
        replace_all(name, "good", "func");
        replace_all(name, "VULN", "func");
        replace_all(name, "PATCHED", "func");
        if (name != tree.text(site)) edits.push_back({n.start_byte, n.end_byte, name});
    }
    return apply_edits(code, std::move(edits));
}

std::variant<Sample, RejectionReason> preprocess_sample(const Sample& sample, int budget) {
    Sample out = sample;
    try {
        out.code = scrub_identifiers(strip_comments(sample.code, sample.language),
                                     sample.language);
        if (non_blank_lines(out.code) < 3)
            return RejectionReason{RejectionKind::TooShort, "fewer than 3 lines"};
        SyntaxTree tree = syntax::parse(out.code, out.language);
        int tokens = static_cast<int>(syntax::leaves(tree).size());
        if (tokens > budget)
            return RejectionReason{RejectionKind::TooLong,
                                   std::to_string(tokens) + " tokens > budget " +
                                       std::to_string(budget)};
        if (out.language == Language::Java && java_has_cross_class_call(tree))
            return RejectionReason{RejectionKind::CrossClassCall,
                                   "calls a method of an unresolvable class"};
    } catch (const UnparseableError& e) {
        return RejectionReason{RejectionKind::Unparseable, e.what()};
    }
    return out;
}

std::string dedup_key(const std::string& code, Language language) {
    SyntaxTree tree = syntax::parse(code, language);
    std::string key;
    for (const auto& tok : syntax::leaves(tree)) {
        key += tok.text;
        key += '\x1e';
    }
    return key;
}

std::optional<RejectionReason> DedupFilter::admit(const Sample& sample) {
    std::string key = dedup_key(sample.code, sample.language);
    auto [it, inserted] = seen_.emplace(std::move(key), sample.id);
    if (!inserted)
        return RejectionReason{RejectionKind::Duplicate, "duplicate of " + it->second};
    return std::nullopt;
}

Corpus pair_mixed_cases(const Corpus& corpus, uint64_t seed) {
    struct GroupInfo {
        std::vector<size_t> vul;
        std::vector<size_t> nonvul;
    };
    std::map<std::string, GroupInfo> groups;
    for (size_t i = 0; i < corpus.samples.size(); ++i) {
        const Sample& s = corpus.samples[i];
        if (!s.group) continue;
        auto& g = groups[*s.group];
        (s.label == Label::Vulnerable ? g.vul : g.nonvul).push_back(i);
    }

    std::unordered_set<size_t> dropped;
    for (const auto& [name, g] : groups) {
        if (g.vul.empty() || g.nonvul.empty()) continue;
        // Per-group engine so the choice does not depend on group order.
        std::mt19937_64 rng(seed ^ fnv1a(name));
        size_t keep = g.nonvul[rng() % g.nonvul.size()];
        for (size_t i : g.nonvul)
            if (i != keep) dropped.insert(i);
    }

    Corpus out;
    for (size_t i = 0; i < corpus.samples.size(); ++i)
        if (!dropped.count(i)) out.samples.push_back(corpus.samples[i]);
    return out;
}

Corpus filter_top_types(const Corpus& corpus, int k) {
    std::map<std::string, int> histogram;
    for (const Sample& s : corpus.samples)
        if (s.cwe) histogram[*s.cwe]++;

    std::vector<std::pair<std::string, int>> ranked(histogram.begin(), histogram.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (static_cast<int>(ranked.size()) > k) ranked.resize(static_cast<size_t>(k));
    std::unordered_set<std::string> keep;
    for (const auto& [cwe, count] : ranked) keep.insert(cwe);

    Corpus out;
    for (const Sample& s : corpus.samples)
        if (s.cwe && keep.count(*s.cwe)) out.samples.push_back(s);
    return out;
}

Sample sample_from_json_line(const std::string& line) {
    json j = json::parse(line);
    Sample s;
    s.id = j.at("id").get<std::string>();
    s.language = language_from_string(j.at("language").get<std::string>());
    s.code = j.at("code").get<std::string>();
    s.label = label_from_string(j.at("label").get<std::string>());
    if (j.contains("cwe") && !j["cwe"].is_null()) s.cwe = j["cwe"].get<std::string>();
    if (j.contains("group") && !j["group"].is_null())
        s.group = j["group"].get<std::string>();
    if (j.contains("provenance") && !j["provenance"].is_null())
        s.provenance = j["provenance"].get<std::string>();
    return s;
}

std::string sample_to_json_line(const Sample& s) {
    json j;
    j["id"] = s.id;
    j["language"] = vulnprompt::to_string(s.language);
    j["code"] = s.code;
    j["label"] = vulnprompt::to_string(s.label);
    j["cwe"] = s.cwe ? json(*s.cwe) : json(nullptr);
    j["group"] = s.group ? json(*s.group) : json(nullptr);
    j["provenance"] = s.provenance;
    return j.dump();
}

Corpus load_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open corpus file: " + path);
    Corpus corpus;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        lineno++;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            corpus.samples.push_back(sample_from_json_line(line));
        } catch (const std::exception& e) {
            throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return corpus;
}

void save_jsonl(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write corpus file: " + path);
    for (const Sample& s : corpus.samples) out << sample_to_json_line(s) << '\n';
}

}  // namespace vulnprompt::corpus
