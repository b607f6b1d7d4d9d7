#include "vulnprompt/prompt.hpp"

#include <sstream>

namespace vulnprompt::prompt {

namespace {

const char* kRole = "I want you to act as a vulnerability detection system.";
const char* kProvideApi =
    "I will provide you with the original program and the API call sequence, "
    "and you will act upon them.";
const char* kProvideDf =
    "I will provide you with the original program and the data flow "
    "information, and you will act upon them.";
const char* kProvideBoth =
    "I will provide you with the original program, the API call sequence and "
    "the data flow information, and you will act upon them.";
const char* kAskBuggy = "Is the following program buggy? Please answer Yes or No.";
const char* kAskBuggyBare = "Is the following program buggy?";
const char* kRoleAskBuggy =
    "I want you to act as a vulnerability detection system. My first request "
    "is \"Is the following program buggy?\" Please answer Yes or No.";
const char* kRoleAskCorrect =
    "I want you to act as a vulnerability detection system. My first request "
    "is \"Is the following program correct?\" Please answer Yes or No.";
const char* kChainIntent = "Please describe the intent of the given code.";
const char* kChainAskRole =
    "I want you to act as a vulnerability detection system. Is the above "
    "program buggy? Please answer Yes or No.";
const char* kChainAskAux =
    "I want you to act as a vulnerability detection system. Is the above code "
    "buggy? Only answer Yes or No.";

int whitespace_tokens(const std::string& text) {
    std::istringstream in(text);
    std::string word;
    int count = 0;
    while (in >> word) count++;
    return count;
}

std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (const std::string& p : parts) {
        if (p.empty()) continue;
        if (!out.empty()) out += ' ';
        out += p;
    }
    return out;
}

PromptPlan make(std::string name, Family family, Slot api, Slot df) {
    PromptPlan p;
    p.name = std::move(name);
    p.family = family;
    p.role_enabled = !p.name.empty() && p.name[0] == 'r';
    p.api_slot = api;
    p.df_slot = df;
    return p;
}

std::vector<PromptPlan> build_registry() {
    std::vector<PromptPlan> plans;
    auto add = [&](PromptPlan p) { plans.push_back(std::move(p)); };

    add(make("b", Family::Basic, Slot::Absent, Slot::Absent));
    add(make("r-b", Family::RoleBasic, Slot::Absent, Slot::Absent));
    add(make("r-r-b", Family::ReverseRole, Slot::Absent, Slot::Absent));

    auto with_api = [&](std::string name, Slot slot, std::string fallback) {
        PromptPlan p = make(std::move(name), Family::WithApi, slot, Slot::Absent);
        p.without_api = std::move(fallback);
        add(std::move(p));
    };
    auto with_df = [&](std::string name, Slot slot, std::string fallback) {
        PromptPlan p = make(std::move(name), Family::WithDf, Slot::Absent, slot);
        p.without_df = std::move(fallback);
        add(std::move(p));
    };
    with_api("r-a-b", Slot::Pos1, "r-b");
    with_df("r-b-d", Slot::Pos2, "r-b");
    {
        PromptPlan p = make("r-a-b-d", Family::WithApiAndDf, Slot::Pos1, Slot::Pos2);
        p.without_api = "r-b-d";
        p.without_df = "r-a-b";
        add(std::move(p));
    }
    with_api("b-a", Slot::Pos2, "b");
    with_api("a-b", Slot::Pos1, "b");
    with_api("r-b-a", Slot::Pos2, "r-b");
    with_df("b-d", Slot::Pos2, "b");
    with_df("d-b", Slot::Pos1, "b");
    with_df("r-d-b", Slot::Pos1, "r-b");

    {
        PromptPlan p = make("s-b", Family::SummaryAided, Slot::Absent, Slot::Absent);
        p.without_summary = "b";
        add(std::move(p));
        PromptPlan q = make("r-s-b", Family::SummaryAided, Slot::Absent, Slot::Absent);
        q.role_enabled = true;
        q.without_summary = "r-b";
        add(std::move(q));
    }

    auto chain = [&](std::string step2, Slot api, Slot df, std::string wa, std::string wd) {
        PromptPlan p = make("chain:" + step2, Family::Chain, api, df);
        p.role_enabled = true;
        p.chain_step2 = std::move(step2);
        if (!wa.empty()) p.without_api = std::move(wa);
        if (!wd.empty()) p.without_df = std::move(wd);
        add(std::move(p));
    };
    chain("r-b", Slot::Absent, Slot::Absent, "", "");
    chain("r-a-b", Slot::Pos2, Slot::Absent, "chain:r-b", "");
    chain("r-b-d", Slot::Absent, Slot::Pos2, "", "chain:r-b");
    chain("r-a-b-d", Slot::Pos2, Slot::Pos2, "chain:r-b-d", "chain:r-a-b");

    auto probe = [&](std::string name, ProbeKind kind) {
        PromptPlan p = make(std::move(name), Family::Probe, Slot::Absent, Slot::Absent);
        p.role_enabled = false;
        p.probe_kind = kind;
        add(std::move(p));
    };
    probe("probe:df", ProbeKind::DataFlow);
    probe("probe:cf", ProbeKind::ControlFlow);
    probe("probe:pd", ProbeKind::ProgramDependence);
    probe("probe:api", ProbeKind::ApiCalls);

    {
        PromptPlan p = make("explain", Family::ExplainFollowup, Slot::Absent, Slot::Absent);
        p.role_enabled = false;
        add(std::move(p));
    }
    return plans;
}

const std::string& require(const std::optional<std::string>& value, const char* what) {
    if (!value || value->empty())
        throw MissingFeatureError(std::string("plan requires ") + what);
    return *value;
}

}  // namespace

const std::vector<PromptPlan>& plan_registry() {
    static const std::vector<PromptPlan> plans = build_registry();
    return plans;
}

const PromptPlan* find_plan(const std::string& name) {
    for (const PromptPlan& p : plan_registry())
        if (p.name == name) return &p;
    return nullptr;
}

std::string ordinal(int n) {
    int mod100 = n % 100;
    const char* suffix = "th";
    if (mod100 < 11 || mod100 > 13) {
        switch (n % 10) {
            case 1: suffix = "st"; break;
            case 2: suffix = "nd"; break;
            case 3: suffix = "rd"; break;
        }
    }
    return std::to_string(n) + suffix;
}

std::string render_api_description(const apiseq::ApiCallSequence& seq) {
    const auto names = seq.rendered();
    if (names.empty()) return "";
    if (names.size() == 1) return "The program calls " + names[0] + ".";
    std::string out = "The program first calls " + names[0];
    for (size_t i = 1; i + 1 < names.size(); ++i) out += ", then calls " + names[i];
    out += ", and finally calls " + names.back() + ".";
    return out;
}

std::string render_df_description(const dataflow::DataFlowGraph& graph) {
    std::string out;
    size_t i = 0;
    const auto& edges = graph.edges;
    while (i < edges.size()) {
        size_t j = i;
        while (j < edges.size() && edges[j].target == edges[i].target &&
               edges[j].kind == edges[i].kind)
            j++;
        const auto& target = edges[i].target;
        if (!out.empty()) out += ' ';
        out += "The data value of the variable " + target.name + " at the " +
               ordinal(target.position) + " token ";
        out += edges[i].kind == dataflow::EdgeKind::ComesFrom ? "comes from"
                                                              : "is computed by";
        for (size_t k = i; k < j; ++k) {
            out += k == i ? " " : " or ";
            const auto& src = edges[k].source;
            if (src.is_constant)
                out += "the " + src.text + " at the " + ordinal(src.position) + " token";
            else
                out += "the variable " + src.text + " at the " + ordinal(src.position) +
                       " token";
        }
        out += ".";
        i = j;
    }
    return out;
}

RenderedPrompt render_prompt(const PromptPlan& plan, const std::string& code,
                             const std::optional<std::string>& api_text,
                             const std::optional<std::string>& df_text,
                             const std::optional<std::string>& summary) {
    if (plan.family == Family::Chain) return render_chain(plan, code, api_text, df_text);

    const std::string& name = plan.name;
    std::vector<std::string> parts;
    if (name == "b") {
        parts = {kAskBuggy, code};
    } else if (name == "r-b") {
        parts = {kRoleAskBuggy, code};
    } else if (name == "r-r-b") {
        parts = {kRoleAskCorrect, code};
    } else if (name == "r-a-b") {
        parts = {kRole, kProvideApi, require(api_text, "api"), kAskBuggyBare,
                 code + "."};
    } else if (name == "r-b-a") {
        parts = {kRole, kProvideApi, kAskBuggyBare, code + ".",
                 require(api_text, "api")};
    } else if (name == "r-b-d") {
        parts = {kRole, kProvideDf, kAskBuggyBare, code + ".", require(df_text, "df")};
    } else if (name == "r-d-b") {
        parts = {kRole, kProvideDf, require(df_text, "df"), kAskBuggyBare, code + "."};
    } else if (name == "r-a-b-d") {
        parts = {kRole,         kProvideBoth, require(api_text, "api"),
                 kAskBuggyBare, code + ".",   require(df_text, "df")};
    } else if (name == "b-a") {
        parts = {kAskBuggy, code + ".", require(api_text, "api")};
    } else if (name == "a-b") {
        parts = {require(api_text, "api"), kAskBuggy, code + "."};
    } else if (name == "b-d") {
        parts = {kAskBuggy, code + ".", require(df_text, "df")};
    } else if (name == "d-b") {
        parts = {require(df_text, "df"), kAskBuggy, code + "."};
    } else if (name == "s-b") {
        parts = {"Here is a summary of the program: " + require(summary, "summary") +
                     ".",
                 kAskBuggy, code + "."};
    } else if (name == "r-s-b") {
        parts = {kRole,
                 "Here is a summary of the program: " + require(summary, "summary") +
                     ".",
                 kAskBuggy, code + "."};
    } else if (plan.family == Family::Probe) {
        parts = {render_probe(*plan.probe_kind, code)};
    } else if (plan.family == Family::ExplainFollowup) {
        parts = {render_explain_followup()};
    } else {
        throw MissingFeatureError("unknown plan: " + name);
    }

    RenderedPrompt out;
    out.plan = plan;
    out.turns = {join(parts)};
    out.total_tokens = whitespace_tokens(out.turns[0]);
    return out;
}

RenderedPrompt render_chain(const PromptPlan& plan, const std::string& code,
                            const std::optional<std::string>& api_text,
                            const std::optional<std::string>& df_text) {
    if (plan.family != Family::Chain)
        throw MissingFeatureError("not a chain plan: " + plan.name);
    const std::string& step2 = *plan.chain_step2;

    std::string turn1 = std::string(kChainIntent) + " " + code + ".";
    std::string turn2;
    if (step2 == "r-b") {
        turn2 = kChainAskRole;
    } else if (step2 == "r-a-b") {
        turn2 = std::string(kChainAskAux) +
                " Here is its API call sequence that you may use: " +
                require(api_text, "api");
    } else if (step2 == "r-b-d") {
        turn2 = std::string(kChainAskAux) +
                " Here is its data flow information that you may use: " +
                require(df_text, "df");
    } else if (step2 == "r-a-b-d") {
        turn2 = std::string(kChainAskAux) +
                " Here is its API call sequence and data flow information that you "
                "may use: " +
                require(api_text, "api") + " " + require(df_text, "df");
    } else {
        throw MissingFeatureError("unknown chain step: " + step2);
    }

    RenderedPrompt out;
    out.plan = plan;
    out.turns = {std::move(turn1), std::move(turn2)};
    out.total_tokens = whitespace_tokens(out.turns[0]) + whitespace_tokens(out.turns[1]);
    return out;
}

std::string render_probe(ProbeKind kind, const std::string& code) {
    switch (kind) {
        case ProbeKind::DataFlow:
            return "Please output data flow of the following code: " + code;
        case ProbeKind::ControlFlow:
            return "Please output control flow of the following code: " + code;
        case ProbeKind::ProgramDependence:
            return "Please output program dependence of the following code: " + code;
        case ProbeKind::ApiCalls:
            return "Please output all the API called by the following code in order. "
                   "Output format: (xx).(xxx). " +
                   code;
    }
    return "";
}

std::string render_explain_followup() {
    return "If the answer is yes, please describe the vulnerability.";
}

}  // namespace vulnprompt::prompt
