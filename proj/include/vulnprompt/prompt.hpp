#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vulnprompt/apiseq.hpp"
#include "vulnprompt/dataflow.hpp"

namespace vulnprompt::prompt {

enum class Family {
    Basic,
    RoleBasic,
    ReverseRole,
    WithApi,
    WithDf,
    WithApiAndDf,
    SummaryAided,
    Chain,
    Probe,
    ExplainFollowup,
};

enum class Slot { Pos1, Pos2, Absent };
enum class ProbeKind { DataFlow, ControlFlow, ProgramDependence, ApiCalls };

struct PromptPlan {
    std::string name;  // CLI spelling, e.g. "r-a-b" or "chain:r-b-d"
    Family family = Family::Basic;
    bool role_enabled = false;
    Slot api_slot = Slot::Absent;
    Slot df_slot = Slot::Absent;
    std::optional<std::string> chain_step2;  // step-2 plan name for chains
    std::optional<ProbeKind> probe_kind;
    // Fallback plans used when a required feature renders empty.
    std::optional<std::string> without_api;
    std::optional<std::string> without_df;
    std::optional<std::string> without_summary;

    bool needs_api() const { return api_slot != Slot::Absent; }
    bool needs_df() const { return df_slot != Slot::Absent; }
    bool needs_summary() const { return family == Family::SummaryAided; }
    // "Is the following program correct?" inverts Yes/No semantics.
    bool reverse_question() const { return family == Family::ReverseRole; }
};

struct RenderedPrompt {
    std::vector<std::string> turns;
    PromptPlan plan;
    int total_tokens = 0;  // whitespace tokens across all turns
};

// All named plans, registered under their CLI spellings.
const std::vector<PromptPlan>& plan_registry();
const PromptPlan* find_plan(const std::string& name);

// "The program first calls a1, then calls ..., and finally calls an."
std::string render_api_description(const apiseq::ApiCallSequence& seq);

// One sentence per target occurrence; multiple reaching definitions are
// joined with " or ".
std::string render_df_description(const dataflow::DataFlowGraph& graph);

std::string ordinal(int n);  // 1 -> "1st", 12 -> "12th"

RenderedPrompt render_prompt(const PromptPlan& plan, const std::string& code,
                             const std::optional<std::string>& api_text = std::nullopt,
                             const std::optional<std::string>& df_text = std::nullopt,
                             const std::optional<std::string>& summary = std::nullopt);

RenderedPrompt render_chain(const PromptPlan& plan, const std::string& code,
                            const std::optional<std::string>& api_text = std::nullopt,
                            const std::optional<std::string>& df_text = std::nullopt);

std::string render_probe(ProbeKind kind, const std::string& code);

std::string render_explain_followup();

}  // namespace vulnprompt::prompt
