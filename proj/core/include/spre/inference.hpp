#pragma once

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "spre/gateway.hpp"
#include "spre/index.hpp"
#include "spre/prompts.hpp"
#include "spre/types.hpp"

namespace spre {

/// The assembled inference prompt: background (task statement plus candidate
/// list), ordered demonstration blocks, the unanswered query block, and the
/// rendered concatenation. Demonstrations appear in ascending-similarity
/// order, so the most similar sits immediately before the query.
struct PromptBundle {
  std::string background;
  std::vector<std::string> demos;
  std::string query;
  std::string rendered;
};

enum class MatchKind { Exact, Synonym, None };

std::string_view to_string(MatchKind kind);
MatchKind match_kind_from_string(std::string_view name);

struct Prediction {
  std::string test_id;
  std::string raw;           // completion text; empty when the backend was unavailable
  std::string relation_id;   // empty when unresolved
  MatchKind match_kind = MatchKind::None;
};

std::string to_jsonl(const Prediction& prediction);
Prediction prediction_from_jsonl(const std::string& line);

/// demos must already be in ascending-similarity order. Demonstration blocks
/// render each sample's first triple; its relation renders under the
/// candidate's canonical name.
PromptBundle assemble_prompt(const PromptTemplates& tpls, std::span<const RelationDef> candidates,
                             std::span<const SyntheticSample> demos, const TestInstance& test);

struct AnswerMatch {
  std::string relation_id;  // empty when kind == None
  MatchKind kind = MatchKind::None;
};

/// Scans raw left to right (case-insensitive, whitespace-collapsed) for the
/// earliest candidate name; ties at one position go to the longest name.
/// Falls back to group synonyms, resolved to their relation; otherwise None.
/// Never returns a relation outside the candidate set.
AnswerMatch extract_answer(std::string_view raw, std::span<const RelationDef> candidates,
                           std::span<const SemanticGroup> groups);

/// Full per-instance flow: retrieve d demonstrations, assemble, chat at the
/// inference temperature, extract. A BackendUnavailable failure yields an
/// unanswered prediction instead of propagating. When bundle_out is non-null
/// the assembled prompt is copied there for transcript dumps.
Prediction predict(Gateway& gateway, const PromptTemplates& tpls, const TestInstance& test,
                   std::span<const RelationDef> candidates, std::span<const SemanticGroup> groups,
                   const std::unordered_map<std::string, const SyntheticSample*>& samples_by_id,
                   const DemonstrationIndex& index, const PipelineConfig& cfg,
                   PromptBundle* bundle_out = nullptr);

std::unordered_map<std::string, const SyntheticSample*> index_samples_by_id(
    std::span<const SyntheticSample> samples);

}  // namespace spre
