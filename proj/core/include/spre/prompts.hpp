#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spre/types.hpp"

namespace spre {

/// The four stage prompts with {relation}, {description}, {k} style
/// placeholders. builtin() returns the canonical wording; load_dir() reads
/// overrides from synonyms.txt / generation.txt / rephrase.txt / inference.txt
/// (one trailing newline per file is tolerated and stripped).
struct PromptTemplates {
  std::string synonyms;
  std::string generation;
  std::string rephrase;
  std::string inference;

  static PromptTemplates builtin();
  static PromptTemplates load_dir(const std::filesystem::path& dir);
};

/// Replaces every occurrence of each "{name}" placeholder.
std::string substitute(std::string_view tpl,
                       std::span<const std::pair<std::string_view, std::string>> values);

/// "['a', 'b', 'c']" — single-quoted, comma-space separated.
std::string render_relation_list(std::span<const std::string> names);

std::string render_synonym_prompt(const PromptTemplates& tpls, const RelationDef& rel, int k);
std::string render_generation_prompt(const PromptTemplates& tpls, const RelationDef& rel, int batch);

/// The rephrase instruction alone (no input block).
std::string render_rephrase_instruction(const PromptTemplates& tpls, const RelationDef& rel, int r);

/// Instruction plus the "Sentence: ... / Relation: [...]" input block.
std::string render_rephrase_prompt(const PromptTemplates& tpls, const RelationDef& rel,
                                   const SyntheticSample& sample, int r);

std::string render_triple_list(std::span<const RelationTriple> triples);

/// "Sentence: ...\nGiven the Sentence, the relation between H and T is: R"
std::string render_demo_block(std::string_view sentence, std::string_view head,
                              std::string_view tail, std::string_view relation_name);

/// Same block with the answer left blank (trailing "is:").
std::string render_query_block(std::string_view sentence, std::string_view head,
                               std::string_view tail);

/// Uses the relation name when the description is empty; warns on stderr once per call.
const std::string& description_or_name(const RelationDef& rel);

}  // namespace spre
