#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spre/gateway.hpp"
#include "spre/prompts.hpp"
#include "spre/types.hpp"

namespace spre {

/// Per-relation frequency counter over normalized entity surfaces. With the
/// filter enabled no recorded count exceeds n after an accept.
struct EntityLedger {
  std::string relation_id;
  std::map<std::string, int> counts;
};

enum class AdmitResult { Accepted, Rejected };

/// Rejects iff any normalized head/tail entity of the sample already has
/// count >= n. On accept each distinct entity is incremented exactly once per
/// sample. Rejection leaves the ledger unchanged. With use_filter=false the
/// sample is always accepted and the ledger is still updated.
AdmitResult admit(const SyntheticSample& sample, EntityLedger& ledger, int n,
                  bool use_filter = true);

/// Extracts the first balanced [...] span, splits on commas at bracket depth
/// zero, strips surrounding quotes and whitespace, and drops empty items.
/// Throws ParseFailure when no bracketed span exists.
std::vector<std::string> parse_bracketed_list(std::string_view text);

/// Parses "(head, relation, tail)" tuples from a list span. Tuples that do not
/// have exactly three parts are skipped.
std::vector<RelationTriple> parse_triple_list(std::string_view text);

struct ParsedBlock {
  std::string sentence;
  std::vector<RelationTriple> triples;
};

/// Splits a completion into "Sentence: ... / Relation: [...]" blocks.
/// Leading list numbering is tolerated; sentence-only fragments are dropped.
std::vector<ParsedBlock> parse_sample_blocks(std::string_view completion);

struct ParsedVariant {
  std::string sentence;
  std::optional<std::vector<RelationTriple>> triples;  // set when the reply provides new triples
};

/// Parses numbered or "Sentence:"-prefixed paraphrase lines, each optionally
/// followed by its own "Relation: [...]" line.
std::vector<ParsedVariant> parse_rephrase_variants(std::string_view completion);

/// Renders the synonym prompt, parses the bracketed reply, and returns
/// [name] + synonyms deduplicated under normalization, at most 1 + k members.
/// With use_synonyms=false returns the singleton group without a backend
/// call. Throws ParseFailure after one failed re-ask; callers degrade to the
/// singleton group rather than aborting.
SemanticGroup generate_synonyms(Gateway& gateway, const PromptTemplates& tpls,
                                const RelationDef& rel, const PipelineConfig& cfg);

/// One generation call: renders the generation prompt, parses blocks, keeps
/// triples whose relation surface matches a group member, and returns at most
/// cfg.batch samples that pass validate_sample. Throws ParseFailure only if
/// zero blocks parse after one re-ask.
std::vector<SyntheticSample> generate_sample_batch(Gateway& gateway, const PromptTemplates& tpls,
                                                   const RelationDef& rel,
                                                   const SemanticGroup& group,
                                                   const PipelineConfig& cfg);

struct GenerationOutcome {
  std::vector<SyntheticSample> samples;
  EntityLedger ledger;
  int batches_issued = 0;
  int consecutive_stalls = 0;
  int rejected = 0;
};

/// Batched generation with admission, the per-relation cap, and the
/// consecutive-stall cutoff. A batch that adds zero retained samples (or
/// fails to parse) counts as a stall; any retained sample resets the stall
/// counter. Retained samples get stable ids "<relation_id>#<counter>".
GenerationOutcome run_generation_loop(Gateway& gateway, const PromptTemplates& tpls,
                                      const RelationDef& rel, const SemanticGroup& group,
                                      const PipelineConfig& cfg);

/// Renders the rephrase prompt for a Fresh parent and returns up to r valid
/// variants with provenance RephraseOf(parent, i). Variants whose text drops
/// a required entity are discarded. With use_rephrase=false returns {}.
/// Throws ParseFailure when zero variants parse after one re-ask (the parent
/// is unaffected).
std::vector<SyntheticSample> rephrase_sample(Gateway& gateway, const PromptTemplates& tpls,
                                             const RelationDef& rel, const SyntheticSample& parent,
                                             const PipelineConfig& cfg);

struct RelationFailure {
  std::string relation_id;
  std::string message;
};

struct SynthDataset {
  std::vector<SemanticGroup> groups;
  std::vector<SyntheticSample> samples;
  std::vector<RelationFailure> failures;
};

/// The full three-stage factory: synonyms, generation loop, rephrase, per
/// relation in schema order. Relations that fail are recorded and skipped;
/// throws only if every relation fails. jobs > 1 processes relations
/// concurrently; output order stays deterministic.
SynthDataset build_relation_dataset(Gateway& gateway, const PromptTemplates& tpls,
                                    std::span<const RelationDef> schema, const PipelineConfig& cfg,
                                    int jobs = 1);

/// Same pipeline but with stage-1 groups supplied by the caller (for example
/// loaded from a groups file). Relations without a matching group fall back
/// to the singleton group of their name.
SynthDataset build_relation_dataset_with_groups(Gateway& gateway, const PromptTemplates& tpls,
                                                std::span<const RelationDef> schema,
                                                std::span<const SemanticGroup> groups,
                                                const PipelineConfig& cfg, int jobs = 1);

struct ProvenanceAudit {
  std::vector<std::string> problems;
  int fresh_count = 0;
  int variant_count = 0;
  bool ok() const { return problems.empty(); }
};

/// Checks that every RephraseOf sample points to a Fresh sample in the set
/// and that no parent has more than r variants.
ProvenanceAudit audit_provenance(std::span<const SyntheticSample> samples, int r);

}  // namespace spre
