#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace spre {

/// A relation label with its natural-language description. The description is
/// threaded into the synonym and generation prompts to keep the model on topic.
struct RelationDef {
  std::string id;           // opaque stable identifier, unique within a schema
  std::string name;         // surface label, e.g. "location"
  std::string description;  // free text; may be empty
  std::string dataset;      // source tag
};

/// A relation's original name plus its generated synonyms, treated as one
/// concept. members[0] is always the original name; no two members are equal
/// under entity normalization.
struct SemanticGroup {
  std::string relation_id;
  std::vector<std::string> members;

  static SemanticGroup singleton(const RelationDef& rel);

  /// Adds a member unless one equal under normalization already exists.
  /// Returns true if the member was added.
  bool add_member(std::string_view member);
  bool contains(std::string_view member) const;
};

struct RelationTriple {
  std::string head;
  std::string relation;  // surface label as emitted; may be a synonym
  std::string tail;

  bool operator==(const RelationTriple&) const = default;
};

enum class ProvenanceKind { Fresh, RephraseOf };

struct Provenance {
  ProvenanceKind kind = ProvenanceKind::Fresh;
  std::string parent_id;  // set iff kind == RephraseOf
  int variant_index = 0;  // 1-based, set iff kind == RephraseOf

  static Provenance fresh() { return {}; }
  static Provenance rephrase_of(std::string parent_id, int variant_index) {
    return {ProvenanceKind::RephraseOf, std::move(parent_id), variant_index};
  }
  bool is_fresh() const { return kind == ProvenanceKind::Fresh; }
  bool operator==(const Provenance&) const = default;
};

/// Which diversification strategies were active when a sample was created.
struct StrategyTags {
  bool synonyms = false;
  bool filter = false;
  bool rephrase = false;

  bool operator==(const StrategyTags&) const = default;
};

/// A generated sentence with 1-3 relation triples and provenance.
struct SyntheticSample {
  std::string id;
  std::string relation_id;
  std::string sentence;
  std::vector<RelationTriple> triples;
  Provenance provenance;
  StrategyTags strategy_tags;
};

struct TestInstance {
  std::string id;
  std::string sentence;
  std::string head;
  std::string tail;
  std::string gold_relation_id;
  std::string dataset;
};

/// Pipeline knobs. Defaults follow the reference hyperparameter setting:
/// k=10 synonyms, n=3 max entity occurrences, r=3 rephrase variants,
/// d=10 demonstrations, 10 samples per generation call, 200-sample cap,
/// 3-stall termination, generation temperature 1.2, inference temperature 0.
struct PipelineConfig {
  int k = 10;
  int n = 3;
  int r = 3;
  int d = 10;
  int batch = 10;
  int cap = 200;
  int stall = 3;
  double temp_gen = 1.2;
  double temp_infer = 0.0;
  bool use_synonyms = true;
  bool use_filter = true;
  bool use_rephrase = true;
  bool keep_parents = true;  // keep Fresh samples alongside their rephrase variants
  std::uint64_t seed = 1;

  StrategyTags tags() const { return {use_synonyms, use_filter, use_rephrase}; }

  /// Throws Error if any count or temperature is out of range.
  void validate() const;
};

/// Lowercases (ASCII), strips leading/trailing whitespace, and collapses
/// internal whitespace runs to single spaces. Throws EmptyEntityError if the
/// result is empty. Idempotent.
std::string normalize_entity(std::string_view surface);

/// Same transform as normalize_entity but an empty result is returned, not thrown.
std::string normalize_text(std::string_view text);

/// True iff entity occurs as a substring of sentence after normalizing both sides.
bool contains_normalized(std::string_view sentence, std::string_view entity);

struct Verdict {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

/// Checks every locally verifiable SyntheticSample invariant: triple count in
/// 1..3, entities non-empty and distinct per triple, head/tail present in the
/// sentence under normalization, and a positive variant index for rephrased
/// samples. Violations are data, not failures.
Verdict validate_sample(const SyntheticSample& sample);

}  // namespace spre
