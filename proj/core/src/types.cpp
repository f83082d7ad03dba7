#include "spre/types.hpp"

#include <cctype>

#include "spre/errors.hpp"

namespace spre {

std::string normalize_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char raw : text) {
    unsigned char c = static_cast<unsigned char>(raw);
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

std::string normalize_entity(std::string_view surface) {
  std::string out = normalize_text(surface);
  if (out.empty()) {
    throw EmptyEntityError();
  }
  return out;
}

bool contains_normalized(std::string_view sentence, std::string_view entity) {
  std::string norm_entity = normalize_text(entity);
  if (norm_entity.empty()) {
    return false;
  }
  return normalize_text(sentence).find(norm_entity) != std::string::npos;
}

SemanticGroup SemanticGroup::singleton(const RelationDef& rel) {
  return {rel.id, {rel.name}};
}

bool SemanticGroup::contains(std::string_view member) const {
  std::string norm = normalize_text(member);
  for (const auto& existing : members) {
    if (normalize_text(existing) == norm) {
      return true;
    }
  }
  return false;
}

bool SemanticGroup::add_member(std::string_view member) {
  if (normalize_text(member).empty() || contains(member)) {
    return false;
  }
  members.emplace_back(member);
  return true;
}

void PipelineConfig::validate() const {
  auto require = [](bool cond, const char* what) {
    if (!cond) {
      throw Error(std::string("invalid config: ") + what);
    }
  };
  require(k >= 1, "k must be >= 1");
  require(n >= 1, "n must be >= 1");
  require(r >= 1, "r must be >= 1");
  require(d >= 0, "d must be >= 0");
  require(batch >= 1, "batch must be >= 1");
  require(cap >= 1, "cap must be >= 1");
  require(stall >= 1, "stall must be >= 1");
  require(temp_gen >= 0.0 && temp_gen <= 2.0, "temp_gen must be in [0, 2]");
  require(temp_infer >= 0.0 && temp_infer <= 2.0, "temp_infer must be in [0, 2]");
}

Verdict validate_sample(const SyntheticSample& sample) {
  Verdict verdict;
  auto violate = [&](std::string msg) { verdict.violations.push_back(std::move(msg)); };

  if (sample.triples.empty() || sample.triples.size() > 3) {
    violate("triple count " + std::to_string(sample.triples.size()) + " outside 1..3");
  }
  for (std::size_t i = 0; i < sample.triples.size(); ++i) {
    const auto& t = sample.triples[i];
    const std::string tag = "triple " + std::to_string(i + 1);
    std::string head_norm = normalize_text(t.head);
    std::string tail_norm = normalize_text(t.tail);
    if (head_norm.empty()) {
      violate(tag + ": head is empty");
    }
    if (tail_norm.empty()) {
      violate(tag + ": tail is empty");
    }
    if (!head_norm.empty() && head_norm == tail_norm) {
      violate(tag + ": head equals tail after normalization");
    }
    if (!head_norm.empty() && !contains_normalized(sample.sentence, t.head)) {
      violate(tag + ": head \"" + t.head + "\" not found in sentence");
    }
    if (!tail_norm.empty() && !contains_normalized(sample.sentence, t.tail)) {
      violate(tag + ": tail \"" + t.tail + "\" not found in sentence");
    }
  }
  if (sample.provenance.kind == ProvenanceKind::RephraseOf) {
    if (sample.provenance.parent_id.empty()) {
      violate("rephrased sample has no parent id");
    }
    if (sample.provenance.variant_index < 1) {
      violate("variant index " + std::to_string(sample.provenance.variant_index) + " below 1");
    }
  }
  return verdict;
}

}  // namespace spre
