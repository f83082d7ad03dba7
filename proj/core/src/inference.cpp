#include "spre/inference.hpp"

#include <array>
#include <iostream>

#include <nlohmann/json.hpp>

#include "spre/errors.hpp"

namespace spre {
namespace {

using json = nlohmann::json;

std::string join_demos(std::span<const std::string> demos) {
  std::string out;
  for (std::size_t i = 0; i < demos.size(); ++i) {
    if (i > 0) {
      out += '\n';
    }
    out += demos[i];
  }
  return out;
}

}  // namespace

std::string_view to_string(MatchKind kind) {
  switch (kind) {
    case MatchKind::Exact: return "exact";
    case MatchKind::Synonym: return "synonym";
    case MatchKind::None: return "none";
  }
  return "none";
}

MatchKind match_kind_from_string(std::string_view name) {
  if (name == "exact") return MatchKind::Exact;
  if (name == "synonym") return MatchKind::Synonym;
  if (name == "none") return MatchKind::None;
  throw Error("unknown match kind: " + std::string(name));
}

std::string to_jsonl(const Prediction& prediction) {
  json j{{"test_id", prediction.test_id},
         {"raw", prediction.raw},
         {"relation", prediction.relation_id},
         {"match_kind", std::string(to_string(prediction.match_kind))}};
  return j.dump();
}

Prediction prediction_from_jsonl(const std::string& line) {
  json j = json::parse(line);
  Prediction p;
  p.test_id = j.at("test_id").get<std::string>();
  p.raw = j.at("raw").get<std::string>();
  p.relation_id = j.at("relation").get<std::string>();
  p.match_kind = match_kind_from_string(j.at("match_kind").get<std::string>());
  return p;
}

PromptBundle assemble_prompt(const PromptTemplates& tpls, std::span<const RelationDef> candidates,
                             std::span<const SyntheticSample> demos, const TestInstance& test) {
  if (candidates.empty()) {
    throw Error("assemble_prompt: no candidate relations");
  }
  const std::string placeholder = "{demonstrations}";
  std::size_t split = tpls.inference.find(placeholder);
  if (split == std::string::npos) {
    throw Error("inference template lacks the {demonstrations} placeholder");
  }
  std::string background_tpl = tpls.inference.substr(0, split);
  std::string query_tpl = tpls.inference.substr(split + placeholder.size());
  while (!background_tpl.empty() && background_tpl.back() == '\n') {
    background_tpl.pop_back();
  }
  while (!query_tpl.empty() && query_tpl.front() == '\n') {
    query_tpl.erase(query_tpl.begin());
  }

  std::vector<std::string> names;
  names.reserve(candidates.size());
  for (const auto& rel : candidates) {
    names.push_back(rel.name);
  }

  PromptBundle bundle;
  {
    std::array<std::pair<std::string_view, std::string>, 1> values{
        {{"relation list", render_relation_list(names)}}};
    bundle.background = substitute(background_tpl, values);
  }
  {
    std::array<std::pair<std::string_view, std::string>, 3> values{
        {{"extract sentence", test.sentence}, {"head", test.head}, {"tail", test.tail}}};
    bundle.query = substitute(query_tpl, values);
  }

  for (const auto& demo : demos) {
    if (demo.triples.empty()) {
      throw Error("assemble_prompt: demonstration " + demo.id + " has no triples");
    }
    std::string relation_name = demo.relation_id;
    for (const auto& rel : candidates) {
      if (rel.id == demo.relation_id) {
        relation_name = rel.name;
        break;
      }
    }
    const auto& triple = demo.triples.front();
    bundle.demos.push_back(render_demo_block(demo.sentence, triple.head, triple.tail, relation_name));
  }

  bundle.rendered = bundle.background;
  if (!bundle.demos.empty()) {
    bundle.rendered += '\n';
    bundle.rendered += join_demos(bundle.demos);
  }
  bundle.rendered += '\n';
  bundle.rendered += bundle.query;
  return bundle;
}

AnswerMatch extract_answer(std::string_view raw, std::span<const RelationDef> candidates,
                           std::span<const SemanticGroup> groups) {
  const std::string norm_raw = normalize_text(raw);
  if (norm_raw.empty()) {
    return {};
  }

  auto scan = [&norm_raw](std::string_view surface, std::size_t& best_pos, std::size_t& best_len,
                          bool& found) {
    std::string norm_surface = normalize_text(surface);
    if (norm_surface.empty()) {
      return false;
    }
    std::size_t pos = norm_raw.find(norm_surface);
    if (pos == std::string::npos) {
      return false;
    }
    // Earliest occurrence wins; the longest surface wins at equal positions.
    if (!found || pos < best_pos || (pos == best_pos && norm_surface.size() > best_len)) {
      best_pos = pos;
      best_len = norm_surface.size();
      found = true;
      return true;
    }
    return false;
  };

  std::size_t best_pos = 0;
  std::size_t best_len = 0;
  bool found = false;
  AnswerMatch match;
  for (const auto& rel : candidates) {
    if (scan(rel.name, best_pos, best_len, found)) {
      match = {rel.id, MatchKind::Exact};
    }
  }
  if (found) {
    return match;
  }

  for (const auto& group : groups) {
    bool in_candidates = false;
    for (const auto& rel : candidates) {
      if (rel.id == group.relation_id) {
        in_candidates = true;
        break;
      }
    }
    if (!in_candidates) {
      continue;
    }
    for (std::size_t i = 1; i < group.members.size(); ++i) {
      if (scan(group.members[i], best_pos, best_len, found)) {
        match = {group.relation_id, MatchKind::Synonym};
      }
    }
  }
  return found ? match : AnswerMatch{};
}

Prediction predict(Gateway& gateway, const PromptTemplates& tpls, const TestInstance& test,
                   std::span<const RelationDef> candidates, std::span<const SemanticGroup> groups,
                   const std::unordered_map<std::string, const SyntheticSample*>& samples_by_id,
                   const DemonstrationIndex& index, const PipelineConfig& cfg,
                   PromptBundle* bundle_out) {
  Prediction prediction;
  prediction.test_id = test.id;

  RetrievalResult retrieved;
  if (cfg.d > 0 && !index.empty()) {
    retrieved = index.retrieve(gateway, test.sentence, cfg.d);
  }
  std::vector<SyntheticSample> demos;
  demos.reserve(retrieved.hits.size());
  for (const auto& hit : retrieved.hits) {
    auto it = samples_by_id.find(hit.sample_id);
    if (it == samples_by_id.end()) {
      throw Error("predict: retrieved sample " + hit.sample_id + " is not in the sample set");
    }
    demos.push_back(*it->second);
  }

  PromptBundle bundle = assemble_prompt(tpls, candidates, demos, test);
  if (bundle_out != nullptr) {
    *bundle_out = bundle;
  }

  try {
    ChatRequest request = ChatRequest::user(bundle.rendered, cfg.temp_infer, Stage::Inference,
                                            gateway.config().default_max_retries);
    prediction.raw = gateway.chat(request).text;
  } catch (const BackendUnavailable& ex) {
    std::cerr << "[spre] warning: test " << test.id << " unanswered: " << ex.what() << "\n";
    return prediction;
  }

  std::span<const SemanticGroup> fallback_groups =
      cfg.use_synonyms ? groups : std::span<const SemanticGroup>{};
  AnswerMatch match = extract_answer(prediction.raw, candidates, fallback_groups);
  prediction.relation_id = match.relation_id;
  prediction.match_kind = match.kind;
  return prediction;
}

std::unordered_map<std::string, const SyntheticSample*> index_samples_by_id(
    std::span<const SyntheticSample> samples) {
  std::unordered_map<std::string, const SyntheticSample*> map;
  map.reserve(samples.size());
  for (const auto& sample : samples) {
    map[sample.id] = &sample;
  }
  return map;
}

}  // namespace spre
