#include "spre/synth.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <iostream>
#include <set>
#include <thread>

#include "spre/errors.hpp"

namespace spre {
namespace {

std::string trim(std::string_view text) {
  std::size_t begin = text.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) {
    return {};
  }
  std::size_t end = text.find_last_not_of(" \t\r\n");
  return std::string(text.substr(begin, end - begin + 1));
}

std::string strip_quotes(std::string item) {
  if (item.size() >= 2) {
    char front = item.front();
    char back = item.back();
    if ((front == '\'' && back == '\'') || (front == '"' && back == '"')) {
      return trim(item.substr(1, item.size() - 2));
    }
  }
  return item;
}

/// Strips leading "1. ", "2) ", "- " style list markers.
std::string_view strip_list_marker(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
  std::size_t digits = i;
  while (digits < line.size() && line[digits] >= '0' && line[digits] <= '9') ++digits;
  if (digits > i && digits < line.size() && (line[digits] == '.' || line[digits] == ')')) {
    std::size_t after = digits + 1;
    while (after < line.size() && line[after] == ' ') ++after;
    return line.substr(after);
  }
  if (i + 1 < line.size() && line[i] == '-' && line[i + 1] == ' ') {
    return line.substr(i + 2);
  }
  return line.substr(i);
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

std::string strip_wrapping_brackets(std::string text) {
  if (text.size() >= 2 && text.front() == '[' && text.back() == ']') {
    return trim(text.substr(1, text.size() - 2));
  }
  return text;
}

std::set<std::string> normalized_member_set(const SemanticGroup& group) {
  std::set<std::string> out;
  for (const auto& member : group.members) {
    out.insert(normalize_text(member));
  }
  return out;
}

std::string zero_pad6(int value) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06d", value);
  return buf;
}

ChatRequest stage_request(std::string prompt, double temperature, Stage stage,
                          const Gateway& gateway) {
  return ChatRequest::user(std::move(prompt), temperature, stage,
                           gateway.config().default_max_retries);
}

/// Issues the request, re-asks once when parse_fn finds nothing, then throws
/// ParseFailure with the given message.
template <typename ParseFn>
auto chat_with_reask(Gateway& gateway, const ChatRequest& request, ParseFn parse_fn,
                     const char* failure_message) {
  auto first = parse_fn(gateway.chat(request).text);
  if (!first.empty()) {
    return first;
  }
  auto second = parse_fn(gateway.chat(request).text);
  if (!second.empty()) {
    return second;
  }
  throw ParseFailure(failure_message);
}

}  // namespace

AdmitResult admit(const SyntheticSample& sample, EntityLedger& ledger, int n, bool use_filter) {
  std::set<std::string> entities;
  for (const auto& triple : sample.triples) {
    entities.insert(normalize_entity(triple.head));
    entities.insert(normalize_entity(triple.tail));
  }
  if (use_filter) {
    for (const auto& entity : entities) {
      auto it = ledger.counts.find(entity);
      if (it != ledger.counts.end() && it->second >= n) {
        return AdmitResult::Rejected;
      }
    }
  }
  for (const auto& entity : entities) {
    ledger.counts[entity] += 1;
  }
  return AdmitResult::Accepted;
}

std::vector<std::string> parse_bracketed_list(std::string_view text) {
  std::size_t open = text.find('[');
  if (open == std::string_view::npos) {
    throw ParseFailure("no bracketed list found");
  }
  int depth = 0;
  std::size_t close = std::string_view::npos;
  for (std::size_t i = open; i < text.size(); ++i) {
    if (text[i] == '[') ++depth;
    if (text[i] == ']' && --depth == 0) {
      close = i;
      break;
    }
  }
  if (close == std::string_view::npos) {
    throw ParseFailure("unbalanced bracketed list");
  }
  std::string_view inner = text.substr(open + 1, close - open - 1);

  std::vector<std::string> items;
  int sq_depth = 0;
  int paren_depth = 0;
  std::size_t item_start = 0;
  auto flush = [&](std::size_t end) {
    std::string item = strip_quotes(trim(inner.substr(item_start, end - item_start)));
    if (!item.empty()) {
      items.push_back(std::move(item));
    }
  };
  for (std::size_t i = 0; i < inner.size(); ++i) {
    char c = inner[i];
    if (c == '[') ++sq_depth;
    else if (c == ']') --sq_depth;
    else if (c == '(') ++paren_depth;
    else if (c == ')') --paren_depth;
    else if (c == ',' && sq_depth == 0 && paren_depth == 0) {
      flush(i);
      item_start = i + 1;
    }
  }
  flush(inner.size());
  return items;
}

std::vector<RelationTriple> parse_triple_list(std::string_view text) {
  std::vector<RelationTriple> triples;
  std::size_t pos = 0;
  while ((pos = text.find('(', pos)) != std::string_view::npos) {
    std::size_t close = text.find(')', pos);
    if (close == std::string_view::npos) {
      break;
    }
    std::string_view inner = text.substr(pos + 1, close - pos - 1);
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
      std::size_t comma = inner.find(',', start);
      if (comma == std::string_view::npos) {
        parts.push_back(strip_quotes(trim(inner.substr(start))));
        break;
      }
      parts.push_back(strip_quotes(trim(inner.substr(start, comma - start))));
      start = comma + 1;
    }
    if (parts.size() == 3 && !parts[0].empty() && !parts[2].empty()) {
      triples.push_back({parts[0], parts[1], parts[2]});
    }
    pos = close + 1;
  }
  return triples;
}

std::vector<ParsedBlock> parse_sample_blocks(std::string_view completion) {
  std::vector<ParsedBlock> blocks;
  std::optional<std::string> pending_sentence;
  for (std::string_view raw_line : split_lines(completion)) {
    std::string_view line = strip_list_marker(raw_line);
    if (line.starts_with("Sentence:")) {
      pending_sentence = strip_wrapping_brackets(trim(line.substr(9)));
      continue;
    }
    if (line.starts_with("Relation:") && pending_sentence) {
      auto triples = parse_triple_list(line.substr(9));
      if (!pending_sentence->empty()) {
        blocks.push_back({std::move(*pending_sentence), std::move(triples)});
      }
      pending_sentence.reset();
    }
  }
  return blocks;
}

std::vector<ParsedVariant> parse_rephrase_variants(std::string_view completion) {
  std::vector<ParsedVariant> variants;
  for (std::string_view raw_line : split_lines(completion)) {
    std::string_view line = strip_list_marker(raw_line);
    std::string text = trim(line);
    if (text.empty()) {
      continue;
    }
    if (line.starts_with("Relation:")) {
      if (!variants.empty() && !variants.back().triples) {
        auto triples = parse_triple_list(line.substr(9));
        if (!triples.empty()) {
          variants.back().triples = std::move(triples);
        }
      }
      continue;
    }
    if (line.starts_with("Sentence:")) {
      text = trim(line.substr(9));
    }
    // Header fragments like "Rephrased Sentence:" or "Output:" are not variants.
    if (text.ends_with(':') || text.size() < 8) {
      continue;
    }
    variants.push_back({strip_wrapping_brackets(std::move(text)), std::nullopt});
  }
  return variants;
}

SemanticGroup generate_synonyms(Gateway& gateway, const PromptTemplates& tpls,
                                const RelationDef& rel, const PipelineConfig& cfg) {
  SemanticGroup group = SemanticGroup::singleton(rel);
  if (!cfg.use_synonyms) {
    return group;
  }
  ChatRequest request = stage_request(render_synonym_prompt(tpls, rel, cfg.k), cfg.temp_gen,
                                      Stage::Synonyms, gateway);
  auto items = chat_with_reask(
      gateway, request,
      [](const std::string& text) -> std::vector<std::string> {
        try {
          return parse_bracketed_list(text);
        } catch (const ParseFailure&) {
          return {};
        }
      },
      "synonym reply has no bracketed list");
  for (const auto& item : items) {
    if (static_cast<int>(group.members.size()) >= 1 + cfg.k) {
      break;
    }
    group.add_member(item);
  }
  return group;
}

std::vector<SyntheticSample> generate_sample_batch(Gateway& gateway, const PromptTemplates& tpls,
                                                   const RelationDef& rel,
                                                   const SemanticGroup& group,
                                                   const PipelineConfig& cfg) {
  if (group.members.empty()) {
    throw Error("generate_sample_batch: empty semantic group");
  }
  ChatRequest request = stage_request(render_generation_prompt(tpls, rel, cfg.batch), cfg.temp_gen,
                                      Stage::Generation, gateway);
  auto blocks = chat_with_reask(
      gateway, request,
      [](const std::string& text) { return parse_sample_blocks(text); },
      "generation reply has no Sentence/Relation blocks");

  const std::set<std::string> allowed = normalized_member_set(group);
  std::vector<SyntheticSample> samples;
  for (auto& block : blocks) {
    if (static_cast<int>(samples.size()) >= cfg.batch) {
      break;
    }
    SyntheticSample sample;
    sample.relation_id = rel.id;
    sample.sentence = std::move(block.sentence);
    for (auto& triple : block.triples) {
      // Guideline 1: the tuple's relation must name this relation or one of
      // its synonyms; anything else is off-topic output.
      if (allowed.count(normalize_text(triple.relation)) > 0) {
        sample.triples.push_back(std::move(triple));
      }
    }
    sample.provenance = Provenance::fresh();
    sample.strategy_tags = cfg.tags();
    if (validate_sample(sample).ok()) {
      samples.push_back(std::move(sample));
    }
  }
  return samples;
}

GenerationOutcome run_generation_loop(Gateway& gateway, const PromptTemplates& tpls,
                                      const RelationDef& rel, const SemanticGroup& group,
                                      const PipelineConfig& cfg) {
  GenerationOutcome out;
  out.ledger.relation_id = rel.id;
  int counter = 0;
  while (static_cast<int>(out.samples.size()) < cfg.cap && out.consecutive_stalls < cfg.stall) {
    std::vector<SyntheticSample> batch;
    try {
      batch = generate_sample_batch(gateway, tpls, rel, group, cfg);
    } catch (const ParseFailure&) {
      // An unparseable batch is a stalled batch, not a fatal condition.
    }
    ++out.batches_issued;
    int added = 0;
    for (auto& sample : batch) {
      if (static_cast<int>(out.samples.size()) >= cfg.cap) {
        break;
      }
      if (admit(sample, out.ledger, cfg.n, cfg.use_filter) == AdmitResult::Accepted) {
        sample.id = rel.id + "#" + zero_pad6(++counter);
        out.samples.push_back(std::move(sample));
        ++added;
      } else {
        ++out.rejected;
      }
    }
    out.consecutive_stalls = (added == 0) ? out.consecutive_stalls + 1 : 0;
  }
  return out;
}

std::vector<SyntheticSample> rephrase_sample(Gateway& gateway, const PromptTemplates& tpls,
                                             const RelationDef& rel, const SyntheticSample& parent,
                                             const PipelineConfig& cfg) {
  if (!cfg.use_rephrase) {
    return {};
  }
  if (!parent.provenance.is_fresh()) {
    throw Error("rephrase_sample: parent must be a Fresh sample");
  }
  ChatRequest request = stage_request(render_rephrase_prompt(tpls, rel, parent, cfg.r),
                                      cfg.temp_gen, Stage::Rephrase, gateway);
  auto variants = chat_with_reask(
      gateway, request,
      [](const std::string& text) { return parse_rephrase_variants(text); },
      "rephrase reply has no paraphrased sentences");

  std::vector<SyntheticSample> out;
  for (std::size_t i = 0; i < variants.size() && static_cast<int>(i) < cfg.r; ++i) {
    SyntheticSample variant;
    variant.id = parent.id + "." + std::to_string(i + 1);
    variant.relation_id = parent.relation_id;
    variant.sentence = variants[i].sentence;
    variant.triples = variants[i].triples ? *variants[i].triples : parent.triples;
    variant.provenance = Provenance::rephrase_of(parent.id, static_cast<int>(i + 1));
    variant.strategy_tags = parent.strategy_tags;
    if (validate_sample(variant).ok()) {
      out.push_back(std::move(variant));
    }
  }
  return out;
}

namespace {

struct RelationResult {
  SemanticGroup group;
  std::vector<SyntheticSample> samples;
  std::optional<RelationFailure> failure;
};

RelationResult process_relation(Gateway& gateway, const PromptTemplates& tpls,
                                const RelationDef& rel, const SemanticGroup* premade_group,
                                const PipelineConfig& cfg) {
  RelationResult result;
  result.group = SemanticGroup::singleton(rel);
  try {
    if (premade_group != nullptr) {
      result.group = cfg.use_synonyms ? *premade_group : SemanticGroup::singleton(rel);
    } else if (cfg.use_synonyms) {
      try {
        result.group = generate_synonyms(gateway, tpls, rel, cfg);
      } catch (const ParseFailure& ex) {
        std::cerr << "[spre] warning: synonyms for \"" << rel.name << "\" failed (" << ex.what()
                  << "); continuing with the name alone\n";
      }
    }
    GenerationOutcome outcome = run_generation_loop(gateway, tpls, rel, result.group, cfg);
    for (const auto& fresh : outcome.samples) {
      std::vector<SyntheticSample> variants;
      if (cfg.use_rephrase) {
        try {
          variants = rephrase_sample(gateway, tpls, rel, fresh, cfg);
        } catch (const ParseFailure&) {
          // Parent survives; this parent simply contributes no variants.
        }
      }
      if (cfg.keep_parents || !cfg.use_rephrase) {
        result.samples.push_back(fresh);
      }
      for (auto& variant : variants) {
        result.samples.push_back(std::move(variant));
      }
    }
  } catch (const std::exception& ex) {
    result.failure = RelationFailure{rel.id, ex.what()};
    result.samples.clear();
  }
  return result;
}

}  // namespace

namespace {

SynthDataset build_dataset_impl(Gateway& gateway, const PromptTemplates& tpls,
                                std::span<const RelationDef> schema,
                                std::span<const SemanticGroup> premade_groups,
                                const PipelineConfig& cfg, int jobs) {
  if (schema.empty()) {
    throw Error("build_relation_dataset: empty schema");
  }
  cfg.validate();

  auto group_for = [&premade_groups](const RelationDef& rel) -> const SemanticGroup* {
    for (const auto& group : premade_groups) {
      if (group.relation_id == rel.id) {
        return &group;
      }
    }
    return nullptr;
  };

  std::vector<RelationResult> results(schema.size());
  if (jobs <= 1) {
    for (std::size_t i = 0; i < schema.size(); ++i) {
      results[i] = process_relation(gateway, tpls, schema[i], group_for(schema[i]), cfg);
    }
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      while (true) {
        std::size_t i = next.fetch_add(1);
        if (i >= schema.size()) {
          return;
        }
        results[i] = process_relation(gateway, tpls, schema[i], group_for(schema[i]), cfg);
      }
    };
    std::vector<std::thread> threads;
    int thread_count = std::min<int>(jobs, static_cast<int>(schema.size()));
    threads.reserve(static_cast<std::size_t>(thread_count));
    for (int t = 0; t < thread_count; ++t) {
      threads.emplace_back(worker);
    }
    for (auto& thread : threads) {
      thread.join();
    }
  }

  SynthDataset dataset;
  for (auto& result : results) {
    dataset.groups.push_back(std::move(result.group));
    if (result.failure) {
      dataset.failures.push_back(std::move(*result.failure));
      continue;
    }
    for (auto& sample : result.samples) {
      dataset.samples.push_back(std::move(sample));
    }
  }
  if (dataset.failures.size() == schema.size()) {
    throw Error("build_relation_dataset: every relation failed; first error: " +
                dataset.failures.front().message);
  }
  return dataset;
}

}  // namespace

SynthDataset build_relation_dataset(Gateway& gateway, const PromptTemplates& tpls,
                                    std::span<const RelationDef> schema, const PipelineConfig& cfg,
                                    int jobs) {
  return build_dataset_impl(gateway, tpls, schema, {}, cfg, jobs);
}

SynthDataset build_relation_dataset_with_groups(Gateway& gateway, const PromptTemplates& tpls,
                                                std::span<const RelationDef> schema,
                                                std::span<const SemanticGroup> groups,
                                                const PipelineConfig& cfg, int jobs) {
  return build_dataset_impl(gateway, tpls, schema, groups, cfg, jobs);
}

ProvenanceAudit audit_provenance(std::span<const SyntheticSample> samples, int r) {
  ProvenanceAudit audit;
  std::map<std::string, const SyntheticSample*> by_id;
  for (const auto& sample : samples) {
    by_id[sample.id] = &sample;
  }
  std::map<std::string, int> variants_per_parent;
  for (const auto& sample : samples) {
    if (sample.provenance.is_fresh()) {
      ++audit.fresh_count;
      continue;
    }
    ++audit.variant_count;
    auto it = by_id.find(sample.provenance.parent_id);
    if (it == by_id.end()) {
      audit.problems.push_back(sample.id + ": parent " + sample.provenance.parent_id +
                               " not in the set");
    } else if (!it->second->provenance.is_fresh()) {
      audit.problems.push_back(sample.id + ": parent " + sample.provenance.parent_id +
                               " is not Fresh");
    }
    if (sample.provenance.variant_index < 1 || sample.provenance.variant_index > r) {
      audit.problems.push_back(sample.id + ": variant index " +
                               std::to_string(sample.provenance.variant_index) + " outside 1.." +
                               std::to_string(r));
    }
    if (++variants_per_parent[sample.provenance.parent_id] > r) {
      audit.problems.push_back(sample.provenance.parent_id + ": more than " + std::to_string(r) +
                               " variants");
    }
  }
  return audit;
}

}  // namespace spre
