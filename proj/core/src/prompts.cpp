#include "spre/prompts.hpp"

#include <array>
#include <iostream>

#include "spre/errors.hpp"
#include "spre/jsonl.hpp"

namespace spre {
namespace {

constexpr std::string_view kSynonymsTemplate =
    "For a giving relation type: {relation}, your objective is to create {k} synonyms about this relation.\n"
    "The description of this relation is: {description}\n"
    "Ensure that your generated examples adhere to the following guidelines:\n"
    "1. The synonyms should explicitly or implicitly align with the relation {relation}.\n"
    "2. Ensure the diversity among different synonyms.\n"
    "3. The synonyms could be a single word or phrase.\n"
    "Please format your output in Python list-style:\n"
    "[synonyms1, synonyms2, ..., synonyms{k}]";

constexpr std::string_view kGenerationTemplate =
    "Imagine you are a sophisticated language model functioning as a textual data generator for a "
    "relation extraction task. Your objective is to create {k} synthetic sentences, each containing "
    "a specific type of relationship denoted as: {relation}\n"
    "The description of this relation is: {description}.\n"
    "These sentences must be informative and clearly demonstrate the intended relation, either "
    "explicitly or implicitly. Please format your output as follows:\n"
    "Sentence: [Your generated sentence here].\n"
    "Relation: [(entity1, {relation}, entity2), (entity3, {relation}, entity4), ...].\n"
    "Where the relation list could contain one to three relation tuples.\n"
    "Ensure that your generated examples adhere to the following guidelines:\n"
    "1. The relation should be the same as the previously defined relation.\n"
    "2. Head and tail entities must appear in the original sentence.\n"
    "3. Separate the head and tail into several triples that have the same relation.\n"
    "4. Generate sentences with varying lengths and complexities, including simple, compound, and "
    "complex sentences.\n"
    "5. Ensure a broad and realistic variety in the types of head and tail entities to reflect "
    "real-world contexts.";

constexpr std::string_view kRephraseTemplate =
    "As a text paraphrasing agent, your task is to paraphrase a given sentence to generate {k} new "
    "versions. The original sentence includes one or more relationships. Rewrite the sentence to "
    "subtly imply the relationships that were originally stated explicitly, while also enhancing "
    "the semantic depth and diversifying the grammatical structure.\n"
    "Input format:\n"
    "Sentence: The sentence to be paraphrased.\n"
    "Relation: A list of relation tuples in the format (head, relation, tail).\n"
    "Output Format:\n"
    "Provide {k} paraphrased sentences, where the relation list could contain one to three "
    "relation tuples.\n"
    "Ensure that your generated examples adhere to the following guidelines:\n"
    "1. Preservation of Entities: Ensure that the head and tail entities from the original "
    "sentence are present in each paraphrased version.\n"
    "2. Variety and Realism: Aim for a wide range of sentence structures and contexts in your "
    "paraphrases, reflecting realistic and diverse scenarios.\n"
    "3. In the generated relation list for each paraphrased sentence, the relation MUST remain "
    "consistent with the relation: {relation}, while minor modifications to the entities are "
    "permissible.";

constexpr std::string_view kInferenceTemplate =
    "Your goal is to extract the relation between two entities in a sentence. The relation "
    "candidate is a list of relations that you can choose from: {relation list}\n"
    "{demonstrations}\n"
    "Sentence: {extract sentence}\n"
    "Given the Sentence, the relation between {head} and {tail} is:";

std::string load_template(const std::filesystem::path& file) {
  std::string text = read_file(file);
  if (text.ends_with("\r\n")) {
    text.resize(text.size() - 2);
  } else if (text.ends_with("\n")) {
    text.pop_back();
  }
  return text;
}

}  // namespace

PromptTemplates PromptTemplates::builtin() {
  return {std::string(kSynonymsTemplate), std::string(kGenerationTemplate),
          std::string(kRephraseTemplate), std::string(kInferenceTemplate)};
}

PromptTemplates PromptTemplates::load_dir(const std::filesystem::path& dir) {
  return {load_template(dir / "synonyms.txt"), load_template(dir / "generation.txt"),
          load_template(dir / "rephrase.txt"), load_template(dir / "inference.txt")};
}

std::string substitute(std::string_view tpl,
                       std::span<const std::pair<std::string_view, std::string>> values) {
  std::string out(tpl);
  for (const auto& [name, value] : values) {
    std::string placeholder = "{" + std::string(name) + "}";
    std::size_t pos = 0;
    while ((pos = out.find(placeholder, pos)) != std::string::npos) {
      out.replace(pos, placeholder.size(), value);
      pos += value.size();
    }
  }
  return out;
}

std::string render_relation_list(std::span<const std::string> names) {
  std::string out = "[";
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i > 0) {
      out += ", ";
    }
    out += "'" + names[i] + "'";
  }
  out += "]";
  return out;
}

const std::string& description_or_name(const RelationDef& rel) {
  if (!rel.description.empty()) {
    return rel.description;
  }
  std::cerr << "[spre] warning: relation \"" << rel.name
            << "\" has no description; using its name in prompts\n";
  return rel.name;
}

std::string render_synonym_prompt(const PromptTemplates& tpls, const RelationDef& rel, int k) {
  std::array<std::pair<std::string_view, std::string>, 3> values{
      {{"relation", rel.name}, {"description", description_or_name(rel)},
       {"k", std::to_string(k)}}};
  return substitute(tpls.synonyms, values);
}

std::string render_generation_prompt(const PromptTemplates& tpls, const RelationDef& rel,
                                     int batch) {
  std::array<std::pair<std::string_view, std::string>, 3> values{
      {{"relation", rel.name}, {"description", description_or_name(rel)},
       {"k", std::to_string(batch)}}};
  return substitute(tpls.generation, values);
}

std::string render_rephrase_instruction(const PromptTemplates& tpls, const RelationDef& rel,
                                        int r) {
  std::array<std::pair<std::string_view, std::string>, 2> values{
      {{"relation", rel.name}, {"k", std::to_string(r)}}};
  return substitute(tpls.rephrase, values);
}

std::string render_triple_list(std::span<const RelationTriple> triples) {
  std::string out = "[";
  for (std::size_t i = 0; i < triples.size(); ++i) {
    if (i > 0) {
      out += ", ";
    }
    out += "(" + triples[i].head + ", " + triples[i].relation + ", " + triples[i].tail + ")";
  }
  out += "]";
  return out;
}

std::string render_rephrase_prompt(const PromptTemplates& tpls, const RelationDef& rel,
                                   const SyntheticSample& sample, int r) {
  return render_rephrase_instruction(tpls, rel, r) + "\nSentence: " + sample.sentence +
         "\nRelation: " + render_triple_list(sample.triples);
}

std::string render_demo_block(std::string_view sentence, std::string_view head,
                              std::string_view tail, std::string_view relation_name) {
  return render_query_block(sentence, head, tail) + " " + std::string(relation_name);
}

std::string render_query_block(std::string_view sentence, std::string_view head,
                               std::string_view tail) {
  std::string out = "Sentence: ";
  out += sentence;
  out += "\nGiven the Sentence, the relation between ";
  out += head;
  out += " and ";
  out += tail;
  out += " is:";
  return out;
}

}  // namespace spre
