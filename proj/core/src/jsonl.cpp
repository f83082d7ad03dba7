#include "spre/jsonl.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "spre/errors.hpp"

namespace spre {
namespace {

using json = nlohmann::json;

json provenance_to_json(const Provenance& p) {
  if (p.is_fresh()) {
    return json{{"kind", "fresh"}};
  }
  return json{{"kind", "rephrase_of"}, {"parent_id", p.parent_id}, {"variant_index", p.variant_index}};
}

Provenance provenance_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "fresh") {
    return Provenance::fresh();
  }
  if (kind == "rephrase_of") {
    return Provenance::rephrase_of(j.at("parent_id").get<std::string>(),
                                   j.at("variant_index").get<int>());
  }
  throw Error("unknown provenance kind: " + kind);
}

json tags_to_json(const StrategyTags& tags) {
  json arr = json::array();
  if (tags.synonyms) arr.push_back("synonyms");
  if (tags.filter) arr.push_back("filter");
  if (tags.rephrase) arr.push_back("rephrase");
  return arr;
}

StrategyTags tags_from_json(const json& arr) {
  StrategyTags tags;
  for (const auto& item : arr) {
    const std::string name = item.get<std::string>();
    if (name == "synonyms") tags.synonyms = true;
    else if (name == "filter") tags.filter = true;
    else if (name == "rephrase") tags.rephrase = true;
    else throw Error("unknown strategy tag: " + name);
  }
  return tags;
}

json parse_line(const std::string& line) {
  try {
    return json::parse(line);
  } catch (const json::exception& ex) {
    throw Error(std::string("bad JSONL line: ") + ex.what());
  }
}

template <typename T, typename FromLine>
std::vector<T> load_typed(const std::filesystem::path& path, FromLine from_line) {
  std::vector<T> out;
  for (const auto& [line, lineno] : read_jsonl_lines(path)) {
    try {
      out.push_back(from_line(line));
    } catch (const std::exception& ex) {
      throw FormatError(lineno, ex.what());
    }
  }
  return out;
}

template <typename T>
void save_typed(const std::filesystem::path& path, std::span<const T> items) {
  std::string content;
  for (const auto& item : items) {
    content += to_jsonl(item);
    content += '\n';
  }
  write_file_atomic(path, content);
}

}  // namespace

std::string to_jsonl(const RelationDef& rel) {
  json j{{"id", rel.id}, {"name", rel.name}, {"description", rel.description}, {"dataset", rel.dataset}};
  return j.dump();
}

std::string to_jsonl(const SemanticGroup& group) {
  json j{{"relation_id", group.relation_id}, {"members", group.members}};
  return j.dump();
}

std::string to_jsonl(const SyntheticSample& sample) {
  json triples = json::array();
  for (const auto& t : sample.triples) {
    triples.push_back(json{{"head", t.head}, {"relation", t.relation}, {"tail", t.tail}});
  }
  json j{{"id", sample.id},
         {"relation_id", sample.relation_id},
         {"sentence", sample.sentence},
         {"triples", std::move(triples)},
         {"provenance", provenance_to_json(sample.provenance)},
         {"strategy_tags", tags_to_json(sample.strategy_tags)}};
  return j.dump();
}

std::string to_jsonl(const TestInstance& instance) {
  json j{{"id", instance.id},
         {"sentence", instance.sentence},
         {"head", instance.head},
         {"tail", instance.tail},
         {"gold_relation_id", instance.gold_relation_id},
         {"dataset", instance.dataset}};
  return j.dump();
}

RelationDef relation_from_jsonl(const std::string& line) {
  json j = parse_line(line);
  return {j.at("id").get<std::string>(), j.at("name").get<std::string>(),
          j.value("description", std::string{}), j.value("dataset", std::string{})};
}

SemanticGroup group_from_jsonl(const std::string& line) {
  json j = parse_line(line);
  SemanticGroup group;
  group.relation_id = j.at("relation_id").get<std::string>();
  group.members = j.at("members").get<std::vector<std::string>>();
  return group;
}

SyntheticSample sample_from_jsonl(const std::string& line) {
  json j = parse_line(line);
  SyntheticSample sample;
  sample.id = j.at("id").get<std::string>();
  sample.relation_id = j.at("relation_id").get<std::string>();
  sample.sentence = j.at("sentence").get<std::string>();
  for (const auto& t : j.at("triples")) {
    sample.triples.push_back({t.at("head").get<std::string>(), t.at("relation").get<std::string>(),
                              t.at("tail").get<std::string>()});
  }
  sample.provenance = provenance_from_json(j.at("provenance"));
  sample.strategy_tags = tags_from_json(j.at("strategy_tags"));
  return sample;
}

TestInstance instance_from_jsonl(const std::string& line) {
  json j = parse_line(line);
  return {j.at("id").get<std::string>(),   j.at("sentence").get<std::string>(),
          j.at("head").get<std::string>(), j.at("tail").get<std::string>(),
          j.at("gold_relation_id").get<std::string>(), j.value("dataset", std::string{})};
}

void save_groups(const std::filesystem::path& path, std::span<const SemanticGroup> groups) {
  save_typed(path, groups);
}

void save_samples(const std::filesystem::path& path, std::span<const SyntheticSample> samples) {
  save_typed(path, samples);
}

std::vector<SemanticGroup> load_groups(const std::filesystem::path& path) {
  return load_typed<SemanticGroup>(path, group_from_jsonl);
}

std::vector<SyntheticSample> load_samples(const std::filesystem::path& path) {
  return load_typed<SyntheticSample>(path, sample_from_jsonl);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::filesystem::path partial = path;
  partial += ".partial";
  {
    std::ofstream out(partial, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error("cannot open for writing: " + partial.string());
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
      throw Error("short write: " + partial.string());
    }
  }
  std::filesystem::rename(partial, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open: " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::pair<std::string, std::size_t>> read_jsonl_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open: " + path.string());
  }
  std::vector<std::pair<std::string, std::size_t>> lines;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.find_first_not_of(" \t") == std::string::npos) {
      continue;
    }
    lines.emplace_back(line, lineno);
  }
  return lines;
}

}  // namespace spre
