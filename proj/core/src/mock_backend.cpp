#include "spre/mock_backend.hpp"

#include <array>
#include <cstdio>
#include <set>
#include <string_view>

#include "spre/errors.hpp"
#include "spre/rng.hpp"

namespace spre {
namespace {

using rng::SmallRng;

std::string_view slice_between(std::string_view text, std::string_view after,
                               std::string_view until) {
  std::size_t start = text.find(after);
  if (start == std::string_view::npos) {
    return {};
  }
  start += after.size();
  std::size_t end = until.empty() ? text.size() : text.find(until, start);
  if (end == std::string_view::npos) {
    end = text.size();
  }
  return text.substr(start, end - start);
}

std::string_view last_line_value(std::string_view text, std::string_view marker) {
  std::size_t pos = text.rfind(marker);
  if (pos == std::string_view::npos) {
    return {};
  }
  pos += marker.size();
  std::size_t end = text.find('\n', pos);
  if (end == std::string_view::npos) {
    end = text.size();
  }
  return text.substr(pos, end - pos);
}

int parse_count(std::string_view text, int fallback) {
  int value = 0;
  for (char c : text) {
    if (c < '0' || c > '9') {
      break;
    }
    value = value * 10 + (c - '0');
  }
  return value > 0 ? value : fallback;
}

std::string serialize_request(const ChatRequest& request) {
  std::string out;
  for (const auto& msg : request.messages) {
    out += (msg.role == ChatMessage::Role::System) ? "system\x1f" : "user\x1f";
    out += msg.text;
    out += '\x1e';
  }
  char temp[32];
  std::snprintf(temp, sizeof(temp), "%.6f", request.temperature);
  out += temp;
  out += '\x1e';
  out += to_string(request.tag);
  return out;
}

std::string joined_prompt(const ChatRequest& request) {
  std::string out;
  for (const auto& msg : request.messages) {
    if (!out.empty()) {
      out += '\n';
    }
    out += msg.text;
  }
  return out;
}

constexpr std::array<std::string_view, 12> kSynVerbs = {
    "linked", "tied",    "bound",  "joined",  "associated", "aligned",
    "paired", "matched", "filed",  "grouped", "listed",     "held"};
constexpr std::array<std::string_view, 8> kSynPreps = {"with",  "to",    "under", "around",
                                                       "near",  "beside", "within", "amid"};

constexpr std::array<std::string_view, 16> kAdjectives = {
    "ancient",  "bustling", "coastal",  "famous", "granite", "historic", "northern", "quiet",
    "riverside", "rural",   "sandy",    "southern", "sprawling", "stone", "vibrant", "wooden"};
constexpr std::array<std::string_view, 18> kNouns = {
    "archive", "bakery",  "bridge",  "campus",      "canal",   "castle",
    "factory", "garden",  "harbor",  "library",     "market",  "museum",
    "observatory", "plaza", "station", "theater",   "tower",   "workshop"};

std::string pick_entity(SmallRng& rng) {
  std::string out;
  out += kAdjectives[rng.next_below(kAdjectives.size())];
  out += ' ';
  out += kNouns[rng.next_below(kNouns.size())];
  return out;
}

std::pair<std::string, std::string> pick_entity_pair(SmallRng& rng) {
  std::string a = pick_entity(rng);
  std::string b = pick_entity(rng);
  while (b == a) {
    b = pick_entity(rng);
  }
  return {a, b};
}

std::string sentence_for(SmallRng& rng, const std::string& a, const std::string& b) {
  switch (rng.next_below(4)) {
    case 0:
      return "The " + a + " has long been connected with the " + b + " in local records.";
    case 1:
      return "Visitors to the " + a + " often continue toward the " + b + " nearby.";
    case 2:
      return "According to the town register, the " + a + " and the " + b +
             " share a common history.";
    default:
      return "The " + a + ", well known in the region, stands close to the " + b + ".";
  }
}

std::string make_synonyms_reply(SmallRng& rng, std::string_view relation, int k) {
  std::set<std::string> seen;
  std::string out = "[";
  int emitted = 0;
  while (emitted < k) {
    std::string candidate;
    candidate += kSynVerbs[rng.next_below(kSynVerbs.size())];
    candidate += ' ';
    candidate += kSynPreps[rng.next_below(kSynPreps.size())];
    if (seen.size() >= kSynVerbs.size() * kSynPreps.size()) {
      candidate += ' ' + std::to_string(emitted + 1);
    }
    if (!seen.insert(candidate).second) {
      continue;
    }
    if (emitted > 0) {
      out += ", ";
    }
    out += candidate;
    ++emitted;
  }
  out += "]";
  (void)relation;
  return out;
}

std::string make_generation_reply(SmallRng& rng, std::string_view relation, int batch) {
  std::string out;
  for (int i = 0; i < batch; ++i) {
    auto [a, b] = pick_entity_pair(rng);
    bool two_triples = rng.next_below(8) == 0;
    if (!out.empty()) {
      out += "\n\n";
    }
    if (two_triples) {
      auto [c, d] = pick_entity_pair(rng);
      out += "Sentence: Both the " + a + " near the " + b + " and the " + c + " by the " + d +
             " appear in the survey.\n";
      out += "Relation: [(" + a + ", " + std::string(relation) + ", " + b + "), (" + c + ", " +
             std::string(relation) + ", " + d + ")]";
    } else {
      out += "Sentence: " + sentence_for(rng, a, b) + "\n";
      out += "Relation: [(" + a + ", " + std::string(relation) + ", " + b + ")]";
    }
  }
  return out;
}

std::string make_rephrase_reply(SmallRng& rng, std::string_view head, std::string_view tail,
                                int count) {
  std::string out;
  for (int i = 1; i <= count; ++i) {
    if (!out.empty()) {
      out += "\n";
    }
    out += std::to_string(i) + ". ";
    switch (rng.next_below(3)) {
      case 0:
        out += "Records kept in the area still place the " + std::string(head) +
               " alongside the " + std::string(tail) + ".";
        break;
      case 1:
        out += "Anyone passing the " + std::string(tail) + " will eventually reach the " +
               std::string(head) + " as well.";
        break;
      default:
        out += "The " + std::string(head) + " remains associated with the " + std::string(tail) +
               " to this day.";
        break;
    }
  }
  return out;
}

std::string make_inference_reply(SmallRng& rng, std::string_view prompt) {
  // Echo the relation of the final (most similar) demonstration; with no
  // demonstrations pick a candidate deterministically.
  std::string_view demo_answer;
  std::string_view rest = prompt;
  while (true) {
    std::size_t pos = rest.find("is: ");
    if (pos == std::string_view::npos) {
      break;
    }
    std::size_t start = pos + 4;
    std::size_t end = rest.find('\n', start);
    if (end == std::string_view::npos) {
      end = rest.size();
    }
    if (end > start) {
      demo_answer = rest.substr(start, end - start);
    }
    rest = rest.substr(end);
    if (rest.empty()) {
      break;
    }
  }
  if (!demo_answer.empty()) {
    return std::string(demo_answer);
  }
  std::string_view list = slice_between(prompt, "choose from: [", "]");
  std::vector<std::string> candidates;
  std::size_t start = 0;
  while (start <= list.size()) {
    std::size_t comma = list.find(", ", start);
    std::string_view item =
        (comma == std::string_view::npos) ? list.substr(start) : list.substr(start, comma - start);
    while (!item.empty() && (item.front() == '\'' || item.front() == '"')) item.remove_prefix(1);
    while (!item.empty() && (item.back() == '\'' || item.back() == '"')) item.remove_suffix(1);
    if (!item.empty()) {
      candidates.emplace_back(item);
    }
    if (comma == std::string_view::npos) {
      break;
    }
    start = comma + 2;
  }
  if (candidates.empty()) {
    return "unknown";
  }
  return candidates[rng.next_below(candidates.size())];
}

}  // namespace

MockBackend::MockBackend(MockConfig config) : config_(std::move(config)) {}

std::string MockBackend::name() const {
  return "mock:" + config_.model_id + ":seed=" + std::to_string(config_.seed);
}

std::string MockBackend::respond(const ChatRequest& request) const {
  SmallRng rng(rng::mix(config_.seed, rng::fnv1a64(serialize_request(request))));
  const std::string prompt = joined_prompt(request);
  switch (request.tag) {
    case Stage::Synonyms: {
      std::string_view relation = slice_between(prompt, "relation type: ", ",");
      int k = parse_count(slice_between(prompt, "create ", " synonyms"), 10);
      return make_synonyms_reply(rng, relation, k);
    }
    case Stage::Generation: {
      std::string_view relation = slice_between(prompt, "denoted as: ", "\n");
      int batch = parse_count(slice_between(prompt, "create ", " synthetic"), 10);
      return make_generation_reply(rng, relation, batch);
    }
    case Stage::Rephrase: {
      int count = parse_count(slice_between(prompt, "generate ", " new versions"), 3);
      std::string_view tuples = last_line_value(prompt, "Relation: ");
      std::string_view head = slice_between(tuples, "(", ",");
      std::size_t last_comma = tuples.rfind(", ");
      std::string_view tail;
      if (last_comma != std::string_view::npos) {
        tail = tuples.substr(last_comma + 2);
        if (std::size_t close = tail.find(')'); close != std::string_view::npos) {
          tail = tail.substr(0, close);
        }
      }
      return make_rephrase_reply(rng, head, tail, count);
    }
    case Stage::Inference:
      return make_inference_reply(rng, prompt);
    case Stage::Embedding:
      break;
  }
  return "";
}

RawChat MockBackend::chat_once(const ChatRequest& request) {
  RawChat raw;
  raw.text = respond(request);
  long long prompt_tokens = 0;
  for (const auto& msg : request.messages) {
    prompt_tokens += word_count(msg.text);
  }
  raw.usage = {prompt_tokens, word_count(raw.text)};
  return raw;
}

std::vector<float> MockBackend::embed_text(const std::string& text) const {
  SmallRng rng(rng::mix(config_.seed,
                        Gateway::content_hash(config_.embed_model_id, normalize_text(text))));
  std::vector<float> values(static_cast<std::size_t>(config_.embed_dim));
  for (auto& v : values) {
    v = static_cast<float>(rng.next_signed_unit());
  }
  return values;
}

std::vector<std::vector<float>> MockBackend::embed_once(const std::vector<std::string>& texts,
                                                        BackendUsage& usage) {
  std::vector<std::vector<float>> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    out.push_back(embed_text(text));
    usage.prompt_tokens += word_count(text);
  }
  return out;
}

GoldEchoBackend::GoldEchoBackend(const std::vector<RelationDef>& schema,
                                 const std::vector<TestInstance>& instances, MockConfig config)
    : delegate_(std::move(config)) {
  std::unordered_map<std::string, std::string> names;
  for (const auto& rel : schema) {
    names[rel.id] = rel.name;
  }
  for (const auto& inst : instances) {
    auto it = names.find(inst.gold_relation_id);
    if (it == names.end()) {
      continue;
    }
    std::string key = normalize_text(inst.sentence) + '\x1f' + normalize_text(inst.head) + '\x1f' +
                      normalize_text(inst.tail);
    gold_names_[key] = it->second;
  }
}

std::string GoldEchoBackend::name() const { return "gold-echo/" + delegate_.name(); }

RawChat GoldEchoBackend::chat_once(const ChatRequest& request) {
  if (request.tag == Stage::Inference) {
    std::string prompt;
    for (const auto& msg : request.messages) {
      prompt += msg.text;
      prompt += '\n';
    }
    std::string_view sentence = last_line_value(prompt, "Sentence: ");
    std::string_view pair = last_line_value(prompt, "the relation between ");
    std::string_view head = pair.substr(0, pair.find(" and "));
    std::string_view tail = slice_between(pair, " and ", " is:");
    std::string key = normalize_text(sentence) + '\x1f' + normalize_text(head) + '\x1f' +
                      normalize_text(tail);
    auto it = gold_names_.find(key);
    if (it != gold_names_.end()) {
      RawChat raw;
      raw.text = it->second;
      long long prompt_tokens = 0;
      for (const auto& msg : request.messages) {
        prompt_tokens += word_count(msg.text);
      }
      raw.usage = {prompt_tokens, word_count(raw.text)};
      return raw;
    }
  }
  return delegate_.chat_once(request);
}

std::vector<std::vector<float>> GoldEchoBackend::embed_once(const std::vector<std::string>& texts,
                                                            BackendUsage& usage) {
  return delegate_.embed_once(texts, usage);
}

}  // namespace spre
