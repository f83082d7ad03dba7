// Acceptance suite: one line per criterion, nonzero exit if any fail.
// Criteria 1-8 run offline; the live-backend smoke (criterion 9) lives in
// live_smoke.cpp and is excluded from CI.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spre/errors.hpp"
#include "spre/eval.hpp"
#include "spre/gateway.hpp"
#include "spre/index.hpp"
#include "spre/inference.hpp"
#include "spre/jsonl.hpp"
#include "spre/mock_backend.hpp"
#include "spre/prompts.hpp"
#include "spre/rng.hpp"
#include "spre/synth.hpp"
#include "test_helpers.hpp"

namespace fs = std::filesystem;
using namespace spre;
using json = nlohmann::json;

namespace {

int g_failures = 0;

#define ACCEPT(cond, detail)                                                              \
  do {                                                                                    \
    if (!(cond)) {                                                                        \
      throw spre::Error(std::string("line ") + std::to_string(__LINE__) + ": " + detail); \
    }                                                                                     \
  } while (0)

void run_criterion(int number, const std::string& name, const std::function<void()>& body) {
  auto start = std::chrono::steady_clock::now();
  try {
    body();
    double seconds = std::chrono::duration_cast<std::chrono::duration<double>>(
                         std::chrono::steady_clock::now() - start)
                         .count();
    std::printf("[PASS] %d %-24s (%.2fs)\n", number, name.c_str(), seconds);
  } catch (const std::exception& ex) {
    ++g_failures;
    std::printf("[FAIL] %d %-24s %s\n", number, name.c_str(), ex.what());
  }
  std::fflush(stdout);
}

bool close(double a, double b, double tolerance) { return std::abs(a - b) <= tolerance + 1e-9; }

// ---------------------------------------------------------------------------
// 1. Cost arithmetic: the published per-stage token counts reproduce the
//    per-stage costs and the $0.26443 total within $0.00001.
void criterion_cost_arithmetic() {
  Gateway gateway(std::make_shared<MockBackend>(), test::fast_gateway_config());
  const Pricing& pricing = gateway.config().pricing;
  ACCEPT(pricing.prompt_usd_per_1k == 0.001 && pricing.completion_usd_per_1k == 0.002,
         "default pricing must be $0.001 / $0.002 per 1K tokens");

  gateway.meter().record(Stage::Synonyms, 132, 77, pricing);
  gateway.meter().record(Stage::Generation, 38180, 23140, pricing);
  gateway.meter().record(Stage::Rephrase, 112580, 33550, pricing);

  MeterSummary summary = gateway.meter_summary();
  ACCEPT(summary.stages.size() == 3, "expected three stage rows");
  std::map<Stage, double> expected{{Stage::Synonyms, 0.00029},
                                   {Stage::Generation, 0.08447},
                                   {Stage::Rephrase, 0.17967}};
  for (const auto& row : summary.stages) {
    double want = expected.at(row.stage);
    ACCEPT(close(row.cost_usd, want, 1e-5),
           std::string(to_string(row.stage)) + " cost " + std::to_string(row.cost_usd) +
               " not within $0.00001 of " + std::to_string(want));
  }
  ACCEPT(summary.prompt_tokens == 150892 && summary.completion_tokens == 56767,
         "token totals do not sum to 150.892k / 56.767k");
  ACCEPT(close(summary.cost_usd, 0.26443, 1e-5),
         "total cost " + std::to_string(summary.cost_usd) + " not within $0.00001 of 0.26443");
}

// ---------------------------------------------------------------------------
// 2. Micro-F1 consistency: pooled counts yielding P=56.8, R=57.5 give
//    F1 = 57.1 +- 0.05.
void criterion_micro_f1() {
  std::map<std::string, ClassCounts> counts{{"pooled", {1633, 1242, 1207}}};
  MetricsReport report = aggregate_counts(counts, "micro");
  ACCEPT(close(report.micro_p * 100.0, 56.8, 1e-9), "pooled precision is not 56.8");
  ACCEPT(close(report.micro_r * 100.0, 57.5, 1e-9), "pooled recall is not 57.5");
  ACCEPT(std::abs(report.micro_f1 * 100.0 - 57.1) <= 0.05,
         "micro F1 " + std::to_string(report.micro_f1 * 100.0) + " not within 0.05 of 57.1");
}

// ---------------------------------------------------------------------------
// 3. Filter soundness: 1,000 randomized admission streams; an independent
//    recount confirms no entity exceeds n, and a step-through oracle matches
//    every admit decision.
void criterion_filter_soundness() {
  rng::SmallRng gen(20240817);
  std::vector<std::string> pool;
  for (int i = 0; i < 10; ++i) {
    pool.push_back("entity " + std::to_string(i));
  }
  for (int stream = 0; stream < 1000; ++stream) {
    int n = 1 + static_cast<int>(gen.next_below(4));
    int length = 10 + static_cast<int>(gen.next_below(50));
    EntityLedger ledger{"r", {}};
    std::map<std::string, int> oracle;
    std::vector<SyntheticSample> retained;
    for (int step = 0; step < length; ++step) {
      SyntheticSample sample;
      sample.relation_id = "r";
      int triples = 1 + static_cast<int>(gen.next_below(3));
      std::string sentence = "In this record ";
      for (int t = 0; t < triples; ++t) {
        std::string head = pool[gen.next_below(pool.size())];
        std::string tail = pool[gen.next_below(pool.size())];
        if (normalize_text(tail) == normalize_text(head)) {
          tail = head + " twin";
        }
        sentence += "the " + head + " joins the " + tail + "; ";
        sample.triples.push_back({head, "r", tail});
      }
      sample.sentence = sentence;
      sample.provenance = Provenance::fresh();

      // Independent step-through oracle over the distinct entity set.
      std::set<std::string> entities;
      for (const auto& triple : sample.triples) {
        entities.insert(normalize_entity(triple.head));
        entities.insert(normalize_entity(triple.tail));
      }
      bool oracle_accepts = true;
      for (const auto& entity : entities) {
        if (oracle.count(entity) > 0 && oracle.at(entity) >= n) {
          oracle_accepts = false;
        }
      }

      bool accepted = admit(sample, ledger, n) == AdmitResult::Accepted;
      ACCEPT(accepted == oracle_accepts, "admit decision diverged from the step-through oracle");
      if (accepted) {
        for (const auto& entity : entities) {
          oracle[entity] += 1;
        }
        retained.push_back(std::move(sample));
      }
    }

    // Independent recount over retained samples.
    std::map<std::string, int> recount;
    for (const auto& sample : retained) {
      std::set<std::string> entities;
      for (const auto& triple : sample.triples) {
        entities.insert(normalize_entity(triple.head));
        entities.insert(normalize_entity(triple.tail));
      }
      for (const auto& entity : entities) {
        recount[entity] += 1;
      }
    }
    for (const auto& [entity, count] : recount) {
      ACCEPT(count <= n, "entity \"" + entity + "\" retained " + std::to_string(count) +
                             " times with n=" + std::to_string(n));
    }
  }
}

// ---------------------------------------------------------------------------
// 4. Termination: an adversarial backend halts after exactly stall=3 stalled
//    batches; a cooperative backend halts at exactly cap=200 retained samples.
void criterion_termination() {
  const RelationDef rel{"location", "location", "where things are", "accept"};
  const SemanticGroup group{"location", {"location"}};

  auto adversarial = std::make_shared<test::FnBackend>([](const ChatRequest&) {
    std::string out;
    for (int i = 0; i < 10; ++i) {
      if (!out.empty()) out += "\n\n";
      out += "Sentence: The old mill stands beside the river bend.\n";
      out += "Relation: [(old mill, location, river bend)]";
    }
    return test::plain_reply(out);
  });
  PipelineConfig cfg;
  cfg.batch = 10;
  cfg.cap = 200;
  cfg.n = 3;
  cfg.stall = 3;
  {
    Gateway gateway(adversarial, test::fast_gateway_config());
    GenerationOutcome outcome =
        run_generation_loop(gateway, PromptTemplates::builtin(), rel, group, cfg);
    ACCEPT(outcome.consecutive_stalls == 3,
           "adversarial run ended with " + std::to_string(outcome.consecutive_stalls) +
               " stalls, not 3");
    ACCEPT(outcome.batches_issued == 4, "adversarial run issued " +
                                            std::to_string(outcome.batches_issued) +
                                            " batches, expected 1 saturating + 3 stalled");
    ACCEPT(outcome.samples.size() == 3, "adversarial run retained " +
                                            std::to_string(outcome.samples.size()) +
                                            " samples, expected n=3");
  }

  auto counter = std::make_shared<int>(0);
  auto cooperative = std::make_shared<test::FnBackend>([counter](const ChatRequest&) {
    std::string out;
    for (int i = 0; i < 10; ++i) {
      int id = (*counter)++;
      if (!out.empty()) out += "\n\n";
      out += "Sentence: The fresh site " + std::to_string(id) + " borders the fresh town " +
             std::to_string(id) + ".\n";
      out += "Relation: [(fresh site " + std::to_string(id) + ", location, fresh town " +
             std::to_string(id) + ")]";
    }
    return test::plain_reply(out);
  });
  {
    Gateway gateway(cooperative, test::fast_gateway_config());
    GenerationOutcome outcome =
        run_generation_loop(gateway, PromptTemplates::builtin(), rel, group, cfg);
    ACCEPT(outcome.samples.size() == 200, "cooperative run retained " +
                                              std::to_string(outcome.samples.size()) +
                                              " samples, expected exactly cap=200");
    ACCEPT(outcome.consecutive_stalls == 0, "cooperative run should never stall");
    ACCEPT(outcome.batches_issued == 20, "cooperative run should stop after 20 batches");
  }
}

// ---------------------------------------------------------------------------
// 5. Retrieval correctness: 200 random indexes vs. a brute-force full-sort
//    oracle, membership and ascending order, with deterministic tie-breaking
//    under insertion-order permutation.
void criterion_retrieval() {
  rng::SmallRng gen(424242);
  for (int round = 0; round < 200; ++round) {
    std::size_t count = 1 + gen.next_below(995);  // + up to 5 tie clones stays <= 1000
    int dim = 4 + static_cast<int>(gen.next_below(13));
    std::vector<IndexedSample> entries;
    entries.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      EmbeddingVector v;
      v.values.resize(static_cast<std::size_t>(dim));
      for (auto& x : v.values) {
        x = static_cast<float>(gen.next_signed_unit());
      }
      if (std::abs(v.values[0]) < 1e-3) {
        v.values[0] = 0.5f;
      }
      char id[32];
      std::snprintf(id, sizeof(id), "s#%06zu", i);
      entries.push_back({id, "", "r", std::move(v)});
    }
    // Exact ties: clone a handful of vectors under new ids.
    for (int i = 0; i < 5 && static_cast<std::size_t>(i) < count; ++i) {
      IndexedSample copy = entries[static_cast<std::size_t>(i)];
      copy.sample_id = "tie#" + std::to_string(round) + "-" + std::to_string(i);
      entries.push_back(std::move(copy));
    }

    EmbeddingVector query;
    query.values.resize(static_cast<std::size_t>(dim));
    for (auto& x : query.values) {
      x = static_cast<float>(gen.next_signed_unit());
    }
    if (std::abs(query.values[0]) < 1e-3) {
      query.values[0] = 0.5f;
    }
    int d = static_cast<int>(gen.next_below(16));

    // Independent oracle: own cosine, full sort desc by (sim, id asc), take d,
    // present ascending.
    std::vector<std::pair<double, std::string>> scored;
    for (const auto& entry : entries) {
      double dot = 0.0, qq = 0.0, vv = 0.0;
      for (int k = 0; k < dim; ++k) {
        dot += static_cast<double>(query.values[static_cast<std::size_t>(k)]) *
               entry.vector.values[static_cast<std::size_t>(k)];
        qq += static_cast<double>(query.values[static_cast<std::size_t>(k)]) *
              query.values[static_cast<std::size_t>(k)];
        vv += static_cast<double>(entry.vector.values[static_cast<std::size_t>(k)]) *
              entry.vector.values[static_cast<std::size_t>(k)];
      }
      scored.emplace_back(dot / (std::sqrt(qq) * std::sqrt(vv)), entry.sample_id);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    scored.resize(std::min<std::size_t>(scored.size(), static_cast<std::size_t>(d)));
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      return a.second < b.second;
    });

    DemonstrationIndex index = DemonstrationIndex::from_entries(entries);
    RetrievalResult result = index.retrieve_by_vector(query, d);
    ACCEPT(result.hits.size() == scored.size(), "result size differs from the oracle");
    for (std::size_t i = 0; i < scored.size(); ++i) {
      ACCEPT(result.hits[i].sample_id == scored[i].second,
             "round " + std::to_string(round) + ": position " + std::to_string(i) +
                 " id mismatch vs oracle");
      ACCEPT(std::abs(result.hits[i].similarity - scored[i].first) < 1e-9,
             "similarity mismatch vs oracle");
      if (i > 0) {
        ACCEPT(result.hits[i - 1].similarity <= result.hits[i].similarity + 1e-12,
               "similarities not ascending");
      }
    }

    // Insertion-order permutation must not change the output.
    if (round % 10 == 0) {
      auto shuffled = entries;
      rng::shuffle(shuffled, gen);
      RetrievalResult permuted =
          DemonstrationIndex::from_entries(shuffled).retrieve_by_vector(query, d);
      ACCEPT(permuted.hits.size() == result.hits.size(), "permuted size differs");
      for (std::size_t i = 0; i < result.hits.size(); ++i) {
        ACCEPT(permuted.hits[i].sample_id == result.hits[i].sample_id,
               "insertion order changed retrieval output");
      }
    }
  }
}

// ---------------------------------------------------------------------------
// 6. Prompt fidelity: rendered prompts match the published wording byte for
//    byte, and the successful-case inference prompt reconstructs block for
//    block from its components.
void criterion_prompt_fidelity() {
  PromptTemplates tpls = PromptTemplates::builtin();
  const RelationDef location{"location", "location",
                             "location of the item, physical object, or event is within", "case"};

  const std::string golden_synonyms =
      "For a giving relation type: location, your objective is to create 10 synonyms about this relation.\n"
      "The description of this relation is: location of the item, physical object, or event is within\n"
      "Ensure that your generated examples adhere to the following guidelines:\n"
      "1. The synonyms should explicitly or implicitly align with the relation location.\n"
      "2. Ensure the diversity among different synonyms.\n"
      "3. The synonyms could be a single word or phrase.\n"
      "Please format your output in Python list-style:\n"
      "[synonyms1, synonyms2, ..., synonyms10]";
  ACCEPT(render_synonym_prompt(tpls, location, 10) == golden_synonyms,
         "synonym prompt bytes diverge");

  const std::string golden_generation =
      "Imagine you are a sophisticated language model functioning as a textual data generator for "
      "a relation extraction task. Your objective is to create 10 synthetic sentences, each "
      "containing a specific type of relationship denoted as: location\n"
      "The description of this relation is: location of the item, physical object, or event is "
      "within.\n"
      "These sentences must be informative and clearly demonstrate the intended relation, either "
      "explicitly or implicitly. Please format your output as follows:\n"
      "Sentence: [Your generated sentence here].\n"
      "Relation: [(entity1, location, entity2), (entity3, location, entity4), ...].\n"
      "Where the relation list could contain one to three relation tuples.\n"
      "Ensure that your generated examples adhere to the following guidelines:\n"
      "1. The relation should be the same as the previously defined relation.\n"
      "2. Head and tail entities must appear in the original sentence.\n"
      "3. Separate the head and tail into several triples that have the same relation.\n"
      "4. Generate sentences with varying lengths and complexities, including simple, compound, "
      "and complex sentences.\n"
      "5. Ensure a broad and realistic variety in the types of head and tail entities to reflect "
      "real-world contexts.";
  ACCEPT(render_generation_prompt(tpls, location, 10) == golden_generation,
         "generation prompt bytes diverge");

  const std::string golden_rephrase =
      "As a text paraphrasing agent, your task is to paraphrase a given sentence to generate 3 "
      "new versions. The original sentence includes one or more relationships. Rewrite the "
      "sentence to subtly imply the relationships that were originally stated explicitly, while "
      "also enhancing the semantic depth and diversifying the grammatical structure.\n"
      "Input format:\n"
      "Sentence: The sentence to be paraphrased.\n"
      "Relation: A list of relation tuples in the format (head, relation, tail).\n"
      "Output Format:\n"
      "Provide 3 paraphrased sentences, where the relation list could contain one to three "
      "relation tuples.\n"
      "Ensure that your generated examples adhere to the following guidelines:\n"
      "1. Preservation of Entities: Ensure that the head and tail entities from the original "
      "sentence are present in each paraphrased version.\n"
      "2. Variety and Realism: Aim for a wide range of sentence structures and contexts in your "
      "paraphrases, reflecting realistic and diverse scenarios.\n"
      "3. In the generated relation list for each paraphrased sentence, the relation MUST remain "
      "consistent with the relation: location, while minor modifications to the entities are "
      "permissible.";
  ACCEPT(render_rephrase_instruction(tpls, location, 3) == golden_rephrase,
         "rephrase prompt bytes diverge");

  const std::string golden_inference_template =
      "Your goal is to extract the relation between two entities in a sentence. The relation "
      "candidate is a list of relations that you can choose from: {relation list}\n"
      "{demonstrations}\n"
      "Sentence: {extract sentence}\n"
      "Given the Sentence, the relation between {head} and {tail} is:";
  ACCEPT(tpls.inference == golden_inference_template, "inference template bytes diverge");

  // Successful-case reconstruction (Bridalveil Fall).
  std::vector<RelationDef> candidates;
  for (const char* name :
       {"religion", "location", "competition class", "operating system", "owned by",
        "contains administrative territorial entity", "field of work", "spouse",
        "located on terrain feature", "distributed by"}) {
    candidates.push_back({name, name, "", "case"});
  }
  struct DemoSpec {
    const char* sentence;
    const char* head;
    const char* tail;
    const char* relation;
  };
  const std::vector<DemoSpec> specs{
      {"The ski resort town, nestled against the natural feature of snow-capped mountains, is a "
       "popular destination for winter sports enthusiasts.",
       "town", "snow-capped mountains", "located on terrain feature"},
      {"The village, with its enchanting vineyards and stunning vistas, finds itself nestled in "
       "the picturesque valley.",
       "village", "valley", "location"},
      {"The beautiful vineyard, with rolling hills as its backdrop, is situated near the quaint "
       "village and nearby tourist destinations.",
       "vineyard", "village", "location"},
      {"Perched on the hill, the building provides a stunning vista of the valley beneath.",
       "building", "hill", "located on terrain feature"},
      {"Renowned for its geysers and hot springs, Yellowstone National Park is situated in the "
       "western United States.",
       "Yellowstone National Park", "western United States", "located on terrain feature"},
  };
  std::vector<SyntheticSample> demos;
  int i = 0;
  for (const auto& spec : specs) {
    demos.push_back(test::make_sample("case#" + std::to_string(++i), spec.relation, spec.sentence,
                                      {{spec.head, spec.relation, spec.tail}}));
  }
  TestInstance bridalveil{"bridalveil",
                          "It is located west of, and adjacent to Bridalveil Fall, on the south "
                          "side of the Merced River in Yosemite Valley.",
                          "Bridalveil Fall", "Yosemite Valley", "located on terrain feature",
                          "case"};
  PromptBundle bundle = assemble_prompt(tpls, candidates, demos, bridalveil);

  std::vector<std::string> blocks;
  blocks.push_back(
      "Your goal is to extract the relation between two entities in a sentence. The relation "
      "candidate is a list of relations that you can choose from: ['religion', 'location', "
      "'competition class', 'operating system', 'owned by', 'contains administrative territorial "
      "entity', 'field of work', 'spouse', 'located on terrain feature', 'distributed by']");
  for (const auto& spec : specs) {
    blocks.push_back(std::string("Sentence: ") + spec.sentence +
                     "\nGiven the Sentence, the relation between " + spec.head + " and " +
                     spec.tail + " is: " + spec.relation);
  }
  blocks.push_back(
      "Sentence: It is located west of, and adjacent to Bridalveil Fall, on the south side of the "
      "Merced River in Yosemite Valley.\n"
      "Given the Sentence, the relation between Bridalveil Fall and Yosemite Valley is:");

  ACCEPT(bundle.background == blocks.front(), "background block diverges");
  ACCEPT(bundle.demos.size() == 5, "expected five demonstration blocks");
  for (std::size_t b = 0; b < 5; ++b) {
    ACCEPT(bundle.demos[b] == blocks[b + 1],
           "demonstration block " + std::to_string(b + 1) + " diverges");
  }
  ACCEPT(bundle.query == blocks.back(), "query block diverges");

  std::string joined;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (b > 0) joined += '\n';
    joined += blocks[b];
  }
  ACCEPT(bundle.rendered == joined, "rendered prompt is not the block concatenation");
}

// ---------------------------------------------------------------------------
// 7. End-to-end determinism: the toy pipeline through the CLI is byte-stable
//    across runs, and the gold-echo oracle reaches macro-F1 = 1.
void criterion_end_to_end() {
  const std::string cli = SPRE_CLI_PATH;
  const std::string toy = std::string(SPRE_TEST_DATA_DIR) + "/toy.jsonl";
  test::TempDir run_a("accept_e2e_a");
  test::TempDir run_b("accept_e2e_b");

  auto shell = [&cli](const std::string& args) {
    std::string command = cli + " " + args + " >/dev/null 2>&1";
    int status = std::system(command.c_str());
    ACCEPT(status != -1 && WEXITSTATUS(status) == 0, "command failed: spre " + args);
  };

  for (const auto& dir : {run_a.path(), run_b.path()}) {
    const std::string out = dir.string();
    const std::string common = " --dataset " + toy + " --seed 6 --backend gold-echo";
    shell("synonyms" + common + " --out " + out);
    shell("generate" + common + " --out " + out + " --groups " + out + "/groups.jsonl");
    shell("index --samples " + out + "/samples.jsonl --seed 6 --out " + out);
    shell("infer" + common + " --out " + out + " --samples " + out + "/samples.jsonl --index " +
          out + "/index --groups " + out + "/groups.jsonl");
    shell("eval" + common + " --out " + out + " --all-relations");
  }

  for (const char* name :
       {"groups.jsonl", "samples.jsonl", "index/entries.jsonl", "index/cache.manifest.jsonl",
        "index/cache.vectors.f32", "index/meta.json", "predictions.jsonl", "report.json",
        "report.txt"}) {
    ACCEPT(read_file(run_a.path() / name) == read_file(run_b.path() / name),
           std::string(name) + " differs between identical runs");
  }

  json report = json::parse(read_file(run_a.path() / "report.json"));
  double macro_f1 = report.at("mean").at("macro").at("f1").get<double>();
  ACCEPT(std::abs(macro_f1 - 1.0) < 1e-12,
         "gold-echo macro-F1 is " + std::to_string(macro_f1) + ", expected 1.0");

  auto predictions = read_jsonl_lines(run_a.path() / "predictions.jsonl");
  ACCEPT(predictions.size() == 30, "expected 30 predictions over the toy dataset");
}

// ---------------------------------------------------------------------------
// 8. Ablation machinery: the toggle conditions produce structurally distinct
//    datasets on identical mock transcripts, and Complete scores at least
//    w/o All on a testbed where demonstrations determine answers.
struct ConditionSignature {
  std::size_t fresh = 0;
  std::size_t variants = 0;
  std::size_t group_members = 0;
  bool tag_synonyms = false;
  bool tag_filter = false;
  bool tag_rephrase = false;

  bool operator==(const ConditionSignature&) const = default;
  std::string str() const {
    std::ostringstream out;
    out << "fresh=" << fresh << " variants=" << variants << " group=" << group_members
        << " tags=" << tag_synonyms << tag_filter << tag_rephrase;
    return out.str();
  }
};

void criterion_ablation() {
  const RelationDef rel{"location", "location",
                        "location of the item, physical object, or event is within", "accept"};

  auto build_condition = [&rel](bool use_synonyms, bool use_filter, bool use_rephrase) {
    Gateway gateway(std::make_shared<MockBackend>(MockConfig{.seed = 77}),
                    test::fast_gateway_config());
    PipelineConfig cfg;
    cfg.k = 4;
    cfg.batch = 8;
    cfg.cap = 40;
    cfg.n = 2;
    cfg.r = 2;
    cfg.seed = 77;
    cfg.use_synonyms = use_synonyms;
    cfg.use_filter = use_filter;
    cfg.use_rephrase = use_rephrase;
    return build_relation_dataset(gateway, PromptTemplates::builtin(),
                                  std::vector<RelationDef>{rel}, cfg);
  };
  auto signature = [](const SynthDataset& dataset) {
    ConditionSignature sig;
    sig.group_members = dataset.groups.front().members.size();
    for (const auto& sample : dataset.samples) {
      if (sample.provenance.is_fresh()) {
        ++sig.fresh;
      } else {
        ++sig.variants;
      }
      sig.tag_synonyms = sample.strategy_tags.synonyms;
      sig.tag_filter = sample.strategy_tags.filter;
      sig.tag_rephrase = sample.strategy_tags.rephrase;
    }
    return sig;
  };

  SynthDataset complete = build_condition(true, true, true);
  SynthDataset no_synonyms = build_condition(false, true, true);
  SynthDataset no_filter = build_condition(true, false, true);
  SynthDataset no_rephrase = build_condition(true, true, false);
  SynthDataset no_all = build_condition(false, false, false);

  std::vector<std::pair<std::string, ConditionSignature>> signatures{
      {"complete", signature(complete)},
      {"w/o synonyms", signature(no_synonyms)},
      {"w/o filter", signature(no_filter)},
      {"w/o rephrase", signature(no_rephrase)},
      {"w/o all", signature(no_all)}};
  for (std::size_t a = 0; a < signatures.size(); ++a) {
    for (std::size_t b = a + 1; b < signatures.size(); ++b) {
      ACCEPT(!(signatures[a].second == signatures[b].second),
             signatures[a].first + " and " + signatures[b].first +
                 " are structurally identical: " + signatures[a].second.str());
    }
  }

  // Provenance/tag audits per condition.
  ACCEPT(signature(complete).variants > 0, "complete condition lost its rephrase variants");
  ACCEPT(signature(no_rephrase).variants == 0, "w/o rephrase still contains variants");
  ACCEPT(signature(no_all).variants == 0, "w/o all still contains variants");
  ACCEPT(signature(no_synonyms).group_members == 1, "w/o synonyms kept a synonym group");
  ACCEPT(signature(no_filter).fresh > signature(complete).fresh,
         "disabling the entity filter did not admit more samples");
  ACCEPT(audit_provenance(complete.samples, 2).ok(), "complete provenance audit failed");
  for (const auto& sample : no_all.samples) {
    ACCEPT(sample.strategy_tags == StrategyTags{},
           "w/o all samples must carry no strategy tags");
  }
  // Identical transcripts: the fresh samples of complete and w/o rephrase match.
  {
    std::vector<std::string> complete_fresh, no_rephrase_fresh;
    for (const auto& sample : complete.samples) {
      if (sample.provenance.is_fresh()) complete_fresh.push_back(sample.sentence);
    }
    for (const auto& sample : no_rephrase.samples) {
      no_rephrase_fresh.push_back(sample.sentence);
    }
    ACCEPT(complete_fresh == no_rephrase_fresh,
           "w/o rephrase changed the fresh samples, not only the variants");
  }

  // Demonstration-determines-answer testbed: generation-stage sentences carry
  // a misleading marker (the next relation's), rephrase variants carry the
  // true marker, embeddings are word-overlap counts, and inference echoes the
  // nearest demonstration. Complete retrieves true-marker variants; w/o All
  // can only retrieve misleading fresh sentences.
  const int relation_count = 6;
  std::vector<RelationDef> schema;
  for (int i = 0; i < relation_count; ++i) {
    std::string id = "rel" + std::to_string(i);
    schema.push_back({id, id, "testbed relation " + std::to_string(i), "accept"});
  }

  // Embedding axes: one per marker token, one for the rephrase cue word, one
  // constant. A query and its relation's variants align exactly (cosine 1);
  // fillers carrying the same marker score lower; everything else lower still.
  auto embed_words = [relation_count](const std::vector<std::string>& texts) {
    std::vector<std::vector<float>> out;
    for (const auto& text : texts) {
      std::vector<float> v(static_cast<std::size_t>(relation_count) + 2, 0.0f);
      std::istringstream words(normalize_text(text));
      std::string word;
      while (words >> word) {
        if (word.rfind("marker", 0) == 0 && word.size() > 6) {
          int index = word[6] - '0';
          if (index >= 0 && index < relation_count) {
            v[static_cast<std::size_t>(index)] += 1.0f;
          }
        } else if (word == "signal") {
          v[static_cast<std::size_t>(relation_count)] += 1.0f;
        }
      }
      v[static_cast<std::size_t>(relation_count) + 1] = 1.0f;
      out.push_back(std::move(v));
    }
    return out;
  };
  auto counter = std::make_shared<int>(0);
  auto testbed_chat = [counter, relation_count](const ChatRequest& request) -> RawChat {
    const std::string& prompt = request.messages.back().text;
    auto relation_of = [&prompt](const std::string& marker) {
      std::size_t pos = prompt.find(marker);
      std::size_t end = prompt.find('\n', pos + marker.size());
      return prompt.substr(pos + marker.size(), end - pos - marker.size());
    };
    switch (request.tag) {
      case Stage::Synonyms:
        return test::plain_reply("[close match one, close match two]");
      case Stage::Generation: {
        std::string relation = relation_of("denoted as: ");
        int index = relation.back() - '0';
        std::string misleading = "marker" + std::to_string((index + 1) % relation_count);
        std::string out;
        for (int b = 0; b < 5; ++b) {
          int id = (*counter)++;
          std::string head = "thing " + std::to_string(id);
          std::string tail = "place " + std::to_string(id);
          if (!out.empty()) out += "\n\n";
          out += "Sentence: Common filler prose " + misleading + " ties the " + head +
                 " to the " + tail + ".\n";
          out += "Relation: [(" + head + ", " + relation + ", " + tail + ")]";
        }
        return test::plain_reply(out);
      }
      case Stage::Rephrase: {
        // True marker comes from the tuple's relation in the input block.
        std::size_t pos = prompt.rfind("Relation: [(");
        std::string tail_text = prompt.substr(pos + 12);
        std::size_t comma1 = tail_text.find(", ");
        std::size_t comma2 = tail_text.find(", ", comma1 + 2);
        std::string head = tail_text.substr(0, comma1);
        std::string relation = tail_text.substr(comma1 + 2, comma2 - comma1 - 2);
        std::string entity_tail = tail_text.substr(comma2 + 2, tail_text.find(')') - comma2 - 2);
        std::string marker = "marker" + std::string(1, relation.back());
        std::string out = "1. Signal phrase " + marker + " keeps the " + head + " with the " +
                          entity_tail + ".";
        return test::plain_reply(out);
      }
      case Stage::Inference: {
        std::string_view text = prompt;
        std::string answer;
        std::size_t pos = 0;
        while ((pos = text.find("is: ", pos)) != std::string_view::npos) {
          std::size_t end = text.find('\n', pos);
          if (end != std::string_view::npos && end > pos + 4) {
            answer = std::string(text.substr(pos + 4, end - pos - 4));
          }
          pos += 4;
        }
        return test::plain_reply(answer.empty() ? "rel0" : answer);
      }
      case Stage::Embedding:
        break;
    }
    return test::plain_reply("");
  };

  std::vector<TestInstance> probes;
  for (int i = 0; i < relation_count; ++i) {
    for (int j = 0; j < 2; ++j) {
      std::string head = "probe head " + std::to_string(i) + std::to_string(j);
      std::string tail = "probe tail " + std::to_string(i) + std::to_string(j);
      probes.push_back({"probe-" + std::to_string(i) + "-" + std::to_string(j),
                        "Signal phrase marker" + std::to_string(i) + " keeps the " + head +
                            " with the " + tail + ".",
                        head, tail, "rel" + std::to_string(i), "accept"});
    }
  }

  auto run_condition = [&](bool all_strategies) {
    *counter = 0;
    auto backend = std::make_shared<test::FnBackend>(testbed_chat, embed_words);
    Gateway gateway(backend, test::fast_gateway_config());
    PipelineConfig cfg;
    cfg.k = 2;
    cfg.batch = 5;
    cfg.cap = 10;
    cfg.n = 3;
    cfg.r = 1;
    cfg.d = 4;
    cfg.seed = 9;
    cfg.use_synonyms = all_strategies;
    cfg.use_filter = all_strategies;
    cfg.use_rephrase = all_strategies;
    SynthDataset synth =
        build_relation_dataset(gateway, PromptTemplates::builtin(), schema, cfg);
    DemonstrationIndex index = DemonstrationIndex::build(gateway, synth.samples);
    auto by_id = index_samples_by_id(synth.samples);
    std::vector<Prediction> predictions;
    for (const auto& probe : probes) {
      predictions.push_back(predict(gateway, PromptTemplates::builtin(), probe, schema,
                                    synth.groups, by_id, index, cfg));
      if (std::getenv("SPRE_ACCEPT_DEBUG") != nullptr) {
        std::fprintf(stderr, "probe %s gold=%s predicted=%s raw=%s\n", probe.id.c_str(),
                     probe.gold_relation_id.c_str(), predictions.back().relation_id.c_str(),
                     predictions.back().raw.c_str());
      }
    }
    return score(predictions, probes).macro_f1;
  };

  double complete_score = run_condition(true);
  double without_all_score = run_condition(false);
  ACCEPT(complete_score >= without_all_score,
         "complete scored " + std::to_string(complete_score) + " below w/o all " +
             std::to_string(without_all_score));
  ACCEPT(complete_score > 0.99, "the testbed should be fully solvable with all strategies on");
}

}  // namespace

int main() {
  run_criterion(1, "cost-arithmetic", criterion_cost_arithmetic);
  run_criterion(2, "micro-f1-consistency", criterion_micro_f1);
  run_criterion(3, "filter-soundness", criterion_filter_soundness);
  run_criterion(4, "termination", criterion_termination);
  run_criterion(5, "retrieval-correctness", criterion_retrieval);
  run_criterion(6, "prompt-fidelity", criterion_prompt_fidelity);
  run_criterion(7, "end-to-end-determinism", criterion_end_to_end);
  run_criterion(8, "ablation-machinery", criterion_ablation);
  if (g_failures > 0) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all acceptance criteria passed\n");
  return 0;
}
