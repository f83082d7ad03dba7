// spre: zero-shot relation extraction via self-generated in-context samples.
//
// Subcommands: synonyms, generate, index, infer, eval, cost.
// Exit codes: 0 success, 1 runtime failure, 2 usage error.
// Logs go to stderr; data goes to files under --out (cost prints to stdout).

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spre/errors.hpp"
#include "spre/eval.hpp"
#include "spre/gateway.hpp"
#include "spre/http_backend.hpp"
#include "spre/index.hpp"
#include "spre/inference.hpp"
#include "spre/jsonl.hpp"
#include "spre/manifest.hpp"
#include "spre/mock_backend.hpp"
#include "spre/prompts.hpp"
#include "spre/synth.hpp"
#include "spre/types.hpp"

namespace fs = std::filesystem;

namespace {

struct Options {
  // Pipeline knobs (defaults mirror spre::PipelineConfig).
  spre::PipelineConfig pipeline;

  std::string backend = "mock";
  int embed_dim = 32;
  std::string dataset;
  std::string format = "fewrel-like";
  std::string out = "out";
  std::string groups_path;
  std::string samples_path;
  std::string index_dir;
  std::string prompts_dir;
  std::string transcripts_dir;
  std::string from_manifest;

  // eval
  int m = 5;
  int trials = 5;
  std::size_t limit = 1000;
  bool all_relations = false;
  bool widen_retrieval = false;
  std::string mode = "auto";

  int jobs = 1;
  bool no_all = false;

  // gateway / http
  double price_prompt = 0.001;
  double price_completion = 0.002;
  int max_in_flight = 4;
  int retries = 3;
  int backoff_ms = 200;
  std::string base_url = "https://api.openai.com";
  std::string chat_model = "gpt-3.5-turbo";
  std::string embed_model = "text-embedding-ada-002";
  std::string api_key_env = "OPENAI_API_KEY";
};

class StageTimer {
 public:
  explicit StageTimer(spre::RunManifest& manifest, std::string stage)
      : manifest_(manifest), stage_(std::move(stage)), start_(std::chrono::steady_clock::now()) {}
  ~StageTimer() {
    auto elapsed = std::chrono::steady_clock::now() - start_;
    manifest_.timings.emplace_back(
        stage_, std::chrono::duration_cast<std::chrono::duration<double>>(elapsed).count());
  }

 private:
  spre::RunManifest& manifest_;
  std::string stage_;
  std::chrono::steady_clock::time_point start_;
};

std::string bool_str(bool value) { return value ? "true" : "false"; }

std::map<std::string, std::string> config_snapshot(const Options& opt) {
  const auto& p = opt.pipeline;
  return {{"k", std::to_string(p.k)},
          {"n", std::to_string(p.n)},
          {"r", std::to_string(p.r)},
          {"d", std::to_string(p.d)},
          {"batch", std::to_string(p.batch)},
          {"cap", std::to_string(p.cap)},
          {"stall", std::to_string(p.stall)},
          {"temp_gen", std::to_string(p.temp_gen)},
          {"temp_infer", std::to_string(p.temp_infer)},
          {"use_synonyms", bool_str(p.use_synonyms)},
          {"use_filter", bool_str(p.use_filter)},
          {"use_rephrase", bool_str(p.use_rephrase)},
          {"keep_parents", bool_str(p.keep_parents)},
          {"seed", std::to_string(p.seed)},
          {"backend", opt.backend},
          {"embed_dim", std::to_string(opt.embed_dim)},
          {"dataset", opt.dataset},
          {"format", opt.format},
          {"out", opt.out},
          {"groups", opt.groups_path},
          {"samples", opt.samples_path},
          {"index", opt.index_dir},
          {"prompts", opt.prompts_dir},
          {"m", std::to_string(opt.m)},
          {"trials", std::to_string(opt.trials)},
          {"limit", std::to_string(opt.limit)},
          {"all_relations", bool_str(opt.all_relations)},
          {"widen_retrieval", bool_str(opt.widen_retrieval)},
          {"mode", opt.mode},
          {"jobs", std::to_string(opt.jobs)}};
}

void apply_manifest_defaults(Options& opt, const fs::path& path) {
  spre::RunManifest manifest = spre::load_manifest(path);
  auto get = [&manifest](const char* key) -> std::optional<std::string> {
    auto it = manifest.config.find(key);
    if (it == manifest.config.end() || it->second.empty()) {
      return std::nullopt;
    }
    return it->second;
  };
  auto set_int = [&get](const char* key, int& target) {
    if (auto v = get(key)) target = std::stoi(*v);
  };
  auto set_u64 = [&get](const char* key, std::uint64_t& target) {
    if (auto v = get(key)) target = std::stoull(*v);
  };
  auto set_size = [&get](const char* key, std::size_t& target) {
    if (auto v = get(key)) target = static_cast<std::size_t>(std::stoull(*v));
  };
  auto set_double = [&get](const char* key, double& target) {
    if (auto v = get(key)) target = std::stod(*v);
  };
  auto set_bool = [&get](const char* key, bool& target) {
    if (auto v = get(key)) target = (*v == "true" || *v == "1");
  };
  auto set_string = [&get](const char* key, std::string& target) {
    if (auto v = get(key)) target = *v;
  };

  auto& p = opt.pipeline;
  set_int("k", p.k);
  set_int("n", p.n);
  set_int("r", p.r);
  set_int("d", p.d);
  set_int("batch", p.batch);
  set_int("cap", p.cap);
  set_int("stall", p.stall);
  set_double("temp_gen", p.temp_gen);
  set_double("temp_infer", p.temp_infer);
  set_bool("use_synonyms", p.use_synonyms);
  set_bool("use_filter", p.use_filter);
  set_bool("use_rephrase", p.use_rephrase);
  set_bool("keep_parents", p.keep_parents);
  set_u64("seed", p.seed);
  set_string("backend", opt.backend);
  set_int("embed_dim", opt.embed_dim);
  set_string("dataset", opt.dataset);
  set_string("format", opt.format);
  set_string("out", opt.out);
  set_string("groups", opt.groups_path);
  set_string("samples", opt.samples_path);
  set_string("index", opt.index_dir);
  set_string("prompts", opt.prompts_dir);
  set_int("m", opt.m);
  set_int("trials", opt.trials);
  set_size("limit", opt.limit);
  set_bool("all_relations", opt.all_relations);
  set_bool("widen_retrieval", opt.widen_retrieval);
  set_string("mode", opt.mode);
  set_int("jobs", opt.jobs);
}

spre::Dataset load_dataset_checked(const Options& opt) {
  if (opt.dataset.empty()) {
    throw CLI::ValidationError("--dataset", "a dataset file is required");
  }
  return spre::load_dataset(opt.dataset, spre::dataset_format_from_string(opt.format));
}

std::shared_ptr<spre::Backend> make_backend(const Options& opt, const spre::Dataset* dataset) {
  spre::MockConfig mock_config;
  mock_config.seed = opt.pipeline.seed;
  mock_config.embed_dim = opt.embed_dim;
  if (opt.backend == "mock") {
    return std::make_shared<spre::MockBackend>(mock_config);
  }
  if (opt.backend == "gold-echo") {
    if (dataset == nullptr) {
      throw spre::Error("the gold-echo backend needs --dataset");
    }
    return std::make_shared<spre::GoldEchoBackend>(dataset->schema, dataset->instances,
                                                   mock_config);
  }
  if (opt.backend == "http") {
    spre::HttpBackendConfig http;
    http.base_url = opt.base_url;
    http.chat_model = opt.chat_model;
    http.embed_model = opt.embed_model;
    http.api_key_env = opt.api_key_env;
    return std::make_shared<spre::HttpBackend>(http);
  }
  throw spre::Error("unknown backend: " + opt.backend);
}

std::unique_ptr<spre::Gateway> make_gateway(const Options& opt, const spre::Dataset* dataset) {
  spre::GatewayConfig config;
  config.pricing = {opt.price_prompt, opt.price_completion};
  config.max_in_flight = opt.max_in_flight;
  config.default_max_retries = opt.retries;
  config.backoff_base_ms = opt.backoff_ms;
  config.embed_model = (opt.backend == "http") ? opt.embed_model : "mock-embedding";
  return std::make_unique<spre::Gateway>(make_backend(opt, dataset), config);
}

spre::PromptTemplates load_templates(const Options& opt) {
  if (!opt.prompts_dir.empty()) {
    return spre::PromptTemplates::load_dir(opt.prompts_dir);
  }
  return spre::PromptTemplates::builtin();
}

spre::RunManifest new_manifest(const Options& opt, std::string command,
                               const spre::Gateway& gateway) {
  spre::RunManifest manifest;
  manifest.command = std::move(command);
  manifest.config = config_snapshot(opt);
  manifest.seed = opt.pipeline.seed;
  manifest.backend = gateway.backend_name();
  manifest.pricing = gateway.config().pricing;
  return manifest;
}

void finish_manifest(spre::RunManifest& manifest, const Options& opt, spre::Gateway& gateway) {
  manifest.usage = gateway.meter_summary();
  fs::path path = fs::path(opt.out) / (manifest.command + ".manifest.json");
  spre::save_manifest(path, manifest);
  std::cerr << "[spre] wrote " << path.string() << "\n";
}

int cmd_synonyms(Options& opt) {
  spre::Dataset dataset = load_dataset_checked(opt);
  auto gateway = make_gateway(opt, &dataset);
  auto tpls = load_templates(opt);
  spre::RunManifest manifest = new_manifest(opt, "synonyms", *gateway);

  std::vector<spre::SemanticGroup> groups;
  {
    StageTimer timer(manifest, "synonyms");
    for (const auto& rel : dataset.schema) {
      try {
        groups.push_back(spre::generate_synonyms(*gateway, tpls, rel, opt.pipeline));
      } catch (const spre::ParseFailure& ex) {
        std::cerr << "[spre] warning: " << rel.name << ": " << ex.what()
                  << "; keeping the singleton group\n";
        groups.push_back(spre::SemanticGroup::singleton(rel));
      }
    }
  }
  fs::path out_path = fs::path(opt.out) / "groups.jsonl";
  spre::save_groups(out_path, groups);
  manifest.outputs.push_back(out_path.string());
  std::cerr << "[spre] wrote " << groups.size() << " groups to " << out_path.string() << "\n";
  finish_manifest(manifest, opt, *gateway);
  return 0;
}

int cmd_generate(Options& opt) {
  spre::Dataset dataset = load_dataset_checked(opt);
  auto gateway = make_gateway(opt, &dataset);
  auto tpls = load_templates(opt);
  spre::RunManifest manifest = new_manifest(opt, "generate", *gateway);

  std::vector<spre::SemanticGroup> groups;
  if (!opt.groups_path.empty()) {
    groups = spre::load_groups(opt.groups_path);
  } else if (opt.pipeline.use_synonyms) {
    throw CLI::ValidationError("--groups", "required (run `spre synonyms` first) unless "
                               "--no-synonyms is given");
  }

  spre::SynthDataset synth;
  {
    StageTimer timer(manifest, "generation");
    synth = spre::build_relation_dataset_with_groups(*gateway, tpls, dataset.schema, groups,
                                                     opt.pipeline, opt.jobs);
  }
  for (const auto& failure : synth.failures) {
    std::cerr << "[spre] warning: relation " << failure.relation_id << " failed: "
              << failure.message << "\n";
  }
  fs::path out_path = fs::path(opt.out) / "samples.jsonl";
  spre::save_samples(out_path, synth.samples);
  manifest.outputs.push_back(out_path.string());
  std::cerr << "[spre] wrote " << synth.samples.size() << " samples to " << out_path.string()
            << "\n";
  finish_manifest(manifest, opt, *gateway);
  return 0;
}

int cmd_index(Options& opt) {
  if (opt.samples_path.empty()) {
    throw CLI::ValidationError("--samples", "a samples file is required");
  }
  auto samples = spre::load_samples(opt.samples_path);
  auto gateway = make_gateway(opt, nullptr);
  spre::RunManifest manifest = new_manifest(opt, "index", *gateway);

  spre::DemonstrationIndex index;
  {
    StageTimer timer(manifest, "embedding");
    index = spre::DemonstrationIndex::build(*gateway, samples);
  }
  fs::path dir = fs::path(opt.out) / "index";
  index.save(dir);
  manifest.outputs.push_back(dir.string());
  std::cerr << "[spre] indexed " << index.size() << " samples into " << dir.string() << "\n";
  finish_manifest(manifest, opt, *gateway);
  return 0;
}

int cmd_infer(Options& opt) {
  spre::Dataset dataset = load_dataset_checked(opt);
  if (opt.samples_path.empty()) {
    throw CLI::ValidationError("--samples", "a samples file is required");
  }
  if (opt.index_dir.empty()) {
    throw CLI::ValidationError("--index", "an index directory is required");
  }
  auto samples = spre::load_samples(opt.samples_path);
  auto index = spre::DemonstrationIndex::load(opt.index_dir);
  std::vector<spre::SemanticGroup> groups;
  if (!opt.groups_path.empty()) {
    groups = spre::load_groups(opt.groups_path);
  }
  auto gateway = make_gateway(opt, &dataset);
  auto tpls = load_templates(opt);
  spre::RunManifest manifest = new_manifest(opt, "infer", *gateway);

  auto samples_by_id = spre::index_samples_by_id(samples);
  fs::path out_path = fs::path(opt.out) / "predictions.jsonl";
  std::string predictions_out;
  {
    StageTimer timer(manifest, "inference");
    try {
      for (const auto& instance : dataset.instances) {
        spre::PromptBundle bundle;
        spre::Prediction prediction =
            spre::predict(*gateway, tpls, instance, dataset.schema, groups, samples_by_id, index,
                          opt.pipeline, opt.transcripts_dir.empty() ? nullptr : &bundle);
        if (!opt.transcripts_dir.empty()) {
          spre::write_file_atomic(fs::path(opt.transcripts_dir) / (instance.id + ".txt"),
                                  bundle.rendered + "\n");
        }
        predictions_out += spre::to_jsonl(prediction);
        predictions_out += '\n';
      }
    } catch (...) {
      // Flush whatever was predicted so far before propagating the failure.
      if (!predictions_out.empty()) {
        fs::create_directories(out_path.parent_path());
        std::ofstream partial(out_path.string() + ".partial", std::ios::trunc);
        partial << predictions_out;
      }
      throw;
    }
  }
  spre::write_file_atomic(out_path, predictions_out);
  manifest.outputs.push_back(out_path.string());
  std::cerr << "[spre] wrote " << dataset.instances.size() << " predictions to "
            << out_path.string() << "\n";
  finish_manifest(manifest, opt, *gateway);
  return 0;
}

std::string resolve_mode(const Options& opt) {
  if (opt.mode != "auto") {
    return opt.mode;
  }
  return opt.format == "tacred-like" ? "micro" : "macro";
}

int cmd_eval(Options& opt) {
  spre::Dataset dataset = load_dataset_checked(opt);
  auto gateway = make_gateway(opt, &dataset);
  auto tpls = load_templates(opt);
  spre::RunManifest manifest = new_manifest(opt, "eval", *gateway);

  spre::ExperimentReport report;
  const std::string mode = resolve_mode(opt);
  {
    StageTimer timer(manifest, "experiment");
    if (opt.all_relations) {
      // Single trial over the whole schema; no validation holdout. Used for
      // small schemas that cannot satisfy the m + 5 split requirement.
      spre::SynthDataset synth =
          spre::build_relation_dataset(*gateway, tpls, dataset.schema, opt.pipeline, opt.jobs);
      spre::DemonstrationIndex index = spre::DemonstrationIndex::build(*gateway, synth.samples);
      auto samples_by_id = spre::index_samples_by_id(synth.samples);
      auto subset = spre::sample_test_subset(dataset.instances, opt.limit, opt.pipeline.seed);
      std::vector<spre::Prediction> predictions;
      predictions.reserve(subset.size());
      for (const auto& instance : subset) {
        predictions.push_back(spre::predict(*gateway, tpls, instance, dataset.schema, synth.groups,
                                            samples_by_id, index, opt.pipeline));
      }
      spre::TrialReport trial;
      trial.split.trial_index = 0;
      trial.split.m = static_cast<int>(dataset.schema.size());
      trial.split.seed = opt.pipeline.seed;
      for (const auto& rel : dataset.schema) {
        trial.split.test_relations.push_back(rel.id);
      }
      trial.metrics = spre::score(predictions, subset, mode);
      trial.sample_count = synth.samples.size();
      trial.instance_count = subset.size();
      report.trials.push_back(std::move(trial));
      report.completed = 1;
      report.mean = report.trials.front().metrics;
    } else {
      spre::ExperimentOptions exp;
      exp.m = opt.m;
      exp.trials = opt.trials;
      exp.subsample_limit = opt.limit;
      exp.widen_retrieval = opt.widen_retrieval;
      exp.jobs = opt.jobs;
      exp.mode = mode;
      report = spre::run_experiment(*gateway, tpls, dataset, opt.pipeline, exp);
    }
  }

  fs::path report_json = fs::path(opt.out) / "report.json";
  fs::path report_txt = fs::path(opt.out) / "report.txt";
  spre::write_file_atomic(report_json, spre::experiment_to_json(report));
  std::string table = spre::render_experiment_table(report);
  spre::write_file_atomic(report_txt, table);
  manifest.outputs.push_back(report_json.string());
  manifest.outputs.push_back(report_txt.string());
  for (const auto& trial : report.trials) {
    fs::path trial_path =
        fs::path(opt.out) / "trials" / ("trial_" + std::to_string(trial.split.trial_index) + ".json");
    spre::write_file_atomic(trial_path, spre::metrics_to_json(trial.metrics));
    manifest.outputs.push_back(trial_path.string());
  }
  std::cerr << table;
  finish_manifest(manifest, opt, *gateway);
  return 0;
}

int cmd_cost(const std::vector<std::string>& manifest_paths) {
  std::vector<spre::RunManifest> manifests;
  manifests.reserve(manifest_paths.size());
  for (const auto& path : manifest_paths) {
    manifests.push_back(spre::load_manifest(path));
  }
  std::cout << spre::render_cost_table(spre::summarize_costs(manifests));
  return 0;
}

void add_common_options(CLI::App* cmd, Options& opt, bool with_pipeline = true) {
  cmd->fallthrough();  // app-level options (--config) may appear after the subcommand
  cmd->add_option("--out", opt.out, "Output directory");
  cmd->add_option("--seed", opt.pipeline.seed, "Deterministic seed");
  cmd->add_option("--backend", opt.backend, "Backend: mock, gold-echo, or http")
      ->check(CLI::IsMember({"mock", "gold-echo", "http"}));
  cmd->add_option("--embed-dim", opt.embed_dim, "Mock embedding dimension");
  cmd->add_option("--jobs", opt.jobs, "Worker threads (default sequential)");
  cmd->add_option("--prompts", opt.prompts_dir, "Directory of prompt template overrides")
      ->check(CLI::ExistingDirectory);
  cmd->add_option("--from-manifest", opt.from_manifest,
                  "Load option defaults from a previous run's manifest");
  cmd->add_option("--price-prompt", opt.price_prompt, "USD per 1K prompt tokens");
  cmd->add_option("--price-completion", opt.price_completion, "USD per 1K completion tokens");
  cmd->add_option("--max-in-flight", opt.max_in_flight, "Concurrent backend call bound");
  cmd->add_option("--retries", opt.retries, "Max retries per backend call");
  cmd->add_option("--backoff-ms", opt.backoff_ms, "Base retry backoff in milliseconds");
  cmd->add_option("--base-url", opt.base_url, "HTTP backend base URL");
  cmd->add_option("--chat-model", opt.chat_model, "HTTP backend chat model id");
  cmd->add_option("--embed-model", opt.embed_model, "HTTP backend embedding model id");
  cmd->add_option("--api-key-env", opt.api_key_env,
                  "Environment variable holding the API key (never a flag)");

  if (with_pipeline) {
    cmd->add_option("--k", opt.pipeline.k, "Synonyms per relation");
    cmd->add_option("--n", opt.pipeline.n, "Max occurrences per entity");
    cmd->add_option("--r", opt.pipeline.r, "Rephrase variants per sample");
    cmd->add_option("--d", opt.pipeline.d, "Demonstrations per query");
    cmd->add_option("--batch", opt.pipeline.batch, "Samples requested per generation call");
    cmd->add_option("--cap", opt.pipeline.cap, "Retained-sample cap per relation");
    cmd->add_option("--stall", opt.pipeline.stall, "Consecutive empty batches before stopping");
    cmd->add_option("--temp-gen", opt.pipeline.temp_gen, "Generation temperature");
    cmd->add_option("--temp-infer", opt.pipeline.temp_infer, "Inference temperature");
    cmd->add_flag("--no-synonyms{false}", opt.pipeline.use_synonyms, "Disable synonym groups");
    cmd->add_flag("--no-filter{false}", opt.pipeline.use_filter, "Disable entity filtering");
    cmd->add_flag("--no-rephrase{false}", opt.pipeline.use_rephrase, "Disable rephrasing");
    cmd->add_flag("--no-all", opt.no_all, "Disable all three strategies");
    cmd->add_flag("--drop-parents{false}", opt.pipeline.keep_parents,
                  "Keep only rephrase variants, not their Fresh parents");
  }
}

void add_dataset_options(CLI::App* cmd, Options& opt) {
  cmd->add_option("--dataset", opt.dataset, "Dataset JSONL file")->check(CLI::ExistingFile);
  cmd->add_option("--format", opt.format, "Dataset format")
      ->check(CLI::IsMember({"fewrel-like", "tacred-like"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zero-shot relation extraction with self-generated in-context demonstrations"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Config file (key=value; [subcommand] sections)");

  Options opt;

  // --from-manifest pre-pass: manifest values become defaults, flags override.
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string_view(argv[i]) == "--from-manifest") {
      try {
        apply_manifest_defaults(opt, argv[i + 1]);
      } catch (const std::exception& ex) {
        std::cerr << "spre: " << ex.what() << "\n";
        return 2;
      }
    }
  }

  CLI::App* synonyms = app.add_subcommand("synonyms", "Generate relation synonym groups");
  add_common_options(synonyms, opt);
  add_dataset_options(synonyms, opt);

  CLI::App* generate = app.add_subcommand("generate", "Build the synthetic sample set");
  add_common_options(generate, opt);
  add_dataset_options(generate, opt);
  generate->add_option("--groups", opt.groups_path, "Groups file from `spre synonyms`")
      ->check(CLI::ExistingFile);

  CLI::App* index = app.add_subcommand("index", "Embed samples into a retrieval index");
  add_common_options(index, opt);
  index->add_option("--samples", opt.samples_path, "Samples file from `spre generate`")
      ->check(CLI::ExistingFile);

  CLI::App* infer = app.add_subcommand("infer", "Predict relations for test instances");
  add_common_options(infer, opt);
  add_dataset_options(infer, opt);
  infer->add_option("--samples", opt.samples_path, "Samples file from `spre generate`")
      ->check(CLI::ExistingFile);
  infer->add_option("--index", opt.index_dir, "Index directory from `spre index`")
      ->check(CLI::ExistingDirectory);
  infer->add_option("--groups", opt.groups_path, "Groups file for synonym fallback")
      ->check(CLI::ExistingFile);
  infer->add_option("--transcripts", opt.transcripts_dir,
                    "Dump one prompt transcript per test id into this directory");

  CLI::App* eval = app.add_subcommand("eval", "Run the full unseen-relation experiment");
  add_common_options(eval, opt);
  add_dataset_options(eval, opt);
  eval->add_option("--m", opt.m, "Unseen relations per trial");
  eval->add_option("--trials", opt.trials, "Number of trial splits");
  eval->add_option("--limit", opt.limit, "Proportional test subsample cap");
  eval->add_flag("--all-relations", opt.all_relations,
                 "Single trial over every relation (no validation holdout)");
  eval->add_flag("--widen-retrieval", opt.widen_retrieval,
                 "Index samples of all relations, not only the trial candidates");
  eval->add_option("--mode", opt.mode, "Headline metric: macro, micro, or auto")
      ->check(CLI::IsMember({"macro", "micro", "auto"}));

  CLI::App* cost = app.add_subcommand("cost", "Summarize token usage and cost from manifests");
  std::vector<std::string> manifest_paths;
  cost->add_option("manifests", manifest_paths, "Manifest JSON files")
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (opt.no_all) {
    opt.pipeline.use_synonyms = false;
    opt.pipeline.use_filter = false;
    opt.pipeline.use_rephrase = false;
  }

  try {
    opt.pipeline.validate();
    if (synonyms->parsed()) return cmd_synonyms(opt);
    if (generate->parsed()) return cmd_generate(opt);
    if (index->parsed()) return cmd_index(opt);
    if (infer->parsed()) return cmd_infer(opt);
    if (eval->parsed()) return cmd_eval(opt);
    if (cost->parsed()) return cmd_cost(manifest_paths);
  } catch (const CLI::ValidationError& ex) {
    std::cerr << "spre: " << ex.what() << "\n";
    return 2;
  } catch (const std::exception& ex) {
    std::cerr << "spre: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
