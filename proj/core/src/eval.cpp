#include "spre/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "spre/errors.hpp"
#include "spre/index.hpp"
#include "spre/jsonl.hpp"
#include "spre/rng.hpp"

namespace spre {
namespace {

using json = nlohmann::json;

// Labels treated as the none-of-the-above class in tacred-like files.
const std::set<std::string> kNoneLabels = {"no_relation", "none-of-the-above", "na"};

std::string format_pct(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%6.1f", fraction * 100.0);
  return buf;
}

json metrics_to_json_obj(const MetricsReport& report) {
  json per_relation = json::object();
  for (const auto& [relation, m] : report.per_relation) {
    per_relation[relation] = {{"precision", m.precision},
                              {"recall", m.recall},
                              {"f1", m.f1},
                              {"support", m.support}};
  }
  return json{{"per_relation", std::move(per_relation)},
              {"macro", {{"precision", report.macro_p}, {"recall", report.macro_r}, {"f1", report.macro_f1}}},
              {"micro", {{"precision", report.micro_p}, {"recall", report.micro_r}, {"f1", report.micro_f1}}},
              {"mode", report.mode}};
}

}  // namespace

DatasetFormat dataset_format_from_string(std::string_view name) {
  if (name == "fewrel-like") return DatasetFormat::FewRelLike;
  if (name == "tacred-like") return DatasetFormat::TacredLike;
  throw Error("unknown dataset format: " + std::string(name));
}

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format) {
  Dataset dataset;
  const std::string stem = path.stem().string();
  std::unordered_map<std::string, std::size_t> schema_index;

  for (const auto& [line, lineno] : read_jsonl_lines(path)) {
    json row;
    try {
      row = json::parse(line);
    } catch (const json::exception& ex) {
      throw FormatError(lineno, ex.what());
    }
    if (!row.is_object()) {
      throw FormatError(lineno, "expected a JSON object");
    }
    for (const char* field : {"sentence", "head", "tail", "relation"}) {
      if (!row.contains(field) || !row[field].is_string() ||
          row[field].get<std::string>().empty()) {
        throw FormatError(lineno, std::string("missing or empty field: ") + field);
      }
    }
    const std::string relation = row["relation"].get<std::string>();
    if (format == DatasetFormat::TacredLike && kNoneLabels.count(normalize_text(relation)) > 0) {
      continue;
    }

    TestInstance instance;
    instance.sentence = row["sentence"].get<std::string>();
    instance.head = row["head"].get<std::string>();
    instance.tail = row["tail"].get<std::string>();
    instance.gold_relation_id = relation;
    instance.dataset = stem;
    char fallback_id[32];
    std::snprintf(fallback_id, sizeof(fallback_id), "%s-%06zu", "t", lineno);
    instance.id = row.value("id", std::string(fallback_id));

    if (!contains_normalized(instance.sentence, instance.head) ||
        !contains_normalized(instance.sentence, instance.tail)) {
      ++dataset.rejected;
      continue;
    }

    if (schema_index.count(relation) == 0) {
      schema_index[relation] = dataset.schema.size();
      dataset.schema.push_back({relation, relation, row.value("description", std::string{}), stem});
    } else if (dataset.schema[schema_index[relation]].description.empty()) {
      dataset.schema[schema_index[relation]].description = row.value("description", std::string{});
    }
    dataset.instances.push_back(std::move(instance));
  }

  if (dataset.rejected > 0) {
    std::cerr << "[spre] " << path.filename().string() << ": rejected " << dataset.rejected
              << " instances whose entities are absent from the sentence\n";
  }
  if (dataset.instances.empty()) {
    throw EmptyDataset("no usable instances in " + path.string());
  }
  return dataset;
}

std::vector<RelationSplit> make_splits(std::span<const RelationDef> schema, int m, int trials,
                                       std::uint64_t seed) {
  constexpr int kValidationCount = 5;
  if (static_cast<int>(schema.size()) < m + kValidationCount) {
    throw InsufficientRelations("need at least " + std::to_string(m + kValidationCount) +
                                " relations, have " + std::to_string(schema.size()));
  }
  std::vector<std::string> ids;
  ids.reserve(schema.size());
  for (const auto& rel : schema) {
    ids.push_back(rel.id);
  }
  std::sort(ids.begin(), ids.end());

  std::vector<RelationSplit> splits;
  splits.reserve(static_cast<std::size_t>(trials));
  for (int trial = 0; trial < trials; ++trial) {
    rng::SmallRng rng(rng::mix(seed, static_cast<std::uint64_t>(trial) + 0x5eedu));
    std::vector<std::string> shuffled = ids;
    rng::shuffle(shuffled, rng);
    RelationSplit split;
    split.trial_index = trial;
    split.m = m;
    split.seed = seed;
    split.validation_relations.assign(shuffled.begin(), shuffled.begin() + kValidationCount);
    split.test_relations.assign(shuffled.begin() + kValidationCount,
                                shuffled.begin() + kValidationCount + m);
    splits.push_back(std::move(split));
  }
  return splits;
}

std::vector<TestInstance> sample_test_subset(std::span<const TestInstance> instances,
                                             std::size_t limit, std::uint64_t seed) {
  if (instances.size() <= limit) {
    return {instances.begin(), instances.end()};
  }
  // Group by class, ascending relation id for determinism.
  std::map<std::string, std::vector<const TestInstance*>> by_class;
  for (const auto& instance : instances) {
    by_class[instance.gold_relation_id].push_back(&instance);
  }

  struct Quota {
    std::string relation;
    std::size_t floor_quota;
    double remainder;
  };
  const double total = static_cast<double>(instances.size());
  std::vector<Quota> quotas;
  std::size_t allocated = 0;
  for (const auto& [relation, members] : by_class) {
    double exact = static_cast<double>(limit) * static_cast<double>(members.size()) / total;
    std::size_t floor_quota = static_cast<std::size_t>(std::floor(exact));
    quotas.push_back({relation, floor_quota, exact - std::floor(exact)});
    allocated += floor_quota;
  }
  std::vector<std::size_t> order(quotas.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    order[i] = i;
  }
  std::sort(order.begin(), order.end(), [&quotas](std::size_t a, std::size_t b) {
    if (quotas[a].remainder != quotas[b].remainder) {
      return quotas[a].remainder > quotas[b].remainder;
    }
    return quotas[a].relation < quotas[b].relation;
  });
  for (std::size_t i = 0; allocated < limit; ++i) {
    quotas[order[i % order.size()]].floor_quota += 1;
    ++allocated;
  }

  std::vector<TestInstance> subset;
  subset.reserve(limit);
  for (const auto& quota : quotas) {
    const auto& members = by_class[quota.relation];
    rng::SmallRng rng(rng::mix(seed, rng::fnv1a64(quota.relation)));
    auto picks = rng::sample_indices(members.size(), quota.floor_quota, rng);
    for (std::size_t idx : picks) {
      subset.push_back(*members[idx]);
    }
  }
  return subset;
}

double f1_score(double precision, double recall) {
  double sum = precision + recall;
  return sum > 0.0 ? 2.0 * precision * recall / sum : 0.0;
}

MetricsReport aggregate_counts(const std::map<std::string, ClassCounts>& counts,
                               std::string mode) {
  MetricsReport report;
  report.mode = std::move(mode);
  long long pooled_tp = 0, pooled_fp = 0, pooled_fn = 0;
  double macro_p_sum = 0.0, macro_r_sum = 0.0, macro_f1_sum = 0.0;
  std::size_t macro_classes = 0;

  for (const auto& [relation, c] : counts) {
    PerRelationMetrics m;
    m.support = c.tp + c.fn;
    m.precision = (c.tp + c.fp) > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
    m.recall = m.support > 0 ? static_cast<double>(c.tp) / static_cast<double>(m.support) : 0.0;
    m.f1 = f1_score(m.precision, m.recall);
    report.per_relation[relation] = m;

    pooled_tp += c.tp;
    pooled_fp += c.fp;
    pooled_fn += c.fn;
    if (m.support > 0) {
      macro_p_sum += m.precision;
      macro_r_sum += m.recall;
      macro_f1_sum += m.f1;
      ++macro_classes;
    }
  }

  if (macro_classes > 0) {
    report.macro_p = macro_p_sum / static_cast<double>(macro_classes);
    report.macro_r = macro_r_sum / static_cast<double>(macro_classes);
    report.macro_f1 = macro_f1_sum / static_cast<double>(macro_classes);
  }
  report.micro_p =
      (pooled_tp + pooled_fp) > 0 ? static_cast<double>(pooled_tp) / static_cast<double>(pooled_tp + pooled_fp) : 0.0;
  report.micro_r =
      (pooled_tp + pooled_fn) > 0 ? static_cast<double>(pooled_tp) / static_cast<double>(pooled_tp + pooled_fn) : 0.0;
  report.micro_f1 = f1_score(report.micro_p, report.micro_r);
  return report;
}

MetricsReport score(std::span<const Prediction> predictions, std::span<const TestInstance> golds,
                    std::string mode) {
  std::unordered_map<std::string, const TestInstance*> gold_by_id;
  for (const auto& gold : golds) {
    gold_by_id[gold.id] = &gold;
  }
  std::map<std::string, ClassCounts> counts;
  for (const auto& gold : golds) {
    counts[gold.gold_relation_id];  // ensure every gold class has a row
  }
  for (const auto& prediction : predictions) {
    auto it = gold_by_id.find(prediction.test_id);
    if (it == gold_by_id.end()) {
      throw MissingGold("prediction " + prediction.test_id + " has no gold instance");
    }
    const std::string& gold_relation = it->second->gold_relation_id;
    if (prediction.relation_id.empty()) {
      counts[gold_relation].fn += 1;
    } else if (prediction.relation_id == gold_relation) {
      counts[gold_relation].tp += 1;
    } else {
      counts[prediction.relation_id].fp += 1;
      counts[gold_relation].fn += 1;
    }
  }
  return aggregate_counts(counts, std::move(mode));
}

std::string metrics_to_json(const MetricsReport& report) {
  return metrics_to_json_obj(report).dump(2) + "\n";
}

std::string render_metrics_table(const MetricsReport& report) {
  std::ostringstream out;
  out << "relation                                  prec.   rec.    f1   support\n";
  for (const auto& [relation, m] : report.per_relation) {
    char row[160];
    std::snprintf(row, sizeof(row), "%-40s %s %s %s %9lld\n", relation.c_str(),
                  format_pct(m.precision).c_str(), format_pct(m.recall).c_str(),
                  format_pct(m.f1).c_str(), m.support);
    out << row;
  }
  char macro_row[160];
  std::snprintf(macro_row, sizeof(macro_row), "%-40s %s %s %s\n", "macro",
                format_pct(report.macro_p).c_str(), format_pct(report.macro_r).c_str(),
                format_pct(report.macro_f1).c_str());
  out << macro_row;
  char micro_row[160];
  std::snprintf(micro_row, sizeof(micro_row), "%-40s %s %s %s\n", "micro",
                format_pct(report.micro_p).c_str(), format_pct(report.micro_r).c_str(),
                format_pct(report.micro_f1).c_str());
  out << micro_row;
  return out.str();
}

namespace {

struct TrialOutcome {
  std::optional<TrialReport> report;
  std::string warning;
};

TrialOutcome run_trial(Gateway& gateway, const PromptTemplates& tpls, const Dataset& dataset,
                       const PipelineConfig& cfg, const ExperimentOptions& options,
                       const std::unordered_map<std::string, const RelationDef*>& schema_by_id,
                       const RelationSplit& split) {
  TrialOutcome outcome;
  try {
    std::vector<RelationDef> candidates;
    candidates.reserve(split.test_relations.size());
    for (const auto& id : split.test_relations) {
      candidates.push_back(*schema_by_id.at(id));
    }
    std::vector<RelationDef> synth_schema = candidates;
    if (options.widen_retrieval) {
      synth_schema = dataset.schema;
    }

    SynthDataset synth = build_relation_dataset(gateway, tpls, synth_schema, cfg);
    DemonstrationIndex index = DemonstrationIndex::build(gateway, synth.samples);
    auto samples_by_id = index_samples_by_id(synth.samples);

    std::set<std::string> candidate_ids(split.test_relations.begin(), split.test_relations.end());
    std::vector<TestInstance> trial_instances;
    for (const auto& instance : dataset.instances) {
      if (candidate_ids.count(instance.gold_relation_id) > 0) {
        trial_instances.push_back(instance);
      }
    }
    auto subset = sample_test_subset(trial_instances, options.subsample_limit,
                                     rng::mix(cfg.seed, static_cast<std::uint64_t>(split.trial_index)));

    std::vector<Prediction> predictions;
    predictions.reserve(subset.size());
    for (const auto& instance : subset) {
      predictions.push_back(
          predict(gateway, tpls, instance, candidates, synth.groups, samples_by_id, index, cfg));
    }

    TrialReport trial;
    trial.split = split;
    trial.metrics = score(predictions, subset, options.mode);
    trial.sample_count = synth.samples.size();
    trial.instance_count = subset.size();
    outcome.report = std::move(trial);
  } catch (const std::exception& ex) {
    outcome.warning = "trial " + std::to_string(split.trial_index) + " failed: " + ex.what();
  }
  return outcome;
}

}  // namespace

ExperimentReport run_experiment(Gateway& gateway, const PromptTemplates& tpls,
                                const Dataset& dataset, const PipelineConfig& cfg,
                                const ExperimentOptions& options) {
  ExperimentReport report;
  auto splits = make_splits(dataset.schema, options.m, options.trials, cfg.seed);
  std::unordered_map<std::string, const RelationDef*> schema_by_id;
  for (const auto& rel : dataset.schema) {
    schema_by_id[rel.id] = &rel;
  }

  // Trials are independent given the shared (thread-safe) gateway; each
  // trial's own ledger admission stays sequential inside run_trial.
  std::vector<TrialOutcome> outcomes(splits.size());
  if (options.jobs <= 1) {
    for (std::size_t i = 0; i < splits.size(); ++i) {
      outcomes[i] = run_trial(gateway, tpls, dataset, cfg, options, schema_by_id, splits[i]);
    }
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      while (true) {
        std::size_t i = next.fetch_add(1);
        if (i >= splits.size()) {
          return;
        }
        outcomes[i] = run_trial(gateway, tpls, dataset, cfg, options, schema_by_id, splits[i]);
      }
    };
    std::vector<std::thread> threads;
    int thread_count = std::min<int>(options.jobs, static_cast<int>(splits.size()));
    threads.reserve(static_cast<std::size_t>(thread_count));
    for (int t = 0; t < thread_count; ++t) {
      threads.emplace_back(worker);
    }
    for (auto& thread : threads) {
      thread.join();
    }
  }

  for (auto& outcome : outcomes) {
    if (outcome.report) {
      report.trials.push_back(std::move(*outcome.report));
      ++report.completed;
    } else {
      report.warnings.push_back(std::move(outcome.warning));
    }
  }

  if (report.completed == 0) {
    throw Error("run_experiment: every trial failed; first: " +
                (report.warnings.empty() ? std::string("unknown") : report.warnings.front()));
  }

  report.mean.mode = options.mode;
  for (const auto& trial : report.trials) {
    report.mean.macro_p += trial.metrics.macro_p;
    report.mean.macro_r += trial.metrics.macro_r;
    report.mean.macro_f1 += trial.metrics.macro_f1;
    report.mean.micro_p += trial.metrics.micro_p;
    report.mean.micro_r += trial.metrics.micro_r;
    report.mean.micro_f1 += trial.metrics.micro_f1;
  }
  const double denom = static_cast<double>(report.completed);
  report.mean.macro_p /= denom;
  report.mean.macro_r /= denom;
  report.mean.macro_f1 /= denom;
  report.mean.micro_p /= denom;
  report.mean.micro_r /= denom;
  report.mean.micro_f1 /= denom;
  return report;
}

std::string experiment_to_json(const ExperimentReport& report) {
  json trials = json::array();
  for (const auto& trial : report.trials) {
    trials.push_back({{"trial_index", trial.split.trial_index},
                      {"m", trial.split.m},
                      {"test_relations", trial.split.test_relations},
                      {"validation_relations", trial.split.validation_relations},
                      {"sample_count", trial.sample_count},
                      {"instance_count", trial.instance_count},
                      {"metrics", metrics_to_json_obj(trial.metrics)}});
  }
  json j{{"trials", std::move(trials)},
         {"completed", report.completed},
         {"warnings", report.warnings},
         {"mean", metrics_to_json_obj(report.mean)}};
  return j.dump(2) + "\n";
}

std::string render_experiment_table(const ExperimentReport& report) {
  std::ostringstream out;
  out << "trial   prec.   rec.     f1   (" << report.mean.mode << ")\n";
  for (const auto& trial : report.trials) {
    bool micro = report.mean.mode == "micro";
    const auto& m = trial.metrics;
    char row[128];
    std::snprintf(row, sizeof(row), "%5d  %s %s %s\n", trial.split.trial_index,
                  format_pct(micro ? m.micro_p : m.macro_p).c_str(),
                  format_pct(micro ? m.micro_r : m.macro_r).c_str(),
                  format_pct(micro ? m.micro_f1 : m.macro_f1).c_str());
    out << row;
  }
  bool micro = report.mean.mode == "micro";
  char mean_row[128];
  std::snprintf(mean_row, sizeof(mean_row), "%5s  %s %s %s\n", "mean",
                format_pct(micro ? report.mean.micro_p : report.mean.macro_p).c_str(),
                format_pct(micro ? report.mean.micro_r : report.mean.macro_r).c_str(),
                format_pct(micro ? report.mean.micro_f1 : report.mean.macro_f1).c_str());
  out << mean_row;
  for (const auto& warning : report.warnings) {
    out << "warning: " << warning << "\n";
  }
  return out.str();
}

}  // namespace spre
