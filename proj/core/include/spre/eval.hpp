#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "spre/gateway.hpp"
#include "spre/inference.hpp"
#include "spre/prompts.hpp"
#include "spre/synth.hpp"
#include "spre/types.hpp"

namespace spre {

enum class DatasetFormat { FewRelLike, TacredLike };

DatasetFormat dataset_format_from_string(std::string_view name);

struct Dataset {
  std::vector<RelationDef> schema;
  std::vector<TestInstance> instances;
  std::size_t rejected = 0;  // instances dropped for failing invariants
};

/// Reads the artifact's JSONL ingestion format: one object per line with
/// sentence, head, tail, relation and an optional description and id. The
/// tacred-like variant additionally drops the none-of-the-above class.
/// Instances whose entities are not present in the sentence are rejected and
/// counted. Throws FormatError (with line number) or EmptyDataset.
Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format);

struct RelationSplit {
  int trial_index = 0;
  int m = 0;
  std::vector<std::string> test_relations;        // exactly m, disjoint from validation
  std::vector<std::string> validation_relations;  // exactly 5
  std::uint64_t seed = 0;
};

/// Per-trial pseudo-random draws of 5 validation relations plus m disjoint
/// test relations, seeded by (seed, trial_index). Throws InsufficientRelations
/// when |schema| < m + 5.
std::vector<RelationSplit> make_splits(std::span<const RelationDef> schema, int m, int trials,
                                       std::uint64_t seed);

/// Proportional subsampling: everything when |instances| <= limit, otherwise
/// largest-remainder per-class quotas summing exactly to limit, sampled
/// without replacement per class.
std::vector<TestInstance> sample_test_subset(std::span<const TestInstance> instances,
                                             std::size_t limit, std::uint64_t seed);

struct ClassCounts {
  long long tp = 0;
  long long fp = 0;
  long long fn = 0;
};

struct PerRelationMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long long support = 0;
};

/// All metric values are fractions in [0, 1]; renderers scale to percent.
struct MetricsReport {
  std::map<std::string, PerRelationMetrics> per_relation;
  double macro_p = 0.0, macro_r = 0.0, macro_f1 = 0.0;
  double micro_p = 0.0, micro_r = 0.0, micro_f1 = 0.0;
  std::string mode = "macro";  // which aggregate headlines the report
};

/// F1 = 2pr/(p+r), defined as 0 when p + r == 0.
double f1_score(double precision, double recall);

/// Aggregates one-vs-rest counts into per-relation and pooled metrics. Macro
/// averages run over relations with support > 0.
MetricsReport aggregate_counts(const std::map<std::string, ClassCounts>& counts,
                               std::string mode = "macro");

/// Builds per-relation counts from predictions: a correct prediction is a TP
/// for its class; a wrong one is an FP for the predicted class and an FN for
/// the gold class; an unresolved (none) prediction is an FN for the gold
/// class and no FP anywhere. Throws MissingGold when a prediction's test_id
/// has no gold instance.
MetricsReport score(std::span<const Prediction> predictions,
                    std::span<const TestInstance> golds, std::string mode = "macro");

std::string metrics_to_json(const MetricsReport& report);
std::string render_metrics_table(const MetricsReport& report);

struct ExperimentOptions {
  int m = 5;
  int trials = 5;
  std::size_t subsample_limit = 1000;
  bool widen_retrieval = false;  // index all schema relations, not only candidates
  int jobs = 1;
  std::string mode = "macro";
};

struct TrialReport {
  RelationSplit split;
  MetricsReport metrics;
  std::size_t sample_count = 0;   // synthetic samples built for this trial
  std::size_t instance_count = 0; // test instances scored
};

struct ExperimentReport {
  std::vector<TrialReport> trials;
  MetricsReport mean;  // unweighted mean of trial-level aggregates
  int completed = 0;
  std::vector<std::string> warnings;
};

/// The full unseen-relation protocol: for each trial split, build synthetic
/// data for the candidate relations under the active toggles, index it,
/// predict the subsampled test instances, and score. Per-trial failures are
/// reported as warnings; throws only when every trial fails.
ExperimentReport run_experiment(Gateway& gateway, const PromptTemplates& tpls,
                                const Dataset& dataset, const PipelineConfig& cfg,
                                const ExperimentOptions& options);

std::string experiment_to_json(const ExperimentReport& report);
std::string render_experiment_table(const ExperimentReport& report);

}  // namespace spre
