#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "spre/gateway.hpp"

namespace spre {

/// What a command ran with and what it produced. Written atomically at run
/// end; the config snapshot is complete enough that re-running it against the
/// mock backend reproduces the outputs byte for byte.
struct RunManifest {
  std::string command;
  std::map<std::string, std::string> config;  // resolved option name -> value
  std::uint64_t seed = 0;
  std::string backend;
  Pricing pricing;
  std::vector<std::pair<std::string, double>> timings;  // stage name, seconds
  std::vector<std::string> outputs;
  MeterSummary usage;
};

void save_manifest(const std::filesystem::path& path, const RunManifest& manifest);
RunManifest load_manifest(const std::filesystem::path& path);

struct CostRow {
  std::string stage;
  long long prompt_tokens = 0;
  long long completion_tokens = 0;
  double cost_usd = 0.0;
};

struct CostSummary {
  std::vector<CostRow> rows;  // stage order as in Stage
  CostRow total;
};

/// Element-wise sum of the manifests' usage, costs recomputed from the summed
/// token counts with the first manifest's pricing.
CostSummary summarize_costs(const std::vector<RunManifest>& manifests);

/// Aligned table with token counts in thousands, mirroring per-stage cost
/// reporting: stage, prompt(k), completion(k), total(k), cost($).
std::string render_cost_table(const CostSummary& summary);

}  // namespace spre
