#include "spre/manifest.hpp"

#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "spre/errors.hpp"
#include "spre/jsonl.hpp"

namespace spre {
namespace {

using json = nlohmann::json;

json usage_rows_to_json(const MeterSummary& usage) {
  json rows = json::array();
  for (const auto& record : usage.stages) {
    rows.push_back({{"stage", std::string(to_string(record.stage))},
                    {"prompt_tokens", record.prompt_tokens},
                    {"completion_tokens", record.completion_tokens},
                    {"cost_usd", record.cost_usd}});
  }
  return rows;
}

}  // namespace

void save_manifest(const std::filesystem::path& path, const RunManifest& manifest) {
  json j{{"command", manifest.command},
         {"config", manifest.config},
         {"seed", manifest.seed},
         {"backend", manifest.backend},
         {"pricing",
          {{"prompt_usd_per_1k", manifest.pricing.prompt_usd_per_1k},
           {"completion_usd_per_1k", manifest.pricing.completion_usd_per_1k}}},
         {"outputs", manifest.outputs},
         {"usage",
          {{"stages", usage_rows_to_json(manifest.usage)},
           {"prompt_tokens", manifest.usage.prompt_tokens},
           {"completion_tokens", manifest.usage.completion_tokens},
           {"cost_usd", manifest.usage.cost_usd}}}};
  json timings = json::array();
  for (const auto& [stage, seconds] : manifest.timings) {
    timings.push_back({{"stage", stage}, {"seconds", seconds}});
  }
  j["timings"] = std::move(timings);
  write_file_atomic(path, j.dump(2) + "\n");
}

RunManifest load_manifest(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& ex) {
    throw Error("bad manifest " + path.string() + ": " + ex.what());
  }
  RunManifest manifest;
  manifest.command = j.value("command", std::string{});
  if (j.contains("config")) {
    manifest.config = j["config"].get<std::map<std::string, std::string>>();
  }
  manifest.seed = j.value("seed", std::uint64_t{0});
  manifest.backend = j.value("backend", std::string{});
  if (j.contains("pricing")) {
    manifest.pricing.prompt_usd_per_1k = j["pricing"].value("prompt_usd_per_1k", 0.001);
    manifest.pricing.completion_usd_per_1k = j["pricing"].value("completion_usd_per_1k", 0.002);
  }
  if (j.contains("outputs")) {
    manifest.outputs = j["outputs"].get<std::vector<std::string>>();
  }
  if (j.contains("timings")) {
    for (const auto& row : j["timings"]) {
      manifest.timings.emplace_back(row.value("stage", std::string{}), row.value("seconds", 0.0));
    }
  }
  if (j.contains("usage")) {
    const auto& usage = j["usage"];
    for (const auto& row : usage.value("stages", json::array())) {
      manifest.usage.stages.push_back({stage_from_string(row.at("stage").get<std::string>()),
                                       row.value("prompt_tokens", 0LL),
                                       row.value("completion_tokens", 0LL),
                                       row.value("cost_usd", 0.0)});
    }
    manifest.usage.prompt_tokens = usage.value("prompt_tokens", 0LL);
    manifest.usage.completion_tokens = usage.value("completion_tokens", 0LL);
    manifest.usage.cost_usd = usage.value("cost_usd", 0.0);
  }
  return manifest;
}

CostSummary summarize_costs(const std::vector<RunManifest>& manifests) {
  CostSummary summary;
  if (manifests.empty()) {
    return summary;
  }
  const Pricing pricing = manifests.front().pricing;
  std::map<Stage, BackendUsage> sums;
  for (const auto& manifest : manifests) {
    for (const auto& record : manifest.usage.stages) {
      sums[record.stage].prompt_tokens += record.prompt_tokens;
      sums[record.stage].completion_tokens += record.completion_tokens;
    }
  }
  for (const auto& [stage, tokens] : sums) {
    summary.rows.push_back({std::string(to_string(stage)), tokens.prompt_tokens,
                            tokens.completion_tokens,
                            pricing.cost(tokens.prompt_tokens, tokens.completion_tokens)});
    summary.total.prompt_tokens += tokens.prompt_tokens;
    summary.total.completion_tokens += tokens.completion_tokens;
  }
  summary.total.stage = "total";
  summary.total.cost_usd = pricing.cost(summary.total.prompt_tokens,
                                        summary.total.completion_tokens);
  return summary;
}

std::string render_cost_table(const CostSummary& summary) {
  std::ostringstream out;
  out << "stage        prompt(k)  completion(k)   total(k)    cost($)\n";
  auto emit = [&out](const CostRow& row) {
    char line[160];
    double prompt_k = static_cast<double>(row.prompt_tokens) / 1000.0;
    double completion_k = static_cast<double>(row.completion_tokens) / 1000.0;
    std::snprintf(line, sizeof(line), "%-12s %9.3f %14.3f %10.3f %10.5f\n", row.stage.c_str(),
                  prompt_k, completion_k, prompt_k + completion_k, row.cost_usd);
    out << line;
  };
  for (const auto& row : summary.rows) {
    emit(row);
  }
  emit(summary.total);
  return out.str();
}

}  // namespace spre
