#include "spre/index.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "spre/errors.hpp"
#include "spre/jsonl.hpp"

static_assert(std::endian::native == std::endian::little,
              "vector cache files are little-endian; big-endian hosts need byte swapping");

namespace spre {
namespace {

using json = nlohmann::json;

struct Candidate {
  double similarity;
  const IndexedSample* entry;
};

}  // namespace

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) {
    throw DimensionMismatch("cosine: dims " + std::to_string(a.dim()) + " vs " +
                            std::to_string(b.dim()));
  }
  double dot = 0.0;
  double norm_a = 0.0;
  double norm_b = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    double x = a.values[i];
    double y = b.values[i];
    dot += x * y;
    norm_a += x * x;
    norm_b += y * y;
  }
  if (norm_a == 0.0 || norm_b == 0.0) {
    throw ZeroVector();
  }
  return dot / (std::sqrt(norm_a) * std::sqrt(norm_b));
}

DemonstrationIndex DemonstrationIndex::build(Gateway& gateway,
                                             std::span<const SyntheticSample> samples) {
  DemonstrationIndex index;
  index.model_id_ = gateway.config().embed_model;
  if (samples.empty()) {
    return index;
  }
  std::vector<std::string> sentences;
  sentences.reserve(samples.size());
  for (const auto& sample : samples) {
    sentences.push_back(sample.sentence);
  }
  std::vector<EmbeddingVector> vectors = gateway.embed(sentences);
  index.entries_.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    index.entries_.push_back(
        {samples[i].id, samples[i].sentence, samples[i].relation_id, std::move(vectors[i])});
  }
  return index;
}

DemonstrationIndex DemonstrationIndex::from_entries(std::vector<IndexedSample> entries,
                                                    std::string model_id) {
  DemonstrationIndex index;
  index.entries_ = std::move(entries);
  index.model_id_ = std::move(model_id);
  for (const auto& entry : index.entries_) {
    if (entry.vector.dim() != index.dim()) {
      throw DimensionMismatch("index entries have inconsistent dimensions");
    }
  }
  return index;
}

RetrievalResult DemonstrationIndex::retrieve(Gateway& gateway, const std::string& query_sentence,
                                             int d) const {
  if (empty() || d == 0) {
    return {};
  }
  EmbeddingVector query = gateway.embed({query_sentence}).front();
  return retrieve_by_vector(query, d);
}

RetrievalResult DemonstrationIndex::retrieve_by_vector(const EmbeddingVector& query, int d) const {
  if (d < 0) {
    throw Error("retrieve: d must be >= 0");
  }
  if (empty() || d == 0) {
    return {};
  }
  std::vector<Candidate> candidates;
  candidates.reserve(entries_.size());
  for (const auto& entry : entries_) {
    candidates.push_back({cosine(query, entry.vector), &entry});
  }
  // Selection order: higher similarity first, then smaller id. Independent of
  // storage order by construction.
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.similarity != b.similarity) {
      return a.similarity > b.similarity;
    }
    return a.entry->sample_id < b.entry->sample_id;
  });
  std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(d), candidates.size());
  candidates.resize(keep);
  // Presentation order: ascending similarity, most similar last.
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.similarity != b.similarity) {
      return a.similarity < b.similarity;
    }
    return a.entry->sample_id < b.entry->sample_id;
  });
  RetrievalResult result;
  result.hits.reserve(keep);
  for (const auto& candidate : candidates) {
    result.hits.push_back({candidate.entry->sample_id, candidate.similarity});
  }
  return result;
}

std::string hash_to_hex(std::uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

std::uint64_t hash_from_hex(const std::string& hex) {
  return std::strtoull(hex.c_str(), nullptr, 16);
}

void VectorCacheFile::save(const std::filesystem::path& manifest_path,
                           const std::filesystem::path& vectors_path,
                           std::span<const std::pair<std::uint64_t, EmbeddingVector>> entries) {
  std::string manifest;
  std::string blob;
  std::uint64_t offset = 0;
  for (const auto& [hash, vector] : entries) {
    json row{{"hash", hash_to_hex(hash)}, {"dim", vector.dim()}, {"offset", offset}};
    manifest += row.dump();
    manifest += '\n';
    std::size_t bytes = vector.values.size() * sizeof(float);
    std::size_t old_size = blob.size();
    blob.resize(old_size + bytes);
    std::memcpy(blob.data() + old_size, vector.values.data(), bytes);
    offset += bytes;
  }
  write_file_atomic(manifest_path, manifest);
  write_file_atomic(vectors_path, blob);
}

std::vector<std::pair<std::uint64_t, EmbeddingVector>> VectorCacheFile::load(
    const std::filesystem::path& manifest_path, const std::filesystem::path& vectors_path) {
  std::string blob = read_file(vectors_path);
  std::vector<std::pair<std::uint64_t, EmbeddingVector>> entries;
  for (const auto& [line, lineno] : read_jsonl_lines(manifest_path)) {
    json row;
    try {
      row = json::parse(line);
    } catch (const json::exception& ex) {
      throw FormatError(lineno, ex.what());
    }
    std::uint64_t hash = hash_from_hex(row.at("hash").get<std::string>());
    int dim = row.at("dim").get<int>();
    std::uint64_t offset = row.at("offset").get<std::uint64_t>();
    std::size_t bytes = static_cast<std::size_t>(dim) * sizeof(float);
    if (offset + bytes > blob.size()) {
      throw FormatError(lineno, "vector range exceeds cache file size");
    }
    EmbeddingVector vector;
    vector.values.resize(static_cast<std::size_t>(dim));
    std::memcpy(vector.values.data(), blob.data() + offset, bytes);
    entries.emplace_back(hash, std::move(vector));
  }
  return entries;
}

void DemonstrationIndex::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);

  std::unordered_map<std::uint64_t, const EmbeddingVector*> distinct;
  std::string entries_out;
  for (const auto& entry : entries_) {
    std::uint64_t hash = Gateway::content_hash(model_id_, entry.sentence);
    json row{{"sample_id", entry.sample_id},
             {"relation_id", entry.relation_id},
             {"sentence", entry.sentence},
             {"hash", hash_to_hex(hash)}};
    entries_out += row.dump();
    entries_out += '\n';
    distinct.emplace(hash, &entry.vector);
  }
  std::vector<std::pair<std::uint64_t, EmbeddingVector>> cache_entries;
  cache_entries.reserve(distinct.size());
  for (const auto& [hash, vector] : distinct) {
    cache_entries.emplace_back(hash, *vector);
  }
  std::sort(cache_entries.begin(), cache_entries.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  write_file_atomic(dir / "entries.jsonl", entries_out);
  VectorCacheFile::save(dir / "cache.manifest.jsonl", dir / "cache.vectors.f32", cache_entries);
  json meta{{"model", model_id_}, {"count", entries_.size()}};
  write_file_atomic(dir / "meta.json", meta.dump(2) + "\n");
}

DemonstrationIndex DemonstrationIndex::load(const std::filesystem::path& dir) {
  json meta = json::parse(read_file(dir / "meta.json"));
  auto cache_entries = VectorCacheFile::load(dir / "cache.manifest.jsonl", dir / "cache.vectors.f32");
  std::unordered_map<std::uint64_t, const EmbeddingVector*> by_hash;
  for (const auto& [hash, vector] : cache_entries) {
    by_hash[hash] = &vector;
  }

  std::vector<IndexedSample> entries;
  for (const auto& [line, lineno] : read_jsonl_lines(dir / "entries.jsonl")) {
    json row;
    try {
      row = json::parse(line);
    } catch (const json::exception& ex) {
      throw FormatError(lineno, ex.what());
    }
    std::uint64_t hash = hash_from_hex(row.at("hash").get<std::string>());
    auto it = by_hash.find(hash);
    if (it == by_hash.end()) {
      throw FormatError(lineno, "entry hash missing from the vector cache");
    }
    entries.push_back({row.at("sample_id").get<std::string>(),
                       row.at("sentence").get<std::string>(),
                       row.at("relation_id").get<std::string>(), *it->second});
  }
  return from_entries(std::move(entries), meta.value("model", std::string("unknown")));
}

}  // namespace spre
