#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "spre/gateway.hpp"
#include "spre/types.hpp"

namespace spre {

/// dot(a,b) / (|a| |b|), computed in double. Throws DimensionMismatch or
/// ZeroVector.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

struct IndexedSample {
  std::string sample_id;
  std::string sentence;
  std::string relation_id;
  EmbeddingVector vector;
};

struct RetrievalHit {
  std::string sample_id;
  double similarity = 0.0;
};

/// Hits ordered by ascending similarity so the most similar entry is last,
/// next to the test sentence in the assembled prompt. Ties break by ascending
/// sample id, which makes retrieval independent of insertion order.
struct RetrievalResult {
  std::vector<RetrievalHit> hits;
};

/// Immutable embedding-backed store with exact exhaustive top-d retrieval.
class DemonstrationIndex {
 public:
  DemonstrationIndex() = default;

  /// Embeds each distinct sentence once (through the gateway cache).
  static DemonstrationIndex build(Gateway& gateway, std::span<const SyntheticSample> samples);

  /// Assembles an index from precomputed entries; no backend involved.
  static DemonstrationIndex from_entries(std::vector<IndexedSample> entries,
                                         std::string model_id = "unknown");

  const std::vector<IndexedSample>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  int dim() const { return entries_.empty() ? 0 : entries_.front().vector.dim(); }
  const std::string& model_id() const { return model_id_; }

  RetrievalResult retrieve(Gateway& gateway, const std::string& query_sentence, int d) const;
  RetrievalResult retrieve_by_vector(const EmbeddingVector& query, int d) const;

  /// Writes entries.jsonl, cache.manifest.jsonl (hash, dim, offset rows) and
  /// cache.vectors.f32 (flat little-endian float32) under dir.
  void save(const std::filesystem::path& dir) const;
  static DemonstrationIndex load(const std::filesystem::path& dir);

 private:
  std::vector<IndexedSample> entries_;
  std::string model_id_;
};

/// Standalone vector-cache file pair, reusable outside the index.
struct VectorCacheFile {
  static void save(const std::filesystem::path& manifest_path,
                   const std::filesystem::path& vectors_path,
                   std::span<const std::pair<std::uint64_t, EmbeddingVector>> entries);
  static std::vector<std::pair<std::uint64_t, EmbeddingVector>> load(
      const std::filesystem::path& manifest_path, const std::filesystem::path& vectors_path);
};

std::string hash_to_hex(std::uint64_t hash);
std::uint64_t hash_from_hex(const std::string& hex);

}  // namespace spre
