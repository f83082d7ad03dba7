#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "spre/types.hpp"

namespace spre {

// One JSON object per line, UTF-8, field names exactly as the type field names.
// Lines carry no trailing whitespace; files end with a final newline.

std::string to_jsonl(const RelationDef& rel);
std::string to_jsonl(const SemanticGroup& group);
std::string to_jsonl(const SyntheticSample& sample);
std::string to_jsonl(const TestInstance& instance);

RelationDef relation_from_jsonl(const std::string& line);
SemanticGroup group_from_jsonl(const std::string& line);
SyntheticSample sample_from_jsonl(const std::string& line);
TestInstance instance_from_jsonl(const std::string& line);

void save_groups(const std::filesystem::path& path, std::span<const SemanticGroup> groups);
void save_samples(const std::filesystem::path& path, std::span<const SyntheticSample> samples);

std::vector<SemanticGroup> load_groups(const std::filesystem::path& path);
std::vector<SyntheticSample> load_samples(const std::filesystem::path& path);

/// Writes content to "<path>.partial" then renames onto path. A crash or a
/// thrown error between the two steps leaves the .partial file behind and the
/// final path untouched.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

/// Splits file content into non-empty lines (1-based numbering preserved via
/// the second member).
std::vector<std::pair<std::string, std::size_t>> read_jsonl_lines(const std::filesystem::path& path);

}  // namespace spre
