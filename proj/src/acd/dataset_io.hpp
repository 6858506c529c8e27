#pragma once

#include "acd/graph.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace acd {

/// One JSON object per line:
///   {"edges":[[i,j],...],"feature_dim":d,"features":[...],"id":g,"labels":[...],"meta":{...},"n":N}
/// Doubles are written in shortest round-trip form, so reloading is bit-exact.
std::string graph_to_json_line(const LabeledGraph& g, std::size_t id);
LabeledGraph graph_from_json_line(const std::string& line);

void write_jsonl(const std::filesystem::path& path, const std::vector<LabeledGraph>& graphs);
std::vector<LabeledGraph> read_jsonl(const std::filesystem::path& path);

/// Binary cache ("ACDG" | u32 version | u64 count | records). Same content as
/// the JSONL file; faster to reload.
void write_binary(const std::filesystem::path& path, const std::vector<LabeledGraph>& graphs);
std::vector<LabeledGraph> read_binary(const std::filesystem::path& path);

/// Reads `path`, preferring the binary cache `path + ".bin"` when it exists.
std::vector<LabeledGraph> load_dataset(const std::filesystem::path& path);

}  // namespace acd
