#pragma once

#include "acd/nn.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace acd {

/// On-disk layout (all integers and floats little-endian):
///   "ACDT" | u32 version | u32 meta_len | meta bytes | u32 count |
///   count x (u32 name_len | name | u32 rank | u64 dims[rank] | u64 offset) |
///   float64 payload (offset counted in bytes from the payload start)
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  struct Entry {
    std::string name;
    Shape shape;
    std::vector<double> data;
  };

  std::string metadata;
  std::vector<Entry> entries;

  static Checkpoint capture(const ParameterStore& store, std::string metadata);
  /// Copies entries into the store's tensors by name; every store tensor must
  /// be present with a matching shape.
  void restore(ParameterStore& store) const;

  std::vector<std::uint8_t> serialize() const;
  static Checkpoint deserialize(const std::vector<std::uint8_t>& bytes);

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);
};

class checkpoint_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace acd
