#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace feasopf::nn {

/// On-disk layout:
///   "FEASOPF-CKPT-1\n"
///   <header JSON, single line>\n
///   uint64 little-endian value count
///   value count x float64 little-endian
inline constexpr const char* kCheckpointMagic = "FEASOPF-CKPT-1";

struct Checkpoint {
  nlohmann::json header;
  std::vector<double> blob;
};

void write_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::string& path);

}  // namespace feasopf::nn
