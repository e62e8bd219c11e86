#pragma once

#include <string>
#include <vector>

#include "semharq/autodiff.hpp"

namespace semharq {

/// Checkpoint layout: "SEMHARQ-CKPT-1" header line, a parameter count
/// line, one "name dim0 dim1 ..." line per parameter, then the values as
/// flat little-endian float32 arrays in manifest order.
inline constexpr const char* kCheckpointMagic = "SEMHARQ-CKPT-1";

struct ManifestEntry {
    std::string name;
    std::vector<std::size_t> shape;
};

void save_checkpoint(const std::string& path, const std::vector<Var>& params);

/// Loads values into an existing parameter set; names and shapes must
/// match the manifest exactly.
void load_checkpoint(const std::string& path, const std::vector<Var>& params);

std::vector<ManifestEntry> read_checkpoint_manifest(const std::string& path);

}  // namespace semharq
