#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pcgnet/autodiff.hpp"

namespace pcgnet::ad {

/// Parameter checkpoint: a one-line JSON manifest (entry names, shapes,
/// trainable flags, payload offsets, free-form metadata), '\n', then every
/// tensor as consecutive float32 values in manifest order.
struct Checkpoint {
  std::vector<Parameter> params;
  std::string metadata_json = "{}";

  const Parameter* find(const std::string& name) const;
};

void save_checkpoint(const std::filesystem::path& path, const std::vector<ParamPtr>& params,
                     const std::string& metadata_json = "{}");
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Copies checkpoint values into `targets`.
/// Without an allowlist every target must appear with an identical shape and
/// the checkpoint must hold nothing extra. With an allowlist only targets whose
/// name starts with one of the prefixes are loaded (each must exist with the
/// same shape); the rest are left untouched. Returns the names loaded.
std::vector<std::string> load_parameters(const Checkpoint& ckpt, const std::vector<ParamPtr>& targets,
                                         const std::vector<std::string>* allowlist = nullptr);

}  // namespace pcgnet::ad
