#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "topicflow/tensor/tensor.hpp"

namespace topicflow::tensor {

// Binary parameter snapshot, all integers and floats little-endian:
//   "TFW1" | u64 payload_bytes | u32 count |
//   count x ( u32 name_len | name | u32 rank | rank x u64 dim | f64 values... )

using TensorMap = std::map<std::string, Tensor>;

std::string encode_snapshot(const std::vector<const Param*>& params);
TensorMap decode_snapshot(const std::string& bytes, const std::string& source = "<memory>");

void save_snapshot(const std::filesystem::path& path, const std::vector<Param*>& params);
TensorMap load_snapshot(const std::filesystem::path& path);

/// Copies tensors into `params` by name; every parameter must be present with
/// a matching shape.
void restore_params(const TensorMap& tensors, const std::vector<Param*>& params,
                    const std::string& source);

}  // namespace topicflow::tensor
