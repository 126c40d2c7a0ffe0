#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "amortss/nn/adam.hpp"
#include "amortss/nn/config.hpp"
#include "json.hpp"

namespace amortss::nn {

/// Everything needed to resume training or run inference.
///
/// `metadata` carries the model id, seed, loss history and any
/// model-specific inference settings as free-form JSON.
struct Checkpoint {
  NetworkConfig config;
  Eigen::VectorXd params;
  AdamState adam;
  std::int64_t schedule_position = 0;
  nlohmann::json metadata = nlohmann::json::object();
};

/// Binary layout (all integers and floats little-endian):
///   "AMSSCKPT" | u32 version | u64 len + config JSON
///   | u64 len + metadata JSON | i64 schedule position | i64 adam step
///   | u32 block count | blocks: u32 name len, name, u64 rows, u64 cols, f64 data (column-major)
///   | u64 FNV-1a hash of every preceding byte
/// Network tensors are stored under their registry names, followed by
/// "adam.m" and "adam.v" when the optimizer has state.
std::string serialize_checkpoint(const Checkpoint& ck);
Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

std::uint64_t fnv1a64(const char* data, std::size_t n);

class CheckpointFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace amortss::nn
