#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace amortss::nn {

/// Shape of the conv-features + bidirectional GRU + per-time MLP stack.
///
/// Inputs are normalized as (x - input_offset) / input_scale per column
/// and outputs are mapped back with target_offset / target_scale (and the
/// aux_* pair for the auxiliary heads), so the trainable part always works
/// on unit-scale numbers.
struct NetworkConfig {
  int input_dim = 1;
  std::vector<int> conv_windows{4, 8, 16};
  int conv_channels = 8;
  int rnn_hidden = 64;
  int rnn_layers = 1;
  int head_hidden = 64;
  /// Adds a linear map from the conv features (raw input included) straight
  /// to the mean outputs, so values far outside the range the recurrent
  /// state can represent still pass through.
  bool feature_skip = true;
  int n_state_outputs = 1;
  int aux_outputs = 0;

  std::vector<double> input_offset;
  std::vector<double> input_scale;
  std::vector<double> target_offset;
  std::vector<double> target_scale;
  std::vector<double> aux_offset;
  std::vector<double> aux_scale;

  /// Fills missing normalization vectors with identity values and throws
  /// std::invalid_argument for non-positive sizes or mismatched lengths.
  void validate_and_complete();

  int conv_output_dim() const;
  int head_output_dim() const { return 2 * (n_state_outputs + aux_outputs); }
};

void to_json(nlohmann::json& j, const NetworkConfig& c);
void from_json(const nlohmann::json& j, NetworkConfig& c);

}  // namespace amortss::nn
