#include "amortss/nn/config.hpp"

#include <stdexcept>

namespace amortss::nn {

namespace {

void complete(std::vector<double>& v, int n, double fill, const char* what) {
  if (v.empty()) v.assign(n, fill);
  if (static_cast<int>(v.size()) != n) {
    throw std::invalid_argument(std::string("NetworkConfig: ") + what + " has the wrong length");
  }
}

}  // namespace

void NetworkConfig::validate_and_complete() {
  if (input_dim < 1 || conv_channels < 0 || rnn_hidden < 1 || rnn_layers < 1 ||
      head_hidden < 1 || n_state_outputs < 1 || aux_outputs < 0) {
    throw std::invalid_argument("NetworkConfig: sizes must be positive");
  }
  for (int w : conv_windows) {
    if (w < 1) throw std::invalid_argument("NetworkConfig: conv windows must be >= 1");
  }
  complete(input_offset, input_dim, 0.0, "input_offset");
  complete(input_scale, input_dim, 1.0, "input_scale");
  complete(target_offset, n_state_outputs, 0.0, "target_offset");
  complete(target_scale, n_state_outputs, 1.0, "target_scale");
  complete(aux_offset, aux_outputs, 0.0, "aux_offset");
  complete(aux_scale, aux_outputs, 1.0, "aux_scale");
  for (double s : input_scale)
    if (!(s > 0)) throw std::invalid_argument("NetworkConfig: input_scale must be positive");
  for (double s : target_scale)
    if (!(s > 0)) throw std::invalid_argument("NetworkConfig: target_scale must be positive");
  for (double s : aux_scale)
    if (!(s > 0)) throw std::invalid_argument("NetworkConfig: aux_scale must be positive");
}

int NetworkConfig::conv_output_dim() const {
  return input_dim + conv_channels * static_cast<int>(conv_windows.size());
}

void to_json(nlohmann::json& j, const NetworkConfig& c) {
  j = nlohmann::json{{"input_dim", c.input_dim},
                     {"conv_windows", c.conv_windows},
                     {"conv_channels", c.conv_channels},
                     {"rnn_hidden", c.rnn_hidden},
                     {"rnn_layers", c.rnn_layers},
                     {"head_hidden", c.head_hidden},
                     {"feature_skip", c.feature_skip},
                     {"n_state_outputs", c.n_state_outputs},
                     {"aux_outputs", c.aux_outputs},
                     {"input_offset", c.input_offset},
                     {"input_scale", c.input_scale},
                     {"target_offset", c.target_offset},
                     {"target_scale", c.target_scale},
                     {"aux_offset", c.aux_offset},
                     {"aux_scale", c.aux_scale}};
}

void from_json(const nlohmann::json& j, NetworkConfig& c) {
  NetworkConfig d;
  c.input_dim = j.value("input_dim", d.input_dim);
  c.conv_windows = j.value("conv_windows", d.conv_windows);
  c.conv_channels = j.value("conv_channels", d.conv_channels);
  c.rnn_hidden = j.value("rnn_hidden", d.rnn_hidden);
  c.rnn_layers = j.value("rnn_layers", d.rnn_layers);
  c.head_hidden = j.value("head_hidden", d.head_hidden);
  c.feature_skip = j.value("feature_skip", d.feature_skip);
  c.n_state_outputs = j.value("n_state_outputs", d.n_state_outputs);
  c.aux_outputs = j.value("aux_outputs", d.aux_outputs);
  c.input_offset = j.value("input_offset", std::vector<double>{});
  c.input_scale = j.value("input_scale", std::vector<double>{});
  c.target_offset = j.value("target_offset", std::vector<double>{});
  c.target_scale = j.value("target_scale", std::vector<double>{});
  c.aux_offset = j.value("aux_offset", std::vector<double>{});
  c.aux_scale = j.value("aux_scale", std::vector<double>{});
  c.validate_and_complete();
}

}  // namespace amortss::nn
