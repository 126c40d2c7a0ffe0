#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "amortss/core/types.hpp"
#include "amortss/nn/checkpoint.hpp"
#include "amortss/train/problem.hpp"
#include "json.hpp"

namespace amortss::train {

struct TrainConfig {
  std::string model = "sv";
  std::int64_t n_steps = 5000;
  int batch = 100;
  int T_lb = 200;
  int T_ub = 400;
  double c = sim::kLogOffset;
  double aux_weight = 1.0;
  std::uint64_t seed = 1;

  std::int64_t checkpoint_every = 0;  // 0: only at the end
  std::string checkpoint_path;        // empty: never written by pretrain
  std::int64_t eval_every = 100;      // 0: no held-out curve
  int eval_series = 100;
  int eval_T = 0;                     // 0: midpoint of [T_lb, T_ub]
  int n_presim = 10'000;              // DSGE solution cache size
  int pilot_series = 1000;            // draws used to fit input/output scaling
  int queue_depth = 4;
  int workers = 1;

  nn::NetworkConfig network;
  sim::SeasonalConfig seasonal;
};

/// "desk" presets are sized for a CPU in well under an hour; "paper"
/// presets use the published batch, length and step counts.
TrainConfig preset(const std::string& model, const std::string& scale);

void to_json(nlohmann::json& j, const TrainConfig& c);
/// Missing keys keep the values already in `c`, so a file can override a preset.
void update_from_json(const nlohmann::json& j, TrainConfig& c);

struct StepRecord {
  std::int64_t step;  // 1-based
  double lr;
  double loss;
};

struct EvalResult {
  int n = 0;
  double nll = 0, nll_se2 = 0;  // mean per-element NLL, 2 standard errors
  double mse = 0, mse_se2 = 0;  // mean per-element squared error of the posterior mean
  double coverage = 0;          // share of states inside mean +- 2 std
  double baseline_mse = 0;      // best constant predictor per state on the same data
  std::vector<double> member_mse;
  std::vector<double> member_nll;
  std::vector<std::uint8_t> has_break;  // seasonal only
};

struct TrainReport {
  std::vector<double> loss;
  std::vector<double> lr;
  std::vector<std::int64_t> eval_steps;
  std::vector<double> eval_nll;
  std::int64_t retries = 0;
  double simulate_seconds = 0;  // summed over workers
  double optimize_seconds = 0;
  double eval_seconds = 0;
  double presim_seconds = 0;
  double presim_acceptance = 0;
};

struct TrainResult {
  nn::Checkpoint checkpoint;
  TrainReport report;
};

/// Builds the problem described by a config (DSGE presimulates its cache
/// from the config seed).
std::unique_ptr<Problem> make_problem(const TrainConfig& cfg);

/// Runs the simulate -> loss -> backward -> ADAM loop. Identical configs
/// give identical checkpoints regardless of `workers`.
TrainResult pretrain(const TrainConfig& cfg,
                     const std::function<void(const StepRecord&)>& on_step = {});

/// Posterior marginals for one observed series, applying the model's input
/// transform (log-abs for SV, none for DSGE, standardization for SA with
/// outputs mapped back to the input scale).
MarginalGaussianPosterior infer(const nn::Checkpoint& ck, const TimeSeries& series);

/// Problem used for held-out data. DSGE draws its own solution cache of
/// max(n_runs, 100) entries from rng.derive("presim") so evaluation never
/// reuses training parameter draws.
std::unique_ptr<Problem> make_eval_problem(const TrainConfig& cfg, int n_runs, const RngStream& rng);

/// Simulates `n_runs` fresh datasets (length `T`, or drawn from the trained
/// range when T = 0) and scores the checkpoint on them.
EvalResult held_out_eval(const nn::Checkpoint& ck, int n_runs, RngStream& rng, int T = 0);

/// Scores predictions for an already simulated batch.
EvalResult score_batch(const nn::Checkpoint& ck, const Batch& batch);

/// Training configuration stored in checkpoint metadata.
TrainConfig config_of(const nn::Checkpoint& ck);

/// Keeps freed memory in the process heap so per-step activation buffers
/// are reused instead of being mapped and faulted in afresh (glibc only).
void retain_heap_memory();

}  // namespace amortss::train
