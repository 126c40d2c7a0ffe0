#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "amortss/core/rng.hpp"
#include "amortss/mcmc/samplers.hpp"
#include "amortss/nn/checkpoint.hpp"
#include "amortss/train/trainer.hpp"
#include "json.hpp"

namespace amortss::bench {

/// Hex digest of the network config and parameters of a checkpoint.
std::string fingerprint(const nn::Checkpoint& ck);

struct MetricsReport {
  std::string model;
  int n_runs = 0;
  double nll = 0, nll_se2 = 0;
  double mse = 0, mse_se2 = 0;
  double coverage = 0;
  double baseline_mse = 0;
  int timing_T = 0;
  int timing_calls = 0;
  double seconds_per_call = 0;  // mean over calls, forward pass only
  double seconds_max = 0;
  std::string fingerprint;
};

void to_json(nlohmann::json& j, const MetricsReport& r);
void from_json(const nlohmann::json& j, MetricsReport& r);
void save_report(const MetricsReport& r, const std::filesystem::path& path);
MetricsReport load_report(const std::filesystem::path& path);

/// held_out_eval on `n_runs` fresh series plus forward-pass timing on
/// `timing_calls` series of length `timing_T` (the trained midpoint when 0).
/// Throws std::invalid_argument when the checkpoint was trained for another
/// model and EmptyBenchmarkError when n_runs is 0.
MetricsReport bench_metrics(const nn::Checkpoint& ck, const std::string& model, int n_runs,
                            RngStream& rng, int timing_T = 0, int timing_calls = 10);

struct AgreementReport {
  std::string model;
  int n_series = 0;
  int T = 0;
  /// Per series, averaged over state columns.
  std::vector<double> correlation;
  std::vector<double> mean_abs_diff;
  std::vector<double> std_ratio;  // median over t of NPE std / MCMC std
  std::vector<double> npe_coverage;
  std::vector<double> mcmc_coverage;
  double npe_seconds = 0;
  double mcmc_seconds = 0;

  double mean_correlation() const;
  double mean_npe_coverage() const;
  double mean_mcmc_coverage() const;
};

void to_json(nlohmann::json& j, const AgreementReport& r);

/// Simulates `n_series` datasets of length T with known states and runs the
/// network and the matching MCMC sampler (SV or DSGE) on each. Series i uses
/// rng.derive("series", i), so results do not depend on `workers`.
AgreementReport bench_agreement(const nn::Checkpoint& ck, const mcmc::McmcOptions& opts,
                                int n_series, int T, RngStream& rng, int workers = 1);

/// Seasonal adjustment split by whether a break falls inside the retained
/// window, for the network and a classical moving-average decomposition.
struct SeasonalReport {
  int n_runs = 0;
  int n_with_shifts = 0;
  double full = 0, with_shifts = 0, without_shifts = 0;
  double ma_full = 0, ma_with_shifts = 0, ma_without_shifts = 0;
  std::vector<double> member_mse;
  std::vector<double> member_ma_mse;
  std::vector<std::uint8_t> has_break;
};

void to_json(nlohmann::json& j, const SeasonalReport& r);

SeasonalReport bench_seasonal(const nn::Checkpoint& ck, int n_runs, RngStream& rng);

/// Classical decomposition of a quarterly series: centred 2x4 moving-average
/// trend, quarter means of the detrended interior as seasonal factors
/// (centred to sum to zero), adjusted series = y - seasonal.
Eigen::VectorXd moving_average_adjust(const Eigen::VectorXd& y, int period = 4);

/// One method's marginal posterior for one series.
struct MethodPath {
  std::string method;
  Eigen::VectorXd mean;
  Eigen::VectorXd std;
};

struct ComparisonSeries {
  std::string id;
  Eigen::VectorXd observed;
  Eigen::VectorXd truth;  // empty when unknown
  std::vector<MethodPath> methods;
};

/// Header of the comparison CSV, one row per series, method and time step.
inline constexpr const char* kComparisonHeader = "series,method,t,observed,truth,mean,std";

void export_comparison_csv(const std::vector<ComparisonSeries>& series,
                           const std::filesystem::path& path);
std::vector<ComparisonSeries> read_comparison_csv(const std::filesystem::path& path);

/// Line chart of every method's mean with a +-2 std band, plus the truth
/// when present.
std::string render_svg(const ComparisonSeries& series, int width = 800, int height = 360);
void write_svg(const ComparisonSeries& series, const std::filesystem::path& path);

}  // namespace amortss::bench
