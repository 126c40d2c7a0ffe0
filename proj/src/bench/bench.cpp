#include "amortss/bench/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "amortss/core/csv.hpp"
#include "amortss/core/errors.hpp"
#include "amortss/nn/network.hpp"

namespace amortss::bench {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double correlation(const VectorXd& a, const VectorXd& b) {
  const VectorXd x = a.array() - a.mean(), y = b.array() - b.mean();
  const double den = std::sqrt(x.squaredNorm() * y.squaredNorm());
  if (den == 0.0) return x.squaredNorm() == y.squaredNorm() ? 1.0 : 0.0;
  return std::clamp(x.dot(y) / den, -1.0, 1.0);
}

double coverage(const MatrixXd& truth, const MatrixXd& mean, const MatrixXd& sd) {
  return ((truth - mean).array().abs() <= 2.0 * sd.array()).cast<double>().mean();
}

double median(std::vector<double> v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  return 0.5 * (*mid + *std::max_element(v.begin(), mid));
}

// Runs f(i) for i in [0, n) on up to `workers` threads.
template <typename F>
void parallel_for(int n, int workers, F&& f) {
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

std::string fingerprint(const nn::Checkpoint& ck) {
  nlohmann::json j = ck.config;
  std::string bytes = j.dump();
  bytes.append(reinterpret_cast<const char*>(ck.params.data()),
               static_cast<std::size_t>(ck.params.size()) * sizeof(double));
  char out[17];
  std::snprintf(out, sizeof out, "%016llx",
                static_cast<unsigned long long>(nn::fnv1a64(bytes.data(), bytes.size())));
  return out;
}

void to_json(nlohmann::json& j, const MetricsReport& r) {
  j = {{"model", r.model},
       {"n_runs", r.n_runs},
       {"nll", r.nll},
       {"nll_se2", r.nll_se2},
       {"mse", r.mse},
       {"mse_se2", r.mse_se2},
       {"coverage", r.coverage},
       {"baseline_mse", r.baseline_mse},
       {"timing_T", r.timing_T},
       {"timing_calls", r.timing_calls},
       {"seconds_per_call", r.seconds_per_call},
       {"seconds_max", r.seconds_max},
       {"fingerprint", r.fingerprint}};
}

void from_json(const nlohmann::json& j, MetricsReport& r) {
  j.at("model").get_to(r.model);
  j.at("n_runs").get_to(r.n_runs);
  j.at("nll").get_to(r.nll);
  j.at("nll_se2").get_to(r.nll_se2);
  j.at("mse").get_to(r.mse);
  j.at("mse_se2").get_to(r.mse_se2);
  j.at("coverage").get_to(r.coverage);
  j.at("baseline_mse").get_to(r.baseline_mse);
  j.at("timing_T").get_to(r.timing_T);
  j.at("timing_calls").get_to(r.timing_calls);
  j.at("seconds_per_call").get_to(r.seconds_per_call);
  j.at("seconds_max").get_to(r.seconds_max);
  j.at("fingerprint").get_to(r.fingerprint);
}

void save_report(const MetricsReport& r, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << nlohmann::json(r).dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

MetricsReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return nlohmann::json::parse(in).get<MetricsReport>();
}

MetricsReport bench_metrics(const nn::Checkpoint& ck, const std::string& model, int n_runs,
                            RngStream& rng, int timing_T, int timing_calls) {
  const train::TrainConfig cfg = train::config_of(ck);
  if (train::parse_model(model) != train::parse_model(cfg.model)) {
    throw std::invalid_argument("bench_metrics: checkpoint was trained for '" + cfg.model +
                                "', not '" + model + "'");
  }
  if (n_runs < 1) throw EmptyBenchmarkError();
  MetricsReport r;
  r.model = cfg.model;
  r.fingerprint = fingerprint(ck);
  auto eval_rng = rng.derive("eval");
  const auto ev = train::held_out_eval(ck, n_runs, eval_rng);
  r.n_runs = ev.n;
  r.nll = ev.nll;
  r.nll_se2 = ev.nll_se2;
  r.mse = ev.mse;
  r.mse_se2 = ev.mse_se2;
  r.coverage = ev.coverage;
  r.baseline_mse = ev.baseline_mse;

  r.timing_T = timing_T > 0 ? timing_T : (cfg.T_lb + cfg.T_ub) / 2;
  r.timing_calls = std::max(1, timing_calls);
  auto timing_rng = rng.derive("timing");
  const auto problem = train::make_eval_problem(cfg, r.timing_calls, timing_rng);
  const train::Batch b = problem->simulate(r.timing_T, r.timing_calls, timing_rng);
  const nn::Network net(ck.config);
  double total = 0.0;
  for (int i = 0; i < r.timing_calls; ++i) {
    const MatrixXd x = nn::unpack_member(b.x, b.T, b.B, i);
    const auto t0 = std::chrono::steady_clock::now();
    const auto post = net.predict(ck.params, x);
    const double s = seconds_since(t0);
    if (!post.mean.allFinite()) throw NumericalError("bench_metrics: non-finite posterior");
    total += s;
    r.seconds_max = std::max(r.seconds_max, s);
  }
  r.seconds_per_call = total / r.timing_calls;
  return r;
}

double AgreementReport::mean_correlation() const { return mean_of(correlation); }
double AgreementReport::mean_npe_coverage() const { return mean_of(npe_coverage); }
double AgreementReport::mean_mcmc_coverage() const { return mean_of(mcmc_coverage); }

void to_json(nlohmann::json& j, const AgreementReport& r) {
  j = {{"model", r.model},
       {"n_series", r.n_series},
       {"T", r.T},
       {"correlation", r.correlation},
       {"mean_abs_diff", r.mean_abs_diff},
       {"std_ratio", r.std_ratio},
       {"npe_coverage", r.npe_coverage},
       {"mcmc_coverage", r.mcmc_coverage},
       {"mean_correlation", r.mean_correlation()},
       {"mean_npe_coverage", r.mean_npe_coverage()},
       {"mean_mcmc_coverage", r.mean_mcmc_coverage()},
       {"npe_seconds", r.npe_seconds},
       {"mcmc_seconds", r.mcmc_seconds}};
}

AgreementReport bench_agreement(const nn::Checkpoint& ck, const mcmc::McmcOptions& opts,
                                int n_series, int T, RngStream& rng, int workers) {
  if (n_series < 1) throw EmptyBenchmarkError();
  const train::TrainConfig cfg = train::config_of(ck);
  const auto id = train::parse_model(cfg.model);
  if (id == train::ModelId::Sa) {
    throw std::invalid_argument("bench_agreement: no MCMC sampler for the seasonal model");
  }
  const auto problem = train::make_eval_problem(cfg, n_series, rng);
  const nn::Network net(ck.config);

  AgreementReport r;
  r.model = cfg.model;
  r.n_series = n_series;
  r.T = T;
  const auto n = static_cast<std::size_t>(n_series);
  r.correlation.resize(n);
  r.mean_abs_diff.resize(n);
  r.std_ratio.resize(n);
  r.npe_coverage.resize(n);
  r.mcmc_coverage.resize(n);
  std::vector<double> npe_s(n), mcmc_s(n);

  parallel_for(n_series, workers, [&](int i) {
    auto sr = rng.derive("series", static_cast<std::uint64_t>(i));
    const train::Batch b = problem->simulate(T, 1, sr);
    const MatrixXd x = nn::unpack_member(b.x, b.T, 1, 0);
    const MatrixXd truth = nn::unpack_member(b.target, b.T, 1, 0);

    auto t0 = std::chrono::steady_clock::now();
    const auto npe = net.predict(ck.params, x);
    npe_s[i] = seconds_since(t0);

    auto mr = sr.derive("mcmc");
    t0 = std::chrono::steady_clock::now();
    mcmc::McmcChain chain;
    if (id == train::ModelId::Sv) {
      chain = mcmc::mcmc_sv_log_abs(x.col(0), opts, mr);
    } else {
      mcmc::DsgeMcmcOptions d;
      static_cast<mcmc::McmcOptions&>(d) = opts;
      chain = mcmc::mcmc_dsge(TimeSeries(x), d, mr);
    }
    mcmc_s[i] = seconds_since(t0);

    const Eigen::Index K = truth.cols();
    double corr = 0.0;
    std::vector<double> ratios;
    for (Eigen::Index k = 0; k < K; ++k) {
      corr += correlation(npe.mean.col(k), chain.state_mean.col(k)) / static_cast<double>(K);
      for (Eigen::Index t = 0; t < T; ++t)
        ratios.push_back(npe.std(t, k) / std::max(chain.state_std(t, k), 1e-300));
    }
    r.correlation[i] = corr;
    r.mean_abs_diff[i] = (npe.mean - chain.state_mean).cwiseAbs().mean();
    r.std_ratio[i] = median(std::move(ratios));
    r.npe_coverage[i] = coverage(truth, npe.mean, npe.std);
    r.mcmc_coverage[i] = coverage(truth, chain.state_mean, chain.state_std);
  });
  for (std::size_t i = 0; i < n; ++i) {
    r.npe_seconds += npe_s[i];
    r.mcmc_seconds += mcmc_s[i];
  }
  return r;
}

VectorXd moving_average_adjust(const VectorXd& y, int period) {
  const Eigen::Index T = y.size();
  if (period < 2 || period % 2 != 0) throw std::invalid_argument("moving_average_adjust: even period >= 2");
  const Eigen::Index h = period / 2;
  if (T < period + 1) return y;
  std::vector<double> sum(static_cast<std::size_t>(period), 0.0);
  std::vector<int> count(static_cast<std::size_t>(period), 0);
  for (Eigen::Index t = h; t + h < T; ++t) {
    // 2 x period centred average: half weights on the two end points.
    double trend = 0.5 * (y[t - h] + y[t + h]);
    for (Eigen::Index k = -h + 1; k < h; ++k) trend += y[t + k];
    trend /= static_cast<double>(period);
    sum[static_cast<std::size_t>(t % period)] += y[t] - trend;
    ++count[static_cast<std::size_t>(t % period)];
  }
  std::vector<double> factor(static_cast<std::size_t>(period));
  double centre = 0.0;
  for (std::size_t q = 0; q < factor.size(); ++q) {
    factor[q] = count[q] > 0 ? sum[q] / count[q] : 0.0;
    centre += factor[q] / period;
  }
  VectorXd out(T);
  for (Eigen::Index t = 0; t < T; ++t) out[t] = y[t] - (factor[static_cast<std::size_t>(t % period)] - centre);
  return out;
}

void to_json(nlohmann::json& j, const SeasonalReport& r) {
  j = {{"n_runs", r.n_runs},
       {"n_with_shifts", r.n_with_shifts},
       {"npe", {{"full", r.full}, {"with_shifts", r.with_shifts}, {"without_shifts", r.without_shifts}}},
       {"moving_average",
        {{"full", r.ma_full}, {"with_shifts", r.ma_with_shifts}, {"without_shifts", r.ma_without_shifts}}}};
}

SeasonalReport bench_seasonal(const nn::Checkpoint& ck, int n_runs, RngStream& rng) {
  if (n_runs < 1) throw EmptyBenchmarkError();
  const train::TrainConfig cfg = train::config_of(ck);
  if (train::parse_model(cfg.model) != train::ModelId::Sa) {
    throw std::invalid_argument("bench_seasonal: checkpoint is not a seasonal model");
  }
  const train::SeasonalProblem problem(cfg.seasonal);
  SeasonalReport r;
  int done = 0;
  for (std::uint64_t chunk = 0; done < n_runs; ++chunk) {
    auto cr = rng.derive("chunk", chunk);
    const int len = sim::seasonal_draw_length(cfg.seasonal, cr);
    const int want = std::min(100, n_runs - done);
    const train::Batch b = problem.simulate(len, (want + 1) / 2, cr);
    const auto scored = train::score_batch(ck, b);
    const int keep = std::min<int>(want, static_cast<int>(b.B));
    for (int i = 0; i < keep; ++i) {
      const VectorXd y = nn::unpack_member(b.x, b.T, b.B, i).col(0);
      const VectorXd sa = nn::unpack_member(b.target, b.T, b.B, i).col(0);
      r.member_mse.push_back(scored.member_mse[static_cast<std::size_t>(i)]);
      r.member_ma_mse.push_back((moving_average_adjust(y) - sa).squaredNorm() / static_cast<double>(b.T));
      r.has_break.push_back(b.has_break[static_cast<std::size_t>(i)]);
    }
    done += keep;
  }
  r.n_runs = done;
  double f = 0, w = 0, wo = 0, mf = 0, mw = 0, mwo = 0;
  for (std::size_t i = 0; i < r.member_mse.size(); ++i) {
    f += r.member_mse[i];
    mf += r.member_ma_mse[i];
    if (r.has_break[i]) {
      ++r.n_with_shifts;
      w += r.member_mse[i];
      mw += r.member_ma_mse[i];
    } else {
      wo += r.member_mse[i];
      mwo += r.member_ma_mse[i];
    }
  }
  const int without = r.n_runs - r.n_with_shifts;
  r.full = f / r.n_runs;
  r.ma_full = mf / r.n_runs;
  r.with_shifts = r.n_with_shifts ? w / r.n_with_shifts : NAN;
  r.ma_with_shifts = r.n_with_shifts ? mw / r.n_with_shifts : NAN;
  r.without_shifts = without ? wo / without : NAN;
  r.ma_without_shifts = without ? mwo / without : NAN;
  return r;
}

void export_comparison_csv(const std::vector<ComparisonSeries>& series,
                           const std::filesystem::path& path) {
  if (series.empty()) throw EmptyBenchmarkError();
  CsvTable table;
  table.header = {"series", "method", "t", "observed", "truth", "mean", "std"};
  for (const auto& s : series) {
    for (const auto& m : s.methods) {
      if (m.mean.size() != s.observed.size() || m.std.size() != s.observed.size() ||
          (s.truth.size() != 0 && s.truth.size() != s.observed.size())) {
        throw DimensionMismatchError("export_comparison_csv: length mismatch in series " + s.id);
      }
      for (Eigen::Index t = 0; t < s.observed.size(); ++t) {
        table.rows.push_back({s.id, m.method, std::to_string(t + 1), format_double(s.observed[t]),
                              s.truth.size() ? format_double(s.truth[t]) : std::string(),
                              format_double(m.mean[t]), format_double(m.std[t])});
      }
    }
  }
  write_table(path, table);
}

std::vector<ComparisonSeries> read_comparison_csv(const std::filesystem::path& path) {
  const CsvTable table = read_table(path);
  const std::vector<std::string> expected{"series", "method", "t", "observed", "truth", "mean", "std"};
  if (table.header != expected) throw std::runtime_error("comparison CSV: unexpected header");

  // Collect values per (series, method) in file order.
  struct Col {
    std::vector<double> observed, truth, mean, std;
  };
  std::vector<ComparisonSeries> out;
  std::vector<std::vector<Col>> cols;
  std::map<std::string, std::size_t> series_index;
  for (const auto& row : table.rows) {
    if (row.size() != expected.size()) throw std::runtime_error("comparison CSV: bad row width");
    auto [it, fresh] = series_index.try_emplace(row[0], out.size());
    if (fresh) {
      out.push_back({row[0], {}, {}, {}});
      cols.emplace_back();
    }
    auto& s = out[it->second];
    auto& c = cols[it->second];
    std::size_t m = 0;
    while (m < s.methods.size() && s.methods[m].method != row[1]) ++m;
    if (m == s.methods.size()) {
      s.methods.push_back({row[1], {}, {}});
      c.emplace_back();
    }
    const auto t = static_cast<std::size_t>(std::stoul(row[2]));
    if (t != c[m].mean.size() + 1) throw std::runtime_error("comparison CSV: rows out of order");
    c[m].observed.push_back(parse_double(row[3]));
    if (!row[4].empty()) c[m].truth.push_back(parse_double(row[4]));
    c[m].mean.push_back(parse_double(row[5]));
    c[m].std.push_back(parse_double(row[6]));
  }
  auto to_vec = [](const std::vector<double>& v) {
    return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())).eval();
  };
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].observed = to_vec(cols[i][0].observed);
    out[i].truth = to_vec(cols[i][0].truth);
    for (std::size_t m = 0; m < out[i].methods.size(); ++m) {
      out[i].methods[m].mean = to_vec(cols[i][m].mean);
      out[i].methods[m].std = to_vec(cols[i][m].std);
    }
  }
  return out;
}

std::string render_svg(const ComparisonSeries& s, int width, int height) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  const Eigen::Index T = s.methods.empty() ? s.truth.size() : s.methods.front().mean.size();
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& m : s.methods) {
    lo = std::min(lo, (m.mean - 2.0 * m.std).minCoeff());
    hi = std::max(hi, (m.mean + 2.0 * m.std).maxCoeff());
  }
  if (s.truth.size()) {
    lo = std::min(lo, s.truth.minCoeff());
    hi = std::max(hi, s.truth.maxCoeff());
  }
  if (!(hi > lo)) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double pad = 30.0;
  auto px = [&](Eigen::Index t) { return pad + (width - 2 * pad) * (T > 1 ? double(t) / double(T - 1) : 0.5); };
  auto py = [&](double v) { return height - pad - (height - 2 * pad) * (v - lo) / (hi - lo); };
  auto line = [&](const VectorXd& v) {
    std::ostringstream o;
    for (Eigen::Index t = 0; t < v.size(); ++t) o << (t ? " " : "") << px(t) << ',' << py(v[t]);
    return o.str();
  };

  std::ostringstream svg;
  svg.precision(5);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << pad << "\" y=\"18\" font-family=\"sans-serif\" font-size=\"13\">" << s.id
      << "</text>\n";
  for (std::size_t m = 0; m < s.methods.size(); ++m) {
    const auto& mp = s.methods[m];
    const char* colour = palette[m % 5];
    std::ostringstream band;
    for (Eigen::Index t = 0; t < T; ++t) band << px(t) << ',' << py(mp.mean[t] + 2 * mp.std[t]) << ' ';
    for (Eigen::Index t = T - 1; t >= 0; --t) band << px(t) << ',' << py(mp.mean[t] - 2 * mp.std[t]) << ' ';
    svg << "<polygon points=\"" << band.str() << "\" fill=\"" << colour << "\" fill-opacity=\"0.15\"/>\n"
        << "<polyline points=\"" << line(mp.mean) << "\" fill=\"none\" stroke=\"" << colour
        << "\" stroke-width=\"1.5\"/>\n"
        << "<text x=\"" << width - 120 << "\" y=\"" << 18 + 15 * m
        << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" << colour << "\">" << mp.method
        << "</text>\n";
  }
  if (s.truth.size()) {
    svg << "<polyline points=\"" << line(s.truth)
        << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\" stroke-dasharray=\"4 2\"/>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void write_svg(const ComparisonSeries& series, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << render_svg(series);
}

}  // namespace amortss::bench
