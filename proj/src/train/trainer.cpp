#include "amortss/train/trainer.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <map>
#include <mutex>
#include <optional>
#include <thread>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "amortss/core/errors.hpp"
#include "amortss/core/transforms.hpp"
#include "amortss/nn/adam.hpp"
#include "amortss/nn/network.hpp"

namespace amortss::train {

using Eigen::Index;
using nn::RowMat;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

nlohmann::json seasonal_json(const sim::SeasonalConfig& s) {
  return {{"T_lb", s.T_lb},
          {"T_ub", s.T_ub},
          {"burn_in", s.burn_in},
          {"break_prob", s.break_prob},
          {"shift_prob", s.shift_prob},
          {"trigger", s.trigger == sim::BreakTrigger::Single ? "single" : "product"},
          {"seasonal_scale_multiplier", s.seasonal_scale_multiplier}};
}

void seasonal_update(const nlohmann::json& j, sim::SeasonalConfig& s) {
  s.T_lb = j.value("T_lb", s.T_lb);
  s.T_ub = j.value("T_ub", s.T_ub);
  s.burn_in = j.value("burn_in", s.burn_in);
  s.break_prob = j.value("break_prob", s.break_prob);
  s.shift_prob = j.value("shift_prob", s.shift_prob);
  if (j.contains("trigger")) {
    const std::string t = j.at("trigger");
    if (t == "single") {
      s.trigger = sim::BreakTrigger::Single;
    } else if (t == "product") {
      s.trigger = sim::BreakTrigger::Product;
    } else {
      throw std::invalid_argument("seasonal.trigger must be 'single' or 'product'");
    }
  }
  s.seasonal_scale_multiplier = j.value("seasonal_scale_multiplier", s.seasonal_scale_multiplier);
}

/// Batches keyed by step, produced by any number of workers and consumed in
/// step order. Producers block while they are more than `depth` steps ahead.
class OrderedBatchQueue {
 public:
  explicit OrderedBatchQueue(std::int64_t first, int depth) : next_(first), depth_(depth) {}

  void put(std::int64_t step, Batch b) {
    std::unique_lock lk(mu_);
    cv_.wait(lk, [&] { return step < next_ + depth_ || closed_; });
    if (closed_) return;
    ready_.emplace(step, std::move(b));
    cv_.notify_all();
  }

  /// Empty once closed without the next batch available.
  std::optional<Batch> take() {
    std::unique_lock lk(mu_);
    cv_.wait(lk, [&] { return ready_.count(next_) > 0 || closed_; });
    if (ready_.count(next_) == 0) return std::nullopt;
    Batch b = std::move(ready_.at(next_));
    ready_.erase(next_);
    ++next_;
    cv_.notify_all();
    return b;
  }

  void close() {
    std::lock_guard lk(mu_);
    closed_ = true;
    cv_.notify_all();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::map<std::int64_t, Batch> ready_;
  std::int64_t next_;
  int depth_;
  bool closed_ = false;
};

/// Draws T and simulates; numerical failures are retried on a fresh
/// sub-stream so a failed draw is never reused.
Batch simulate_step(const Problem& problem, const TrainConfig& cfg, RngStream rng,
                    std::atomic<std::int64_t>& retries) {
  for (std::uint64_t attempt = 0;; ++attempt) {
    auto r = attempt == 0 ? rng : rng.derive("retry", attempt);
    const int T = r.uniform_int(cfg.T_lb, cfg.T_ub);
    try {
      return problem.simulate(T, cfg.batch, r);
    } catch (const NumericalError&) {
      ++retries;
      if (attempt > 100) throw;
    }
  }
}

void apply_scaling(const Problem& problem, const TrainConfig& cfg, nn::NetworkConfig& net) {
  net.input_dim = problem.input_dim();
  net.n_state_outputs = problem.state_dim();
  net.aux_outputs = problem.aux_dim();
  if (problem.id() == ModelId::Sa || cfg.pilot_series <= 0) {
    net.input_offset.clear();
    net.input_scale.clear();
    net.target_offset.clear();
    net.target_scale.clear();
    net.aux_offset.clear();
    net.aux_scale.clear();
    return;
  }
  RngStream rng(cfg.seed, hash_tag("pilot"));
  const Batch pilot = problem.simulate((cfg.T_lb + cfg.T_ub) / 2, cfg.pilot_series, rng);
  const auto in = robust_scaling(pilot.x);
  const auto out = robust_scaling(pilot.target);
  net.input_offset = in.offset;
  net.input_scale = in.scale;
  net.target_offset = out.offset;
  net.target_scale = out.scale;
  if (problem.aux_dim() > 0) {
    const auto aux = robust_scaling(pilot.aux);
    net.aux_offset = aux.offset;
    net.aux_scale = aux.scale;
  }
}

nlohmann::json make_metadata(const TrainConfig& cfg) {
  nlohmann::json train;
  to_json(train, cfg);
  return {{"model", cfg.model}, {"seed", cfg.seed}, {"train", train}, {"loss", nlohmann::json::array()}};
}

}  // namespace

TrainConfig preset(const std::string& model, const std::string& scale) {
  parse_model(model);
  if (scale != "desk" && scale != "paper") {
    throw std::invalid_argument("preset scale must be 'desk' or 'paper'");
  }
  const bool paper = scale == "paper";
  TrainConfig c;
  c.model = model;
  c.batch = 100;
  if (model == "sv") {
    c.n_steps = paper ? 200'000 : 5'000;
    c.T_lb = paper ? 800 : 200;
    c.T_ub = paper ? 1200 : 400;
  } else if (model == "dsge") {
    c.n_steps = paper ? 500'000 : 5'000;
    c.T_lb = 180;
    c.T_ub = 200;
    c.aux_weight = 1.0;
    c.n_presim = paper ? 1'000'000 : 10'000;
    // Log-volatilities are far from linear in the observables; a linear
    // path extrapolates badly on extreme series.
    c.network.feature_skip = false;
  } else {
    c.n_steps = paper ? 100'000 : 3'000;
    c.T_lb = 40;
    c.T_ub = 80;
    c.seasonal.T_lb = 40;
    c.seasonal.T_ub = 80;
  }
  if (paper) c.eval_every = 1000;
  return c;
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"model", c.model},
       {"n_steps", c.n_steps},
       {"batch", c.batch},
       {"T_lb", c.T_lb},
       {"T_ub", c.T_ub},
       {"c", c.c},
       {"aux_weight", c.aux_weight},
       {"seed", c.seed},
       {"checkpoint_every", c.checkpoint_every},
       {"checkpoint_path", c.checkpoint_path},
       {"eval_every", c.eval_every},
       {"eval_series", c.eval_series},
       {"eval_T", c.eval_T},
       {"n_presim", c.n_presim},
       {"pilot_series", c.pilot_series},
       {"queue_depth", c.queue_depth},
       {"workers", c.workers},
       {"network", c.network},
       {"seasonal", seasonal_json(c.seasonal)}};
}

void update_from_json(const nlohmann::json& j, TrainConfig& c) {
  c.model = j.value("model", c.model);
  c.n_steps = j.value("n_steps", c.n_steps);
  c.batch = j.value("batch", c.batch);
  c.T_lb = j.value("T_lb", c.T_lb);
  c.T_ub = j.value("T_ub", c.T_ub);
  c.c = j.value("c", c.c);
  c.aux_weight = j.value("aux_weight", c.aux_weight);
  c.seed = j.value("seed", c.seed);
  c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  c.checkpoint_path = j.value("checkpoint_path", c.checkpoint_path);
  c.eval_every = j.value("eval_every", c.eval_every);
  c.eval_series = j.value("eval_series", c.eval_series);
  c.eval_T = j.value("eval_T", c.eval_T);
  c.n_presim = j.value("n_presim", c.n_presim);
  c.pilot_series = j.value("pilot_series", c.pilot_series);
  c.queue_depth = j.value("queue_depth", c.queue_depth);
  c.workers = j.value("workers", c.workers);
  if (j.contains("network")) {
    nlohmann::json merged = c.network;
    merged.update(j.at("network"));
    c.network = merged.get<nn::NetworkConfig>();
  }
  if (j.contains("seasonal")) seasonal_update(j.at("seasonal"), c.seasonal);
}

TrainConfig config_of(const nn::Checkpoint& ck) {
  TrainConfig c;
  if (ck.metadata.contains("train")) update_from_json(ck.metadata.at("train"), c);
  c.model = ck.metadata.value("model", c.model);
  return c;
}

std::unique_ptr<Problem> make_problem(const TrainConfig& cfg) {
  switch (parse_model(cfg.model)) {
    case ModelId::Sv:
      return std::make_unique<SvProblem>(cfg.c);
    case ModelId::Dsge: {
      RngStream rng(cfg.seed, hash_tag("presim"));
      auto cache = std::make_shared<const sim::DsgeSolutionCache>(
          sim::dsge_presimulate(static_cast<std::size_t>(cfg.n_presim), rng));
      return std::make_unique<DsgeProblem>(std::move(cache), cfg.c);
    }
    case ModelId::Sa: {
      auto s = cfg.seasonal;
      s.T_lb = cfg.T_lb;
      s.T_ub = cfg.T_ub;
      return std::make_unique<SeasonalProblem>(s);
    }
  }
  throw UnknownModelError(cfg.model);
}

void retain_heap_memory() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_MAX, 0);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

TrainResult pretrain(const TrainConfig& cfg, const std::function<void(const StepRecord&)>& on_step) {
  if (cfg.n_steps < 0 || cfg.batch < 1 || cfg.T_lb < 1 || cfg.T_ub < cfg.T_lb) {
    throw std::invalid_argument("pretrain: invalid step count, batch size or length range");
  }
  retain_heap_memory();
  TrainResult result;
  TrainReport& report = result.report;

  auto t0 = Clock::now();
  const auto problem = make_problem(cfg);
  if (const auto* d = dynamic_cast<const DsgeProblem*>(problem.get())) {
    report.presim_seconds = seconds_since(t0);
    report.presim_acceptance = d->cache().acceptance_rate();
  }

  nn::Checkpoint& ck = result.checkpoint;
  ck.config = cfg.network;
  apply_scaling(*problem, cfg, ck.config);
  const nn::Network net(ck.config);
  ck.config = net.config();
  {
    RngStream init(cfg.seed, hash_tag("init"));
    ck.params = net.init_params(init);
  }
  ck.metadata = make_metadata(cfg);

  // Fixed held-out set for the learning curve, on its own stream family.
  std::vector<Batch> eval_set;
  if (cfg.eval_every > 0 && cfg.eval_series > 0) {
    RngStream ev(cfg.seed, hash_tag("eval"));
    std::unique_ptr<Problem> eval_problem;
    const Problem* p = problem.get();
    if (problem->id() == ModelId::Dsge) {
      auto cache_rng = ev.derive("presim");
      auto cache = std::make_shared<const sim::DsgeSolutionCache>(
          sim::dsge_presimulate(static_cast<std::size_t>(std::max(cfg.eval_series, 100)), cache_rng));
      eval_problem = std::make_unique<DsgeProblem>(std::move(cache), cfg.c);
      p = eval_problem.get();
    }
    const int T = cfg.eval_T > 0 ? cfg.eval_T : (cfg.T_lb + cfg.T_ub) / 2;
    const int per = problem->id() == ModelId::Sa ? std::max(1, cfg.eval_series / 2) : cfg.eval_series;
    auto r = ev.derive("batch", 0);
    eval_set.push_back(p->simulate(T, per, r));
  }
  const auto eval_nll = [&] {
    const auto te = Clock::now();
    double sum = 0.0;
    Index n = 0;
    for (const auto& b : eval_set) {
      const double l = net.loss(ck.params, b.x, b.target, b.aux, b.T, b.B, 0.0, nullptr);
      sum += l * static_cast<double>(b.T * b.B);
      n += b.T * b.B;
    }
    report.eval_seconds += seconds_since(te);
    return sum / static_cast<double>(n);
  };

  const RngStream train_root(cfg.seed, hash_tag("train"));
  std::atomic<std::int64_t> retries{0};
  std::atomic<std::int64_t> next_step{1};
  std::atomic<long long> sim_ns{0};
  OrderedBatchQueue queue(1, std::max(1, cfg.queue_depth));
  std::vector<std::thread> workers;
  std::exception_ptr worker_error;
  std::mutex err_mu;
  for (int w = 0; w < std::max(1, cfg.workers) && cfg.n_steps > 0; ++w) {
    workers.emplace_back([&] {
      try {
        for (;;) {
          const std::int64_t s = next_step++;
          if (s > cfg.n_steps) return;
          const auto ts = Clock::now();
          Batch b = simulate_step(*problem, cfg, train_root.derive("batch", static_cast<std::uint64_t>(s)),
                                  retries);
          sim_ns += std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - ts).count();
          queue.put(s, std::move(b));
        }
      } catch (...) {
        {
          std::lock_guard lk(err_mu);
          worker_error = std::current_exception();
        }
        queue.close();
      }
    });
  }

  const auto record_eval = [&](std::int64_t step) {
    if (eval_set.empty()) return;
    report.eval_steps.push_back(step);
    report.eval_nll.push_back(eval_nll());
  };
  record_eval(0);

  Eigen::VectorXd grad;
  nn::AdamState& adam = ck.adam;
  try {
    for (std::int64_t step = 1; step <= cfg.n_steps; ++step) {
      std::optional<Batch> next = queue.take();
      if (!next) {
        std::lock_guard lk(err_mu);
        std::rethrow_exception(worker_error);
      }
      const Batch& b = *next;
      const auto to = Clock::now();
      const double lr = nn::lr_schedule(cfg.model, step);
      const double loss = net.loss(ck.params, b.x, b.target, b.aux, b.T, b.B, cfg.aux_weight, &grad);
      if (!std::isfinite(loss) || !grad.allFinite()) {
        throw NumericalError("pretrain: non-finite loss or gradient at step " + std::to_string(step));
      }
      nn::adam_step(ck.params, grad, adam, lr);
      ck.schedule_position = step;
      report.optimize_seconds += seconds_since(to);
      report.loss.push_back(loss);
      report.lr.push_back(lr);
      if (on_step) on_step({step, lr, loss});
      if (cfg.eval_every > 0 && step % cfg.eval_every == 0) record_eval(step);
      if (cfg.checkpoint_every > 0 && step % cfg.checkpoint_every == 0 && !cfg.checkpoint_path.empty()) {
        ck.metadata["loss"] = report.loss;
        nn::save_checkpoint(ck, cfg.checkpoint_path);
      }
    }
  } catch (...) {
    queue.close();
    for (auto& t : workers) t.join();
    throw;
  }
  for (auto& t : workers) t.join();

  report.retries = retries.load();
  report.simulate_seconds = static_cast<double>(sim_ns.load()) * 1e-9;
  ck.metadata["loss"] = report.loss;
  ck.metadata["retries"] = report.retries;
  ck.metadata["eval_steps"] = report.eval_steps;
  ck.metadata["eval_nll"] = report.eval_nll;
  if (!cfg.checkpoint_path.empty()) nn::save_checkpoint(ck, cfg.checkpoint_path);
  return result;
}

MarginalGaussianPosterior infer(const nn::Checkpoint& ck, const TimeSeries& series) {
  const TrainConfig cfg = config_of(ck);
  const nn::Network net(ck.config);
  const auto& y = series.values();
  if (y.cols() != ck.config.input_dim) {
    throw DimensionMismatchError("infer: series has " + std::to_string(y.cols()) +
                                 " columns but the checkpoint expects " +
                                 std::to_string(ck.config.input_dim));
  }
  switch (parse_model(cfg.model)) {
    case ModelId::Sv: {
      const Eigen::MatrixXd x = log_abs_transform(y.col(0), cfg.c);
      return net.predict(ck.params, x);
    }
    case ModelId::Dsge:
      return net.predict(ck.params, y);
    case ModelId::Sa: {
      const auto s = standardize(y.col(0));
      auto post = net.predict(ck.params, s.values);
      post.mean = (post.mean.array() * s.std + s.mean).matrix();
      post.std *= s.std;
      return post;
    }
  }
  throw UnknownModelError(cfg.model);
}

EvalResult score_batch(const nn::Checkpoint& ck, const Batch& batch) {
  const nn::Network net(ck.config);
  nn::Network::Output out;
  net.forward(ck.params, batch.x, batch.T, batch.B, out);
  const Index K = batch.target.cols();
  EvalResult r;
  r.n = static_cast<int>(batch.B);
  r.member_mse.assign(batch.B, 0.0);
  r.member_nll.assign(batch.B, 0.0);
  r.has_break = batch.has_break;
  const double half_log_2pi = 0.5 * std::log(2.0 * M_PI);
  Index covered = 0;
  for (Index t = 0; t < batch.T; ++t) {
    for (Index b = 0; b < batch.B; ++b) {
      const Index i = t * batch.B + b;
      for (Index k = 0; k < K; ++k) {
        const double e = batch.target(i, k) - out.mean(i, k);
        const double s = out.std(i, k);
        r.member_mse[b] += e * e;
        r.member_nll[b] += half_log_2pi + std::log(s) + 0.5 * (e / s) * (e / s);
        if (std::abs(e) <= 2.0 * s) ++covered;
      }
    }
  }
  const double per = static_cast<double>(batch.T * K);
  for (Index b = 0; b < batch.B; ++b) {
    r.member_mse[b] /= per;
    r.member_nll[b] /= per;
  }
  r.coverage = static_cast<double>(covered) / static_cast<double>(batch.T * batch.B * K);
  const Eigen::RowVectorXd mu = batch.target.colwise().mean();
  r.baseline_mse = (batch.target.rowwise() - mu).squaredNorm() / static_cast<double>(batch.target.size());
  return r;
}

namespace {

void finalize(EvalResult& r) {
  const auto moments = [](const std::vector<double>& v, double& mean, double& se2) {
    const double n = static_cast<double>(v.size());
    mean = 0.0;
    for (double x : v) mean += x;
    mean /= n;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    se2 = n > 1 ? 2.0 * std::sqrt(ss / (n - 1) / n) : 0.0;
  };
  r.n = static_cast<int>(r.member_mse.size());
  moments(r.member_nll, r.nll, r.nll_se2);
  moments(r.member_mse, r.mse, r.mse_se2);
}

}  // namespace

std::unique_ptr<Problem> make_eval_problem(const TrainConfig& cfg, int n_runs, const RngStream& rng) {
  if (parse_model(cfg.model) != ModelId::Dsge) return make_problem(cfg);
  auto cache_rng = rng.derive("presim");
  auto cache = std::make_shared<const sim::DsgeSolutionCache>(
      sim::dsge_presimulate(static_cast<std::size_t>(std::max(n_runs, 100)), cache_rng));
  return std::make_unique<DsgeProblem>(std::move(cache), cfg.c);
}

EvalResult held_out_eval(const nn::Checkpoint& ck, int n_runs, RngStream& rng, int T) {
  if (n_runs < 1) throw EmptyBenchmarkError();
  TrainConfig cfg = config_of(ck);
  const auto problem = make_eval_problem(cfg, n_runs, rng);
  const bool twins = problem->id() == ModelId::Sa;
  EvalResult total;
  double covered = 0.0, baseline = 0.0, elements = 0.0;
  int done = 0;
  for (std::uint64_t chunk = 0; done < n_runs; ++chunk) {
    auto r = rng.derive("chunk", chunk);
    const int len = T > 0 ? T : r.uniform_int(cfg.T_lb, cfg.T_ub);
    const int want = std::min(100, n_runs - done);
    const Batch b = problem->simulate(len, twins ? (want + 1) / 2 : want, r);
    EvalResult part = score_batch(ck, b);
    const int keep = std::min<int>(want, part.n);
    // Baseline uses each chunk's own best constant, which can only make it
    // harder to beat than a single constant over all chunks.
    const double el = static_cast<double>(b.T) * static_cast<double>(b.target.cols());
    for (int i = 0; i < keep; ++i) {
      total.member_mse.push_back(part.member_mse[i]);
      total.member_nll.push_back(part.member_nll[i]);
      if (!part.has_break.empty()) total.has_break.push_back(part.has_break[i]);
    }
    covered += part.coverage * el * part.n;
    baseline += part.baseline_mse * el * part.n;
    elements += el * part.n;
    done += keep;
  }
  finalize(total);
  total.coverage = covered / elements;
  total.baseline_mse = baseline / elements;
  return total;
}

}  // namespace amortss::train
