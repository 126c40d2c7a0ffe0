// Command-line front end: simulate | train | infer | mcmc | bench | export.
//
// Exit codes: 0 success, 1 usage or input error, 2 numerical failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "amortss/bench/bench.hpp"
#include "amortss/core/csv.hpp"
#include "amortss/core/errors.hpp"
#include "amortss/core/transforms.hpp"
#include "amortss/mcmc/samplers.hpp"
#include "amortss/sim/dsge.hpp"
#include "amortss/sim/seasonal.hpp"
#include "amortss/sim/sv.hpp"
#include "amortss/train/trainer.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace amortss;
using nlohmann::json;

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string preset = "desk";
};

json load_config(const Common& c) {
  if (c.config_path.empty()) return json::object();
  std::ifstream in(c.config_path);
  if (!in) throw std::invalid_argument("cannot read config " + c.config_path);
  return json::parse(in);
}

std::uint64_t seed_of(const Common& c, const json& cfg) {
  if (c.seed) return *c.seed;
  return cfg.value("seed", std::uint64_t{1});
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::vector<std::string> state_names(train::ModelId id) {
  switch (id) {
    case train::ModelId::Sv:
      return {"SV"};
    case train::ModelId::Dsge:
      return {"SV_g", "SV_z", "SV_R"};
    case train::ModelId::Sa:
      return {"SA"};
  }
  return {};
}

void write_posterior(const MarginalGaussianPosterior& p, const std::vector<std::string>& names,
                     const fs::path& path) {
  CsvTable t;
  t.header = {"t", "state", "mean", "std"};
  for (Eigen::Index r = 0; r < p.mean.rows(); ++r) {
    for (Eigen::Index k = 0; k < p.mean.cols(); ++k) {
      t.rows.push_back({std::to_string(r + 1), names[k], format_double(p.mean(r, k)),
                        format_double(p.std(r, k))});
    }
  }
  write_table(path, t);
}

// ---- simulate -------------------------------------------------------------

struct SimulateArgs {
  std::string model = "sv";
  int n = 1;
  int T = 300;
  int T_max = 0;  // > T: lengths drawn uniformly from [T, T_max]
  std::string out_dir = "sim";
};

int run_simulate(const Common& common, const SimulateArgs& a) {
  const json cfg = load_config(common);
  const auto id = train::parse_model(a.model);
  if (a.n < 1 || a.T < 2) throw std::invalid_argument("simulate: need --n >= 1 and --T >= 2");
  fs::create_directories(a.out_dir);
  const RngStream root(seed_of(common, cfg), hash_tag("simulate"));
  json params = json::array();
  sim::SeasonalConfig sa_cfg;
  if (cfg.contains("train")) {
    train::TrainConfig tc = train::preset("sa", common.preset);
    train::update_from_json(cfg.at("train"), tc);
    sa_cfg = tc.seasonal;
  }
  for (int i = 0; i < a.n; ++i) {
    RngStream r = root.derive("series", static_cast<std::uint64_t>(i));
    const int T = a.T_max > a.T ? r.derive("length").uniform_int(a.T, a.T_max) : a.T;
    Eigen::MatrixXd obs, states;
    std::vector<std::string> obs_names;
    json p;
    switch (id) {
      case train::ModelId::Sv: {
        // Redraw the rare parameter sets whose path overflows a double.
        for (std::uint64_t attempt = 0;; ++attempt) {
          RngStream rr = attempt == 0 ? r : r.derive("retry", attempt);
          const auto sp = sim::sv_draw_prior(rr);
          const auto path = sim::sv_simulate(sp, T, rr);
          if (!path.y.allFinite()) continue;
          obs = path.y;
          states = path.sv;
          p = {{"alpha", sp.alpha}, {"kappa", sp.kappa}, {"psi", sp.psi}};
          break;
        }
        obs_names = {"y"};
        break;
      }
      case train::ModelId::Dsge: {
        sim::DsgeCacheEntry entry;
        sim::DsgeParams dp;
        for (std::uint64_t attempt = 0;; ++attempt) {
          RngStream rr = r.derive("draw", attempt);
          dp = sim::dsge_draw_prior(rr);
          if (sim::make_cache_entry(dp.theta, entry)) break;
        }
        RngStream pr = r.derive("path");
        const auto path = sim::dsge_simulate(entry, dp.sv, T, pr);
        obs = path.obs;
        states = path.sv;
        obs_names = {"dy", "pi", "R"};
        const auto v = sim::to_prior_vars(dp.theta);
        const auto s = sim::to_prior_vars(dp.sv);
        for (int k = 0; k < sim::kNumStructural; ++k) p[std::string(sim::dsge_structural_priors()[k].name)] = v[k];
        for (int k = 0; k < sim::kNumSvProcess; ++k) p[std::string(sim::dsge_sv_priors()[k].name)] = s[k];
        break;
      }
      case train::ModelId::Sa: {
        const auto sample = sim::seasonal_generate_batch(1, T, sa_cfg, r).front();
        obs = sample.y;
        states = sample.sa;
        obs_names = {"y"};
        p = {{"has_break", sample.has_break()}, {"mean", sample.mean}, {"std", sample.std}};
        break;
      }
    }
    const std::string stem = "series_" + std::to_string(i);
    write_csv(fs::path(a.out_dir) / (stem + ".csv"), TimeSeries(obs, obs_names));
    write_csv(fs::path(a.out_dir) / (stem + "_states.csv"), TimeSeries(states, state_names(id)));
    p["T"] = T;
    params.push_back(p);
  }
  write_json({{"model", a.model}, {"params", params}}, fs::path(a.out_dir) / "params.json");
  return 0;
}

// ---- train ----------------------------------------------------------------

struct TrainArgs {
  std::string model = "sv";
  std::optional<std::int64_t> steps;
  std::string out = "model.ckpt";
  std::string log;
  int log_every = 100;
  std::optional<int> workers;
};

int run_train(const Common& common, const TrainArgs& a) {
  const json cfg = load_config(common);
  train::TrainConfig tc = train::preset(a.model, common.preset);
  if (cfg.contains("train")) train::update_from_json(cfg.at("train"), tc);
  tc.model = a.model;
  tc.seed = seed_of(common, cfg);
  if (a.steps) tc.n_steps = *a.steps;
  if (a.workers) tc.workers = *a.workers;
  tc.checkpoint_path = a.out;

  std::ofstream log;
  if (!a.log.empty()) {
    log.open(a.log);
    if (!log) throw std::runtime_error("cannot write " + a.log);
    json start = {{"event", "start"}};
    to_json(start["config"], tc);
    log << start.dump() << '\n';
  }
  const auto result = train::pretrain(tc, [&](const train::StepRecord& s) {
    if (a.log_every > 0 && s.step % a.log_every == 0) {
      const json line = {{"event", "step"}, {"step", s.step}, {"lr", s.lr}, {"loss", s.loss}};
      if (log.is_open()) log << line.dump() << '\n' << std::flush;
      std::cerr << line.dump() << '\n';
    }
  });
  if (log.is_open()) {
    const auto& r = result.report;
    for (std::size_t i = 0; i < r.eval_steps.size(); ++i)
      log << json{{"event", "eval"}, {"step", r.eval_steps[i]}, {"nll", r.eval_nll[i]}}.dump() << '\n';
    log << json{{"event", "done"}, {"steps", tc.n_steps}, {"retries", r.retries}}.dump() << '\n';
  }
  return 0;
}

// ---- infer ----------------------------------------------------------------

struct InferArgs {
  std::string checkpoint;
  std::string input;
  std::string out = "posterior.csv";
  std::string svg;
};

int run_infer(const InferArgs& a) {
  const auto ck = nn::load_checkpoint(a.checkpoint);
  const auto id = train::parse_model(train::config_of(ck).model);
  const TimeSeries series = read_csv(a.input);
  const auto post = train::infer(ck, series);
  write_posterior(post, state_names(id), a.out);
  if (!a.svg.empty()) {
    bench::ComparisonSeries cs{fs::path(a.input).stem().string(), series.values().col(0), {},
                               {{"npe", post.mean.col(0), post.std.col(0)}}};
    bench::write_svg(cs, a.svg);
  }
  return 0;
}

// ---- mcmc -----------------------------------------------------------------

struct McmcArgs {
  std::string model = "sv";
  std::string input;
  std::optional<int> iter;
  std::optional<int> thin;
  std::string draws = "draws.csv";
  std::string summary = "summary.csv";
  std::string state_draws;
};

mcmc::McmcOptions mcmc_options(const json& cfg, const McmcArgs& a, bool dsge) {
  mcmc::McmcOptions o;
  if (dsge) o.n_iter = mcmc::DsgeMcmcOptions{}.n_iter;
  if (cfg.contains("mcmc")) {
    const auto& m = cfg.at("mcmc");
    o.n_iter = m.value("n_iter", o.n_iter);
    o.thin = m.value("thin", o.thin);
    o.burn_in_fraction = m.value("burn_in_fraction", o.burn_in_fraction);
    o.scale = m.value("scale", o.scale);
    o.sigma0 = m.value("sigma0", o.sigma0);
  }
  if (a.iter) o.n_iter = *a.iter;
  if (a.thin) o.thin = *a.thin;
  return o;
}

int run_mcmc(const Common& common, const McmcArgs& a) {
  const json cfg = load_config(common);
  const auto id = train::parse_model(a.model);
  if (id == train::ModelId::Sa) throw std::invalid_argument("mcmc: no sampler for the seasonal model");
  const TimeSeries series = read_csv(a.input);
  RngStream rng(seed_of(common, cfg), hash_tag("mcmc"));
  const auto opts = mcmc_options(cfg, a, id == train::ModelId::Dsge);
  mcmc::McmcChain chain;
  if (id == train::ModelId::Sv) {
    chain = mcmc::mcmc_sv(series, opts, rng);
  } else {
    mcmc::DsgeMcmcOptions d;
    static_cast<mcmc::McmcOptions&>(d) = opts;
    chain = mcmc::mcmc_dsge(series, d, rng);
  }

  CsvTable draws;
  draws.header.push_back("iter");
  for (const auto& n : chain.param_names) draws.header.push_back(n);
  for (Eigen::Index i = 0; i < chain.params.rows(); ++i) {
    std::vector<std::string> row{std::to_string(i + 1)};
    for (Eigen::Index k = 0; k < chain.params.cols(); ++k) row.push_back(format_double(chain.params(i, k)));
    draws.rows.push_back(std::move(row));
  }
  write_table(a.draws, draws);
  write_posterior(chain.posterior(), chain.state_names, a.summary);

  if (!a.state_draws.empty()) {
    CsvTable sd;
    sd.header = {"iter", "t", "state", "value"};
    for (std::size_t d = 0; d < chain.state_draws.size(); ++d) {
      const auto& x = chain.state_draws[d];
      for (Eigen::Index t = 0; t < x.rows(); ++t)
        for (Eigen::Index k = 0; k < x.cols(); ++k)
          sd.rows.push_back({std::to_string(chain.state_draw_iter[d] + 1), std::to_string(t + 1),
                             chain.state_names[static_cast<std::size_t>(k)], format_double(x(t, k))});
    }
    write_table(a.state_draws, sd);
  }
  json acc = json::array();
  for (const auto& b : chain.blocks)
    acc.push_back({{"block", b.name}, {"acceptance", b.acceptance_rate()}, {"rejected_support", b.rejected_support}});
  std::cerr << json{{"event", "mcmc_done"}, {"n_iter", opts.n_iter}, {"blocks", acc}}.dump() << '\n';
  return 0;
}

// ---- bench ----------------------------------------------------------------

struct BenchArgs {
  std::string checkpoint;
  std::string kind = "metrics";
  int n = 100;
  int T = 300;
  int timing_T = 0;
  int timing_calls = 10;
  std::optional<int> iter;
  int workers = 1;
  bool no_timing = false;
  std::string out = "bench.json";
};

int run_bench(const Common& common, const BenchArgs& a) {
  const json cfg = load_config(common);
  const auto ck = nn::load_checkpoint(a.checkpoint);
  RngStream rng(seed_of(common, cfg), hash_tag("bench"));
  json out;
  if (a.kind == "metrics") {
    const auto r = bench::bench_metrics(ck, train::config_of(ck).model, a.n, rng, a.timing_T, a.timing_calls);
    out = r;
    if (a.no_timing) {
      out.erase("seconds_per_call");
      out.erase("seconds_max");
    }
  } else if (a.kind == "agreement") {
    McmcArgs m;
    m.iter = a.iter;
    const auto r = bench::bench_agreement(
        ck, mcmc_options(cfg, m, train::config_of(ck).model == "dsge"), a.n, a.T, rng, a.workers);
    out = r;
    if (a.no_timing) {
      out.erase("npe_seconds");
      out.erase("mcmc_seconds");
    }
  } else if (a.kind == "seasonal") {
    out = bench::bench_seasonal(ck, a.n, rng);
  } else {
    throw std::invalid_argument("bench: --kind must be metrics, agreement or seasonal");
  }
  write_json(out, a.out);
  return 0;
}

// ---- export ---------------------------------------------------------------

struct ExportArgs {
  std::string checkpoint;
  std::vector<std::string> inputs;
  std::optional<int> mcmc_iter;
  std::string csv = "comparison.csv";
  std::string svg_dir;
};

int run_export(const Common& common, const ExportArgs& a) {
  const json cfg = load_config(common);
  const auto ck = nn::load_checkpoint(a.checkpoint);
  const auto id = train::parse_model(train::config_of(ck).model);
  std::vector<bench::ComparisonSeries> all;
  for (const auto& input : a.inputs) {
    const TimeSeries series = read_csv(input);
    const auto post = train::infer(ck, series);
    const std::string stem = fs::path(input).stem().string();
    const fs::path states = fs::path(input).parent_path() / (stem + "_states.csv");
    std::optional<TimeSeries> truth;
    if (fs::exists(states)) truth = read_csv(states);
    std::optional<MarginalGaussianPosterior> mc;
    if (a.mcmc_iter && id != train::ModelId::Sa) {
      McmcArgs m;
      m.iter = a.mcmc_iter;
      RngStream rng(seed_of(common, cfg), hash_tag("mcmc"));
      const auto opts = mcmc_options(cfg, m, id == train::ModelId::Dsge);
      if (id == train::ModelId::Sv) {
        mc = mcmc::mcmc_sv(series, opts, rng).posterior();
      } else {
        mcmc::DsgeMcmcOptions d;
        static_cast<mcmc::McmcOptions&>(d) = opts;
        mc = mcmc::mcmc_dsge(series, d, rng).posterior();
      }
    }
    const auto names = state_names(id);
    for (Eigen::Index k = 0; k < post.mean.cols(); ++k) {
      bench::ComparisonSeries cs;
      cs.id = post.mean.cols() > 1 ? stem + "_" + names[static_cast<std::size_t>(k)] : stem;
      cs.observed = series.values().col(std::min<Eigen::Index>(k, series.dim() - 1));
      if (truth) cs.truth = truth->values().col(k);
      cs.methods.push_back({"npe", post.mean.col(k), post.std.col(k)});
      if (mc) cs.methods.push_back({"mcmc", mc->mean.col(k), mc->std.col(k)});
      if (!a.svg_dir.empty()) {
        fs::create_directories(a.svg_dir);
        bench::write_svg(cs, fs::path(a.svg_dir) / (cs.id + ".svg"));
      }
      all.push_back(std::move(cs));
    }
  }
  bench::export_comparison_csv(all, a.csv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Amortized posterior estimation for state space models"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--config", common.config_path, "JSON config file (see README)");
  app.add_option("--seed", common.seed, "Master seed (overrides the config file)");
  app.add_option("--preset", common.preset, "Training scale")->check(CLI::IsMember({"desk", "paper"}));

  const auto models = CLI::IsMember({"sv", "dsge", "sa"});

  SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "Draw parameters and simulate series with their states");
  simulate->add_option("--model", sa.model)->check(models);
  simulate->add_option("--n", sa.n, "Number of series");
  simulate->add_option("--T", sa.T, "Series length (the shortest when --T-max is given)");
  simulate->add_option("--T-max", sa.T_max, "Draw each length uniformly from [T, T-max]");
  simulate->add_option("--out", sa.out_dir, "Output directory");

  TrainArgs ta;
  auto* trainc = app.add_subcommand("train", "Pretrain a posterior network on simulations");
  trainc->add_option("--model", ta.model)->check(models);
  trainc->add_option("--steps", ta.steps, "Override the number of optimizer steps");
  trainc->add_option("--out", ta.out, "Checkpoint path");
  trainc->add_option("--log", ta.log, "JSON-lines progress log");
  trainc->add_option("--log-every", ta.log_every);
  trainc->add_option("--workers", ta.workers, "Simulation threads");

  InferArgs ia;
  auto* infer = app.add_subcommand("infer", "Posterior marginals for one observed series");
  infer->add_option("--checkpoint", ia.checkpoint)->required();
  infer->add_option("--input", ia.input, "CSV with a header row")->required();
  infer->add_option("--out", ia.out);
  infer->add_option("--svg", ia.svg, "Also plot the posterior");

  McmcArgs ma;
  auto* mcmcc = app.add_subcommand("mcmc", "Run the MCMC baseline on one observed series");
  mcmcc->add_option("--model", ma.model)->check(CLI::IsMember({"sv", "dsge"}));
  mcmcc->add_option("--input", ma.input)->required();
  mcmcc->add_option("--iter", ma.iter);
  mcmcc->add_option("--thin", ma.thin);
  mcmcc->add_option("--draws", ma.draws, "Parameter draws CSV");
  mcmcc->add_option("--summary", ma.summary, "Per-t state mean/std CSV");
  mcmcc->add_option("--state-draws", ma.state_draws, "Thinned state draws (long format)");

  BenchArgs ba;
  auto* benchc = app.add_subcommand("bench", "Held-out metrics, NPE-MCMC agreement or seasonal split");
  benchc->add_option("--checkpoint", ba.checkpoint)->required();
  benchc->add_option("--kind", ba.kind)->check(CLI::IsMember({"metrics", "agreement", "seasonal"}));
  benchc->add_option("--n", ba.n, "Number of simulated series");
  benchc->add_option("--T", ba.T, "Series length (agreement)");
  benchc->add_option("--timing-T", ba.timing_T);
  benchc->add_option("--timing-calls", ba.timing_calls);
  benchc->add_option("--iter", ba.iter, "MCMC iterations (agreement)");
  benchc->add_option("--workers", ba.workers);
  benchc->add_flag("--no-timing", ba.no_timing, "Omit wall-clock fields from the report");
  benchc->add_option("--out", ba.out);

  ExportArgs ea;
  auto* exportc = app.add_subcommand("export", "Comparison CSV and SVG plots for observed series");
  exportc->add_option("--checkpoint", ea.checkpoint)->required();
  exportc->add_option("--input", ea.inputs, "Series CSVs; <stem>_states.csv next to one is used as truth")
      ->required();
  exportc->add_option("--mcmc-iter", ea.mcmc_iter, "Add an MCMC column with this many iterations");
  exportc->add_option("--csv", ea.csv);
  exportc->add_option("--svg-dir", ea.svg_dir);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*simulate) return run_simulate(common, sa);
    if (*trainc) return run_train(common, ta);
    if (*infer) return run_infer(ia);
    if (*mcmcc) return run_mcmc(common, ma);
    if (*benchc) return run_bench(common, ba);
    if (*exportc) return run_export(common, ea);
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
