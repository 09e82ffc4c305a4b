#include "commands.hpp"

#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "disco/errors.hpp"
#include "disco/metrics.hpp"
#include "disco/synthdata.hpp"
#include "disco/trainer.hpp"

namespace disco::cli {

namespace {

using Json = nlohmann::ordered_json;

std::string out_path(const CommandOptions& options, const std::string& name) {
  return (std::filesystem::path(options.out_dir) / name).string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

void prepare_out(const CommandOptions& options) {
  std::error_code ec;
  std::filesystem::create_directories(options.out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + options.out_dir + ": " + ec.message());
}

std::string hash_comment(const ExperimentConfig& config) {
  return "# config_hash " + config.hash() + "\n";
}

Json mean_sem_json(const MeanSem& m) { return Json{{"mean", m.mean}, {"sem", m.sem}}; }

Json nullable(double v) { return std::isnan(v) ? Json(nullptr) : Json(v); }

// Full dataset for train/eval/sweep: CSV when a path is given, otherwise the
// synthetic bimodal task drawn from the master seed.
Dataset load_data(const ExperimentConfig& config, const CommandOptions& options) {
  std::string path = options.data_path;
  if (path.empty() && config.data.generator == "csv") path = config.data.path;
  if (!path.empty()) {
    Dataset data = load_csv(path, config.net.x_dim, config.net.y_dim);
    if (data.empty()) throw SchemaError("data file " + path + " has no rows");
    return data;
  }
  if (config.net.x_dim != 1 || config.net.y_dim != 1) {
    throw ConfigError("the bimodal generator needs net.x_dim = net.y_dim = 1");
  }
  Rng rng = Rng::substream(config.seed, "data");
  return gen_conditional_bimodal(config.data.n, rng, config.data.noise);
}

JointLayout make_layout(const ExperimentConfig& config, std::size_t y_dim) {
  if (config.eval.layout == "pose") {
    if (y_dim % 3 != 0) throw ConfigError(fmt::format("eval.layout = pose needs y_dim divisible by 3, got {}", y_dim));
    return JointLayout::pose(y_dim);
  }
  return JointLayout::singletons(y_dim);
}

Json probloss_json(const std::optional<ProbLossSummary>& summary) {
  if (!summary) return Json(nullptr);
  Json j = mean_sem_json(summary->probloss);
  j["base_sigma"] = summary->base_sigma ? Json(*summary->base_sigma) : Json(nullptr);
  return j;
}

std::optional<ProbLossSummary> validation_probloss(const ExperimentConfig& config, const NetworkParams& params,
                                                   const Dataset& val) {
  if (val.empty() || config.eval.k < 2) return std::nullopt;
  return model_probloss(params, val, config.eval.k, config.eval.base_sigmas, config.seed);
}

}  // namespace

int cmd_toy(const ExperimentConfig& config, const CommandOptions& options, std::ostream& log) {
  prepare_out(options);
  const ToyResult result = run_toy(config.toy);
  const char* names[2] = {"delta_a", "delta_b"};

  std::string csv = hash_comment(config);
  csv += "train_loss,task_delta_a,task_delta_a_sem,task_delta_b,task_delta_b_sem\n";
  for (std::size_t r = 0; r < 2; ++r) {
    csv += fmt::format("{},{},{},{},{}\n", names[r], result.table[r][0].mean, result.table[r][0].sem,
                       result.table[r][1].mean, result.table[r][1].sem);
  }
  write_text(out_path(options, "toy_table.csv"), csv);

  Json seeds = Json::array();
  for (const ToySeedResult& s : result.seeds) {
    Json fits, table;
    for (std::size_t r = 0; r < 2; ++r) {
      const DiagGaussianParams& p = s.fits[r];
      fits[names[r]] = Json{{"mu1", p.mu1}, {"mu2", p.mu2}, {"sigma1", p.sigma1}, {"sigma2", p.sigma2}};
      table[names[r]] = Json{{names[0], mean_sem_json(s.table[r][0])}, {names[1], mean_sem_json(s.table[r][1])}};
    }
    seeds.push_back(Json{{"seed", s.seed}, {"fits", fits}, {"table", table}});
  }
  const bool dominant = result.diagonal_dominant();
  Json doc{{"config_hash", config.hash()}, {"seeds", seeds}, {"diagonal_dominant", dominant}};
  write_text(out_path(options, "toy_fits.json"), doc.dump(2) + "\n");

  log << "train\\task   delta_a            delta_b\n";
  for (std::size_t r = 0; r < 2; ++r) {
    log << fmt::format("{:<11} {:.5f}+-{:.5f} {:.5f}+-{:.5f}\n", names[r], result.table[r][0].mean,
                       result.table[r][0].sem, result.table[r][1].mean, result.table[r][1].sem);
  }
  log << "diagonal dominant: " << (dominant ? "yes" : "no") << "\n";
  return dominant ? kExitOk : kExitCheckFailed;
}

int cmd_train(const ExperimentConfig& config, const CommandOptions& options, std::ostream& log) {
  prepare_out(options);
  const Dataset data = load_data(config, options);
  TrainConfig tc = config.train;
  if (tc.val_count >= data.size()) {
    throw ConfigError(fmt::format("train.val_count = {} leaves no training data ({} rows)", tc.val_count, data.size()));
  }
  if (tc.checkpoint_every > 0) tc.checkpoint_path = out_path(options, "checkpoint.txt");

  const TrainResult result = train(config.net, tc, data);
  const EpochRecord& last = result.history.epochs.back();

  std::ostringstream params_text;
  params_text << hash_comment(config);
  save_params(params_text, result.params);
  write_text(out_path(options, "params.txt"), params_text.str());
  write_text(out_path(options, "history.csv"), hash_comment(config) + history_csv(result.history));

  const std::optional<ProbLossSummary> pl = validation_probloss(config, result.params, result.val);
  Json doc{{"config_hash", config.hash()},
           {"seed", tc.seed},
           {"n_train", result.train.size()},
           {"n_val", result.val.size()},
           {"epochs", result.history.epochs.size()},
           {"final_train_objective", last.train_objective},
           {"final_val_objective", nullable(last.val_objective)},
           {"val_probloss", probloss_json(pl)}};
  write_text(out_path(options, "summary.json"), doc.dump(2) + "\n");

  log << fmt::format("epochs {} train_obj {:.6f}", result.history.epochs.size(), last.train_objective);
  if (!std::isnan(last.val_objective)) log << fmt::format(" val_obj {:.6f}", last.val_objective);
  if (pl) log << fmt::format(" val_probloss {:.6f}", pl->probloss.mean);
  log << "\n";
  return kExitOk;
}

int cmd_eval(const ExperimentConfig& config, const CommandOptions& options, std::ostream& log) {
  if (options.checkpoint.empty()) throw ConfigError("eval needs --checkpoint");
  prepare_out(options);
  const NetworkParams params = load_params(options.checkpoint);
  const NetConfig& net = params.config();
  if (net.x_dim != config.net.x_dim || net.y_dim != config.net.y_dim) {
    throw DimensionError(fmt::format("checkpoint maps {} -> {} but the config expects {} -> {}", net.x_dim,
                                     net.y_dim, config.net.x_dim, config.net.y_dim));
  }

  // Synthetic data is evaluated on the held-out split the trainer used.
  Dataset data = load_data(config, options);
  const bool synthetic = options.data_path.empty() && config.data.generator != "csv";
  if (synthetic && config.train.val_count > 0 && config.train.val_count < data.size()) {
    data = train_val_split(data, config.train.val_count, config.train.seed).second;
  }

  std::vector<Tensor> gts;
  for (const Example& e : data) gts.push_back(e.y);
  const JointLayout layout = make_layout(config, net.y_dim);
  const std::size_t k = config.eval.k;
  if (k == 0) throw ConfigError("eval.k must be at least 1");

  Rng rng = Rng::substream(config.seed, "eval");
  std::vector<CandidateSet> sets;
  std::vector<Tensor> pointwise;
  std::optional<double> base_sigma;
  if (net.noise_enabled) {
    for (std::size_t i = 0; i < data.size(); ++i) sets.push_back(sample_candidates(params, data[i].x, k, rng, i));
    if (config.eval.zero_noise) {
      const Tensor zero = Tensor::zeros({net.z_dim});
      for (const Example& e : data) pointwise.push_back(generate(params, e.x, zero));
    }
  } else {
    for (const Example& e : data) pointwise.push_back(generate(params, e.x, Tensor()));
    if (config.eval.base_sigmas.empty()) throw ConfigError("eval.base_sigmas is empty");
    // Candidate spread for pointwise networks: the sigma with the lowest ProbLoss.
    double best = std::numeric_limits<double>::infinity();
    for (double sigma : config.eval.base_sigmas) {
      Rng sigma_rng = rng;
      std::vector<CandidateSet> trial;
      for (std::size_t i = 0; i < data.size(); ++i) trial.push_back(base_candidates(pointwise[i], k, sigma, sigma_rng, i));
      const double score = k >= 2 ? probloss(trial, gts).mean : 0.0;
      if (score < best) {
        best = score;
        base_sigma = sigma;
        sets = std::move(trial);
      }
    }
  }

  MetricsReport report = compute_report(sets, gts, layout, config.eval.distances, pointwise);
  if (!net.noise_enabled) report.pointwise_method = "pointwise";
  report.config_hash = config.hash();
  if (!report.probloss) log << "warning: ProbLoss needs K >= 2; reported as null\n";

  Json doc = Json::parse(report_json(report));
  doc["base_sigma"] = base_sigma ? Json(*base_sigma) : Json(nullptr);
  write_text(out_path(options, "metrics.json"), doc.dump(2) + "\n");
  write_text(out_path(options, "metrics.csv"), report_csv(report));

  log << fmt::format("frames {} k {} mejee {:.6f} majee {:.6f}", report.frames, report.k, report.mejee.mean,
                     report.majee.mean);
  if (report.probloss) log << fmt::format(" probloss {:.6f}", report.probloss->mean);
  log << "\n";
  return kExitOk;
}

int cmd_gradcheck(const ExperimentConfig& config, const CommandOptions& options, std::ostream& log) {
  const GradcheckConfig& gc = config.gradcheck;
  const NetConfig net = gc.net();
  net.validate();
  if (gc.n == 0) throw ConfigError("gradcheck.n must be at least 1");

  Rng rng = Rng::substream(config.seed, "gradcheck");
  Dataset batch;
  for (std::size_t i = 0; i < gc.n; ++i) {
    std::vector<double> x(net.x_dim), y(net.y_dim);
    for (double& v : x) v = rng.normal();
    for (double& v : y) v = rng.normal();
    batch.push_back({Tensor::vector(x), Tensor::vector(y)});
  }
  const NoiseBatch noises = draw_noises(net, gc.n, gc.k, rng);
  const NetworkParams params = init_params(net, Rng::substream(config.seed, "init").next_u64());
  const Tensor theta = Tensor::vector(std::vector<double>(params.flat().begin(), params.flat().end()));

  std::string csv = hash_comment(config) + "gamma,beta,max_rel_err,pass\n";
  bool all_pass = true;
  for (double gamma : gc.gammas) {
    for (double beta : gc.betas) {
      ObjectiveConfig oc{gamma, gc.k, LossSpec(beta, gc.weights)};
      oc.validate();
      const GraphBuilder build = [&](Graph& g, NodeId p) {
        const BoundParams bound = bind_params(g, p, net);
        return disco_objective_node(g, net, bound, batch, noises, oc);
      };
      std::vector<double> analytic = value_and_grad(build, theta).second;
      if (gc.corrupt) {
        for (double& v : analytic) v *= 1.01;
        analytic[0] += 1e-3;
      }
      const double err = grad_check_against(build, theta, analytic, gc.step);
      const bool pass = err < gc.tolerance;
      all_pass = all_pass && pass;
      csv += fmt::format("{},{},{},{}\n", gamma, beta, err, pass ? 1 : 0);
      log << fmt::format("gamma {:<5} beta {:<4} max_rel_err {:.3e} {}\n", gamma, beta, err, pass ? "ok" : "FAIL");
    }
  }
  prepare_out(options);
  write_text(out_path(options, "gradcheck.csv"), csv);
  return all_pass ? kExitOk : kExitCheckFailed;
}

int cmd_sweep(const ExperimentConfig& config, const CommandOptions& options, std::ostream& log) {
  prepare_out(options);
  const Dataset data = load_data(config, options);
  if (config.train.val_count == 0 || config.train.val_count >= data.size()) {
    throw ConfigError("sweep needs 0 < train.val_count < number of rows");
  }
  if (config.eval.k < 2) throw ConfigError("sweep selects on ProbLoss and needs eval.k >= 2");

  std::string csv = hash_comment(config) + "seed,l2,val_obj,val_probloss,val_probloss_sem,base_sigma\n";
  Json per_l2 = Json::array();
  double best_score = std::numeric_limits<double>::infinity();
  double best_l2 = 0.0;
  for (double l2 : config.sweep.l2) {
    std::vector<double> scores;
    for (std::uint64_t seed : config.sweep.seeds) {
      TrainConfig tc = config.train;
      tc.seed = seed;
      tc.l2 = l2;
      const TrainResult result = train(config.net, tc, data);
      const ProbLossSummary pl =
          model_probloss(result.params, result.val, config.eval.k, config.eval.base_sigmas, config.seed);
      scores.push_back(pl.probloss.mean);
      csv += fmt::format("{},{},{},{},{},{}\n", seed, l2, result.history.epochs.back().val_objective,
                         pl.probloss.mean, pl.probloss.sem,
                         pl.base_sigma ? fmt::format("{}", *pl.base_sigma) : std::string());
      log << fmt::format("seed {} l2 {} val_probloss {:.6f}\n", seed, l2, pl.probloss.mean);
    }
    const MeanSem agg = mean_sem(scores);
    per_l2.push_back(Json{{"l2", l2}, {"val_probloss", mean_sem_json(agg)}});
    if (agg.mean < best_score) {
      best_score = agg.mean;
      best_l2 = l2;
    }
  }
  write_text(out_path(options, "sweep.csv"), csv);
  Json doc{{"config_hash", config.hash()}, {"best_l2", best_l2}, {"best_val_probloss", best_score},
           {"per_l2", per_l2}};
  write_text(out_path(options, "best.json"), doc.dump(2) + "\n");
  log << fmt::format("best l2 {} (val_probloss {:.6f})\n", best_l2, best_score);
  return kExitOk;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"disco: diverse conditional generators trained with a proper scoring rule"};
  app.require_subcommand(1);

  std::string config_path;
  CommandOptions options;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment INI file")->required();
    sub->add_option("--out", options.out_dir, "output directory");
    sub->add_option("--seed", seed, "override the master seed");
  };
  CLI::App* toy = app.add_subcommand("toy", "fit diagonal Gaussians under two weighted losses and cross-evaluate");
  CLI::App* train_cmd = app.add_subcommand("train", "train a generator");
  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  CLI::App* gradcheck = app.add_subcommand("gradcheck", "compare autodiff and finite-difference gradients");
  CLI::App* sweep = app.add_subcommand("sweep", "train over seeds and L2 strengths");
  for (CLI::App* sub : {toy, train_cmd, eval, gradcheck, sweep}) add_common(sub);
  for (CLI::App* sub : {train_cmd, eval, sweep}) sub->add_option("--data", options.data_path, "CSV data file");
  eval->add_option("--checkpoint", options.checkpoint, "parameter file written by train")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  CLI::App* chosen = app.get_subcommands().front();
  try {
    ExperimentConfig config = load_config(config_path);
    if (chosen->count("--seed") > 0) config.set_seed(seed);
    if (chosen == toy) return cmd_toy(config, options, out);
    if (chosen == train_cmd) return cmd_train(config, options, out);
    if (chosen == eval) return cmd_eval(config, options, out);
    if (chosen == gradcheck) return cmd_gradcheck(config, options, out);
    return cmd_sweep(config, options, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ParameterError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ParseError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const SchemaError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const DimensionError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const IoError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace disco::cli
