// Command-line harness: train / sample / diagnose / verify.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "inmc/config.hpp"
#include "inmc/diagnostics.hpp"
#include "inmc/errors.hpp"
#include "inmc/kernels.hpp"
#include "inmc/model_io.hpp"
#include "inmc/training.hpp"
#include "inmc/verify.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw inmc::ConfigError("cannot write '" + path.string() + "'");
  os << text;
}

std::string timestamp_utc() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& overrides,
              const std::string& out_dir) {
  inmc::KeyValueConfig cfg = config_path.empty() ? inmc::KeyValueConfig{}
                                                 : inmc::KeyValueConfig::from_file(config_path);
  for (const auto& o : overrides) cfg.set_override(o);
  inmc::TrainingConfig tc = inmc::training_config_from(cfg);

  fs::create_directories(out_dir);
  write_text_file(fs::path(out_dir) / "resolved.cfg", cfg.resolved_text());

  std::ofstream log(fs::path(out_dir) / "train_log.csv", std::ios::binary);
  inmc::TrainHooks hooks;
  hooks.log_csv = &log;
  hooks.on_checkpoint = [&](int step, const inmc::InvolutiveNetwork& gen) {
    std::string name = step == tc.training_steps ? "model.json"
                                                 : "checkpoint_" + std::to_string(step) + ".json";
    inmc::save_model_file(gen, gen.dim() - tc.aux_dim, tc.aux_dim,
                          {tc.target_name, tc.seed, step}, (fs::path(out_dir) / name).string());
  };

  inmc::TrainResult result = inmc::train(tc, hooks);
  std::cout << "trained " << tc.training_steps << " steps on " << tc.target_name << " ("
            << result.skipped_steps << " skipped); model written to " << out_dir << "/model.json\n";
  return 0;
}

int cmd_sample(const std::string& model_path, int steps, int chains, uint64_t seed,
               const std::string& out_dir, int threads, double init_sd, uint64_t monitor_every) {
  inmc::GeneratorModel model = inmc::load_model_file(model_path);
  auto target = inmc::make_target(model.target_name);
  auto aux = inmc::standard_normal(model.aux_dim);
  std::shared_ptr<const inmc::InvolutiveNetwork> net = model.network;
  inmc::InvolutiveKernel kernel = inmc::neural_kernel(net, target, aux);
  kernel.set_monitor_every(monitor_every);

  fs::create_directories(out_dir);
  {
    inmc::KeyValueConfig resolved;
    resolved.set("model", model_path);
    resolved.set("steps", std::to_string(steps));
    resolved.set("chains", std::to_string(chains));
    resolved.set("seed", std::to_string(seed));
    resolved.set("init_sd", std::to_string(init_sd));
    resolved.set("threads", std::to_string(threads));
    write_text_file(fs::path(out_dir) / "resolved.cfg", resolved.resolved_text());
  }

  int n = model.state_dim;
  std::vector<inmc::Vec64> inits(static_cast<size_t>(chains));
  std::vector<std::vector<inmc::TransitionRecord>> records(static_cast<size_t>(chains));
  std::vector<inmc::KernelState> finals;
  finals.reserve(static_cast<size_t>(chains));
  for (int c = 0; c < chains; ++c) {
    inmc::RngStream rng = inmc::RngStream::keyed(seed, "chain", static_cast<uint64_t>(c));
    inmc::Vec64 init(static_cast<size_t>(n));
    for (double& v : init) v = init_sd * rng.next_gaussian();
    inits[static_cast<size_t>(c)] = init;
    finals.emplace_back(std::move(init), rng);
  }

  int workers = std::max(1, std::min(threads, chains));
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (int c = next.fetch_add(1); c < chains; c = next.fetch_add(1))
        records[static_cast<size_t>(c)] = kernel.run_chain(finals[static_cast<size_t>(c)], steps);
    });
  }
  for (auto& t : pool) t.join();

  inmc::ChainArchive archive;
  archive.kernel_name = kernel.name();
  archive.target_name = model.target_name;
  archive.seed = seed;
  for (int c = 0; c < chains; ++c)
    archive.add_chain(inits[static_cast<size_t>(c)], records[static_cast<size_t>(c)]);

  std::ofstream csv(fs::path(out_dir) / "records.csv", std::ios::binary);
  archive.write_csv(csv);

  double max_residual = 0.0;
  uint64_t nonfinite = 0;
  for (const auto& st : finals) {
    max_residual = std::max(max_residual, st.involution_residual_max);
    nonfinite += st.nonfinite_proposals;
  }
  Json summary;
  summary["kernel"] = kernel.name();
  summary["target"] = model.target_name;
  summary["chains"] = chains;
  summary["steps"] = steps;
  summary["seed"] = seed;
  summary["acceptance_rate"] = archive.acceptance_rate();
  summary["involution_residual_max"] = max_residual;
  summary["nonfinite_proposals"] = nonfinite;
  summary["metadata"] = Json{{"timestamp", timestamp_utc()}};
  write_text_file(fs::path(out_dir) / "summary.json", summary.dump(2) + "\n");

  std::cout << "sampled " << chains << " x " << steps << " steps, acceptance "
            << archive.acceptance_rate() << ", involution residual " << max_residual << "\n";
  return 0;
}

int cmd_diagnose(const std::string& samples_path, const std::string& target_name,
                 const std::string& out_dir, int max_lag, int bins, double tv_lo, double tv_hi) {
  std::ifstream is(samples_path, std::ios::binary);
  if (!is) throw inmc::ConfigError("cannot open samples file '" + samples_path + "'");
  inmc::ChainArchive archive = inmc::ChainArchive::read_csv(is);
  auto target = inmc::make_target(target_name);
  if (target->dim() != archive.state_dim())
    throw inmc::ShapeError("target dimension does not match archive");

  fs::create_directories(out_dir);
  {
    inmc::KeyValueConfig resolved;
    resolved.set("samples", samples_path);
    resolved.set("target", target_name);
    resolved.set("max_lag", std::to_string(max_lag));
    resolved.set("bins", std::to_string(bins));
    write_text_file(fs::path(out_dir) / "resolved.cfg", resolved.resolved_text());
  }

  int lag = std::min(max_lag, archive.step_count());
  inmc::Vec64 ac = inmc::autocorrelation(archive, 0, lag);
  {
    std::ofstream os(fs::path(out_dir) / "autocorr.csv", std::ios::binary);
    os << "lag,autocorr\n";
    char buf[64];
    for (size_t k = 0; k < ac.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g\n", k, ac[k]);
      os << buf;
    }
  }

  inmc::NllCurve nll = inmc::expected_nll(archive, *target);
  {
    std::ofstream os(fs::path(out_dir) / "nll.csv", std::ios::binary);
    os << "step,nll,reference_nll\n";
    char buf[96];
    for (size_t t = 0; t < nll.nll_by_step.size(); ++t) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", t, nll.nll_by_step[t], nll.reference);
      os << buf;
    }
  }

  Json report;
  report["kernel"] = archive.kernel_name;
  report["target"] = target_name;
  report["chains"] = archive.chain_count();
  report["steps"] = archive.step_count();
  report["acceptance_rate"] = archive.acceptance_rate();
  if (!target->modes().empty()) {
    double rate = inmc::cross_mode_rate(archive, inmc::nearest_mode_assignment(target->modes()));
    report["cross_mode_rate"] = rate;
  }
  if (target->dim() == 1) {
    int burn = archive.step_count() / 10;
    inmc::Vec64 pooled = archive.pooled_states(burn, archive.step_count(), 0);
    report["tv_distance"] = inmc::tv_distance_histogram(pooled, *target, bins, tv_lo, tv_hi);
  }
  report["nll_reference"] = nll.reference;
  report["nll_final"] = nll.nll_by_step.back();
  report["metadata"] = Json{{"timestamp", timestamp_utc()}};
  write_text_file(fs::path(out_dir) / "report.json", report.dump(2) + "\n");
  std::cout << report.dump(2) << "\n";
  return 0;
}

int cmd_verify(const std::string& suite, uint64_t seed, const std::string& out_dir) {
  std::vector<inmc::universality::SweepRow> rows;
  std::vector<inmc::CheckResult> results;
  if (suite == "universality" || suite == "all") {
    for (const char* s :
         {"involution", "volume", "grad", "chi", "balance", "universality"}) {
      if (suite == "universality" && std::string(s) != "universality") continue;
      auto part = std::string(s) == "universality" ? inmc::verify_universality(seed, &rows)
                                                   : inmc::run_verify_suite(s, seed);
      results.insert(results.end(), part.begin(), part.end());
    }
  } else {
    results = inmc::run_verify_suite(suite, seed);
  }
  bool ok = inmc::print_results(results, std::cout);
  if (!rows.empty() && !out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream os(fs::path(out_dir) / "universality.csv", std::ios::binary);
    os << "eps,p_gates_open,ks,involution_residual\n";
    char buf[128];
    for (const auto& r : rows) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", r.eps, r.p_gates_open, r.ks,
                    r.involution_residual);
      os << buf;
    }
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Involutive neural MCMC: train, sample, diagnose, verify"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", model_path, samples_path, target_name = "mix2";
  std::string suite = "all";
  std::vector<std::string> overrides;
  int steps = 1000, chains = 1, threads = 1, max_lag = 100, bins = 50;
  uint64_t seed = 1, monitor_every = 100;
  double init_sd = 2.0, tv_lo = -1.0, tv_hi = 1.0;

  CLI::App* train = app.add_subcommand("train", "adversarially train an involutive generator");
  train->add_option("--config", config_path, "config file (dotted key = value lines)");
  train->add_option("--set", overrides, "override config entries, key=value")->take_all();
  train->add_option("--out", out_dir, "output directory");

  CLI::App* sample = app.add_subcommand("sample", "run MCMC chains with a trained generator");
  sample->add_option("--model", model_path, "model file")->required();
  sample->add_option("--steps", steps, "steps per chain");
  sample->add_option("--chains", chains, "number of chains");
  sample->add_option("--seed", seed, "random seed");
  sample->add_option("--threads", threads, "worker threads");
  sample->add_option("--init-sd", init_sd, "initial-state distribution sd");
  sample->add_option("--monitor-every", monitor_every,
                     "involution monitor cadence (0 disables)");
  sample->add_option("--out", out_dir, "output directory");

  CLI::App* diagnose = app.add_subcommand("diagnose", "compute sampler diagnostics from a CSV");
  diagnose->add_option("--samples", samples_path, "records.csv from sample")->required();
  diagnose->add_option("--target", target_name, "target density name")->required();
  diagnose->add_option("--max-lag", max_lag, "autocorrelation max lag");
  diagnose->add_option("--bins", bins, "histogram bins for the TV distance");
  diagnose->add_option("--tv-lo", tv_lo, "histogram lower edge");
  diagnose->add_option("--tv-hi", tv_hi, "histogram upper edge");
  diagnose->add_option("--out", out_dir, "output directory");

  CLI::App* verify = app.add_subcommand("verify", "run a property suite");
  verify->add_option("suite", suite,
                     "involution|volume|grad|chi|balance|universality|all");
  verify->add_option("--seed", seed, "random seed");
  verify->add_option("--out", out_dir, "output directory for the universality CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(config_path, overrides, out_dir);
    if (sample->parsed())
      return cmd_sample(model_path, steps, chains, seed, out_dir, threads, init_sd, monitor_every);
    if (diagnose->parsed())
      return cmd_diagnose(samples_path, target_name, out_dir, max_lag, bins, tv_lo, tv_hi);
    if (verify->parsed()) return cmd_verify(suite, seed, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
