// Command-line front end: seeded certify / recover / oracle experiments with
// JSON reports. Exit codes: 0 success (certify: certified), 2 ran correctly
// but not certified, 1 usage or resource errors.

#include <CLI11.hpp>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "spreadcert/certifier.hpp"
#include "spreadcert/oracle.hpp"
#include "spreadcert/randmodels.hpp"
#include "spreadcert/recovery.hpp"
#include "spreadcert/report.hpp"
#include "spreadcert/version.hpp"

namespace {

using nlohmann::json;
using namespace spreadcert;

// Relative paths resolve under SPREADCERT_DATA_DIR when it is set.
std::string resolve_path(const std::string& path) {
  if (path.empty()) return path;
  const char* base = std::getenv("SPREADCERT_DATA_DIR");
  if (base == nullptr || std::filesystem::path(path).is_absolute()) return path;
  return (std::filesystem::path(base) / path).string();
}

void emit(const json& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << std::endl;
  } else {
    report::atomic_write(resolve_path(out_path), j);
  }
}

json base_report(const std::string& command, const json& config,
                 std::uint64_t seed) {
  return json{{"version", kVersion},
              {"command", command},
              {"config", config},
              {"seed", seed}};
}

int fail(json rep, const std::string& type, const std::string& message,
         const std::string& out_path) {
  rep["error"] = {{"type", type}, {"message", message}};
  try {
    emit(rep, out_path);
  } catch (const std::exception&) {
    std::cerr << rep.dump(2) << std::endl;
  }
  return 1;
}

template <typename Body>
int guarded(json& rep, const std::string& out_path, Body&& body) {
  try {
    return body();
  } catch (const ResourceLimitError& e) {
    return fail(rep, "resource-limit", e.what(), out_path);
  } catch (const InvalidDimensionError& e) {
    return fail(rep, "invalid-dimension", e.what(), out_path);
  } catch (const DomainError& e) {
    return fail(rep, "domain", e.what(), out_path);
  } catch (const std::exception& e) {
    return fail(rep, "internal", e.what(), out_path);
  }
}

struct CertifyOptions {
  int n = 0, d = 0, t = 1;
  std::uint64_t seed = 1;
  std::string out, instance;
};

int run_certify(const CertifyOptions& opt) {
  json config{{"n", opt.n}, {"d", opt.d}, {"t", opt.t},
              {"instance", opt.instance}};
  json rep = base_report("certify", config, opt.seed);
  return guarded(rep, opt.out, [&]() -> int {
    report::StageTimer timer;
    Eigen::MatrixXd A;
    timer.start("sample");
    if (!opt.instance.empty()) {
      const auto blind = randmodels::load_instance_blind(resolve_path(opt.instance));
      A = blind.A_tilde;
      rep["config"]["n"] = blind.n;
      rep["config"]["d"] = blind.d;
    } else {
      if (opt.n < 1 || opt.d < 1)
        return fail(rep, "usage", "certify requires --n and --d >= 1", opt.out);
      if (opt.d > opt.n)
        return fail(rep, "usage", "certify requires d <= n", opt.out);
      A = randmodels::sample_gaussian(opt.n, opt.d, 1.0, opt.seed);
    }
    timer.stop();
    if (opt.t < 1 || opt.t > A.cols())
      return fail(rep, "usage", "certify requires 1 <= t <= d", opt.out);

    timer.start("certify");
    const auto cert = certifier::certify_spread(A, opt.t);
    timer.stop();

    rep["certificate"] = report::to_json(cert);
    rep["timings_ms"] = timer.to_json();
    emit(rep, opt.out);
    return cert.verdict == certifier::Verdict::kCertified ? 0 : 2;
  });
}

struct RecoverOptions {
  int n = 0, d = 0, t = 1, restarts = 30, max_steps = 400;
  double rho = 0.0, sigma = 0.0;
  std::uint64_t seed = 1;
  std::string out, instance, save_instance;
  bool strip_eval = false;
};

int run_recover(const RecoverOptions& opt) {
  json config{{"n", opt.n},           {"d", opt.d},
              {"t", opt.t},           {"rho", opt.rho},
              {"sigma", opt.sigma},   {"restarts", opt.restarts},
              {"max_steps", opt.max_steps}, {"instance", opt.instance}};
  json rep = base_report("recover", config, opt.seed);
  return guarded(rep, opt.out, [&]() -> int {
    if (opt.restarts < 1)
      return fail(rep, "usage", "recover requires --restarts >= 1", opt.out);
    if (opt.t < 1) return fail(rep, "usage", "recover requires --t >= 1", opt.out);

    report::StageTimer timer;
    Eigen::MatrixXd A_tilde;
    double rho = opt.rho;
    std::optional<Eigen::VectorXd> hidden_v;
    bool blind_file = false;

    timer.start("sample");
    if (!opt.instance.empty()) {
      const std::string path = resolve_path(opt.instance);
      const auto blind = randmodels::load_instance_blind(path);
      A_tilde = blind.A_tilde;
      rep["config"]["n"] = blind.n;
      rep["config"]["d"] = blind.d;
      if (rho <= 0.0) rho = blind.rho;
      blind_file = !blind.file_has_eval;
      if (blind.file_has_eval) {
        // Post-hoc evaluation only; the recovery call below never sees this.
        hidden_v = randmodels::load_eval_block(path)->v;
      }
      if (!opt.save_instance.empty())
        return fail(rep, "usage",
                    "--save-instance applies to freshly sampled instances",
                    opt.out);
    } else {
      if (opt.n < 1 || opt.d < 1 || opt.d > opt.n)
        return fail(rep, "usage", "recover requires 1 <= d <= n", opt.out);
      if (!(rho > 0.0 && rho < 1.0))
        return fail(rep, "usage", "recover requires rho in (0,1)", opt.out);
      randmodels::NBRParams params{rho, opt.sigma};
      params.validate();
      const Eigen::VectorXd v =
          randmodels::sample_nbr(opt.n, params, opt.seed);
      auto inst = randmodels::sample_planted(opt.n, opt.d, v, opt.seed);
      inst.rho = rho;
      inst.sigma = opt.sigma;
      A_tilde = inst.A_tilde;
      hidden_v = inst.hidden_v;
      if (!opt.save_instance.empty())
        randmodels::save_instance(resolve_path(opt.save_instance), inst,
                                  opt.strip_eval);
    }
    timer.stop();
    if (!(rho > 0.0 && rho < 1.0))
      return fail(rep, "usage", "recover requires rho in (0,1)", opt.out);

    recovery::AscentParams params;
    params.restarts = opt.restarts;
    params.max_steps = opt.max_steps;
    params.seed = opt.seed;

    timer.start("recover");
    const auto result = recovery::recover(A_tilde, opt.t, rho, params);
    timer.stop();

    rep["result"] = report::to_json(result);
    rep["blind"] = blind_file;
    if (hidden_v.has_value())
      rep["overlap"] = recovery::evaluate_overlap(result.v_hat, *hidden_v);
    rep["timings_ms"] = timer.to_json();
    emit(rep, opt.out);
    return 0;
  });
}

struct TraceOptions {
  int n = 0, d = 0, t = 1, ell = 2, replicates = 20;
  std::uint64_t seed = 1;
  std::string out, table, ensemble = "gaussian";
};

int run_oracle_trace(const TraceOptions& opt) {
  json config{{"n", opt.n},   {"d", opt.d},
              {"t", opt.t},   {"ell", opt.ell},
              {"replicates", opt.replicates}, {"ensemble", opt.ensemble}};
  json rep = base_report("oracle-trace", config, opt.seed);
  return guarded(rep, opt.out, [&]() -> int {
    if (opt.n < 1 || opt.d < 1 || opt.d > opt.n || opt.t < 1)
      return fail(rep, "usage", "oracle-trace requires 1 <= t, 1 <= d <= n",
                  opt.out);
    if (opt.ell < 2 || opt.ell % 2 != 0)
      return fail(rep, "usage", "oracle-trace requires even --ell >= 2", opt.out);
    if (opt.replicates < 1)
      return fail(rep, "usage", "oracle-trace requires --replicates >= 1",
                  opt.out);
    oracle::Ensemble ensemble;
    if (opt.ensemble == "gaussian") {
      ensemble = oracle::Ensemble::kGaussian;
    } else if (opt.ensemble == "clipped") {
      ensemble = oracle::Ensemble::kClipped;
    } else {
      return fail(rep, "usage", "--ensemble must be gaussian or clipped",
                  opt.out);
    }
    report::StageTimer timer;
    timer.start("trace");
    const auto stats = oracle::mc_trace(opt.n, opt.d, opt.t, opt.ell,
                                        opt.replicates, ensemble, opt.seed);
    timer.stop();
    rep["trace"] = report::to_json(stats);
    rep["timings_ms"] = timer.to_json();
    if (!opt.table.empty())
      report::append_trace_table_row(resolve_path(opt.table), stats);
    emit(rep, opt.out);
    return 0;
  });
}

struct NetOptions {
  int n = 0, d = 0;
  double resolution = 0.001;
  std::uint64_t seed = 1;
  std::string out, instance;
};

int run_oracle_net(const NetOptions& opt) {
  json config{{"n", opt.n}, {"d", opt.d}, {"resolution", opt.resolution},
              {"instance", opt.instance}};
  json rep = base_report("oracle-net", config, opt.seed);
  return guarded(rep, opt.out, [&]() -> int {
    Eigen::MatrixXd A;
    if (!opt.instance.empty()) {
      A = randmodels::load_instance_blind(resolve_path(opt.instance)).A_tilde;
    } else {
      if (opt.n < 1 || opt.d < 1 || opt.d > opt.n)
        return fail(rep, "usage", "oracle-net requires 1 <= d <= n", opt.out);
      A = randmodels::sample_gaussian(opt.n, opt.d, 1.0, opt.seed);
    }
    report::StageTimer timer;
    timer.start("net");
    const auto net = oracle::net_distortion(A, opt.resolution);
    timer.stop();
    rep["net"] = report::to_json(net);
    rep["timings_ms"] = timer.to_json();
    emit(rep, opt.out);
    return 0;
  });
}

struct AblationOptions {
  int n = 0, d = 0, t = 1, replicates = 10;
  std::uint64_t seed = 1;
  std::string out;
};

int run_oracle_ablation(const AblationOptions& opt) {
  json config{{"n", opt.n}, {"d", opt.d}, {"t", opt.t},
              {"replicates", opt.replicates}};
  json rep = base_report("oracle-ablation", config, opt.seed);
  return guarded(rep, opt.out, [&]() -> int {
    if (opt.n < 1 || opt.d < 1 || opt.d > opt.n || opt.t < 1)
      return fail(rep, "usage", "oracle-ablation requires 1 <= t, 1 <= d <= n",
                  opt.out);
    if (opt.replicates < 1)
      return fail(rep, "usage", "oracle-ablation requires --replicates >= 1",
                  opt.out);
    report::StageTimer timer;
    timer.start("ablation");
    const auto stats =
        oracle::shift_ablation(opt.n, opt.d, opt.t, opt.replicates, opt.seed);
    timer.stop();
    rep["ablation"] = report::to_json(stats);
    rep["timings_ms"] = timer.to_json();
    emit(rep, opt.out);
    return 0;
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spreadcert: spread certification and planted sparse recovery"};
  app.require_subcommand(1);

  CertifyOptions certify_opt;
  auto* certify = app.add_subcommand(
      "certify", "Certify spreadness of a seeded Gaussian matrix");
  certify->add_option("--n", certify_opt.n, "rows");
  certify->add_option("--d", certify_opt.d, "columns");
  certify->add_option("--t", certify_opt.t, "certificate level")->default_val(1);
  certify->add_option("--seed", certify_opt.seed, "seed")->default_val(1);
  certify->add_option("--out", certify_opt.out, "JSON report path");
  certify->add_option("--instance", certify_opt.instance,
                      "load matrix from an instance container");

  RecoverOptions recover_opt;
  auto* recover = app.add_subcommand(
      "recover", "Recover a planted sparse vector from a rotated basis");
  recover->add_option("--n", recover_opt.n, "ambient dimension");
  recover->add_option("--d", recover_opt.d, "subspace dimension");
  recover->add_option("--t", recover_opt.t, "objective level")->default_val(1);
  recover->add_option("--rho", recover_opt.rho, "sparsity fraction");
  recover->add_option("--sigma", recover_opt.sigma, "noise level")
      ->default_val(0.0);
  recover->add_option("--restarts", recover_opt.restarts, "ascent restarts")
      ->default_val(30);
  recover->add_option("--max-steps", recover_opt.max_steps,
                      "max accepted ascent steps")
      ->default_val(400);
  recover->add_option("--seed", recover_opt.seed, "seed")->default_val(1);
  recover->add_option("--out", recover_opt.out, "JSON report path");
  recover->add_option("--instance", recover_opt.instance,
                      "load instance container (blind)");
  recover->add_option("--save-instance", recover_opt.save_instance,
                      "write the sampled instance container");
  recover->add_flag("--strip-eval", recover_opt.strip_eval,
                    "omit the evaluation block when saving");

  TraceOptions trace_opt;
  auto* trace = app.add_subcommand(
      "oracle-trace", "Monte Carlo trace moments of the moment operator");
  trace->add_option("--n", trace_opt.n, "rows");
  trace->add_option("--d", trace_opt.d, "columns");
  trace->add_option("--t", trace_opt.t, "level")->default_val(1);
  trace->add_option("--ell", trace_opt.ell, "even trace exponent")
      ->default_val(2);
  trace->add_option("--replicates", trace_opt.replicates, "replicates")
      ->default_val(20);
  trace->add_option("--ensemble", trace_opt.ensemble,
                    "gaussian | clipped")
      ->default_val("gaussian");
  trace->add_option("--seed", trace_opt.seed, "seed")->default_val(1);
  trace->add_option("--out", trace_opt.out, "JSON report path");
  trace->add_option("--table", trace_opt.table, "TSV sweep table path");

  NetOptions net_opt;
  auto* net = app.add_subcommand("oracle-net",
                                 "Angular-net distortion estimate (d <= 3)");
  net->add_option("--n", net_opt.n, "rows");
  net->add_option("--d", net_opt.d, "columns");
  net->add_option("--resolution", net_opt.resolution, "angular resolution")
      ->default_val(0.001);
  net->add_option("--seed", net_opt.seed, "seed")->default_val(1);
  net->add_option("--out", net_opt.out, "JSON report path");
  net->add_option("--instance", net_opt.instance,
                  "load matrix from an instance container");

  AblationOptions ablation_opt;
  auto* ablation = app.add_subcommand(
      "oracle-ablation", "Spectral-norm ratio without/with entry shifting");
  ablation->add_option("--n", ablation_opt.n, "rows");
  ablation->add_option("--d", ablation_opt.d, "columns");
  ablation->add_option("--t", ablation_opt.t, "level")->default_val(1);
  ablation->add_option("--replicates", ablation_opt.replicates, "replicates")
      ->default_val(10);
  ablation->add_option("--seed", ablation_opt.seed, "seed")->default_val(1);
  ablation->add_option("--out", ablation_opt.out, "JSON report path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (certify->parsed()) return run_certify(certify_opt);
  if (recover->parsed()) return run_recover(recover_opt);
  if (trace->parsed()) return run_oracle_trace(trace_opt);
  if (net->parsed()) return run_oracle_net(net_opt);
  if (ablation->parsed()) return run_oracle_ablation(ablation_opt);
  return 1;
}
