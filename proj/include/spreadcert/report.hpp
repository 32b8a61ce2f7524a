#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include <json.hpp>

#include "spreadcert/certifier.hpp"
#include "spreadcert/oracle.hpp"
#include "spreadcert/recovery.hpp"
#include "spreadcert/scaled.hpp"
#include "spreadcert/version.hpp"

namespace spreadcert {
namespace report {

using nlohmann::json;

inline json to_json(const ScaledValue& v) {
  return json{{"mantissa", v.mantissa}, {"exp2", v.exp2}};
}

inline json to_json(const certifier::SubsetScanReport& scan) {
  return json{{"t", scan.t},
              {"s_star", scan.s_star},
              {"tau", scan.tau},
              {"subsets_checked", scan.subsets_checked},
              {"argmax_subset", scan.argmax_subset}};
}

inline json to_json(const certifier::MomentNormBound& b) {
  return json{{"s", b.s},
              {"lambda_max", b.lambda_max},
              {"residual", b.residual},
              {"bound", to_json(b.bound)},
              {"trace_ell", b.trace_ell},
              {"trace_root", to_json(b.trace_root)},
              {"restricted_dim", b.restricted_dim}};
}

inline json to_json(const certifier::SpreadCertificate& cert) {
  json per_s = json::array();
  for (const auto& b : cert.per_s_bounds) per_s.push_back(to_json(b));
  json derivation{
      {"sigma_min_sq", cert.sigma_min_sq},
      {"s_star_sq", cert.scan.s_star * cert.scan.s_star},
      {"slack", 0.75 * cert.sigma_min_sq - cert.scan.s_star * cert.scan.s_star},
      {"alpha_rule",
       "alpha = ((0.75*sigma_min^2 - s_star^2)/n)^2 / B when positive"}};
  return json{
      {"n", cert.n},
      {"d", cert.d},
      {"t", cert.t},
      {"scan", to_json(cert.scan)},
      {"per_s_bounds", per_s},
      {"B", to_json(cert.B)},
      {"B_double", cert.B_double},
      {"sigma_min", cert.sigma_min},
      {"sigma_min_sq", cert.sigma_min_sq},
      {"alpha", cert.alpha},
      {"epsilon_spread", cert.epsilon_spread},
      {"verdict", cert.verdict == certifier::Verdict::kCertified
                      ? "certified"
                      : "not-certified"},
      {"trace_exponent_ell", cert.trace_exponent_ell},
      {"derivation", derivation},
      {"distortion",
       {{"bound", cert.distortion_bound},
        {"spread_t", cert.spread_t},
        {"vacuous", cert.distortion_vacuous},
        {"universal_ceiling", std::sqrt(static_cast<double>(cert.n))}}}};
}

inline json to_json(const recovery::RecoveryResult& result,
                    bool include_vectors = true) {
  json candidates = json::array();
  for (const auto& c : result.candidates)
    candidates.push_back({{"restart", c.restart},
                          {"score", c.score},
                          {"objective", to_json(c.objective)}});
  json j{{"score", result.score},
         {"objective", to_json(result.objective)},
         {"restarts_used", result.restarts_used},
         {"candidates", candidates}};
  if (include_vectors) {
    j["x_hat"] = std::vector<double>(result.x_hat.data(),
                                     result.x_hat.data() + result.x_hat.size());
    j["v_hat"] = std::vector<double>(result.v_hat.data(),
                                     result.v_hat.data() + result.v_hat.size());
  }
  return j;
}

inline json to_json(const oracle::TraceStats& stats) {
  json reps = json::array();
  for (const auto& tr : stats.per_replicate) reps.push_back(to_json(tr));
  return json{{"n", stats.n},
              {"d", stats.d},
              {"t", stats.t},
              {"ell", stats.ell},
              {"replicates", stats.replicates},
              {"mu4", stats.mu4},
              {"mean_trace", to_json(stats.mean_trace)},
              {"normalized_rate", stats.normalized_rate},
              {"reference", stats.reference},
              {"ratio", stats.ratio},
              {"per_replicate", reps}};
}

inline json to_json(const oracle::NetDistortion& net) {
  return json{{"lower", net.lower},       {"upper", net.upper},
              {"points", net.points},     {"resolution", net.resolution},
              {"lipschitz", net.lipschitz}, {"min_l1", net.min_l1}};
}

inline json to_json(const oracle::AblationStats& stats) {
  return json{{"n", stats.n},
              {"d", stats.d},
              {"t", stats.t},
              {"replicates", stats.replicates},
              {"ratios", stats.ratios},
              {"norm_shifted", stats.norm_shifted},
              {"norm_unshifted", stats.norm_unshifted},
              {"median_ratio", stats.median_ratio}};
}

/// One TSV row per parameter tuple; header written when the file is new.
inline void append_trace_table_row(const std::string& path,
                                   const oracle::TraceStats& stats) {
  const bool fresh = !std::filesystem::exists(path);
  std::ofstream os(path, std::ios::app);
  if (!os) throw DomainError("trace table: cannot open " + path);
  if (fresh)
    os << "n\td\tt\tell\treplicates\tmean_trace_mantissa\tmean_trace_exp2\t"
          "normalized_rate\treference\tratio\n";
  os << stats.n << '\t' << stats.d << '\t' << stats.t << '\t' << stats.ell
     << '\t' << stats.replicates << '\t' << stats.mean_trace.mantissa << '\t'
     << stats.mean_trace.exp2 << '\t' << stats.normalized_rate << '\t'
     << stats.reference << '\t' << stats.ratio << '\n';
}

/// Write-then-rename so no partial report is ever observable.
inline void atomic_write(const std::string& path, const json& j) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::trunc);
    if (!os) throw DomainError("report: cannot open " + tmp);
    os << j.dump(2) << '\n';
    if (!os) throw DomainError("report: write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

/// Wall-clock stage timings in milliseconds.
class StageTimer {
 public:
  void start(const std::string& stage) {
    stage_ = stage;
    begin_ = clock::now();
  }
  void stop() {
    if (stage_.empty()) return;
    const auto elapsed = std::chrono::duration_cast<std::chrono::microseconds>(
                             clock::now() - begin_)
                             .count();
    timings_[stage_] += static_cast<double>(elapsed) / 1000.0;
    stage_.clear();
  }
  json to_json() const {
    json j;
    double total = 0.0;
    for (const auto& [stage, ms] : timings_) {
      j[stage] = ms;
      total += ms;
    }
    j["total"] = total;
    return j;
  }

 private:
  using clock = std::chrono::steady_clock;
  std::map<std::string, double> timings_;
  std::string stage_;
  clock::time_point begin_;
};

}  // namespace report
}  // namespace spreadcert
