#pragma once

#include <Eigen/Dense>
#include <Eigen/QR>
#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "spreadcert/errors.hpp"
#include "spreadcert/rng.hpp"

namespace spreadcert {
namespace randmodels {

// Stream tags keep per-column / per-coordinate substreams disjoint.
inline constexpr std::uint64_t kTagGaussianColumn = 0x47415553;
inline constexpr std::uint64_t kTagNbrCoordinate = 0x4e425221;
inline constexpr std::uint64_t kTagRotationColumn = 0x524f5421;
inline constexpr std::uint64_t kTagPlantedColumn = 0x504c4e54;

/// i.i.d. Gaussian n x d matrix with the given entry variance. Columns draw
/// from independent derived streams, so the output is stable under any
/// internal parallelization.
inline Eigen::MatrixXd sample_gaussian(int n, int d, double variance,
                                       std::uint64_t seed) {
  if (n < 1 || d < 1)
    throw InvalidDimensionError("sample_gaussian: dimensions must be >= 1");
  if (!(variance > 0.0)) throw DomainError("sample_gaussian: variance <= 0");
  const double stddev = std::sqrt(variance);
  Eigen::MatrixXd A(n, d);
  for (int j = 0; j < d; ++j) {
    RngStream stream = derive_stream(seed, kTagGaussianColumn, j);
    for (int i = 0; i < n; ++i) A(i, j) = stddev * stream.next_gaussian();
  }
  return A;
}

/// Noisy Bernoulli-Rademacher parameters. rho_prime is pinned so that a
/// coordinate has second moment exactly 1/n.
struct NBRParams {
  double rho = 0.0;
  double sigma = 0.0;

  void validate() const {
    if (!(rho > 0.0 && rho < 1.0)) throw DomainError("NBRParams: rho outside (0,1)");
    if (!(sigma >= 0.0) || sigma * sigma * (1.0 - rho) >= 1.0)
      throw DomainError("NBRParams: sigma outside [0, 1/sqrt(1-rho))");
  }

  double rho_prime() const {
    validate();
    return rho / (1.0 - (1.0 - rho) * sigma * sigma);
  }
};

/// Vector with independent noisy Bernoulli-Rademacher coordinates: a spike
/// of magnitude 1/sqrt(rho' n) with probability rho (sign fair), otherwise
/// centered Gaussian noise of variance sigma^2/n.
inline Eigen::VectorXd sample_nbr(int n, const NBRParams& params,
                                  std::uint64_t seed) {
  params.validate();
  if (n < 1) throw InvalidDimensionError("sample_nbr: n must be >= 1");
  const double spike = 1.0 / std::sqrt(params.rho_prime() * n);
  const double noise_sd = params.sigma / std::sqrt(static_cast<double>(n));
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) {
    RngStream stream = derive_stream(seed, kTagNbrCoordinate, i);
    const double u = stream.next_uniform();
    if (u < params.rho / 2.0) {
      x[i] = spike;
    } else if (u < params.rho) {
      x[i] = -spike;
    } else {
      x[i] = noise_sd * stream.next_gaussian();
    }
  }
  return x;
}

/// Haar-like rotation: orthonormalization of a seeded Gaussian matrix with
/// positive-diagonal sign fixing, which makes the draw deterministic.
inline Eigen::MatrixXd sample_rotation(int d, std::uint64_t seed) {
  Eigen::MatrixXd G(d, d);
  for (int j = 0; j < d; ++j) {
    RngStream stream = derive_stream(seed, kTagRotationColumn, j);
    for (int i = 0; i < d; ++i) G(i, j) = stream.next_gaussian();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  Eigen::MatrixXd Q = qr.householderQ();
  const Eigen::MatrixXd R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j)
    if (R(j, j) < 0.0) Q.col(j) = -Q.col(j);
  return Q;
}

/// Hidden-sparse-vector instance: the observed matrix is a rotated basis
/// whose first pre-rotation column is the planted vector. The hidden fields
/// exist for evaluation only; recovery reads just (A_tilde, n, d).
struct PlantedInstance {
  int n = 0;
  int d = 0;
  Eigen::MatrixXd A_tilde;
  Eigen::VectorXd hidden_v;   // evaluation only
  Eigen::VectorXd hidden_r1;  // evaluation only
  std::uint64_t seed = 0;
  double rho = 0.0;   // model metadata (not hidden)
  double sigma = 0.0;
};

inline PlantedInstance sample_planted(int n, int d, const Eigen::VectorXd& v,
                                      std::uint64_t seed) {
  if (n < 1 || d < 1 || d > n)
    throw InvalidDimensionError("sample_planted: requires 1 <= d <= n");
  if (v.size() != n)
    throw InvalidDimensionError("sample_planted: v has wrong length");
  const double vnorm = v.norm();
  if (vnorm == 0.0) throw DomainError("sample_planted: v must be nonzero");

  Eigen::MatrixXd A(n, d);
  A.col(0) = v / vnorm;
  const double col_sd = 1.0 / std::sqrt(static_cast<double>(n));
  for (int j = 1; j < d; ++j) {
    RngStream stream = derive_stream(seed, kTagPlantedColumn, j);
    for (int i = 0; i < n; ++i) A(i, j) = col_sd * stream.next_gaussian();
  }
  const Eigen::MatrixXd R = sample_rotation(d, seed);

  PlantedInstance inst;
  inst.n = n;
  inst.d = d;
  inst.A_tilde = A * R;
  inst.hidden_v = A.col(0);
  inst.hidden_r1 = R.row(0).transpose();  // R^T e_1
  inst.seed = seed;
  return inst;
}

/// Largest l2 mass fraction achievable on at most floor(rho*n) coordinates,
/// together with the achieving coordinate set (ties to the lowest index).
struct CompressibilityProfile {
  double mass_fraction = 0.0;  // 1 - gamma
  std::vector<int> support;
};

inline CompressibilityProfile compressibility_profile(const Eigen::VectorXd& v,
                                                      double rho) {
  const int n = static_cast<int>(v.size());
  if (n < 1 || v.norm() == 0.0)
    throw DomainError("compressibility_profile: v must be nonzero");
  if (!(rho > 0.0 && rho <= 1.0))
    throw DomainError("compressibility_profile: rho outside (0,1]");
  const int k = static_cast<int>(std::floor(rho * n));
  CompressibilityProfile profile;
  if (k == 0) return profile;

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + k, order.end(),
                    [&](int a, int b) {
                      const double fa = std::fabs(v[a]), fb = std::fabs(v[b]);
                      return fa != fb ? fa > fb : a < b;
                    });
  double top_sq = 0.0;
  profile.support.assign(order.begin(), order.begin() + k);
  for (int idx : profile.support) top_sq += v[idx] * v[idx];
  profile.mass_fraction = std::sqrt(top_sq) / v.norm();
  return profile;
}

// ---------------------------------------------------------------------------
// Instance container
//
// Self-describing binary layout (little-endian):
//   magic "SPVINST1" | u32 version | u32 n | u32 d | u64 seed
//   | f64 rho | f64 sigma | u8 has_eval
//   | A_tilde row-major (n*d f64) | [v (n f64) | r1 (d f64)]
// The evaluation block is optional and is never consumed by recovery.
// ---------------------------------------------------------------------------

namespace detail {

inline constexpr char kMagic[8] = {'S', 'P', 'V', 'I', 'N', 'S', 'T', '1'};

template <typename T>
void write_pod(std::ostream& os, const T& value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw DomainError("instance container: truncated file");
  return value;
}

struct Header {
  int n = 0, d = 0;
  std::uint64_t seed = 0;
  double rho = 0.0, sigma = 0.0;
  bool has_eval = false;
};

inline Header read_header(std::istream& is) {
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0)
    throw DomainError("instance container: bad magic");
  const auto version = read_pod<std::uint32_t>(is);
  if (version != 1) throw DomainError("instance container: unknown version");
  Header h;
  h.n = static_cast<int>(read_pod<std::uint32_t>(is));
  h.d = static_cast<int>(read_pod<std::uint32_t>(is));
  h.seed = read_pod<std::uint64_t>(is);
  h.rho = read_pod<double>(is);
  h.sigma = read_pod<double>(is);
  h.has_eval = read_pod<std::uint8_t>(is) != 0;
  if (h.n < 1 || h.d < 1)
    throw DomainError("instance container: bad dimensions");
  return h;
}

}  // namespace detail

inline void save_instance(const std::string& path, const PlantedInstance& inst,
                          bool strip_eval = false) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DomainError("save_instance: cannot open " + path);
  os.write(detail::kMagic, 8);
  detail::write_pod(os, std::uint32_t{1});
  detail::write_pod(os, static_cast<std::uint32_t>(inst.n));
  detail::write_pod(os, static_cast<std::uint32_t>(inst.d));
  detail::write_pod(os, inst.seed);
  detail::write_pod(os, inst.rho);
  detail::write_pod(os, inst.sigma);
  const bool has_eval = !strip_eval && inst.hidden_v.size() == inst.n &&
                        inst.hidden_r1.size() == inst.d;
  detail::write_pod(os, static_cast<std::uint8_t>(has_eval ? 1 : 0));
  for (int i = 0; i < inst.n; ++i)
    for (int j = 0; j < inst.d; ++j) detail::write_pod(os, inst.A_tilde(i, j));
  if (has_eval) {
    for (int i = 0; i < inst.n; ++i) detail::write_pod(os, inst.hidden_v[i]);
    for (int j = 0; j < inst.d; ++j) detail::write_pod(os, inst.hidden_r1[j]);
  }
  if (!os) throw DomainError("save_instance: write failed for " + path);
}

/// The observable part of an instance; loading through this path cannot see
/// the evaluation block even when the file carries one.
struct BlindInstance {
  int n = 0, d = 0;
  std::uint64_t seed = 0;
  double rho = 0.0, sigma = 0.0;
  bool file_has_eval = false;
  Eigen::MatrixXd A_tilde;
};

inline BlindInstance load_instance_blind(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DomainError("load_instance_blind: cannot open " + path);
  const auto h = detail::read_header(is);
  BlindInstance blind;
  blind.n = h.n;
  blind.d = h.d;
  blind.seed = h.seed;
  blind.rho = h.rho;
  blind.sigma = h.sigma;
  blind.file_has_eval = h.has_eval;
  blind.A_tilde.resize(h.n, h.d);
  for (int i = 0; i < h.n; ++i)
    for (int j = 0; j < h.d; ++j) blind.A_tilde(i, j) = detail::read_pod<double>(is);
  return blind;
}

struct EvalBlock {
  Eigen::VectorXd v;
  Eigen::VectorXd r1;
};

inline std::optional<EvalBlock> load_eval_block(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DomainError("load_eval_block: cannot open " + path);
  const auto h = detail::read_header(is);
  if (!h.has_eval) return std::nullopt;
  is.seekg(static_cast<std::streamoff>(sizeof(double)) * h.n * h.d,
           std::ios::cur);
  EvalBlock block;
  block.v.resize(h.n);
  block.r1.resize(h.d);
  for (int i = 0; i < h.n; ++i) block.v[i] = detail::read_pod<double>(is);
  for (int j = 0; j < h.d; ++j) block.r1[j] = detail::read_pod<double>(is);
  return block;
}

}  // namespace randmodels
}  // namespace spreadcert
