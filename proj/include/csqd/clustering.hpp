#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "csqd/bits.hpp"
#include "csqd/errors.hpp"
#include "csqd/rng.hpp"
#include "csqd/sampling.hpp"

namespace csqd {

constexpr double kBmmThetaClamp = 1e-6;
constexpr double kBmmTolerance = 1e-8;
constexpr int kBmmMaxIterations = 300;
constexpr int kKmodesMaxSweeps = 100;

enum class ClusterKind { kmodes, bmm };

inline const char* cluster_kind_name(ClusterKind k) {
  return k == ClusterKind::kmodes ? "kmodes" : "bmm";
}

inline ClusterKind cluster_kind_from_name(const std::string& name) {
  if (name == "kmodes") return ClusterKind::kmodes;
  if (name == "bmm") return ClusterKind::bmm;
  throw ConfigError("unknown clustering kind '" + name + "' (expected kmodes or bmm)");
}

/// Fitted hard partition of the pooled single-spin strings. kmodes keeps K
/// binary mode vectors; bmm keeps Bernoulli parameters and mixing weights.
struct ClusterModel {
  ClusterKind kind = ClusterKind::kmodes;
  std::uint32_t k = 0;
  std::uint32_t n_mo = 0;
  std::uint64_t seed = 0;
  double fit_score = 0.0;  // weighted Hamming cost (kmodes) or log-likelihood (bmm)
  std::vector<SpinString> modes;            // kmodes centroids
  std::vector<std::vector<double>> theta;   // bmm Bernoulli parameters
  std::vector<double> rho;                  // bmm mixing weights
};

/// Per-cluster sampling weights, per-batch allocations, and raw (unnormalized)
/// reference occupancy vectors.
struct ClusterStats {
  std::vector<double> w;
  std::vector<std::uint32_t> m;
  std::vector<std::vector<double>> n_raw;
};

namespace cluster_detail {

inline std::uint32_t hamming(const SpinString& a, const SpinString& b) {
  return static_cast<std::uint32_t>(std::popcount(a.bits ^ b.bits));
}

inline std::uint32_t nearest_mode(const std::vector<SpinString>& modes, const SpinString& s) {
  std::uint32_t best = 0;
  std::uint32_t best_d = hamming(modes[0], s);
  for (std::uint32_t k = 1; k < modes.size(); ++k) {
    const std::uint32_t d = hamming(modes[k], s);
    if (d < best_d) {
      best = k;
      best_d = d;
    }
  }
  return best;
}

inline double kmodes_cost(const WeightedPool& pool, const std::vector<SpinString>& modes,
                          const std::vector<std::uint32_t>& assignment) {
  double cost = 0.0;
  for (std::size_t i = 0; i < pool.size(); ++i)
    cost += pool.pi[i] * hamming(modes[assignment[i]], pool.strings[i]);
  return cost;
}

// weighted per-bit majority; ties set the bit (documented choice)
inline SpinString weighted_mode(const WeightedPool& pool,
                                const std::vector<std::uint32_t>& assignment, std::uint32_t k,
                                std::uint32_t n_mo, const SpinString& fallback) {
  std::vector<double> ones(n_mo, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (assignment[i] != k) continue;
    total += pool.pi[i];
    for (std::uint32_t p = 0; p < n_mo; ++p)
      if (pool.strings[i].test(p)) ones[p] += pool.pi[i];
  }
  if (total == 0.0) return fallback;
  SpinString mode;
  mode.n = n_mo;
  for (std::uint32_t p = 0; p < n_mo; ++p)
    if (ones[p] >= total - ones[p]) mode.set(p);
  return mode;
}

// Huang initialization: draw each mode bit from the weighted per-bit
// frequency, then move each mode onto its nearest distinct pool string.
inline std::vector<SpinString> huang_init(const WeightedPool& pool, std::uint32_t kk,
                                          std::uint32_t n_mo, RngStream& rng) {
  std::vector<double> freq(n_mo, 0.0);
  for (std::size_t i = 0; i < pool.size(); ++i)
    for (std::uint32_t p = 0; p < n_mo; ++p)
      if (pool.strings[i].test(p)) freq[p] += pool.pi[i];
  std::vector<SpinString> modes(kk);
  std::vector<char> used(pool.size(), 0);
  for (std::uint32_t k = 0; k < kk; ++k) {
    SpinString draft;
    draft.n = n_mo;
    for (std::uint32_t p = 0; p < n_mo; ++p)
      if (rng.bernoulli(freq[p])) draft.set(p);
    // nearest unused string; ties resolved toward the lexicographically
    // smaller string for determinism
    std::size_t best = pool.size();
    std::uint32_t best_d = 0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (used[i]) continue;
      const std::uint32_t d = hamming(draft, pool.strings[i]);
      if (best == pool.size() || d < best_d) {
        best = i;
        best_d = d;
      }
    }
    used[best] = 1;
    modes[k] = pool.strings[best];
  }
  return modes;
}

}  // namespace cluster_detail

/// Weighted k-modes with Huang initialization; best of `restarts` runs by
/// weighted Hamming cost, ties to the lower restart index.
inline ClusterModel fit_kmodes(const WeightedPool& pool, std::uint32_t k, std::uint32_t restarts,
                               std::uint64_t seed) {
  using namespace cluster_detail;
  if (k == 0 || k > 32) throw ConfigError("cluster count must lie in [1,32]");
  if (pool.size() < k)
    throw ConfigError("cluster count " + std::to_string(k) + " exceeds the " +
                      std::to_string(pool.size()) + " unique pooled strings");
  const std::uint32_t n_mo = pool.strings.front().n;
  ClusterModel best;
  best.kind = ClusterKind::kmodes;
  best.k = k;
  best.n_mo = n_mo;
  best.seed = seed;
  best.fit_score = std::numeric_limits<double>::infinity();
  for (std::uint32_t restart = 0; restart < std::max(1u, restarts); ++restart) {
    RngStream rng = RngStream::derived(seed, {0x6b6d6f64ull, restart});
    std::vector<SpinString> modes = huang_init(pool, k, n_mo, rng);
    std::vector<std::uint32_t> assignment(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i)
      assignment[i] = nearest_mode(modes, pool.strings[i]);
    double cost = kmodes_cost(pool, modes, assignment);
    for (int sweep = 0; sweep < kKmodesMaxSweeps; ++sweep) {
      for (std::uint32_t c = 0; c < k; ++c)
        modes[c] = weighted_mode(pool, assignment, c, n_mo, modes[c]);
      // reseed empty clusters on the heaviest misfit string
      std::vector<double> mass(k, 0.0);
      for (std::size_t i = 0; i < pool.size(); ++i) mass[assignment[i]] += pool.pi[i];
      for (std::uint32_t c = 0; c < k; ++c) {
        if (mass[c] > 0.0) continue;
        std::size_t worst = 0;
        double worst_score = -1.0;
        for (std::size_t i = 0; i < pool.size(); ++i) {
          const double score = pool.pi[i] * hamming(modes[assignment[i]], pool.strings[i]);
          if (score > worst_score) {
            worst_score = score;
            worst = i;
          }
        }
        modes[c] = pool.strings[worst];
      }
      for (std::size_t i = 0; i < pool.size(); ++i)
        assignment[i] = nearest_mode(modes, pool.strings[i]);
      const double next = kmodes_cost(pool, modes, assignment);
      if (next >= cost - 1e-15) {
        cost = std::min(cost, next);
        break;
      }
      cost = next;
    }
    if (cost < best.fit_score) {
      best.fit_score = cost;
      best.modes = modes;
    }
  }
  return best;
}

/// Weighted Bernoulli mixture fitted by EM on the pooled weights; best of
/// `restarts` runs by final log-likelihood, ties to the lower restart index.
inline ClusterModel fit_bmm(const WeightedPool& pool, std::uint32_t k, std::uint32_t restarts,
                            std::uint64_t seed) {
  if (k == 0 || k > 32) throw ConfigError("cluster count must lie in [1,32]");
  if (pool.size() < k)
    throw ConfigError("cluster count " + std::to_string(k) + " exceeds the " +
                      std::to_string(pool.size()) + " unique pooled strings");
  const std::uint32_t n_mo = pool.strings.front().n;
  const std::size_t n = pool.size();
  ClusterModel best;
  best.kind = ClusterKind::bmm;
  best.k = k;
  best.n_mo = n_mo;
  best.seed = seed;
  best.fit_score = -std::numeric_limits<double>::infinity();
  std::vector<double> log_theta(k * n_mo), log_one_minus(k * n_mo);
  std::vector<double> resp(n * k), logp(k);
  for (std::uint32_t restart = 0; restart < std::max(1u, restarts); ++restart) {
    RngStream rng = RngStream::derived(seed, {0x626d6dull, restart});
    // seed each component on a weighted draw from the pool, softened
    std::vector<std::vector<double>> theta(k, std::vector<double>(n_mo));
    std::vector<double> rho(k, 1.0 / k);
    {
      const auto picks = rng.weighted_sample_without_replacement(pool.pi, k);
      for (std::uint32_t c = 0; c < k; ++c)
        for (std::uint32_t p = 0; p < n_mo; ++p) {
          const double noise = 0.1 + 0.3 * rng.uniform();
          theta[c][p] = pool.strings[picks[c]].test(p) ? 1.0 - noise : noise;
        }
    }
    double ll = -std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < kBmmMaxIterations; ++iter) {
      for (std::uint32_t c = 0; c < k; ++c)
        for (std::uint32_t p = 0; p < n_mo; ++p) {
          log_theta[c * n_mo + p] = std::log(theta[c][p]);
          log_one_minus[c * n_mo + p] = std::log1p(-theta[c][p]);
        }
      double next_ll = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double max_lp = -std::numeric_limits<double>::infinity();
        for (std::uint32_t c = 0; c < k; ++c) {
          double lp = std::log(rho[c]);
          for (std::uint32_t p = 0; p < n_mo; ++p)
            lp += pool.strings[i].test(p) ? log_theta[c * n_mo + p]
                                          : log_one_minus[c * n_mo + p];
          logp[c] = lp;
          max_lp = std::max(max_lp, lp);
        }
        double z = 0.0;
        for (std::uint32_t c = 0; c < k; ++c) z += std::exp(logp[c] - max_lp);
        next_ll += pool.pi[i] * (max_lp + std::log(z));
        for (std::uint32_t c = 0; c < k; ++c)
          resp[i * k + c] = std::exp(logp[c] - max_lp) / z;
      }
      if (!std::isfinite(next_ll))
        throw NumericError("bmm: non-finite log-likelihood (theta clamping misconfigured)");
      for (std::uint32_t c = 0; c < k; ++c) {
        double mass = 0.0;
        std::vector<double> ones(n_mo, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
          const double w = pool.pi[i] * resp[i * k + c];
          mass += w;
          for (std::uint32_t p = 0; p < n_mo; ++p)
            if (pool.strings[i].test(p)) ones[p] += w;
        }
        rho[c] = std::max(mass, 1e-300);
        for (std::uint32_t p = 0; p < n_mo; ++p)
          theta[c][p] = std::clamp(mass > 0.0 ? ones[p] / mass : 0.5, kBmmThetaClamp,
                                   1.0 - kBmmThetaClamp);
      }
      double rho_sum = 0.0;
      for (double r : rho) rho_sum += r;
      for (double& r : rho) r /= rho_sum;
      if (std::abs(next_ll - ll) < kBmmTolerance) {
        ll = next_ll;
        break;
      }
      ll = next_ll;
    }
    if (ll > best.fit_score) {
      best.fit_score = ll;
      best.theta = theta;
      best.rho = rho;
    }
  }
  return best;
}

/// Hard assignment: nearest mode (kmodes) or maximum responsibility (bmm);
/// ties break to the lowest cluster index.
inline std::uint32_t assign(const ClusterModel& model, const SpinString& s) {
  using namespace cluster_detail;
  if (model.kind == ClusterKind::kmodes) return nearest_mode(model.modes, s);
  std::uint32_t best = 0;
  double best_lp = -std::numeric_limits<double>::infinity();
  for (std::uint32_t c = 0; c < model.k; ++c) {
    double lp = std::log(model.rho[c]);
    for (std::uint32_t p = 0; p < model.n_mo; ++p)
      lp += s.test(p) ? std::log(model.theta[c][p]) : std::log1p(-model.theta[c][p]);
    if (lp > best_lp + 1e-15) {
      best_lp = lp;
      best = c;
    }
  }
  return best;
}

/// Cluster sampling weights w_k, per-batch allocations m_k = ceil(w_k * S),
/// and raw reference occupancy vectors (probability-weighted occupations).
inline ClusterStats cluster_stats(const WeightedPool& pool, const ClusterModel& model,
                                  std::uint32_t budget) {
  ClusterStats stats;
  stats.w.assign(model.k, 0.0);
  stats.m.assign(model.k, 0);
  stats.n_raw.assign(model.k, std::vector<double>(model.n_mo, 0.0));
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const std::uint32_t c = assign(model, pool.strings[i]);
    stats.w[c] += pool.pi[i];
    for (std::uint32_t p = 0; p < model.n_mo; ++p)
      if (pool.strings[i].test(p)) stats.n_raw[c][p] += pool.pi[i];
  }
  for (std::uint32_t c = 0; c < model.k; ++c)
    if (stats.w[c] > 0.0)
      stats.m[c] = static_cast<std::uint32_t>(
          std::ceil(stats.w[c] * static_cast<double>(budget) - 1e-12));
  return stats;
}

inline void save_cluster_model(const ClusterModel& model, std::ostream& out) {
  char buf[64];
  out << "kind " << cluster_kind_name(model.kind) << '\n';
  out << "k " << model.k << '\n';
  out << "n_mo " << model.n_mo << '\n';
  out << "seed " << model.seed << '\n';
  std::snprintf(buf, sizeof buf, "%.17g", model.fit_score);
  out << "fit_score " << buf << '\n';
  if (model.kind == ClusterKind::kmodes) {
    for (std::uint32_t c = 0; c < model.k; ++c)
      out << "mode " << c << ' ' << to_text(model.modes[c]) << '\n';
  } else {
    for (std::uint32_t c = 0; c < model.k; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", model.rho[c]);
      out << "rho " << c << ' ' << buf << '\n';
      out << "theta " << c;
      for (double t : model.theta[c]) {
        std::snprintf(buf, sizeof buf, " %.17g", t);
        out << buf;
      }
      out << '\n';
    }
  }
}

inline ClusterModel load_cluster_model(std::istream& in) {
  ClusterModel model;
  std::string key;
  bool have_kind = false;
  while (in >> key) {
    if (key == "kind") {
      std::string name;
      in >> name;
      model.kind = cluster_kind_from_name(name);
      have_kind = true;
    } else if (key == "k") {
      in >> model.k;
    } else if (key == "n_mo") {
      in >> model.n_mo;
    } else if (key == "seed") {
      in >> model.seed;
    } else if (key == "fit_score") {
      in >> model.fit_score;
    } else if (key == "mode") {
      std::uint32_t c;
      std::string bits;
      in >> c >> bits;
      model.modes.resize(std::max<std::size_t>(model.modes.size(), c + 1));
      model.modes[c] = spin_string_from_text(bits);
    } else if (key == "rho") {
      std::uint32_t c;
      double v;
      in >> c >> v;
      model.rho.resize(std::max<std::size_t>(model.rho.size(), c + 1));
      model.rho[c] = v;
    } else if (key == "theta") {
      std::uint32_t c;
      in >> c;
      model.theta.resize(std::max<std::size_t>(model.theta.size(), c + 1));
      model.theta[c].resize(model.n_mo);
      for (std::uint32_t p = 0; p < model.n_mo; ++p) in >> model.theta[c][p];
    } else {
      throw InputError("cluster model: unknown key '" + key + "'");
    }
  }
  if (!have_kind || model.k == 0) throw InputError("cluster model: incomplete file");
  return model;
}

}  // namespace csqd
