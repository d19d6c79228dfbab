#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "csqd/bits.hpp"
#include "csqd/errors.hpp"
#include "csqd/oracle.hpp"
#include "csqd/rng.hpp"

namespace csqd {

/// Aggregated measurement outcomes: full bitstring -> shot count.
struct SampleSet {
  std::map<Determinant, std::uint64_t, DeterminantLess> entries;
  std::uint32_t n_mo = 0;
  std::uint64_t total_shots = 0;

  void add(const Determinant& d, std::uint64_t count) {
    entries[d] += count;
    total_shots += count;
  }
};

/// Deduplicated single-spin strings with pooled empirical weights; the
/// weights always sum to 1.
struct WeightedPool {
  std::vector<SpinString> strings;  // lexicographically sorted
  std::vector<double> pi;

  std::size_t size() const { return strings.size(); }
};

/// Parse "BITSTRING COUNT" lines; '#' starts a comment, repeats are summed.
/// Optional ingestion flags handle datasets with a different bit layout:
/// swap_halves exchanges the two blocks, reverse_bits reverses each line.
inline SampleSet load_samples(std::istream& in, bool swap_halves = false,
                              bool reverse_bits = false) {
  SampleSet set;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ss(line);
    std::string bits;
    if (!(ss >> bits)) continue;
    long long count;
    if (!(ss >> count))
      throw InputError("samples line " + std::to_string(line_no) + ": missing count");
    std::string trailing;
    if (ss >> trailing)
      throw InputError("samples line " + std::to_string(line_no) + ": trailing tokens");
    if (count <= 0)
      throw InputError("samples line " + std::to_string(line_no) + ": count must be positive");
    if (bits.size() % 2 != 0)
      throw InputError("samples line " + std::to_string(line_no) + ": odd bitstring length");
    if (reverse_bits) std::reverse(bits.begin(), bits.end());
    if (set.n_mo == 0)
      set.n_mo = static_cast<std::uint32_t>(bits.size() / 2);
    else if (bits.size() != 2 * static_cast<std::size_t>(set.n_mo))
      throw InputError("samples line " + std::to_string(line_no) + ": inconsistent length");
    Determinant d;
    try {
      d = split_bitstring(bits, set.n_mo);
    } catch (const Error& e) {
      throw InputError("samples line " + std::to_string(line_no) + ": " + e.what());
    }
    if (swap_halves) std::swap(d.alpha, d.beta);
    set.add(d, static_cast<std::uint64_t>(count));
  }
  return set;
}

inline void save_samples(const SampleSet& set, std::ostream& out) {
  out << "# bitstring count (alpha block then beta block, orbital 0 leftmost)\n";
  for (const auto& [d, count] : set.entries) out << to_text(d) << ' ' << count << '\n';
}

/// Pooled single-spin weights pi(mu): each shot contributes its alpha and its
/// beta string half a shot each. Exact integer counts are kept until the
/// final division.
inline WeightedPool pool_spin_strings(const SampleSet& samples) {
  if (samples.total_shots == 0) throw InputError("pool_spin_strings: empty sample set");
  std::map<SpinString, std::uint64_t, SpinStringLess> counts;
  for (const auto& [d, count] : samples.entries) {
    counts[d.alpha] += count;
    counts[d.beta] += count;
  }
  WeightedPool pool;
  pool.strings.reserve(counts.size());
  pool.pi.reserve(counts.size());
  const double denom = 2.0 * static_cast<double>(samples.total_shots);
  for (const auto& [s, c] : counts) {
    pool.strings.push_back(s);
    pool.pi.push_back(static_cast<double>(c) / denom);
  }
  return pool;
}

/// Keep exactly the entries whose per-sector Hamming weights hit the target.
inline SampleSet postselect(const SampleSet& samples, std::uint32_t n_alpha,
                            std::uint32_t n_beta) {
  SampleSet out;
  out.n_mo = samples.n_mo;
  for (const auto& [d, count] : samples.entries)
    if (hamming_weight(d.alpha) == n_alpha && hamming_weight(d.beta) == n_beta)
      out.add(d, count);
  return out;
}

/// Synthetic stand-in for hardware sampling: draw determinants from |c_x|^2
/// over the full sector basis, then flip every bit independently with
/// flip_prob. Each shot uses its own counter-derived stream, so any sharding
/// of the shot range reproduces the same set.
inline SampleSet synth_sample(const DenseFciResult& ground_truth, double flip_prob,
                              std::uint64_t shots, std::uint64_t seed) {
  if (flip_prob < 0.0 || flip_prob >= 0.5)
    throw InputError("synth_sample: flip_prob must lie in [0, 0.5)");
  const double norm = ground_truth.coefficients.norm();
  if (std::abs(norm - 1.0) > 1e-8)
    throw InputError("synth_sample: ground-truth vector is not normalized");
  const auto& strings = ground_truth.basis.strings;
  const std::size_t nstr = strings.size();
  const std::uint32_t n_mo = strings.empty() ? 0 : strings.front().n;
  std::vector<double> cdf(nstr * nstr);
  double acc = 0.0;
  for (std::size_t i = 0; i < cdf.size(); ++i) {
    const double c = ground_truth.coefficients(static_cast<Eigen::Index>(i));
    acc += c * c;
    cdf[i] = acc;
  }
  SampleSet set;
  set.n_mo = n_mo;
  for (std::uint64_t shot = 0; shot < shots; ++shot) {
    RngStream rng = RngStream::derived(seed, {0x73686f74ull, shot});
    const double u = rng.uniform() * acc;
    const std::size_t idx = static_cast<std::size_t>(
        std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    Determinant d{strings[idx / nstr], strings[idx % nstr]};
    if (flip_prob > 0.0) {
      for (std::uint32_t p = 0; p < n_mo; ++p)
        if (rng.bernoulli(flip_prob)) d.alpha.bits ^= std::uint64_t{1} << p;
      for (std::uint32_t p = 0; p < n_mo; ++p)
        if (rng.bernoulli(flip_prob)) d.beta.bits ^= std::uint64_t{1} << p;
    }
    set.add(d, 1);
  }
  return set;
}

}  // namespace csqd
