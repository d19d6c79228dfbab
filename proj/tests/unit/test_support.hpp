#pragma once

#include <cstdint>
#include <vector>

#include "csqd/bits.hpp"
#include "csqd/hamiltonian.hpp"
#include "csqd/rng.hpp"

namespace csqd::test_support {

// Random integrals with full one- and two-electron symmetry; the two-electron
// part is scaled down to keep spectra sane.
inline ActiveSpaceHamiltonian random_hamiltonian(std::uint32_t n, std::uint32_t n_alpha,
                                                 std::uint32_t n_beta, RngStream& rng,
                                                 double two_body_scale = 0.3) {
  ActiveSpaceHamiltonian ham;
  ham.n_orbitals = n;
  ham.n_alpha = n_alpha;
  ham.n_beta = n_beta;
  ham.e_core = rng.uniform() - 0.5;
  ham.h.assign(std::size_t(n) * n, 0.0);
  ham.eri.assign(std::size_t(n) * n * n * n, 0.0);
  for (std::uint32_t p = 0; p < n; ++p)
    for (std::uint32_t r = 0; r <= p; ++r) {
      const double v = 2.0 * (rng.uniform() - 0.5) - (p == r ? 1.0 : 0.0);
      ham.h[p * n + r] = ham.h[r * n + p] = v;
    }
  auto idx = [n](std::uint32_t a, std::uint32_t b, std::uint32_t c, std::uint32_t d) {
    return ((std::size_t(a) * n + b) * n + c) * n + d;
  };
  for (std::uint32_t p = 0; p < n; ++p)
    for (std::uint32_t r = 0; r <= p; ++r)
      for (std::uint32_t q = 0; q < n; ++q)
        for (std::uint32_t s = 0; s <= q; ++s) {
          if (p * (p + 1) / 2 + r < q * (q + 1) / 2 + s) continue;
          const double v = two_body_scale * (rng.uniform() - 0.5) +
                           (p == r && q == s ? 0.2 : 0.0);
          for (auto [a, b, c, d] : {std::array<std::uint32_t, 4>{p, r, q, s},
                                    std::array<std::uint32_t, 4>{r, p, q, s},
                                    std::array<std::uint32_t, 4>{p, r, s, q},
                                    std::array<std::uint32_t, 4>{r, p, s, q},
                                    std::array<std::uint32_t, 4>{q, s, p, r},
                                    std::array<std::uint32_t, 4>{s, q, p, r},
                                    std::array<std::uint32_t, 4>{q, s, r, p},
                                    std::array<std::uint32_t, 4>{s, q, r, p}})
            ham.eri[idx(a, b, c, d)] = v;
        }
  return ham;
}

inline SpinString random_sector_string(std::uint32_t n, std::uint32_t n_sigma, RngStream& rng) {
  SpinString s;
  s.n = n;
  std::uint32_t placed = 0;
  while (placed < n_sigma) {
    const auto p = static_cast<std::uint32_t>(rng.uniform_below(n));
    if (!s.test(p)) {
      s.set(p);
      ++placed;
    }
  }
  return s;
}

// Distinct in-sector strings, lexicographically sorted.
inline std::vector<SpinString> random_sector_subset(std::uint32_t n, std::uint32_t n_sigma,
                                                    std::size_t count, RngStream& rng) {
  std::vector<SpinString> out;
  while (out.size() < count) {
    const SpinString s = random_sector_string(n, n_sigma, rng);
    bool dup = false;
    for (const auto& t : out) dup |= (t == s);
    if (!dup) out.push_back(s);
  }
  std::sort(out.begin(), out.end(), lex_less);
  return out;
}

}  // namespace csqd::test_support
