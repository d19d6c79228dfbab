#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "csqd/bits.hpp"
#include "csqd/errors.hpp"
#include "csqd/hamiltonian.hpp"

namespace csqd {

/// All C(n_mo, n_sigma) spin strings of one sector in lexicographic order,
/// with index maps in both directions.
struct DenseSectorBasis {
  std::vector<SpinString> strings;
  std::map<SpinString, std::size_t, SpinStringLess> index;

  static DenseSectorBasis build(std::uint32_t n_mo, std::uint32_t n_sigma) {
    DenseSectorBasis basis;
    SpinString s;
    s.n = n_mo;
    enumerate(s, 0, n_sigma, basis.strings);
    std::sort(basis.strings.begin(), basis.strings.end(), lex_less);
    for (std::size_t i = 0; i < basis.strings.size(); ++i) basis.index[basis.strings[i]] = i;
    return basis;
  }

 private:
  static void enumerate(SpinString s, std::uint32_t next, std::uint32_t remaining,
                        std::vector<SpinString>& out) {
    if (remaining == 0) {
      out.push_back(s);
      return;
    }
    if (next + remaining > s.n) return;
    SpinString with = s;
    with.set(next);
    enumerate(with, next + 1, remaining - 1, out);
    enumerate(s, next + 1, remaining, out);
  }
};

namespace oracle_detail {

// Second-quantized state on the 2*n_mo spin-orbital chain: alpha block
// (global indices 0..n-1) followed by the beta block (n..2n-1). Creation
// order of Eq-style canonical determinants matches ascending global index.
struct Ket {
  std::uint64_t alpha = 0;
  std::uint64_t beta = 0;
  int sign = 1;
  bool dead = false;
};

inline int parity_below_global(const Ket& k, std::uint32_t n_mo, std::uint32_t g) {
  if (g < n_mo) return parity_below(k.alpha, g);
  return (std::popcount(k.alpha) + parity_below(k.beta, g - n_mo)) & 1;
}

inline void annihilate(Ket& k, std::uint32_t n_mo, std::uint32_t g) {
  if (k.dead) return;
  std::uint64_t& bits = g < n_mo ? k.alpha : k.beta;
  const std::uint32_t p = g < n_mo ? g : g - n_mo;
  if (!((bits >> p) & 1u)) {
    k.dead = true;
    return;
  }
  if (parity_below_global(k, n_mo, g)) k.sign = -k.sign;
  bits &= ~(std::uint64_t{1} << p);
}

inline void create(Ket& k, std::uint32_t n_mo, std::uint32_t g) {
  if (k.dead) return;
  std::uint64_t& bits = g < n_mo ? k.alpha : k.beta;
  const std::uint32_t p = g < n_mo ? g : g - n_mo;
  if ((bits >> p) & 1u) {
    k.dead = true;
    return;
  }
  if (parity_below_global(k, n_mo, g)) k.sign = -k.sign;
  bits |= std::uint64_t{1} << p;
}

using PairIndex = std::map<std::pair<std::uint64_t, std::uint64_t>, std::size_t>;

inline PairIndex product_index(const std::vector<SpinString>& d) {
  PairIndex idx;
  const std::size_t n = d.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) idx[{d[i].bits, d[j].bits}] = i * n + j;
  return idx;
}

// Accumulate coeff * O|ket> into the matrix column, dropping components
// outside the basis (that is the projector).
template <typename Op>
inline void apply_term(Eigen::MatrixXd& m, const PairIndex& idx, std::size_t col, const Ket& ket,
                       double coeff, Op&& op) {
  Ket out = ket;
  op(out);
  if (out.dead) return;
  auto it = idx.find({out.alpha, out.beta});
  if (it == idx.end()) return;
  m(static_cast<Eigen::Index>(it->second), static_cast<Eigen::Index>(col)) += coeff * out.sign;
}

}  // namespace oracle_detail

/// Dense matrix of the Hamiltonian (without e_core) projected on the product
/// basis d x d, built by direct application of every second-quantized term.
inline Eigen::MatrixXd dense_projected(const ActiveSpaceHamiltonian& ham,
                                       const std::vector<SpinString>& d,
                                       std::size_t cap = 4000000) {
  using namespace oracle_detail;
  const std::size_t dim = d.size() * d.size();
  if (dim > cap) throw InputError("dense_projected: basis dimension exceeds cap");
  const std::uint32_t n = ham.n_orbitals;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim),
                                            static_cast<Eigen::Index>(dim));
  const PairIndex idx = product_index(d);
  for (const auto& [bits, col] : idx) {
    Ket ket{bits.first, bits.second, 1, false};
    for (std::uint32_t spin = 0; spin < 2; ++spin) {
      const std::uint32_t off = spin * n;
      for (std::uint32_t p = 0; p < n; ++p)
        for (std::uint32_t r = 0; r < n; ++r) {
          const double coeff = ham.one_body(p, r);
          if (coeff == 0.0) continue;
          apply_term(m, idx, col, ket, coeff, [&](Ket& k) {
            annihilate(k, n, r + off);
            create(k, n, p + off);
          });
        }
    }
    for (std::uint32_t sp = 0; sp < 2; ++sp)
      for (std::uint32_t tp = 0; tp < 2; ++tp) {
        const std::uint32_t so = sp * n, to = tp * n;
        for (std::uint32_t p = 0; p < n; ++p)
          for (std::uint32_t r = 0; r < n; ++r)
            for (std::uint32_t q = 0; q < n; ++q)
              for (std::uint32_t s = 0; s < n; ++s) {
                const double coeff = 0.5 * ham.two_body(p, r, q, s);
                if (coeff == 0.0) continue;
                apply_term(m, idx, col, ket, coeff, [&](Ket& k) {
                  annihilate(k, n, r + so);
                  annihilate(k, n, s + to);
                  create(k, n, q + to);
                  create(k, n, p + so);
                });
              }
      }
  }
  return m;
}

/// Dense S^2 = S-S+ + Sz(Sz+1) on the product basis d x d.
inline Eigen::MatrixXd dense_s2(std::uint32_t n_mo, const std::vector<SpinString>& d,
                                std::size_t cap = 4000000) {
  using namespace oracle_detail;
  const std::size_t dim = d.size() * d.size();
  if (dim > cap) throw InputError("dense_s2: basis dimension exceeds cap");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim),
                                            static_cast<Eigen::Index>(dim));
  const PairIndex idx = product_index(d);
  for (const auto& [bits, col] : idx) {
    Ket ket{bits.first, bits.second, 1, false};
    const double sz = 0.5 * (std::popcount(ket.alpha) - std::popcount(ket.beta));
    m(static_cast<Eigen::Index>(col), static_cast<Eigen::Index>(col)) += sz * (sz + 1.0);
    // S-S+ = sum_{pq} b+_q a_q a+_p b_p with a = alpha, b = beta modes
    for (std::uint32_t p = 0; p < n_mo; ++p)
      for (std::uint32_t q = 0; q < n_mo; ++q)
        apply_term(m, idx, col, ket, 1.0, [&](Ket& k) {
          annihilate(k, n_mo, n_mo + p);
          create(k, n_mo, p);
          annihilate(k, n_mo, q);
          create(k, n_mo, n_mo + q);
        });
  }
  return m;
}

struct DenseFciResult {
  double energy = 0.0;            // includes e_core
  Eigen::VectorXd coefficients;   // over DenseSectorBasis product order (alpha-major)
  DenseSectorBasis basis;         // shared by both sectors (n_alpha == n_beta)
};

/// Lowest eigenpair of the full fixed-sector Hamiltonian. Desk-scale only.
inline DenseFciResult dense_fci(const ActiveSpaceHamiltonian& ham, std::size_t cap = 4000000) {
  if (ham.n_alpha != ham.n_beta)
    throw InputError("dense_fci: only the S_z = 0 sector (n_alpha == n_beta) is supported");
  DenseFciResult res;
  res.basis = DenseSectorBasis::build(ham.n_orbitals, ham.n_alpha);
  const std::size_t nstr = res.basis.strings.size();
  if (nstr * nstr > cap) throw InputError("dense_fci: sector dimension exceeds cap");
  const Eigen::MatrixXd m = dense_projected(ham, res.basis.strings, cap);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  res.energy = es.eigenvalues()(0) + ham.e_core;
  res.coefficients = es.eigenvectors().col(0);
  // fixed sign convention: largest-magnitude coefficient positive
  Eigen::Index imax;
  res.coefficients.cwiseAbs().maxCoeff(&imax);
  if (res.coefficients(imax) < 0) res.coefficients = -res.coefficients;
  return res;
}

}  // namespace csqd
