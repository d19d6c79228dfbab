#pragma once

#include <bit>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "csqd/errors.hpp"

namespace csqd {

/// Occupation string of one spin sector over n spatial orbitals.
/// Bit p is the occupation of orbital p; text form prints orbital 0 leftmost.
struct SpinString {
  std::uint64_t bits = 0;
  std::uint32_t n = 0;

  bool test(std::uint32_t p) const { return (bits >> p) & 1u; }
  void set(std::uint32_t p) { bits |= std::uint64_t{1} << p; }
  void clear(std::uint32_t p) { bits &= ~(std::uint64_t{1} << p); }

  friend bool operator==(const SpinString&, const SpinString&) = default;
};

inline std::uint32_t hamming_weight(const SpinString& s) {
  return static_cast<std::uint32_t>(std::popcount(s.bits));
}

// Textual lexicographic order (orbital 0 is the most significant character).
// '0' < '1', so at the lowest differing orbital the unoccupied string sorts first.
inline bool lex_less(const SpinString& a, const SpinString& b) {
  if (a.n != b.n) return a.n < b.n;
  const std::uint64_t d = a.bits ^ b.bits;
  if (d == 0) return false;
  const std::uint64_t low = d & (~d + 1);
  return (a.bits & low) == 0;
}

struct SpinStringLess {
  bool operator()(const SpinString& a, const SpinString& b) const { return lex_less(a, b); }
};

inline std::string to_text(const SpinString& s) {
  std::string out(s.n, '0');
  for (std::uint32_t p = 0; p < s.n; ++p)
    if (s.test(p)) out[p] = '1';
  return out;
}

inline SpinString spin_string_from_text(std::string_view text) {
  if (text.size() > 64) throw InputError("occupation string longer than 64 orbitals");
  SpinString s;
  s.n = static_cast<std::uint32_t>(text.size());
  for (std::uint32_t p = 0; p < s.n; ++p) {
    if (text[p] == '1')
      s.set(p);
    else if (text[p] != '0')
      throw InputError("occupation string contains non-0/1 character");
  }
  return s;
}

/// Full determinant: alpha block then beta block in the fixed canonical order.
struct Determinant {
  SpinString alpha;
  SpinString beta;

  friend bool operator==(const Determinant&, const Determinant&) = default;
};

struct DeterminantLess {
  bool operator()(const Determinant& a, const Determinant& b) const {
    if (!(a.alpha == b.alpha)) return lex_less(a.alpha, b.alpha);
    return lex_less(a.beta, b.beta);
  }
};

/// Split a 2*n_mo character 0/1 string into (alpha, beta) spin strings.
inline Determinant split_bitstring(std::string_view text, std::uint32_t n_mo) {
  if (text.size() != 2 * static_cast<std::size_t>(n_mo))
    throw InputError("full bitstring has length " + std::to_string(text.size()) +
                     ", expected " + std::to_string(2 * n_mo));
  return Determinant{spin_string_from_text(text.substr(0, n_mo)),
                     spin_string_from_text(text.substr(n_mo, n_mo))};
}

inline std::string to_text(const Determinant& d) { return to_text(d.alpha) + to_text(d.beta); }

/// Per-sector excitation degree: half the Hamming distance of the occupation strings.
inline std::pair<std::uint32_t, std::uint32_t> excitation_degree(const Determinant& a,
                                                                 const Determinant& b) {
  if (a.alpha.n != b.alpha.n || a.beta.n != b.beta.n)
    throw InputError("excitation_degree: orbital counts differ");
  const auto da = static_cast<std::uint32_t>(std::popcount(a.alpha.bits ^ b.alpha.bits)) / 2;
  const auto db = static_cast<std::uint32_t>(std::popcount(a.beta.bits ^ b.beta.bits)) / 2;
  return {da, db};
}

inline std::vector<std::uint32_t> occupied_orbitals(const SpinString& s) {
  std::vector<std::uint32_t> occ;
  occ.reserve(hamming_weight(s));
  std::uint64_t b = s.bits;
  while (b) {
    occ.push_back(static_cast<std::uint32_t>(std::countr_zero(b)));
    b &= b - 1;
  }
  return occ;
}

// Parity helpers for fermionic phases (number of set bits strictly below p).
inline int parity_below(std::uint64_t bits, std::uint32_t p) {
  const std::uint64_t mask = (std::uint64_t{1} << p) - 1;
  return std::popcount(bits & mask) & 1;
}

/// Phase of the single excitation hole -> particle applied to s
/// (annihilate at `hole`, then create at `particle`), with both phases
/// counted within the sector.
inline int single_excitation_phase(const SpinString& s, std::uint32_t hole,
                                   std::uint32_t particle) {
  int par = parity_below(s.bits, hole);
  const std::uint64_t removed = s.bits & ~(std::uint64_t{1} << hole);
  par ^= parity_below(removed, particle);
  return par ? -1 : 1;
}

}  // namespace csqd
