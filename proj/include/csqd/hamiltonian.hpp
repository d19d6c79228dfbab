#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "csqd/errors.hpp"

namespace csqd {

/// Active-space integrals in chemists' notation: h[p][r] and (pr|qs), plus the
/// constant shift e_core (nuclear repulsion and frozen-core contribution).
/// Stored dense and fully symmetrized; immutable after construction.
struct ActiveSpaceHamiltonian {
  std::uint32_t n_orbitals = 0;
  std::vector<double> h;    // n*n, row-major
  std::vector<double> eri;  // n^4, index ((p*n+r)*n+q)*n+s = (pr|qs)
  double e_core = 0.0;
  std::uint32_t n_alpha = 0;
  std::uint32_t n_beta = 0;

  double one_body(std::uint32_t p, std::uint32_t r) const { return h[p * n_orbitals + r]; }
  double two_body(std::uint32_t p, std::uint32_t r, std::uint32_t q, std::uint32_t s) const {
    const std::size_t n = n_orbitals;
    return eri[((p * n + r) * n + q) * n + s];
  }
};

struct InvariantViolation {
  std::string what;
};

namespace detail {

inline void set_sym8(std::vector<double>& eri, std::vector<char>& seen, std::uint32_t n,
                     std::uint32_t p, std::uint32_t r, std::uint32_t q, std::uint32_t s,
                     double value, int line_no) {
  const std::uint32_t idx[8][4] = {{p, r, q, s}, {r, p, q, s}, {p, r, s, q}, {r, p, s, q},
                                   {q, s, p, r}, {s, q, p, r}, {q, s, r, p}, {s, q, r, p}};
  for (const auto& t : idx) {
    const std::size_t flat = ((static_cast<std::size_t>(t[0]) * n + t[1]) * n + t[2]) * n + t[3];
    if (seen[flat] && std::abs(eri[flat] - value) > 1e-10)
      throw InputError("FCIDUMP line " + std::to_string(line_no) +
                       ": conflicting duplicate two-electron integral");
    eri[flat] = value;
    seen[flat] = 1;
  }
}

inline std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

// Pull "KEY=value" integers out of the FCIDUMP namelist header.
inline bool header_int(const std::string& header, const std::string& key, long& out) {
  std::size_t pos = 0;
  while ((pos = header.find(key, pos)) != std::string::npos) {
    const std::size_t after = pos + key.size();
    // must be a standalone key followed by '='
    if (pos > 0 && (std::isalnum(static_cast<unsigned char>(header[pos - 1])) || header[pos - 1] == '_')) {
      pos = after;
      continue;
    }
    std::size_t eq = after;
    while (eq < header.size() && std::isspace(static_cast<unsigned char>(header[eq]))) ++eq;
    if (eq >= header.size() || header[eq] != '=') {
      pos = after;
      continue;
    }
    ++eq;
    while (eq < header.size() && std::isspace(static_cast<unsigned char>(header[eq]))) ++eq;
    char* end = nullptr;
    out = std::strtol(header.c_str() + eq, &end, 10);
    if (end == header.c_str() + eq) return false;
    return true;
  }
  return false;
}

}  // namespace detail

/// Parse an FCIDUMP stream. Indices are 1-based on disk and 0-based in memory;
/// unlisted symmetry-equivalent integrals are filled from the listed ones.
inline ActiveSpaceHamiltonian parse_fcidump(std::istream& in) {
  std::string line;
  std::string header;
  int line_no = 0;
  bool header_done = false;
  while (std::getline(in, line)) {
    ++line_no;
    header += ' ';
    header += detail::upper(line);
    if (header.find("&END") != std::string::npos ||
        header.find('/') != std::string::npos) {
      header_done = true;
      break;
    }
  }
  if (!header_done)
    throw InputError("FCIDUMP line " + std::to_string(line_no) +
                     ": header not terminated by &END or /");

  long norb = 0, nelec = 0, ms2 = 0;
  if (!detail::header_int(header, "NORB", norb))
    throw InputError("FCIDUMP header: missing NORB");
  if (!detail::header_int(header, "NELEC", nelec))
    throw InputError("FCIDUMP header: missing NELEC");
  detail::header_int(header, "MS2", ms2);  // defaults to 0
  if (norb < 1 || norb > 64)
    throw InputError("FCIDUMP header: NORB out of supported range [1,64]");
  if ((nelec + ms2) % 2 != 0 || nelec < ms2 || nelec + ms2 < 0)
    throw InputError("FCIDUMP header: NELEC/MS2 do not define integer sector counts");

  ActiveSpaceHamiltonian ham;
  ham.n_orbitals = static_cast<std::uint32_t>(norb);
  ham.n_alpha = static_cast<std::uint32_t>((nelec + ms2) / 2);
  ham.n_beta = static_cast<std::uint32_t>(nelec - (nelec + ms2) / 2);
  const std::size_t n = ham.n_orbitals;
  ham.h.assign(n * n, 0.0);
  ham.eri.assign(n * n * n * n, 0.0);
  std::vector<char> seen_h(n * n, 0);
  std::vector<char> seen_eri(n * n * n * n, 0);

  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    double value;
    long p, r, q, s;
    if (!(ss >> value)) {
      // blank or whitespace-only lines are tolerated
      std::string rest;
      if (ss.clear(), !(std::istringstream(line) >> rest)) continue;
      throw InputError("FCIDUMP line " + std::to_string(line_no) + ": malformed record");
    }
    if (!(ss >> p >> r >> q >> s))
      throw InputError("FCIDUMP line " + std::to_string(line_no) + ": malformed record");
    for (long idx : {p, r, q, s})
      if (idx < 0 || idx > norb)
        throw InputError("FCIDUMP line " + std::to_string(line_no) + ": orbital index " +
                         std::to_string(idx) + " outside [0," + std::to_string(norb) + "]");
    if (p == 0 && r == 0 && q == 0 && s == 0) {
      ham.e_core = value;
    } else if (q == 0 && s == 0) {
      if (p == 0 || r == 0)
        throw InputError("FCIDUMP line " + std::to_string(line_no) +
                         ": one-electron record with a zero index");
      const std::size_t a = static_cast<std::size_t>(p - 1), b = static_cast<std::size_t>(r - 1);
      for (std::size_t flat : {a * n + b, b * n + a}) {
        if (seen_h[flat] && std::abs(ham.h[flat] - value) > 1e-10)
          throw InputError("FCIDUMP line " + std::to_string(line_no) +
                           ": conflicting duplicate one-electron integral");
        ham.h[flat] = value;
        seen_h[flat] = 1;
      }
    } else if (p != 0 && r != 0 && q != 0 && s != 0) {
      detail::set_sym8(ham.eri, seen_eri, ham.n_orbitals, static_cast<std::uint32_t>(p - 1),
                       static_cast<std::uint32_t>(r - 1), static_cast<std::uint32_t>(q - 1),
                       static_cast<std::uint32_t>(s - 1), value, line_no);
    } else {
      throw InputError("FCIDUMP line " + std::to_string(line_no) +
                       ": unsupported index pattern (" + std::to_string(p) + " " +
                       std::to_string(r) + " " + std::to_string(q) + " " + std::to_string(s) + ")");
    }
  }
  if (ham.n_alpha > ham.n_orbitals || ham.n_beta > ham.n_orbitals)
    throw InputError("FCIDUMP: electron count exceeds orbital count");
  return ham;
}

/// Emit in the same record layout parse_fcidump accepts; canonical unique
/// entries only. parse(emit(h)) reproduces all fields within 1e-12.
inline void emit_fcidump(const ActiveSpaceHamiltonian& ham, std::ostream& out) {
  const std::uint32_t n = ham.n_orbitals;
  out << "&FCI NORB=" << n << ",NELEC=" << ham.n_alpha + ham.n_beta
      << ",MS2=" << static_cast<long>(ham.n_alpha) - static_cast<long>(ham.n_beta) << ",\n";
  out << "&END\n";
  char buf[64];
  auto rec = [&](double v, std::uint32_t p, std::uint32_t r, std::uint32_t q, std::uint32_t s) {
    std::snprintf(buf, sizeof buf, "%.17g %u %u %u %u\n", v, p, r, q, s);
    out << buf;
  };
  auto pair_index = [](std::uint32_t a, std::uint32_t b) { return a * (a + 1) / 2 + b; };
  for (std::uint32_t p = 0; p < n; ++p)
    for (std::uint32_t r = 0; r <= p; ++r)
      for (std::uint32_t q = 0; q < n; ++q)
        for (std::uint32_t s = 0; s <= q; ++s) {
          if (pair_index(p, r) < pair_index(q, s)) continue;
          const double v = ham.two_body(p, r, q, s);
          if (v != 0.0) rec(v, p + 1, r + 1, q + 1, s + 1);
        }
  for (std::uint32_t p = 0; p < n; ++p)
    for (std::uint32_t r = 0; r <= p; ++r)
      if (ham.one_body(p, r) != 0.0) rec(ham.one_body(p, r), p + 1, r + 1, 0, 0);
  rec(ham.e_core, 0, 0, 0, 0);
}

/// Diagnostic check of the type invariants; empty result means all hold.
inline std::vector<InvariantViolation> validate(const ActiveSpaceHamiltonian& ham) {
  std::vector<InvariantViolation> out;
  const std::uint32_t n = ham.n_orbitals;
  for (std::uint32_t p = 0; p < n; ++p)
    for (std::uint32_t r = 0; r < p; ++r) {
      const double d = std::abs(ham.one_body(p, r) - ham.one_body(r, p));
      if (d > 1e-12)
        out.push_back({"h[" + std::to_string(p) + "][" + std::to_string(r) +
                       "] asymmetric by " + std::to_string(d)});
    }
  for (std::uint32_t p = 0; p < n; ++p)
    for (std::uint32_t r = 0; r < n; ++r)
      for (std::uint32_t q = 0; q < n; ++q)
        for (std::uint32_t s = 0; s < n; ++s) {
          const double v = ham.two_body(p, r, q, s);
          const double worst = std::max({std::abs(v - ham.two_body(r, p, q, s)),
                                         std::abs(v - ham.two_body(p, r, s, q)),
                                         std::abs(v - ham.two_body(q, s, p, r))});
          if (worst > 1e-12) {
            out.push_back({"eri(" + std::to_string(p) + "," + std::to_string(r) + "," +
                           std::to_string(q) + "," + std::to_string(s) +
                           ") breaks 8-fold symmetry by " + std::to_string(worst)});
          }
        }
  if (ham.n_alpha > n)
    out.push_back({"n_alpha " + std::to_string(ham.n_alpha) + " exceeds orbital count"});
  if (ham.n_beta > n)
    out.push_back({"n_beta " + std::to_string(ham.n_beta) + " exceeds orbital count"});
  return out;
}

}  // namespace csqd
