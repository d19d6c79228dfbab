#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "csqd/bits.hpp"
#include "csqd/errors.hpp"
#include "csqd/hamiltonian.hpp"
#include "csqd/rng.hpp"

namespace csqd {

struct SolverOptions {
  double tol = 1e-9;      // relative residual norm
  int max_iter = 200;
  int max_subspace = 32;  // thick-restart cap
  bool check_symmetry = true;
};

/// Lowest eigenpair of the product-basis CI problem on D x D.
struct SubspaceSolution {
  std::vector<SpinString> d;  // ordered; shared by alpha and beta sectors
  Eigen::MatrixXd c;          // |D| x |D|; row = alpha string, col = beta string
  double energy = 0.0;        // <psi|H|psi> + e_core
  double s2 = 0.0;            // <psi|S^2|psi>
  std::size_t dim = 0;        // |D|^2
};

/// Matrix-free H and S^2 on the product basis D x D, with precomputed
/// per-string excitation connection lists. D is shared by both spin sectors,
/// so one set of lists serves alpha rows and beta columns alike.
class ProjectedOperator {
 public:
  ProjectedOperator(const ActiveSpaceHamiltonian& ham, std::vector<SpinString> d)
      : ham_(&ham), d_(std::move(d)), n_(d_.size()), norb_(ham.n_orbitals) {
    if (n_ == 0) throw InputError("projected operator over empty string set");
    for (const auto& s : d_) {
      if (s.n != norb_)
        throw InputError("string length " + std::to_string(s.n) +
                         " does not match orbital count " + std::to_string(norb_));
    }
    build_lists();
    build_diagonals();
  }

  std::size_t dim() const { return n_ * n_; }
  std::size_t n_strings() const { return n_; }
  const std::vector<SpinString>& strings() const { return d_; }
  const Eigen::VectorXd& h_diagonal() const { return diag_h_; }
  const Eigen::VectorXd& s2_diagonal() const { return diag_s2_; }

  /// w = H_D v (e_core excluded).
  void apply_h(const Eigen::VectorXd& v, Eigen::VectorXd& w) const {
    check_dim(v);
    w.setZero(static_cast<Eigen::Index>(dim()));
    const auto n = static_cast<Eigen::Index>(n_);
    Eigen::VectorXd z(n);
    for (std::size_t i = 0; i < n_; ++i) {
      const auto vi = v.segment(static_cast<Eigen::Index>(i) * n, n);
      if (vi.isZero(0.0)) continue;
      auto wi = w.segment(static_cast<Eigen::Index>(i) * n, n);
      // diagonal + all beta-sector moves keep the alpha row
      wi += diag_h_.segment(static_cast<Eigen::Index>(i) * n, n).cwiseProduct(vi);
      for (const auto& e : singles_) {
        wi(e.j) += e.sign * (e.f + g_(e.pair, static_cast<Eigen::Index>(i))) * vi(e.i);
      }
      for (const auto& e : doubles_) wi(e.j) += e.value * vi(e.i);
      // alpha-sector moves from row i
      const auto [sb, se] = singles_row_span(i);
      const auto [db, de] = doubles_row_span(i);
      for (std::size_t k = db; k < de; ++k) {
        const auto& e = doubles_[k];
        w.segment(static_cast<Eigen::Index>(e.j) * n, n) += e.value * vi;
      }
      if (sb == se) continue;
      // opposite-spin doubles: scatter beta singles of v-row i, contract with
      // the ERI over orbital pairs, then add along each alpha single.
      Eigen::MatrixXd y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(pairs_.size()), n);
      for (const auto& e : singles_) y(e.pair, e.j) += e.sign * vi(e.i);
      for (std::size_t k = sb; k < se; ++k) {
        const auto& e = singles_[k];
        z.noalias() = y.transpose() * eri_pairs_.row(e.pair).transpose();
        auto wj = w.segment(static_cast<Eigen::Index>(e.j) * n, n);
        wj += e.sign * (e.f * vi + g_.row(e.pair).transpose().cwiseProduct(vi));
        wj += e.sign * z;
      }
    }
  }

  /// w = S^2 v in the same basis.
  void apply_s2(const Eigen::VectorXd& v, Eigen::VectorXd& w) const {
    check_dim(v);
    w.setZero(static_cast<Eigen::Index>(dim()));
    const auto n = static_cast<Eigen::Index>(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      const auto vi = v.segment(static_cast<Eigen::Index>(i) * n, n);
      if (vi.isZero(0.0)) continue;
      auto wi = w.segment(static_cast<Eigen::Index>(i) * n, n);
      wi += diag_s2_.segment(static_cast<Eigen::Index>(i) * n, n).cwiseProduct(vi);
      const auto [sb, se] = singles_row_span(i);
      for (std::size_t k = sb; k < se; ++k) {
        const auto& e = singles_[k];
        // spin exchange pairs an alpha move (hole->particle) with the beta
        // move (particle->hole) on the same orbitals; element is -ga*gb
        const auto it = swapped_.find(pair_key(hole_of_[k], particle_of_[k]));
        if (it == swapped_.end()) continue;
        auto wj = w.segment(static_cast<Eigen::Index>(e.j) * n, n);
        for (const auto& b : it->second) wj(b.j) -= e.sign * b.sign * vi(b.i);
      }
    }
  }

 private:
  struct Single {
    Eigen::Index i, j;   // source and target string index
    Eigen::Index pair;   // row in pairs_/g_/eri_pairs_ for (particle, hole)
    double sign;
    double f;            // one-body plus same-sector mean-field part
  };
  struct Double {
    Eigen::Index i, j;
    double value;
  };

  static std::uint32_t pair_key(std::uint32_t p, std::uint32_t r) { return (p << 8) | r; }

  std::pair<std::size_t, std::size_t> singles_row_span(std::size_t i) const {
    return {singles_begin_[i], singles_begin_[i + 1]};
  }
  std::pair<std::size_t, std::size_t> doubles_row_span(std::size_t i) const {
    return {doubles_begin_[i], doubles_begin_[i + 1]};
  }

  void check_dim(const Eigen::VectorXd& v) const {
    if (v.size() != static_cast<Eigen::Index>(dim()))
      throw InputError("operator applied to vector of wrong dimension");
  }

  void build_lists() {
    const auto& ham = *ham_;
    std::map<std::uint32_t, Eigen::Index> pair_rows;
    std::vector<std::vector<Single>> singles_rows(n_);
    std::vector<std::vector<Double>> doubles_rows(n_);
    std::vector<std::vector<std::uint32_t>> hole_rows(n_), particle_rows(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      const std::uint64_t si = d_[i].bits;
      const auto occ_i = occupied_orbitals(d_[i]);
      for (std::size_t j = 0; j < n_; ++j) {
        if (i == j) continue;
        const std::uint64_t x = si ^ d_[j].bits;
        const int pc = std::popcount(x);
        if (pc == 2) {
          const auto r = static_cast<std::uint32_t>(std::countr_zero(si & x));
          const auto p = static_cast<std::uint32_t>(std::countr_zero(d_[j].bits & x));
          double f = ham.one_body(p, r);
          for (std::uint32_t q : occ_i) {
            if (q == r) continue;
            f += ham.two_body(p, r, q, q) - ham.two_body(p, q, q, r);
          }
          auto [it, inserted] = pair_rows.try_emplace(
              pair_key(p, r), static_cast<Eigen::Index>(pair_rows.size()));
          singles_rows[i].push_back({static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j),
                                     it->second, double(single_excitation_phase(d_[i], r, p)), f});
          hole_rows[i].push_back(r);
          particle_rows[i].push_back(p);
        } else if (pc == 4) {
          std::uint64_t holes = si & x, parts = d_[j].bits & x;
          const auto r1 = static_cast<std::uint32_t>(std::countr_zero(holes));
          holes &= holes - 1;
          const auto r2 = static_cast<std::uint32_t>(std::countr_zero(holes));
          const auto p1 = static_cast<std::uint32_t>(std::countr_zero(parts));
          parts &= parts - 1;
          const auto p2 = static_cast<std::uint32_t>(std::countr_zero(parts));
          SpinString mid = d_[i];
          mid.clear(r1);
          mid.set(p1);
          const double sign = single_excitation_phase(d_[i], r1, p1) *
                              single_excitation_phase(mid, r2, p2);
          const double value =
              sign * (ham.two_body(p1, r1, p2, r2) - ham.two_body(p2, r1, p1, r2));
          if (value != 0.0)
            doubles_rows[i].push_back(
                {static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j), value});
        }
      }
    }
    // flatten row lists; spans keep per-source iteration cheap
    singles_begin_.assign(n_ + 1, 0);
    doubles_begin_.assign(n_ + 1, 0);
    for (std::size_t i = 0; i < n_; ++i) {
      singles_begin_[i + 1] = singles_begin_[i] + singles_rows[i].size();
      doubles_begin_[i + 1] = doubles_begin_[i] + doubles_rows[i].size();
    }
    singles_.reserve(singles_begin_[n_]);
    doubles_.reserve(doubles_begin_[n_]);
    hole_of_.reserve(singles_begin_[n_]);
    particle_of_.reserve(singles_begin_[n_]);
    for (std::size_t i = 0; i < n_; ++i) {
      singles_.insert(singles_.end(), singles_rows[i].begin(), singles_rows[i].end());
      doubles_.insert(doubles_.end(), doubles_rows[i].begin(), doubles_rows[i].end());
      hole_of_.insert(hole_of_.end(), hole_rows[i].begin(), hole_rows[i].end());
      particle_of_.insert(particle_of_.end(), particle_rows[i].begin(), particle_rows[i].end());
    }
    // G(pair, m) = sum_{q occ in D[m]} (pr|qq); ERI block over used pairs
    pairs_.assign(pair_rows.size(), 0);
    for (const auto& [key, row] : pair_rows) pairs_[static_cast<std::size_t>(row)] = key;
    g_.setZero(static_cast<Eigen::Index>(pairs_.size()), static_cast<Eigen::Index>(n_));
    for (std::size_t a = 0; a < pairs_.size(); ++a) {
      const std::uint32_t p = pairs_[a] >> 8, r = pairs_[a] & 0xff;
      for (std::size_t m = 0; m < n_; ++m) {
        double acc = 0.0;
        for (std::uint32_t q : occupied_orbitals(d_[m])) acc += ham_->two_body(p, r, q, q);
        g_(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(m)) = acc;
      }
    }
    eri_pairs_.setZero(static_cast<Eigen::Index>(pairs_.size()),
                       static_cast<Eigen::Index>(pairs_.size()));
    for (std::size_t a = 0; a < pairs_.size(); ++a)
      for (std::size_t b = 0; b < pairs_.size(); ++b)
        eri_pairs_(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
            ham_->two_body(pairs_[a] >> 8, pairs_[a] & 0xff, pairs_[b] >> 8, pairs_[b] & 0xff);
    // beta singles bucketed by (particle, hole) for the spin-exchange term
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t k = singles_begin_[i]; k < singles_begin_[i + 1]; ++k)
        swapped_[pair_key(particle_of_[k], hole_of_[k])].push_back(singles_[k]);
    }
  }

  void build_diagonals() {
    const auto& ham = *ham_;
    Eigen::VectorXd same(static_cast<Eigen::Index>(n_));
    Eigen::MatrixXd occ(static_cast<Eigen::Index>(n_), norb_);
    occ.setZero();
    for (std::size_t i = 0; i < n_; ++i) {
      const auto o = occupied_orbitals(d_[i]);
      double e = 0.0;
      for (std::uint32_t p : o) {
        e += ham.one_body(p, p);
        occ(static_cast<Eigen::Index>(i), p) = 1.0;
        for (std::uint32_t q : o) e += 0.5 * (ham.two_body(p, p, q, q) - ham.two_body(p, q, q, p));
      }
      same(static_cast<Eigen::Index>(i)) = e;
    }
    Eigen::MatrixXd jmat(norb_, norb_);
    for (std::uint32_t p = 0; p < norb_; ++p)
      for (std::uint32_t q = 0; q < norb_; ++q) jmat(p, q) = ham.two_body(p, p, q, q);
    const Eigen::MatrixXd cross = occ * jmat * occ.transpose();
    diag_h_.resize(static_cast<Eigen::Index>(dim()));
    diag_s2_.resize(static_cast<Eigen::Index>(dim()));
    const auto n = static_cast<Eigen::Index>(n_);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double hwa = hamming_weight(d_[static_cast<std::size_t>(i)]);
      for (Eigen::Index m = 0; m < n; ++m) {
        diag_h_(i * n + m) = same(i) + same(m) + cross(i, m);
        const double hwb = hamming_weight(d_[static_cast<std::size_t>(m)]);
        const double sz = 0.5 * (hwa - hwb);
        const double paired = std::popcount(d_[static_cast<std::size_t>(i)].bits &
                                            d_[static_cast<std::size_t>(m)].bits);
        diag_s2_(i * n + m) = sz * (sz + 1.0) + hwb - paired;
      }
    }
  }

  const ActiveSpaceHamiltonian* ham_;
  std::vector<SpinString> d_;
  std::size_t n_;
  std::uint32_t norb_;
  std::vector<Single> singles_;
  std::vector<Double> doubles_;
  std::vector<std::size_t> singles_begin_, doubles_begin_;
  std::vector<std::uint32_t> hole_of_, particle_of_;
  std::vector<std::uint32_t> pairs_;  // (particle<<8)|hole per G/ERI row
  Eigen::MatrixXd g_;
  Eigen::MatrixXd eri_pairs_;
  std::map<std::uint32_t, std::vector<Single>> swapped_;
  Eigen::VectorXd diag_h_;
  Eigen::VectorXd diag_s2_;
};

/// One-shot wrappers over a freshly built operator (test and tooling surface).
inline Eigen::VectorXd h_matvec(const ActiveSpaceHamiltonian& ham,
                                const std::vector<SpinString>& d, const Eigen::VectorXd& v) {
  ProjectedOperator op(ham, d);
  Eigen::VectorXd w;
  op.apply_h(v, w);
  return w;
}

inline Eigen::VectorXd s2_matvec(const std::vector<SpinString>& d, const Eigen::VectorXd& v) {
  if (d.empty()) throw InputError("s2_matvec over empty string set");
  ActiveSpaceHamiltonian empty;
  empty.n_orbitals = d.front().n;
  empty.h.assign(std::size_t(empty.n_orbitals) * empty.n_orbitals, 0.0);
  empty.eri.assign(std::size_t(empty.n_orbitals) * empty.n_orbitals * empty.n_orbitals *
                       empty.n_orbitals,
                   0.0);
  ProjectedOperator op(empty, d);
  Eigen::VectorXd w;
  op.apply_s2(v, w);
  return w;
}

struct DavidsonResult {
  double eigenvalue = 0.0;
  Eigen::VectorXd eigenvector;
  int iterations = 0;
  double residual = 0.0;
};

/// Lowest eigenpair of a symmetric operator by Davidson iteration with
/// diagonal preconditioning and thick restart.
inline DavidsonResult davidson(const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>& apply,
                               const Eigen::VectorXd& diagonal, const SolverOptions& opts = {}) {
  const Eigen::Index dim = diagonal.size();
  if (dim <= 0) throw InputError("davidson: empty operator");
  if (opts.check_symmetry && dim > 1) {
    RngStream rng(0x5d1f7a2cULL);
    Eigen::VectorXd u(dim), t(dim), au(dim), at(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
      u(i) = rng.uniform() - 0.5;
      t(i) = rng.uniform() - 0.5;
    }
    apply(u, au);
    apply(t, at);
    const double lhs = u.dot(at), rhs = au.dot(t);
    const double scale = std::max(1.0, au.norm() * t.norm());
    if (std::abs(lhs - rhs) > 1e-8 * scale)
      throw InputError("davidson: operator failed the sampled symmetry check");
  }

  Eigen::Index start;
  diagonal.minCoeff(&start);
  Eigen::MatrixXd basis(dim, opts.max_subspace);
  Eigen::MatrixXd image(dim, opts.max_subspace);
  basis.col(0).setZero();
  basis(start, 0) = 1.0;
  int nb = 1;
  Eigen::VectorXd w(dim);
  apply(basis.col(0), w);
  image.col(0) = w;

  DavidsonResult res;
  Eigen::VectorXd ritz(dim), resid(dim), precond(dim);
  for (int iter = 0; iter < opts.max_iter; ++iter) {
    const auto v = basis.leftCols(nb);
    const auto av = image.leftCols(nb);
    Eigen::MatrixXd small = v.transpose() * av;
    small = 0.5 * (small + small.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(small);
    const double theta = es.eigenvalues()(0);
    const Eigen::VectorXd y = es.eigenvectors().col(0);
    ritz.noalias() = v * y;
    resid.noalias() = av * y - theta * ritz;
    const double rnorm = resid.norm();
    res.eigenvalue = theta;
    res.eigenvector = ritz;
    res.iterations = iter + 1;
    res.residual = rnorm;
    if (rnorm < opts.tol * std::max(1.0, std::abs(theta))) {
      res.eigenvector /= res.eigenvector.norm();
      return res;
    }
    if (nb == opts.max_subspace) {  // thick restart from the current Ritz pair
      basis.col(0) = ritz;
      image.col(0) = av * y;
      nb = 1;
    }
    for (Eigen::Index i = 0; i < dim; ++i) {
      double denom = diagonal(i) - theta;
      if (std::abs(denom) < 1e-10) denom = denom < 0 ? -1e-10 : 1e-10;
      precond(i) = resid(i) / denom;
    }
    // orthogonalize against the basis; fall back to the raw residual, then to
    // a unit vector, if the preconditioned direction collapses
    bool added = false;
    for (int attempt = 0; attempt < 3 && !added; ++attempt) {
      Eigen::VectorXd cand = attempt == 0 ? precond : attempt == 1 ? resid : Eigen::VectorXd();
      if (attempt == 2) {
        Eigen::Index imax;
        resid.cwiseAbs().maxCoeff(&imax);
        cand = Eigen::VectorXd::Zero(dim);
        cand(imax) = 1.0;
      }
      for (int pass = 0; pass < 2; ++pass)
        cand -= basis.leftCols(nb) * (basis.leftCols(nb).transpose() * cand);
      const double norm = cand.norm();
      if (norm > 1e-12) {
        basis.col(nb) = cand / norm;
        apply(basis.col(nb), w);
        image.col(nb) = w;
        ++nb;
        added = true;
      }
    }
    if (!added) break;  // fully spanned; residual cannot be reduced further
  }
  if (res.residual < std::sqrt(opts.tol) * std::max(1.0, std::abs(res.eigenvalue))) {
    // spanned-subspace exit: eigenpair is exact within the explored space
    res.eigenvector /= res.eigenvector.norm();
    return res;
  }
  throw ConvergenceError("davidson: no convergence after " + std::to_string(res.iterations) +
                         " iterations (residual " + std::to_string(res.residual) + ")");
}

/// Lowest eigenpair of H_D + lambda * (S^2)^2 on span(D x D); the reported
/// energy is the unpenalized Rayleigh quotient plus e_core.
inline SubspaceSolution solve(const ActiveSpaceHamiltonian& ham, std::vector<SpinString> d,
                              double lambda, const SolverOptions& opts = {}) {
  if (d.empty()) throw InputError("solve: empty determinant set");
  {
    std::vector<SpinString> sorted = d;
    std::sort(sorted.begin(), sorted.end(), lex_less);
    for (std::size_t i = 1; i < sorted.size(); ++i)
      if (sorted[i] == sorted[i - 1]) throw InputError("solve: duplicate strings in D");
  }
  ProjectedOperator op(ham, std::move(d));
  Eigen::VectorXd tmp1, tmp2;
  auto apply = [&](const Eigen::VectorXd& v, Eigen::VectorXd& w) {
    op.apply_h(v, w);
    if (lambda != 0.0) {
      op.apply_s2(v, tmp1);
      op.apply_s2(tmp1, tmp2);
      w += lambda * tmp2;
    }
  };
  Eigen::VectorXd diag = op.h_diagonal();
  if (lambda != 0.0) diag += lambda * op.s2_diagonal().cwiseProduct(op.s2_diagonal());
  const DavidsonResult dv = davidson(apply, diag, opts);

  SubspaceSolution sol;
  sol.d = op.strings();
  sol.dim = op.dim();
  Eigen::VectorXd x = dv.eigenvector;
  Eigen::Index imax;
  x.cwiseAbs().maxCoeff(&imax);
  if (x(imax) < 0) x = -x;
  Eigen::VectorXd hx, s2x;
  op.apply_h(x, hx);
  op.apply_s2(x, s2x);
  sol.energy = x.dot(hx) + ham.e_core;
  sol.s2 = x.dot(s2x);
  const auto n = static_cast<Eigen::Index>(op.n_strings());
  sol.c = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                         Eigen::RowMajor>>(x.data(), n, n);
  return sol;
}

}  // namespace csqd
