#include <catch2/catch_amalgamated.hpp>

#include "csqd/cisolver.hpp"
#include "csqd/oracle.hpp"
#include "test_support.hpp"

using namespace csqd;

namespace {

Eigen::MatrixXd operator_to_dense(const ProjectedOperator& op, bool spin) {
  const auto dim = static_cast<Eigen::Index>(op.dim());
  Eigen::MatrixXd m(dim, dim);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(dim), w;
  for (Eigen::Index c = 0; c < dim; ++c) {
    e(c) = 1.0;
    if (spin)
      op.apply_s2(e, w);
    else
      op.apply_h(e, w);
    m.col(c) = w;
    e(c) = 0.0;
  }
  return m;
}

}  // namespace

TEST_CASE("h_matvec on a single determinant gives the Slater-Condon diagonal") {
  RngStream rng(3);
  const auto ham = test_support::random_hamiltonian(3, 2, 2, rng);
  const SpinString s = spin_string_from_text("110");
  Eigen::VectorXd v(1);
  v << 1.0;
  const Eigen::VectorXd w = h_matvec(ham, {s}, v);
  // analytic diagonal: one-body, same-spin Coulomb/exchange per sector, cross Coulomb
  double expected = 0.0;
  for (std::uint32_t p : {0u, 1u}) expected += 2 * ham.one_body(p, p);
  for (std::uint32_t p : {0u, 1u})
    for (std::uint32_t q : {0u, 1u}) {
      expected += ham.two_body(p, p, q, q) - ham.two_body(p, q, q, p);  // both same-spin sectors
      expected += ham.two_body(p, p, q, q);                             // alpha-beta Coulomb
    }
  CHECK(w(0) == Catch::Approx(expected).margin(1e-12));
}

TEST_CASE("h_matvec is linear and vanishes on zero") {
  RngStream rng(5);
  const auto ham = test_support::random_hamiltonian(4, 2, 2, rng);
  const auto d = test_support::random_sector_subset(4, 2, 4, rng);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(16);
  CHECK(h_matvec(ham, d, zero).norm() == 0.0);
}

TEST_CASE("matrix-free operators match the dense oracle column by column") {
  RngStream rng(17);
  for (int trial = 0; trial < 6; ++trial) {
    const std::uint32_t n = 4 + static_cast<std::uint32_t>(rng.uniform_below(3));
    const std::uint32_t ns = 2 + static_cast<std::uint32_t>(rng.uniform_below(2));
    const auto ham = test_support::random_hamiltonian(n, ns, ns, rng);
    const auto full = DenseSectorBasis::build(n, ns);
    const std::size_t count = std::min<std::size_t>(full.strings.size(),
                                                    3 + rng.uniform_below(8));
    const auto d = test_support::random_sector_subset(n, ns, count, rng);
    ProjectedOperator op(ham, d);
    const Eigen::MatrixXd h_free = operator_to_dense(op, false);
    const Eigen::MatrixXd h_dense = dense_projected(ham, d);
    CHECK((h_free - h_dense).cwiseAbs().maxCoeff() < 1e-10);
    const Eigen::MatrixXd s2_free = operator_to_dense(op, true);
    const Eigen::MatrixXd s2_dense = dense_s2(n, d);
    CHECK((s2_free - s2_dense).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((h_free.diagonal() - op.h_diagonal()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((s2_free.diagonal() - op.s2_diagonal()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("excitation phases agree with the dense oracle on all 2-orbital pairs") {
  RngStream rng(29);
  const auto ham = test_support::random_hamiltonian(2, 1, 1, rng);
  const auto basis = DenseSectorBasis::build(2, 1);
  ProjectedOperator op(ham, basis.strings);
  const Eigen::MatrixXd h_free = operator_to_dense(op, false);
  const Eigen::MatrixXd h_dense = dense_projected(ham, basis.strings);
  CHECK((h_free - h_dense).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("S^2 operator is symmetric under random vectors") {
  RngStream rng(31);
  const auto d = test_support::random_sector_subset(5, 2, 6, rng);
  const auto dim = static_cast<Eigen::Index>(d.size() * d.size());
  Eigen::VectorXd u(dim), v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    u(i) = rng.uniform() - 0.5;
    v(i) = rng.uniform() - 0.5;
  }
  CHECK(u.dot(s2_matvec(d, v)) == Catch::Approx(s2_matvec(d, u).dot(v)).margin(1e-10));
}

TEST_CASE("davidson handles trivial operators") {
  {
    Eigen::VectorXd diag = Eigen::VectorXd::Ones(5);
    auto apply = [](const Eigen::VectorXd& v, Eigen::VectorXd& w) { w = v; };
    const auto res = davidson(apply, diag);
    CHECK(res.eigenvalue == Catch::Approx(1.0).margin(1e-12));
  }
  {
    Eigen::VectorXd diag(6);
    diag << 1, 2, 3, 4, 5, 6;
    auto apply = [&](const Eigen::VectorXd& v, Eigen::VectorXd& w) {
      w = diag.cwiseProduct(v);
    };
    const auto res = davidson(apply, diag);
    CHECK(res.eigenvalue == Catch::Approx(1.0).margin(1e-12));
    CHECK(std::abs(res.eigenvector(0)) == Catch::Approx(1.0).margin(1e-9));
  }
}

TEST_CASE("davidson matches the dense eigensolver on a random sparse symmetric operator") {
  RngStream rng(41);
  const Eigen::Index dim = 400;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    m(i, i) = 4.0 * (rng.uniform() - 0.5) + 0.01 * static_cast<double>(i);
    for (int k = 0; k < 6; ++k) {
      const auto j = static_cast<Eigen::Index>(rng.uniform_below(dim));
      const double v = 0.3 * (rng.uniform() - 0.5);
      m(i, j) += v;
      m(j, i) += v;
    }
  }
  auto apply = [&](const Eigen::VectorXd& v, Eigen::VectorXd& w) { w.noalias() = m * v; };
  const auto res = davidson(apply, m.diagonal());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  CHECK(res.eigenvalue == Catch::Approx(es.eigenvalues()(0)).margin(1e-9));
}

TEST_CASE("davidson rejects a non-symmetric operator") {
  Eigen::MatrixXd m(3, 3);
  m << 1, 2, 0, 0, 1, 0, 0, 0, 1;
  auto apply = [&](const Eigen::VectorXd& v, Eigen::VectorXd& w) { w.noalias() = m * v; };
  CHECK_THROWS_AS(davidson(apply, m.diagonal()), InputError);
}

TEST_CASE("solve on the full sector equals dense FCI") {
  RngStream rng(53);
  const auto ham = test_support::random_hamiltonian(4, 2, 2, rng);
  const auto basis = DenseSectorBasis::build(4, 2);
  const auto sol = solve(ham, basis.strings, 0.0);
  const auto fci = dense_fci(ham);
  CHECK(sol.energy == Catch::Approx(fci.energy).margin(1e-8));
  CHECK(sol.c.norm() == Catch::Approx(1.0).margin(1e-10));
  CHECK(sol.dim == 36);
}

TEST_CASE("solve on the RHF string gives the Slater-Condon diagonal plus core") {
  RngStream rng(61);
  const auto ham = test_support::random_hamiltonian(4, 2, 2, rng);
  const SpinString rhf = spin_string_from_text("1100");
  const auto sol = solve(ham, {rhf}, 0.1);
  Eigen::VectorXd v(1);
  v << 1.0;
  const double diag = h_matvec(ham, {rhf}, v)(0);
  CHECK(sol.energy == Catch::Approx(diag + ham.e_core).margin(1e-10));
}

TEST_CASE("spin penalty leaves a spin-pure ground state unchanged") {
  RngStream rng(67);
  // attractive pair integrals give a closed-shell singlet ground state
  auto ham = test_support::random_hamiltonian(3, 1, 1, rng, 0.05);
  const auto basis = DenseSectorBasis::build(3, 1);
  const auto free = solve(ham, basis.strings, 0.0);
  const auto penalized = solve(ham, basis.strings, 0.1);
  if (free.s2 < 1e-8) {
    CHECK(penalized.energy == Catch::Approx(free.energy).margin(1e-8));
  }
  CHECK(penalized.s2 < 1e-6);
}

TEST_CASE("spin penalty selects the singlet from a degenerate pair") {
  // two decoupled orbitals: open-shell singlet and triplet are exactly degenerate
  ActiveSpaceHamiltonian ham;
  ham.n_orbitals = 2;
  ham.n_alpha = ham.n_beta = 1;
  ham.e_core = 0.0;
  ham.h = {-1.0, 0.0, 0.0, -1.0};
  ham.eri.assign(16, 0.0);
  auto set = [&](std::uint32_t p, std::uint32_t r, std::uint32_t q, std::uint32_t s, double v) {
    ham.eri[((p * 2 + r) * 2 + q) * 2 + s] = v;
  };
  set(0, 0, 0, 0, 4.0);
  set(1, 1, 1, 1, 4.0);
  set(0, 0, 1, 1, 1.0);
  set(1, 1, 0, 0, 1.0);
  const auto basis = DenseSectorBasis::build(2, 1);

  const auto penalized = solve(ham, basis.strings, 0.1);
  CHECK(penalized.s2 < 1e-6);
  CHECK(penalized.energy == Catch::Approx(-1.0).margin(1e-9));

  const auto unpenalized = solve(ham, basis.strings, 0.0);
  CHECK(unpenalized.s2 > 0.1);  // degenerate manifold: solver lands on a mixed state
}

TEST_CASE("variational monotonicity for nested subspaces") {
  RngStream rng(71);
  for (int trial = 0; trial < 5; ++trial) {
    const auto ham = test_support::random_hamiltonian(5, 2, 2, rng);
    const auto inner = test_support::random_sector_subset(5, 2, 4, rng);
    auto outer = inner;
    const auto extra = test_support::random_sector_subset(5, 2, 6, rng);
    for (const auto& s : extra) {
      bool dup = false;
      for (const auto& t : outer) dup |= (t == s);
      if (!dup) outer.push_back(s);
    }
    const auto e_inner = solve(ham, inner, 0.0).energy;
    const auto e_outer = solve(ham, outer, 0.0).energy;
    CHECK(e_outer <= e_inner + 1e-10);
  }
}

TEST_CASE("penalized operator is Hermitian under random vectors") {
  RngStream rng(73);
  const auto ham = test_support::random_hamiltonian(4, 2, 2, rng);
  const auto d = test_support::random_sector_subset(4, 2, 5, rng);
  ProjectedOperator op(ham, d);
  const auto dim = static_cast<Eigen::Index>(op.dim());
  Eigen::VectorXd u(dim), v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    u(i) = rng.uniform() - 0.5;
    v(i) = rng.uniform() - 0.5;
  }
  auto apply = [&](const Eigen::VectorXd& in, Eigen::VectorXd& out) {
    Eigen::VectorXd t1, t2;
    op.apply_h(in, out);
    op.apply_s2(in, t1);
    op.apply_s2(t1, t2);
    out += 0.1 * t2;
  };
  Eigen::VectorXd au, av;
  apply(u, au);
  apply(v, av);
  CHECK(u.dot(av) == Catch::Approx(au.dot(v)).margin(1e-10));
}
