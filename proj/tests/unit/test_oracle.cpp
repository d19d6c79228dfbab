#include <catch2/catch_amalgamated.hpp>
#include <fstream>

#include "csqd/oracle.hpp"
#include "csqd/rng.hpp"
#include "test_support.hpp"

using namespace csqd;

TEST_CASE("sector basis enumerates C(n, k) strings in lexicographic order") {
  const auto basis = DenseSectorBasis::build(4, 2);
  REQUIRE(basis.strings.size() == 6);
  CHECK(to_text(basis.strings.front()) == "0011");
  CHECK(to_text(basis.strings.back()) == "1100");
  for (std::size_t i = 1; i < basis.strings.size(); ++i)
    CHECK(lex_less(basis.strings[i - 1], basis.strings[i]));
  for (std::size_t i = 0; i < basis.strings.size(); ++i)
    CHECK(basis.index.at(basis.strings[i]) == i);
}

TEST_CASE("dense_fci on one orbital is the analytic single configuration") {
  ActiveSpaceHamiltonian ham;
  ham.n_orbitals = 1;
  ham.n_alpha = ham.n_beta = 1;
  ham.e_core = 0.5;
  ham.h = {-1.0};
  ham.eri = {0.7};
  const auto res = dense_fci(ham);
  CHECK(res.energy == Catch::Approx(2 * -1.0 + 0.7 + 0.5).margin(1e-12));
}

TEST_CASE("dense_fci reproduces the frozen H2/STO-3G energy") {
  std::ifstream in(std::string(CSQD_TEST_DATA_DIR) + "/h2_sto3g.fcidump");
  REQUIRE(in.good());
  const auto ham = parse_fcidump(in);
  const auto res = dense_fci(ham);
  // frozen value from the independent generator in tests/data
  CHECK(res.energy == Catch::Approx(-1.137306028332).margin(1e-9));
  CHECK(res.energy == Catch::Approx(-1.1373).margin(5e-4));
}

TEST_CASE("dense projected matrix is symmetric and equals the FCI matrix on the full basis") {
  RngStream rng(11);
  const auto ham = test_support::random_hamiltonian(4, 2, 2, rng);
  const auto basis = DenseSectorBasis::build(4, 2);
  const Eigen::MatrixXd m = dense_projected(ham, basis.strings);
  CHECK((m - m.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  const auto res = dense_fci(ham);
  CHECK(es.eigenvalues()(0) + ham.e_core == Catch::Approx(res.energy).margin(1e-10));
}

TEST_CASE("dense S^2 commutes with the spin-free sector Hamiltonian") {
  RngStream rng(23);
  const auto ham = test_support::random_hamiltonian(4, 2, 2, rng);
  const auto basis = DenseSectorBasis::build(4, 2);
  const Eigen::MatrixXd h = dense_projected(ham, basis.strings);
  const Eigen::MatrixXd s2 = dense_s2(4, basis.strings);
  CHECK((h * s2 - s2 * h).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((s2 - s2.transpose()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("dense S^2 diagonal on simple determinants") {
  // paired closed shell: <x|S^2|x> = 0
  std::vector<SpinString> closed = {spin_string_from_text("10")};
  const Eigen::MatrixXd a = dense_s2(2, closed);
  CHECK(a(0, 0) == Catch::Approx(0.0).margin(1e-12));
  // one alpha in orbital 0 and one beta in orbital 1 -> <x|S^2|x> = 1
  std::vector<SpinString> open = {spin_string_from_text("10"), spin_string_from_text("01")};
  const Eigen::MatrixXd b = dense_s2(2, open);
  // basis order: (10,10), (10,01), (01,10), (01,01); x = (10,01) is index 1
  CHECK(b(1, 1) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("size cap raises an error") {
  ActiveSpaceHamiltonian ham;
  ham.n_orbitals = 4;
  ham.n_alpha = ham.n_beta = 2;
  ham.h.assign(16, 0.0);
  ham.eri.assign(256, 0.0);
  CHECK_THROWS_AS(dense_fci(ham, 10), InputError);
}
