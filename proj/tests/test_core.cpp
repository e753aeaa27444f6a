#include <gtest/gtest.h>

#include <random>

#include "ddwave/core.hpp"
#include "ddwave/error.hpp"
#include "oracles.hpp"

using namespace ddwave;

namespace {

ComplexMatrix diag(std::initializer_list<Complex> values) {
  ComplexVector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (auto x : values) v(i++) = x;
  return v.asDiagonal();
}

}  // namespace

TEST(Dft, OnePointIsIdentity) {
  const ComplexMatrix F = dft_matrix(1);
  ASSERT_EQ(F.rows(), 1);
  EXPECT_NEAR(std::abs(F(0, 0) - 1.0), 0.0, 1e-15);
}

TEST(Dft, TwoPoint) {
  const double a = 1.0 / std::sqrt(2.0);
  ComplexMatrix expected(2, 2);
  expected << a, a, a, -a;
  EXPECT_LE(oracle::max_abs(dft_matrix(2) - expected), 1e-15);
}

TEST(Dft, MatchesDefiningSumAndIsUnitary) {
  for (std::size_t N : {3u, 8u, 17u, 64u}) {
    const ComplexMatrix F = dft_matrix(N);
    EXPECT_LE(oracle::max_abs(F - oracle::dft(N)), 1e-12) << N;
    EXPECT_LE(unitarity_error(F), 1e-12) << N;
  }
}

TEST(Dft, LargeSizesStayUnitary) {
  EXPECT_LE(unitarity_error(dft_matrix(1024)), 1e-10);
  EXPECT_LE(unitarity_error(daft_matrix(1024, 5.0 / 2048.0, 1.0 / (2.0 * 1024 * 1024))), 1e-10);
}

TEST(Dft, ZeroSizeRejected) {
  try {
    dft_matrix(0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_dimension);
  }
}

TEST(Chirp, ZeroIsIdentity) {
  EXPECT_LE(oracle::max_abs(chirp_matrix(7, 0.0) - ComplexMatrix::Identity(7, 7)), 0.0);
}

TEST(Chirp, QuarterCycle) {
  EXPECT_LE(oracle::max_abs(chirp_matrix(2, 0.25) - diag({1.0, Complex(0.0, -1.0)})), 1e-15);
}

TEST(Chirp, UnitModulusDiagonal) {
  const ComplexMatrix C = chirp_matrix(16, 1.0 / 32.0);
  for (Eigen::Index i = 0; i < 16; ++i) {
    EXPECT_NEAR(std::abs(C(i, i)), 1.0, 1e-12);
    for (Eigen::Index j = 0; j < 16; ++j) {
      if (i != j) EXPECT_EQ(C(i, j), Complex(0.0));
    }
  }
}

TEST(Daft, ReducesToDft) {
  EXPECT_LE(oracle::max_abs(daft_matrix(12, 0.0, 0.0) - dft_matrix(12)), 0.0);
}

TEST(Daft, FourPointUnitary) { EXPECT_LE(unitarity_error(daft_matrix(4, 1.0 / 8.0, 0.0)), 1e-12); }

TEST(Daft, MatchesFactorProduct) {
  const double c1 = 3.0 / 40.0;
  const double c2 = 0.0123;
  const ComplexMatrix expected = chirp_matrix(20, c2) * oracle::dft(20) * chirp_matrix(20, c1);
  EXPECT_LE(oracle::max_abs(daft_matrix(20, c1, c2) - expected), 1e-12);
}

TEST(Daft, RoundTrip) {
  std::mt19937_64 rng(11);
  const ComplexMatrix A = daft_matrix(32, 0.0371, 0.0007);
  const ComplexVector x = oracle::random_vector(32, rng);
  EXPECT_LE((A.adjoint() * (A * x) - x).norm(), 1e-10);
}

TEST(CyclicShift, ThreePointExamples) {
  EXPECT_LE(oracle::max_abs(cyclic_shift_matrix(3, 0) - ComplexMatrix::Identity(3, 3)), 0.0);
  ComplexMatrix expected = ComplexMatrix::Zero(3, 3);
  expected(0, 2) = expected(1, 0) = expected(2, 1) = 1.0;
  EXPECT_LE(oracle::max_abs(cyclic_shift_matrix(3, 1) - expected), 0.0);
}

TEST(CyclicShift, FullRotationAndComposition) {
  for (std::size_t N : {1u, 5u, 8u}) {
    EXPECT_LE(oracle::max_abs(cyclic_shift_matrix(N, static_cast<long>(N)) - ComplexMatrix::Identity(N, N)), 0.0);
    for (long k = -3; k <= 3; ++k) {
      for (long m = -2; m <= 4; ++m) {
        EXPECT_LE(oracle::max_abs(cyclic_shift_matrix(N, k) * cyclic_shift_matrix(N, m) -
                                  cyclic_shift_matrix(N, k + m)),
                  0.0);
      }
    }
  }
}

TEST(CyclicShift, DelaysSamples) {
  std::mt19937_64 rng(3);
  const ComplexVector s = oracle::random_vector(6, rng);
  const ComplexVector shifted = cyclic_shift_matrix(6, 2) * s;
  for (Eigen::Index n = 0; n < 6; ++n) EXPECT_EQ(shifted(n), s((n + 4) % 6));
}

TEST(DopplerDiagonal, Examples) {
  EXPECT_LE(oracle::max_abs(doppler_diagonal(5, 0.0) - ComplexMatrix::Identity(5, 5)), 0.0);
  const Complex j(0.0, 1.0);
  EXPECT_LE(oracle::max_abs(doppler_diagonal(4, 1.0) - diag({1.0, j, -1.0, -j})), 1e-15);
  const double pi = oracle::kPi;
  EXPECT_LE(oracle::max_abs(doppler_diagonal(4, 0.5) -
                            diag({1.0, oracle::expj(pi / 4), oracle::expj(pi / 2), oracle::expj(3 * pi / 4)})),
            1e-15);
}

TEST(CpPhase, RuleValues) {
  EXPECT_EQ(CpPhaseFn::zero()(-3), 0.0);
  EXPECT_TRUE(CpPhaseFn::zero().is_zero());
  const CpPhaseFn chirp = CpPhaseFn::afdm_chirp(1.0 / 32.0, 8);
  EXPECT_FALSE(chirp.is_zero());
  EXPECT_DOUBLE_EQ(chirp(-1), (64.0 - 16.0) / 32.0);
  EXPECT_DOUBLE_EQ(chirp(-2), (64.0 - 32.0) / 32.0);
}

TEST(CpPhase, ZeroRuleGivesIdentity) {
  for (std::size_t ell = 0; ell < 6; ++ell) {
    EXPECT_LE(oracle::max_abs(cp_phase_matrix(6, ell, CpPhaseFn::zero()) - ComplexMatrix::Identity(6, 6)), 0.0);
  }
}

TEST(CpPhase, IntegerChirpCollapsesToIdentity) {
  // Even N with 2·N·c1 an integer.
  for (std::size_t ell = 0; ell < 10; ++ell) {
    const ComplexMatrix phi = cp_phase_matrix(36, ell, CpPhaseFn::afdm_chirp(5.0 / 72.0, 36));
    EXPECT_LE(oracle::max_abs(phi - ComplexMatrix::Identity(36, 36)), 1e-12) << ell;
  }
}

TEST(CpPhase, EightPointChirpEntries) {
  const ComplexMatrix phi = cp_phase_matrix(8, 2, CpPhaseFn::afdm_chirp(1.0 / 32.0, 8));
  // Row 0 reads n′ = −2 (one full cycle), row 1 reads n′ = −1 (e^{j3π}).
  EXPECT_NEAR(std::abs(phi(0, 0) - 1.0), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(phi(1, 1) + 1.0), 0.0, 1e-12);
  for (Eigen::Index n = 2; n < 8; ++n) EXPECT_EQ(phi(n, n), Complex(1.0));
  const ComplexMatrix general = cp_phase_matrix(8, 3, CpPhaseFn::afdm_chirp(0.0123, 8));
  for (long n = 0; n < 3; ++n) {
    const Complex expected = oracle::expj(2.0 * oracle::kPi * oracle::afdm_prefix_cycles(0.0123, 8, n - 3));
    EXPECT_NEAR(std::abs(general(n, n) - expected), 0.0, 1e-12);
  }
}

TEST(CpPhase, DelayMustBeBelowN) {
  try {
    cp_phase_matrix(4, 4, CpPhaseFn::zero());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_delay);
  }
}

TEST(UnitPhasor, LargeArgumentsKeepPrecision) {
  EXPECT_NEAR(std::abs(unit_phasor(1e9 + 0.25) - Complex(0.0, 1.0)), 0.0, 1e-6);
  EXPECT_NEAR(std::abs(unit_phasor(-3.5) + 1.0), 0.0, 1e-15);
}
