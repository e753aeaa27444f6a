#include "ddwave/core.hpp"

#include <cmath>
#include <string>

#include "ddwave/error.hpp"

namespace ddwave {

namespace {

void require_dimension(std::size_t N) {
  require(N >= 1, ErrorCode::invalid_dimension, "matrix dimension must be at least 1");
}

ComplexMatrix diagonal_from(std::size_t N, auto&& entry) {
  ComplexMatrix m = ComplexMatrix::Zero(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  for (std::size_t n = 0; n < N; ++n) {
    const auto i = static_cast<Eigen::Index>(n);
    m(i, i) = entry(n);
  }
  return m;
}

}  // namespace

Complex unit_phasor(double cycles) {
  const double frac = cycles - std::floor(cycles);
  return std::polar(1.0, kTwoPi * frac);
}

double CpPhaseFn::operator()(long n_prime) const {
  if (const auto* chirp = std::get_if<AfdmChirpPhase>(&rule_)) {
    const auto N = static_cast<double>(chirp->N);
    return chirp->c1 * (N * N + 2.0 * N * static_cast<double>(n_prime));
  }
  return 0.0;
}

ComplexMatrix dft_matrix(std::size_t N) {
  require_dimension(N);
  const auto n = static_cast<Eigen::Index>(N);
  const double scale = 1.0 / std::sqrt(static_cast<double>(N));
  ComplexMatrix f(n, n);
  for (std::size_t m = 0; m < N; ++m) {
    for (std::size_t k = 0; k < N; ++k) {
      // (m·k) mod N is exact in integers; the phasor sees a value in [0, 1).
      const double cycles = -static_cast<double>((m * k) % N) / static_cast<double>(N);
      f(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)) = scale * unit_phasor(cycles);
    }
  }
  return f;
}

ComplexMatrix chirp_matrix(std::size_t N, double c) {
  require_dimension(N);
  require(std::isfinite(c), ErrorCode::precondition, "chirp frequency must be finite");
  return diagonal_from(N, [c](std::size_t n) {
    const auto nn = static_cast<double>(n);
    return unit_phasor(-c * nn * nn);
  });
}

ComplexMatrix daft_matrix(std::size_t N, double c1, double c2) {
  require_dimension(N);
  // Diagonal scalings applied in place of two dense products.
  ComplexMatrix a = dft_matrix(N);
  for (std::size_t r = 0; r < N; ++r) {
    const auto rr = static_cast<double>(r);
    const Complex row_scale = unit_phasor(-c2 * rr * rr);
    for (std::size_t k = 0; k < N; ++k) {
      const auto kk = static_cast<double>(k);
      a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) *= row_scale * unit_phasor(-c1 * kk * kk);
    }
  }
  return a;
}

ComplexMatrix cyclic_shift_matrix(std::size_t N, long k) {
  require_dimension(N);
  const long n_long = static_cast<long>(N);
  const long shift = ((k % n_long) + n_long) % n_long;
  const auto n = static_cast<Eigen::Index>(N);
  ComplexMatrix p = ComplexMatrix::Zero(n, n);
  for (long row = 0; row < n_long; ++row) {
    const long col = (row - shift + n_long) % n_long;
    p(row, col) = 1.0;
  }
  return p;
}

ComplexMatrix doppler_diagonal(std::size_t N, double f) {
  require_dimension(N);
  require(std::isfinite(f), ErrorCode::precondition, "Doppler shift must be finite");
  const auto nd = static_cast<double>(N);
  return diagonal_from(N, [f, nd](std::size_t n) { return unit_phasor(f * static_cast<double>(n) / nd); });
}

ComplexMatrix cp_phase_matrix(std::size_t N, std::size_t ell, const CpPhaseFn& phase) {
  require_dimension(N);
  require(ell < N, ErrorCode::invalid_delay,
          "delay " + std::to_string(ell) + " must be smaller than the block size " + std::to_string(N));
  return diagonal_from(N, [&](std::size_t n) -> Complex {
    if (n >= ell) return 1.0;
    return unit_phasor(phase(static_cast<long>(n) - static_cast<long>(ell)));
  });
}

double unitarity_error(const ComplexMatrix& m) {
  const ComplexMatrix gram = m * m.adjoint();
  return (gram - ComplexMatrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

}  // namespace ddwave
