#pragma once

// Transform-matrix builders shared by the channel, modem and sensing layers.
//
// All matrices are dense and double precision. DFT-type transforms use the
// symmetric 1/sqrt(N) normalisation so that every modulator is unitary.

#include <complex>
#include <cstddef>
#include <variant>

#include <Eigen/Dense>

namespace ddwave {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// e^{j2π·cycles}, with the integer part of `cycles` removed first so large
// arguments keep full precision.
Complex unit_phasor(double cycles);

/// Phase rule applied to cyclic-prefix samples, in cycles.
struct ZeroPhase {};

/// Chirp-periodic prefix rule: φ(n′) = c1·(N² + 2·N·n′).
struct AfdmChirpPhase {
  double c1 = 0.0;
  std::size_t N = 0;
};

class CpPhaseFn {
 public:
  CpPhaseFn() = default;
  CpPhaseFn(ZeroPhase p) : rule_(p) {}
  CpPhaseFn(AfdmChirpPhase p) : rule_(p) {}

  static CpPhaseFn zero() { return CpPhaseFn(ZeroPhase{}); }
  static CpPhaseFn afdm_chirp(double c1, std::size_t N) { return CpPhaseFn(AfdmChirpPhase{c1, N}); }

  /// φ_cp(n′) in cycles.
  double operator()(long n_prime) const;

  bool is_zero() const { return std::holds_alternative<ZeroPhase>(rule_); }

 private:
  std::variant<ZeroPhase, AfdmChirpPhase> rule_;
};

/// Unitary N-point DFT, entry (m,n) = e^{−j2πmn/N}/√N.
ComplexMatrix dft_matrix(std::size_t N);

/// diag(e^{−j2π·c·n²}).
ComplexMatrix chirp_matrix(std::size_t N, double c);

/// Λ_{c2}·F_N·Λ_{c1}.
ComplexMatrix daft_matrix(std::size_t N, double c1, double c2);

/// Π^k. (Π^k·s)[n] = s[(n−k) mod N]; k may be negative.
ComplexMatrix cyclic_shift_matrix(std::size_t N, long k);

/// diag(e^{+j2π·f·n/N}), the sampled Doppler rotation.
ComplexMatrix doppler_diagonal(std::size_t N, double f);

/// Diagonal CP phase matrix for a path of integer delay `ell`. Rows n < ell
/// read from the prefix and carry e^{j2π·φ(n−ell)}; the rest are 1.
ComplexMatrix cp_phase_matrix(std::size_t N, std::size_t ell, const CpPhaseFn& phase);

/// max |(M·Mᴴ − I)_{ij}|.
double unitarity_error(const ComplexMatrix& m);

}  // namespace ddwave
