#pragma once

// OFDM, OTFS and AFDM modulators with their effective channels.
//
//   OFDM  s = F_Nᴴ·x                    y = F_N·r
//   OTFS  s = (F_Lᴴ ⊗ P_tx)·vec(X)       y = (F_L ⊗ P_rx)·r      X is K×L, column-stacked
//   AFDM  s = Λ_{c1}ᴴ·F_Nᴴ·Λ_{c2}ᴴ·x     y = Λ_{c2}·F_N·Λ_{c1}·r
//
// With the Kronecker ordering above the OTFS effective channel is an L×L grid
// of K×K blocks: delays wrap inside a block (mod K) and integer Doppler
// shifts move whole blocks (mod L).

#include <cstddef>
#include <memory>
#include <ostream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "ddwave/channel.hpp"
#include "ddwave/core.hpp"

namespace ddwave {

enum class WaveformKind { ofdm, otfs, afdm };

std::string_view to_string(WaveformKind kind);
WaveformKind waveform_from_string(std::string_view name);

struct OfdmParams {
  std::size_t N = 0;
};

struct OtfsParams {
  std::size_t K = 0;
  std::size_t L = 0;
  // Diagonals of the K×K pulse matrices; empty means rectangular (identity).
  std::vector<Complex> pulse_tx;
  std::vector<Complex> pulse_rx;
};

struct AfdmParams {
  std::size_t N = 0;
  double c1 = 0.0;
  double c2 = 0.0;
  std::size_t xi = 0;
};

/// Immutable waveform description. The modulation and demodulation
/// matrices are built once and shared between copies.
class WaveformSpec {
 public:
  static WaveformSpec ofdm(std::size_t N, std::size_t cp_len);
  static WaveformSpec otfs(std::size_t K, std::size_t L, std::size_t cp_len, std::vector<Complex> pulse_tx = {},
                           std::vector<Complex> pulse_rx = {});
  static WaveformSpec afdm(std::size_t N, double c1, double c2, std::size_t xi, std::size_t cp_len);

  WaveformKind kind() const;
  std::string_view name() const { return to_string(kind()); }
  std::size_t size() const { return size_; }
  std::size_t cp_len() const { return cp_len_; }

  const OfdmParams* as_ofdm() const { return std::get_if<OfdmParams>(&params_); }
  const OtfsParams* as_otfs() const { return std::get_if<OtfsParams>(&params_); }
  const AfdmParams* as_afdm() const { return std::get_if<AfdmParams>(&params_); }

  /// Prefix phase rule: zero for OFDM/OTFS, chirp-periodic for AFDM.
  CpPhaseFn phase() const;

  const ComplexMatrix& modulator() const { return *tx_; }
  const ComplexMatrix& demodulator() const { return *rx_; }

 private:
  WaveformSpec(std::variant<OfdmParams, OtfsParams, AfdmParams> params, std::size_t size, std::size_t cp_len,
               ComplexMatrix tx, ComplexMatrix rx);

  std::variant<OfdmParams, OtfsParams, AfdmParams> params_;
  std::size_t size_;
  std::size_t cp_len_;
  std::shared_ptr<const ComplexMatrix> tx_;
  std::shared_ptr<const ComplexMatrix> rx_;
};

ComplexVector modulate(const WaveformSpec& spec, const ComplexVector& x);
ComplexVector demodulate(const WaveformSpec& spec, const ComplexVector& r);

/// Prefix sample n′ ∈ {−cp_len..−1} is s[N+n′]·e^{j2π·φ_cp(n′)}.
ComplexVector prepend_cp(const WaveformSpec& spec, const ComplexVector& s);
ComplexVector strip_cp(const WaveformSpec& spec, const ComplexVector& r_cp);

/// G = T_rx·H·T_tx with H = channel_matrix(chan, spec.phase()).
ComplexMatrix effective_channel(const WaveformSpec& spec, const ChannelRealization& chan);

/// Effective channel of a single unit-gain path.
ComplexMatrix effective_path(const WaveformSpec& spec, std::size_t delay, double doppler);

struct AfdmTuning {
  double c1 = 0.0;
  double c2 = 0.0;
};

/// c1 = (2(f_max+ξ)+1)/(2N), c2 = 1/(2N²) unless overridden.
AfdmTuning afdm_tune(std::size_t ell_max, std::size_t f_max, std::size_t xi, std::size_t N);

/// True iff the (ℓ_max+1) delay bands, each 2(f_max+ξ)+1 diagonals wide,
/// fit into N without wrapping onto each other.
bool afdm_orthogonality_ok(std::size_t ell_max, std::size_t f_max, std::size_t xi, std::size_t N);

/// True iff ℓ_max ≤ K−1 and 2·f_max+1 ≤ L.
bool otfs_orthogonality_ok(std::size_t ell_max, std::size_t f_max, std::size_t K, std::size_t L);

/// Round-half-up integer part of a normalised Doppler shift.
long doppler_integer_part(double f);

struct MatrixIndex {
  std::size_t row = 0;
  std::size_t col = 0;
  auto operator<=>(const MatrixIndex&) const = default;
};

/// Sorted (row-major) list of occupied entries.
using SupportPattern = std::vector<MatrixIndex>;

/// Entries occupied by a unit path with integer (ℓ, f_int) in the
/// effective channel of an OTFS or AFDM waveform.
SupportPattern predict_support(const WaveformSpec& spec, std::size_t ell, long f_int);

/// Delay-band width of an AFDM spec, 2N·c1 (must be an integer).
std::size_t afdm_band_step(const AfdmParams& p);

/// 10·log10(max|s|² / mean|s|²).
double measure_papr_db(const ComplexVector& s);

/// Default display threshold 1/(2N).
inline double negligible_threshold(std::size_t N) { return 1.0 / (2.0 * static_cast<double>(N)); }

/// CSV rows row,col,re,im,mag for entries with magnitude ≥ threshold.
void write_effective_channel_csv(std::ostream& out, const ComplexMatrix& g, double threshold);

/// {"rows","cols","threshold","magnitude":[[...]]}; the grid is complete,
/// the threshold is carried for the plotting side.
nlohmann::json effective_channel_magnitude_json(const ComplexMatrix& g, double threshold);

}  // namespace ddwave
