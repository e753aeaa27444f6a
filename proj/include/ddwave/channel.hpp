#pragma once

// Doubly-dispersive channel: P discrete paths, each a complex gain at an
// integer sample delay with a (possibly fractional) normalised Doppler shift.
//
// time_domain_apply is the sample-level ground truth; channel_matrix is the
// N×N circular model of the same system once the prefix has been stripped.

#include <cstddef>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "ddwave/core.hpp"
#include "ddwave/random.hpp"

namespace ddwave {

struct PathParams {
  Complex gain{1.0, 0.0};
  std::size_t delay = 0;     // samples
  double doppler = 0.0;      // normalised digital Doppler, N·ν/f_s
  std::optional<double> aod;  // radians
  std::optional<double> aoa;  // radians
};

struct ChannelConfig {
  std::size_t N = 64;
  double fs = 10e6;
  double fc = 5.9e9;
  std::size_t ell_max = 3;
  std::size_t f_max = 2;
  std::size_t paths = 3;
  std::size_t cp_len = 3;

  /// Throws ErrorCode::config naming the first violated invariant.
  void validate() const;

  double sample_period() const { return 1.0 / fs; }
  /// ν = f·f_s/N.
  double doppler_hz(double f_norm) const { return f_norm * fs / static_cast<double>(N); }
  double delay_s(double ell) const { return ell / fs; }
};

/// τ_max·ν_max with τ_max = ℓ_max/f_s and ν_max from f_max (+1/2 for the
/// fractional part). The model is meant for products well below 1.
double spread_product(const ChannelConfig& config);

enum class DopplerMode { integer, fractional };

class ChannelRealization {
 public:
  ChannelRealization(ChannelConfig config, std::vector<PathParams> paths);

  const ChannelConfig& config() const { return config_; }
  const std::vector<PathParams>& paths() const { return paths_; }
  std::size_t size() const { return config_.N; }

 private:
  ChannelConfig config_;
  std::vector<PathParams> paths_;
};

/// Random scenario with unit average total power (gain variance 1/P).
ChannelRealization sample_paths(const ChannelConfig& config, DopplerMode mode, Rng& rng);

/// r[n] = Σ_p h_p·e^{j2πf_p n/N}·s_cp[n−ℓ_p], n = 0..N−1, where s_cp holds
/// the prefix at indices 0..cp_len−1 followed by the N core samples.
ComplexVector time_domain_apply(const ComplexVector& s_cp, const ChannelRealization& chan);

/// H = Σ_p h_p·Φ_p·D(f_p)·Π^{ℓ_p}.
ComplexMatrix channel_matrix(const ChannelRealization& chan, const CpPhaseFn& phase);

/// Same as channel_matrix restricted to one path with unit gain.
ComplexMatrix path_matrix(std::size_t N, std::size_t delay, double doppler, const CpPhaseFn& phase);

/// Time-variant transfer function Σ h_p·e^{j2πν_p t}·e^{−j2πτ_p f}.
Complex tvtf(const ChannelRealization& chan, double t, double f);

struct DvirfPoint {
  double delay_s = 0.0;
  double doppler_hz = 0.0;
  Complex gain;
};

std::vector<DvirfPoint> dvirf_points(const ChannelRealization& chan);

/// Inverse of dvirf_points: delays are rounded to the nearest sample.
ChannelRealization realization_from_points(const ChannelConfig& config, std::span<const DvirfPoint> points);

/// CSV with columns axis1,axis2,re,im,mag (delay s, Doppler Hz).
void write_dvirf_csv(std::ostream& out, std::span<const DvirfPoint> points);

/// CSV with columns axis1,axis2,re,im,mag (time s, frequency Hz).
void write_tvtf_csv(std::ostream& out, const ChannelRealization& chan, std::span<const double> times,
                    std::span<const double> freqs);

// ---- MIMO ------------------------------------------------------------------

/// A path whose delay/Doppler are shared by every antenna pair.
struct MimoPath {
  std::size_t delay = 0;
  double doppler = 0.0;
  std::optional<double> aod;
  std::optional<double> aoa;
  ComplexMatrix gains;  // Nt × Nr, entry (n_t, n_r) = h_{p,n_t,n_r}
};

/// Angle-dependent beam gain. An empty function means an omnidirectional
/// (unit) gain that needs no angle.
using BeamGain = std::function<double(double)>;

/// grid[n_t][n_r] = Σ_p g(θʳ_p)·f(θᵗ_p)·h_{p,n_t,n_r}·Φ_p·D(f_p)·Π^{ℓ_p}.
std::vector<std::vector<ComplexMatrix>> mimo_channel(std::size_t N, std::span<const MimoPath> paths, std::size_t Nt,
                                                     std::size_t Nr, const BeamGain& tx_gain, const BeamGain& rx_gain,
                                                     const CpPhaseFn& phase);

}  // namespace ddwave
