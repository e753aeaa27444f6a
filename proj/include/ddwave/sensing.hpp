#pragma once

// Delay-Doppler target estimation: correlation maps, direct extraction from
// a known effective channel, and on-grid maximum-likelihood search with
// fractional Doppler refinement.

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ddwave/channel.hpp"
#include "ddwave/modem.hpp"

namespace ddwave {

inline constexpr double kSpeedOfLight = 2.99792458e8;

struct DelayDopplerMap {
  std::vector<double> delay_bins;    // samples
  std::vector<double> doppler_bins;  // normalised digital Doppler
  ComplexMatrix values;              // |delay| × |doppler|

  struct Cell {
    std::size_t delay_index = 0;
    std::size_t doppler_index = 0;
    double delay = 0.0;
    double doppler = 0.0;
    double magnitude = 0.0;
  };

  Cell argmax() const;
  /// The `count` largest cells by magnitude, ties broken by smaller delay
  /// then smaller Doppler.
  std::vector<Cell> top_cells(std::size_t count) const;
  /// CSV with columns delay_bin,doppler_bin,re,im,mag.
  void write_csv(std::ostream& out) const;
};

/// Integer bins lo, lo+1, ..., hi.
std::vector<double> integer_bins(long lo, long hi);

/// A[ℓ,f] = Σ_n s[n]·conj(s[(n−ℓ) mod N])·e^{+j2πfn/N}.
DelayDopplerMap ambiguity_map(const ComplexVector& s, std::span<const double> delay_bins,
                              std::span<const double> doppler_bins);

/// M[ℓ,f] = Σ_n r[n]·conj(s[(n−ℓ) mod N])·e^{−j2πfn/N}.
DelayDopplerMap matched_filter_map(const ComplexVector& r, const ComplexVector& s_known,
                                   std::span<const double> delay_bins, std::span<const double> doppler_bins);

/// Peak over the largest off-peak cell, in dB.
double peak_to_sidelobe_db(const DelayDopplerMap& map);

enum class Geometry { monostatic, bistatic };

std::string_view to_string(Geometry g);
Geometry geometry_from_string(std::string_view name);

struct RadarMeasures {
  double range_m = 0.0;       // target distance (monostatic) or total path length (bistatic)
  double velocity_mps = 0.0;  // radial or bistatic velocity
};

/// τ = r_eff/c, ν = 2·v·f_c/c. Monostatic reports r_eff/2.
RadarMeasures radar_convert(double tau_s, double nu_hz, double fc, Geometry geometry);

/// Inverse of radar_convert: returns (τ, ν).
std::pair<double, double> radar_invert(const RadarMeasures& m, double fc, Geometry geometry);

/// Physical scale of a sensing frame: sample rate, carrier, block size.
struct SensingScale {
  double fs = 10e6;
  double fc = 5.9e9;
  std::size_t N = 64;
  Geometry geometry = Geometry::monostatic;

  static SensingScale from(const ChannelConfig& cfg, Geometry g = Geometry::monostatic) {
    return {cfg.fs, cfg.fc, cfg.N, g};
  }
};

struct RadarTargetEstimate {
  double delay = 0.0;    // samples
  double doppler = 0.0;  // normalised digital Doppler
  Complex gain;
  double range_m = 0.0;
  double velocity_mps = 0.0;
};

RadarTargetEstimate make_estimate(double delay, double doppler, Complex gain, const SensingScale& scale);

/// Inclusive search bounds ℓ ∈ [0, ell_max], f ∈ [−f_max, f_max].
struct SearchGrid {
  std::size_t ell_max = 0;
  std::size_t f_max = 0;
};

/// Top-`targets` peaks of the matched-filter map over the integer grid.
std::vector<RadarTargetEstimate> matched_filter_estimate(const ComplexVector& r, const ComplexVector& s_known,
                                                         std::size_t targets, const SearchGrid& grid,
                                                         const SensingScale& scale);

/// Reads targets off a known effective channel by averaging magnitudes
/// along each candidate's predicted support. With `targets` unset, every
/// candidate whose mean magnitude exceeds `threshold` is returned.
std::vector<RadarTargetEstimate> direct_csi_extract(const ComplexMatrix& g, const WaveformSpec& spec,
                                                    std::optional<std::size_t> targets, double threshold,
                                                    const SensingScale& scale,
                                                    std::optional<SearchGrid> grid = std::nullopt);

/// Candidate grid that visits every distinct support of the waveform once.
SearchGrid default_direct_grid(const WaveformSpec& spec);

struct MlOptions {
  SearchGrid grid;
  std::size_t refine_levels = 3;
  std::size_t refine_factor = 10;
  std::size_t relax_passes = 10;  // cyclic re-estimation sweeps per detection
};

struct MlResult {
  std::vector<RadarTargetEstimate> targets;
  /// ‖y‖ followed by the residual norm after each detected target.
  std::vector<double> residual_norms;
};

/// Greedy successive search of y ≈ Σ_p h_p·G(ℓ_p, f_p)·x. After each
/// detection every target is re-searched with the others subtracted, and
/// all gains are refitted jointly by least squares.
MlResult indirect_csi_ml(const ComplexVector& y, const ComplexVector& x_known, const WaveformSpec& spec,
                         std::size_t targets, const MlOptions& options, const SensingScale& scale);

struct SensingError {
  double rmse_delay = 0.0;
  double rmse_doppler = 0.0;
  std::size_t matched = 0;
  std::size_t misdetections = 0;  // truth targets left without an estimate
  double sum_sq_delay = 0.0;
  double sum_sq_doppler = 0.0;
};

/// Greedy nearest pairing in (ℓ, f), then per-axis RMSE over the pairs.
SensingError sensing_rmse(std::span<const RadarTargetEstimate> estimates, std::span<const PathParams> truth);

nlohmann::json estimate_to_json(const RadarTargetEstimate& e);

}  // namespace ddwave
