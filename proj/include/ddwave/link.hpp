#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string_view>
#include <vector>

#include "ddwave/channel.hpp"
#include "ddwave/modem.hpp"
#include "ddwave/random.hpp"

namespace ddwave {

enum class ConstellationKind { qpsk, qam16 };

std::string_view to_string(ConstellationKind kind);
ConstellationKind constellation_from_string(std::string_view name);

/// Unit-average-energy Gray-coded constellation. Point i carries the bit
/// label i, most significant bit first.
class Constellation {
 public:
  static Constellation qpsk();
  static Constellation qam16();
  static Constellation make(ConstellationKind kind);

  ConstellationKind kind() const { return kind_; }
  std::size_t bits_per_symbol() const { return bits_per_symbol_; }
  const std::vector<Complex>& points() const { return points_; }

  /// Index of the nearest point.
  std::size_t slice(Complex z) const;

 private:
  Constellation(ConstellationKind kind, std::size_t bits, std::vector<Complex> points)
      : kind_(kind), bits_per_symbol_(bits), points_(std::move(points)) {}

  ConstellationKind kind_;
  std::size_t bits_per_symbol_;
  std::vector<Complex> points_;
};

using Bits = std::vector<std::uint8_t>;

ComplexVector map_bits(std::span<const std::uint8_t> bits, const Constellation& constellation);
Bits demap_symbols(const ComplexVector& symbols, const Constellation& constellation);
Bits random_bits(std::size_t count, Rng& rng);

inline constexpr double kNoiselessSnr = std::numeric_limits<double>::infinity();

/// σ² = 10^(−snr/10); zero for +∞.
double noise_variance(double snr_db);

ComplexVector add_awgn(const ComplexVector& r, double snr_db, Rng& rng);

ComplexVector equalize_zf(const ComplexMatrix& g, const ComplexVector& y);
ComplexVector equalize_lmmse(const ComplexMatrix& g, const ComplexVector& y, double noise_var);

enum class Detector { zf, lmmse };

std::string_view to_string(Detector d);
Detector detector_from_string(std::string_view name);

/// Per-frame channel source: random draws from a config, or one fixed path
/// set reused for every frame.
struct ChannelSource {
  ChannelConfig config;
  DopplerMode mode = DopplerMode::fractional;
  std::optional<std::vector<PathParams>> fixed_paths;

  ChannelRealization draw(Rng& rng) const;
};

struct LinkResult {
  double snr_db = 0.0;
  std::size_t frames = 0;
  std::size_t bit_errors = 0;
  std::size_t total_bits = 0;
  double ber = 0.0;
  double ber_std_error = 0.0;  // across frames
  double papr_db_p99 = 0.0;
};

struct BerRequest {
  double snr_db = 10.0;
  std::size_t frames = 100;
  Detector detector = Detector::lmmse;
  std::uint64_t seed = 1;
  unsigned threads = 0;
};

/// Monte Carlo BER at one SNR. Frame i uses substream(seed, i) so the
/// result is independent of the thread count.
LinkResult run_ber_point(const WaveformSpec& spec, const ChannelSource& source, const Constellation& constellation,
                         const BerRequest& request);

void write_link_csv_header(std::ostream& out);
void write_link_csv_row(std::ostream& out, const LinkResult& result, std::string_view waveform);

}  // namespace ddwave
