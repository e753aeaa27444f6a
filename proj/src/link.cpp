#include "ddwave/link.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ddwave/error.hpp"
#include "ddwave/io.hpp"
#include "ddwave/parallel.hpp"

namespace ddwave {

namespace {

// Gray-coded PAM-4 levels indexed by the 2-bit label.
constexpr double kPam4[4] = {-3.0, -1.0, 3.0, 1.0};

}  // namespace

std::string_view to_string(ConstellationKind kind) { return kind == ConstellationKind::qpsk ? "qpsk" : "16qam"; }

ConstellationKind constellation_from_string(std::string_view name) {
  if (name == "qpsk") return ConstellationKind::qpsk;
  if (name == "16qam") return ConstellationKind::qam16;
  fail(ErrorCode::config, "unknown constellation '" + std::string(name) + "' (expected qpsk or 16qam)");
}

Constellation Constellation::qpsk() {
  const double a = 1.0 / std::sqrt(2.0);
  // label b0b1: b0 selects the in-phase sign, b1 the quadrature sign
  return Constellation(ConstellationKind::qpsk, 2, {{a, a}, {a, -a}, {-a, a}, {-a, -a}});
}

Constellation Constellation::qam16() {
  const double scale = 1.0 / std::sqrt(10.0);
  std::vector<Complex> pts(16);
  for (std::size_t label = 0; label < 16; ++label) {
    pts[label] = scale * Complex{kPam4[label >> 2], kPam4[label & 3]};
  }
  return Constellation(ConstellationKind::qam16, 4, std::move(pts));
}

Constellation Constellation::make(ConstellationKind kind) {
  return kind == ConstellationKind::qpsk ? qpsk() : qam16();
}

std::size_t Constellation::slice(Complex z) const {
  std::size_t best = 0;
  double best_dist = std::norm(z - points_[0]);
  for (std::size_t i = 1; i < points_.size(); ++i) {
    const double d = std::norm(z - points_[i]);
    if (d < best_dist) {
      best_dist = d;
      best = i;
    }
  }
  return best;
}

ComplexVector map_bits(std::span<const std::uint8_t> bits, const Constellation& constellation) {
  const std::size_t k = constellation.bits_per_symbol();
  require(bits.size() % k == 0, ErrorCode::invalid_dimension,
          "bit count " + std::to_string(bits.size()) + " is not a multiple of " + std::to_string(k));
  ComplexVector out(static_cast<Eigen::Index>(bits.size() / k));
  for (Eigen::Index s = 0; s < out.size(); ++s) {
    std::size_t label = 0;
    for (std::size_t b = 0; b < k; ++b) label = (label << 1) | (bits[static_cast<std::size_t>(s) * k + b] & 1u);
    out(s) = constellation.points()[label];
  }
  return out;
}

Bits demap_symbols(const ComplexVector& symbols, const Constellation& constellation) {
  const std::size_t k = constellation.bits_per_symbol();
  Bits bits(static_cast<std::size_t>(symbols.size()) * k);
  for (Eigen::Index s = 0; s < symbols.size(); ++s) {
    const std::size_t label = constellation.slice(symbols(s));
    for (std::size_t b = 0; b < k; ++b) {
      bits[static_cast<std::size_t>(s) * k + b] = static_cast<std::uint8_t>((label >> (k - 1 - b)) & 1u);
    }
  }
  return bits;
}

Bits random_bits(std::size_t count, Rng& rng) {
  Bits bits(count);
  for (std::size_t i = 0; i < count; i += 64) {
    const std::uint64_t word = rng();
    for (std::size_t b = 0; b < 64 && i + b < count; ++b) bits[i + b] = static_cast<std::uint8_t>((word >> b) & 1u);
  }
  return bits;
}

double noise_variance(double snr_db) {
  if (std::isinf(snr_db) && snr_db > 0) return 0.0;
  return std::pow(10.0, -snr_db / 10.0);
}

ComplexVector add_awgn(const ComplexVector& r, double snr_db, Rng& rng) {
  const double var = noise_variance(snr_db);
  if (var == 0.0) return r;
  ComplexVector out = r;
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) += complex_gaussian(rng, var);
  return out;
}

ComplexVector equalize_zf(const ComplexMatrix& g, const ComplexVector& y) {
  require(g.rows() == g.cols(), ErrorCode::invalid_dimension, "ZF needs a square channel");
  require(g.rows() == y.size(), ErrorCode::invalid_dimension, "observation length does not match the channel");
  Eigen::PartialPivLU<ComplexMatrix> lu(g);
  const double rcond = lu.rcond();
  require(std::isfinite(rcond) && rcond > 1e-12 && lu.matrixLU().diagonal().cwiseAbs().minCoeff() > 0.0,
          ErrorCode::singular_channel, "channel matrix is numerically singular");
  return lu.solve(y);
}

ComplexVector equalize_lmmse(const ComplexMatrix& g, const ComplexVector& y, double noise_var) {
  require(g.rows() == g.cols(), ErrorCode::invalid_dimension, "LMMSE needs a square channel");
  require(g.rows() == y.size(), ErrorCode::invalid_dimension, "observation length does not match the channel");
  require(noise_var >= 0.0, ErrorCode::precondition, "noise variance must be nonnegative");
  ComplexMatrix gram = g * g.adjoint();
  gram.diagonal().array() += noise_var;
  return g.adjoint() * gram.partialPivLu().solve(y);
}

std::string_view to_string(Detector d) { return d == Detector::zf ? "zf" : "lmmse"; }

Detector detector_from_string(std::string_view name) {
  if (name == "zf") return Detector::zf;
  if (name == "lmmse") return Detector::lmmse;
  fail(ErrorCode::config, "unknown detector '" + std::string(name) + "' (expected zf or lmmse)");
}

ChannelRealization ChannelSource::draw(Rng& rng) const {
  if (fixed_paths) return ChannelRealization(config, *fixed_paths);
  return sample_paths(config, mode, rng);
}

LinkResult run_ber_point(const WaveformSpec& spec, const ChannelSource& source, const Constellation& constellation,
                         const BerRequest& request) {
  require(request.frames >= 1, ErrorCode::precondition, "at least one frame is required");
  require(source.config.N == spec.size(), ErrorCode::invalid_dimension, "channel N does not match the waveform");
  require(source.config.cp_len == spec.cp_len(), ErrorCode::invalid_dimension,
          "channel cp_len does not match the waveform");

  const std::size_t bits_per_frame = spec.size() * constellation.bits_per_symbol();
  const double var = noise_variance(request.snr_db);

  struct FrameOutcome {
    std::size_t errors = 0;
    double papr_db = 0.0;
  };
  std::vector<FrameOutcome> outcomes(request.frames);

  parallel_for(request.frames, request.threads, [&](std::size_t frame) {
    Rng rng = substream(request.seed, frame);
    const ChannelRealization chan = source.draw(rng);
    const Bits bits = random_bits(bits_per_frame, rng);
    const ComplexVector x = map_bits(bits, constellation);
    const ComplexVector tx = prepend_cp(spec, modulate(spec, x));
    // The oracle returns the N post-prefix samples; noise is added there.
    const ComplexVector r = add_awgn(time_domain_apply(tx, chan), request.snr_db, rng);
    const ComplexVector y = demodulate(spec, r);
    const ComplexMatrix g = effective_channel(spec, chan);
    const ComplexVector x_hat =
        request.detector == Detector::zf ? equalize_zf(g, y) : equalize_lmmse(g, y, var);
    const Bits decided = demap_symbols(x_hat, constellation);
    std::size_t errors = 0;
    for (std::size_t i = 0; i < bits.size(); ++i) errors += bits[i] != decided[i];
    outcomes[frame] = {errors, measure_papr_db(tx)};
  });

  LinkResult result;
  result.snr_db = request.snr_db;
  result.frames = request.frames;
  result.total_bits = bits_per_frame * request.frames;
  std::vector<double> paprs;
  paprs.reserve(request.frames);
  double sum_sq = 0.0;
  for (const auto& o : outcomes) {
    result.bit_errors += o.errors;
    const double frame_ber = static_cast<double>(o.errors) / static_cast<double>(bits_per_frame);
    sum_sq += frame_ber * frame_ber;
    paprs.push_back(o.papr_db);
  }
  result.ber = static_cast<double>(result.bit_errors) / static_cast<double>(result.total_bits);
  const auto frames = static_cast<double>(request.frames);
  if (request.frames > 1) {
    const double variance = std::max(0.0, (sum_sq - frames * result.ber * result.ber) / (frames - 1.0));
    result.ber_std_error = std::sqrt(variance / frames);
  }
  // nearest-rank 99th percentile
  std::sort(paprs.begin(), paprs.end());
  const auto rank = static_cast<std::size_t>(std::ceil(0.99 * frames));
  result.papr_db_p99 = paprs[std::clamp<std::size_t>(rank, 1, paprs.size()) - 1];
  return result;
}

void write_link_csv_header(std::ostream& out) { out << "snr_db,waveform,ber,frames,papr_db_p99\n"; }

void write_link_csv_row(std::ostream& out, const LinkResult& result, std::string_view waveform) {
  out << io::format_double(result.snr_db) << ',' << waveform << ',' << io::format_double(result.ber) << ','
      << result.frames << ',' << io::format_double(result.papr_db_p99) << '\n';
}

}  // namespace ddwave
