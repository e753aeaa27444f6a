#include "ddwave/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ddwave/error.hpp"
#include "ddwave/io.hpp"

namespace ddwave {

namespace {

long rounded_doppler(double f) { return static_cast<long>(std::floor(f + 0.5)); }

void add_path(ComplexMatrix& h, Complex gain, std::size_t delay, double doppler, const CpPhaseFn& phase) {
  const std::size_t N = static_cast<std::size_t>(h.rows());
  require(delay < N, ErrorCode::invalid_delay,
          "path delay " + std::to_string(delay) + " must be smaller than N = " + std::to_string(N));
  const auto nd = static_cast<double>(N);
  for (std::size_t n = 0; n < N; ++n) {
    const std::size_t col = (n + N - delay) % N;
    Complex value = gain * unit_phasor(doppler * static_cast<double>(n) / nd);
    if (n < delay) value *= unit_phasor(phase(static_cast<long>(n) - static_cast<long>(delay)));
    h(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(col)) += value;
  }
}

void write_axis_row(std::ostream& out, double a, double b, Complex v) {
  out << io::format_double(a) << ',' << io::format_double(b) << ',' << io::format_double(v.real()) << ','
      << io::format_double(v.imag()) << ',' << io::format_double(std::abs(v)) << '\n';
}

}  // namespace

void ChannelConfig::validate() const {
  require(N >= 1, ErrorCode::config, "N must be at least 1");
  require(fs > 0.0 && std::isfinite(fs), ErrorCode::config, "fs must be a positive sampling rate");
  require(fc > 0.0 && std::isfinite(fc), ErrorCode::config, "fc must be a positive carrier frequency");
  require(ell_max < N, ErrorCode::config, "ell_max must be smaller than N");
  require(f_max <= N / 2, ErrorCode::config, "f_max must not exceed floor(N/2)");
  require(cp_len >= ell_max, ErrorCode::config, "cp_len must be at least ell_max");
  require(cp_len <= N, ErrorCode::config, "cp_len must not exceed N");
}

double spread_product(const ChannelConfig& config) {
  const double tau_max = config.delay_s(static_cast<double>(config.ell_max));
  const double nu_max = config.doppler_hz(static_cast<double>(config.f_max) + 0.5);
  return tau_max * nu_max;
}

ChannelRealization::ChannelRealization(ChannelConfig config, std::vector<PathParams> paths)
    : config_(config), paths_(std::move(paths)) {
  config_.validate();
  for (const auto& p : paths_) {
    require(p.delay <= config_.ell_max, ErrorCode::invalid_delay,
            "path delay " + std::to_string(p.delay) + " exceeds ell_max " + std::to_string(config_.ell_max));
    require(std::isfinite(p.doppler) && std::isfinite(p.gain.real()) && std::isfinite(p.gain.imag()),
            ErrorCode::precondition, "path parameters must be finite");
    require(std::abs(rounded_doppler(p.doppler)) <= static_cast<long>(config_.f_max), ErrorCode::precondition,
            "path Doppler " + io::format_double(p.doppler) + " exceeds f_max " + std::to_string(config_.f_max));
  }
}

ChannelRealization sample_paths(const ChannelConfig& config, DopplerMode mode, Rng& rng) {
  config.validate();
  require(config.paths >= 1, ErrorCode::empty_channel, "a channel needs at least one path");
  const std::size_t P = config.paths;
  const std::size_t delay_count = config.ell_max + 1;

  std::vector<std::size_t> delays(P);
  if (P <= delay_count) {
    std::vector<std::size_t> pool(delay_count);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    std::shuffle(pool.begin(), pool.end(), rng);
    std::copy_n(pool.begin(), P, delays.begin());
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, config.ell_max);
    for (auto& d : delays) d = pick(rng);
  }

  const double fmax = static_cast<double>(config.f_max);
  std::uniform_int_distribution<long> int_doppler(-static_cast<long>(config.f_max), static_cast<long>(config.f_max));
  std::uniform_real_distribution<double> frac_doppler(-fmax - 0.5, fmax + 0.5);

  std::vector<PathParams> paths(P);
  for (std::size_t p = 0; p < P; ++p) {
    paths[p].gain = complex_gaussian(rng, 1.0 / static_cast<double>(P));
    paths[p].delay = delays[p];
    paths[p].doppler =
        mode == DopplerMode::integer ? static_cast<double>(int_doppler(rng)) : frac_doppler(rng);
  }
  return ChannelRealization(config, std::move(paths));
}

ComplexVector time_domain_apply(const ComplexVector& s_cp, const ChannelRealization& chan) {
  const auto& cfg = chan.config();
  const std::size_t N = cfg.N;
  const std::size_t cp = cfg.cp_len;
  require(static_cast<std::size_t>(s_cp.size()) == N + cp, ErrorCode::invalid_dimension,
          "input must hold N + cp_len = " + std::to_string(N + cp) + " samples");
  const auto nd = static_cast<double>(N);
  ComplexVector r = ComplexVector::Zero(static_cast<Eigen::Index>(N));
  for (const auto& p : chan.paths()) {
    require(p.delay <= cp, ErrorCode::precondition, "path delay exceeds the cyclic prefix length");
    for (std::size_t n = 0; n < N; ++n) {
      // index of s[n − ℓ] in the prefix-first buffer
      const std::size_t src = cp + n - p.delay;
      r(static_cast<Eigen::Index>(n)) +=
          p.gain * unit_phasor(p.doppler * static_cast<double>(n) / nd) * s_cp(static_cast<Eigen::Index>(src));
    }
  }
  return r;
}

ComplexMatrix channel_matrix(const ChannelRealization& chan, const CpPhaseFn& phase) {
  const auto n = static_cast<Eigen::Index>(chan.size());
  ComplexMatrix h = ComplexMatrix::Zero(n, n);
  for (const auto& p : chan.paths()) add_path(h, p.gain, p.delay, p.doppler, phase);
  return h;
}

ComplexMatrix path_matrix(std::size_t N, std::size_t delay, double doppler, const CpPhaseFn& phase) {
  require(N >= 1, ErrorCode::invalid_dimension, "matrix dimension must be at least 1");
  const auto n = static_cast<Eigen::Index>(N);
  ComplexMatrix h = ComplexMatrix::Zero(n, n);
  add_path(h, 1.0, delay, doppler, phase);
  return h;
}

Complex tvtf(const ChannelRealization& chan, double t, double f) {
  const auto& cfg = chan.config();
  Complex sum{0.0, 0.0};
  for (const auto& p : chan.paths()) {
    const double nu = cfg.doppler_hz(p.doppler);
    const double tau = cfg.delay_s(static_cast<double>(p.delay));
    sum += p.gain * std::polar(1.0, kTwoPi * (nu * t - tau * f));
  }
  return sum;
}

std::vector<DvirfPoint> dvirf_points(const ChannelRealization& chan) {
  const auto& cfg = chan.config();
  std::vector<DvirfPoint> points;
  points.reserve(chan.paths().size());
  for (const auto& p : chan.paths()) {
    points.push_back({cfg.delay_s(static_cast<double>(p.delay)), cfg.doppler_hz(p.doppler), p.gain});
  }
  return points;
}

ChannelRealization realization_from_points(const ChannelConfig& config, std::span<const DvirfPoint> points) {
  std::vector<PathParams> paths;
  paths.reserve(points.size());
  for (const auto& pt : points) {
    const double samples = std::round(pt.delay_s * config.fs);
    require(samples >= 0.0, ErrorCode::invalid_delay, "negative path delay");
    PathParams p;
    p.gain = pt.gain;
    p.delay = static_cast<std::size_t>(samples);
    p.doppler = pt.doppler_hz * static_cast<double>(config.N) / config.fs;
    paths.push_back(p);
  }
  return ChannelRealization(config, std::move(paths));
}

void write_dvirf_csv(std::ostream& out, std::span<const DvirfPoint> points) {
  out << "axis1,axis2,re,im,mag\n";
  for (const auto& pt : points) write_axis_row(out, pt.delay_s, pt.doppler_hz, pt.gain);
}

void write_tvtf_csv(std::ostream& out, const ChannelRealization& chan, std::span<const double> times,
                    std::span<const double> freqs) {
  out << "axis1,axis2,re,im,mag\n";
  for (double t : times) {
    for (double f : freqs) write_axis_row(out, t, f, tvtf(chan, t, f));
  }
}

std::vector<std::vector<ComplexMatrix>> mimo_channel(std::size_t N, std::span<const MimoPath> paths, std::size_t Nt,
                                                     std::size_t Nr, const BeamGain& tx_gain, const BeamGain& rx_gain,
                                                     const CpPhaseFn& phase) {
  require(N >= 1 && Nt >= 1 && Nr >= 1, ErrorCode::invalid_dimension, "MIMO dimensions must be at least 1");
  const auto n = static_cast<Eigen::Index>(N);
  std::vector<std::vector<ComplexMatrix>> grid(Nt, std::vector<ComplexMatrix>(Nr, ComplexMatrix::Zero(n, n)));
  for (const auto& p : paths) {
    require(static_cast<std::size_t>(p.gains.rows()) == Nt && static_cast<std::size_t>(p.gains.cols()) == Nr,
            ErrorCode::invalid_dimension, "per-path gain matrix must be Nt x Nr");
    require(!tx_gain || p.aod.has_value(), ErrorCode::precondition,
            "transmit beam gain needs an angle of departure on every path");
    require(!rx_gain || p.aoa.has_value(), ErrorCode::precondition,
            "receive beam gain needs an angle of arrival on every path");
    const double beam = (tx_gain ? tx_gain(*p.aod) : 1.0) * (rx_gain ? rx_gain(*p.aoa) : 1.0);
    if (beam == 0.0) continue;
    // Φ·D·Π is shared by every antenna pair; only the scalar differs.
    const ComplexMatrix shape = path_matrix(N, p.delay, p.doppler, phase);
    for (std::size_t t = 0; t < Nt; ++t) {
      for (std::size_t r = 0; r < Nr; ++r) {
        grid[t][r] += (beam * p.gains(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(r))) * shape;
      }
    }
  }
  return grid;
}

}  // namespace ddwave
