#include "ddwave/modem.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ddwave/error.hpp"
#include "ddwave/io.hpp"

namespace ddwave {

namespace {

// kron(A, diag(d)) without forming the diagonal matrix.
ComplexMatrix kron_with_diagonal(const ComplexMatrix& a, const std::vector<Complex>& d) {
  const auto na = a.rows();
  const auto nd = static_cast<Eigen::Index>(d.size());
  ComplexMatrix out = ComplexMatrix::Zero(na * nd, na * nd);
  for (Eigen::Index i = 0; i < na; ++i) {
    for (Eigen::Index j = 0; j < na; ++j) {
      for (Eigen::Index k = 0; k < nd; ++k) out(i * nd + k, j * nd + k) = a(i, j) * d[static_cast<std::size_t>(k)];
    }
  }
  return out;
}

std::vector<Complex> pulse_or_identity(std::vector<Complex> pulse, std::size_t K, const char* which) {
  if (pulse.empty()) return std::vector<Complex>(K, Complex{1.0, 0.0});
  require(pulse.size() == K, ErrorCode::invalid_dimension,
          std::string(which) + " pulse must have K = " + std::to_string(K) + " diagonal entries");
  return pulse;
}

void require_length(const WaveformSpec& spec, Eigen::Index got, std::size_t expected, const char* what) {
  require(static_cast<std::size_t>(got) == expected, ErrorCode::invalid_dimension,
          std::string(spec.name()) + " " + what + " expects " + std::to_string(expected) + " samples, got " +
              std::to_string(got));
}

void require_cp(std::size_t cp_len, std::size_t N) {
  require(N >= 1, ErrorCode::invalid_dimension, "waveform size must be at least 1");
  require(cp_len <= N, ErrorCode::invalid_dimension, "cp_len must not exceed the block size");
}

// H·M for a path list, gathering rows of M instead of forming H densely.
ComplexMatrix apply_paths_left(std::span<const PathParams> paths, const CpPhaseFn& phase, const ComplexMatrix& m) {
  const std::size_t N = static_cast<std::size_t>(m.rows());
  const auto nd = static_cast<double>(N);
  ComplexMatrix out = ComplexMatrix::Zero(m.rows(), m.cols());
  for (const auto& p : paths) {
    require(p.delay < N, ErrorCode::invalid_delay, "path delay must be smaller than the block size");
    for (std::size_t n = 0; n < N; ++n) {
      Complex w = p.gain * unit_phasor(p.doppler * static_cast<double>(n) / nd);
      if (n < p.delay) w *= unit_phasor(phase(static_cast<long>(n) - static_cast<long>(p.delay)));
      const auto src = static_cast<Eigen::Index>((n + N - p.delay) % N);
      out.row(static_cast<Eigen::Index>(n)) += w * m.row(src);
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(WaveformKind kind) {
  switch (kind) {
    case WaveformKind::ofdm:
      return "ofdm";
    case WaveformKind::otfs:
      return "otfs";
    case WaveformKind::afdm:
      return "afdm";
  }
  return "unknown";
}

WaveformKind waveform_from_string(std::string_view name) {
  if (name == "ofdm") return WaveformKind::ofdm;
  if (name == "otfs") return WaveformKind::otfs;
  if (name == "afdm") return WaveformKind::afdm;
  fail(ErrorCode::config, "unknown waveform '" + std::string(name) + "' (expected ofdm, otfs or afdm)");
}

WaveformSpec::WaveformSpec(std::variant<OfdmParams, OtfsParams, AfdmParams> params, std::size_t size,
                           std::size_t cp_len, ComplexMatrix tx, ComplexMatrix rx)
    : params_(std::move(params)),
      size_(size),
      cp_len_(cp_len),
      tx_(std::make_shared<const ComplexMatrix>(std::move(tx))),
      rx_(std::make_shared<const ComplexMatrix>(std::move(rx))) {}

WaveformSpec WaveformSpec::ofdm(std::size_t N, std::size_t cp_len) {
  require_cp(cp_len, N);
  ComplexMatrix f = dft_matrix(N);
  ComplexMatrix fh = f.adjoint();
  return WaveformSpec(OfdmParams{N}, N, cp_len, std::move(fh), std::move(f));
}

WaveformSpec WaveformSpec::otfs(std::size_t K, std::size_t L, std::size_t cp_len, std::vector<Complex> pulse_tx,
                                std::vector<Complex> pulse_rx) {
  require(K >= 1 && L >= 1, ErrorCode::invalid_dimension, "OTFS grid dimensions must be at least 1");
  require_cp(cp_len, K * L);
  OtfsParams p{K, L, pulse_or_identity(std::move(pulse_tx), K, "transmit"),
               pulse_or_identity(std::move(pulse_rx), K, "receive")};
  const ComplexMatrix fl = dft_matrix(L);
  ComplexMatrix tx = kron_with_diagonal(fl.adjoint(), p.pulse_tx);
  ComplexMatrix rx = kron_with_diagonal(fl, p.pulse_rx);
  return WaveformSpec(std::move(p), K * L, cp_len, std::move(tx), std::move(rx));
}

WaveformSpec WaveformSpec::afdm(std::size_t N, double c1, double c2, std::size_t xi, std::size_t cp_len) {
  require_cp(cp_len, N);
  require(std::isfinite(c1) && std::isfinite(c2), ErrorCode::precondition, "AFDM chirp frequencies must be finite");
  ComplexMatrix a = daft_matrix(N, c1, c2);
  ComplexMatrix ah = a.adjoint();
  return WaveformSpec(AfdmParams{N, c1, c2, xi}, N, cp_len, std::move(ah), std::move(a));
}

WaveformKind WaveformSpec::kind() const {
  if (as_otfs()) return WaveformKind::otfs;
  if (as_afdm()) return WaveformKind::afdm;
  return WaveformKind::ofdm;
}

CpPhaseFn WaveformSpec::phase() const {
  if (const auto* a = as_afdm()) return CpPhaseFn::afdm_chirp(a->c1, a->N);
  return CpPhaseFn::zero();
}

ComplexVector modulate(const WaveformSpec& spec, const ComplexVector& x) {
  require_length(spec, x.size(), spec.size(), "modulate");
  return spec.modulator() * x;
}

ComplexVector demodulate(const WaveformSpec& spec, const ComplexVector& r) {
  require_length(spec, r.size(), spec.size(), "demodulate");
  return spec.demodulator() * r;
}

ComplexVector prepend_cp(const WaveformSpec& spec, const ComplexVector& s) {
  const std::size_t N = spec.size();
  const std::size_t cp = spec.cp_len();
  require_length(spec, s.size(), N, "prepend_cp");
  const CpPhaseFn phase = spec.phase();
  ComplexVector out(static_cast<Eigen::Index>(N + cp));
  for (std::size_t i = 0; i < cp; ++i) {
    const long n_prime = static_cast<long>(i) - static_cast<long>(cp);
    out(static_cast<Eigen::Index>(i)) =
        s(static_cast<Eigen::Index>(static_cast<long>(N) + n_prime)) * unit_phasor(phase(n_prime));
  }
  out.tail(static_cast<Eigen::Index>(N)) = s;
  return out;
}

ComplexVector strip_cp(const WaveformSpec& spec, const ComplexVector& r_cp) {
  require_length(spec, r_cp.size(), spec.size() + spec.cp_len(), "strip_cp");
  return r_cp.tail(static_cast<Eigen::Index>(spec.size()));
}

ComplexMatrix effective_channel(const WaveformSpec& spec, const ChannelRealization& chan) {
  require(chan.size() == spec.size(), ErrorCode::invalid_dimension,
          "channel block size " + std::to_string(chan.size()) + " does not match waveform size " +
              std::to_string(spec.size()));
  return spec.demodulator() * apply_paths_left(chan.paths(), spec.phase(), spec.modulator());
}

ComplexMatrix effective_path(const WaveformSpec& spec, std::size_t delay, double doppler) {
  const PathParams unit{Complex{1.0, 0.0}, delay, doppler, std::nullopt, std::nullopt};
  return spec.demodulator() * apply_paths_left(std::span(&unit, 1), spec.phase(), spec.modulator());
}

AfdmTuning afdm_tune(std::size_t ell_max, std::size_t f_max, std::size_t xi, std::size_t N) {
  require(afdm_orthogonality_ok(ell_max, f_max, xi, N), ErrorCode::tuning_infeasible,
          "AFDM orthogonality condition fails for ell_max=" + std::to_string(ell_max) + ", f_max=" +
              std::to_string(f_max) + ", xi=" + std::to_string(xi) + ", N=" + std::to_string(N));
  const auto nd = static_cast<double>(N);
  return {static_cast<double>(2 * (f_max + xi) + 1) / (2.0 * nd), 1.0 / (2.0 * nd * nd)};
}

bool afdm_orthogonality_ok(std::size_t ell_max, std::size_t f_max, std::size_t xi, std::size_t N) {
  // Equivalent to (2(f_max+ξ)+1)(ℓ_max+1) ≤ N.
  return 2 * (f_max + xi) * (ell_max + 1) + ell_max < N;
}

bool otfs_orthogonality_ok(std::size_t ell_max, std::size_t f_max, std::size_t K, std::size_t L) {
  return ell_max + 1 <= K && 2 * f_max + 1 <= L;
}

long doppler_integer_part(double f) { return static_cast<long>(std::floor(f + 0.5)); }

std::size_t afdm_band_step(const AfdmParams& p) {
  const double raw = 2.0 * static_cast<double>(p.N) * p.c1;
  const double step = std::round(raw);
  require(std::abs(raw - step) <= 1e-9 && step >= 1.0, ErrorCode::precondition,
          "AFDM support prediction needs 2*N*c1 to be a positive integer");
  return static_cast<std::size_t>(step);
}

SupportPattern predict_support(const WaveformSpec& spec, std::size_t ell, long f_int) {
  SupportPattern support;
  if (const auto* otfs = spec.as_otfs()) {
    const std::size_t K = otfs->K;
    const std::size_t L = otfs->L;
    require(ell < K, ErrorCode::precondition, "OTFS delay must be smaller than K");
    require(std::abs(f_int) <= static_cast<long>(L / 2), ErrorCode::precondition,
            "OTFS integer Doppler must satisfy |f| <= L/2");
    const long l_long = static_cast<long>(L);
    support.reserve(K * L);
    for (std::size_t block = 0; block < L; ++block) {
      const auto block_col = static_cast<std::size_t>(((static_cast<long>(block) - f_int) % l_long + l_long) % l_long);
      for (std::size_t r = 0; r < K; ++r) {
        support.push_back({block * K + r, block_col * K + (r + K - ell) % K});
      }
    }
  } else if (const auto* afdm = spec.as_afdm()) {
    const std::size_t N = afdm->N;
    const std::size_t step = afdm_band_step(*afdm);
    const long half_band = static_cast<long>((step - 1) / 2);
    require(ell < N, ErrorCode::precondition, "AFDM delay must be smaller than N");
    require(std::abs(f_int) <= half_band, ErrorCode::precondition,
            "AFDM integer Doppler exceeds the band half-width (2*N*c1 - 1)/2");
    const long n_long = static_cast<long>(N);
    const long shift = ((static_cast<long>(ell * step) - f_int) % n_long + n_long) % n_long;
    support.reserve(N);
    for (std::size_t r = 0; r < N; ++r) support.push_back({r, (r + static_cast<std::size_t>(shift)) % N});
  } else {
    fail(ErrorCode::unsupported_waveform, "support prediction is only defined for OTFS and AFDM");
  }
  std::sort(support.begin(), support.end());
  return support;
}

double measure_papr_db(const ComplexVector& s) {
  require(s.size() > 0, ErrorCode::invalid_dimension, "PAPR needs a nonempty sequence");
  const double peak = s.cwiseAbs2().maxCoeff();
  const double mean = s.cwiseAbs2().mean();
  require(mean > 0.0, ErrorCode::undefined_papr, "PAPR is undefined for an all-zero sequence");
  return 10.0 * std::log10(peak / mean);
}

void write_effective_channel_csv(std::ostream& out, const ComplexMatrix& g, double threshold) {
  out << "row,col,re,im,mag\n";
  for (Eigen::Index r = 0; r < g.rows(); ++r) {
    for (Eigen::Index c = 0; c < g.cols(); ++c) {
      const Complex v = g(r, c);
      const double mag = std::abs(v);
      if (mag < threshold) continue;
      out << r << ',' << c << ',' << io::format_double(v.real()) << ',' << io::format_double(v.imag()) << ','
          << io::format_double(mag) << '\n';
    }
  }
}

nlohmann::json effective_channel_magnitude_json(const ComplexMatrix& g, double threshold) {
  nlohmann::json grid = nlohmann::json::array();
  for (Eigen::Index r = 0; r < g.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < g.cols(); ++c) row.push_back(std::abs(g(r, c)));
    grid.push_back(std::move(row));
  }
  return {{"rows", g.rows()}, {"cols", g.cols()}, {"threshold", threshold}, {"magnitude", std::move(grid)}};
}

}  // namespace ddwave
