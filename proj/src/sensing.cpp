#include "ddwave/sensing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "ddwave/error.hpp"
#include "ddwave/io.hpp"

namespace ddwave {

namespace {

std::vector<std::size_t> checked_delay_bins(std::span<const double> bins, std::size_t N) {
  std::vector<std::size_t> out;
  out.reserve(bins.size());
  for (double b : bins) {
    require(std::floor(b) == b, ErrorCode::precondition,
            "fractional delay bin " + io::format_double(b) + " is unsupported (integer delays only)");
    require(b >= 0.0 && b < static_cast<double>(N), ErrorCode::precondition,
            "delay bin " + io::format_double(b) + " outside [0, N-1]");
    out.push_back(static_cast<std::size_t>(b));
  }
  return out;
}

// Shared kernel: values(ℓ,f) = Σ_n a[n]·conj(b[(n−ℓ) mod N])·e^{sign·j2πfn/N}.
DelayDopplerMap correlate(const ComplexVector& a, const ComplexVector& b, std::span<const double> delay_bins,
                          std::span<const double> doppler_bins, double sign) {
  const std::size_t N = static_cast<std::size_t>(a.size());
  require(N >= 1, ErrorCode::invalid_dimension, "sequence must be nonempty");
  require(b.size() == a.size(), ErrorCode::invalid_dimension, "sequences must have equal length");
  const auto delays = checked_delay_bins(delay_bins, N);
  const auto nd = static_cast<double>(N);
  for (double f : doppler_bins) {
    require(std::isfinite(f) && std::abs(f) <= nd / 2.0, ErrorCode::precondition,
            "Doppler bin " + io::format_double(f) + " outside [-N/2, N/2]");
  }

  // rotations(n, j) = e^{sign·j2π·f_j·n/N}
  ComplexMatrix rotations(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(doppler_bins.size()));
  for (std::size_t j = 0; j < doppler_bins.size(); ++j) {
    for (std::size_t n = 0; n < N; ++n) {
      rotations(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(j)) =
          unit_phasor(sign * doppler_bins[j] * static_cast<double>(n) / nd);
    }
  }

  DelayDopplerMap map;
  map.delay_bins.assign(delay_bins.begin(), delay_bins.end());
  map.doppler_bins.assign(doppler_bins.begin(), doppler_bins.end());
  map.values.resize(static_cast<Eigen::Index>(delays.size()), static_cast<Eigen::Index>(doppler_bins.size()));
  Eigen::RowVectorXcd lagged(static_cast<Eigen::Index>(N));
  for (std::size_t i = 0; i < delays.size(); ++i) {
    for (std::size_t n = 0; n < N; ++n) {
      const auto src = static_cast<Eigen::Index>((n + N - delays[i]) % N);
      lagged(static_cast<Eigen::Index>(n)) = a(static_cast<Eigen::Index>(n)) * std::conj(b(src));
    }
    map.values.row(static_cast<Eigen::Index>(i)) = lagged * rotations;
  }
  return map;
}

// e^{j2πfn/N}·Φ·s[(n−ℓ) mod N]: one unit path applied in the time domain.
ComplexVector apply_unit_path(const ComplexVector& s, std::size_t delay, double doppler, const CpPhaseFn& phase) {
  const std::size_t N = static_cast<std::size_t>(s.size());
  const auto nd = static_cast<double>(N);
  ComplexVector out(s.size());
  for (std::size_t n = 0; n < N; ++n) {
    Complex w = unit_phasor(doppler * static_cast<double>(n) / nd);
    if (n < delay) w *= unit_phasor(phase(static_cast<long>(n) - static_cast<long>(delay)));
    out(static_cast<Eigen::Index>(n)) = w * s(static_cast<Eigen::Index>((n + N - delay) % N));
  }
  return out;
}

}  // namespace

DelayDopplerMap::Cell DelayDopplerMap::argmax() const {
  const auto cells = top_cells(1);
  require(!cells.empty(), ErrorCode::invalid_dimension, "empty delay-Doppler map");
  return cells.front();
}

std::vector<DelayDopplerMap::Cell> DelayDopplerMap::top_cells(std::size_t count) const {
  std::vector<Cell> cells;
  cells.reserve(static_cast<std::size_t>(values.size()));
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      const auto di = static_cast<std::size_t>(i);
      const auto dj = static_cast<std::size_t>(j);
      cells.push_back({di, dj, delay_bins[di], doppler_bins[dj], std::abs(values(i, j))});
    }
  }
  std::stable_sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
    if (a.magnitude != b.magnitude) return a.magnitude > b.magnitude;
    if (a.delay != b.delay) return a.delay < b.delay;
    return a.doppler < b.doppler;
  });
  if (cells.size() > count) cells.resize(count);
  return cells;
}

void DelayDopplerMap::write_csv(std::ostream& out) const {
  out << "delay_bin,doppler_bin,re,im,mag\n";
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      const Complex v = values(i, j);
      out << io::format_double(delay_bins[static_cast<std::size_t>(i)]) << ','
          << io::format_double(doppler_bins[static_cast<std::size_t>(j)]) << ',' << io::format_double(v.real())
          << ',' << io::format_double(v.imag()) << ',' << io::format_double(std::abs(v)) << '\n';
    }
  }
}

std::vector<double> integer_bins(long lo, long hi) {
  std::vector<double> bins;
  for (long v = lo; v <= hi; ++v) bins.push_back(static_cast<double>(v));
  return bins;
}

DelayDopplerMap ambiguity_map(const ComplexVector& s, std::span<const double> delay_bins,
                              std::span<const double> doppler_bins) {
  return correlate(s, s, delay_bins, doppler_bins, +1.0);
}

DelayDopplerMap matched_filter_map(const ComplexVector& r, const ComplexVector& s_known,
                                   std::span<const double> delay_bins, std::span<const double> doppler_bins) {
  return correlate(r, s_known, delay_bins, doppler_bins, -1.0);
}

double peak_to_sidelobe_db(const DelayDopplerMap& map) {
  const auto cells = map.top_cells(2);
  require(!cells.empty(), ErrorCode::invalid_dimension, "empty delay-Doppler map");
  if (cells.size() < 2 || cells[1].magnitude == 0.0) return std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(cells[0].magnitude / cells[1].magnitude);
}

std::string_view to_string(Geometry g) { return g == Geometry::monostatic ? "monostatic" : "bistatic"; }

Geometry geometry_from_string(std::string_view name) {
  if (name == "monostatic") return Geometry::monostatic;
  if (name == "bistatic") return Geometry::bistatic;
  fail(ErrorCode::config, "unknown geometry '" + std::string(name) + "' (expected monostatic or bistatic)");
}

RadarMeasures radar_convert(double tau_s, double nu_hz, double fc, Geometry geometry) {
  require(fc > 0.0, ErrorCode::precondition, "carrier frequency must be positive");
  const double path_length = kSpeedOfLight * tau_s;
  const double range = geometry == Geometry::monostatic ? path_length / 2.0 : path_length;
  return {range, kSpeedOfLight * nu_hz / (2.0 * fc)};
}

std::pair<double, double> radar_invert(const RadarMeasures& m, double fc, Geometry geometry) {
  require(fc > 0.0, ErrorCode::precondition, "carrier frequency must be positive");
  const double path_length = geometry == Geometry::monostatic ? 2.0 * m.range_m : m.range_m;
  return {path_length / kSpeedOfLight, 2.0 * m.velocity_mps * fc / kSpeedOfLight};
}

RadarTargetEstimate make_estimate(double delay, double doppler, Complex gain, const SensingScale& scale) {
  const double tau = delay / scale.fs;
  const double nu = doppler * scale.fs / static_cast<double>(scale.N);
  const RadarMeasures m = radar_convert(tau, nu, scale.fc, scale.geometry);
  return {delay, doppler, gain, m.range_m, m.velocity_mps};
}

std::vector<RadarTargetEstimate> matched_filter_estimate(const ComplexVector& r, const ComplexVector& s_known,
                                                         std::size_t targets, const SearchGrid& grid,
                                                         const SensingScale& scale) {
  const auto delays = integer_bins(0, static_cast<long>(grid.ell_max));
  const auto dopplers = integer_bins(-static_cast<long>(grid.f_max), static_cast<long>(grid.f_max));
  const DelayDopplerMap map = matched_filter_map(r, s_known, delays, dopplers);
  const double energy = s_known.squaredNorm();
  std::vector<RadarTargetEstimate> out;
  for (const auto& cell : map.top_cells(targets)) {
    const Complex value = map.values(static_cast<Eigen::Index>(cell.delay_index),
                                     static_cast<Eigen::Index>(cell.doppler_index));
    out.push_back(make_estimate(cell.delay, cell.doppler, energy > 0.0 ? value / energy : Complex{}, scale));
  }
  return out;
}

SearchGrid default_direct_grid(const WaveformSpec& spec) {
  if (const auto* otfs = spec.as_otfs()) return {otfs->K - 1, (otfs->L - 1) / 2};
  if (const auto* afdm = spec.as_afdm()) {
    const std::size_t step = afdm_band_step(*afdm);
    const std::size_t bands = std::max<std::size_t>(afdm->N / step, 1);
    return {bands - 1, (step - 1) / 2};
  }
  fail(ErrorCode::unsupported_waveform, "direct CSI extraction needs an OTFS or AFDM waveform");
}

std::vector<RadarTargetEstimate> direct_csi_extract(const ComplexMatrix& g, const WaveformSpec& spec,
                                                    std::optional<std::size_t> targets, double threshold,
                                                    const SensingScale& scale, std::optional<SearchGrid> grid) {
  require(spec.kind() != WaveformKind::ofdm, ErrorCode::unsupported_waveform,
          "direct CSI extraction needs an OTFS or AFDM waveform");
  require(static_cast<std::size_t>(g.rows()) == spec.size() && g.rows() == g.cols(), ErrorCode::invalid_dimension,
          "effective channel must be N x N");
  const SearchGrid bounds = grid.value_or(default_direct_grid(spec));

  struct Candidate {
    std::size_t ell;
    long f;
    double score;
    SupportPattern support;
  };
  std::vector<Candidate> candidates;
  for (std::size_t ell = 0; ell <= bounds.ell_max; ++ell) {
    for (long f = -static_cast<long>(bounds.f_max); f <= static_cast<long>(bounds.f_max); ++f) {
      SupportPattern support = predict_support(spec, ell, f);
      double total = 0.0;
      for (const auto& e : support) {
        total += std::abs(g(static_cast<Eigen::Index>(e.row), static_cast<Eigen::Index>(e.col)));
      }
      candidates.push_back({ell, f, total / static_cast<double>(support.size()), std::move(support)});
    }
  }
  // Candidates are generated in (ℓ, f) order, so a stable sort keeps the
  // smaller-ℓ-then-smaller-f tie break.
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.score > b.score; });

  std::size_t keep = 0;
  if (targets) {
    keep = std::min(*targets, candidates.size());
  } else {
    while (keep < candidates.size() && candidates[keep].score > threshold) ++keep;
  }

  std::vector<RadarTargetEstimate> out;
  out.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) {
    const auto& c = candidates[i];
    // Divide out the phase profile of a unit probe path at the same cell.
    const ComplexMatrix probe = effective_path(spec, c.ell, static_cast<double>(c.f));
    Complex num{0.0, 0.0};
    double den = 0.0;
    for (const auto& e : c.support) {
      const auto r = static_cast<Eigen::Index>(e.row);
      const auto col = static_cast<Eigen::Index>(e.col);
      num += std::conj(probe(r, col)) * g(r, col);
      den += std::norm(probe(r, col));
    }
    out.push_back(make_estimate(static_cast<double>(c.ell), static_cast<double>(c.f), num / den, scale));
  }
  return out;
}

MlResult indirect_csi_ml(const ComplexVector& y, const ComplexVector& x_known, const WaveformSpec& spec,
                         std::size_t targets, const MlOptions& options, const SensingScale& scale) {
  const std::size_t N = spec.size();
  require(static_cast<std::size_t>(y.size()) == N && static_cast<std::size_t>(x_known.size()) == N,
          ErrorCode::invalid_dimension, "observation and pilot must both have N entries");
  require(targets >= 1, ErrorCode::precondition, "at least one target must be requested");
  require(options.grid.ell_max < N, ErrorCode::precondition, "search grid delays must be smaller than N");
  require(options.refine_factor >= 2, ErrorCode::precondition, "refine_factor must be at least 2");

  const ComplexVector s = modulate(spec, x_known);
  const CpPhaseFn phase = spec.phase();
  const ComplexMatrix& rx = spec.demodulator();

  struct Fit {
    std::size_t ell = 0;
    double f = 0.0;
    double score = -1.0;  // |vᴴr|²/‖v‖², the residual reduction
    ComplexVector column;
  };
  auto evaluate = [&](const ComplexVector& target, std::size_t ell, double f) {
    Fit fit{ell, f, -1.0, rx * apply_unit_path(s, ell, f, phase)};
    const double energy = fit.column.squaredNorm();
    if (energy > 0.0) fit.score = std::norm(fit.column.dot(target)) / energy;
    return fit;
  };
  // Integer grid scan followed by successively finer Doppler scans.
  auto search = [&](const ComplexVector& target) {
    Fit best;
    for (std::size_t ell = 0; ell <= options.grid.ell_max; ++ell) {
      for (long f = -static_cast<long>(options.grid.f_max); f <= static_cast<long>(options.grid.f_max); ++f) {
        Fit fit = evaluate(target, ell, static_cast<double>(f));
        if (fit.score > best.score) best = std::move(fit);
      }
    }
    double step = 1.0;
    const auto span = static_cast<long>(options.refine_factor);
    for (std::size_t level = 0; level < options.refine_levels; ++level) {
      step /= static_cast<double>(options.refine_factor);
      const double centre = best.f;
      for (long k = -span; k <= span; ++k) {
        if (k == 0) continue;  // centre already holds `best`
        Fit fit = evaluate(target, best.ell, centre + static_cast<double>(k) * step);
        if (fit.score > best.score) best = std::move(fit);
      }
    }
    return best;
  };

  std::vector<Fit> found;
  ComplexMatrix columns(static_cast<Eigen::Index>(N), 0);
  ComplexVector gains;
  ComplexVector residual = y;
  auto refit = [&] {
    columns.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(found.size()));
    for (std::size_t q = 0; q < found.size(); ++q) columns.col(static_cast<Eigen::Index>(q)) = found[q].column;
    gains = columns.colPivHouseholderQr().solve(y);
    residual = y - columns * gains;
  };

  MlResult result;
  result.residual_norms.push_back(residual.norm());
  for (std::size_t p = 0; p < targets; ++p) {
    found.push_back(search(residual));
    refit();
    // Cyclic re-estimation: each target against y with the others removed.
    // A new estimate replaces the old one only if it fits strictly better.
    for (std::size_t pass = 0; found.size() > 1 && pass < options.relax_passes; ++pass) {
      bool changed = false;
      for (std::size_t q = 0; q < found.size(); ++q) {
        const ComplexVector isolated = residual + gains(static_cast<Eigen::Index>(q)) * found[q].column;
        Fit candidate = search(isolated);
        if (candidate.ell == found[q].ell && candidate.f == found[q].f) continue;
        if (candidate.score <= evaluate(isolated, found[q].ell, found[q].f).score) continue;
        found[q] = std::move(candidate);
        refit();
        changed = true;
      }
      if (!changed) break;
    }
    result.residual_norms.push_back(residual.norm());
  }
  for (std::size_t q = 0; q < found.size(); ++q) {
    result.targets.push_back(make_estimate(static_cast<double>(found[q].ell), found[q].f,
                                           gains(static_cast<Eigen::Index>(q)), scale));
  }
  return result;
}

SensingError sensing_rmse(std::span<const RadarTargetEstimate> estimates, std::span<const PathParams> truth) {
  struct Pair {
    double dist;
    std::size_t truth;
    std::size_t estimate;
  };
  std::vector<Pair> pairs;
  for (std::size_t j = 0; j < truth.size(); ++j) {
    for (std::size_t i = 0; i < estimates.size(); ++i) {
      const double dl = estimates[i].delay - static_cast<double>(truth[j].delay);
      const double df = estimates[i].doppler - truth[j].doppler;
      pairs.push_back({std::hypot(dl, df), j, i});
    }
  }
  // Order by distance, then by truth index, then by the estimate's own
  // coordinates so the pairing ignores the order of the estimate list.
  std::sort(pairs.begin(), pairs.end(), [&](const Pair& a, const Pair& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    if (a.truth != b.truth) return a.truth < b.truth;
    const auto& ea = estimates[a.estimate];
    const auto& eb = estimates[b.estimate];
    if (ea.delay != eb.delay) return ea.delay < eb.delay;
    return ea.doppler < eb.doppler;
  });

  std::vector<bool> truth_used(truth.size(), false);
  std::vector<bool> est_used(estimates.size(), false);
  SensingError err;
  for (const auto& pr : pairs) {
    if (truth_used[pr.truth] || est_used[pr.estimate]) continue;
    truth_used[pr.truth] = true;
    est_used[pr.estimate] = true;
    const double dl = estimates[pr.estimate].delay - static_cast<double>(truth[pr.truth].delay);
    const double df = estimates[pr.estimate].doppler - truth[pr.truth].doppler;
    err.sum_sq_delay += dl * dl;
    err.sum_sq_doppler += df * df;
    ++err.matched;
  }
  err.misdetections = truth.size() - err.matched;
  if (err.matched > 0) {
    err.rmse_delay = std::sqrt(err.sum_sq_delay / static_cast<double>(err.matched));
    err.rmse_doppler = std::sqrt(err.sum_sq_doppler / static_cast<double>(err.matched));
  }
  return err;
}

nlohmann::json estimate_to_json(const RadarTargetEstimate& e) {
  return {{"ell", e.delay},           {"f", e.doppler},         {"gain_re", e.gain.real()},
          {"gain_im", e.gain.imag()}, {"range_m", e.range_m}, {"velocity_mps", e.velocity_mps}};
}

}  // namespace ddwave
