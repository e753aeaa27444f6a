#include "ddwave/commands.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <string>

#include <spdlog/spdlog.h>

#include "ddwave/io.hpp"
#include "ddwave/parallel.hpp"
#include "ddwave/random.hpp"

namespace ddwave {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Stream salts keep the commands' random draws apart under one seed.
constexpr std::uint64_t kEffchanSalt = 0xeffc4a11;
constexpr std::uint64_t kSenseSalt = 0x5e45e;
constexpr std::uint64_t kSenseCsiSalt = 0x5e45e0c51;
constexpr std::uint64_t kAmbiguitySalt = 0xa3b1;

class OutputDir {
 public:
  OutputDir(const ScenarioConfig& config, const RunOptions& options)
      : dir_(options.out.value_or(fs::path(config.outputs))) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    require(!ec, ErrorCode::config, "cannot create output directory '" + dir_.string() + "': " + ec.message());
  }

  void write(const std::string& name, const std::string& content) {
    const fs::path path = dir_ / name;
    io::write_text_file(path, content);
    spdlog::info("wrote {}", path.string());
    written_.push_back(path);
  }

  std::vector<fs::path> files() const { return written_; }

 private:
  fs::path dir_;
  std::vector<fs::path> written_;
};

std::uint64_t effective_seed(const ScenarioConfig& config, const RunOptions& options) {
  return options.seed.value_or(config.seed);
}

std::string snr_text(double snr) { return io::format_double(snr); }

json snr_json(double snr) { return std::isinf(snr) ? json(snr > 0 ? "inf" : "-inf") : json(snr); }

json path_json(const PathParams& p) {
  return {{"ell", p.delay}, {"f", p.doppler}, {"gain_re", p.gain.real()}, {"gain_im", p.gain.imag()}};
}

void log_warnings(const ScenarioConfig& config) {
  for (const auto& w : config.warnings) spdlog::warn("{}", w);
}

ComplexVector random_frame(const WaveformSpec& spec, const Constellation& constellation, Rng& rng) {
  return map_bits(random_bits(spec.size() * constellation.bits_per_symbol(), rng), constellation);
}

// Union of predicted supports of all paths, or nullopt when any path lies
// outside the predictor's range.
std::optional<std::set<MatrixIndex>> predicted_union(const WaveformSpec& spec, const ChannelRealization& chan) {
  if (spec.kind() == WaveformKind::ofdm) return std::nullopt;
  std::set<MatrixIndex> all;
  try {
    for (const auto& p : chan.paths()) {
      for (const auto& e : predict_support(spec, p.delay, doppler_integer_part(p.doppler))) all.insert(e);
    }
  } catch (const Error&) {
    return std::nullopt;
  }
  return all;
}

}  // namespace

EffchanVariant effchan_variant_from_string(std::string_view name) {
  if (name == "integer") return EffchanVariant::integer;
  if (name == "fractional") return EffchanVariant::fractional;
  fail(ErrorCode::config, "unknown --variant '" + std::string(name) + "' (expected integer or fractional)");
}

ScenarioConfig fig3_config(EffchanVariant variant) {
  const bool integer = variant == EffchanVariant::integer;
  json doc = {{"schema", 1},
              {"waveform", {"ofdm", "otfs", "afdm"}},
              {"N", 36},
              {"K", 6},
              {"L", 6},
              {"ell_max", 3},
              {"f_max", 2},
              {"xi", 0},
              {"cp_len", 3},
              {"doppler_mode", integer ? "integer" : "fractional"},
              {"outputs", "out"}};
  const double f0 = integer ? 0.0 : 0.266;
  const double f1 = integer ? -2.0 : -2.365;
  const double f2 = integer ? 1.0 : 1.231;
  doc["targets"] = {{{"ell", 0}, {"f", f0}}, {{"ell", 1}, {"f", f1}}, {{"ell", 3}, {"f", f2}}};
  return parse_config(doc.dump());
}

std::vector<fs::path> cmd_effchan(const ScenarioConfig& config, const RunOptions& options) {
  log_warnings(config);
  OutputDir out(config, options);
  const std::uint64_t seed = effective_seed(config, options);

  std::vector<PathParams> paths = config.targets;
  if (paths.empty()) {
    Rng rng = substream(seed, 0, kEffchanSalt);
    paths = sample_paths(config.channel, config.doppler_mode, rng).paths();
  }
  const ChannelRealization chan(config.channel, paths);

  std::ostringstream path_csv;
  path_csv << "ell,f,gain_re,gain_im\n";
  for (const auto& p : paths) {
    path_csv << p.delay << ',' << io::format_double(p.doppler) << ',' << io::format_double(p.gain.real()) << ','
             << io::format_double(p.gain.imag()) << '\n';
  }
  out.write("effchan_paths.csv", path_csv.str());

  std::ostringstream summary;
  summary << "waveform,entries_above_threshold,support_match,off_support_fraction\n";
  for (const auto kind : config.waveforms) {
    const WaveformSpec spec = config.make_spec(kind);
    const ComplexMatrix g = effective_channel(spec, chan);
    const std::string name(to_string(kind));

    std::ostringstream csv;
    write_effective_channel_csv(csv, g, config.threshold);
    out.write("effchan_" + name + ".csv", csv.str());
    out.write("effchan_" + name + ".json", effective_channel_magnitude_json(g, config.threshold).dump() + "\n");

    std::set<MatrixIndex> above;
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
      for (Eigen::Index c = 0; c < g.cols(); ++c) {
        if (std::abs(g(r, c)) >= config.threshold) {
          above.insert({static_cast<std::size_t>(r), static_cast<std::size_t>(c)});
        }
      }
    }
    summary << name << ',' << above.size() << ',';
    if (const auto predicted = predicted_union(spec, chan)) {
      double off = 0.0;
      for (Eigen::Index r = 0; r < g.rows(); ++r) {
        for (Eigen::Index c = 0; c < g.cols(); ++c) {
          if (!predicted->contains({static_cast<std::size_t>(r), static_cast<std::size_t>(c)})) {
            off += std::norm(g(r, c));
          }
        }
      }
      const double total = g.squaredNorm();
      summary << (above == *predicted ? "1" : "0") << ',' << io::format_double(total > 0.0 ? off / total : 0.0)
              << '\n';
    } else {
      summary << "na,na\n";
    }
  }
  out.write("effchan_summary.csv", summary.str());
  return out.files();
}

std::vector<fs::path> cmd_ber(const ScenarioConfig& config, const RunOptions& options) {
  log_warnings(config);
  OutputDir out(config, options);
  const Constellation constellation = Constellation::make(config.constellation);
  const ChannelSource source = config.channel_source();

  std::vector<WaveformSpec> specs;
  for (const auto kind : config.waveforms) specs.push_back(config.make_spec(kind));

  std::ostringstream csv;
  write_link_csv_header(csv);
  for (const double snr : config.snr_db) {
    for (const auto& spec : specs) {
      const BerRequest request{snr, config.frames, config.detector, effective_seed(config, options), options.threads};
      const LinkResult result = run_ber_point(spec, source, constellation, request);
      spdlog::info("ber {} @ {} dB: {}", spec.name(), snr_text(snr), result.ber);
      write_link_csv_row(csv, result, spec.name());
    }
  }
  out.write("ber.csv", csv.str());
  return out.files();
}

std::vector<fs::path> cmd_sense(const ScenarioConfig& config, const RunOptions& options) {
  log_warnings(config);
  OutputDir out(config, options);
  const std::uint64_t seed = effective_seed(config, options);
  const Constellation constellation = Constellation::make(config.constellation);
  const ChannelSource source = config.channel_source();
  const SensingScale scale = config.sensing_scale();
  const SearchGrid grid = config.search_grid();
  const std::size_t P = config.channel.paths;
  const MlOptions ml{grid, config.refine_levels, config.refine_factor};

  struct TrialOutcome {
    std::vector<PathParams> truth;
    std::vector<SensingError> errors;  // one per active method
    std::vector<std::vector<RadarTargetEstimate>> estimates;
  };

  std::ostringstream csv;
  csv << "snr_db,waveform,method,trials,rmse_delay,rmse_doppler,misdetections\n";
  json records = json::array();

  for (const double snr : config.snr_db) {
    for (const auto kind : config.waveforms) {
      const WaveformSpec spec = config.make_spec(kind);
      std::vector<SensingMethod> methods;
      for (const auto m : config.methods) {
        if (m == SensingMethod::direct_csi && kind == WaveformKind::ofdm) continue;
        methods.push_back(m);
      }
      if (methods.empty()) continue;

      std::vector<TrialOutcome> trials(config.frames);
      parallel_for(config.frames, options.threads, [&](std::size_t t) {
        // Channel, pilot and receiver noise come from one stream; the
        // direct-CSI estimation noise from another, so enabling that method
        // does not perturb the others.
        Rng rng = substream(seed, t, kSenseSalt);
        const ChannelRealization chan = source.draw(rng);
        const ComplexVector x = random_frame(spec, constellation, rng);
        const ComplexVector s = modulate(spec, x);
        const ComplexVector r = add_awgn(time_domain_apply(prepend_cp(spec, s), chan), snr, rng);

        TrialOutcome& outcome = trials[t];
        outcome.truth = chan.paths();
        for (const auto m : methods) {
          std::vector<RadarTargetEstimate> est;
          switch (m) {
            case SensingMethod::matched_filter: est = matched_filter_estimate(r, s, P, grid, scale); break;
            case SensingMethod::direct_csi: {
              Rng csi_rng = substream(seed, t, kSenseCsiSalt);
              ComplexMatrix g = effective_channel(spec, chan);
              const double var = noise_variance(snr);
              if (var > 0.0) {
                for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] += complex_gaussian(csi_rng, var);
              }
              est = direct_csi_extract(g, spec, P, config.threshold, scale, grid);
              break;
            }
            case SensingMethod::indirect_ml:
              est = indirect_csi_ml(demodulate(spec, r), x, spec, P, ml, scale).targets;
              break;
          }
          outcome.errors.push_back(sensing_rmse(est, outcome.truth));
          outcome.estimates.push_back(std::move(est));
        }
      });

      for (std::size_t mi = 0; mi < methods.size(); ++mi) {
        double sum_delay = 0.0;
        double sum_doppler = 0.0;
        std::size_t matched = 0;
        std::size_t missed = 0;
        for (const auto& t : trials) {
          sum_delay += t.errors[mi].sum_sq_delay;
          sum_doppler += t.errors[mi].sum_sq_doppler;
          matched += t.errors[mi].matched;
          missed += t.errors[mi].misdetections;
        }
        const double rmse_delay = matched > 0 ? std::sqrt(sum_delay / static_cast<double>(matched)) : 0.0;
        const double rmse_doppler = matched > 0 ? std::sqrt(sum_doppler / static_cast<double>(matched)) : 0.0;
        const std::string method(to_string(methods[mi]));
        csv << snr_text(snr) << ',' << spec.name() << ',' << method << ',' << config.frames << ','
            << io::format_double(rmse_delay) << ',' << io::format_double(rmse_doppler) << ',' << missed << '\n';
        spdlog::info("sense {} {} @ {} dB: rmse ({}, {})", spec.name(), method, snr_text(snr), rmse_delay,
                     rmse_doppler);

        json truth = json::array();
        for (const auto& p : trials.front().truth) truth.push_back(path_json(p));
        json estimates = json::array();
        for (const auto& e : trials.front().estimates[mi]) estimates.push_back(estimate_to_json(e));
        records.push_back({{"snr_db", snr_json(snr)},
                           {"waveform", spec.name()},
                           {"method", method},
                           {"trial", 0},
                           {"truth", truth},
                           {"estimates", estimates}});
      }
    }
  }
  out.write("sense.csv", csv.str());
  out.write("estimates.json", records.dump(2) + "\n");
  return out.files();
}

std::vector<fs::path> cmd_ambiguity(const ScenarioConfig& config, const RunOptions& options) {
  log_warnings(config);
  OutputDir out(config, options);
  const std::uint64_t seed = effective_seed(config, options);
  const Constellation constellation = Constellation::make(config.constellation);
  const auto N = static_cast<long>(config.channel.N);
  const auto delays = integer_bins(0, N - 1);
  const auto dopplers = integer_bins(-N / 2, N - N / 2 - 1);

  std::ostringstream csv;
  csv << "waveform,delay_bin,doppler_bin,re,im,mag\n";
  std::ostringstream summary;
  summary << "waveform,peak,max_sidelobe,psr_db\n";
  for (const auto kind : config.waveforms) {
    const WaveformSpec spec = config.make_spec(kind);
    Rng rng = substream(seed, static_cast<std::uint64_t>(kind), kAmbiguitySalt);
    const ComplexVector s = modulate(spec, random_frame(spec, constellation, rng));
    const DelayDopplerMap map = ambiguity_map(s, delays, dopplers);

    std::ostringstream body;
    map.write_csv(body);
    std::string line;
    std::istringstream lines(body.str());
    std::getline(lines, line);  // header
    while (std::getline(lines, line)) csv << spec.name() << ',' << line << '\n';

    const auto top = map.top_cells(2);
    summary << spec.name() << ',' << io::format_double(top[0].magnitude) << ','
            << io::format_double(top.size() > 1 ? top[1].magnitude : 0.0) << ','
            << io::format_double(peak_to_sidelobe_db(map)) << '\n';
  }
  out.write("ambiguity.csv", csv.str());
  out.write("ambiguity_summary.csv", summary.str());
  return out.files();
}

ScenarioConfig demo_v2x_config(Geometry geometry) {
  constexpr double fc = 5.9e9;
  constexpr double fs = 1e7;
  constexpr std::size_t N = 64;
  constexpr double v_max = 500.0 / 3.6;  // m/s
  const double nu_max = radar_invert({0.0, v_max}, fc, Geometry::monostatic).second;
  const auto f_max = static_cast<std::size_t>(std::floor(static_cast<double>(N) * nu_max / fs));

  std::ostringstream notes;
  notes << "IEEE 802.11p vehicular preset. A 500 km/h ceiling gives nu_max = " << io::format_double(nu_max)
        << " Hz, so f_max = floor(N*nu_max/fs) = " << f_max
        << " at N = 64: the Doppler stays below one bin and only its fractional part matters.";

  json doc = {{"schema", 1},
              {"waveform", {"ofdm", "otfs", "afdm"}},
              {"N", N},
              {"K", 8},
              {"L", 8},
              {"fs", fs},
              {"fc", fc},
              {"ell_max", 3},
              {"cp_len", 3},
              {"f_max", f_max},
              {"paths", 3},
              {"doppler_mode", "fractional"},
              {"geometry", std::string(to_string(geometry))},
              {"outputs", "out"},
              {"notes", notes.str()}};
  return parse_config(doc.dump());
}

std::vector<fs::path> cmd_demo_v2x(Geometry geometry, const RunOptions& options) {
  ScenarioConfig config = demo_v2x_config(geometry);
  if (options.seed) config.seed = *options.seed;
  OutputDir out(config, options);
  out.write("demo_v2x.json", config.to_json().dump(2) + "\n");
  return out.files();
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::singular_channel:
    case ErrorCode::undefined_papr: return 3;
    default: return 2;
  }
}

}  // namespace ddwave
