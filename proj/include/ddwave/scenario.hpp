#pragma once

// JSON scenario files (schema 1). All keys are optional; unknown keys are
// rejected so typos never silently fall back to defaults.
//
//   schema         1
//   waveform       "ofdm" | "otfs" | "afdm" or a list of them   (all three)
//   N              block size                                    (64)
//   K, L           OTFS grid, K·L = N                            (√N when N is square)
//   c1, c2, xi     AFDM chirp parameters and guard width         (tuned from ell_max/f_max, 1/(2N²), 0)
//   cp_len         prefix length                                 (ell_max)
//   fs, fc         sample rate and carrier in Hz                 (1e7, 5.9e9)
//   ell_max, f_max channel support                               (3, 2)
//   paths          number of paths P                             (3, or the length of targets)
//   doppler_mode   "integer" | "fractional"                      ("fractional")
//   targets        fixed path set [{ell, f, gain_re, gain_im}]   (random per frame)
//   constellation  "qpsk" | "16qam"                              ("qpsk")
//   detector       "zf" | "lmmse"                                ("lmmse")
//   snr_db         number, "inf", or a list of them              ([0, 5, 10, 15, 20])
//   frames         frames or trials per point                    (200)
//   seed           unsigned 64-bit                               (1)
//   outputs        output directory                              ("out")
//   methods        subset of matched_filter, direct_csi, indirect_ml   (all)
//   refine_levels, refine_factor                                 (3, 10)
//   geometry       "monostatic" | "bistatic"                     ("monostatic")
//   threshold      display/detection threshold                   (1/(2N))
//   notes          free text

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ddwave/channel.hpp"
#include "ddwave/link.hpp"
#include "ddwave/modem.hpp"
#include "ddwave/sensing.hpp"

namespace ddwave {

enum class SensingMethod { matched_filter, direct_csi, indirect_ml };

std::string_view to_string(SensingMethod m);
SensingMethod sensing_method_from_string(std::string_view name);

struct ScenarioConfig {
  std::vector<WaveformKind> waveforms{WaveformKind::ofdm, WaveformKind::otfs, WaveformKind::afdm};
  ChannelConfig channel;
  std::size_t K = 0;  // 0 when no OTFS grid applies
  std::size_t L = 0;
  double c1 = 0.0;
  double c2 = 0.0;
  std::size_t xi = 0;
  DopplerMode doppler_mode = DopplerMode::fractional;
  std::vector<PathParams> targets;
  ConstellationKind constellation = ConstellationKind::qpsk;
  Detector detector = Detector::lmmse;
  std::vector<double> snr_db{0.0, 5.0, 10.0, 15.0, 20.0};
  std::size_t frames = 200;
  std::uint64_t seed = 1;
  std::string outputs = "out";
  std::vector<SensingMethod> methods{SensingMethod::matched_filter, SensingMethod::direct_csi,
                                     SensingMethod::indirect_ml};
  std::size_t refine_levels = 3;
  std::size_t refine_factor = 10;
  Geometry geometry = Geometry::monostatic;
  double threshold = 0.0;
  std::string notes;

  /// Orthogonality predicates that do not hold for the chosen parameters.
  std::vector<std::string> warnings;

  WaveformSpec make_spec(WaveformKind kind) const;
  ChannelSource channel_source() const;
  SensingScale sensing_scale() const { return SensingScale::from(channel, geometry); }
  SearchGrid search_grid() const { return {channel.ell_max, channel.f_max}; }

  /// Complete schema-1 document; parse_config(to_json().dump()) reproduces it.
  nlohmann::json to_json() const;
};

/// Parses and validates a schema-1 document. Errors carry ErrorCode::config
/// and name the offending field, or the line and column of a syntax error.
ScenarioConfig parse_config(std::string_view text);
ScenarioConfig load_config(const std::filesystem::path& path);

}  // namespace ddwave
