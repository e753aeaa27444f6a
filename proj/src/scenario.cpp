#include "ddwave/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "ddwave/error.hpp"
#include "ddwave/io.hpp"

namespace ddwave {

namespace {

using nlohmann::json;

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "schema",  "waveform",      "N",       "K",        "L",          "c1",         "c2",
      "xi",      "cp_len",        "fs",      "fc",       "ell_max",    "f_max",      "paths",
      "doppler_mode", "targets",  "constellation", "detector", "snr_db", "frames",   "seed",
      "outputs", "methods",       "refine_levels", "refine_factor", "geometry", "threshold", "notes"};
  return keys;
}

[[noreturn]] void field_error(std::string_view field, const std::string& message) {
  fail(ErrorCode::config, "config field '" + std::string(field) + "': " + message);
}

std::size_t get_count(const json& doc, std::string_view field, std::size_t fallback) {
  const auto it = doc.find(field);
  if (it == doc.end()) return fallback;
  if (it->is_number_unsigned()) return it->get<std::size_t>();
  if (it->is_number_integer() && it->get<long long>() >= 0) return static_cast<std::size_t>(it->get<long long>());
  field_error(field, "expected a non-negative integer");
}

double get_real(const json& doc, std::string_view field, double fallback) {
  const auto it = doc.find(field);
  if (it == doc.end()) return fallback;
  if (!it->is_number()) field_error(field, "expected a number");
  const double v = it->get<double>();
  if (!std::isfinite(v)) field_error(field, "expected a finite number");
  return v;
}

std::string get_string(const json& doc, std::string_view field, std::string fallback) {
  const auto it = doc.find(field);
  if (it == doc.end()) return fallback;
  if (!it->is_string()) field_error(field, "expected a string");
  return it->get<std::string>();
}

// Parses a string-valued enumeration, rethrowing failures against the field name.
template <typename Parse>
auto parse_enum(std::string_view field, const std::string& text, Parse parse) {
  try {
    return parse(text);
  } catch (const Error& e) {
    field_error(field, e.what());
  }
}

std::vector<std::string> get_string_list(const json& doc, std::string_view field) {
  const auto& v = doc.at(std::string(field));
  std::vector<std::string> out;
  if (v.is_string()) {
    out.push_back(v.get<std::string>());
  } else if (v.is_array()) {
    for (const auto& item : v) {
      if (!item.is_string()) field_error(field, "expected a string or a list of strings");
      out.push_back(item.get<std::string>());
    }
  } else {
    field_error(field, "expected a string or a list of strings");
  }
  if (out.empty()) field_error(field, "list must not be empty");
  return out;
}

double parse_snr(const json& v) {
  if (v.is_number()) {
    const double d = v.get<double>();
    if (std::isnan(d)) field_error("snr_db", "NaN is not an SNR");
    return d;
  }
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf" || s == "+inf") return kNoiselessSnr;
  }
  field_error("snr_db", "expected a number or \"inf\"");
}

json snr_to_json(double snr) { return std::isinf(snr) && snr > 0 ? json("inf") : json(snr); }

PathParams parse_target(const json& t, std::size_t index) {
  const std::string field = "targets[" + std::to_string(index) + "]";
  if (!t.is_object()) field_error(field, "expected an object");
  for (const auto& [key, _] : t.items()) {
    if (key != "ell" && key != "f" && key != "gain_re" && key != "gain_im") {
      field_error(field, "unknown key '" + key + "'");
    }
  }
  if (!t.contains("ell") || !t.contains("f")) field_error(field, "needs both 'ell' and 'f'");
  PathParams p;
  p.delay = get_count(t, "ell", 0);
  p.doppler = get_real(t, "f", 0.0);
  p.gain = {get_real(t, "gain_re", 1.0), get_real(t, "gain_im", 0.0)};
  return p;
}

std::size_t exact_sqrt(std::size_t n) {
  auto r = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
  return r * r == n ? r : 0;
}

bool uses(const ScenarioConfig& c, WaveformKind kind) {
  return std::find(c.waveforms.begin(), c.waveforms.end(), kind) != c.waveforms.end();
}

json parse_document(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // Translate the byte offset into a 1-based line and column.
    const std::size_t offset = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    std::size_t line = 1;
    std::size_t column = 1;
    for (std::size_t i = 0; i < offset; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    fail(ErrorCode::config,
         "config parse error at line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + e.what());
  }
}

}  // namespace

std::string_view to_string(SensingMethod m) {
  switch (m) {
    case SensingMethod::matched_filter: return "matched_filter";
    case SensingMethod::direct_csi: return "direct_csi";
    case SensingMethod::indirect_ml: return "indirect_ml";
  }
  return "unknown";
}

SensingMethod sensing_method_from_string(std::string_view name) {
  if (name == "matched_filter") return SensingMethod::matched_filter;
  if (name == "direct_csi") return SensingMethod::direct_csi;
  if (name == "indirect_ml") return SensingMethod::indirect_ml;
  fail(ErrorCode::config, "unknown sensing method '" + std::string(name) + "'");
}

WaveformSpec ScenarioConfig::make_spec(WaveformKind kind) const {
  switch (kind) {
    case WaveformKind::ofdm: return WaveformSpec::ofdm(channel.N, channel.cp_len);
    case WaveformKind::otfs:
      require(K * L == channel.N && K > 0, ErrorCode::config, "OTFS needs K*L = N");
      return WaveformSpec::otfs(K, L, channel.cp_len);
    case WaveformKind::afdm: return WaveformSpec::afdm(channel.N, c1, c2, xi, channel.cp_len);
  }
  fail(ErrorCode::unsupported_waveform, "unknown waveform");
}

ChannelSource ScenarioConfig::channel_source() const {
  ChannelSource source{channel, doppler_mode, std::nullopt};
  if (!targets.empty()) source.fixed_paths = targets;
  return source;
}

json ScenarioConfig::to_json() const {
  json doc;
  doc["schema"] = 1;
  json wf = json::array();
  for (auto w : waveforms) wf.push_back(std::string(to_string(w)));
  doc["waveform"] = wf;
  doc["N"] = channel.N;
  if (K > 0) {
    doc["K"] = K;
    doc["L"] = L;
  }
  doc["c1"] = c1;
  doc["c2"] = c2;
  doc["xi"] = xi;
  doc["cp_len"] = channel.cp_len;
  doc["fs"] = channel.fs;
  doc["fc"] = channel.fc;
  doc["ell_max"] = channel.ell_max;
  doc["f_max"] = channel.f_max;
  doc["paths"] = channel.paths;
  doc["doppler_mode"] = doppler_mode == DopplerMode::integer ? "integer" : "fractional";
  if (!targets.empty()) {
    json list = json::array();
    for (const auto& t : targets) {
      list.push_back({{"ell", t.delay}, {"f", t.doppler}, {"gain_re", t.gain.real()}, {"gain_im", t.gain.imag()}});
    }
    doc["targets"] = list;
  }
  doc["constellation"] = std::string(to_string(constellation));
  doc["detector"] = std::string(to_string(detector));
  json snr = json::array();
  for (double s : snr_db) snr.push_back(snr_to_json(s));
  doc["snr_db"] = snr;
  doc["frames"] = frames;
  doc["seed"] = seed;
  doc["outputs"] = outputs;
  json ms = json::array();
  for (auto m : methods) ms.push_back(std::string(to_string(m)));
  doc["methods"] = ms;
  doc["refine_levels"] = refine_levels;
  doc["refine_factor"] = refine_factor;
  doc["geometry"] = std::string(to_string(geometry));
  doc["threshold"] = threshold;
  if (!notes.empty()) doc["notes"] = notes;
  return doc;
}

ScenarioConfig parse_config(std::string_view text) {
  const json doc = parse_document(text);
  if (!doc.is_object()) fail(ErrorCode::config, "config must be a JSON object");
  for (const auto& [key, _] : doc.items()) {
    if (!known_keys().contains(key)) fail(ErrorCode::config, "unknown config field '" + key + "'");
  }

  ScenarioConfig c;
  if (get_count(doc, "schema", 1) != 1) field_error("schema", "only schema 1 is supported");

  if (doc.contains("waveform")) {
    c.waveforms.clear();
    for (const auto& name : get_string_list(doc, "waveform")) {
      const auto kind = parse_enum("waveform", name, [](const std::string& s) { return waveform_from_string(s); });
      if (uses(c, kind)) field_error("waveform", "'" + name + "' listed twice");
      c.waveforms.push_back(kind);
    }
  }

  auto& ch = c.channel;
  ch.N = get_count(doc, "N", ch.N);
  ch.fs = get_real(doc, "fs", ch.fs);
  ch.fc = get_real(doc, "fc", ch.fc);
  ch.ell_max = get_count(doc, "ell_max", ch.ell_max);
  ch.f_max = get_count(doc, "f_max", ch.f_max);
  ch.cp_len = get_count(doc, "cp_len", ch.ell_max);

  if (doc.contains("targets")) {
    const auto& list = doc.at("targets");
    if (!list.is_array()) field_error("targets", "expected a list of {ell, f, gain_re, gain_im}");
    for (std::size_t i = 0; i < list.size(); ++i) c.targets.push_back(parse_target(list[i], i));
  }
  ch.paths = get_count(doc, "paths", c.targets.empty() ? ch.paths : c.targets.size());
  if (!c.targets.empty() && ch.paths != c.targets.size()) {
    field_error("paths", "must equal the number of targets (" + std::to_string(c.targets.size()) + ")");
  }
  if (ch.paths == 0) field_error("paths", "at least one path is required");

  c.xi = get_count(doc, "xi", 0);
  c.doppler_mode = [&] {
    const auto mode = get_string(doc, "doppler_mode", "fractional");
    if (mode == "integer") return DopplerMode::integer;
    if (mode == "fractional") return DopplerMode::fractional;
    field_error("doppler_mode", "expected \"integer\" or \"fractional\"");
  }();
  c.constellation = parse_enum("constellation", get_string(doc, "constellation", "qpsk"),
                               [](const std::string& s) { return constellation_from_string(s); });
  c.detector = parse_enum("detector", get_string(doc, "detector", "lmmse"),
                          [](const std::string& s) { return detector_from_string(s); });
  c.geometry = parse_enum("geometry", get_string(doc, "geometry", "monostatic"),
                          [](const std::string& s) { return geometry_from_string(s); });

  if (doc.contains("snr_db")) {
    const auto& v = doc.at("snr_db");
    c.snr_db.clear();
    if (v.is_array()) {
      for (const auto& item : v) c.snr_db.push_back(parse_snr(item));
    } else {
      c.snr_db.push_back(parse_snr(v));
    }
    if (c.snr_db.empty()) field_error("snr_db", "list must not be empty");
  }
  std::sort(c.snr_db.begin(), c.snr_db.end());
  c.snr_db.erase(std::unique(c.snr_db.begin(), c.snr_db.end()), c.snr_db.end());

  c.frames = get_count(doc, "frames", c.frames);
  if (c.frames == 0) field_error("frames", "must be at least 1");
  if (doc.contains("seed")) {
    const auto& s = doc.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0)) {
      field_error("seed", "expected an unsigned 64-bit integer");
    }
    c.seed = s.get<std::uint64_t>();
  }
  c.outputs = get_string(doc, "outputs", c.outputs);
  if (c.outputs.empty()) field_error("outputs", "must name a directory");

  if (doc.contains("methods")) {
    c.methods.clear();
    for (const auto& name : get_string_list(doc, "methods")) {
      const auto m = parse_enum("methods", name, [](const std::string& s) { return sensing_method_from_string(s); });
      if (std::find(c.methods.begin(), c.methods.end(), m) != c.methods.end()) {
        field_error("methods", "'" + name + "' listed twice");
      }
      c.methods.push_back(m);
    }
  }
  c.refine_levels = get_count(doc, "refine_levels", c.refine_levels);
  c.refine_factor = get_count(doc, "refine_factor", c.refine_factor);
  if (c.refine_factor < 2) field_error("refine_factor", "must be at least 2");
  c.notes = get_string(doc, "notes", "");

  // Channel invariants; messages already lead with the field name.
  try {
    ch.validate();
  } catch (const Error& e) {
    const std::string what = e.what();
    field_error(what.substr(0, what.find(' ')), what);
  }
  c.threshold = get_real(doc, "threshold", negligible_threshold(ch.N));
  if (c.threshold < 0.0) field_error("threshold", "must be non-negative");

  // OTFS grid.
  if (doc.contains("K") || doc.contains("L") || uses(c, WaveformKind::otfs)) {
    std::size_t K = get_count(doc, "K", 0);
    std::size_t L = get_count(doc, "L", 0);
    if (K == 0 && L == 0) {
      K = L = exact_sqrt(ch.N);
      if (K == 0) field_error("K", "N is not a perfect square; set K and L with K*L = N");
    } else if (K == 0) {
      if (ch.N % L != 0) field_error("L", "must divide N");
      K = ch.N / L;
    } else if (L == 0) {
      if (ch.N % K != 0) field_error("K", "must divide N");
      L = ch.N / K;
    }
    if (K * L != ch.N) {
      field_error("K", "OTFS needs K*L = N (K=" + std::to_string(K) + ", L=" + std::to_string(L) +
                           ", N=" + std::to_string(ch.N) + ")");
    }
    c.K = K;
    c.L = L;
    if (uses(c, WaveformKind::otfs) && !otfs_orthogonality_ok(ch.ell_max, ch.f_max, K, L)) {
      c.warnings.push_back("OTFS orthogonality fails: need ell_max+1 <= K and 2*f_max+1 <= L");
    }
  }

  // AFDM chirps: tuned unless given.
  const bool afdm_ok = afdm_orthogonality_ok(ch.ell_max, ch.f_max, c.xi, ch.N);
  if (doc.contains("c1")) {
    c.c1 = get_real(doc, "c1", 0.0);
  } else if (uses(c, WaveformKind::afdm)) {
    if (!afdm_ok) {
      field_error("c1", "cannot tune AFDM: orthogonality fails for ell_max=" + std::to_string(ch.ell_max) +
                            ", f_max=" + std::to_string(ch.f_max) + ", xi=" + std::to_string(c.xi) +
                            ", N=" + std::to_string(ch.N) + "; set c1 explicitly or enlarge N");
    }
    c.c1 = afdm_tune(ch.ell_max, ch.f_max, c.xi, ch.N).c1;
  }
  c.c2 = get_real(doc, "c2", 1.0 / (2.0 * static_cast<double>(ch.N) * static_cast<double>(ch.N)));
  if (uses(c, WaveformKind::afdm) && !afdm_ok) {
    c.warnings.push_back("AFDM orthogonality fails: need 2(f_max+xi)(ell_max+1)+ell_max < N");
  }

  // Fixed targets must respect the channel bounds.
  try {
    if (!c.targets.empty()) ChannelRealization(ch, c.targets);
  } catch (const Error& e) {
    field_error("targets", e.what());
  }
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) { return parse_config(io::read_text_file(path)); }

}  // namespace ddwave
