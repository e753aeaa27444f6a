#include <cstdlib>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "ddwave/commands.hpp"

namespace {

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("ddwave");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("DDWAVE_LOG")) spdlog::set_level(spdlog::level::from_str(level));
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();

  CLI::App app{"Delay-Doppler waveform toolkit: OFDM, OTFS and AFDM links and sensing"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  std::string out_dir;
  bool fig3 = false;
  std::string variant = "integer";
  std::string geometry = "monostatic";

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Scenario JSON file")->check(CLI::ExistingFile);
    cmd->add_option("--seed", seed, "Override the scenario seed");
    cmd->add_option("--threads", threads, "Worker threads (0 = all cores)");
    cmd->add_option("--out", out_dir, "Output directory (overrides 'outputs')");
  };

  auto* effchan = app.add_subcommand("effchan", "Effective channel heatmaps for each waveform");
  add_common(effchan);
  effchan->add_flag("--fig3", fig3, "Use the N=36, K=L=6 three-path preset");
  effchan->add_option("--variant", variant, "Preset Doppler variant")->check(CLI::IsMember({"integer", "fractional"}));

  auto* ber = app.add_subcommand("ber", "Bit error rate versus SNR");
  add_common(ber);
  auto* sense = app.add_subcommand("sense", "Delay-Doppler estimation error versus SNR");
  add_common(sense);
  auto* ambiguity = app.add_subcommand("ambiguity", "Ambiguity maps of random frames");
  add_common(ambiguity);

  auto* demo = app.add_subcommand("demo-v2x", "Write the vehicular preset scenario");
  demo->add_option("--seed", seed, "Seed stored in the preset");
  demo->add_option("--out", out_dir, "Output directory");
  demo->add_option("--threads", threads, "Accepted for uniformity; unused");
  demo->add_option("--geometry", geometry, "Sensing geometry")->check(CLI::IsMember({"monostatic", "bistatic"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  ddwave::RunOptions options;
  options.threads = threads;
  options.seed = seed;
  if (!out_dir.empty()) options.out = out_dir;

  try {
    if (demo->parsed()) {
      ddwave::cmd_demo_v2x(ddwave::geometry_from_string(geometry), options);
      return 0;
    }
    ddwave::ScenarioConfig config;
    if (effchan->parsed() && fig3) {
      config = ddwave::fig3_config(ddwave::effchan_variant_from_string(variant));
    } else if (!config_path.empty()) {
      config = ddwave::load_config(config_path);
    } else {
      config = ddwave::parse_config("{}");
    }

    if (effchan->parsed()) ddwave::cmd_effchan(config, options);
    if (ber->parsed()) ddwave::cmd_ber(config, options);
    if (sense->parsed()) ddwave::cmd_sense(config, options);
    if (ambiguity->parsed()) ddwave::cmd_ambiguity(config, options);
    return 0;
  } catch (const ddwave::Error& e) {
    spdlog::error("{}", e.what());
    return ddwave::exit_code_for(e.code());
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 3;
  }
}
