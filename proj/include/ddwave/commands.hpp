#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "ddwave/error.hpp"
#include "ddwave/scenario.hpp"

namespace ddwave {

struct RunOptions {
  unsigned threads = 0;  // 0 = all cores
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
};

enum class EffchanVariant { integer, fractional };

EffchanVariant effchan_variant_from_string(std::string_view name);

/// Three-path preset on N=36, K=L=6, f_max=2, ℓ_max=3, ξ=0.
ScenarioConfig fig3_config(EffchanVariant variant);

/// Each command returns the files it wrote, in write order.
std::vector<std::filesystem::path> cmd_effchan(const ScenarioConfig& config, const RunOptions& options);
std::vector<std::filesystem::path> cmd_ber(const ScenarioConfig& config, const RunOptions& options);
std::vector<std::filesystem::path> cmd_sense(const ScenarioConfig& config, const RunOptions& options);
std::vector<std::filesystem::path> cmd_ambiguity(const ScenarioConfig& config, const RunOptions& options);

/// 802.11p-style vehicular preset: f_c = 5.9 GHz, f_s = 10 MHz, P = 3,
/// N = 64, fractional Dopplers.
ScenarioConfig demo_v2x_config(Geometry geometry);
std::vector<std::filesystem::path> cmd_demo_v2x(Geometry geometry, const RunOptions& options);

/// 0 success, 2 configuration problem, 3 numerical failure.
int exit_code_for(ErrorCode code);

}  // namespace ddwave
