// commands.hpp: Subcommands: run a RunConfig, write CSV plus a JSON manifest
// next to each CSV (<name>.csv.manifest.json).
#pragma once

#include "hybridep/config.hpp"

#include <filesystem>
#include <vector>

namespace hybridep {

inline constexpr const char* kVersion = "0.1.0";

using OutputFiles = std::vector<std::filesystem::path>;

OutputFiles cmd_spectrum(const RunConfig& cfg);
OutputFiles cmd_ep_scan(const RunConfig& cfg);
OutputFiles cmd_cat_locus(const RunConfig& cfg);
OutputFiles cmd_evolve(const RunConfig& cfg);
OutputFiles cmd_wigner(const RunConfig& cfg);
OutputFiles cmd_hp_compare(const RunConfig& cfg);

// Dispatch on cfg.command.
OutputFiles run_command(const RunConfig& cfg);

// %.17g, "inf"/"-inf"/"nan" for non-finite values.
std::string format_number(double x);

}  // namespace hybridep
