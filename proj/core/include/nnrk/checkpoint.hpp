#pragma once

#include <filesystem>
#include <string>

#include "nnrk/driver.hpp"

namespace nnrk {

/// Checkpoint format: JSON object with "format": "nnrk-checkpoint" and an
/// integer "version". Doubles are written with round-trip precision.
inline constexpr int checkpoint_version = 1;

std::string checkpoint_to_string(const SimulationState& s, const std::string& config_name);
SimulationState checkpoint_from_string(const std::string& text);

/// Atomic: written to a temporary file and renamed.
void save_checkpoint(const std::filesystem::path& path, const SimulationState& s, const std::string& config_name);
SimulationState load_checkpoint(const std::filesystem::path& path);

}  // namespace nnrk
