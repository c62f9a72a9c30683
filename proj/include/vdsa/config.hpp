#pragma once

// JSON form of the run configuration. Loading merges the given keys over a
// base configuration, so a file only needs the values it changes; unknown
// keys are rejected.

#include <filesystem>
#include <string>

#include "vdsa/simkernel.hpp"

namespace vdsa::config {

/// Fully resolved configuration, every key present.
std::string dump_config(const sim::RunInputs& inputs);

sim::RunInputs parse_config(const std::string& text, const sim::RunInputs& base = {});
sim::RunInputs load_config(const std::filesystem::path& path, const sim::RunInputs& base = {});

}  // namespace vdsa::config
