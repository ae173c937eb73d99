#pragma once

#include <string>
#include <string_view>

#include "sdmvs/fusion.h"
#include "sdmvs/pipeline.h"

namespace sdmvs {

struct Settings {
  PipelineConfig pipeline;
  FusionParams fusion;
};

// Applies `key = value` lines ('#' starts a comment) on top of `settings`.
// Unknown keys and malformed values throw Error(kParseError) naming
// `source` and the line.
void ApplyConfigText(std::string_view text, std::string_view source,
                     Settings& settings);

// Reads a config file; throws Error(kMissingFile) if it cannot be opened.
void ApplyConfigFile(const std::string& path, Settings& settings);

// Every key with its current value, one per line.
std::string SerializeConfig(const Settings& settings);

}  // namespace sdmvs
