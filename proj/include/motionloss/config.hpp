// Copyright Contributors to the motionloss project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

#include "motionloss/harness.hpp"
#include "motionloss/scenesim.hpp"

namespace motionloss {

/// Scene document (YAML subset). Missing keys keep their defaults; unknown keys, wrong types and
/// invalid values raise ConfigError with the offending line and dotted field path.
SceneConfig parse_scene_config(const std::string &text);
SceneConfig load_scene_config(const std::filesystem::path &path);
std::string scene_config_yaml(const SceneConfig &cfg);

/// Run document. A relative `scene` path is resolved against `base_dir`.
RunConfig parse_run_config(const std::string &text, const std::filesystem::path &base_dir = {});
RunConfig load_run_config(const std::filesystem::path &path);
std::string run_config_yaml(const RunConfig &cfg);

} // namespace motionloss
