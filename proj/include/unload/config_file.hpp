#pragma once

#include <map>
#include <string>

#include "unload/trainer.hpp"

namespace unload {

// Flat `key = value` text with `[section]` headers; `#` starts a comment.
// Sections map onto modules: [env], [train], [net], [policy].
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> load_config_file(const std::string& path);

// Applies "section.key" entries onto a TrainConfig. Unknown keys throw.
void apply_config(TrainConfig& config, const std::map<std::string, std::string>& entries);

TrainConfig train_config_from_file(const std::string& path);

}  // namespace unload
