#pragma once

#include <string>

#include "config.hpp"

namespace cli {

// Each command writes its outputs plus manifest.json into out_dir.
void cmd_simulate(const Config& c, const std::string& out_dir);
void cmd_fit(const Config& c, const std::string& out_dir);
void cmd_evidence(const Config& c, const std::string& out_dir);
void cmd_diagnose(const Config& c, const std::string& out_dir);
void cmd_coverage(const Config& c, const std::string& out_dir);

}  // namespace cli
