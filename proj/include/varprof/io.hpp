#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "varprof/profile.hpp"

namespace varprof {

using ordered_json = nlohmann::ordered_json;

/// Profile document: {"kind":"block","sigma":[[..]],"alpha":[..]} or
/// {"kind":"grid","values":[[..]]} (optionally "resolution"). All numbers
/// decimal; validation errors carry the offending indices.
Profile profile_from_json(const nlohmann::json& doc);
Profile load_profile(const std::string& path);
ordered_json profile_to_json(const Profile& p);

/// Grid syntax "start:stop:count", inclusive endpoints.
std::vector<double> parse_grid(const std::string& spec);

/// Shortest round-trip decimal (17 significant digits) for regression-stable files.
std::string fmt17(double v);

using CsvColumns = std::vector<std::pair<std::string, std::vector<double>>>;
void write_csv(const std::string& path, const CsvColumns& cols);
void write_json_file(const std::string& path, const ordered_json& doc);

}  // namespace varprof
