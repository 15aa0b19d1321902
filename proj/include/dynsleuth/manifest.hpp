#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace dynsleuth {

/// Written next to each CLI run's outputs so the run can be reproduced from
/// its recorded config and seeds alone.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::vector<std::string> artifacts;
  std::string started_at;
  std::string finished_at;

  nlohmann::json to_json() const;
};

std::string iso8601_utc_now();

/// Writes content to a temp file in the same directory, then renames it over
/// the destination, so readers never observe a partial manifest.
void write_file_atomic(const std::string& path, const std::string& content);

void write_manifest(const RunManifest& manifest, const std::string& path);

}  // namespace dynsleuth
