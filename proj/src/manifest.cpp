#include "dynsleuth/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <stdexcept>

#include "dynsleuth/version.hpp"

namespace dynsleuth {

nlohmann::json RunManifest::to_json() const {
  nlohmann::json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["toolkit_version"] = kVersion;
  doc["command"] = command;
  doc["argv"] = argv;
  doc["config"] = config;
  doc["seed"] = seed;
  doc["artifacts"] = artifacts;
  doc["started_at"] = started_at;
  doc["finished_at"] = finished_at;
  return doc;
}

std::string iso8601_utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buffer;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("write_file_atomic: cannot open " + tmp);
    out << content;
    if (!out) throw std::runtime_error("write_file_atomic: write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw std::runtime_error("write_file_atomic: rename to " + path + " failed");
  }
}

void write_manifest(const RunManifest& manifest, const std::string& path) {
  write_file_atomic(path, manifest.to_json().dump(2) + "\n");
}

}  // namespace dynsleuth
