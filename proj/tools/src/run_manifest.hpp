#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "uncage/errors.hpp"
#include "uncage/hash.hpp"
#include "uncage/version.hpp"

namespace uncage::cli {

/// Reproducibility record written next to every subcommand's outputs: the
/// full effective configuration (reusable as a --config file) plus content
/// hashes of everything read and written.
inline void write_run_manifest(const std::string& path,
                               const std::string& subcommand,
                               const nlohmann::json& config,
                               const std::vector<std::string>& inputs,
                               const std::vector<std::string>& outputs,
                               double duration_seconds) {
  nlohmann::json root;
  root["tool_version"] = kVersion;
  root["subcommand"] = subcommand;
  root["config"] = config;
  auto hash_list = [](const std::vector<std::string>& paths) {
    nlohmann::json arr = nlohmann::json::array();
    for (const std::string& p : paths)
      arr.push_back({{"path", p}, {"fnv1a64", hex64(fnv1a64_file(p))}});
    return arr;
  };
  root["inputs"] = hash_list(inputs);
  root["outputs"] = hash_list(outputs);
  root["duration_seconds"] = duration_seconds;

  std::ofstream out(path);
  if (!out) throw IoError("cannot write run manifest: " + path);
  out << root.dump(2) << "\n";
  if (!out) throw IoError("write failure: " + path);
}

} // namespace uncage::cli
