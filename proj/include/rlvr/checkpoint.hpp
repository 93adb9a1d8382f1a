#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "rlvr/policy.hpp"

namespace rlvr::checkpoint {

inline constexpr std::uint32_t kFormatVersion = 1;

// Binary layout: format_version, vocab, ctx_window, feature_dim, t_max
// (u32 each), params version (u64), then all parameters row-major as
// little-endian 64-bit floats (ctx, feat, bias), then an FNV-1a checksum
// (u64) over every preceding byte. Identical params produce identical files.
void save(const policy::PolicyParams& params, const std::string& path);

// Refuses version mismatches and checksum failures.
policy::PolicyParams load(const std::string& path);

struct Manifest {
  std::string stage;
  int step = 0;
  std::uint64_t config_hash = 0;
  std::map<std::string, double> metrics;
};

// Sidecar JSON next to the checkpoint (path + ".manifest.json").
void save_manifest(const Manifest& manifest, const std::string& ckpt_path);
Manifest load_manifest(const std::string& ckpt_path);

}  // namespace rlvr::checkpoint
