#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "g3d/param_store.hpp"

G3D_NAMESPACE_BEGIN

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointSection {
  std::string name;
  std::vector<float> data;
};

/// Ordered list of named f32 sections. Serialized as "G3DC", u32 version, then
/// per section: u32 name length, name bytes, u32 value count, little-endian f32
/// values. Sections run to end of file.
struct Checkpoint {
  std::vector<CheckpointSection> sections;

  const CheckpointSection* find(const std::string& name) const;
  void set(const std::string& name, std::vector<float> data);
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Adds "param/<g>", "adam.m/<g>", "adam.v/<g>" and "adam.t/<g>" (step and
/// skipped-step counters) for every group.
void store_params(const ParamStore& store, Checkpoint& ckpt);

/// Inverse of store_params. Every group of the store must be present with a
/// matching size; optimizer sections are optional.
void load_params(ParamStore& store, const Checkpoint& ckpt);

G3D_NAMESPACE_END
