#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dvx/nn/params.hpp"

namespace dvx::nn {

struct CheckpointEntry {
    std::string name;
    Shape shape;
    std::vector<float> data;
};

/// "DVCK" little-endian: magic, u32 version (1), u32 entry count, then per entry u16 name
/// length, name bytes, u8 rank, rank x u32 dims, float32 data.
void write_checkpoint(const std::filesystem::path& path, const std::vector<CheckpointEntry>& entries);
std::vector<CheckpointEntry> read_checkpoint(const std::filesystem::path& path);

template <typename T>
std::vector<CheckpointEntry> to_entries(const ParamStore<T>& params);
/// Loads values by name. Every parameter must be present with a matching shape; extra
/// entries are an error too.
template <typename T>
void load_entries(ParamStore<T>& params, const std::vector<CheckpointEntry>& entries);

}  // namespace dvx::nn
