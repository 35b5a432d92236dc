#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dvx/core/point_cloud.hpp"
#include "dvx/sim/scene.hpp"

namespace dvx::sim {

/// "DVPC" point files: magic, u32 version (1), u32 count, count x 4 little-endian float32
/// (x, y, z, intensity).
void write_points(const std::filesystem::path& path, const PointCloud& cloud);
PointCloud read_points(const std::filesystem::path& path);

/// Writes scene_<id>.json plus scene_<id>_vehicle.bin / scene_<id>_infra.bin into `dir`.
/// Returns the manifest file name (relative to dir).
std::string write_scene(const std::filesystem::path& dir, const ScenePair& pair);
ScenePair read_scene(const std::filesystem::path& manifest);

/// Rounds coordinates through float32, matching what a write/read cycle yields.
PointCloud quantize_points(const PointCloud& cloud);

enum class Split { Train, Val };

struct DatasetEntry {
    std::uint64_t id = 0;
    std::string manifest;
    Split split = Split::Train;
};

struct DatasetIndex {
    std::uint64_t seed = 0;
    std::vector<DatasetEntry> scenes;

    std::size_t count(Split s) const;
};

/// Hash-ordered split: the floor(val_fraction * n) scenes with the smallest hash of
/// (seed, id) go to validation, so counts are exact for any n.
std::vector<Split> assign_splits(const std::vector<std::uint64_t>& ids, std::uint64_t seed, double val_fraction = 0.2);

void write_index(const std::filesystem::path& dir, const DatasetIndex& index);
DatasetIndex read_index(const std::filesystem::path& dir);

/// Loads every scene of the requested split (in index order).
std::vector<ScenePair> load_split(const std::filesystem::path& dir, Split split, int threads = 1);

const char* split_name(Split s);

}  // namespace dvx::sim
