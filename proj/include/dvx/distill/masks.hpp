#pragma once

#include <string>

#include "dvx/core/point_cloud.hpp"
#include "dvx/geom/grid.hpp"
#include "dvx/geom/polygon.hpp"
#include "dvx/geom/pose.hpp"

namespace dvx::distill {

enum class MaskMode { Geometric, Footprint };

const char* mask_mode_name(MaskMode m);
MaskMode parse_mask_mode(const std::string& s);

/// Overlap mask and the two non-overlap masks on the feature grid.
struct MaskSet {
    geom::BitMask2D overlap;        // M
    geom::BitMask2D vehicle_only;   // M~_v
    geom::BitMask2D infra_only;     // M~_i
    MaskMode mode = MaskMode::Geometric;
};

/// Perception rectangle of an agent whose sensor sits at `agent_in_vehicle`: the grid's range
/// expressed around the agent, rotated by its heading, in the vehicle frame.
geom::OrientedRect perception_rect(const geom::PoseSE3& agent_in_vehicle, const geom::GridSpec& grid);

/// M = raster(A_v n A_i), M~_v = NOT M, M~_i = raster(A_i) AND NOT M.
MaskSet geometric_masks(const geom::OrientedRect& a_v, const geom::OrientedRect& a_i, const geom::GridSpec& grid);

/// Pillar-occupancy footprints: M = both occupied, M~_v = vehicle only, M~_i = infra only.
/// Both clouds are in the vehicle frame; `pillar_grid` is downsampled by `stride` to the
/// feature grid.
MaskSet footprint_masks(const PointCloud& vehicle, const PointCloud& infra_in_vehicle, const geom::GridSpec& pillar_grid,
                        int stride);

}  // namespace dvx::distill
