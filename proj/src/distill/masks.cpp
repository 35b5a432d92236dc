#include "dvx/distill/masks.hpp"

#include "dvx/core/error.hpp"
#include "dvx/model/pillars.hpp"

namespace dvx::distill {

const char* mask_mode_name(MaskMode m) { return m == MaskMode::Geometric ? "geometric" : "footprint"; }

MaskMode parse_mask_mode(const std::string& s) {
    if (s == "geometric") return MaskMode::Geometric;
    if (s == "footprint") return MaskMode::Footprint;
    fail(ErrorKind::Usage, "unknown mask mode '" + s + "' (expected geometric, footprint)");
}

geom::OrientedRect perception_rect(const geom::PoseSE3& agent_in_vehicle, const geom::GridSpec& grid) {
    const geom::OrientedRect local = grid.extent_rect();
    const Eigen::Vector3d c = agent_in_vehicle.apply({local.center.x(), local.center.y(), 0.0});
    return {{c.x(), c.y()}, local.half_extents, agent_in_vehicle.yaw()};
}

MaskSet geometric_masks(const geom::OrientedRect& a_v, const geom::OrientedRect& a_i, const geom::GridSpec& grid) {
    MaskSet m;
    m.mode = MaskMode::Geometric;
    m.overlap = geom::rasterize_mask(geom::polygon_intersection(a_v.polygon(), a_i.polygon()), grid);
    m.vehicle_only = ~m.overlap;
    m.infra_only = geom::rasterize_mask(a_i.polygon(), grid) & ~m.overlap;
    return m;
}

MaskSet footprint_masks(const PointCloud& vehicle, const PointCloud& infra_in_vehicle, const geom::GridSpec& pillar_grid,
                        int stride) {
    const geom::BitMask2D occ_v = model::occupancy(vehicle, pillar_grid, stride);
    const geom::BitMask2D occ_i = model::occupancy(infra_in_vehicle, pillar_grid, stride);
    MaskSet m;
    m.mode = MaskMode::Footprint;
    m.overlap = occ_v & occ_i;
    m.vehicle_only = occ_v & ~occ_i;
    m.infra_only = occ_i & ~occ_v;
    return m;
}

}  // namespace dvx::distill
