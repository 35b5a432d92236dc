#pragma once

#include "dvx/core/point_cloud.hpp"
#include "dvx/geom/grid.hpp"
#include "dvx/nn/tensor.hpp"

namespace dvx::model {

/// Channels of the raw pillar tensor.
enum PillarChannel : int {
    kCount = 0,      // number of points
    kMeanZ = 1,      // m
    kMeanIntensity = 2,
    kMeanOffsetX = 3,  // mean (x - cell center) / cell_x
    kMeanOffsetY = 4,
    kOccupied = 5,   // 1 when the cell holds any point
    kPillarChannels = 6,
};

/// H x W x 6 pillar statistics. Points outside the grid's x/y range or its z range are dropped;
/// empty cells stay zero.
template <typename T>
nn::Tensor<T> pillarize(const PointCloud& cloud, const geom::GridSpec& grid);

/// Cells holding at least one in-range point, downsampled by OR over stride x stride blocks.
geom::BitMask2D occupancy(const PointCloud& cloud, const geom::GridSpec& grid, int stride);

}  // namespace dvx::model
