#include "dvx/model/pillars.hpp"

namespace dvx::model {

namespace {

bool bin(const Point& p, const geom::GridSpec& grid, int& i, int& j) {
    if (p.z < grid.z_min || p.z > grid.z_max) {
        return false;
    }
    return grid.locate(p.x, p.y, i, j);
}

}  // namespace

template <typename T>
nn::Tensor<T> pillarize(const PointCloud& cloud, const geom::GridSpec& grid) {
    grid.validate();
    const std::size_t cells = grid.cells();
    std::vector<double> acc(cells * kPillarChannels, 0.0);
    for (const Point& p : cloud) {
        int i = 0, j = 0;
        if (!bin(p, grid, i, j)) {
            continue;
        }
        const geom::Vec2 c = grid.cell_center(i, j);
        double* a = acc.data() + (static_cast<std::size_t>(i) * grid.width + j) * kPillarChannels;
        a[kCount] += 1.0;
        a[kMeanZ] += p.z;
        a[kMeanIntensity] += p.intensity;
        a[kMeanOffsetX] += (p.x - c.x()) / grid.cell_x;
        a[kMeanOffsetY] += (p.y - c.y()) / grid.cell_y;
    }
    std::vector<T> v(acc.size());
    for (std::size_t cell = 0; cell < cells; ++cell) {
        const double* a = acc.data() + cell * kPillarChannels;
        const double n = a[kCount];
        if (n == 0.0) {
            continue;
        }
        T* o = v.data() + cell * kPillarChannels;
        o[kCount] = static_cast<T>(n);
        for (int ch = kMeanZ; ch <= kMeanOffsetY; ++ch) {
            o[ch] = static_cast<T>(a[ch] / n);
        }
        o[kOccupied] = T(1);
    }
    return nn::Tensor<T>::from({grid.height, grid.width, kPillarChannels}, std::move(v));
}

geom::BitMask2D occupancy(const PointCloud& cloud, const geom::GridSpec& grid, int stride) {
    const geom::GridSpec coarse = grid.downsampled(stride);
    geom::BitMask2D m(coarse.height, coarse.width);
    for (const Point& p : cloud) {
        int i = 0, j = 0;
        if (bin(p, grid, i, j)) {
            m.set(i / stride, j / stride, true);
        }
    }
    return m;
}

template nn::Tensor<float> pillarize<float>(const PointCloud&, const geom::GridSpec&);
template nn::Tensor<double> pillarize<double>(const PointCloud&, const geom::GridSpec&);

}  // namespace dvx::model
