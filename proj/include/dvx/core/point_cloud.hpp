#pragma once

#include <cmath>
#include <vector>

namespace dvx {

/// One LiDAR return. Coordinates are meters in whatever frame the owning cloud states.
struct Point {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    double intensity = 0.0;

    bool finite() const {
        return std::isfinite(x) && std::isfinite(y) && std::isfinite(z) && std::isfinite(intensity);
    }
    friend bool operator==(const Point&, const Point&) = default;
};

using PointCloud = std::vector<Point>;

}  // namespace dvx
