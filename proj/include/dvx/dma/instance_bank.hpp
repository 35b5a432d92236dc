#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "dvx/core/point_cloud.hpp"
#include "dvx/geom/box.hpp"
#include "dvx/geom/grid.hpp"
#include "dvx/sim/scene.hpp"

namespace dvx::dma {

/// Which agent dominates an object's points.
enum class Domain : int { Fused = 0, Vehicle = 1, Infra = 2 };

const char* domain_name(Domain d);

/// Ratio rule on r = n_v / (n_v + n_i): r < tau_l -> Infra, r > tau_h -> Vehicle, otherwise
/// Fused (so both boundary values land in Fused). Throws when n_v + n_i == 0 or the thresholds
/// are not 0 < tau_l < tau_h < 1.
Domain classify_domain(std::size_t n_v, std::size_t n_i, double tau_l, double tau_h);

/// Object crop with per-point provenance. Both point sets are in the vehicle frame.
struct Instance {
    PointCloud points_v;
    PointCloud points_i;
    geom::Box3D box;
    Domain domain = Domain::Fused;

    std::size_t n_v() const { return points_v.size(); }
    std::size_t n_i() const { return points_i.size(); }
};

class InstanceBank {
public:
    InstanceBank(double tau_l, double tau_h);

    double tau_l() const { return tau_l_; }
    double tau_h() const { return tau_h_; }

    /// Classifies and stores; instances without points are ignored. Returns false if skipped.
    bool add(PointCloud points_v, PointCloud points_i, const geom::Box3D& box);

    const std::vector<Instance>& instances() const { return instances_; }
    std::size_t size() const { return instances_.size(); }
    bool empty() const { return instances_.empty(); }
    /// Indices of instances carrying the given label.
    const std::vector<std::size_t>& members(Domain d) const { return members_[static_cast<int>(d)]; }

private:
    double tau_l_;
    double tau_h_;
    std::vector<Instance> instances_;
    std::array<std::vector<std::size_t>, 3> members_;
};

/// Crops every ground-truth box of every scene (infrastructure points moved by the true pose)
/// into one bank. Boxes without points are skipped.
InstanceBank build_bank(std::span<const sim::ScenePair> scenes, double tau_l, double tau_h, int threads = 1);

/// Category probabilities, in the order (fused, vehicle, infra).
struct DomainProbs {
    double fused = 0.8;
    double vehicle = 0.1;
    double infra = 0.1;
};

struct AugmentedScene {
    PointCloud vehicle;  // student vehicle input, vehicle frame
    PointCloud infra;    // student infrastructure input, infrastructure frame
    PointCloud early;    // teacher input, vehicle frame (true pose)
    std::vector<geom::Box3D> gt_boxes;
    /// Bank index and final placement of every accepted instance, in acceptance order.
    std::vector<std::size_t> accepted;
    std::vector<geom::Box3D> injected_boxes;
};

/// Unaugmented view of a scene in the same layout.
AugmentedScene passthrough(const sim::ScenePair& pair);

/// Draws n_samples instances (category by probs, uniform inside the category; empty categories
/// fall back to Fused, then to any non-empty category) and pastes each at a random free BEV
/// location and heading inside `placement` (<= 10 attempts; footprints may not overlap any
/// existing or injected box). Teacher input gets both point sets, the vehicle student gets
/// points_v, the infrastructure student gets points_i mapped into its own frame.
AugmentedScene sample_and_inject(const InstanceBank& bank, const sim::ScenePair& pair, const DomainProbs& probs,
                                 int n_samples, std::uint64_t seed, const geom::GridSpec& placement);

/// Draws one category according to `probs`, applying the empty-category fallback.
Domain draw_domain(const InstanceBank& bank, const DomainProbs& probs, double u);

}  // namespace dvx::dma
