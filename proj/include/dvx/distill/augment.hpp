#pragma once

#include "dvx/core/rng.hpp"
#include "dvx/sim/scene.hpp"

namespace dvx::distill {

/// Joint scene-level augmentation: optional mirror across the vehicle x-axis, rotation about
/// the vehicle z-axis and uniform scaling, applied to both clouds, both poses and the boxes.
struct SceneAugment {
    bool enabled = true;
    double flip_prob = 0.5;
    double max_rotation = 0.3926990816987241;  // pi / 8
    double min_scale = 0.95;
    double max_scale = 1.05;
};

struct AugmentDraw {
    bool flip = false;
    double rotation = 0.0;
    double scale = 1.0;
};

AugmentDraw draw_augment(const SceneAugment& cfg, Rng& rng);

/// Returns the scene re-expressed after the draw. The result's vehicle pose is the identity, so
/// infra_to_vehicle() of the output is the augmented relative pose (true and reported).
sim::ScenePair apply_augment(const sim::ScenePair& pair, const AugmentDraw& d);

}  // namespace dvx::distill
