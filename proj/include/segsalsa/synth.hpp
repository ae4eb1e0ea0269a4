#pragma once

#include <cstdint>

#include "segsalsa/class_models.hpp"
#include "segsalsa/tensor_field.hpp"

namespace segsalsa::synth {

inline constexpr int kMaxClasses = 8;

struct SceneConfig {
    Index height = 32;
    Index width = 32;
    int classes = 3;
    Index bands = 5;
    /// Standard deviation of the additive Gaussian feature noise.
    double noise = 1.0;
    std::uint64_t seed = 1;
    /// Voronoi cells; 0 picks one per class.
    int cells = 0;
};

struct Scene {
    HyperCube cube;
    LabelMap truth;
};

/// Piecewise-constant Voronoi class map with per-class Gaussian spectral
/// means (unit variance per band) plus additive noise. Deterministic per seed.
Scene generate_scene(const SceneConfig& cfg);

/// Up to `per_class` pixels of every class drawn without replacement.
TrainingSet sample_training(const LabelMap& truth, int per_class, std::uint64_t seed);

} // namespace segsalsa::synth
