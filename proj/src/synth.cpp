#include "segsalsa/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace segsalsa::synth {

namespace {

// Cells are measured on the torus so the scene has no seam under the
// wrap-around boundary the operators use.
double torus_gap(double a, double b, double period) {
    const double d = std::abs(a - b);
    return std::min(d, period - d);
}

} // namespace

Scene generate_scene(const SceneConfig& cfg) {
    if (cfg.classes < 1 || cfg.classes > kMaxClasses)
        throw Error(ErrorKind::InvalidParameter,
                    "classes must be in 1.." + std::to_string(kMaxClasses));
    if (cfg.bands < 1)
        throw Error(ErrorKind::InvalidParameter, "bands must be >= 1");
    if (!(cfg.noise >= 0.0))
        throw Error(ErrorKind::InvalidParameter, "noise must be >= 0");
    const ImageGrid grid(cfg.height, cfg.width);
    const int cells = cfg.cells > 0 ? cfg.cells : cfg.classes;
    if (cells < cfg.classes)
        throw Error(ErrorKind::InvalidParameter, "need at least one cell per class");

    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    struct Site {
        double row, col;
        LabelMap::Label label;
    };
    std::vector<Site> sites;
    for (int c = 0; c < cells; ++c) {
        const double r = unit(rng) * static_cast<double>(grid.height);
        const double q = unit(rng) * static_cast<double>(grid.width);
        const auto label = c < cfg.classes
                               ? static_cast<LabelMap::Label>(c + 1)
                               : static_cast<LabelMap::Label>(1 + rng() % static_cast<unsigned>(cfg.classes));
        sites.push_back({r, q, label});
    }

    Matrix means(cfg.bands, cfg.classes);
    for (Index k = 0; k < cfg.classes; ++k)
        for (Index b = 0; b < cfg.bands; ++b)
            means(b, k) = gauss(rng);

    LabelMap truth(grid);
    Matrix values(cfg.bands, grid.size());
    for (Index i = 0; i < grid.size(); ++i) {
        const double r = static_cast<double>(grid.row_of(i)) + 0.5;
        const double q = static_cast<double>(grid.col_of(i)) + 0.5;
        double best = std::numeric_limits<double>::infinity();
        LabelMap::Label label = 1;
        for (const auto& s : sites) {
            const double dr = torus_gap(s.row, r, static_cast<double>(grid.height));
            const double dc = torus_gap(s.col, q, static_cast<double>(grid.width));
            const double dist = dr * dr + dc * dc;
            if (dist < best) {
                best = dist;
                label = s.label;
            }
        }
        truth.set(i, label);
        for (Index b = 0; b < cfg.bands; ++b)
            values(b, i) = means(b, label - 1) + cfg.noise * gauss(rng);
    }
    return {HyperCube(grid, std::move(values)), std::move(truth)};
}

TrainingSet sample_training(const LabelMap& truth, int per_class, std::uint64_t seed) {
    if (per_class < 1)
        throw Error(ErrorKind::InvalidParameter, "per-class sample count must be >= 1");
    const auto classes = truth.max_label();
    std::mt19937_64 rng(seed);
    TrainingSet set;
    set.classes = classes;
    for (LabelMap::Label k = 1; k <= classes; ++k) {
        std::vector<Index> pool;
        for (Index i = 0; i < truth.grid().size(); ++i)
            if (truth[i] == k)
                pool.push_back(i);
        std::shuffle(pool.begin(), pool.end(), rng);
        pool.resize(std::min(pool.size(), static_cast<std::size_t>(per_class)));
        std::sort(pool.begin(), pool.end());
        for (Index i : pool)
            set.samples.push_back({i, k});
    }
    return set;
}

} // namespace segsalsa::synth
