#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

#include "segsalsa/error.hpp"

namespace segsalsa {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Rectangular pixel lattice. Pixels are indexed row-major and every
/// spatial operator wraps around both borders.
struct ImageGrid {
    Index height = 1;
    Index width = 1;

    ImageGrid() = default;
    ImageGrid(Index h, Index w);

    Index size() const noexcept { return height * width; }
    Index index(Index row, Index col) const noexcept { return row * width + col; }
    Index row_of(Index pixel) const noexcept { return pixel / width; }
    Index col_of(Index pixel) const noexcept { return pixel % width; }

    friend bool operator==(const ImageGrid&, const ImageGrid&) = default;
};

/// d x n feature matrix; column i is the spectrum of pixel i.
class HyperCube {
public:
    HyperCube(ImageGrid grid, Matrix values);

    const ImageGrid& grid() const noexcept { return grid_; }
    Index bands() const noexcept { return values_.rows(); }
    const Matrix& values() const noexcept { return values_; }

private:
    ImageGrid grid_;
    Matrix values_;
};

/// K x n per-pixel class likelihoods p(x_i | y_i = k). Columns are not
/// required to sum to one, but each must have some positive mass.
class ProbabilityMap {
public:
    ProbabilityMap(ImageGrid grid, Matrix values);

    const ImageGrid& grid() const noexcept { return grid_; }
    Index classes() const noexcept { return values_.rows(); }
    const Matrix& values() const noexcept { return values_; }

private:
    ImageGrid grid_;
    Matrix values_;
};

/// K x n hidden field. Feasibility (nonnegative, unit column sums) holds
/// only for converged or projected fields, so it is not enforced here.
class HiddenField {
public:
    HiddenField(ImageGrid grid, Matrix values);

    const ImageGrid& grid() const noexcept { return grid_; }
    Index classes() const noexcept { return values_.rows(); }
    const Matrix& values() const noexcept { return values_; }

    /// Largest violation of nonnegativity or of the unit column sum.
    double feasibility_error() const;

private:
    ImageGrid grid_;
    Matrix values_;
};

/// Per-pixel labels in 1..K; 0 marks an unlabeled pixel.
class LabelMap {
public:
    using Label = std::int32_t;

    explicit LabelMap(ImageGrid grid);
    LabelMap(ImageGrid grid, std::vector<Label> labels);

    const ImageGrid& grid() const noexcept { return grid_; }
    const std::vector<Label>& labels() const noexcept { return labels_; }
    Label operator[](Index pixel) const { return labels_[static_cast<std::size_t>(pixel)]; }
    void set(Index pixel, Label label);
    Label max_label() const;

    friend bool operator==(const LabelMap&, const LabelMap&) = default;

private:
    ImageGrid grid_;
    std::vector<Label> labels_;
};

struct Shift {
    int row = 0;
    int col = 0;

    friend bool operator==(const Shift&, const Shift&) = default;
};

/// Geometry of the (2M+1) x (2M+1) patch: shifts in row-major order with
/// unnormalized Gaussian weights (the center weight is exactly 1).
class PatchConfig {
public:
    PatchConfig(int half_width, double bandwidth);

    int half_width() const noexcept { return half_width_; }
    double bandwidth() const noexcept { return bandwidth_; }
    Index size() const noexcept { return static_cast<Index>(shifts_.size()); }
    const std::vector<Shift>& shifts() const noexcept { return shifts_; }
    const std::vector<double>& weights() const noexcept { return weights_; }

    /// Sum of squared weights; JᵀJ = (Σ w_j²)(D_hᵀD_h + D_vᵀD_v).
    double weight_energy() const;

private:
    int half_width_;
    double bandwidth_;
    std::vector<Shift> shifts_;
    std::vector<double> weights_;
};

/// Bandwidth equal to the distance from patch border to center, 1 for 1x1.
double default_gamma(int half_width);

PatchConfig build_patch_config(int half_width, double bandwidth);

} // namespace segsalsa
