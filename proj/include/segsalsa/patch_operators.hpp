#pragma once

#include <memory>

#include "segsalsa/tensor_field.hpp"

namespace segsalsa {

/// Patch-based Jacobian of a K-channel field, (2LK) x n.
///
/// Column i, read column-major as a (KL) x 2 matrix, is [Jz]_i: rows
/// jK..jK+K-1 of the first column hold (P_j D_h z)_i, the second column
/// holds (P_j D_v z)_i.
struct StackedJacobian {
    ImageGrid grid;
    Index classes = 0;
    Index patch_size = 0;
    Matrix values;

    Index block_rows() const noexcept { return classes * patch_size; }

    /// [Jz]_i viewed in place as a (KL) x 2 matrix.
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, 2>> pixel(Index i) const {
        return {values.col(i).data(), block_rows(), 2};
    }
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, 2>> pixel(Index i) {
        return {values.col(i).data(), block_rows(), 2};
    }
};

/// Circular forward differences along columns (h) and rows (v).
Matrix diff_h(const Matrix& field, const ImageGrid& grid);
Matrix diff_v(const Matrix& field, const ImageGrid& grid);

/// Adjoints of the forward differences (negative backward differences).
Matrix diff_h_adjoint(const Matrix& field, const ImageGrid& grid);
Matrix diff_v_adjoint(const Matrix& field, const ImageGrid& grid);

/// out(r, c) = weight * in((r + shift.row) mod H, (c + shift.col) mod W).
Matrix weighted_shift(const Matrix& field, const ImageGrid& grid, Shift shift, double weight);

StackedJacobian apply_jacobian(const Matrix& field, const ImageGrid& grid, const PatchConfig& cfg);
Matrix apply_jacobian_adjoint(const StackedJacobian& y, const PatchConfig& cfg);

/// Eigenvalues of 3I + JᵀJ on the 2-D DFT basis, indexed like pixels
/// (frequency row r, frequency column c at r * W + c).
struct FourierSymbol {
    ImageGrid grid;
    Vector denom;
};

FourierSymbol build_fourier_symbol(const ImageGrid& grid, const PatchConfig& cfg);

/// Solves (3I + JᵀJ) z = rhs channel by channel with real 2-D FFTs.
///
/// Holds the transform plans, so build it once per grid and reuse it across
/// iterations. solve() may be called concurrently from several threads.
class QuadraticSolver {
public:
    explicit QuadraticSolver(FourierSymbol symbol);
    ~QuadraticSolver();
    QuadraticSolver(QuadraticSolver&&) noexcept;
    QuadraticSolver& operator=(QuadraticSolver&&) noexcept;

    const FourierSymbol& symbol() const noexcept { return symbol_; }
    Matrix solve(const Matrix& rhs) const;

private:
    struct Plans;
    FourierSymbol symbol_;
    std::unique_ptr<Plans> plans_;
};

Matrix solve_quadratic(const Matrix& rhs, const FourierSymbol& symbol);

} // namespace segsalsa
