#include "segsalsa/patch_operators.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <string>

namespace segsalsa {

namespace {

inline Index wrap(Index a, Index n) {
    const Index m = a % n;
    return m < 0 ? m + n : m;
}

void check_field(const Matrix& field, const ImageGrid& grid) {
    if (field.cols() != grid.size())
        throw Error(ErrorKind::DimensionMismatch,
                    "field has " + std::to_string(field.cols()) + " columns, grid has " +
                        std::to_string(grid.size()) + " pixels");
}

// FFTW's planner is not re-entrant; execution on distinct buffers is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

} // namespace

Matrix diff_h(const Matrix& field, const ImageGrid& grid) {
    check_field(field, grid);
    Matrix out(field.rows(), field.cols());
    const Index H = grid.height, W = grid.width;
#pragma omp parallel for
    for (Index r = 0; r < H; ++r)
        for (Index c = 0; c < W; ++c)
            out.col(r * W + c) = field.col(r * W + (c + 1) % W) - field.col(r * W + c);
    return out;
}

Matrix diff_v(const Matrix& field, const ImageGrid& grid) {
    check_field(field, grid);
    Matrix out(field.rows(), field.cols());
    const Index H = grid.height, W = grid.width;
#pragma omp parallel for
    for (Index r = 0; r < H; ++r)
        for (Index c = 0; c < W; ++c)
            out.col(r * W + c) = field.col(((r + 1) % H) * W + c) - field.col(r * W + c);
    return out;
}

Matrix diff_h_adjoint(const Matrix& field, const ImageGrid& grid) {
    check_field(field, grid);
    Matrix out(field.rows(), field.cols());
    const Index H = grid.height, W = grid.width;
#pragma omp parallel for
    for (Index r = 0; r < H; ++r)
        for (Index c = 0; c < W; ++c)
            out.col(r * W + c) = field.col(r * W + wrap(c - 1, W)) - field.col(r * W + c);
    return out;
}

Matrix diff_v_adjoint(const Matrix& field, const ImageGrid& grid) {
    check_field(field, grid);
    Matrix out(field.rows(), field.cols());
    const Index H = grid.height, W = grid.width;
#pragma omp parallel for
    for (Index r = 0; r < H; ++r)
        for (Index c = 0; c < W; ++c)
            out.col(r * W + c) = field.col(wrap(r - 1, H) * W + c) - field.col(r * W + c);
    return out;
}

Matrix weighted_shift(const Matrix& field, const ImageGrid& grid, Shift shift, double weight) {
    check_field(field, grid);
    Matrix out(field.rows(), field.cols());
    const Index H = grid.height, W = grid.width;
#pragma omp parallel for
    for (Index r = 0; r < H; ++r) {
        const Index src_row = wrap(r + shift.row, H);
        for (Index c = 0; c < W; ++c)
            out.col(r * W + c) = weight * field.col(src_row * W + wrap(c + shift.col, W));
    }
    return out;
}

StackedJacobian apply_jacobian(const Matrix& field, const ImageGrid& grid, const PatchConfig& cfg) {
    check_field(field, grid);
    const Matrix dh = diff_h(field, grid);
    const Matrix dv = diff_v(field, grid);
    const Index K = field.rows(), L = cfg.size(), H = grid.height, W = grid.width;
    StackedJacobian out{grid, K, L, Matrix(2 * L * K, grid.size())};
    const auto& shifts = cfg.shifts();
    const auto& weights = cfg.weights();
#pragma omp parallel for
    for (Index r = 0; r < H; ++r) {
        for (Index c = 0; c < W; ++c) {
            const Index i = r * W + c;
            for (Index j = 0; j < L; ++j) {
                const Shift s = shifts[static_cast<std::size_t>(j)];
                const double w = weights[static_cast<std::size_t>(j)];
                const Index src = wrap(r + s.row, H) * W + wrap(c + s.col, W);
                out.values.block(j * K, i, K, 1) = w * dh.col(src);
                out.values.block((L + j) * K, i, K, 1) = w * dv.col(src);
            }
        }
    }
    return out;
}

Matrix apply_jacobian_adjoint(const StackedJacobian& y, const PatchConfig& cfg) {
    const ImageGrid& grid = y.grid;
    const Index K = y.classes, L = cfg.size(), H = grid.height, W = grid.width;
    if (y.patch_size != L || y.values.rows() != 2 * L * K || y.values.cols() != grid.size())
        throw Error(ErrorKind::DimensionMismatch, "stacked Jacobian does not match patch config");
    Matrix acc_h = Matrix::Zero(K, grid.size());
    Matrix acc_v = Matrix::Zero(K, grid.size());
    const auto& shifts = cfg.shifts();
    const auto& weights = cfg.weights();
    // P_jᵀ scatters back along the negated shift.
#pragma omp parallel for
    for (Index r = 0; r < H; ++r) {
        for (Index c = 0; c < W; ++c) {
            const Index i = r * W + c;
            for (Index j = 0; j < L; ++j) {
                const Shift s = shifts[static_cast<std::size_t>(j)];
                const double w = weights[static_cast<std::size_t>(j)];
                const Index src = wrap(r - s.row, H) * W + wrap(c - s.col, W);
                acc_h.col(i) += w * y.values.block(j * K, src, K, 1);
                acc_v.col(i) += w * y.values.block((L + j) * K, src, K, 1);
            }
        }
    }
    return diff_h_adjoint(acc_h, grid) + diff_v_adjoint(acc_v, grid);
}

FourierSymbol build_fourier_symbol(const ImageGrid& grid, const PatchConfig& cfg) {
    const double energy = cfg.weight_energy();
    const double two_pi = 2.0 * std::numbers::pi;
    FourierSymbol symbol{grid, Vector(grid.size())};
    for (Index r = 0; r < grid.height; ++r) {
        const double vert = 2.0 - 2.0 * std::cos(two_pi * static_cast<double>(r) /
                                                 static_cast<double>(grid.height));
        for (Index c = 0; c < grid.width; ++c) {
            const double horiz = 2.0 - 2.0 * std::cos(two_pi * static_cast<double>(c) /
                                                      static_cast<double>(grid.width));
            symbol.denom(grid.index(r, c)) = 3.0 + energy * (horiz + vert);
        }
    }
    return symbol;
}

struct QuadraticSolver::Plans {
    fftw_plan forward = nullptr;
    fftw_plan inverse = nullptr;

    ~Plans() {
        std::lock_guard lock(planner_mutex());
        if (forward)
            fftw_destroy_plan(forward);
        if (inverse)
            fftw_destroy_plan(inverse);
    }
};

namespace {

// fftw_malloc'd scratch so every execute call sees the planner's alignment.
struct FftBuffers {
    double* real = nullptr;
    fftw_complex* spectrum = nullptr;

    FftBuffers(Index n, Index half) {
        real = fftw_alloc_real(static_cast<std::size_t>(n));
        spectrum = fftw_alloc_complex(static_cast<std::size_t>(half));
        if (!real || !spectrum) {
            release();
            throw std::bad_alloc();
        }
    }
    ~FftBuffers() { release(); }
    FftBuffers(const FftBuffers&) = delete;
    FftBuffers& operator=(const FftBuffers&) = delete;

    void release() {
        fftw_free(real);
        fftw_free(spectrum);
        real = nullptr;
        spectrum = nullptr;
    }
};

} // namespace

QuadraticSolver::QuadraticSolver(FourierSymbol symbol)
    : symbol_(std::move(symbol)), plans_(std::make_unique<Plans>()) {
    const int H = static_cast<int>(symbol_.grid.height);
    const int W = static_cast<int>(symbol_.grid.width);
    FftBuffers scratch(symbol_.grid.size(), symbol_.grid.height * (symbol_.grid.width / 2 + 1));
    std::lock_guard lock(planner_mutex());
    plans_->forward = fftw_plan_dft_r2c_2d(H, W, scratch.real, scratch.spectrum, FFTW_ESTIMATE);
    plans_->inverse = fftw_plan_dft_c2r_2d(H, W, scratch.spectrum, scratch.real, FFTW_ESTIMATE);
    if (!plans_->forward || !plans_->inverse)
        throw Error(ErrorKind::InvalidParameter, "FFT planning failed");
}

QuadraticSolver::~QuadraticSolver() = default;
QuadraticSolver::QuadraticSolver(QuadraticSolver&&) noexcept = default;
QuadraticSolver& QuadraticSolver::operator=(QuadraticSolver&&) noexcept = default;

Matrix QuadraticSolver::solve(const Matrix& rhs) const {
    const ImageGrid& grid = symbol_.grid;
    check_field(rhs, grid);
    const Index n = grid.size();
    const Index H = grid.height, W = grid.width, half_w = W / 2 + 1;
    const double scale = 1.0 / static_cast<double>(n);
    Matrix out(rhs.rows(), n);
#pragma omp parallel
    {
        FftBuffers buf(n, H * half_w);
#pragma omp for
        for (Index k = 0; k < rhs.rows(); ++k) {
            for (Index i = 0; i < n; ++i)
                buf.real[i] = rhs(k, i);
            fftw_execute_dft_r2c(plans_->forward, buf.real, buf.spectrum);
            for (Index r = 0; r < H; ++r) {
                for (Index c = 0; c < half_w; ++c) {
                    const double f = scale / symbol_.denom(r * W + c);
                    buf.spectrum[r * half_w + c][0] *= f;
                    buf.spectrum[r * half_w + c][1] *= f;
                }
            }
            fftw_execute_dft_c2r(plans_->inverse, buf.spectrum, buf.real);
            for (Index i = 0; i < n; ++i)
                out(k, i) = buf.real[i];
        }
    }
    return out;
}

Matrix solve_quadratic(const Matrix& rhs, const FourierSymbol& symbol) {
    return QuadraticSolver(symbol).solve(rhs);
}

} // namespace segsalsa
