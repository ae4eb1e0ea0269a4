#include "segsalsa/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

namespace segsalsa {

void SolverConfig::validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw Error(ErrorKind::InvalidParameter, "lambda must be finite and >= 0");
    if (!(mu > 0.0) || !std::isfinite(mu))
        throw Error(ErrorKind::InvalidParameter, "mu must be positive");
    if (max_iters < 1)
        throw Error(ErrorKind::InvalidParameter, "max_iters must be >= 1");
    if (fixed_iters && *fixed_iters < 1)
        throw Error(ErrorKind::InvalidParameter, "fixed_iters must be >= 1");
    if (!(eps_primal > 0.0) || !(eps_dual > 0.0))
        throw Error(ErrorKind::InvalidParameter, "tolerances must be positive");
}

SolverContext::SolverContext(const ProbabilityMap& probs, PatchConfig patch, SolverConfig cfg)
    : probs_(probs), patch_(std::move(patch)), cfg_(cfg),
      quadratic_(build_fourier_symbol(probs.grid(), patch_)) {
    cfg_.validate();
}

namespace {

Matrix normalize_columns(const Matrix& p) {
    Matrix z = p;
    for (Index i = 0; i < z.cols(); ++i) {
        const double s = z.col(i).sum();
        if (s > 0.0)
            z.col(i) /= s;
        else
            z.col(i).setConstant(1.0 / static_cast<double>(z.rows()));
    }
    return z;
}

} // namespace

Iterate initialize(const ProbabilityMap& probs, const PatchConfig& patch) {
    Iterate it;
    it.z = normalize_columns(probs.values());
    SplitState& s = it.state;
    s.u1 = it.z;
    s.u2 = apply_jacobian(it.z, probs.grid(), patch);
    s.u3 = it.z;
    s.u4 = it.z;
    s.d1 = Matrix::Zero(it.z.rows(), it.z.cols());
    s.d2 = Matrix::Zero(s.u2.values.rows(), s.u2.values.cols());
    s.d3 = s.d1;
    s.d4 = s.d1;
    return it;
}

void iterate(Iterate& it, const SolverContext& ctx) {
    const ImageGrid& grid = ctx.probs().grid();
    const PatchConfig& patch = ctx.patch();
    const SolverConfig& cfg = ctx.config();
    const Matrix& p = ctx.probs().values();
    SplitState& s = it.state;
    const Index n = grid.size();

    // z-update: (3I + JᵀJ) z = Gᵀ(u + d)
    StackedJacobian back = s.u2;
    back.values += s.d2;
    Matrix rhs = (s.u1 + s.d1) + (s.u3 + s.d3) + (s.u4 + s.d4);
    rhs += apply_jacobian_adjoint(back, patch);
    it.z = ctx.quadratic().solve(rhs);
    const Matrix& z = it.z;
    const StackedJacobian jz = apply_jacobian(z, grid, patch);

    // u-update: four independent proximal steps, each decoupled per pixel.
    const Matrix u1_prev = s.u1, u3_prev = s.u3, u4_prev = s.u4;
    StackedJacobian u2_delta = s.u2;

    const double tau = cfg.lambda / cfg.mu;
    s.u2.values = jz.values - s.d2;
    bool degenerate = false;
#pragma omp parallel for reduction(|| : degenerate)
    for (Index i = 0; i < n; ++i) {
        if (p.col(i).squaredNorm() > 0.0)
            s.u1.col(i) = prox_data(z.col(i) - s.d1.col(i), p.col(i), cfg.mu);
        else
            degenerate = true;
        prox_schatten_inplace(s.u2.pixel(i), tau, cfg.schatten);
        s.u3.col(i) = (z.col(i) - s.d3.col(i)).cwiseMax(0.0);
        s.u4.col(i) = prox_sum_one(z.col(i) - s.d4.col(i));
    }
    if (degenerate)
        throw Error(ErrorKind::DegenerateLikelihood, "a pixel has zero likelihood under every class");

    // d-update with r = Gz' − u'.
    const Matrix r1 = z - s.u1;
    const Matrix r2 = jz.values - s.u2.values;
    const Matrix r3 = z - s.u3;
    const Matrix r4 = z - s.u4;
    s.d1 -= r1;
    s.d2 -= r2;
    s.d3 -= r3;
    s.d4 -= r4;

    s.primal_residual = std::sqrt(r1.squaredNorm() + r2.squaredNorm() + r3.squaredNorm() +
                                  r4.squaredNorm());
    const double gz_norm = std::sqrt(3.0 * z.squaredNorm() + jz.values.squaredNorm());
    const double u_norm = std::sqrt(s.u1.squaredNorm() + s.u2.values.squaredNorm() +
                                    s.u3.squaredNorm() + s.u4.squaredNorm());

    u2_delta.values = s.u2.values - u2_delta.values;
    const Matrix dual = cfg.mu * ((s.u1 - u1_prev) + apply_jacobian_adjoint(u2_delta, patch) +
                                  (s.u3 - u3_prev) + (s.u4 - u4_prev));
    s.dual_residual = dual.norm();

    // Gᵀd itself equals s after every sweep, so scale by the per-block
    // back-projections of d, which balance each other only in their sum.
    StackedJacobian d2_view{grid, s.u2.classes, s.u2.patch_size, s.d2};
    const double dual_scale =
        cfg.mu * std::sqrt(s.d1.squaredNorm() + apply_jacobian_adjoint(d2_view, patch).squaredNorm() +
                           s.d3.squaredNorm() + s.d4.squaredNorm());

    const double tiny = std::numeric_limits<double>::min();
    s.relative_primal = s.primal_residual / std::max(std::max(gz_norm, u_norm), tiny);
    s.relative_dual = s.dual_residual / std::max(dual_scale, tiny);
    ++s.iteration;
}

Matrix project_feasible(const Matrix& z) {
    Matrix out(z.rows(), z.cols());
#pragma omp parallel for
    for (Index i = 0; i < z.cols(); ++i) {
        const Vector clipped = z.col(i).cwiseMax(0.0);
        const double total = clipped.sum();
        if (total > 0.0)
            out.col(i) = clipped / total;
        else
            out.col(i) = project_simplex(z.col(i));
    }
    return out;
}

double prior_value(const Matrix& z, const ImageGrid& grid, const PatchConfig& patch,
                   SchattenOrder order) {
    const StackedJacobian jz = apply_jacobian(z, grid, patch);
    std::vector<double> per_pixel(static_cast<std::size_t>(grid.size()));
#pragma omp parallel for
    for (Index i = 0; i < grid.size(); ++i)
        per_pixel[static_cast<std::size_t>(i)] = schatten_norm(jz.pixel(i), order);
    double total = 0.0;
    for (double v : per_pixel)
        total += v;
    return total;
}

double objective(const Matrix& z, const ProbabilityMap& probs, const PatchConfig& patch,
                 double lambda, SchattenOrder order) {
    const Matrix& p = probs.values();
    if (z.rows() != p.rows() || z.cols() != p.cols())
        throw Error(ErrorKind::DimensionMismatch, "objective: field and probabilities differ in shape");
    double data = 0.0;
    for (Index i = 0; i < z.cols(); ++i) {
        const double lik = p.col(i).dot(z.col(i));
        if (!(lik > 0.0))
            throw Error(ErrorKind::InfeasibleEvaluation,
                        "p_iᵀz_i <= 0 at pixel " + std::to_string(i));
        data -= std::log(lik);
    }
    if (lambda == 0.0)
        return data;
    return data + lambda * prior_value(z, probs.grid(), patch, order);
}

std::pair<HiddenField, SolveReport> run(const ProbabilityMap& probs, const PatchConfig& patch,
                                        const SolverConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    SolveReport report;
    if (cfg.lambda == 0.0 && !cfg.fixed_iters) {
        cfg.validate();
        // Without the prior each pixel minimizes −ln(p_iᵀz_i) on its own
        // simplex, which is attained at the vertex of the largest p_ki.
        const Matrix& p = probs.values();
        Matrix z = Matrix::Zero(p.rows(), p.cols());
        for (Index i = 0; i < p.cols(); ++i) {
            Index best = 0;
            for (Index k = 1; k < p.rows(); ++k)
                if (p(k, i) > p(best, i))
                    best = k;
            z(best, i) = 1.0;
        }
        report.converged = true;
        report.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return {HiddenField(probs.grid(), std::move(z)), report};
    }
    const SolverContext ctx(probs, patch, cfg);
    Iterate it = initialize(probs, patch);

    const int limit = cfg.fixed_iters.value_or(cfg.max_iters);
    for (int k = 0; k < limit; ++k) {
        iterate(it, ctx);
        const SplitState& s = it.state;
        report.primal_trace.push_back(s.relative_primal);
        report.dual_trace.push_back(s.relative_dual);
        if (cfg.trace_objective) {
            double value = std::numeric_limits<double>::infinity();
            try {
                value = objective(project_feasible(it.z), probs, patch, cfg.lambda, cfg.schatten);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::InfeasibleEvaluation)
                    throw;
            }
            report.objective_trace.push_back(value);
        }
        if (!cfg.fixed_iters && s.relative_primal <= cfg.eps_primal &&
            s.relative_dual <= cfg.eps_dual) {
            report.converged = true;
            break;
        }
    }
    const SplitState& s = it.state;
    report.iterations = s.iteration;
    if (cfg.fixed_iters)
        report.converged = s.relative_primal <= cfg.eps_primal && s.relative_dual <= cfg.eps_dual;
    report.primal_residual = s.primal_residual;
    report.dual_residual = s.dual_residual;
    report.relative_primal = s.relative_primal;
    report.relative_dual = s.relative_dual;
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {HiddenField(probs.grid(), project_feasible(it.z)), report};
}

LabelMap extract_labels(const HiddenField& field) {
    const Matrix& z = field.values();
    std::vector<LabelMap::Label> labels(static_cast<std::size_t>(z.cols()));
    for (Index i = 0; i < z.cols(); ++i) {
        Index best = 0;
        for (Index k = 1; k < z.rows(); ++k)
            if (z(k, i) > z(best, i))
                best = k;
        labels[static_cast<std::size_t>(i)] = static_cast<LabelMap::Label>(best + 1);
    }
    return LabelMap(field.grid(), std::move(labels));
}

} // namespace segsalsa
