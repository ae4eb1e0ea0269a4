#pragma once

#include <optional>
#include <vector>

#include "segsalsa/patch_operators.hpp"
#include "segsalsa/proximal.hpp"
#include "segsalsa/tensor_field.hpp"

namespace segsalsa {

struct SolverConfig {
    double lambda = 2.0;
    double mu = 1.0;
    SchattenOrder schatten = SchattenOrder::Nuclear;
    int max_iters = 200;
    /// When set, exactly this many sweeps run and the tolerances are ignored.
    std::optional<int> fixed_iters;
    double eps_primal = 1e-3;
    double eps_dual = 1e-3;
    /// Evaluate the objective on the projected iterate after every sweep.
    bool trace_objective = true;

    void validate() const;
};

/// Split variables u = Gz (identity, J, identity, identity) and their
/// scaled multipliers.
struct SplitState {
    Matrix u1, u3, u4;
    StackedJacobian u2;
    Matrix d1, d3, d4;
    Matrix d2;
    int iteration = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double relative_primal = 0.0;
    double relative_dual = 0.0;
};

struct SolveReport {
    int iterations = 0;
    bool converged = false;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double relative_primal = 0.0;
    double relative_dual = 0.0;
    std::vector<double> objective_trace;
    /// Relative residual history, one entry per sweep.
    std::vector<double> primal_trace;
    std::vector<double> dual_trace;
    double wall_seconds = 0.0;
};

/// Precomputed operators shared across sweeps of one problem.
class SolverContext {
public:
    SolverContext(const ProbabilityMap& probs, PatchConfig patch, SolverConfig cfg);

    const ProbabilityMap& probs() const noexcept { return probs_; }
    const PatchConfig& patch() const noexcept { return patch_; }
    const SolverConfig& config() const noexcept { return cfg_; }
    const QuadraticSolver& quadratic() const noexcept { return quadratic_; }

private:
    ProbabilityMap probs_;
    PatchConfig patch_;
    SolverConfig cfg_;
    QuadraticSolver quadratic_;
};

struct Iterate {
    Matrix z;
    SplitState state;
};

Iterate initialize(const ProbabilityMap& probs, const PatchConfig& patch);

/// One SALSA sweep: z-update, the four decoupled proximal steps, multiplier
/// update, then residuals r = Gz' − u' and s = μGᵀ(u' − u).
void iterate(Iterate& it, const SolverContext& ctx);

/// Simplex-feasible field: clip negatives and renormalize each column, or
/// project onto the simplex when nothing positive survives.
Matrix project_feasible(const Matrix& z);

/// With λ = 0 and no fixed sweep count the separable minimizer (one-hot at the
/// per-pixel argmax of p) is returned directly, with zero iterations.
std::pair<HiddenField, SolveReport> run(const ProbabilityMap& probs, const PatchConfig& patch,
                                        const SolverConfig& cfg);

/// argmax per column, ties resolved toward the smallest class; labels are 1-based.
LabelMap extract_labels(const HiddenField& field);

/// Σ −ln(p_iᵀz_i) + λ Σ ‖[Jz]_i‖_{S_p}.
double objective(const Matrix& z, const ProbabilityMap& probs, const PatchConfig& patch,
                 double lambda, SchattenOrder order);

/// Σ ‖[Jz]_i‖_{S_p} alone.
double prior_value(const Matrix& z, const ImageGrid& grid, const PatchConfig& patch,
                   SchattenOrder order);

} // namespace segsalsa
