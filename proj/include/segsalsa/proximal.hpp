#pragma once

#include <Eigen/Core>

#include "segsalsa/tensor_field.hpp"

namespace segsalsa {

/// Order of the Schatten norm on the per-pixel patch Jacobian. Only the
/// nuclear (1) and Frobenius (2) norms are supported.
enum class SchattenOrder { Nuclear = 1, Frobenius = 2 };

SchattenOrder schatten_order_from_int(int p);
int to_int(SchattenOrder order) noexcept;

using PixelBlock = Eigen::Matrix<double, Eigen::Dynamic, 2>;

/// argmin_ξ −ln(pᵀξ) + (μ/2)‖ξ − ν‖². Closed form through the positive root
/// of μt² − μ(pᵀν)t − ‖p‖² = 0, with pᵀξ = t.
Vector prox_data(const Eigen::Ref<const Vector>& nu, const Eigen::Ref<const Vector>& p, double mu);

/// argmin_X ‖X‖_{S_p} + ‖X − V‖²_F / (2τ) for a (KL) x 2 block.
/// τ = 0 is the identity.
PixelBlock prox_schatten(const Eigen::Ref<const PixelBlock>& v, double tau, SchattenOrder order);

/// In-place variant used by the solver on column views of u₂.
void prox_schatten_inplace(Eigen::Map<PixelBlock> v, double tau, SchattenOrder order);

Vector prox_nonneg(const Eigen::Ref<const Vector>& nu);

/// Projection onto the hyperplane 1ᵀξ = 1.
Vector prox_sum_one(const Eigen::Ref<const Vector>& nu);

/// Euclidean projection onto the probability simplex (sort-based).
Vector project_simplex(const Eigen::Ref<const Vector>& nu);

/// Singular values (descending) of a (KL) x 2 block from the 2x2 Gram matrix.
Eigen::Vector2d block_singular_values(const Eigen::Ref<const PixelBlock>& v);

double schatten_norm(const Eigen::Ref<const PixelBlock>& v, SchattenOrder order);

} // namespace segsalsa
