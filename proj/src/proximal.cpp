#include "segsalsa/proximal.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace segsalsa {

SchattenOrder schatten_order_from_int(int p) {
    switch (p) {
    case 1: return SchattenOrder::Nuclear;
    case 2: return SchattenOrder::Frobenius;
    default:
        throw Error(ErrorKind::InvalidParameter,
                    "unsupported Schatten order " + std::to_string(p) + " (expected 1 or 2)");
    }
}

int to_int(SchattenOrder order) noexcept { return static_cast<int>(order); }

Vector prox_data(const Eigen::Ref<const Vector>& nu, const Eigen::Ref<const Vector>& p, double mu) {
    if (nu.size() != p.size())
        throw Error(ErrorKind::DimensionMismatch, "prox_data: ν and p differ in length");
    const double p_sq = p.squaredNorm();
    if (!(p_sq > 0.0))
        throw Error(ErrorKind::DegenerateLikelihood, "prox_data: likelihood vector is zero");
    const double a = p.dot(nu);
    const double q = p_sq / mu;
    const double disc = std::sqrt(a * a + 4.0 * q);
    // Positive root of t² − a t − q = 0; the product form avoids cancellation for a < 0.
    const double t = a >= 0.0 ? 0.5 * (a + disc) : 2.0 * q / (disc - a);
    return nu + p / (mu * t);
}

Eigen::Vector2d block_singular_values(const Eigen::Ref<const PixelBlock>& v) {
    const Eigen::Matrix2d gram = v.transpose() * v;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig;
    eig.computeDirect(gram, Eigen::EigenvaluesOnly);
    const Eigen::Vector2d lam = eig.eigenvalues().cwiseMax(0.0);
    return {std::sqrt(lam(1)), std::sqrt(lam(0))};
}

double schatten_norm(const Eigen::Ref<const PixelBlock>& v, SchattenOrder order) {
    if (order == SchattenOrder::Frobenius)
        return v.norm();
    const Eigen::Vector2d s = block_singular_values(v);
    return s(0) + s(1);
}

void prox_schatten_inplace(Eigen::Map<PixelBlock> v, double tau, SchattenOrder order) {
    if (tau < 0.0)
        throw Error(ErrorKind::InvalidParameter, "prox_schatten: negative threshold");
    if (tau == 0.0)
        return;
    if (order == SchattenOrder::Frobenius) {
        const double norm = v.norm();
        v *= norm > tau ? 1.0 - tau / norm : 0.0;
        return;
    }
    const Eigen::Matrix2d gram = v.transpose() * v;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig;
    eig.computeDirect(gram);
    const Eigen::Vector2d sigma = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const double cutoff = 1e-12 * sigma.maxCoeff();
    Eigen::Vector2d scale;
    for (int i = 0; i < 2; ++i)
        scale(i) = sigma(i) > cutoff ? std::max(sigma(i) - tau, 0.0) / sigma(i) : 0.0;
    // X = V W diag(s) Wᵀ rescales each right singular direction in place.
    const Eigen::Matrix2d& w = eig.eigenvectors();
    const Eigen::Matrix2d mix = w * scale.asDiagonal() * w.transpose();
    const PixelBlock shrunk = v * mix;
    v = shrunk;
}

PixelBlock prox_schatten(const Eigen::Ref<const PixelBlock>& v, double tau, SchattenOrder order) {
    PixelBlock out = v;
    prox_schatten_inplace(Eigen::Map<PixelBlock>(out.data(), out.rows(), 2), tau, order);
    return out;
}

Vector prox_nonneg(const Eigen::Ref<const Vector>& nu) { return nu.cwiseMax(0.0); }

Vector prox_sum_one(const Eigen::Ref<const Vector>& nu) {
    const double excess = (nu.sum() - 1.0) / static_cast<double>(nu.size());
    return nu.array() - excess;
}

Vector project_simplex(const Eigen::Ref<const Vector>& nu) {
    std::vector<double> sorted(nu.data(), nu.data() + nu.size());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double cumulative = 0.0;
    double theta = 0.0;
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        cumulative += sorted[k];
        const double candidate = (cumulative - 1.0) / static_cast<double>(k + 1);
        if (sorted[k] - candidate > 0.0)
            theta = candidate;
    }
    return (nu.array() - theta).cwiseMax(0.0);
}

} // namespace segsalsa
