#pragma once

#include <vector>

#include "segsalsa/tensor_field.hpp"

namespace segsalsa {

struct TrainingSample {
    Index pixel = 0;
    LabelMap::Label label = 1;

    friend bool operator==(const TrainingSample&, const TrainingSample&) = default;
};

struct TrainingSet {
    Index classes = 0;
    std::vector<TrainingSample> samples;

    /// Every class in 1..classes must be represented.
    void validate(const ImageGrid& grid) const;
    static TrainingSet from_labels(const LabelMap& labels, Index classes = 0);
};

/// Multinomial logistic regression on standardized features.
struct MlrModel {
    /// K x (d+1); the last column is the bias.
    Matrix weights;
    double ridge = 0.0;
    /// Per-band standardization fitted on the training pixels.
    Vector feature_mean;
    Vector feature_scale;

    Index classes() const noexcept { return weights.rows(); }
    Index bands() const noexcept { return weights.cols() - 1; }
};

struct StepPolicy {
    double initial_step = 1.0;
    double shrink = 0.5;
    double grow = 2.0;
    double armijo = 1e-4;
    double min_step = 1e-14;
    double grad_tolerance = 1e-8;
};

struct TrainResult {
    MlrModel model;
    int iterations = 0;
    std::vector<double> loss_trace;
};

/// Ridge-penalized mean negative log-likelihood and its gradient. `features`
/// is (d+1) x N with a trailing row of ones; the bias column is not penalized.
double mlr_loss(const Matrix& weights, const Matrix& features,
                const std::vector<LabelMap::Label>& labels, double ridge, Matrix* gradient);

TrainResult train_mlr(const HyperCube& cube, const TrainingSet& training, double ridge, int iters,
                      const StepPolicy& policy = {});

ProbabilityMap predict_probs(const MlrModel& model, const HyperCube& cube);

/// Column-wise softmax with the max subtracted first.
Matrix softmax_columns(const Matrix& logits);

} // namespace segsalsa
