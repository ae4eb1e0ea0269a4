#include "segsalsa/class_models.hpp"

#include <cmath>
#include <string>

namespace segsalsa {

void TrainingSet::validate(const ImageGrid& grid) const {
    if (classes < 1)
        throw Error(ErrorKind::InvalidTrainingSet, "training set declares no classes");
    std::vector<int> seen(static_cast<std::size_t>(classes), 0);
    for (const auto& s : samples) {
        if (s.pixel < 0 || s.pixel >= grid.size())
            throw Error(ErrorKind::IndexOutOfRange,
                        "training pixel " + std::to_string(s.pixel) + " outside grid");
        if (s.label < 1 || s.label > classes)
            throw Error(ErrorKind::InvalidTrainingSet,
                        "training label " + std::to_string(s.label) + " outside 1.." +
                            std::to_string(classes));
        ++seen[static_cast<std::size_t>(s.label - 1)];
    }
    for (Index k = 0; k < classes; ++k)
        if (seen[static_cast<std::size_t>(k)] == 0)
            throw Error(ErrorKind::InvalidTrainingSet,
                        "class " + std::to_string(k + 1) + " has no training samples");
}

TrainingSet TrainingSet::from_labels(const LabelMap& labels, Index classes) {
    TrainingSet set;
    set.classes = classes > 0 ? classes : labels.max_label();
    for (Index i = 0; i < labels.grid().size(); ++i)
        if (labels[i] != 0)
            set.samples.push_back({i, labels[i]});
    return set;
}

Matrix softmax_columns(const Matrix& logits) {
    Matrix out(logits.rows(), logits.cols());
    for (Index i = 0; i < logits.cols(); ++i) {
        const double top = logits.col(i).maxCoeff();
        out.col(i) = (logits.col(i).array() - top).exp();
        out.col(i) /= out.col(i).sum();
    }
    return out;
}

double mlr_loss(const Matrix& weights, const Matrix& features,
                const std::vector<LabelMap::Label>& labels, double ridge, Matrix* gradient) {
    const Index N = features.cols();
    const Index d = features.rows() - 1;
    const Matrix logits = weights * features;
    Matrix probs = softmax_columns(logits);
    double loss = 0.0;
    for (Index i = 0; i < N; ++i) {
        const Index y = labels[static_cast<std::size_t>(i)] - 1;
        const double top = logits.col(i).maxCoeff();
        const double lse = top + std::log((logits.col(i).array() - top).exp().sum());
        loss += lse - logits(y, i);
        probs(y, i) -= 1.0;
    }
    const double inv_n = 1.0 / static_cast<double>(N);
    loss *= inv_n;
    const auto penalized = weights.leftCols(d);
    loss += 0.5 * ridge * penalized.squaredNorm();
    if (gradient) {
        *gradient = inv_n * probs * features.transpose();
        gradient->leftCols(d) += ridge * penalized;
    }
    return loss;
}

namespace {

Matrix standardized_features(const HyperCube& cube, const std::vector<TrainingSample>& samples,
                             const Vector& mean, const Vector& scale) {
    const Index d = cube.bands();
    Matrix features(d + 1, static_cast<Index>(samples.size()));
    for (std::size_t s = 0; s < samples.size(); ++s) {
        const Index col = static_cast<Index>(s);
        features.col(col).head(d) =
            (cube.values().col(samples[s].pixel) - mean).cwiseProduct(scale);
        features(d, col) = 1.0;
    }
    return features;
}

} // namespace

TrainResult train_mlr(const HyperCube& cube, const TrainingSet& training, double ridge, int iters,
                      const StepPolicy& policy) {
    training.validate(cube.grid());
    if (!(ridge >= 0.0))
        throw Error(ErrorKind::InvalidParameter, "ridge must be >= 0");
    if (iters < 0)
        throw Error(ErrorKind::InvalidParameter, "iteration count must be >= 0");

    const Index d = cube.bands();
    const Index K = training.classes;
    const auto& samples = training.samples;
    const double count = static_cast<double>(samples.size());

    TrainResult result;
    MlrModel& model = result.model;
    model.ridge = ridge;
    model.feature_mean = Vector::Zero(d);
    for (const auto& s : samples)
        model.feature_mean += cube.values().col(s.pixel);
    model.feature_mean /= count;
    Vector var = Vector::Zero(d);
    for (const auto& s : samples)
        var += (cube.values().col(s.pixel) - model.feature_mean).cwiseAbs2();
    var /= count;
    model.feature_scale.resize(d);
    for (Index b = 0; b < d; ++b)
        model.feature_scale(b) = var(b) > 1e-24 ? 1.0 / std::sqrt(var(b)) : 0.0;

    const Matrix features =
        standardized_features(cube, samples, model.feature_mean, model.feature_scale);
    std::vector<LabelMap::Label> labels;
    labels.reserve(samples.size());
    for (const auto& s : samples)
        labels.push_back(s.label);

    model.weights = Matrix::Zero(K, d + 1);
    Matrix grad;
    double loss = mlr_loss(model.weights, features, labels, ridge, &grad);
    result.loss_trace.push_back(loss);
    double step = policy.initial_step;
    for (int it = 0; it < iters; ++it) {
        const double grad_sq = grad.squaredNorm();
        if (std::sqrt(grad_sq) <= policy.grad_tolerance)
            break;
        bool accepted = false;
        while (step >= policy.min_step) {
            const Matrix trial = model.weights - step * grad;
            Matrix trial_grad;
            const double trial_loss = mlr_loss(trial, features, labels, ridge, &trial_grad);
            if (trial_loss <= loss - policy.armijo * step * grad_sq) {
                model.weights = trial;
                grad = std::move(trial_grad);
                loss = trial_loss;
                accepted = true;
                break;
            }
            step *= policy.shrink;
        }
        if (!accepted)
            break;
        result.loss_trace.push_back(loss);
        ++result.iterations;
        step *= policy.grow;
    }
    return result;
}

ProbabilityMap predict_probs(const MlrModel& model, const HyperCube& cube) {
    const Index d = cube.bands();
    if (model.bands() != d || model.feature_mean.size() != d || model.feature_scale.size() != d)
        throw Error(ErrorKind::DimensionMismatch,
                    "model expects " + std::to_string(model.bands()) + " bands, cube has " +
                        std::to_string(d));
    const Index n = cube.grid().size();
    Matrix out(model.classes(), n);
    const auto w = model.weights.leftCols(d);
    const auto bias = model.weights.col(d);
#pragma omp parallel for
    for (Index i = 0; i < n; ++i) {
        const Vector x = (cube.values().col(i) - model.feature_mean).cwiseProduct(model.feature_scale);
        Vector logits = w * x + bias;
        logits.array() -= logits.maxCoeff();
        logits = logits.array().exp();
        out.col(i) = logits / logits.sum();
    }
    return ProbabilityMap(cube.grid(), std::move(out));
}

} // namespace segsalsa
