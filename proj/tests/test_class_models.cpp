#include <doctest.h>

#include <cmath>
#include <random>

#include "segsalsa/class_models.hpp"
#include "support/oracles.hpp"

using namespace segsalsa;

namespace {

TrainingSet all_pixels(const std::vector<LabelMap::Label>& labels, Index classes) {
    TrainingSet set;
    set.classes = classes;
    for (std::size_t i = 0; i < labels.size(); ++i)
        set.samples.push_back({static_cast<Index>(i), labels[i]});
    return set;
}

} // namespace

TEST_CASE("softmax") {
    Matrix logits(2, 1);
    logits << 0.0, std::log(3.0);
    const Matrix p = softmax_columns(logits);
    CHECK(p(0, 0) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(p(1, 0) == doctest::Approx(0.75).epsilon(1e-15));

    Matrix big(3, 2);
    big << 1000, -1000, 1001, -1001, 999, -999;
    const Matrix q = softmax_columns(big);
    CHECK(q.allFinite());
    CHECK(std::abs(q.col(0).sum() - 1.0) <= 1e-15);
    CHECK(q(1, 0) > q(0, 0));
}

TEST_CASE("predict_probs") {
    std::mt19937_64 rng(1);
    const ImageGrid g(4, 5);
    const HyperCube cube(g, oracle::random_matrix(3, g.size(), rng));
    MlrModel model;
    model.weights = Matrix::Zero(4, 4);
    model.feature_mean = Vector::Zero(3);
    model.feature_scale = Vector::Ones(3);

    SUBCASE("zero weights are uniform") {
        const ProbabilityMap p = predict_probs(model, cube);
        CHECK(p.values().isApproxToConstant(0.25, 1e-15));
    }
    SUBCASE("shift invariance") {
        model.weights = oracle::random_matrix(4, 4, rng);
        const Matrix before = predict_probs(model, cube).values();
        const Eigen::RowVectorXd shift = oracle::random_matrix(1, 4, rng) * 5.0;
        model.weights.rowwise() += shift;
        const Matrix after = predict_probs(model, cube).values();
        CHECK((before - after).cwiseAbs().maxCoeff() <= 1e-12);
    }
    SUBCASE("columns are positive and sum to one") {
        model.weights = oracle::random_matrix(4, 4, rng, 10.0);
        const Matrix p = predict_probs(model, cube).values();
        CHECK(p.minCoeff() > 0.0);
        CHECK((p.colwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);
    }
    SUBCASE("band mismatch") {
        const HyperCube other(g, oracle::random_matrix(2, g.size(), rng));
        try {
            predict_probs(model, other);
            FAIL("band mismatch accepted");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::DimensionMismatch);
        }
    }
}

TEST_CASE("gradient matches central differences") {
    std::mt19937_64 rng(3);
    const Index d = 3, K = 3, N = 5;
    Matrix features(d + 1, N);
    features.topRows(d) = oracle::random_matrix(d, N, rng);
    features.row(d).setOnes();
    const std::vector<LabelMap::Label> labels{1, 2, 3, 1, 2};
    const Matrix w = oracle::random_matrix(K, d + 1, rng);
    Matrix grad;
    mlr_loss(w, features, labels, 0.1, &grad);
    const double h = 1e-6;
    for (Index r = 0; r < K; ++r)
        for (Index c = 0; c <= d; ++c) {
            Matrix plus = w, minus = w;
            plus(r, c) += h;
            minus(r, c) -= h;
            const double fd = (mlr_loss(plus, features, labels, 0.1, nullptr) -
                               mlr_loss(minus, features, labels, 0.1, nullptr)) /
                              (2.0 * h);
            CHECK(std::abs(fd - grad(r, c)) <= 1e-5 * std::max(1.0, std::abs(grad(r, c))));
        }
}

TEST_CASE("train_mlr") {
    SUBCASE("zero iterations give uniform predictions") {
        std::mt19937_64 rng(4);
        const ImageGrid g(3, 4);
        const HyperCube cube(g, oracle::random_matrix(2, g.size(), rng));
        const auto set = all_pixels({1, 2, 3, 1, 2, 3, 1, 2, 3, 1, 2, 3}, 3);
        const TrainResult res = train_mlr(cube, set, 1e-3, 0);
        CHECK(res.model.weights.isZero());
        CHECK(predict_probs(res.model, cube).values().isApproxToConstant(1.0 / 3.0, 1e-15));
    }
    SUBCASE("separable toy reaches full training accuracy") {
        // 20 points split by the line x + y = 0 with a margin of at least 0.2.
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        const ImageGrid g(4, 5);
        Matrix x(2, g.size());
        std::vector<LabelMap::Label> labels;
        for (Index i = 0; i < g.size(); ++i) {
            double a, b;
            do {
                a = u(rng);
                b = u(rng);
            } while (std::abs(a + b) < 0.2 * std::sqrt(2.0));
            x(0, i) = a;
            x(1, i) = b;
            labels.push_back(a + b > 0 ? 1 : 2);
        }
        const HyperCube cube(g, x);
        const TrainResult res = train_mlr(cube, all_pixels(labels, 2), 1e-6, 5000);
        const Matrix p = predict_probs(res.model, cube).values();
        for (Index i = 0; i < g.size(); ++i) {
            const LabelMap::Label predicted = p(0, i) > p(1, i) ? 1 : 2;
            CHECK(predicted == labels[static_cast<std::size_t>(i)]);
        }
    }
    SUBCASE("loss is non-increasing") {
        std::mt19937_64 rng(6);
        const ImageGrid g(5, 6);
        const HyperCube cube(g, oracle::random_matrix(4, g.size(), rng));
        std::vector<LabelMap::Label> labels;
        for (Index i = 0; i < g.size(); ++i)
            labels.push_back(static_cast<LabelMap::Label>(1 + i % 3));
        const TrainResult res = train_mlr(cube, all_pixels(labels, 3), 1e-2, 300);
        REQUIRE(res.loss_trace.size() >= 2);
        for (std::size_t k = 1; k < res.loss_trace.size(); ++k)
            CHECK(res.loss_trace[k] <= res.loss_trace[k - 1]);
    }
    SUBCASE("label-symmetric data gives symmetric probabilities") {
        // Class 2 features are the mirror image of class 1 features.
        std::mt19937_64 rng(7);
        const ImageGrid g(2, 8);
        Matrix x(3, g.size());
        std::vector<LabelMap::Label> labels(static_cast<std::size_t>(g.size()));
        const Matrix half = oracle::random_matrix(3, 8, rng);
        for (Index i = 0; i < 8; ++i) {
            x.col(i) = half.col(i) + Vector::Constant(3, 0.7);
            x.col(8 + i) = -x.col(i);
            labels[static_cast<std::size_t>(i)] = 1;
            labels[static_cast<std::size_t>(8 + i)] = 2;
        }
        const HyperCube cube(g, x);
        const TrainResult res = train_mlr(cube, all_pixels(labels, 2), 1e-2, 2000);
        const Matrix p = predict_probs(res.model, cube).values();
        for (Index i = 0; i < 8; ++i) {
            CHECK(std::abs(p(0, i) - p(1, 8 + i)) <= 1e-6);
            CHECK(std::abs(p(1, i) - p(0, 8 + i)) <= 1e-6);
        }
    }
    SUBCASE("deterministic") {
        std::mt19937_64 rng(8);
        const ImageGrid g(4, 4);
        const HyperCube cube(g, oracle::random_matrix(3, g.size(), rng));
        std::vector<LabelMap::Label> labels;
        for (Index i = 0; i < g.size(); ++i)
            labels.push_back(static_cast<LabelMap::Label>(1 + i % 2));
        const auto set = all_pixels(labels, 2);
        CHECK(train_mlr(cube, set, 1e-3, 100).model.weights == train_mlr(cube, set, 1e-3, 100).model.weights);
    }
    SUBCASE("constant band is left unscaled") {
        const ImageGrid g(1, 4);
        Matrix x(2, 4);
        x << 0, 1, 2, 3, 5, 5, 5, 5;
        const TrainResult res = train_mlr(HyperCube(g, x), all_pixels({1, 1, 2, 2}, 2), 1e-3, 50);
        CHECK(res.model.feature_scale.allFinite());
        CHECK(res.model.weights.allFinite());
    }
    SUBCASE("missing class") {
        const ImageGrid g(1, 4);
        const HyperCube cube(g, Matrix::Ones(2, 4));
        try {
            train_mlr(cube, all_pixels({1, 1, 3, 3}, 3), 1e-3, 10);
            FAIL("missing class accepted");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::InvalidTrainingSet);
        }
    }
}
