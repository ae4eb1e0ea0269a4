#include <doctest.h>

#include <cmath>

#include "segsalsa/tensor_field.hpp"

using namespace segsalsa;

TEST_CASE("default_gamma follows the border-to-center rule") {
    CHECK(default_gamma(2) == 2.0);
    CHECK(default_gamma(0) == 1.0);
    CHECK(default_gamma(5) == 5.0);
    CHECK_THROWS_AS(default_gamma(-1), Error);
}

TEST_CASE("build_patch_config") {
    SUBCASE("1x1 patch") {
        const PatchConfig cfg = build_patch_config(0, 1.0);
        REQUIRE(cfg.size() == 1);
        CHECK(cfg.shifts()[0] == Shift{0, 0});
        CHECK(cfg.weights()[0] == 1.0);
    }
    SUBCASE("3x3 weights") {
        const PatchConfig cfg = build_patch_config(1, 1.0);
        REQUIRE(cfg.size() == 9);
        CHECK(cfg.shifts().front() == Shift{-1, -1});
        CHECK(cfg.shifts().back() == Shift{1, 1});
        CHECK(cfg.weights()[8] == doctest::Approx(0.367879).epsilon(1e-6));
        CHECK(cfg.weights()[5] == doctest::Approx(0.606531).epsilon(1e-6)); // (0, 1)
        CHECK(cfg.weights()[4] == 1.0);
    }
    SUBCASE("invalid bandwidth") {
        CHECK_THROWS_AS(build_patch_config(1, 0.0), Error);
        CHECK_THROWS_AS(build_patch_config(1, -2.0), Error);
        try {
            build_patch_config(1, 0.0);
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::InvalidParameter);
        }
    }
}

TEST_CASE("patch weights are symmetric and grow with bandwidth") {
    for (int M : {1, 2, 3}) {
        const PatchConfig cfg = build_patch_config(M, 1.3);
        const auto& s = cfg.shifts();
        for (std::size_t j = 0; j < s.size(); ++j) {
            // Row-major enumeration puts −δ at the mirrored position.
            const std::size_t mirror = s.size() - 1 - j;
            CHECK(s[mirror] == Shift{-s[j].row, -s[j].col});
            CHECK(cfg.weights()[mirror] == cfg.weights()[j]);
        }
        double previous = 0.0;
        for (double gamma : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0}) {
            const PatchConfig wider = build_patch_config(M, gamma);
            double total = 0.0;
            for (double w : wider.weights())
                total += w;
            CHECK(total > previous);
            previous = total;
        }
    }
}

TEST_CASE("grid and container invariants") {
    CHECK_THROWS_AS(ImageGrid(0, 3), Error);
    const ImageGrid g(2, 3);
    CHECK(g.size() == 6);
    CHECK(g.index(1, 2) == 5);
    CHECK(g.row_of(5) == 1);
    CHECK(g.col_of(5) == 2);

    Matrix p(2, 6);
    p.setConstant(0.5);
    CHECK_NOTHROW(ProbabilityMap(g, p));
    p(0, 3) = -0.1;
    CHECK_THROWS_AS(ProbabilityMap(g, p), Error);
    p(0, 3) = 0.0;
    p(1, 3) = 0.0;
    try {
        ProbabilityMap(g, p);
        FAIL("zero column accepted");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DegenerateLikelihood);
    }
    CHECK_THROWS_AS(ProbabilityMap(g, Matrix::Ones(2, 5)), Error);

    Matrix cube = Matrix::Zero(3, 6);
    cube(1, 1) = std::nan("");
    CHECK_THROWS_AS(HyperCube(g, cube), Error);

    LabelMap labels(g);
    labels.set(4, 3);
    CHECK(labels.max_label() == 3);
    CHECK_THROWS_AS(labels.set(6, 1), Error);
}
