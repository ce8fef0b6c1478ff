#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hmr/camera.hpp"
#include "hmr/rng.hpp"

using namespace hmr;

TEST_CASE("project with identity scale drops z") {
    Matrix p(1, 3, {0.2, 0.3, 5.0});
    const Matrix out = project(p, CameraParams{1.0, 0.0, 0.0});
    CHECK(out.at(0, 0) == 0.2);
    CHECK(out.at(0, 1) == 0.3);
}

TEST_CASE("project applies scale and translation") {
    Matrix p(1, 3, {0.1, 0.1, -2.0});
    const Matrix out = project(p, CameraParams{2.0, 0.1, 0.0});
    CHECK(out.at(0, 0) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(out.at(0, 1) == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("projection is invariant to z translation") {
    Rng rng(301);
    Matrix p(5, 3);
    for (double& v : p.data) v = rng.uniform(-1.0, 1.0);
    Matrix q = p;
    for (std::size_t i = 0; i < 5; ++i) q.at(i, 2) += 17.0;
    const CameraParams cam{0.7, 0.2, -0.1};
    const Matrix a = project(p, cam), b = project(q, cam);
    CHECK(a.data == b.data);
}

TEST_CASE("project is affine per coordinate") {
    Rng rng(302);
    Matrix p(4, 3), q(4, 3);
    for (double& v : p.data) v = rng.uniform(-1.0, 1.0);
    for (double& v : q.data) v = rng.uniform(-1.0, 1.0);
    const double alpha = 0.37;
    Matrix mix(4, 3);
    for (std::size_t i = 0; i < mix.data.size(); ++i)
        mix.data[i] = alpha * p.data[i] + q.data[i];
    const CameraParams cam{1.3, 0.05, 0.4};
    const Matrix pm = project(mix, cam);
    const Matrix pp = project(p, cam);
    const Matrix pq = project(q, cam);
    // s*(aP+Q) + t = a*(sP+t) + (sQ+t) - a*t ... check componentwise identity
    for (std::size_t i = 0; i < 4; ++i)
        for (int c = 0; c < 2; ++c) {
            const double want = alpha * (pp.at(i, c) - (c == 0 ? cam.t_x : cam.t_y)) +
                                pq.at(i, c);
            CHECK(std::abs(pm.at(i, c) - want) <= 1e-12);
        }
}

TEST_CASE("scale_to_depth proportionality and fixed point") {
    const double f = 5000.0, e = 1288.0;
    CHECK(scale_to_depth(0.5, f, e) == doctest::Approx(2.0 * scale_to_depth(1.0, f, e)).epsilon(1e-12));
    const double s_unit = 2.0 * f / e;
    CHECK(scale_to_depth(s_unit, f, e) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("scale_to_depth direct evaluation") {
    CHECK(scale_to_depth(0.5, 1000.0, 1288.0) == doctest::Approx(2000.0 / 644.0).epsilon(1e-12));
}

TEST_CASE("scale/depth conversions are inverse and reject non-positive input") {
    const CameraConventions conv;
    for (double s = 0.01; s <= 100.0; s *= 1.7)
        CHECK(std::abs(depth_to_scale(scale_to_depth(s, conv), conv) - s) <= 1e-9 * s);
    CHECK_THROWS_AS(scale_to_depth(0.0, conv), DomainError);
    CHECK_THROWS_AS(depth_to_scale(-1.0, conv), DomainError);
}

TEST_CASE("box_from_points degenerate single point clamps to minimum side") {
    Matrix p(1, 2, {0.5, 0.5});
    const NormBox b = box_from_points(p);
    CHECK(b.cx == 0.5);
    CHECK(b.cy == 0.5);
    CHECK(b.w == NormBox::kMinSide);
    CHECK(b.h == NormBox::kMinSide);
}

TEST_CASE("box_from_points spans the unit square") {
    Matrix p(2, 2, {0.0, 0.0, 1.0, 1.0});
    const NormBox b = box_from_points(p);
    CHECK(b.cx == 0.5);
    CHECK(b.cy == 0.5);
    CHECK(b.w == 1.0);
    CHECK(b.h == 1.0);
}

TEST_CASE("box_from_points matches a linear scan and stays valid") {
    Rng rng(303);
    for (int it = 0; it < 50; ++it) {
        const std::size_t n = 1 + rng.index(20);
        Matrix p(n, 2);
        for (double& v : p.data) v = rng.uniform(0.05, 0.95);
        double x0 = 1e9, x1 = -1e9, y0 = 1e9, y1 = -1e9;
        for (std::size_t i = 0; i < n; ++i) {
            x0 = std::min(x0, p.at(i, 0));
            x1 = std::max(x1, p.at(i, 0));
            y0 = std::min(y0, p.at(i, 1));
            y1 = std::max(y1, p.at(i, 1));
        }
        const NormBox b = box_from_points(p);
        CHECK(b.valid());
        CHECK(std::abs(b.cx - 0.5 * (x0 + x1)) <= 1e-12);
        CHECK(std::abs(b.cy - 0.5 * (y0 + y1)) <= 1e-12);
        CHECK(std::abs(b.w - std::max(x1 - x0, NormBox::kMinSide)) <= 1e-12);
        CHECK(std::abs(b.h - std::max(y1 - y0, NormBox::kMinSide)) <= 1e-12);
    }
}

TEST_CASE("box_from_points rejects empty input") {
    CHECK_THROWS_AS(box_from_points(Matrix(0, 2)), DomainError);
}
