#include <catch_amalgamated.hpp>

#include "opinf/poly/fit.hpp"
#include "opinf/poly/grid_search.hpp"
#include "opinf/poly/interpolate.hpp"
#include "opinf/rng.hpp"

using namespace opinf;
using Catch::Approx;

TEST_CASE("sqr packing follows the row-major lower-triangular order") {
    Vec x2(2);
    x2 << 2.0, 3.0;
    const Vec p2 = poly::sqr_pack(x2);
    REQUIRE(p2.size() == 3);
    REQUIRE(p2[0] == 4.0);
    REQUIRE(p2[1] == 6.0);
    REQUIRE(p2[2] == 9.0);

    Vec x1(1);
    x1 << 5.0;
    REQUIRE(poly::sqr_pack(x1)[0] == 25.0);

    Vec x3(3);
    x3 << 1.0, 0.0, -1.0;
    const Vec p3 = poly::sqr_pack(x3);
    Vec expect(6);
    expect << 1.0, 0.0, 0.0, -1.0, 0.0, 1.0;
    REQUIRE((p3 - expect).norm() == 0.0);
}

TEST_CASE("packed symmetric encoding reproduces the full quadratic form") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const Index k = 2 + trial % 5;
        Mat q = rng.normal_mat(k, k);
        q = Mat(0.5 * (q + q.transpose()));
        const Vec row = poly::sqr_encode_symmetric(q);
        const Vec x = rng.normal_vec(k);
        REQUIRE(row.dot(poly::sqr_pack(x)) == Approx(x.dot(q * x)).epsilon(1e-12));
    }
}

TEST_CASE("fit recovers a linear operator from consistent data") {
    Rng rng(7);
    const Index k = 4;
    const Mat a_true = rng.normal_mat(k, k);
    const Mat x = rng.normal_mat(k, 30);
    const Mat y = a_true * x;
    const auto ops = poly::fit(x, y, poly::Blocks::a(), 0.0);
    REQUIRE(ops.A.has_value());
    REQUIRE(!ops.c.has_value());
    REQUIRE((*ops.A - a_true).norm() <= 1e-8 * a_true.norm());
}

TEST_CASE("fit recovers a quadratic operator from consistent data") {
    Rng rng(9);
    const Index k = 3;
    const Mat h_true = rng.normal_mat(k, poly::sqr_size(k));
    const Mat x = rng.normal_mat(k, 40);
    Mat y(k, 40);
    for (Index j = 0; j < 40; ++j) y.col(j) = h_true * poly::sqr_pack(x.col(j));
    const auto ops = poly::fit(x, y, poly::Blocks{false, false, true}, 0.0);
    REQUIRE((*ops.H - h_true).norm() <= 1e-6 * h_true.norm());
}

TEST_CASE("heavy regularization drives the operator to zero") {
    Rng rng(11);
    const Mat x = rng.normal_mat(2, 1);
    const Mat y = rng.normal_mat(2, 1);
    const auto ops = poly::fit(x, y, poly::Blocks::a(), 1e12);
    REQUIRE(ops.A->norm() <= 1e-9);
}

TEST_CASE("rank-deficient designs at lambda zero flag the minimum-norm branch") {
    Mat x(3, 2);  // 2 samples cannot determine a 3x3 operator
    x << 1, 0, 0, 1, 0, 0;
    const Mat y = Mat::Ones(3, 2);
    poly::FitDiagnostics diag;
    const auto ops = poly::fit(x, y, poly::Blocks::a(), 0.0, &diag);
    REQUIRE(diag.rank_deficient);
    REQUIRE(diag.rank == 2);
    // minimum-norm solution leaves the null-space column empty
    REQUIRE(ops.A->col(2).norm() <= 1e-12);
}

TEST_CASE("fit agrees with the vec-trick oracle on random instances") {
    Rng rng(13);
    for (int trial = 0; trial < 25; ++trial) {
        const Index k = 2 + trial % 4;
        const Index n = k + 2 + trial % 7;
        const Mat x = rng.normal_mat(k, n);
        const Mat y = rng.normal_mat(k, n) + 0.5 * x;
        const auto ops = poly::fit(x, y, poly::Blocks::a(), 0.0);
        const Mat oracle = poly::fit_vec_oracle(x, y);
        REQUIRE((*ops.A - oracle).norm() <= 1e-9 * std::max(1.0, oracle.norm()));
    }
}

TEST_CASE("vec oracle handles identity dynamics and zero targets") {
    Rng rng(17);
    const Mat x = rng.normal_mat(3, 12);
    REQUIRE((poly::fit_vec_oracle(x, x) - Mat::Identity(3, 3)).norm() <= 1e-10);
    REQUIRE(poly::fit_vec_oracle(x, Mat(Mat::Zero(3, 12))).norm() <= 1e-12);
}

TEST_CASE("normal-equations residual orthogonality holds after every fit") {
    Rng rng(19);
    for (double lambda : {0.0, 1e-6, 1e-2, 10.0}) {
        const Index k = 3;
        const Mat x = rng.normal_mat(k, 25);
        const Mat y = rng.normal_mat(k, 25);
        const auto blocks = poly::Blocks::cah();
        const auto ops = poly::fit(x, y, blocks, lambda);

        // rebuild the design and stacked coefficients
        Mat d(25, blocks.width(k));
        for (Index j = 0; j < 25; ++j) {
            d(j, 0) = 1.0;
            d.row(j).segment(1, k) = x.col(j).transpose();
            d.row(j).segment(1 + k, poly::sqr_size(k)) = poly::sqr_pack(x.col(j)).transpose();
        }
        Mat theta(blocks.width(k), k);
        theta.row(0) = ops.c->transpose();
        theta.middleRows(1, k) = ops.A->transpose();
        theta.middleRows(1 + k, poly::sqr_size(k)) = ops.H->transpose();

        const Mat residual = d.transpose() * (d * theta - y.transpose()) + lambda * theta;
        const double scale = d.squaredNorm() * std::max(theta.norm(), 1.0) + y.norm();
        REQUIRE(residual.norm() <= 1e-8 * scale);
    }
}

TEST_CASE("grid search recovers noiseless linear dynamics at small lambda") {
    Rng rng(23);
    const Index k = 3;
    Mat s = rng.normal_mat(k, k);
    const Mat a_true = s - s.transpose();  // marginally stable dynamics
    const Index nt = 120;
    const double dt = 0.01;
    Mat states(k, nt), velocities(k, nt);
    Vec times(nt);
    Vec x = rng.normal_vec(k);
    for (Index i = 0; i < nt; ++i) {
        times[i] = dt * static_cast<double>(i);
        states.col(i) = x;
        velocities.col(i) = a_true * x;
        const Vec k1 = a_true * x, k2 = a_true * (x + 0.5 * dt * k1),
                  k3 = a_true * (x + 0.5 * dt * k2), k4 = a_true * (x + dt * k3);
        x += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    const auto result = poly::grid_search(states, velocities, times,
                                          poly::RegSearchSpec::standard(), poly::Blocks::a());
    REQUIRE(result.error < 1e-6);
    REQUIRE(result.lambda <= 1e-6);  // noiseless: the smallest lambdas win
}

TEST_CASE("grid search ties on degenerate data break toward the smallest lambda") {
    const Index nt = 10;
    Mat states = Mat::Ones(2, nt);
    Mat velocities = Mat::Zero(2, nt);
    Vec times(nt);
    for (Index i = 0; i < nt; ++i) times[i] = 0.1 * static_cast<double>(i);
    const auto spec = poly::RegSearchSpec::standard();
    const auto result = poly::grid_search(states, velocities, times, spec, poly::Blocks::a());
    REQUIRE(result.lambda == spec.lambdas.front());
    REQUIRE(result.ops.A->norm() <= 1e-10);
}

TEST_CASE("interpolation reproduces lattice nodes and blends linearly") {
    poly::OperatorLattice lattice;
    lattice.axes = {{0.0, 1.0}};
    poly::PolyOperators zero, ident;
    zero.A = Mat(Mat::Zero(2, 2));
    ident.A = Mat(Mat::Identity(2, 2));
    lattice.ops = {zero, ident};

    Vec q(1);
    q << 0.0;
    REQUIRE(poly::interpolate(lattice, q).A->norm() == 0.0);
    q << 1.0;
    REQUIRE((*poly::interpolate(lattice, q).A - Mat::Identity(2, 2)).norm() == 0.0);
    q << 0.5;
    REQUIRE((*poly::interpolate(lattice, q).A - 0.5 * Mat::Identity(2, 2)).norm() <= 1e-15);

    q << 1.5;
    REQUIRE_THROWS_AS(poly::interpolate(lattice, q), DimensionError);
}

TEST_CASE("bilinear lattice data is reproduced exactly at interior points") {
    // entries linear in each parameter: A(mu) = M0 + mu0 M1 + mu1 M2 + mu0 mu1 M3
    Rng rng(29);
    const Mat m0 = rng.normal_mat(2, 2), m1 = rng.normal_mat(2, 2), m2 = rng.normal_mat(2, 2),
              m3 = rng.normal_mat(2, 2);
    auto a_of = [&](double u, double v) { return Mat(m0 + u * m1 + v * m2 + u * v * m3); };

    poly::OperatorLattice lattice;
    lattice.axes = {{0.0, 2.0}, {1.0, 3.0}};
    for (double u : lattice.axes[0])
        for (double v : lattice.axes[1]) {
            poly::PolyOperators ops;
            ops.A = a_of(u, v);
            lattice.ops.push_back(ops);
        }

    for (int trial = 0; trial < 10; ++trial) {
        Vec q(2);
        q << rng.uniform(0.0, 2.0), rng.uniform(1.0, 3.0);
        const auto ops = poly::interpolate(lattice, q);
        REQUIRE((*ops.A - a_of(q[0], q[1])).norm() <= 1e-12);
    }
}

TEST_CASE("polynomial rhs evaluation sums the present blocks") {
    poly::PolyOperators ops;
    ops.A = Mat(Mat::Identity(2, 2));
    Vec x(2);
    x << 1.0, 2.0;
    REQUIRE((poly::eval_poly_rhs(ops, x) - x).norm() == 0.0);

    poly::PolyOperators constant;
    constant.c = Vec(2);
    *constant.c << 3.0, -1.0;
    REQUIRE((poly::eval_poly_rhs(constant, x) - *constant.c).norm() == 0.0);

    Rng rng(31);
    poly::PolyOperators quad;
    quad.H = rng.normal_mat(2, 3);
    Vec expect = *quad.H * poly::sqr_pack(x);
    REQUIRE((poly::eval_poly_rhs(quad, x) - expect).norm() == 0.0);
}

TEST_CASE("polynomial operators survive a JSON round trip") {
    Rng rng(37);
    poly::PolyOperators ops;
    ops.c = rng.normal_vec(3);
    ops.A = rng.normal_mat(3, 3);
    ops.H = rng.normal_mat(3, 6);
    ops.lambda = 0.125;
    const std::string path = "test_poly_roundtrip.json";
    poly::save_poly(ops, path);
    const auto back = poly::load_poly(path);
    REQUIRE((*back.c - *ops.c).norm() == 0.0);
    REQUIRE((*back.A - *ops.A).norm() == 0.0);
    REQUIRE((*back.H - *ops.H).norm() == 0.0);
    REQUIRE(back.lambda == ops.lambda);
    std::remove(path.c_str());
}
