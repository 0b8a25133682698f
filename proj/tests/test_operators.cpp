#include <catch_amalgamated.hpp>

#include "opinf/ops/model.hpp"

using namespace opinf;
using Catch::Approx;

TEST_CASE("triangular packing conventions") {
    Vec v(3);
    v << 1.0, 2.0, 3.0;
    const Mat l = ops::unpack_lower(v, 2);
    REQUIRE(l(0, 0) == 1.0);
    REQUIRE(l(0, 1) == 0.0);
    REQUIRE(l(1, 0) == 2.0);
    REQUIRE(l(1, 1) == 3.0);

    REQUIRE_THROWS_AS(ops::unpack_lower(Vec::Zero(5), 3), DimensionError);  // needs 6

    Vec s(1);
    s << 4.0;
    const Mat strict = ops::unpack_strict(s, 2);
    REQUIRE(strict(1, 0) == 4.0);
    REQUIRE(strict(0, 0) == 0.0);
    REQUIRE(strict(0, 1) == 0.0);

    REQUIRE(ops::unpack_strict(Vec::Zero(0), 1).norm() == 0.0);  // K=1 degenerate
    REQUIRE_THROWS_AS(ops::unpack_strict(Vec::Zero(5), 4), DimensionError);  // needs 6

    Rng rng(3);
    const Vec packed = rng.normal_vec(ops::lower_size(5));
    REQUIRE((ops::pack_lower(ops::unpack_lower(packed, 5)) - packed).norm() == 0.0);
    const Vec packed_s = rng.normal_vec(ops::strict_size(5));
    REQUIRE((ops::pack_strict(ops::unpack_strict(packed_s, 5)) - packed_s).norm() == 0.0);
}

TEST_CASE("constant skew operator applies S - S^T and kills the quadratic form") {
    Vec s(1);
    s << 2.5;
    const auto op = ops::make_constant_operator(ops::OperatorKind::Skew, 2, s);
    Vec x(2);
    x << 1.0, 0.0;
    const Vec out = ops::eval_operator(op, x);
    REQUIRE(out[0] == 0.0);
    REQUIRE(out[1] == 2.5);
    REQUIRE(x.dot(out) == 0.0);
}

TEST_CASE("constant spsd operator applies L L^T through triangular products") {
    Vec l(3);
    l << 1.0, 0.0, 2.0;  // L = diag(1, 2)
    const auto op = ops::make_constant_operator(ops::OperatorKind::Spsd, 2, l);
    Vec x(2);
    x << 1.0, 1.0;
    const Vec out = ops::eval_operator(op, x);
    REQUIRE(out[0] == Approx(1.0));
    REQUIRE(out[1] == Approx(4.0));
}

TEST_CASE("potential operator with constant identity factor is twice the state") {
    Vec l(3);
    l << 1.0, 0.0, 1.0;
    const auto op = ops::make_constant_operator(ops::OperatorKind::SpsdPotential, 2, l);
    Vec x(2);
    x << 0.3, -0.7;
    REQUIRE((ops::eval_operator(op, x) - 2.0 * x).norm() <= 1e-15);
}

namespace {

double potential_value(const ops::StructuredOperator& op, const Vec& x, const Vec& mu) {
    const Vec eta = op.signature.assemble(x, mu);
    const Vec raw = op.is_network ? neural::forward(op.net, eta) : op.constant;
    const Mat l = ops::unpack_lower_factor(raw, op.dim, op.positive_diagonal);
    return (l.transpose() * x).squaredNorm();
}

}  // namespace

TEST_CASE("state-dependent potential operator equals the finite-difference gradient") {
    Rng rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        const Index k = 2 + trial % 4;
        const auto op = ops::make_network_operator(ops::OperatorKind::SpsdPotential,
                                                   ops::InputSignature::state(k), k, 2, 6,
                                                   500 + trial, 1.0, trial % 2 == 0);
        const Vec x = rng.normal_vec(k);
        const Vec out = ops::eval_operator(op, x);
        const double h = 1e-5;
        for (Index i = 0; i < k; ++i) {
            Vec xp = x, xm = x;
            xp[i] += h;
            xm[i] -= h;
            const double fd = (potential_value(op, xp, Vec()) - potential_value(op, xm, Vec())) / (2 * h);
            REQUIRE(out[i] == Approx(fd).epsilon(1e-6).margin(1e-9));
        }
    }
}

TEST_CASE("matrix kind equals an explicit reshape-and-multiply of the same network") {
    Rng rng(11);
    const Index k = 3;
    const auto op = ops::make_network_operator(ops::OperatorKind::Matrix,
                                               ops::InputSignature::state(k), k, 2, 5, 77);
    const Vec x = rng.normal_vec(k);
    const Vec raw = neural::forward(op.net, x);
    Mat a(k, k);
    for (Index i = 0; i < k; ++i)
        for (Index j = 0; j < k; ++j) a(i, j) = raw[i * k + j];
    REQUIRE((ops::eval_operator(op, x) - a * x).norm() <= 1e-14);
}

TEST_CASE("skew structure holds exactly for random networks and inputs") {
    Rng rng(13);
    for (int trial = 0; trial < 40; ++trial) {
        const Index k = 2 + trial % 7;
        const auto op = ops::make_network_operator(ops::OperatorKind::Skew,
                                                   ops::InputSignature::state(k), k, 3, k,
                                                   900 + trial);
        const Vec x = rng.normal_vec(k) * 5.0;
        const auto ev = ops::eval_operator_cached(op, x, Vec());
        const Mat s = ops::unpack_strict(ev.raw, k);
        const Mat a = s - s.transpose();
        REQUIRE((a + a.transpose()).norm() == 0.0);
        REQUIRE(std::abs(x.dot(ev.out)) <= 1e-12 * x.norm() * std::max(ev.out.norm(), 1e-30));
    }
}

TEST_CASE("spsd structure gives nonnegative quadratic forms, strictly positive with the flag") {
    Rng rng(17);
    for (int trial = 0; trial < 40; ++trial) {
        const Index k = 2 + trial % 6;
        const bool positive = trial % 2 == 0;
        const auto op = ops::make_network_operator(ops::OperatorKind::Spsd,
                                                   ops::InputSignature::state(k), k, 2, k,
                                                   1300 + trial, 1.0, positive);
        const Vec x = rng.normal_vec(k);
        const auto ev = ops::eval_operator_cached(op, x, Vec());
        const double quad = x.dot(ev.out);
        REQUIRE(quad >= -1e-12 * ev.v.squaredNorm());
        if (positive) {
            Eigen::SelfAdjointEigenSolver<Mat> eig(Mat(ev.L * ev.L.transpose()));
            REQUIRE(eig.eigenvalues().minCoeff() > 0.0);
        }
    }
}

TEST_CASE("orthogonal rotations of the factor leave the spsd operator unchanged") {
    Rng rng(19);
    const Index k = 4;
    const Mat l = ops::unpack_lower(rng.normal_vec(ops::lower_size(k)), k);
    // QR of a random matrix gives an orthogonal Q
    const Mat q = Eigen::HouseholderQR<Mat>(rng.normal_mat(k, k)).householderQ();
    const Mat lr = l * q;
    const Vec x = rng.normal_vec(k);
    REQUIRE((l * (l.transpose() * x) - lr * (lr.transpose() * x)).norm() <=
            1e-12 * std::max(1.0, x.norm() * l.norm() * l.norm()));
}

TEST_CASE("model evaluation applies weights, scales, and exact additivity") {
    const Index k = 2;
    Rng rng(23);

    ops::RomModel model;
    model.dim = k;
    model.scales.state = 2.0;
    model.scales.velocity = 3.0;
    Vec c(2);
    c << 1.0, -2.0;
    model.operators.push_back(ops::make_constant_operator(ops::OperatorKind::Vector, k, c));
    Vec x(2);
    x << 5.0, 7.0;
    // a constant forcing sees only the velocity scale
    REQUIRE((ops::eval_model(model, x) - 3.0 * c).norm() == 0.0);

    // zero-weighted second operator changes nothing
    auto zero_op = ops::make_network_operator(ops::OperatorKind::Standard,
                                              ops::InputSignature::state(k), k, 1, 4, 3, 0.0);
    model.operators.push_back(zero_op);
    REQUIRE((ops::eval_model(model, x) - 3.0 * c).norm() == 0.0);

    // additive composition is the exact sum of weighted contributions
    ops::RomModel sum;
    sum.dim = k;
    sum.operators.push_back(ops::make_network_operator(ops::OperatorKind::Skew,
                                                       ops::InputSignature::state(k), k, 1, 4, 5));
    sum.operators.push_back(ops::make_network_operator(ops::OperatorKind::Spsd,
                                                       ops::InputSignature::state(k), k, 1, 4, 6,
                                                       -1.0, true));
    const Vec xn = rng.normal_vec(k);
    Vec manual = Vec::Zero(k);
    for (const auto& op : sum.operators) manual += op.weight * ops::eval_operator(op, xn);
    REQUIRE((eval_model_normalized(sum, xn, Vec()) - manual).norm() == 0.0);

    // skew part conserves, negated spsd part dissipates
    const Vec skew_part = ops::eval_operator(sum.operators[0], xn);
    const Vec spsd_part = -ops::eval_operator(sum.operators[1], xn);
    REQUIRE(std::abs(xn.dot(skew_part)) <= 1e-13 * xn.norm() * std::max(skew_part.norm(), 1e-30));
    REQUIRE(xn.dot(spsd_part) <= 0.0);
}

TEST_CASE("ensembles average member outputs uniformly") {
    const Index k = 2;
    Vec c1(2), c2(2);
    c1 << 1.0, 2.0;
    c2 << -1.0, -2.0;
    ops::RomModel m1, m2;
    m1.dim = m2.dim = k;
    m1.operators.push_back(ops::make_constant_operator(ops::OperatorKind::Vector, k, c1));
    m2.operators.push_back(ops::make_constant_operator(ops::OperatorKind::Vector, k, c2));

    ops::EnsembleModel single{{m1}, {0}};
    Vec x = Vec::Zero(k);
    REQUIRE((eval_ensemble(single, x) - eval_model(m1, x)).norm() == 0.0);

    ops::EnsembleModel pair{{m1, m1}, {0, 1}};
    REQUIRE((eval_ensemble(pair, x) - eval_model(m1, x)).norm() == 0.0);

    ops::EnsembleModel opposite{{m1, m2}, {0, 1}};
    REQUIRE(eval_ensemble(opposite, x).norm() == 0.0);
}

TEST_CASE("structure reports quantify the claimed algebra") {
    Rng rng(29);
    const Index k = 3;
    const auto skew_op = ops::make_network_operator(ops::OperatorKind::Skew,
                                                    ops::InputSignature::state(k), k, 2, 4, 31);
    const Mat samples = rng.normal_mat(k, 100);
    const auto skew_rep = ops::structure_report(skew_op, samples);
    REQUIRE(skew_rep.claim == "skew");
    REQUIRE(skew_rep.max_asymmetry == 0.0);

    const auto spsd_op = ops::make_network_operator(ops::OperatorKind::Spsd,
                                                    ops::InputSignature::state(k), k, 2, 4, 37,
                                                    1.0, false);
    const auto spsd_rep = ops::structure_report(spsd_op, samples);
    REQUIRE(spsd_rep.claim == "spsd");
    REQUIRE(spsd_rep.min_quadform >= -1e-12);
    REQUIRE(spsd_rep.min_eigenvalue >= -1e-12);

    const auto std_op = ops::make_network_operator(ops::OperatorKind::Standard,
                                                   ops::InputSignature::state(k), k, 2, 4, 41);
    REQUIRE(ops::structure_report(std_op, samples).claim == "no structure claimed");
}

TEST_CASE("models and ensembles survive the directory format") {
    const Index k = 3;
    ops::RomModel model;
    model.dim = k;
    model.scales.state = 1.5;
    model.scales.velocity = 0.25;
    model.scales.params = 2.0;
    model.operators.push_back(ops::make_network_operator(
        ops::OperatorKind::Spsd, ops::InputSignature::state_params(k, 2), k, 3, k, 43, -1.0, true));
    Rng rng(47);
    model.operators.push_back(
        ops::make_constant_operator(ops::OperatorKind::Vector, k, rng.normal_vec(k)));

    ops::save_model(model, "test_model_dir");
    const auto back = ops::load_model("test_model_dir");
    REQUIRE(back.dim == model.dim);
    REQUIRE(back.scales.velocity == model.scales.velocity);
    REQUIRE((back.get_params() - model.get_params()).norm() == 0.0);

    const Vec x = rng.normal_vec(k), mu = rng.normal_vec(2);
    REQUIRE((eval_model(back, x, mu) - eval_model(model, x, mu)).norm() == 0.0);

    ops::EnsembleModel ens{{model, back}, {1, 2}};
    ops::save_ensemble(ens, "test_ens_dir");
    const auto ens_back = ops::load_ensemble("test_ens_dir");
    REQUIRE(ens_back.members.size() == 2);
    REQUIRE((eval_ensemble(ens_back, x, mu) - eval_ensemble(ens, x, mu)).norm() == 0.0);

    std::filesystem::remove_all("test_model_dir");
    std::filesystem::remove_all("test_ens_dir");
}
