#include <catch_amalgamated.hpp>

#include "opinf/poly/fit.hpp"
#include "opinf/train/train.hpp"

using namespace opinf;
using Catch::Approx;

namespace {

/// Constant K x K matrix operator: the unconstrained linear (convex) case.
ops::RomModel constant_matrix_model(Index k, const Vec& theta0) {
    ops::RomModel model;
    model.dim = k;
    model.operators.push_back(
        ops::make_constant_operator(ops::OperatorKind::Matrix, k, theta0));
    return model;
}

/// Loss over explicit samples for a model, mirroring the training objective.
double data_loss(const ops::RomModel& model, const Mat& x, const Mat& y) {
    double num = 0.0, denom = 0.0;
    for (Index j = 0; j < x.cols(); ++j) {
        num += (eval_model_normalized(model, x.col(j), Vec()) - y.col(j)).squaredNorm();
        denom += y.col(j).squaredNorm();
    }
    return num / denom;
}

reduction::ReducedDataset plain_dataset(const Mat& x, const Mat& y) {
    reduction::ReducedDataset ds;
    ds.states = x;
    ds.velocities = y;
    ds.params = Mat();
    return ds;
}

std::vector<Index> all_columns(Index n) {
    std::vector<Index> idx(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    return idx;
}

}  // namespace

TEST_CASE("loss of a perfect model is exactly the weight penalty") {
    const Index k = 2;
    Rng rng(3);
    const Vec c = rng.normal_vec(k);
    ops::RomModel model;
    model.dim = k;
    model.operators.push_back(ops::make_constant_operator(ops::OperatorKind::Vector, k, c));

    Mat x = rng.normal_mat(k, 6);
    Mat y = c.replicate(1, 6);
    const auto ds = plain_dataset(x, y);
    const auto result = train::loss(model, ds, all_columns(6), 1e-4);
    REQUIRE(result.value == Approx(1e-4 * c.squaredNorm()).epsilon(1e-12));
}

TEST_CASE("loss of a zero model against unit targets is one") {
    const Index k = 3;
    ops::RomModel model;
    model.dim = k;
    model.operators.push_back(
        ops::make_constant_operator(ops::OperatorKind::Vector, k, Vec::Zero(k)));
    Mat x = Mat::Zero(k, 5);
    Mat y = Mat::Zero(k, 5);
    y.row(0).setOnes();
    const auto result = train::loss(model, plain_dataset(x, y), all_columns(5), 0.0);
    REQUIRE(result.value == Approx(1.0));
}

TEST_CASE("all-zero targets fall back to a unit denominator") {
    const Index k = 2;
    Vec c(2);
    c << 3.0, 4.0;
    ops::RomModel model;
    model.dim = k;
    model.operators.push_back(ops::make_constant_operator(ops::OperatorKind::Vector, k, c));
    const auto result =
        train::loss(model, plain_dataset(Mat::Zero(k, 4), Mat::Zero(k, 4)), all_columns(4), 0.0);
    REQUIRE(result.value == Approx(4.0 * 25.0));  // sum of |c|^2 over the batch, denominator 1
}

TEST_CASE("loss gradient matches finite differences on a mixed-kind model") {
    Rng rng(7);
    const Index k = 3;
    ops::RomModel model;
    model.dim = k;
    model.operators.push_back(ops::make_network_operator(
        ops::OperatorKind::Skew, ops::InputSignature::state(k), k, 2, 4, 11));
    model.operators.push_back(ops::make_network_operator(
        ops::OperatorKind::Spsd, ops::InputSignature::state(k), k, 2, 4, 12, -1.0, true));
    model.operators.push_back(ops::make_network_operator(
        ops::OperatorKind::SpsdPotential, ops::InputSignature::state(k), k, 2, 4, 13, 0.25, true));
    model.operators.push_back(
        ops::make_constant_operator(ops::OperatorKind::Vector, k, rng.normal_vec(k)));

    const Mat x = rng.normal_mat(k, 12);
    const Mat y = rng.normal_mat(k, 12);
    const auto ds = plain_dataset(x, y);
    const auto batch = all_columns(12);
    const auto result = train::loss(model, ds, batch, 1e-5);

    const Vec theta = model.get_params();
    const double h = 1e-6;
    for (Index j = 0; j < theta.size(); j += std::max<Index>(1, theta.size() / 40)) {
        Vec tp = theta, tm = theta;
        tp[j] += h;
        tm[j] -= h;
        auto mp = model, mm = model;
        mp.set_params(tp);
        mm.set_params(tm);
        const double fd = (train::loss_value(mp, ds, batch, 1e-5) -
                           train::loss_value(mm, ds, batch, 1e-5)) /
                          (2 * h);
        REQUIRE(result.grad[j] == Approx(fd).epsilon(1e-5).margin(1e-8));
    }
}

TEST_CASE("adam step basics") {
    train::AdamState state(3);
    Vec params = Vec::Ones(3);
    const Vec before = params;
    REQUIRE(train::adam_step(state, params, Vec::Zero(3), 1e-2));
    REQUIRE((params - before).norm() == 0.0);
    REQUIRE(state.step == 1);

    // first step with any finite gradient moves each coordinate by ~lr
    train::AdamState fresh(3);
    Vec g(3);
    g << 0.5, -2.0, 10.0;
    Vec p = Vec::Zero(3);
    REQUIRE(train::adam_step(fresh, p, g, 1e-2));
    for (Index i = 0; i < 3; ++i) REQUIRE(std::abs(p[i]) == Approx(1e-2).epsilon(1e-6));
    REQUIRE(p[0] < 0.0);
    REQUIRE(p[1] > 0.0);

    // non-finite gradients are rejected and leave everything untouched
    Vec bad = Vec::Constant(3, std::numeric_limits<double>::infinity());
    const Vec keep = p;
    REQUIRE_FALSE(train::adam_step(fresh, p, bad, 1e-2));
    REQUIRE((p - keep).norm() == 0.0);
    REQUIRE(fresh.step == 1);
}

TEST_CASE("adam walks monotonically downhill on a scalar quadratic") {
    // f(x) = x^2 / 2, grad = x; start at 5
    train::AdamState state(1);
    Vec x = Vec::Constant(1, 5.0);
    double prev = x[0];
    for (int i = 0; i < 200; ++i) {
        train::adam_step(state, x, Vec(x), 5e-2);
        REQUIRE(x[0] < prev);
        prev = x[0];
    }
    REQUIRE(x[0] < 1.0);
}

TEST_CASE("weight decay shrinks parameters once the residual is zero") {
    // perfect model: data gradient vanishes, leaving only the l2 penalty
    const Index k = 2;
    Rng rng(5);
    const Vec c = rng.normal_vec(k);
    ops::RomModel model;
    model.dim = k;
    model.operators.push_back(ops::make_constant_operator(ops::OperatorKind::Vector, k, c));
    const Mat x = rng.normal_mat(k, 4);
    const Mat y = c.replicate(1, 4);
    const auto ds = plain_dataset(x, y);
    const auto batch = all_columns(4);

    // at a zero-residual point the only gradient is 2*wd*theta, so one step
    // from any such point strictly shrinks the parameter norm
    for (int trial = 0; trial < 5; ++trial) {
        const Vec c_star = rng.normal_vec(k);
        ops::RomModel perfect;
        perfect.dim = k;
        perfect.operators.push_back(
            ops::make_constant_operator(ops::OperatorKind::Vector, k, c_star));
        const Mat y_star = c_star.replicate(1, 4);
        const auto ds_star = plain_dataset(x, y_star);
        const auto l = train::loss(perfect, ds_star, batch, 1e-3);
        Vec params = perfect.get_params();
        train::AdamState state(params.size());
        const double before = params.norm();
        train::adam_step(state, params, l.grad, 1e-3);
        REQUIRE(params.norm() < before);
    }
}

TEST_CASE("lbfgs reaches quasi-newton accuracy on an SPD quadratic") {
    Rng rng(11);
    Mat half = rng.normal_mat(5, 5);
    const Mat q = half * half.transpose() + 0.5 * Mat::Identity(5, 5);
    const Vec b = rng.normal_vec(5);
    train::Objective objective = [&](const Vec& x, Vec& grad) {
        grad = q * x - b;
        return 0.5 * x.dot(q * x) - b.dot(x);
    };
    Vec x = Vec::Zero(5);
    train::LbfgsOptions opt;
    opt.max_iters = 20;
    opt.grad_tol = 1e-10;
    const auto report = train::lbfgs_run(x, objective, opt);
    Vec grad(5);
    objective(x, grad);
    REQUIRE(grad.norm() < 1e-8);
    REQUIRE(report.iterations <= 20);
}

TEST_CASE("lbfgs takes no steps when already at the minimum") {
    train::Objective objective = [&](const Vec& x, Vec& grad) {
        grad = x;
        return 0.5 * x.squaredNorm();
    };
    Vec x = Vec::Zero(4);
    const auto report = train::lbfgs_run(x, objective);
    REQUIRE(report.iterations == 0);
    REQUIRE(x.norm() == 0.0);
}

TEST_CASE("lbfgs matches the closed-form optimum of the convex linear problem") {
    Rng rng(13);
    const Index k = 3, n = 40;
    const Mat a_true = rng.normal_mat(k, k);
    const Mat x = rng.normal_mat(k, n);
    const Mat y = a_true * x + 0.05 * rng.normal_mat(k, n);  // noise keeps loss* > 0

    auto model = constant_matrix_model(k, Vec::Zero(k * k));
    const auto ds = plain_dataset(x, y);
    const auto batch = all_columns(n);
    train::Objective objective = [&](const Vec& p, Vec& grad) {
        model.set_params(p);
        auto l = train::loss(model, ds, batch, 0.0);
        grad = std::move(l.grad);
        return l.value;
    };

    Vec params = model.get_params();
    train::LbfgsOptions opt;
    opt.max_iters = 200;
    train::lbfgs_run(params, objective, opt);
    Vec grad(params.size());
    const double reached = objective(params, grad);

    const auto closed = poly::fit(x, y, poly::Blocks::a(), 0.0);
    auto best = constant_matrix_model(k, Vec::Zero(k * k));
    Vec packed(k * k);
    for (Index i = 0; i < k; ++i)
        for (Index j = 0; j < k; ++j) packed[i * k + j] = (*closed.A)(i, j);
    best.set_params(packed);
    const double optimum = data_loss(best, x, y);

    REQUIRE(reached <= optimum * (1.0 + 1e-6) + 1e-15);
    REQUIRE(std::abs(reached - optimum) <= 1e-6 * optimum);
}

TEST_CASE("train returns the model unchanged when epochs is zero") {
    Rng rng(17);
    const Index k = 2;
    auto model = constant_matrix_model(k, rng.normal_vec(k * k));
    const Mat x = rng.normal_mat(k, 10);
    const Mat y = rng.normal_mat(k, 10);
    const auto split = reduction::split(10, 4);
    const auto ds = reduction::make_reduced_dataset(x, y, Mat(), split);
    train::TrainingSettings settings;
    settings.epochs = 0;
    const auto result = train::train(model, ds, split, settings);
    REQUIRE((result.model.get_params() - model.get_params()).norm() == 0.0);
    REQUIRE(result.history.empty());
}

TEST_CASE("training history is bit-identical across runs with a fixed seed") {
    Rng rng(19);
    const Index k = 2;
    const Mat x = rng.normal_mat(k, 25);
    const Mat y = rng.normal_mat(k, 25);
    const auto split = reduction::split(25, 7);
    const auto ds = reduction::make_reduced_dataset(x, y, Mat(), split);

    train::TrainingSettings settings;
    settings.epochs = 12;
    settings.batch_size = 5;
    settings.lbfgs_every = 6;
    settings.lbfgs_steps = 4;
    settings.seed = 7;

    auto model_a = constant_matrix_model(k, Vec::Zero(k * k));
    model_a.operators.push_back(ops::make_network_operator(
        ops::OperatorKind::Standard, ops::InputSignature::state(k), k, 1, 3, 99));
    auto model_b = model_a;

    const auto r1 = train::train(model_a, ds, split, settings);
    const auto r2 = train::train(model_b, ds, split, settings);
    REQUIRE(r1.history.size() == r2.history.size());
    for (std::size_t i = 0; i < r1.history.size(); ++i) {
        REQUIRE(r1.history[i].train_loss == r2.history[i].train_loss);
        REQUIRE(r1.history[i].val_loss == r2.history[i].val_loss);
        REQUIRE(r1.history[i].lr == r2.history[i].lr);
        REQUIRE(r1.history[i].phase == r2.history[i].phase);
    }
    REQUIRE((r1.model.get_params() - r2.model.get_params()).norm() == 0.0);
}

TEST_CASE("the learning-rate schedule is exactly lr0 times decay^epoch") {
    Rng rng(23);
    const Index k = 2;
    auto model = constant_matrix_model(k, Vec::Zero(k * k));
    const Mat x = rng.normal_mat(k, 12);
    const Mat y = rng.normal_mat(k, 12);
    const auto split = reduction::split(12, 3);
    const auto ds = reduction::make_reduced_dataset(x, y, Mat(), split);
    train::TrainingSettings settings;
    settings.epochs = 9;
    settings.batch_size = 4;
    settings.lbfgs_every = 100;
    settings.seed = 3;
    const auto result = train::train(model, ds, split, settings);
    for (const auto& row : result.history) {
        if (row.phase != "adam") continue;
        REQUIRE(row.lr == settings.learning_rate *
                              std::pow(settings.lr_decay, static_cast<double>(row.epoch)));
    }
}

TEST_CASE("hybrid training reaches the convex optimum within 1e-3 relative") {
    Rng rng(29);
    const Index k = 3, n = 60;
    const Mat a_true = rng.normal_mat(k, k);
    const Mat x = rng.normal_mat(k, n);
    const Mat y = a_true * x + 0.02 * rng.normal_mat(k, n);

    const auto split = reduction::split(n, 11);
    const auto ds = reduction::make_reduced_dataset(x, y, Mat(), split);

    train::TrainingSettings settings;
    settings.epochs = 60;
    settings.batch_size = 16;
    settings.learning_rate = 2e-3;
    settings.lbfgs_every = 30;
    settings.lbfgs_steps = 60;
    settings.weight_decay = 0.0;
    settings.seed = 5;

    auto model = constant_matrix_model(k, Vec::Zero(k * k));
    const auto result = train::train(model, ds, split, settings);

    // closed-form optimum of the same normalized training objective
    Mat xt(k, static_cast<Index>(split.train.size())), yt(k, static_cast<Index>(split.train.size()));
    for (std::size_t j = 0; j < split.train.size(); ++j) {
        xt.col(static_cast<Index>(j)) = ds.states.col(split.train[j]);
        yt.col(static_cast<Index>(j)) = ds.velocities.col(split.train[j]);
    }
    const auto closed = poly::fit(xt, yt, poly::Blocks::a(), 0.0);
    auto best = constant_matrix_model(k, Vec::Zero(k * k));
    Vec packed(k * k);
    for (Index i = 0; i < k; ++i)
        for (Index j = 0; j < k; ++j) packed[i * k + j] = (*closed.A)(i, j);
    best.set_params(packed);
    const double optimum = data_loss(best, xt, yt);
    const double reached = data_loss(result.model, xt, yt);
    REQUIRE(reached <= optimum * (1.0 + 1e-3));
}

TEST_CASE("a constant strictly-lower-triangular parameterization recovers a skew system") {
    Rng rng(31);
    const Index k = 4;
    const Vec s_true = rng.normal_vec(ops::strict_size(k));
    const Mat s_mat = ops::unpack_strict(s_true, k);
    const Mat a_true = s_mat - s_mat.transpose();
    const Index n = 50;
    const Mat x = rng.normal_mat(k, n);
    const Mat y = a_true * x;

    ops::RomModel model;
    model.dim = k;
    model.operators.push_back(ops::make_constant_operator(ops::OperatorKind::Skew, k,
                                                          Vec::Zero(ops::strict_size(k))));
    const auto split = reduction::split(n, 13);
    const auto ds = reduction::make_reduced_dataset(x, y, Mat(), split);
    train::TrainingSettings settings;
    settings.epochs = 3;
    settings.batch_size = 64;
    settings.lbfgs_every = 1;
    settings.lbfgs_steps = 80;
    settings.weight_decay = 0.0;
    settings.seed = 17;
    const auto result = train::train(model, ds, split, settings);

    // undo the normalization: learned raw parameters model y/s_v = A (x / s_x)
    const Vec learned = result.model.get_params() * (ds.scales.velocity / ds.scales.state);
    REQUIRE((learned - s_true).norm() <= 1e-4 * s_true.norm());
}

TEST_CASE("training aborts with history on non-finite losses") {
    Rng rng(37);
    const Index k = 2;
    auto model = constant_matrix_model(k, Vec::Zero(k * k));
    Mat x = rng.normal_mat(k, 10);
    Mat y = rng.normal_mat(k, 10);
    y(0, 3) = std::numeric_limits<double>::quiet_NaN();
    const auto split = reduction::split(10, 2);
    reduction::ReducedDataset ds;
    ds.states = x;
    ds.velocities = y;
    train::TrainingSettings settings;
    settings.epochs = 4;
    settings.batch_size = 10;
    settings.lbfgs_every = 100;
    const auto result = train::train(model, ds, split, settings);
    REQUIRE(result.aborted);
    REQUIRE(!result.history.empty());
}

TEST_CASE("single-member ensembles reproduce a plain training run") {
    Rng rng(41);
    const Index k = 2;
    const Mat x = rng.normal_mat(k, 20);
    const Mat y = rng.normal_mat(k, 20);

    train::TrainingSettings settings;
    settings.epochs = 6;
    settings.batch_size = 8;
    settings.lbfgs_every = 3;
    settings.lbfgs_steps = 3;
    settings.ensemble = 1;
    settings.seed = 23;

    auto builder = [&](std::uint64_t seed, const reduction::ReducedDataset& ds) {
        ops::RomModel m;
        m.dim = k;
        m.scales = ds.scales;
        m.operators.push_back(ops::make_network_operator(
            ops::OperatorKind::Standard, ops::InputSignature::state(k), k, 1, 4, seed));
        return m;
    };
    const auto ens_result = train::train_ensemble(builder, x, y, Mat(), settings);
    REQUIRE(ens_result.ensemble.members.size() == 1);

    const auto split = reduction::split(20, settings.seed);
    const auto ds = reduction::make_reduced_dataset(x, y, Mat(), split);
    const auto plain = train::train(builder(settings.seed, ds), ds, split, settings);
    REQUIRE((ens_result.ensemble.members[0].get_params() - plain.model.get_params()).norm() == 0.0);
}

TEST_CASE("ensemble averaging does not exceed the worst member on common data") {
    Rng rng(43);
    const Index k = 2;
    const Mat a_true = rng.normal_mat(k, k);
    const Mat x = rng.normal_mat(k, 40);
    const Mat y = a_true * x + 0.1 * rng.normal_mat(k, 40);

    train::TrainingSettings settings;
    settings.epochs = 10;
    settings.batch_size = 8;
    settings.lbfgs_every = 5;
    settings.lbfgs_steps = 10;
    settings.ensemble = 2;
    settings.seed = 29;

    auto builder = [&](std::uint64_t seed, const reduction::ReducedDataset& ds) {
        ops::RomModel m;
        m.dim = k;
        m.scales = ds.scales;
        m.operators.push_back(ops::make_network_operator(
            ops::OperatorKind::Standard, ops::InputSignature::state(k), k, 1, 6, seed));
        return m;
    };
    const auto result = train::train_ensemble(builder, x, y, Mat(), settings);

    // fresh common held-out samples
    const Mat xh = rng.normal_mat(k, 30);
    const Mat yh = a_true * xh + 0.1 * rng.normal_mat(k, 30);
    double worst_member = 0.0;
    for (const auto& m : result.ensemble.members) {
        double sse = 0.0;
        for (Index j = 0; j < xh.cols(); ++j)
            sse += (eval_model(m, xh.col(j)) - yh.col(j)).squaredNorm();
        worst_member = std::max(worst_member, sse);
    }
    double ens_sse = 0.0;
    for (Index j = 0; j < xh.cols(); ++j)
        ens_sse += (eval_ensemble(result.ensemble, xh.col(j)) - yh.col(j)).squaredNorm();
    REQUIRE(ens_sse <= worst_member + 1e-12);
}

TEST_CASE("history export writes the documented CSV schema") {
    std::vector<train::HistoryRow> history = {{0, 0.5, 0.6, 5e-3, "lbfgs"},
                                              {0, 0.4, 0.55, 5e-3, "adam"}};
    const std::string path = "test_history.csv";
    train::save_history(history, path);
    std::ifstream is(path);
    std::string line;
    std::getline(is, line);
    REQUIRE(line == "epoch,train_loss,val_loss,lr,phase");
    std::getline(is, line);
    REQUIRE(line.find("lbfgs") != std::string::npos);
    std::remove(path.c_str());
}
