#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mvsv/filter.hpp"
#include "mvsv/simulate.hpp"
#include "oracles.hpp"

using namespace mvsv;

namespace {

ModelSpec<double> scalar_spec(double delta, double beta) {
    return ModelSpec<double>::local_level(1, 1, delta, VectorXd::Constant(1, beta));
}

Priors<double> scalar_priors(double m0 = 0.0, double p0 = 1.0, double s0 = 1.0) {
    return {MatrixXd::Constant(1, 1, m0), MatrixXd::Constant(1, 1, p0), MatrixXd::Constant(1, 1, s0), 0.0};
}

FilterState<double> state_of(const Priors<double>& priors, double n) { return initial_state(priors, n); }

MatrixXd iid_normal(int rows, const MatrixXd& cov, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    const MatrixXd l = cov.llt().matrixL();
    MatrixXd out(rows, cov.rows());
    for (int i = 0; i < rows; ++i) {
        VectorXd v(cov.rows());
        for (auto& x : v) x = z(rng);
        out.row(i) = (l * v).transpose();
    }
    return out;
}

}  // namespace

TEST_CASE("predict: scalar example") {
    const auto spec = scalar_spec(0.5, 0.9);
    const auto pred = predict(state_of(scalar_priors(), 10.0), spec, 1);
    CHECK(evolution_covariance(spec, MatrixXd(MatrixXd::Ones(1, 1)), 1)(0, 0) == doctest::Approx(1.0));
    CHECK(pred.R(0, 0) == doctest::Approx(2.0));
    CHECK(pred.Q == doctest::Approx(3.0));
    CHECK(pred.forecast_dof == doctest::Approx(9.0));
    CHECK(pred.sigma_prior.dof == doctest::Approx(11.0));
    CHECK(forecast_volatility_mean(pred.sigma_prior, pred.forecast_dof)(0, 0) ==
          doctest::Approx(0.1 * 0.9 / 0.7).epsilon(1e-12));
}

TEST_CASE("predict: no inflation when delta = 1") {
    auto spec = ModelSpec<double>::local_level(1, 2, 1.0, VectorXd::Constant(1, 0.9));
    MatrixXd p(2, 2);
    p << 2.0, 0.3, 0.3, 1.0;
    const Priors<double> priors{MatrixXd::Zero(2, 1), p, MatrixXd::Ones(1, 1), 0.0};
    const auto pred = predict(state_of(priors, 10.0), spec, 1);
    CHECK((pred.R - p).norm() < 1e-15);
}

TEST_CASE("predict: forecast mean needs k > 2") {
    const InvWishartParams<double> prior{3.0, MatrixXd::Ones(1, 1)};
    CHECK_THROWS_AS(forecast_volatility_mean(prior, 2.0), Error);
    CHECK_THROWS_AS(posterior_volatility_mean(MatrixXd(MatrixXd::Ones(1, 1)), 2.0), Error);
}

TEST_CASE("update: scalar example") {
    const auto spec = scalar_spec(0.5, 0.9);
    auto state = state_of(scalar_priors(), 10.0);
    const auto step = update(state, VectorXd(VectorXd::Constant(1, 3.0)), spec, 1);
    CHECK(step.e(0) == doctest::Approx(3.0));
    CHECK(state.m(0, 0) == doctest::Approx(2.0));
    CHECK(state.P(0, 0) == doctest::Approx(2.0 / 3.0));
    CHECK(step.r(0) == doctest::Approx(1.0));
    CHECK(state.S(0, 0) == doctest::Approx(3.9));
    CHECK(posterior_volatility_mean(state.S, state.n)(0, 0) == doctest::Approx(0.4875));
    CHECK(state.n == 10.0);
}

TEST_CASE("update: a zero error only decays S") {
    VectorXd beta(2);
    beta << 0.8, 0.95;
    const auto spec = ModelSpec<double>::local_level(2, 1, 0.9, beta);
    MatrixXd s0(2, 2);
    s0 << 2.0, 0.5, 0.5, 1.0;
    const Priors<double> priors{MatrixXd::Constant(1, 2, 0.25), MatrixXd::Ones(1, 1), s0, 0.0};
    auto state = state_of(priors, compute_n(beta));
    const auto step = update(state, VectorXd(VectorXd::Constant(2, 0.25)), spec, 1);
    CHECK(step.e.norm() == 0.0);
    const VectorXd root = beta.cwiseSqrt();
    CHECK((state.S - root.asDiagonal() * s0 * root.asDiagonal()).norm() < 1e-15);
}

TEST_CASE("update: n is a fixed point for beta = (0.66, 0.9, 0.9, 0.66)") {
    VectorXd beta(4);
    beta << 0.66, 0.9, 0.9, 0.66;
    const auto sc = lme_style_config<double>(0.66, 0.9, 0.08);
    const double n = compute_n(beta);
    CHECK(std::abs(beta.mean() * n + 1.0 - n) < 1e-12 * n);
    const auto path = simulate(sc.spec, sc.priors, 20, std::uint64_t{3});
    const auto traj = run(sc.spec, sc.priors, path.observations);
    for (const auto& step : traj.steps) CHECK(step.sigma_post.dof == doctest::Approx(n + 8.0).epsilon(1e-12));
}

TEST_CASE("update rejects wrong sizes and missing components") {
    const auto spec = scalar_spec(0.5, 0.9);
    auto state = state_of(scalar_priors(), 10.0);
    CHECK_THROWS_AS(update(state, VectorXd(VectorXd::Constant(2, 1.0)), spec, 1), Error);
    CHECK_THROWS_AS(update(state, VectorXd(VectorXd::Constant(1, std::nan(""))), spec, 1), Error);
}

TEST_CASE("run: empty observations leave the priors in place") {
    const auto spec = scalar_spec(0.5, 0.9);
    const auto priors = scalar_priors(0.3, 2.0, 1.5);
    const auto traj = run(spec, priors, MatrixXd(0, 1));
    CHECK(traj.steps.empty());
    CHECK(traj.final.m(0, 0) == 0.3);
    CHECK(traj.final.P(0, 0) == 2.0);
    CHECK(traj.final.S(0, 0) == 1.5);
}

TEST_CASE("run: three scalar steps agree with an independent scalar recursion") {
    const std::vector<double> y{3.0, -1.2, 0.7};
    const auto ref = oracle::scalar_filter(y, 0.0, 1.0, 1.0, 0.5, 0.9);
    const auto traj = run(scalar_spec(0.5, 0.9), scalar_priors(), MatrixXd(Eigen::Map<const VectorXd>(y.data(), 3)));
    REQUIRE(traj.steps.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& s = traj.steps[i];
        CHECK(s.f(0) == doctest::Approx(ref[i].f).epsilon(1e-13));
        CHECK(s.Q == doctest::Approx(ref[i].Q).epsilon(1e-13));
        CHECK(s.e(0) == doctest::Approx(ref[i].e).epsilon(1e-13));
        CHECK(s.r(0) == doctest::Approx(ref[i].r).epsilon(1e-13));
        CHECK(s.sigma_post.scale(0, 0) == doctest::Approx(ref[i].S).epsilon(1e-13));
    }
    CHECK(traj.final.m(0, 0) == doctest::Approx(ref.back().m).epsilon(1e-13));
    CHECK(traj.final.P(0, 0) == doctest::Approx(ref.back().P).epsilon(1e-13));
}

TEST_CASE("run: 333 steps in four dimensions keep every invariant") {
    const auto sc = lme_style_config<double>(0.9, 0.95);
    const auto path = simulate(sc.spec, sc.priors, 333, std::uint64_t{11});
    const auto traj = run(sc.spec, sc.priors, path.observations);
    REQUIRE(traj.steps.size() == 333);
    for (const auto& s : traj.steps) {
        CHECK((s.r - s.e / s.Q).norm() <= 1e-12 * std::max(1.0, s.e.norm()));
        CHECK(s.Q >= 1.0);
        CHECK(is_spd(s.R));
        CHECK(is_spd(s.sigma_post.scale));
    }
    CHECK(traj.final.n == doctest::Approx(compute_n(sc.spec.vol_discounts)));
    const MatrixXd closed = closed_form_scale(traj);
    CHECK((closed - traj.final.S).norm() / traj.final.S.norm() < 1e-8);
}

TEST_CASE("constant branch: degrees of freedom grow by one per step") {
    const auto spec = ModelSpec<double>::local_level(2, 1, 0.9, VectorXd::Ones(2));
    Priors<double> priors{MatrixXd::Zero(1, 2), MatrixXd::Ones(1, 1), MatrixXd::Identity(2, 2), 5.0};
    const MatrixXd y = iid_normal(6, MatrixXd::Identity(2, 2), 1);
    const auto traj = run_constant_volatility(spec, priors, y);
    for (std::size_t i = 0; i < traj.steps.size(); ++i) {
        CHECK(traj.steps[i].sigma_post.dof == doctest::Approx(5.0 + double(i + 1) + 4.0));
        CHECK(traj.steps[i].forecast_dof == doctest::Approx(5.0 + double(i)));
    }
    CHECK_THROWS_AS(run_constant_volatility(ModelSpec<double>::local_level(2, 1, 0.9, VectorXd::Constant(2, 0.9)),
                                            priors, y),
                    Error);
}

TEST_CASE("constant branch: zero errors leave S at its prior") {
    const auto spec = ModelSpec<double>::local_level(2, 1, 0.9, VectorXd::Ones(2));
    MatrixXd s0(2, 2);
    s0 << 1.0, 0.2, 0.2, 3.0;
    const Priors<double> priors{MatrixXd::Zero(1, 2), MatrixXd::Ones(1, 1), s0, 4.0};
    const auto traj = run(spec, priors, MatrixXd(MatrixXd::Zero(5, 2)));
    for (const auto& s : traj.steps) CHECK(s.sigma_post.scale == s0);
}

TEST_CASE("mle_constant equals S_N/N in the S0 -> 0 limit") {
    const auto spec = ModelSpec<double>::local_level(2, 1, 0.9, VectorXd::Ones(2));
    const Priors<double> priors{MatrixXd::Zero(1, 2), MatrixXd::Ones(1, 1), MatrixXd::Identity(2, 2) * 1e-12, 0.0};
    MatrixXd cov(2, 2);
    cov << 1.0, 0.4, 0.4, 0.5;
    const MatrixXd y = iid_normal(40, cov, 2);
    const auto traj = run(spec, priors, y);
    const MatrixXd mle = mle_constant(traj);
    CHECK((traj.final.S / 40.0 - mle).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((mle - mle.transpose()).norm() < 1e-12);

    // Same estimator from a time-varying spec: e, r and Q do not involve beta.
    auto tv = spec;
    tv.vol_discounts = VectorXd::Constant(2, 0.9);
    CHECK((mle_constant(tv, priors, y) - mle).norm() < 1e-14);
}

TEST_CASE("mle_constant of a single scalar observation is e^2/Q") {
    const auto traj = run(scalar_spec(0.5, 1.0), scalar_priors(), MatrixXd(MatrixXd::Constant(1, 1, 3.0)));
    CHECK(mle_constant(traj)(0, 0) == doctest::Approx(9.0 / 3.0));
    CHECK_THROWS_AS(mle_constant(run(scalar_spec(0.5, 1.0), scalar_priors(), MatrixXd(0, 1))), Error);
}

TEST_CASE("constant branch is consistent for a known covariance") {
    MatrixXd cov(2, 2);
    cov << 1.0, 0.8, 0.8, 1.0;
    const MatrixXd y = iid_normal(50, cov, 20240101);
    const auto spec = ModelSpec<double>::local_level(2, 1, 1.0, VectorXd::Ones(2));
    const Priors<double> priors{MatrixXd::Zero(1, 2), MatrixXd::Constant(1, 1, 1000.0),
                                MatrixXd::Identity(2, 2) * 1e-6, 0.0};
    const auto traj = run(spec, priors, y);
    const MatrixXd est = traj.final.S / (traj.final.n - 2.0);
    CHECK(((est - cov).array().abs() / cov.array().abs()).maxCoeff() < 0.3);
}

TEST_CASE("linear_transform: identity keeps the trajectory") {
    const auto spec = ModelSpec<double>::local_level(2, 1, 0.9, VectorXd::Constant(2, 0.9));
    const Priors<double> priors{MatrixXd::Zero(1, 2), MatrixXd::Ones(1, 1), MatrixXd::Identity(2, 2), 0.0};
    const MatrixXd y = iid_normal(30, MatrixXd::Identity(2, 2), 4);
    const auto res = linear_transform(spec, priors, y, MatrixXd(MatrixXd::Identity(2, 2)));
    CHECK(res.exact);
    CHECK(res.max_deviation < 1e-14);
    CHECK(res.marginal_n == doctest::Approx(10.0));
}

TEST_CASE("linear_transform: selecting a coordinate reproduces the (1,1) entry") {
    const auto spec = ModelSpec<double>::local_level(2, 1, 0.9, VectorXd::Constant(2, 0.9));
    MatrixXd s0(2, 2);
    s0 << 1.0, 0.3, 0.3, 2.0;
    const Priors<double> priors{MatrixXd::Zero(1, 2), MatrixXd::Ones(1, 1), s0, 0.0};
    MatrixXd cov(2, 2);
    cov << 1.0, 0.5, 0.5, 2.0;
    const MatrixXd y = iid_normal(60, cov, 5);
    MatrixXd a(1, 2);
    a << 1.0, 0.0;
    const auto res = linear_transform(spec, priors, y, a);
    for (std::size_t i = 0; i < res.original.steps.size(); ++i) {
        const double full = res.original.steps[i].sigma_post.scale(0, 0);
        CHECK(std::abs(res.transformed.steps[i].sigma_post.scale(0, 0) - full) <= 1e-10 * full);
    }
    CHECK(res.marginal_n == doctest::Approx(10.0 + 2.0));
    CHECK(res.marginal_dof == doctest::Approx(10.0 + 2.0 * (2 - 1) + 2.0));
}

TEST_CASE("linear_transform: rank checks and non-scalar beta warning") {
    const auto spec = ModelSpec<double>::local_level(2, 1, 0.9, VectorXd::Constant(2, 0.9));
    const Priors<double> priors{MatrixXd::Zero(1, 2), MatrixXd::Ones(1, 1), MatrixXd::Identity(2, 2), 0.0};
    const MatrixXd y = iid_normal(10, MatrixXd::Identity(2, 2), 6);
    MatrixXd a(2, 2);
    a << 1.0, 2.0, 2.0, 4.0;
    try {
        linear_transform(spec, priors, y, a);
        FAIL("expected RankDeficient");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::kRankDeficient);
    }
    VectorXd beta(2);
    beta << 0.85, 0.95;
    auto hetero = spec;
    hetero.vol_discounts = beta;
    const auto res = linear_transform(hetero, priors, y, MatrixXd(MatrixXd::Identity(2, 2)));
    CHECK_FALSE(res.exact);
    CHECK(res.warnings.size() == 1);
}

TEST_CASE("local-level model depends on the second state discount only through unobserved entries") {
    // F = (1, 0)', G = I: the observed level uses delta_1 alone.
    auto two = ModelSpec<double>::local_level(2, 2, 0.3, VectorXd::Constant(2, 0.9));
    two.state_discounts << 0.3, 0.85;
    auto single = two;
    single.state_discounts << 0.3, 0.3;
    const Priors<double> priors{MatrixXd::Zero(2, 2), MatrixXd::Identity(2, 2) * 1000.0,
                                MatrixXd::Identity(2, 2), 0.0};
    const MatrixXd y = iid_normal(200, MatrixXd::Identity(2, 2), 8);
    const auto a = run(two, priors, y);
    const auto b = run(single, priors, y);
    for (std::size_t i = 0; i < a.steps.size(); ++i) {
        CHECK((a.steps[i].f - b.steps[i].f).norm() < 1e-10);
        CHECK(std::abs(a.steps[i].Q - b.steps[i].Q) < 1e-10 * b.steps[i].Q);
        CHECK((a.steps[i].sigma_post.scale - b.steps[i].sigma_post.scale).norm() <
              1e-10 * b.steps[i].sigma_post.scale.norm());
    }
    CHECK((a.final.m - b.final.m).norm() < 1e-10);
    CHECK(std::abs(a.final.P(0, 0) - b.final.P(0, 0)) < 1e-10);
    CHECK(std::abs(a.final.P(0, 1) - b.final.P(0, 1)) < 1e-10);
}

TEST_CASE("filter runs in long double") {
    using L = long double;
    using ML = Matrix<L>;
    const auto spec = ModelSpec<L>::local_level(1, 1, 0.5L, Vector<L>::Constant(1, 0.9L));
    const Priors<L> priors{ML::Zero(1, 1), ML::Ones(1, 1), ML::Ones(1, 1), 0.0L};
    const auto traj = run(spec, priors, ML(ML::Constant(1, 1, 3.0L)));
    CHECK(static_cast<double>(traj.final.S(0, 0)) == doctest::Approx(3.9));
}
