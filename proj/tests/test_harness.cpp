#include <doctest.h>

#include <cmath>

#include "dream/harness.hpp"
#include "dream/linalg.hpp"

using namespace dream;

namespace {

ExperimentConfig small_synthetic(Algorithm algo = Algorithm::Ucb) {
    ExperimentConfig c;
    c.env.kind = EnvConfig::Kind::Synthetic;
    c.policy.algorithm = algo;
    c.policy.burn_in = 20;
    c.T = 300;
    c.R = 4;
    c.checkpoints = {100, 300};
    c.workers = 1;
    return c;
}

bool records_equal(const InteractionRecord& a, const InteractionRecord& b) {
    return a.t == b.t && a.context == b.context && a.feature == b.feature &&
           a.action == b.action && a.reward == b.reward &&
           a.greedy_action == b.greedy_action && a.exploited == b.exploited &&
           a.kappa_hat == b.kappa_hat && a.mu_hat0 == b.mu_hat0 && a.mu_hat1 == b.mu_hat1 &&
           a.final_mu0 == b.final_mu0 && a.final_mu1 == b.final_mu1;
}

} // namespace

TEST_CASE("same seed gives bit-identical record streams") {
    const ExperimentConfig c = small_synthetic(Algorithm::Ts);
    const TrajectoryResult a = run_trajectory(c, 77);
    const TrajectoryResult b = run_trajectory(c, 77);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i)
        CHECK(records_equal(a.records[i], b.records[i]));
    REQUIRE(a.checkpoints.size() == b.checkpoints.size());
    for (std::size_t i = 0; i < a.checkpoints.size(); ++i) {
        CHECK(a.checkpoints[i].report.v_hat == b.checkpoints[i].report.v_hat);
        CHECK(a.checkpoints[i].report.sigma2_hat == b.checkpoints[i].report.sigma2_hat);
    }
}

TEST_CASE("burn-in alternates deterministically") {
    ExperimentConfig c = small_synthetic();
    c.policy.burn_in = 4;
    c.checkpoints = {300};
    const TrajectoryResult r = run_trajectory(c, 5);
    CHECK(r.records[0].action == 0);
    CHECK(r.records[1].action == 1);
    CHECK(r.records[2].action == 0);
    CHECK(r.records[3].action == 1);
    for (int i = 0; i < 4; ++i) CHECK(r.records[static_cast<std::size_t>(i)].forced_by_burn_in);
    CHECK_FALSE(r.records[4].forced_by_burn_in);
}

TEST_CASE("eg with constant eps one explores uniformly") {
    ExperimentConfig c = small_synthetic(Algorithm::Eg);
    c.policy.eg_eps = {1.0, 0.0};
    c.T = 2000;
    c.checkpoints = {2000};
    const TrajectoryResult r = run_trajectory(c, 8);
    long exploited = 0, total = 0;
    for (const auto& rec : r.records) {
        if (rec.t <= c.policy.burn_in) continue;
        ++total;
        exploited += rec.exploited ? 1 : 0;
    }
    CHECK(std::abs(static_cast<double>(exploited) / static_cast<double>(total) - 0.5) < 0.03);
}

TEST_CASE("records carry decision-time predictions and post-update kappa") {
    const ExperimentConfig c = small_synthetic();
    const TrajectoryResult r = run_trajectory(c, 9);
    for (const auto& rec : r.records) {
        CHECK(rec.exploited == (rec.action == rec.greedy_action));
        CHECK(rec.kappa_hat >= 1e-3);
        CHECK(rec.kappa_hat <= 0.5);
        CHECK(rec.greedy_action == (rec.mu_hat1 > rec.mu_hat0 ? 1 : 0));
        CHECK(rec.has_alt); // synthetic env runs the raw-linear shadow model
    }
}

TEST_CASE("clipping keeps both arms' designs above the threshold") {
    ExperimentConfig c = small_synthetic(Algorithm::Ucb);
    c.T = 500;
    c.checkpoints = {500};
    c.policy.clipping = {ClippingSchedule::Kind::Constant, 0.01};
    const TrajectoryResult r = run_trajectory(c, 10);
    DesignGrams grams(3);
    for (const auto& rec : r.records) {
        grams.add_context(rec.context);
        grams.commit_action(rec.context, rec.action);
        if (rec.t <= c.policy.burn_in) continue;
        const double td = static_cast<double>(rec.t);
        const double lam_tot = min_eigenvalue(grams.total) / td;
        for (int a = 0; a < 2; ++a) {
            const double lam_a = min_eigenvalue(grams.per_action[a]) / td;
            CHECK(lam_a >= 0.01 * lam_tot - 1e-12);
        }
    }
}

TEST_CASE("exploration frequency helper") {
    std::vector<InteractionRecord> recs;
    for (long t = 1; t <= 10; ++t) {
        InteractionRecord r;
        r.t = t;
        r.exploited = t % 2 == 0;
        recs.push_back(r);
    }
    CHECK(exploration_frequency(recs, 1, 10) == doctest::Approx(0.5));
    CHECK(exploration_frequency(recs, 2, 2) == doctest::Approx(0.0));
    CHECK_THROWS_AS(exploration_frequency(recs, 11, 12), std::invalid_argument);
}

TEST_CASE("aggregate_metrics coverage and the degenerate sd sentinel") {
    ValueReport in;
    in.v_hat = 3.0;
    in.ci_low = 2.9;
    in.ci_high = 3.1;
    in.sigma2_hat = 1.0;
    in.t_effective = 100;
    ValueReport out = in;
    out.ci_low = 3.05; // misses 3.0
    out.ci_high = 3.2;
    out.v_hat = 3.12;

    // all replications covering
    std::vector<ValueReport> reps{in, in, in};
    MetricsRow row = aggregate_metrics(100, Method::Dream, reps, 3.0);
    CHECK(row.coverage == doctest::Approx(1.0));

    // 2 of 4 covering
    std::vector<ValueReport> mixed{in, in, out, out};
    row = aggregate_metrics(100, Method::Dream, mixed, 3.0);
    CHECK(row.coverage == doctest::Approx(0.5));

    // identical replications: MC-SD 0 -> infinite ratio sentinel
    std::vector<ValueReport> twins{in, in};
    row = aggregate_metrics(100, Method::Dream, twins, 3.0);
    CHECK(std::isinf(row.se_mc_ratio));
}

TEST_CASE("monte_carlo emits every method at every checkpoint") {
    ExperimentConfig c = small_synthetic();
    c.R = 3;
    c.eval_policy_coefs = Vec{-1.0, 5.0, -3.0};
    const MonteCarloResult mc = monte_carlo(c);
    CHECK(mc.v_star == doctest::Approx(3.274128).epsilon(1e-3));
    for (long t : {100L, 300L})
        for (Method m : {Method::Dream, Method::DreamMuMis, Method::DreamKappaMis,
                         Method::AvgReward, Method::KnownPolicy}) {
            REQUIRE(mc.reports.count({t, m}) == 1);
            CHECK(mc.reports.at({t, m}).size() == 3);
        }
    CHECK(mc.rows.size() == 2 * 5);
}

TEST_CASE("monte_carlo is invariant to the worker count") {
    ExperimentConfig c = small_synthetic(Algorithm::Eg);
    c.R = 5;
    ExperimentConfig c2 = c;
    c2.workers = 2;
    const MonteCarloResult a = monte_carlo(c);
    const MonteCarloResult b = monte_carlo(c2);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].coverage == b.rows[i].coverage);
        CHECK(a.rows[i].mean_bias == b.rows[i].mean_bias);
        CHECK(a.rows[i].se_mc_ratio == b.rows[i].se_mc_ratio);
    }
}

TEST_CASE("sensitivity_sweep with a single p matches plain monte_carlo") {
    ExperimentConfig c = small_synthetic();
    c.R = 3;
    const auto swept = sensitivity_sweep(c, {0.01});
    const auto plain = monte_carlo(c).rows;
    REQUIRE(swept.size() == plain.size());
    for (std::size_t i = 0; i < swept.size(); ++i) {
        CHECK(swept[i].p == doctest::Approx(0.01));
        CHECK(swept[i].coverage == plain[i].coverage);
        CHECK(swept[i].mean_bias == plain[i].mean_bias);
    }
    CHECK_THROWS_AS(sensitivity_sweep(c, {1.5}), std::invalid_argument);
}

TEST_CASE("include_burn_in widens the estimator window") {
    ExperimentConfig c = small_synthetic();
    c.include_burn_in = true;
    c.checkpoints = {100};
    const TrajectoryResult r = run_trajectory(c, 12);
    for (const auto& cp : r.checkpoints)
        if (cp.method == Method::Dream) CHECK(cp.report.t_effective == 100);

    ExperimentConfig c2 = small_synthetic();
    c2.checkpoints = {100};
    const TrajectoryResult r2 = run_trajectory(c2, 12);
    for (const auto& cp : r2.checkpoints)
        if (cp.method == Method::Dream) CHECK(cp.report.t_effective == 80);
}

TEST_CASE("per-step variance mode runs and stays positive") {
    ExperimentConfig c = small_synthetic();
    c.variance_mode = VarianceMode::PerStep;
    c.checkpoints = {300};
    const TrajectoryResult r = run_trajectory(c, 13);
    for (const auto& cp : r.checkpoints)
        if (cp.method == Method::Dream) {
            CHECK(cp.report.sigma2_hat > 0.0);
            CHECK(std::isfinite(cp.report.sigma2_hat));
        }
}

TEST_CASE("uniform burn-in rule is seed-deterministic and mixes actions") {
    ExperimentConfig c = small_synthetic();
    c.policy.burn_in_rule = BurnInRule::Uniform;
    c.policy.burn_in = 40;
    const TrajectoryResult a = run_trajectory(c, 14);
    const TrajectoryResult b = run_trajectory(c, 14);
    int zeros = 0, ones = 0;
    for (int i = 0; i < 40; ++i) {
        CHECK(a.records[static_cast<std::size_t>(i)].action ==
              b.records[static_cast<std::size_t>(i)].action);
        (a.records[static_cast<std::size_t>(i)].action == 0 ? zeros : ones) += 1;
    }
    CHECK(zeros > 5);
    CHECK(ones > 5);
}

TEST_CASE("config validation names the offending key") {
    ExperimentConfig c = small_synthetic();
    c.R = 0;
    CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("reps"), std::invalid_argument);

    ExperimentConfig c2 = small_synthetic();
    c2.T = 10; // burn_in 20 >= T
    CHECK_THROWS_WITH_AS(c2.validate(), doctest::Contains("T0"), std::invalid_argument);

    ExperimentConfig c3 = small_synthetic();
    c3.checkpoints = {5}; // inside burn-in
    CHECK_THROWS_WITH_AS(c3.validate(), doctest::Contains("checkpoints"), std::invalid_argument);
}

TEST_CASE("reference_value for dataset environments is one") {
    ExperimentConfig c;
    c.env.kind = EnvConfig::Kind::SeaLike;
    c.T = 100;
    c.policy.burn_in = 10;
    c.checkpoints = {100};
    CHECK(reference_value(c) == 1.0);
}
