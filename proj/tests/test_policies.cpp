#include <doctest.h>

#include <cmath>

#include "dream/policies.hpp"
#include "dream/rng.hpp"

using namespace dream;

namespace {

// Arm state whose coefficients equal the given vector (single informative
// observation against omega spread over a scaled basis would distort; easier
// to drive means directly by fitting many exact observations).
ArmState fitted_arm(const Vec& beta, int n = 400) {
    ArmState s(beta.size(), 1.0);
    Rng rng(99);
    for (int i = 0; i < n; ++i) {
        Vec x(beta.size());
        x[0] = 1.0;
        for (std::size_t j = 1; j < x.size(); ++j) x[j] = rng.uniform(-1.0, 1.0);
        s.update(x, dot(x, beta));
    }
    return s;
}

} // namespace

TEST_CASE("greedy_action follows strict inequality with ties to 0") {
    ArmState lo = fitted_arm({1.0, 0.0});
    ArmState hi = fitted_arm({2.0, 0.0});
    const Vec f{1.0, 0.0};
    CHECK(greedy_action(lo, hi, f) == 1);
    CHECK(greedy_action(hi, lo, f) == 0);

    ArmState a(2, 1.0), b(2, 1.0); // both empty: exact tie
    CHECK(greedy_action(a, b, f) == 0);
}

TEST_CASE("select_ucb trades mean against width") {
    // arm 0: mean 1.0 sd 0.5; arm 1: mean 1.1 sd 0.2 at the probe point
    // realized via omega-scaled fresh arms is fiddly; check the rule on
    // constructed states instead: empty arms with different omega give
    // different widths and zero means.
    PolicySpec spec;
    spec.algorithm = Algorithm::Ucb;

    ArmState a0(2, 1.0); // sd 1 at e1
    ArmState a1(2, 4.0); // sd 0.5 at e1
    const Vec f{1.0, 0.0};
    spec.ucb_c = 1.0;
    Decision d = select_ucb(a0, a1, f, 5, spec);
    CHECK(d.action == 0); // 0 + 1*1 > 0 + 1*0.5
    CHECK(d.greedy_action == 0);

    spec.ucb_c = 0.0; // zero bonus reduces to the greedy rule
    ArmState g0 = fitted_arm({1.0, 0.3});
    ArmState g1 = fitted_arm({1.1, -0.2});
    Rng rng(7);
    for (int i = 0; i < 50; ++i) {
        const Vec probe{1.0, rng.uniform(-1.0, 1.0)};
        CHECK(select_ucb(g0, g1, probe, 10, spec).action == greedy_action(g0, g1, probe));
    }
}

TEST_CASE("select_ucb arithmetic comparison") {
    // scores (1.05, 1.12) from means (1.0, 1.1) and sds (0.5, 0.2) at c=0.1
    const double s0 = 1.0 + 0.1 * 0.5;
    const double s1 = 1.1 + 0.1 * 0.2;
    CHECK(s1 > s0);
    const double t0 = 1.0 + 1.0 * 0.5;
    const double t1 = 1.1 + 1.0 * 0.2;
    CHECK(t0 > t1); // c=1 flips the choice to arm 0
}

TEST_CASE("select_ts reduces to greedy at rho zero") {
    PolicySpec spec;
    spec.algorithm = Algorithm::Ts;
    spec.ts_rho = 0.0;
    ArmState a0 = fitted_arm({1.0, 0.5});
    ArmState a1 = fitted_arm({0.8, -0.4});
    Rng rng(5);
    for (int i = 0; i < 50; ++i) {
        const Vec f{1.0, rng.uniform(-1.0, 1.0)};
        CHECK(select_ts(a0, a1, f, spec, rng).action == greedy_action(a0, a1, f));
    }
}

TEST_CASE("select_ts is symmetric on fresh arms") {
    PolicySpec spec;
    spec.algorithm = Algorithm::Ts;
    spec.ts_rho = 2.0;
    ArmState a0(2, 1.0), a1(2, 1.0);
    Rng rng(31);
    int ones = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) ones += select_ts(a0, a1, {1.0, 0.5}, spec, rng).action;
    CHECK(std::abs(static_cast<double>(ones) / n - 0.5) < 0.02);
}

TEST_CASE("select_ts action sequence is reproducible for a fixed seed") {
    PolicySpec spec;
    spec.algorithm = Algorithm::Ts;
    spec.ts_rho = 2.0;
    ArmState a0 = fitted_arm({1.0, 0.2});
    ArmState a1 = fitted_arm({1.0, -0.2});
    auto run = [&](std::uint64_t seed) {
        Rng rng(seed);
        std::vector<int> actions;
        Rng ctx(17);
        for (int i = 0; i < 20; ++i) {
            const Vec f{1.0, ctx.uniform(-1.0, 1.0)};
            actions.push_back(select_ts(a0, a1, f, spec, rng).action);
        }
        return actions;
    };
    const std::vector<int> first = run(1234);
    CHECK(first == run(1234));
    // golden sequence recorded from the first verified run
    const std::vector<int> golden{0, 1, 1, 0, 1, 1, 0, 1, 1, 0, 1, 1, 1, 1, 1, 0, 0, 1, 0, 0};
    CHECK(first == golden);
}

TEST_CASE("select_eg frequencies match the schedule") {
    PolicySpec spec;
    spec.algorithm = Algorithm::Eg;
    ArmState a0 = fitted_arm({1.0, 0.0});
    ArmState a1 = fitted_arm({2.0, 0.0}); // greedy is always arm 1
    const Vec f{1.0, 0.0};

    // eps = 0: always greedy
    spec.eg_eps = {1e-300, 0.0};
    Rng rng(41);
    for (int i = 0; i < 200; ++i) CHECK(select_eg(a0, a1, f, 3, spec, rng).action == 1);

    // eps = 1: uniform actions
    spec.eg_eps = {1.0, 0.0};
    int ones = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) ones += select_eg(a0, a1, f, 3, spec, rng).action;
    CHECK(std::abs(static_cast<double>(ones) / n - 0.5) < 0.02);

    // eps = 0.2: exploration events (action != greedy) at rate eps/2
    spec.eg_eps = {0.2, 0.0};
    int explored = 0;
    for (int i = 0; i < n; ++i)
        explored += select_eg(a0, a1, f, 3, spec, rng).action == 1 ? 0 : 1;
    CHECK(std::abs(static_cast<double>(explored) / n - 0.1) < 0.01);
}

TEST_CASE("select_eg validates the schedule value") {
    PolicySpec spec;
    spec.algorithm = Algorithm::Eg;
    spec.eg_eps = {1.5, 0.0};
    ArmState a0(2, 1.0), a1(2, 1.0);
    Rng rng(1);
    CHECK_THROWS_AS(select_eg(a0, a1, {1.0, 0.0}, 1, spec, rng), std::invalid_argument);
}

TEST_CASE("clipping_guard forces the starved arm") {
    PolicySpec spec;
    spec.clipping = {ClippingSchedule::Kind::Constant, 0.01};
    DesignGrams grams(2);
    Rng rng(61);
    // all prior pulls on arm 1
    for (int t = 1; t <= 20; ++t) {
        const Vec x{1.0, rng.uniform(-1.0, 1.0)};
        grams.add_context(x);
        grams.commit_action(x, 1);
    }
    Decision proposed{1, 1, false, false};
    const Decision forced = clipping_guard(grams, proposed, 20, spec);
    CHECK(forced.action == 0);
    CHECK(forced.forced_by_clipping);

    // p = 0 never forces
    spec.clipping = {ClippingSchedule::Kind::Constant, 0.0};
    const Decision untouched = clipping_guard(grams, proposed, 20, spec);
    CHECK(untouched.action == 1);
    CHECK_FALSE(untouched.forced_by_clipping);
}

TEST_CASE("clipping_guard leaves balanced histories alone") {
    PolicySpec spec;
    spec.clipping = {ClippingSchedule::Kind::Constant, 0.01};
    DesignGrams grams(2);
    Rng rng(62);
    for (int t = 1; t <= 40; ++t) {
        const Vec x{1.0, rng.uniform(-1.0, 1.0)};
        grams.add_context(x);
        grams.commit_action(x, t % 2);
    }
    Decision proposed{0, 0, false, false};
    const Decision d = clipping_guard(grams, proposed, 40, spec);
    CHECK(d.action == 0);
    CHECK_FALSE(d.forced_by_clipping);
}

TEST_CASE("schedules and validation") {
    EgSchedule eg{0.1, 0.4};
    CHECK(eg.at(32) == doctest::Approx(0.1 * std::pow(32.0, -0.4)));

    ClippingSchedule cs{ClippingSchedule::Kind::SqrtLogOverT, 0.5};
    CHECK(cs.at(1) == 0.0);
    CHECK(cs.at(100) == doctest::Approx(std::sqrt(0.5 * std::log(100.0) / 100.0)));
    // p_t * sqrt(t) is nondecreasing for this schedule
    double prev = 0.0;
    for (long t = 1; t <= 2000; t += 7) {
        const double v = cs.at(t) * std::sqrt(static_cast<double>(t));
        CHECK(v >= prev - 1e-12);
        prev = v;
    }

    PolicySpec bad;
    bad.algorithm = Algorithm::Eg;
    bad.eg_eps = {2.0, 0.0};
    CHECK_THROWS_AS(bad.validate(100), std::invalid_argument);

    PolicySpec negc;
    negc.algorithm = Algorithm::Ucb;
    negc.ucb_c = -1.0;
    CHECK_THROWS_AS(negc.validate(100), std::invalid_argument);
}
