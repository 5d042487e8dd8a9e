#include "riskgauge/invcp.hpp"
#include "riskgauge/rng.hpp"
#include "riskgauge/shift.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

using namespace riskgauge;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

PointMassSet masses(std::vector<double> lo, std::vector<double> hi, std::vector<double> p, double tail) {
    PointMassSet pms;
    pms.lo = std::move(lo);
    pms.hi = std::move(hi);
    pms.p = std::move(p);
    pms.tail = tail;
    return pms;
}

// Independent test-side route: quantiles straight from the CDF definition, scanned
// over every mass level at which either endpoint can move.
double cdf_hi(const PointMassSet& pms, double alpha) {
    std::vector<double> c;
    for (std::size_t i = 0; i < pms.size(); ++i)
        if (pms.p[i] > 0) c.push_back(pms.hi[i]);
    std::sort(c.begin(), c.end());
    for (double v : c) {
        double f = 0;
        for (std::size_t i = 0; i < pms.size(); ++i)
            if (pms.hi[i] <= v) f += pms.p[i];
        if (f >= 1.0 - alpha - 1e-12) return v;
    }
    return kInf;
}
double cdf_lo(const PointMassSet& pms, double alpha) {
    std::vector<double> c;
    for (std::size_t i = 0; i < pms.size(); ++i)
        if (pms.p[i] > 0) c.push_back(pms.lo[i]);
    std::sort(c.rbegin(), c.rend());
    for (double v : c) {
        double f = 0;
        for (std::size_t i = 0; i < pms.size(); ++i)
            if (pms.lo[i] >= v) f += pms.p[i];
        if (f >= 1.0 - alpha - 1e-12) return v;
    }
    return -kInf;
}
double brute_force_alpha(const PointMassSet& pms, double a_minus, double a_plus) {
    std::vector<double> levels{0.0, 1.0};
    for (std::size_t j = 0; j < pms.size(); ++j) {
        double up = pms.tail, down = pms.tail;
        for (std::size_t i = 0; i < pms.size(); ++i) {
            if (pms.hi[i] > pms.hi[j]) up += pms.p[i];
            if (pms.lo[i] < pms.lo[j]) down += pms.p[i];
        }
        levels.push_back(up);
        levels.push_back(down);
    }
    std::sort(levels.begin(), levels.end());
    for (double a : levels) {
        a = std::min(a, 1.0);
        if (cdf_lo(pms, a) >= a_minus && cdf_hi(pms, a) <= a_plus) return a;
    }
    return 1.0;
}

PointMassSet random_pms(Rng& rng, std::size_t n, int structure, bool weighted) {
    std::vector<double> w(n);
    for (auto& v : w) v = weighted ? rng.uniform() * 2.0 : 1.0;
    const auto nw = normalized_weights(w, weighted ? rng.uniform() * 2.0 : 1.0);
    PointMassSet pms;
    pms.p = nw.p;
    pms.tail = nw.tail;
    const double mu = rng.normal(85, 20);
    std::vector<double> fold(5);
    for (auto& f : fold) f = mu + rng.normal(0, 2);
    for (std::size_t i = 0; i < n; ++i) {
        const double c = structure == 0 ? mu : structure == 1 ? mu + rng.normal(0, 2) : fold[i % 5];
        const double s = std::abs(rng.normal(0, 6));
        pms.lo.push_back(c - s);
        pms.hi.push_back(c + s);
    }
    return pms;
}
} // namespace

TEST_CASE("interval endpoints") {
    const std::vector<double> x{1.0, 2.0};
    auto e = interval_endpoints(FixedTau{10}, x, 85);
    CHECK(e.a_minus == 75);
    CHECK(e.a_plus == 95);
    e = interval_endpoints(RelativeTau{0.175}, x, 100);
    CHECK(e.a_minus == doctest::Approx(82.5));
    CHECK(e.a_plus == doctest::Approx(117.5));
    e = interval_endpoints(RelativeTau{0.1}, x, -10);
    CHECK(e.a_minus == doctest::Approx(-11));
    CHECK(e.a_plus == doctest::Approx(-9));
    CHECK_THROWS_AS(interval_endpoints(RelativeTau{0.1}, x, 0.0), InvalidInterval);
    CHECK_THROWS_AS(interval_endpoints(FixedTau{0.0}, x, 1.0), InvalidInterval);

    const CustomInterval asym{[](std::span<const double> p, double mu) { return std::pair{mu - p[0], mu + 2 * p[1]}; }};
    e = interval_endpoints(asym, x, 5);
    CHECK(e.a_minus == 4);
    CHECK(e.a_plus == 9);
    const CustomInterval inverted{[](std::span<const double>, double mu) { return std::pair{mu + 1, mu - 1}; }};
    CHECK_THROWS_AS(interval_endpoints(inverted, x, 5), InvalidInterval);
}

TEST_CASE("alpha_xz worked examples") {
    const auto three = masses({-1, -2, -5}, {1, 2, 5}, {0.25, 0.25, 0.25}, 0.25);
    auto s = alpha_xz(three, -3, 3);
    CHECK(s.alpha == doctest::Approx(0.5));
    CHECK(s.feasible);
    CHECK(alpha_xz_oracle(three, -3, 3).alpha == doctest::Approx(0.5));
    CHECK(brute_force_alpha(three, -3, 3) == doctest::Approx(0.5));
    // The next level down, 0.25, gives [-5, 5], which does not fit.
    CHECK_FALSE(predict_interval(three, 0.25).lo >= -3);

    const double third = 1.0 / 3.0;
    const auto two = masses({-1, -2}, {1, 2}, {third, third}, third);
    CHECK(alpha_xz(two, -5, 5).alpha == doctest::Approx(third));
    CHECK(alpha_xz_oracle(two, -5, 5).alpha == doctest::Approx(third));

    s = alpha_xz(three, -0.5, 0.5);
    CHECK(s.alpha == 1.0);
    CHECK_FALSE(s.feasible);
    const auto o = alpha_xz_oracle(three, -0.5, 0.5);
    CHECK(o.alpha == 1.0);
    CHECK_FALSE(o.feasible);

    // Everything feasible: smallest achievable level is the tail mass.
    CHECK(alpha_xz(three, -1e9, 1e9).alpha == doctest::Approx(0.25));
    CHECK(alpha_xz_oracle(three, -1e9, 1e9).alpha == doctest::Approx(0.25));

    CHECK_THROWS_AS(alpha_xz(three, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(alpha_xz_oracle(three, 2, 1), std::invalid_argument);
}

TEST_CASE("closed form, oracle and brute force agree on random configurations") {
    Rng rng(2024);
    for (int rep = 0; rep < 1500; ++rep) {
        const auto pms = random_pms(rng, 1 + rng.below(50), static_cast<int>(rng.below(3)), rng.below(3) != 0);
        const double center = rng.normal(85, 20);
        const double half = std::abs(rng.normal(0, 10)) + 1e-3;
        const double skew = rng.normal(0, 3);
        const double a_minus = center - half + skew, a_plus = center + half + skew;
        const auto fast = alpha_xz(pms, a_minus, a_plus);
        const auto oracle = alpha_xz_oracle(pms, a_minus, a_plus);
        CAPTURE(rep);
        CHECK(std::abs(fast.alpha - oracle.alpha) < 1e-12);
        CHECK(fast.feasible == oracle.feasible);
        CHECK(std::abs(fast.alpha - brute_force_alpha(pms, a_minus, a_plus)) < 1e-9);
        CHECK((fast.alpha >= 0.0 && fast.alpha <= 1.0));
    }
}

TEST_CASE("boundary ties: a mass exactly on an endpoint counts as inside") {
    const auto pms = masses({-1, -2, -5}, {1, 2, 5}, {0.25, 0.25, 0.25}, 0.25);
    CHECK(alpha_xz(pms, -2, 2).alpha == doctest::Approx(0.5));
    CHECK(alpha_xz_oracle(pms, -2, 2).alpha == doctest::Approx(0.5));
    CHECK(alpha_xz(pms, -5, 5).alpha == doctest::Approx(0.25));
    CHECK(alpha_xz_oracle(pms, -5, 5).alpha == doctest::Approx(0.25));
}

TEST_CASE("zero-mass points do not affect alpha") {
    const auto pms = masses({-1, -2, -5, -0.1}, {1, 2, 5, 0.1}, {0.25, 0.25, 0.25, 0.0}, 0.25);
    CHECK(alpha_xz(pms, -0.5, 0.5).alpha == 1.0);
    CHECK_FALSE(alpha_xz(pms, -0.5, 0.5).feasible);
    CHECK_FALSE(alpha_xz_oracle(pms, -0.5, 0.5).feasible);
    CHECK(alpha_xz(pms, -3, 3).alpha == doctest::Approx(0.5));
}

TEST_CASE("enlarging the interval never increases alpha") {
    Rng rng(31);
    for (int rep = 0; rep < 500; ++rep) {
        const auto pms = random_pms(rng, 1 + rng.below(40), static_cast<int>(rng.below(3)), true);
        const double c = rng.normal(85, 10), h = std::abs(rng.normal(0, 8)) + 0.01;
        const double grow_lo = std::abs(rng.normal(0, 3)), grow_hi = std::abs(rng.normal(0, 3));
        CHECK(alpha_xz(pms, c - h - grow_lo, c + h + grow_hi).alpha <= alpha_xz(pms, c - h, c + h).alpha);
    }
}

TEST_CASE("exchangeable fast path") {
    const std::vector<double> s{1, 2, 5};
    CHECK(alpha_exchangeable_fast(s, 3, FastMode::Literal) == doctest::Approx(0.25));
    CHECK(alpha_exchangeable_fast(s, 3, FastMode::Corrected) == doctest::Approx(0.5));
    const std::vector<double> big{4, 5};
    CHECK(alpha_exchangeable_fast(big, 3, FastMode::Corrected) == 1.0);
    CHECK(alpha_exchangeable_fast(big, 3, FastMode::Literal) == doctest::Approx(2.0 / 3.0));
    CHECK_THROWS_AS(alpha_exchangeable_fast(std::vector<double>{}, 3, FastMode::Literal), std::invalid_argument);

    // The corrected value equals the closed form at any center.
    Rng rng(17);
    for (int rep = 0; rep < 300; ++rep) {
        const auto n = 1 + rng.below(60);
        std::vector<double> scores(n);
        for (auto& v : scores) v = std::abs(rng.normal(0, 8));
        const double tau = std::abs(rng.normal(0, 10)) + 0.1;
        const double fast = alpha_exchangeable_fast(scores, tau, FastMode::Corrected);
        for (int t = 0; t < 3; ++t) {
            const double mu = rng.normal(0, 50);
            PointMassSet pms;
            const auto w = normalized_weights(std::vector<double>(n, 1.0), 1.0);
            pms.p = w.p;
            pms.tail = w.tail;
            for (double v : scores) {
                pms.lo.push_back(mu - v);
                pms.hi.push_back(mu + v);
            }
            CHECK(std::abs(alpha_xz(pms, mu - tau, mu + tau).alpha - fast) < 1e-12);
        }
    }
}

TEST_CASE("unweighted split with fixed tau is independent of x") {
    const auto data = generate_synthetic(300, SyntheticParams{}, 12);
    const auto [train, calib] = train_test_split(data, 0.5, 3);
    const auto model = fit(PolynomialSpec{3}, train);
    const auto state = SchemeState::split(model, calib);
    const auto holdout = generate_synthetic(100, SyntheticParams{}, 13).without_labels();
    const auto report = assess_risk(state, holdout, FixedTau{10}, model);
    for (const auto& s : report.samples) CHECK(s.alpha == report.samples.front().alpha);
    CHECK(std::abs(report.samples.front().alpha -
                   alpha_exchangeable_fast(state.scores(), 10, FastMode::Corrected)) < 1e-12);
    CHECK(report.alpha_I_m == doctest::Approx(report.samples.front().alpha).epsilon(1e-14));
}

TEST_CASE("assess_risk report semantics") {
    const auto data = generate_synthetic(200, SyntheticParams{}, 21);
    const auto [train, rest] = train_test_split(data, 0.5, 4);
    const auto model = fit(KnnSpec{5}, train);
    const auto loo = fit_loo(KnnSpec{5}, train);
    const auto state = SchemeState::jackknife_plus(loo, train);
    const auto holdout = rest.without_labels();

    const auto report = assess_risk(state, holdout, FixedTau{10}, model);
    CHECK(report.m() == holdout.size());
    CHECK(report.c == 2);
    CHECK(report.method == "jackknife_plus");
    double sum = 0.0;
    for (const auto& s : report.samples) sum += s.alpha;
    CHECK(std::abs(report.alpha_I_m - sum / static_cast<double>(report.m())) < 1e-15);
    CHECK(report.coverage_estimate == 1.0 - report.alpha_I_m);
    CHECK(report.conservative_coverage_bound == std::max(0.0, 1.0 - 2.0 * report.alpha_I_m));
    for (std::size_t j = 0; j < report.m(); ++j) {
        CHECK(report.samples[j].index == j);
        const auto direct = alpha_xz(state.point_masses(holdout.row(j)), report.samples[j].a_minus,
                                     report.samples[j].a_plus);
        CHECK(report.samples[j].alpha == direct.alpha);
    }

    const std::vector<std::size_t> one{3};
    const auto single = assess_risk(state, holdout.subset(one), FixedTau{10}, model);
    CHECK(single.alpha_I_m == report.samples[3].alpha);

    const std::vector<std::size_t> same(7, 5);
    const auto repeated = assess_risk(state, holdout.subset(same), FixedTau{10}, model);
    CHECK(repeated.alpha_I_m == doctest::Approx(report.samples[5].alpha).epsilon(1e-15));

    const auto parallel = assess_risk(state, holdout, FixedTau{10}, model, 4);
    CHECK(parallel.alpha_I_m == report.alpha_I_m);

    const auto j = to_json(report);
    CHECK(j.at("method") == "jackknife_plus");
    CHECK(j.at("m") == report.m());
    CHECK(j.at("samples").size() == report.m());
    CHECK(j.at("samples")[0].contains("feasible"));
}

TEST_CASE("assess_risk failure carries the holdout index") {
    Matrix x(4, 1);
    x << 1, 2, 3, 4;
    Vector y(4);
    y << 0, 0, 0, 0;
    const auto zero_model = fit(LinearSpec{}, Dataset(x, y));
    Vector yc(4);
    yc << 0.5, -0.5, 1.0, -1.0;
    const auto state = SchemeState::split(zero_model, Dataset(x, yc));
    Matrix hx(2, 1);
    hx << 1, 2;
    try {
        assess_risk(state, Dataset(hx), RelativeTau{0.1}, zero_model);
        FAIL("expected an invalid interval");
    } catch (const InvalidInterval& e) {
        CHECK(std::string(e.what()).find("holdout point 0") != std::string::npos);
    }
    Matrix wide(1, 2);
    wide << 1, 2;
    CHECK_THROWS_AS(assess_risk(state, Dataset(wide), FixedTau{1}, zero_model), std::invalid_argument);
}
