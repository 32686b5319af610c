#include "mte/expression.hpp"
#include "mte/numeric.hpp"
#include "mte/rng.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

using namespace mte;
using Catch::Matchers::WithinAbs;

TEST_CASE("solve_increasing finds roots to a few ulps")
{
    const auto f = [](double x) { return x * x * x; };
    const double r = numeric::solve_increasing(f, 2.0, 0.0, 2.0);
    CHECK_THAT(r, WithinAbs(std::cbrt(2.0), 1e-15));
    CHECK_THROWS_AS(numeric::solve_increasing(f, 20.0, 0.0, 2.0), ConvergenceError);
}

TEST_CASE("bracket_increasing expands until the target is enclosed")
{
    const auto f = [](double x) { return std::atan(x); };
    double lo = 0.0, hi = 0.0;
    numeric::bracket_increasing(f, 1.5, 0.0, 0.1, lo, hi);
    CHECK(f(lo) <= 1.5);
    CHECK(f(hi) >= 1.5);
}

TEST_CASE("integrate handles smooth, endpoint-singular and degenerate integrands")
{
    CHECK_THAT(numeric::integrate([](double x) { return std::exp(x); }, 0.0, 1.0, 1e-12), WithinAbs(std::exp(1.0) - 1.0, 1e-13));
    // The truncated node window drops O(1e-8) of an inverse square root singularity.
    CHECK_THAT(numeric::integrate([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0, 1e-10), WithinAbs(2.0, 2e-8));
    CHECK_THAT(numeric::integrate([](double x) { return std::log(x); }, 0.0, 1.0, 1e-10), WithinAbs(-1.0, 1e-9));
    CHECK(numeric::integrate([](double) { return 1.0; }, 1.0, 1.0) == 0.0);
    CHECK(numeric::integrate([](double) { return 1.0; }, 2.0, 1.0) == 0.0);
    const double a = 0.3, b = std::nextafter(std::nextafter(a, 1.0), 1.0);
    CHECK_THAT(numeric::integrate([](double) { return 2.0; }, a, b), WithinAbs(2.0 * (b - a), 1e-30));
}

TEST_CASE("integrate is exact enough for a step discontinuity placed at an endpoint")
{
    const auto step = [](double x) { return x < 0.4 ? 1.0 : 0.0; };
    CHECK_THAT(numeric::integrate(step, 0.0, 0.4, 1e-12), WithinAbs(0.4, 1e-14));
}

TEST_CASE("monotone interpolant preserves monotonicity and inverts")
{
    const std::vector<double> x{0, 1, 2, 3, 4}, y{0, 0.1, 0.1, 0.8, 1.0};
    numeric::MonotoneInterpolant f(x, y);
    double prev = -1.0;
    for (int i = 0; i <= 400; ++i) {
        const double v = f(0.01 * i);
        CHECK(v >= prev - 1e-15);
        prev = v;
    }
    CHECK_THAT(f(f.inverse(0.5)), WithinAbs(0.5, 1e-12));
    CHECK(f(-1.0) == 0.0);
    CHECK(f(9.0) == 1.0);
}

TEST_CASE("tabulated CDF reproduces a logistic law")
{
    std::vector<double> xs, F, dF;
    for (int i = -40; i <= 40; ++i) {
        const double x = 0.25 * i;
        const double p = 1.0 / (1.0 + std::exp(-x));
        xs.push_back(x);
        F.push_back(p);
        dF.push_back(p * (1.0 - p));
    }
    numeric::TabulatedCdf t(xs, F, dF);
    for (double x : {-3.3, -0.7, 0.0, 1.1, 4.9}) {
        const double p = 1.0 / (1.0 + std::exp(-x));
        CHECK_THAT(t.cdf(x), WithinAbs(p, 2e-4));
        CHECK_THAT(t.quantile(t.cdf(x)), WithinAbs(x, 1e-9));
    }
    CHECK(t.cdf(-50.0) > 0.0);
    CHECK(t.cdf(12.0) < 1.0);
}

TEST_CASE("KS statistic and critical value")
{
    std::vector<double> grid;
    for (int i = 0; i < 1000; ++i)
        grid.push_back((i + 0.5) / 1000.0);
    CHECK_THAT(numeric::ks_statistic(grid, [](double x) { return x; }), WithinAbs(0.0005, 1e-12));
    CHECK_THAT(numeric::ks_critical_value(100000, 0.01), WithinAbs(1.62762 / std::sqrt(100000.0), 1e-6));
}

TEST_CASE("seed mixing gives distinct reproducible streams")
{
    CHECK(mix_seed(1, 0) != mix_seed(1, 1));
    CHECK(mix_seed(1, 0) == mix_seed(1, 0));
    Rng a(5), b(5);
    for (int i = 0; i < 100; ++i) {
        const double u = a.uniform01();
        CHECK(u == b.uniform01());
        CHECK(u > 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("chunked loops do not depend on the worker count")
{
    auto run = [](unsigned threads) {
        std::vector<double> out(20000);
        for_each_chunk(out.size(), 1000, threads, [&](std::size_t c, std::size_t b, std::size_t e) {
            Rng r(mix_seed(9, c));
            for (std::size_t i = b; i < e; ++i)
                out[i] = r.uniform01();
        });
        return out;
    };
    CHECK(run(1) == run(4));
    CHECK_THROWS_AS(for_each_chunk(10, 2, 3, [](std::size_t, std::size_t, std::size_t) { throw DomainError("x"); }),
                    DomainError);
}

TEST_CASE("expressions parse, evaluate and print canonically")
{
    const auto e = expr::Expression::parse("1.2*z[0] - exp(v[1]) / 2 + log(y)");
    const double z[] = {2.0};
    const double v[] = {0.0, 0.5};
    CHECK_THAT(e.eval({z, v, std::numbers::e}), WithinAbs(2.4 - std::exp(0.5) / 2 + 1.0, 1e-15));
    CHECK(expr::Expression::parse(e.str()) == e);
    CHECK(e.z_refs() == std::set<int>{0});
    CHECK(e.v_refs() == std::set<int>{1});
    CHECK(e.uses_y());
    CHECK(expr::Expression::parse("-(3 - z[1])").str() == expr::Expression::parse(expr::Expression::parse("-(3 - z[1])").str()).str());
    CHECK_THROWS_AS(expr::Expression::parse("1 +"), ConfigError);
    CHECK_THROWS_AS(expr::Expression::parse("q[0]"), ConfigError);
}

TEST_CASE("affine forms are detected exactly")
{
    const auto a = expr::Expression::parse("2 - 1.2*v[2] + 0.4*v[0]").affine_in_v();
    REQUIRE(a);
    CHECK_THAT(a->constant, WithinAbs(2.0, 1e-15));
    CHECK_THAT(a->coef.at(2), WithinAbs(-1.2, 1e-15));
    CHECK_THAT(a->coef.at(0), WithinAbs(0.4, 1e-15));
    CHECK_FALSE(expr::Expression::parse("v[0]*v[2]").affine_in_v());
    CHECK_FALSE(expr::Expression::parse("exp(v[0])").affine_in_v());
}

TEST_CASE("mean and standard error")
{
    const std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
    const auto m = numeric::mean_and_se(xs);
    CHECK_THAT(m.mean, WithinAbs(2.5, 1e-15));
    CHECK_THAT(m.se, WithinAbs(std::sqrt(5.0 / 3.0 / 4.0), 1e-15));
}
