#include "mte/laws.hpp"
#include "oracle_values.hpp"
#include "support.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

using namespace mte;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

dist::ErrorVectorLaw gaussian_errors()
{
    return dist::ErrorVectorLaw({dist::UnivariateLaw::gaussian(0.0, 0.5), dist::UnivariateLaw::gaussian(1.0, 1.0),
                                 dist::UnivariateLaw::gaussian(-1.0, 1.0)});
}

} // namespace

TEST_CASE("univariate laws agree with their moments and quantiles")
{
    const auto g = dist::UnivariateLaw::gaussian(1.0, 4.0);
    CHECK_THAT(g.cdf(1.0), WithinAbs(0.5, 1e-15));
    CHECK_THAT(g.quantile(0.975), WithinAbs(1.0 + 2.0 * 1.959963984540054, 1e-12));
    CHECK_THAT(g.variance(), WithinAbs(4.0, 1e-15));

    const auto u = dist::UnivariateLaw::uniform(-5.0, 3.0);
    CHECK_THAT(u.cdf(-1.0), WithinAbs(0.5, 1e-15));
    CHECK_THAT(u.mean(), WithinAbs(-1.0, 1e-15));
    CHECK(u.lower() == -5.0);
    CHECK(u.upper() == 3.0);

    const auto l = dist::UnivariateLaw::logistic(0.0, 0.6);
    CHECK_THAT(l.cdf(0.6), WithinAbs(1.0 / (1.0 + std::exp(-1.0)), 1e-15));
    CHECK_THAT(l.variance(), WithinRel(0.36 * M_PI * M_PI / 3.0, 1e-14));

    const auto t = dist::UnivariateLaw::student_t(5.0, 0.5, 1.0);
    CHECK_THAT(t.cdf(0.5), WithinAbs(0.5, 1e-15));
    CHECK_THAT(t.variance(), WithinRel(5.0 / 3.0, 1e-14));

    for (const auto& law : {g, u, l, t})
        for (double p : {0.01, 0.3, 0.5, 0.77, 0.999})
            CHECK_THAT(law.cdf(law.quantile(p)), WithinAbs(p, 1e-12));
}

TEST_CASE("law parameters are validated")
{
    CHECK_THROWS_AS(dist::UnivariateLaw::gaussian(0.0, 0.0), DomainError);
    CHECK_THROWS_AS(dist::UnivariateLaw::uniform(1.0, 1.0), DomainError);
    CHECK_THROWS_AS(dist::UnivariateLaw::logistic(0.0, -1.0), DomainError);
    CHECK_THROWS_AS(dist::UnivariateLaw::student_t(1.0, 0.0, 1.0), DomainError);
    const auto g = dist::UnivariateLaw::gaussian(0.0, 1.0);
    CHECK_THROWS_AS(g.quantile(0.0), DomainError);
    CHECK_THROWS_AS(g.quantile(1.0), DomainError);
}

TEST_CASE("empirical laws fit their draws")
{
    Rng rng(3);
    std::vector<double> draws(200000);
    const auto g = dist::UnivariateLaw::gaussian(0.0, 1.0);
    for (auto& x : draws)
        x = g.sample(rng);
    const auto e = dist::UnivariateLaw::empirical(draws);
    for (double x : {-2.0, -0.5, 0.0, 1.0, 2.5})
        CHECK_THAT(e.cdf(x), WithinAbs(g.cdf(x), 5e-3));
    CHECK_THAT(e.mean(), WithinAbs(0.0, 1e-2));
}

TEST_CASE("Gaussian difference laws are closed form")
{
    const auto errors = gaussian_errors();
    const auto d = dist::difference_law(errors, 1, 2);
    CHECK(d.representation() == dist::DiffRepresentation::closed_form);
    CHECK_THAT(d.quantile(0.975), WithinAbs(oracle::gauss_diff_q975, 1e-12));
    CHECK(d.quantile_closed(0.0) == -numeric::kInf);
    CHECK(d.quantile_closed(1.0) == numeric::kInf);
    CHECK_THROWS_AS(d.quantile(1.0), DomainError);
}

TEST_CASE("numeric convolution matches the closed form and an independent quadrature")
{
    dist::DifferenceOptions opts;
    opts.force_numeric = true;
    const auto forced = dist::difference_law(gaussian_errors(), 1, 2, opts);
    CHECK(forced.representation() == dist::DiffRepresentation::numeric_convolution);
    CHECK_THAT(forced.quantile(0.975), WithinAbs(oracle::gauss_diff_q975, 1e-6));

    const dist::ErrorVectorLaw mixed({dist::UnivariateLaw::logistic(0.0, 0.6), dist::UnivariateLaw::student_t(5.0, 0.5, 1.0)});
    const auto d = dist::difference_law(mixed, 1, 0);
    CHECK(d.representation() == dist::DiffRepresentation::numeric_convolution);
    for (std::size_t i = 0; i < std::size(oracle::logistic_t_w); ++i)
        CHECK_THAT(d.cdf(oracle::logistic_t_w[i]), WithinAbs(oracle::logistic_t_cdf[i], 1e-6));
}

TEST_CASE("dependent errors use a fitted difference law")
{
    const auto spec = mte::config::build_spec([] {
        auto c = test::bundled_config("figure1");
        c.errors.kind = "multivariate_normal";
        c.errors.mean = {0.0, 1.0, -1.0};
        c.errors.covariance = {{0.5, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}};
        c.errors.components.clear();
        return c;
    }());
    CHECK_FALSE(spec.errors.independent());
    CHECK_THROWS_AS(spec.errors.component(0), UnsupportedError);
    const auto d = dist::difference_law(spec.errors, 1, 2);
    CHECK(d.representation() == dist::DiffRepresentation::empirical_fit);
    CHECK_THAT(d.quantile(0.975), WithinAbs(oracle::gauss_diff_q975, 2e-2));
}

TEST_CASE("joint CDF of V matches a bivariate normal quadrature")
{
    const auto errors = gaussian_errors();
    const auto laws = dist::baseline_laws(errors, 1);
    REQUIRE(laws.others == std::vector<int>{0, 2});
    for (std::size_t i = 0; i < std::size(oracle::FV_values); ++i) {
        const double q[] = {oracle::FV_points[2 * i], oracle::FV_points[2 * i + 1]};
        CHECK_THAT(dist::joint_cdf_V(errors, laws, q).value, WithinAbs(oracle::FV_values[i], 1e-9));
    }
}

TEST_CASE("joint CDF of V has uniform margins and total mass one")
{
    const auto errors = gaussian_errors();
    const auto laws = dist::baseline_laws(errors, 1);
    for (double q : {0.05, 0.3, 0.5, 0.8, 0.99}) {
        const double a[] = {q, 1.0};
        const double b[] = {1.0, q};
        CHECK_THAT(dist::joint_cdf_V(errors, laws, a).value, WithinAbs(q, 1e-9));
        CHECK_THAT(dist::joint_cdf_V(errors, laws, b).value, WithinAbs(q, 1e-9));
    }
    const double ones[] = {1.0, 1.0};
    CHECK_THAT(dist::joint_cdf_V(errors, laws, ones).value, WithinAbs(1.0, 1e-9));
    const double zero[] = {0.0, 0.7};
    CHECK(dist::joint_cdf_V(errors, laws, zero).value == 0.0);
}

TEST_CASE("V computed from error draws is uniform")
{
    const auto errors = gaussian_errors();
    const auto laws = dist::baseline_laws(errors, 1);
    Rng rng(11);
    std::vector<std::vector<double>> v(2);
    double u[3];
    for (int n = 0; n < 50000; ++n) {
        errors.sample(rng, u);
        const auto vi = dist::v_from_u(laws, u);
        v[0].push_back(vi[0]);
        v[1].push_back(vi[1]);
    }
    for (auto& col : v)
        CHECK(numeric::ks_statistic(col, [](double x) { return x; }) < numeric::ks_critical_value(col.size(), 0.01));
}
