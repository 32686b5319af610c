#include "mte/estimation.hpp"
#include "mte/selection.hpp"
#include "oracle_values.hpp"
#include "support.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace mte;
using namespace mte::estimation;
using Catch::Matchers::WithinAbs;

TEST_CASE("simulation is seeded per chunk and rejects empty samples")
{
    const auto scn = test::bundled("figure1");
    const auto a = simulate(scn, 30000, 12, "fp", 1);
    const auto b = simulate(scn, 30000, 12, "fp", 4);
    CHECK(a.z == b.z);
    CHECK(a.d == b.d);
    CHECK(a.y == b.y);
    CHECK(a.fingerprint == "fp");
    CHECK(a.dim == 2);
    const auto c = simulate(scn, 30000, 13);
    CHECK(a.y != c.y);
    CHECK_THROWS_AS(simulate(scn, 0, 1), DomainError);
}

TEST_CASE("simulated choices follow the argmax rule")
{
    const auto scn = test::bundled("figure1");
    const auto s = simulate(scn, 200000, 21);
    const auto p = treatment_shares(s, 3);
    for (int t = 0; t < 3; ++t) {
        const double se = std::sqrt(oracle::figure1_shares[t] * (1 - oracle::figure1_shares[t]) / 200000.0);
        const double tol = 4.0 * std::hypot(se, oracle::figure1_shares_se[t]);
        CHECK_THAT(p[static_cast<std::size_t>(t)], WithinAbs(oracle::figure1_shares[t], tol));
    }
}

TEST_CASE("Silverman bandwidths and kernel validation")
{
    KernelSpec k;
    const double sd[] = {2.0, 0.5};
    const auto h = bandwidths(k, sd, 10000);
    const double factor = std::pow(4.0 / (4.0 * 10000.0), 1.0 / 6.0);
    CHECK_THAT(h[0], WithinAbs(2.0 * factor, 1e-15));
    CHECK_THAT(h[1], WithinAbs(0.5 * factor, 1e-15));
    k.rule = KernelSpec::Bandwidth::fixed;
    k.fixed = 0.3;
    CHECK(bandwidths(k, sd, 10000) == std::vector<double>{0.3, 0.3});
    k.fixed = 0.0;
    CHECK_THROWS_AS(k.validate(), DomainError);
    KernelSpec bad;
    bad.order = 2;
    CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("local linear regression is exact on linear data")
{
    for (auto kernel : {KernelSpec::Kernel::epanechnikov, KernelSpec::Kernel::gaussian}) {
        Rng rng(2);
        std::vector<double> x(4000);
        std::vector<std::vector<double>> resp(1, std::vector<double>(2000));
        for (std::size_t i = 0; i < 2000; ++i) {
            x[2 * i] = rng.uniform01();
            x[2 * i + 1] = rng.uniform01();
            resp[0][i] = 2.0 + 3.0 * x[2 * i] - 1.5 * x[2 * i + 1];
        }
        KernelSpec k;
        k.kernel = kernel;
        const double x0[] = {0.4, 0.6};
        const double h[] = {0.2, 0.2};
        const auto fit = kernel_regression(x, 2, resp, x0, h, k);
        CHECK_THAT(fit.value[0], WithinAbs(2.0 + 1.2 - 0.9, 1e-10));
        CHECK_THAT(fit.slope[0][0], WithinAbs(3.0, 1e-9));
        CHECK_THAT(fit.slope[0][1], WithinAbs(-1.5, 1e-9));
        CHECK(fit.effective_n > 10.0);
        const double far[] = {5.0, 5.0};
        CHECK_THROWS_AS(kernel_regression(x, 2, resp, far, h, k), SparseRegionError);
    }
}

TEST_CASE("kernel share estimates approach the population baseline share")
{
    const auto scn = test::bundled("figure1");
    const auto s = simulate(scn, 200000, 5, "", 2);
    const ShareEstimator est(s, 3, {}, 2);
    for (std::size_t i = 0; i < std::size(oracle::figure1_h); ++i) {
        const double z[] = {oracle::figure1_h_z[2 * i], oracle::figure1_h_z[2 * i + 1]};
        CHECK_THAT(estimate_H(scn, s, z, {}, 2), WithinAbs(oracle::figure1_h[i], 0.02));
        const auto sh = est.at(z);
        CHECK_THAT(sh.share[0] + sh.share[1] + sh.share[2], WithinAbs(1.0, 1e-9));
    }
    const double far[] = {40.0, 40.0};
    CHECK_THROWS_AS(est.at(far), SparseRegionError);
}

TEST_CASE("plug-in thresholds with population shares reproduce the closed form")
{
    const auto scn = test::bundled("trivial");
    const auto cfg = test::bundled_config("trivial");
    const auto shares = population_shares(scn);
    for (const auto& z : cfg.grids.z_points) {
        const auto t = estimate_thresholds(scn, z, shares);
        const auto closed = thresholds(scn, z).q;
        for (std::size_t p = 0; p < closed.size(); ++p)
            CHECK_THAT(t.value[p], WithinAbs(closed[p], 1e-4));
        CHECK(t.warnings.empty());
    }
}

TEST_CASE("sample thresholds track the closed form inside the data support")
{
    const auto scn = test::bundled("estimation");
    const auto s = simulate(scn, 200000, 31, "", 2);
    const ShareEstimator est(s, 3, {}, 2);
    const auto shares = sample_shares(est);
    const double z[] = {0.0, 0.0};
    const auto t = estimate_thresholds(scn, z, shares);
    const auto closed = thresholds(scn, z).q;
    for (std::size_t p = 0; p < closed.size(); ++p)
        CHECK_THAT(t.value[p], WithinAbs(closed[p], 0.05));

    const auto surface = estimate_threshold_surface(scn, s, shares, 21);
    REQUIRE(surface.q.size() == 2);
    CHECK(surface.q[0].size() == s.size());
    CHECK(surface.free_coordinate == std::vector<int>{0, 1});
}

TEST_CASE("unsupported schedules raise sparse region errors")
{
    const auto scn = test::bundled("estimation");
    const ShareOracle nowhere = [](std::span<const double>) { return std::optional<std::vector<double>>{}; };
    const double z[] = {0.0, 0.0};
    CHECK_THROWS_AS(estimate_thresholds(scn, z, nowhere), SparseRegionError);
}

TEST_CASE("marginal effect estimate needs data near the open-range boundary")
{
    const auto scn = test::bundled("open_range_violation");
    const auto s = simulate(scn, 50000, 3, "", 2);
    const ShareEstimator est(s, 3, {}, 2);
    const auto surface = estimate_threshold_surface(scn, s, sample_shares(est), 21);
    CHECK_THROWS_AS(estimate_mte(scn, s, surface, GFunction::identity(), population::BoundaryPoint{2, 0.5, 0.05}, {},
                                 200.0, 2),
                    BoundarySparsityError);
}
