// One PASS/FAIL line per primary acceptance criterion; exit status 1 when any fails.
#include "mte/counterexample.hpp"
#include "mte/estimation.hpp"
#include "mte/extension.hpp"
#include "mte/population.hpp"
#include "mte/selection.hpp"
#include "oracle_values.hpp"
#include "support.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>

using namespace mte;
using population::BoundaryPoint;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

Verdict representation()
{
    const auto t0 = Clock::now();
    std::size_t mismatches = 0, boundary = 0, scenarios = 0;
    for (const char* name : {"figure1", "trivial", "logistic_t", "k4", "estimation"}) {
        const auto r = verify_representation(test::bundled(name), 100000, mix_seed(20261016, 1));
        mismatches += r.mismatches;
        boundary += r.boundary;
        ++scenarios;
    }
    const double secs = seconds_since(t0);
    return {mismatches == 0 && boundary == 0 && secs < 30.0,
            fmt("%g scenarios x 1e5 draws, %g mismatches, %g boundary draws, %.1f s", double(scenarios),
                double(mismatches), double(boundary), secs)};
}

Verdict counterexample_volume()
{
    const auto t0 = Clock::now();
    const std::vector<double> eps{0.1, 0.05, 0.025};
    const auto r = counterexample::assumption_violation_report(test::bundled("figure1").errors(), 100000,
                                                                mix_seed(20261016, 2), eps, 1'000'000);
    const auto& v = r.cloud.occupied;
    const bool falling = v[0] > v[1] && v[1] > v[2] && v[2] < 0.2;
    const bool control = std::all_of(r.control.occupied.begin(), r.control.occupied.end(), [](double x) { return x > 0.9; });
    const double secs = seconds_since(t0);
    return {r.max_residual < 1e-9 && falling && control && secs < 60.0,
            fmt("residual %.2e, volume %.4f -> %.4f, control min %.4f, ", r.max_residual, v.front(), v.back(),
                *std::min_element(r.control.occupied.begin(), r.control.occupied.end())) +
                fmt("%.1f s", secs)};
}

Verdict linear_recovery()
{
    const auto t0 = Clock::now();
    const auto fig = test::bundled("figure1");
    const auto k4 = test::bundled("k4");
    double worst3 = 0.0, worst4 = 0.0;
    for (std::size_t i = 0; i < std::size(oracle::linear_qstar); ++i) {
        const double q = oracle::linear_qstar[i];
        const auto r = population::mte_identified(fig, GFunction::identity(), BoundaryPoint{2, q, 0.05});
        worst3 = std::max({worst3, std::fabs(r.baseline_value - oracle::linear_baseline[i]),
                           std::fabs(r.contrast_value - oracle::linear_contrast[i])});
        const auto s = population::mte_identified(k4, GFunction::identity(), BoundaryPoint{3, q, 0.05});
        worst4 = std::max({worst4, std::fabs(s.baseline_value - oracle::k4_baseline[i]),
                           std::fabs(s.contrast_value - oracle::k4_contrast[i])});
    }
    const double secs = seconds_since(t0);
    return {worst3 <= 1e-3 && worst4 <= 2e-3 && secs < 300.0,
            fmt("max error K=3 %.2e, K=4 %.2e, %.1f s", worst3, worst4, secs)};
}

Verdict trivial_exactness()
{
    const auto scn = test::bundled("trivial");
    double worst = 0.0;
    for (double q : oracle::linear_qstar) {
        const auto r = population::mte_identified(scn, GFunction::identity(), BoundaryPoint{2, q, 0.05});
        worst = std::max(worst, std::fabs(r.mte - (2.0 * q - 1.0)));
    }
    return {worst <= 1e-3, fmt("max |MTE - (2q - 1)| %.2e", worst)};
}

Verdict threshold_limits()
{
    const auto t0 = Clock::now();
    const auto scn = test::bundled("figure1");
    Rng rng(mix_seed(20261016, 5));
    double worst = 0.0;
    for (int n = 0; n < 5; ++n) {
        std::vector<double> z(scn.instrument_dim());
        scn.sample_instruments(rng, z);
        const auto id = population::identify_thresholds_by_limit(scn, z);
        const auto closed = thresholds(scn, z).q;
        for (std::size_t p = 0; p < closed.size(); ++p)
            worst = std::max(worst, std::fabs(id.recovered[p] - closed[p]));
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-4 && secs < 60.0, fmt("5 points, max error %.2e, %.1f s", worst, secs)};
}

Verdict uniform_margins()
{
    bool ks_ok = true;
    double worst_ks_ratio = 0.0, worst_cdf = 0.0;
    for (const char* name : {"figure1", "logistic_t", "k4"}) {
        const auto scn = test::bundled(name);
        const std::size_t n = 100000, m = scn.others().size();
        std::vector<std::vector<double>> v(m, std::vector<double>(n));
        Rng rng(mix_seed(20261016, 6));
        std::vector<double> u(static_cast<std::size_t>(scn.K()));
        for (std::size_t i = 0; i < n; ++i) {
            scn.errors().sample(rng, u);
            const auto vi = dist::v_from_u(scn.laws(), u);
            for (std::size_t p = 0; p < m; ++p)
                v[p][i] = vi[p];
        }
        const double crit = numeric::ks_critical_value(n, 0.01);
        for (auto& col : v) {
            const double d = numeric::ks_statistic(col, [](double x) { return x; });
            worst_ks_ratio = std::max(worst_ks_ratio, d / crit);
            ks_ok = ks_ok && d < crit;
        }
        for (double q : {0.1, 0.25, 0.5, 0.75, 0.9, 1.0})
            for (std::size_t p = 0; p < m; ++p) {
                std::vector<double> qs(m, 1.0);
                qs[p] = q;
                const double F = dist::joint_cdf_V(scn.errors(), scn.laws(), qs).value;
                worst_cdf = std::max(worst_cdf, std::fabs(F - q));
            }
    }
    return {ks_ok && worst_cdf <= 1e-6,
            fmt("max KS / critical %.3f, max |F_V(q, 1) - q| %.2e", worst_ks_ratio, worst_cdf)};
}

Verdict leibniz()
{
    const auto scn = test::bundled("figure1");
    Rng rng(mix_seed(20261016, 7));
    double worst = 0.0;
    for (int n = 0; n < 20; ++n) {
        const double q = 0.1 + 0.8 * rng.uniform01();
        const auto d = population::boundary_derivative(scn, GFunction::identity(), 1, BoundaryPoint{2, q, 0.05});
        const double direct = population::conditional_mean_given_vj(scn, GFunction::identity(), 1, 2, q);
        worst = std::max(worst, std::fabs(d.richardson - direct));
    }
    return {worst <= 1e-4, fmt("20 points, max |derivative - integrand| %.2e", worst)};
}

Verdict finite_sample()
{
    const auto t0 = Clock::now();
    const auto cfg = test::bundled_config("estimation");
    const Scenario scn(config::build_spec(cfg));
    std::vector<double> pop;
    for (const auto& z : cfg.grids.h_points)
        pop.push_back(population::baseline_share(scn, z));
    std::vector<double> mae;
    for (std::size_t n : {1000u, 10000u, 100000u}) {
        double total = 0.0;
        for (std::uint64_t r = 0; r < 10; ++r) {
            const auto s = estimation::simulate(scn, n, mix_seed(cfg.seed + r, 8));
            for (std::size_t i = 0; i < pop.size(); ++i)
                total += std::fabs(estimation::estimate_H(scn, s, cfg.grids.h_points[i]) - pop[i]);
        }
        mae.push_back(total / (10.0 * static_cast<double>(pop.size())));
    }
    const bool drift = mae[0] > mae[1] && mae[1] > mae[2];

    const BoundaryPoint bp{2, 0.5, cfg.tolerances.delta};
    const double target = population::mte_identified(scn, GFunction::identity(), bp).mte;
    std::vector<double> est;
    for (std::uint64_t r = 0; r < 20; ++r) {
        const auto s = estimation::simulate(scn, cfg.sizes.sample_n, mix_seed(cfg.seed + r, 4));
        const estimation::ShareEstimator shares(s, scn.K());
        const auto surface =
            estimation::estimate_threshold_surface(scn, s, estimation::sample_shares(shares), cfg.sizes.threshold_grid);
        est.push_back(estimation::estimate_mte(scn, s, surface, GFunction::identity(), bp).mte);
    }
    const auto ms = numeric::mean_and_se(est);
    const double sd = ms.se * std::sqrt(static_cast<double>(est.size()));
    const bool primary = std::fabs(est.front() - target) <= 3.0 * sd;
    const bool centred = std::fabs(ms.mean - target) <= 3.0 * ms.se;
    return {drift && primary && centred,
            fmt("H MAE %.4f > %.4f > %.4f; ", mae[0], mae[1], mae[2]) +
                fmt("MTE population %.4f, primary %.4f, mean %.4f, seed SD %.4f; ", target, est.front(), ms.mean, sd) +
                fmt("%.1f s", seconds_since(t0))};
}

Verdict extension_examples()
{
    std::vector<double> osc;
    for (int n = 1; n <= 200; ++n)
        osc.push_back(2.0 / ((2.0 * n + 1.0) * std::numbers::pi));
    const std::vector<std::vector<double>> osc_seq{osc};
    const auto rejected = extension::extend([](double x) { return std::sin(1.0 / x); }, osc_seq, 1e-6);

    std::vector<double> below, above;
    double p0 = 1, q0 = 1, p1 = 3, q1 = 2;
    for (int n = 0; n < 30; ++n) {
        (n % 2 == 0 ? below : above).push_back(p0 / q0);
        const double p2 = 2 * p1 + p0, q2 = 2 * q1 + q0;
        p0 = p1, q0 = q1, p1 = p2, q1 = q2;
    }
    const std::vector<std::vector<double>> rational{below, above};
    const auto accepted = extension::extend([](double x) { return x * x; }, rational, 1e-9);
    const bool ok = !rejected.extendable && !rejected.paths.front().cauchy && accepted.extendable &&
                    std::fabs(accepted.value - 2.0) < 1e-12;
    return {ok, fmt("sin(1/x) tail spread %.3f, x^2 limit at sqrt(2) %.15f", rejected.paths.front().tail_spread,
                    accepted.value)};
}

} // namespace

int main()
{
    const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
        {"representation equivalence", representation},
        {"counterexample support volume", counterexample_volume},
        {"linear-outcome recovery", linear_recovery},
        {"trivial outcome exactness", trivial_exactness},
        {"threshold limits", threshold_limits},
        {"uniform margins and joint CDF", uniform_margins},
        {"derivative self-check", leibniz},
        {"finite-sample drift", finite_sample},
        {"extension examples", extension_examples},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("error: ") + e.what()};
        }
        failed += v.pass ? 0 : 1;
        std::printf("criterion %zu %s: %s (%s)\n", i + 1, v.pass ? "PASS" : "FAIL", criteria[i].first, v.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
