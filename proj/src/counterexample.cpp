#include "mte/counterexample.hpp"

#include "mte/errors.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace mte::counterexample {

PairwiseLaws pairwise_laws(const dist::ErrorVectorLaw& errors, const dist::DifferenceOptions& opts)
{
    if (errors.size() != 3)
        throw DomainError("pairwise laws are defined for three treatments");
    return {dist::difference_law(errors, 0, 1, opts), dist::difference_law(errors, 0, 2, opts),
            dist::difference_law(errors, 1, 2, opts)};
}

LSVector ls_vector(const PairwiseLaws& laws, std::span<const double> u)
{
    if (u.size() != 3)
        throw DomainError("LS vector needs three error components");
    return {laws.d01.cdf(u[0] - u[1]), laws.d02.cdf(u[0] - u[2]), laws.d12.cdf(u[1] - u[2])};
}

double constraint_residual(const PairwiseLaws& laws, const LSVector& v)
{
    return laws.d01.quantile(v.v01) - laws.d02.quantile(v.v02) + laws.d12.quantile(v.v12);
}

double occupied_fraction(std::span<const std::array<double, 3>> points, double eps)
{
    if (!(eps > 0.0 && eps <= 1.0))
        throw DomainError("grid width must lie in (0, 1]");
    const auto cells = static_cast<std::uint64_t>(std::llround(std::ceil(1.0 / eps - 1e-9)));
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(points.size());
    for (const auto& p : points) {
        std::uint64_t key = 0;
        for (double c : p) {
            auto idx = static_cast<std::uint64_t>(std::clamp(std::floor(c / eps), 0.0, static_cast<double>(cells - 1)));
            key = key * cells + idx;
        }
        seen.insert(key);
    }
    return static_cast<double>(seen.size()) / static_cast<double>(cells * cells * cells);
}

namespace {

std::vector<std::array<double, 3>> as_points(const std::vector<LSVector>& v)
{
    std::vector<std::array<double, 3>> pts(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        pts[i] = {v[i].v01, v[i].v02, v[i].v12};
    return pts;
}

} // namespace

SupportCloud support_cloud_from_draws(const PairwiseLaws& laws, std::span<const std::array<double, 3>> u, double eps)
{
    SupportCloud sc;
    sc.eps = eps;
    sc.points.resize(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        sc.points[i] = ls_vector(laws, u[i]);
        sc.max_residual = std::max(sc.max_residual, std::fabs(constraint_residual(laws, sc.points[i])));
    }
    const auto pts = as_points(sc.points);
    sc.occupied = occupied_fraction(pts, eps);
    return sc;
}

SupportCloud support_cloud(const dist::ErrorVectorLaw& errors, std::size_t n, std::uint64_t seed, double eps,
                           unsigned threads)
{
    if (errors.size() != 3)
        throw DomainError("support cloud is defined for three treatments");
    const auto laws = pairwise_laws(errors);
    std::vector<std::array<double, 3>> u(n);
    for_each_chunk(n, kChunk, threads, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
        Rng rng(mix_seed(seed, chunk));
        for (std::size_t i = begin; i < end; ++i)
            errors.sample(rng, u[i]);
    });
    return support_cloud_from_draws(laws, u, eps);
}

ViolationReport violation_report(const SupportCloud& cloud, std::span<const double> eps_grid,
                                 std::size_t control_points, std::uint64_t seed, double null_threshold)
{
    if (eps_grid.empty())
        throw DomainError("grid sequence is empty");
    ViolationReport rep;
    rep.max_residual = cloud.max_residual;
    const auto pts = as_points(cloud.points);
    std::vector<std::array<double, 3>> ctrl(control_points);
    Rng rng(mix_seed(seed, 0xC0));
    for (auto& p : ctrl)
        p = {rng.uniform01(), rng.uniform01(), rng.uniform01()};
    rep.cloud.points = pts.size();
    rep.control.points = ctrl.size();
    for (double e : eps_grid) {
        rep.cloud.eps.push_back(e);
        rep.cloud.occupied.push_back(occupied_fraction(pts, e));
        rep.control.eps.push_back(e);
        rep.control.occupied.push_back(occupied_fraction(ctrl, e));
    }
    bool falling = true;
    for (std::size_t i = 1; i < rep.cloud.occupied.size(); ++i)
        falling = falling && rep.cloud.occupied[i] < rep.cloud.occupied[i - 1];
    rep.lebesgue_null = falling && rep.cloud.occupied.back() < null_threshold;
    rep.verdict = rep.lebesgue_null ? "support is Lebesgue-null: V has no joint density on the unit cube"
                                    : "no evidence of a Lebesgue-null support";
    return rep;
}

ViolationReport assumption_violation_report(const dist::ErrorVectorLaw& errors, std::size_t n, std::uint64_t seed,
                                            std::span<const double> eps_grid, std::size_t control_points,
                                            unsigned threads)
{
    const auto cloud = support_cloud(errors, n, seed, eps_grid.empty() ? 0.05 : eps_grid.back(), threads);
    return violation_report(cloud, eps_grid, control_points, seed);
}

} // namespace mte::counterexample
