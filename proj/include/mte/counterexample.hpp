#pragma once

#include "mte/laws.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mte::counterexample {

// Difference laws of U0 - U1, U0 - U2 and U1 - U2 for three treatments.
struct PairwiseLaws {
    dist::DifferenceLaw d01, d02, d12;
};

PairwiseLaws pairwise_laws(const dist::ErrorVectorLaw& errors, const dist::DifferenceOptions& opts = {});

struct LSVector {
    double v01 = 0.0, v02 = 0.0, v12 = 0.0;
};

// (F_01(u0 - u1), F_02(u0 - u2), F_12(u1 - u2)).
LSVector ls_vector(const PairwiseLaws& laws, std::span<const double> u);

// F_01^-1(v01) - F_02^-1(v02) + F_12^-1(v12), which vanishes for every
// vector produced by ls_vector.
double constraint_residual(const PairwiseLaws& laws, const LSVector& v);

// Fraction of the (1/eps)^3 cells of the unit cube holding at least one point.
double occupied_fraction(std::span<const std::array<double, 3>> points, double eps);

struct SupportCloud {
    std::vector<LSVector> points;
    double max_residual = 0.0;
    double eps = 0.05;
    double occupied = 0.0;
};

SupportCloud support_cloud(const dist::ErrorVectorLaw& errors, std::size_t n, std::uint64_t seed, double eps = 0.05,
                           unsigned threads = 0);
// Same, from pre-drawn error vectors (u0, u1, u2).
SupportCloud support_cloud_from_draws(const PairwiseLaws& laws, std::span<const std::array<double, 3>> u,
                                      double eps = 0.05);

struct OccupancyTrace {
    std::vector<double> eps;
    std::vector<double> occupied;
    std::size_t points = 0;
};

struct ViolationReport {
    OccupancyTrace cloud;
    OccupancyTrace control; // independent uniform points on the cube
    double max_residual = 0.0;
    bool lebesgue_null = false;
    std::string verdict;
};

// Occupancy of the support cloud on a shrinking grid against an independent
// uniform control. The support is judged Lebesgue-null when occupancy falls
// strictly along the grid and ends below `null_threshold`.
ViolationReport violation_report(const SupportCloud& cloud, std::span<const double> eps_grid,
                                 std::size_t control_points, std::uint64_t seed, double null_threshold = 0.2);

ViolationReport assumption_violation_report(const dist::ErrorVectorLaw& errors, std::size_t n, std::uint64_t seed,
                                            std::span<const double> eps_grid, std::size_t control_points = 1'000'000,
                                            unsigned threads = 0);

} // namespace mte::counterexample
