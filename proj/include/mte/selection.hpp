#pragma once

#include "mte/scenario.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace mte {

struct ChoiceOutcome {
    int chosen = 0;
    std::vector<double> latent; // R_t(z) - u_t
    double gap = 0.0;           // best latent value minus the runner-up
};

// Argmax of R_t(z) - u_t; throws TieError when the maximum is not unique.
ChoiceOutcome choose(const Scenario& scn, std::span<const double> z, std::span<const double> u);

struct ThresholdVector {
    std::vector<double> q;     // Q_i(z) by position
    std::vector<double> index; // R_k(z) - R_i(z) by position
};

ThresholdVector thresholds(const Scenario& scn, std::span<const double> z);

// S_i = 1{V_i < Q_i} for every position and, for every position other than
// the contrast j, S*_i = 1{V_i < F_ki(F_kj^-1(V_j) - F_kj^-1(Q_j) + F_ki^-1(Q_i))}.
// The contrast entry of s_star is -1.
struct HurdleIndicators {
    int contrast = 0;
    std::vector<int> s;
    std::vector<int> s_star;
};

// Throws BoundaryError when a threshold or V_j sits at 0 or 1, where the
// quantile transforms are undefined.
HurdleIndicators hurdle_indicators(const Scenario& scn, std::span<const double> z, std::span<const double> v,
                                   int contrast);

// Treatment indicators rebuilt from hurdles: D_k = prod S_i and, for each
// j != k, D_j = (1 - S_j) prod_{i != k, j} S*_i with contrast j.
std::vector<int> represented_choice(const Scenario& scn, std::span<const double> z, std::span<const double> v);

struct RepresentationMismatch {
    std::vector<double> z, u, v;
    int argmax = 0;
    std::vector<int> represented;
    double gap = 0.0;
};

struct RepresentationReport {
    std::size_t draws = 0;
    std::size_t mismatches = 0; // disagreements with latent gap above the tie tolerance
    std::size_t tolerated = 0;  // disagreements within the tie tolerance
    std::size_t boundary = 0;   // draws whose thresholds hit 0 or 1
    double seconds = 0.0;
    std::vector<RepresentationMismatch> examples;
    bool passed() const { return mismatches == 0 && boundary == 0; }
};

// Compares argmax choices with the hurdle representation on n draws of (Z, U).
// For three treatments it also checks D_m = (1 - S_m)(1 - S*_m) for the
// treatment m outside each baseline/contrast pair.
RepresentationReport verify_representation(const Scenario& scn, std::size_t n, std::uint64_t seed,
                                           double tie_tolerance = 1e-12, unsigned threads = 0);

} // namespace mte
