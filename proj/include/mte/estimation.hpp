#pragma once

#include "mte/population.hpp"
#include "mte/scenario.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

// Finite-sample harness: simulated observables (Z, D, Y), kernel estimates of
// choice shares, limit estimates of the thresholds and a local-linear
// estimate of the marginal effect near the open-range boundary.
namespace mte::estimation {

// Observed data; only the chosen arm's outcome is stored.
struct SampleSet {
    std::size_t dim = 0;       // instrument dimension m
    std::vector<double> z;     // row-major n x m
    std::vector<int> d;
    std::vector<double> y;
    std::uint64_t seed = 0;
    std::string fingerprint;   // hash of the scenario config that produced the data

    std::size_t size() const { return d.size(); }
    std::span<const double> row(std::size_t i) const { return {z.data() + i * dim, dim}; }
};

// Draws n i.i.d. observations. Streams are seeded per chunk, so the sample
// does not depend on the thread count. Throws DomainError when n == 0 or a
// treatment is never chosen.
SampleSet simulate(const Scenario& scn, std::size_t n, std::uint64_t seed, std::string fingerprint = {},
                   unsigned threads = 0);

// Empirical share of each treatment.
std::vector<double> treatment_shares(const SampleSet& s, int K);

struct KernelSpec {
    enum class Kernel { epanechnikov, gaussian };
    enum class Bandwidth { silverman, fixed };
    Kernel kernel = Kernel::epanechnikov;
    Bandwidth rule = Bandwidth::silverman;
    double fixed = 0.1; // used when rule == fixed, for every coordinate
    int order = 1;      // 0: local constant, 1: local linear

    // Throws DomainError for a non-positive fixed bandwidth or an order outside {0, 1}.
    void validate() const;
};

// Per-coordinate bandwidths for a d-dimensional regressor with per-coordinate
// standard deviations sd: silverman gives sd * (4 / ((d + 2) n))^(1 / (d + 4)).
std::vector<double> bandwidths(const KernelSpec& k, std::span<const double> sd, std::size_t n);

// Kernel regression of several responses on a common regressor. Rows of x
// are observations; each response is indexed like the rows.
struct KernelFit {
    std::vector<double> value;    // fitted level per response
    std::vector<std::vector<double>> slope; // local-linear slopes per response, empty for order 0
    double effective_n = 0.0;     // (sum w)^2 / sum w^2
    double neighbours = 0.0;      // observations within one bandwidth in every coordinate
};

// Throws SparseRegionError when fewer than min_neighbours observations lie
// within one bandwidth of x0 in every coordinate.
KernelFit kernel_regression(std::span<const double> x, std::size_t dim, std::span<const std::vector<double>> responses,
                            std::span<const double> x0, std::span<const double> h, const KernelSpec& k,
                            double min_neighbours = 10.0, unsigned threads = 0);

// Estimated Pr(D = t | Z = z) for every treatment, clipped to [0, 1].
struct ShareEstimate {
    std::vector<double> share;
    double neighbours = 0.0;
};

class ShareEstimator {
public:
    ShareEstimator(const SampleSet& s, int K, KernelSpec k = {}, unsigned threads = 0);
    // Throws SparseRegionError outside the data support.
    ShareEstimate at(std::span<const double> z) const;
    const std::vector<double>& bandwidth() const { return h_; }
    const SampleSet& sample() const { return s_; }

private:
    const SampleSet& s_;
    int K_;
    KernelSpec k_;
    unsigned threads_;
    std::vector<double> h_;
    std::vector<std::vector<double>> indicators_;
};

// Kernel estimate of H(z) = Pr(D = baseline | Z = z), clipped to [0, 1].
double estimate_H(const Scenario& scn, const SampleSet& s, std::span<const double> z, const KernelSpec& k = {},
                  unsigned threads = 0);

// Choice shares at z, and whether z lies in the region where they can be
// trusted. The sample version marks points outside the central 99.8% of each
// pushed coordinate, or with too few neighbours, as unsupported.
using ShareOracle = std::function<std::optional<std::vector<double>>(std::span<const double> z)>;

ShareOracle population_shares(const Scenario& scn, const population::IntegrationOptions& opts = {});
ShareOracle sample_shares(const ShareEstimator& est);

struct ThresholdEstimate {
    std::vector<double> value;            // by position
    std::vector<population::LimitTrace> traces;
    std::vector<std::size_t> used_steps;  // supported schedule points per trace
    std::vector<std::string> warnings;
};

// Evaluates the baseline share along the supported part of each exclusion
// schedule and extrapolates linearly in the pushed share to zero. A schedule
// with one supported point yields that value with a warning; none at all
// throws SparseRegionError.
ThresholdEstimate estimate_thresholds(const Scenario& scn, std::span<const double> z, const ShareOracle& shares);

// Thresholds for every observation. Each Q_i depends on z only through the
// coordinates left free by the pushes, which must be a single coordinate; it
// is estimated on a grid over that coordinate and interpolated linearly.
struct ThresholdSurface {
    std::vector<std::vector<double>> q; // per position, one value per observation
    std::vector<std::vector<double>> grid, grid_value;
    std::vector<int> free_coordinate;
    std::vector<std::string> warnings;
};

ThresholdSurface estimate_threshold_surface(const Scenario& scn, const SampleSet& s, const ShareOracle& shares,
                                            std::size_t grid_points = 41);

struct MteEstimate {
    population::BoundaryPoint point;
    double recovered_k = 0.0;  // E[G(Y_k) | V_j = q*]
    double recovered_j = 0.0;  // E[G(Y_j) | V_j = q*]
    double mte = 0.0;
    double offset = 0.0;       // distance of the evaluation point from the face q_other = 1
    std::vector<double> bandwidth; // by position
    double effective_n = 0.0;
    std::vector<std::string> warnings;
};

// Local-linear regression of G(y) 1{d = t} on the estimated thresholds at
// q_j = q*, other thresholds at 1 - b with b the bandwidth in those
// coordinates; the q_j slope estimates the boundary derivative. Throws
// BoundarySparsityError when the effective sample is below min_effective.
MteEstimate estimate_mte(const Scenario& scn, const SampleSet& s, const ThresholdSurface& q, const GFunction& G,
                         const population::BoundaryPoint& bp, const KernelSpec& k = {}, double min_effective = 200.0,
                         unsigned threads = 0);

} // namespace mte::estimation
