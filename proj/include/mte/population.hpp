#pragma once

#include "mte/laws.hpp"
#include "mte/scenario.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

// Population-level identification: conditional moments of G(Y) D_t given the
// threshold vector, their extension to the boundary where all thresholds but
// the contrast one equal 1, and marginal effects recovered by differentiating
// that extension.
namespace mte::population {

using dist::Estimate;

// Evaluation point on the boundary face q_i = 1 (i != k, j) at q_j = qstar.
struct BoundaryPoint {
    int contrast = 0;
    double qstar = 0.5;
    double delta = 0.05; // half-width of the open neighbourhood around qstar

    // Throws DomainError unless qstar lies in (delta, 1 - delta) and [0.05, 0.95].
    void validate() const;
};

struct IntegrationOptions {
    double rel_tol = 1e-10;
    std::size_t mc_draws = 1'000'000; // dependent errors only
    std::uint64_t seed = 0x5eed;
};

// E[G(Y_t) D_t | Q = q] with q indexed by position. For t = k the event is
// prod 1{V_i < q_i}; for t = j != k it is the contrast-j hurdle event
// 1{V_j >= q_j} prod 1{V_i < F_ki(F_kj^-1(V_j) - F_kj^-1(q_j) + F_ki^-1(q_i))}.
Estimate cond_mean_GD(const Scenario& scn, const GFunction& G, int t, std::span<const double> q,
                      const IntegrationOptions& opts = {});

// Value on the boundary face: every threshold other than the contrast one is
// set to 1, which reduces the event to 1{V_j < q_j} (t = k) or 1{V_j >= q_j}.
Estimate extended_cond_mean_GD(const Scenario& scn, const GFunction& G, int t, int contrast, double qj,
                               const IntegrationOptions& opts = {});

struct ExtensionCheck {
    std::vector<double> approach; // values of the non-contrast thresholds
    std::vector<double> interior; // cond_mean_GD along the axis approach
    std::vector<double> diagonal; // cond_mean_GD with q_j also moving toward qj
    double boundary = 0.0;
    double final_mismatch = 0.0;
    bool cauchy = false;
};

// Compares the boundary value with interior values approaching the face along
// the axis and along the diagonal; throws ExtensionError when the approach is
// not Cauchy or ends farther than tol from the boundary value.
ExtensionCheck check_extension(const Scenario& scn, const GFunction& G, int t, int contrast, double qj,
                               const IntegrationOptions& opts = {}, double tol = 1e-4);

// E[G(Y_t) | V_j = v] from the conditional law of the errors given U_k - U_j.
double conditional_mean_given_vj(const Scenario& scn, const GFunction& G, int t, int contrast, double v,
                                 const IntegrationOptions& opts = {});

// One-dimensional form of the boundary value: integral over [0, qj] (t = k)
// or [qj, 1] (t = j) of conditional_mean_given_vj.
double boundary_integral_1d(const Scenario& scn, const GFunction& G, int t, int contrast, double qj,
                            const IntegrationOptions& opts = {});

struct DerivativeDiagnostics {
    double h = 0.0;
    double central_h = 0.0;  // central difference with step h
    double central_h2 = 0.0; // central difference with step h / 2
    double richardson = 0.0;
    int evaluations = 0;
};

// d/dq_j of the boundary value: central differences at h and h/2 combined by
// Richardson extrapolation; throws StepSizeError when the extrapolation and
// the finer difference disagree by more than tol.
DerivativeDiagnostics boundary_derivative(const Scenario& scn, const GFunction& G, int t, const BoundaryPoint& bp,
                                          std::optional<double> h = std::nullopt, const IntegrationOptions& opts = {},
                                          double tol = 1e-4);

struct MteResult {
    BoundaryPoint point;
    double baseline_value = 0.0; // E[G(Y_k) | V_j = q*]
    double contrast_value = 0.0; // E[G(Y_j) | V_j = q*]
    double mte = 0.0;
    DerivativeDiagnostics baseline_diag, contrast_diag;
};

MteResult mte_identified(const Scenario& scn, const GFunction& G, const BoundaryPoint& bp,
                         std::optional<double> h = std::nullopt, const IntegrationOptions& opts = {});

struct MteOracle {
    double baseline_value = 0.0;
    double contrast_value = 0.0;
    double mte = 0.0;
};

MteOracle mte_oracle(const Scenario& scn, const GFunction& G, const BoundaryPoint& bp,
                     const IntegrationOptions& opts = {});

// Pr(D = t | Z = z) for every treatment.
std::vector<double> choice_probabilities(const Scenario& scn, std::span<const double> z,
                                         const IntegrationOptions& opts = {});

// Pr(D = k | Z = z) = F_V(Q(z)).
double baseline_share(const Scenario& scn, std::span<const double> z, const IntegrationOptions& opts = {});

struct LimitTrace {
    int target = -1;                  // treatment whose threshold is traced, -1 when all are pushed
    std::vector<int> pushed;          // treatments whose utilities are sent to -inf
    std::vector<std::vector<double>> z; // evaluation points along the schedule
    std::vector<double> H;            // baseline share at each point
    std::vector<double> rate;         // total share of the pushed treatments
    double limit = 0.0;               // extrapolated limit
    double closed_form = 0.0;         // Q_target(z), or 1 when all are pushed
};

// Extrapolates H linearly in the pushed share to share 0.
double extrapolate_limit(std::span<const double> H, std::span<const double> rate);

struct ThresholdIdentification {
    std::vector<LimitTrace> traces; // one per non-baseline treatment
    std::vector<double> recovered;
    std::vector<double> closed_form;
};

// Recovers each Q_i(z) as the limit of Pr(D = k | z) while the utilities of
// the other non-baseline treatments are pushed to -inf along their exclusion
// schedules. Throws ConfigError when a needed exclusion spec is missing and
// ConvergenceError when a trace is not monotone or has not settled.
ThresholdIdentification identify_thresholds_by_limit(const Scenario& scn, std::span<const double> z,
                                                     const IntegrationOptions& opts = {}, double settle_tol = 1e-6);

// Pushes every non-baseline utility at once; the trace tends to 1.
LimitTrace all_pushed_trace(const Scenario& scn, std::span<const double> z, const IntegrationOptions& opts = {});

struct QteResult {
    double tau = 0.5;
    double quantile_k = 0.0;
    double quantile_j = 0.0;
    double qte = 0.0;
    std::vector<double> y;
    std::vector<double> cdf_k, cdf_j; // recovered conditional CDFs on the y-grid
};

// Conditional CDFs of Y_k and Y_j given V_j = q* recovered with G = 1{Y <= y}
// over the grid, then inverted at tau by monotone interpolation. Throws
// MonotonicityError when a recovered CDF decreases by more than 1e-6 and
// DomainError when the grid does not bracket tau.
QteResult qte(const Scenario& scn, const BoundaryPoint& bp, double tau, std::span<const double> y_grid,
              const IntegrationOptions& opts = {});

// Same for several levels; the conditional CDFs are traced once.
std::vector<QteResult> qte(const Scenario& scn, const BoundaryPoint& bp, std::span<const double> taus,
                           std::span<const double> y_grid, const IntegrationOptions& opts = {});

// tau-quantile of Y_t given V_j = v, by root finding on the conditional CDF.
double conditional_quantile_given_vj(const Scenario& scn, int t, int contrast, double v, double tau,
                                     const IntegrationOptions& opts = {});

} // namespace mte::population
