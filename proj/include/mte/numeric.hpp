#pragma once

#include "mte/errors.hpp"

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace mte::numeric {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Bracketed root of a nondecreasing function: returns x in [lo, hi] with
// f(x) = target, iterating until the bracket collapses to a few ulps.
// Requires f(lo) <= target <= f(hi).
double solve_increasing(const std::function<double(double)>& f, double target, double lo, double hi,
                        int max_iter = 400);

// Expands [lo, hi] around a guess until f(lo) <= target <= f(hi). The search
// never leaves [floor, ceil].
void bracket_increasing(const std::function<double(double)>& f, double target, double guess, double step,
                        double& lo, double& hi, double floor = -kInf, double ceil = kInf);

// Fritsch-Carlson slopes for a monotone piecewise cubic through (x, y).
std::vector<double> pchip_slopes(std::span<const double> x, std::span<const double> y);

// Monotone piecewise cubic Hermite interpolant of (x, y); flat extrapolation.
class MonotoneInterpolant {
public:
    MonotoneInterpolant() = default;
    MonotoneInterpolant(std::vector<double> x, std::vector<double> y);
    double operator()(double x) const;
    // Smallest abscissa where the interpolant reaches y (y within the range).
    double inverse(double y) const;
    bool empty() const { return x_.empty(); }

private:
    std::vector<double> x_, y_, d_;
};

// Continuous CDF stored as a monotone cubic Hermite spline on strictly
// increasing knots with exponential tails beyond the outer knots.
class TabulatedCdf {
public:
    TabulatedCdf() = default;
    // Knot slopes are the density; they are limited so every piece stays monotone.
    TabulatedCdf(std::vector<double> x, std::vector<double> F, std::vector<double> dF);
    // Monotone fit to the empirical distribution of sorted draws.
    static TabulatedCdf from_sorted_draws(std::span<const double> sorted, std::size_t knots = 400);

    double cdf(double x) const;
    double pdf(double x) const;
    double quantile(double p) const;
    double lower_knot() const { return x_.front(); }
    double upper_knot() const { return x_.back(); }
    std::size_t size() const { return x_.size(); }

private:
    std::size_t locate(double x) const;
    std::vector<double> x_, F_, d_;
    double lam_lo_ = 0.0, lam_hi_ = 0.0;
};

// Adaptive double-exponential quadrature of f over [a, b] (finite limits).
// Returns 0 when b <= a.
double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol = 1e-11,
                 double* abs_error = nullptr);

// One-sample Kolmogorov-Smirnov statistic of draws against a CDF.
double ks_statistic(std::vector<double> draws, const std::function<double(double)>& cdf);
// Asymptotic critical value of the one-sample KS statistic at level alpha.
double ks_critical_value(std::size_t n, double alpha);

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};
MeanSe mean_and_se(std::span<const double> xs);

} // namespace mte::numeric
