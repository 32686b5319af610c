#pragma once

#include "mte/numeric.hpp"
#include "mte/rng.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace mte::dist {

enum class LawKind { gaussian, uniform, logistic, student_t, empirical };

const char* to_string(LawKind k);

// Continuous univariate law. Parameters by kind:
//   gaussian  (mean, variance)
//   uniform   (lower, upper)
//   logistic  (location, scale)
//   student_t (dof, location, scale), dof > 1 so the mean exists
//   empirical monotone fit to supplied draws
class UnivariateLaw {
public:
    static UnivariateLaw gaussian(double mean, double variance);
    static UnivariateLaw uniform(double lower, double upper);
    static UnivariateLaw logistic(double location, double scale);
    static UnivariateLaw student_t(double dof, double location, double scale);
    static UnivariateLaw empirical(std::vector<double> draws, std::size_t knots = 400);

    LawKind kind() const { return kind_; }
    const std::vector<double>& params() const { return params_; }

    double cdf(double x) const;
    double pdf(double x) const;
    // Throws DomainError unless p lies in (0, 1).
    double quantile(double p) const;
    double mean() const;
    double variance() const;
    double lower() const;
    double upper() const;
    double sample(Rng& rng) const { return quantile(rng.uniform01()); }
    std::string describe() const;

private:
    UnivariateLaw(LawKind kind, std::vector<double> params) : kind_(kind), params_(std::move(params)) {}

    LawKind kind_;
    std::vector<double> params_;
    std::shared_ptr<const numeric::TabulatedCdf> table_;
    double draw_mean_ = 0.0, draw_var_ = 0.0;
};

using JointSampler = std::function<void(Rng&, std::span<double>)>;

// Law of the error vector (U_0, ..., U_{K-1}).
class ErrorVectorLaw {
public:
    ErrorVectorLaw() = default;
    // Mutually independent components.
    explicit ErrorVectorLaw(std::vector<UnivariateLaw> components);
    // Dependent components drawn jointly; only sampling is available.
    static ErrorVectorLaw dependent(std::size_t size, JointSampler sampler);

    std::size_t size() const { return size_; }
    bool independent() const { return !sampler_; }
    // Throws UnsupportedError for dependent laws.
    const UnivariateLaw& component(std::size_t i) const;
    void sample(Rng& rng, std::span<double> out) const;

private:
    std::size_t size_ = 0;
    std::vector<UnivariateLaw> components_;
    JointSampler sampler_;
};

enum class DiffRepresentation { closed_form, numeric_convolution, empirical_fit };

const char* to_string(DiffRepresentation r);

struct DifferenceOptions {
    bool force_numeric = false;
    std::size_t convolution_knots = 513;
    std::size_t empirical_draws = 1'000'000;
    std::uint64_t seed = 0x5eed;
};

// Law of U_k - U_i.
class DifferenceLaw {
public:
    double cdf(double w) const;
    double pdf(double w) const;
    // Bracketed root of cdf(x) = p; throws DomainError unless p lies in (0, 1).
    double quantile(double p) const;
    // Quantile extended to the closed interval: 0 -> -inf, 1 -> +inf.
    double quantile_closed(double p) const;
    DiffRepresentation representation() const { return rep_; }
    int minuend() const { return k_; }
    int subtrahend() const { return i_; }

private:
    friend DifferenceLaw difference_law(const ErrorVectorLaw&, int, int, const DifferenceOptions&);
    DiffRepresentation rep_ = DiffRepresentation::closed_form;
    int k_ = 0, i_ = 0;
    double mu_ = 0.0, sigma_ = 1.0;
    std::shared_ptr<const numeric::TabulatedCdf> table_;
};

// Closed form for two independent Gaussians, numeric convolution for other
// independent pairs, monotone fit to joint draws for dependent errors.
DifferenceLaw difference_law(const ErrorVectorLaw& errors, int k, int i, const DifferenceOptions& opts = {});

// Difference laws U_k - U_i for every i != k, in ascending order of i.
struct BaselineLaws {
    int baseline = 0;
    std::vector<int> others;
    std::vector<DifferenceLaw> diffs;
    int position(int treatment) const;
};

BaselineLaws baseline_laws(const ErrorVectorLaw& errors, int baseline, const DifferenceOptions& opts = {});

// V_i = F_{U_k - U_i}(u_k - u_i), one entry per non-baseline treatment.
std::vector<double> v_from_u(const BaselineLaws& laws, std::span<const double> u);

struct Estimate {
    double value = 0.0;
    double error = 0.0; // quadrature error estimate
    double mc_se = 0.0; // Monte Carlo standard error, 0 for quadrature
};

// Pr(V_i <= q_i for all i). One-dimensional quadrature for independent errors,
// Monte Carlo with standard error for dependent ones.
Estimate joint_cdf_V(const ErrorVectorLaw& errors, const BaselineLaws& laws, std::span<const double> q,
                     std::size_t mc_draws = 1'000'000, std::uint64_t seed = 0x5eed);

} // namespace mte::dist
