#include "mte/laws.hpp"

#include "mte/errors.hpp"

#include <boost/math/distributions/logistic.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/distributions/uniform.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mte::dist {

namespace bm = boost::math;
using numeric::kInf;

const char* to_string(LawKind k)
{
    switch (k) {
    case LawKind::gaussian:
        return "gaussian";
    case LawKind::uniform:
        return "uniform";
    case LawKind::logistic:
        return "logistic";
    case LawKind::student_t:
        return "student_t";
    case LawKind::empirical:
        return "empirical";
    }
    return "unknown";
}

const char* to_string(DiffRepresentation r)
{
    switch (r) {
    case DiffRepresentation::closed_form:
        return "closed_form";
    case DiffRepresentation::numeric_convolution:
        return "numeric_convolution";
    case DiffRepresentation::empirical_fit:
        return "empirical_fit";
    }
    return "unknown";
}

namespace {

void require_finite(std::initializer_list<double> xs, const char* what)
{
    for (double x : xs)
        if (!std::isfinite(x))
            throw DomainError(std::string(what) + " parameters must be finite");
}

// Keeps probability levels strictly inside (0, 1) for quantile evaluation.
double clamp_level(double s)
{
    return std::clamp(s, 1e-300, 1.0 - 0x1.0p-53);
}

} // namespace

UnivariateLaw UnivariateLaw::gaussian(double mean, double variance)
{
    require_finite({mean, variance}, "gaussian");
    if (!(variance > 0.0))
        throw DomainError("gaussian variance must be positive");
    return UnivariateLaw(LawKind::gaussian, {mean, variance});
}

UnivariateLaw UnivariateLaw::uniform(double lower, double upper)
{
    require_finite({lower, upper}, "uniform");
    if (!(upper > lower))
        throw DomainError("uniform bounds must satisfy lower < upper");
    return UnivariateLaw(LawKind::uniform, {lower, upper});
}

UnivariateLaw UnivariateLaw::logistic(double location, double scale)
{
    require_finite({location, scale}, "logistic");
    if (!(scale > 0.0))
        throw DomainError("logistic scale must be positive");
    return UnivariateLaw(LawKind::logistic, {location, scale});
}

UnivariateLaw UnivariateLaw::student_t(double dof, double location, double scale)
{
    require_finite({dof, location, scale}, "student_t");
    if (!(dof > 1.0))
        throw DomainError("student_t needs dof > 1: laws without a finite mean are rejected");
    if (!(scale > 0.0))
        throw DomainError("student_t scale must be positive");
    return UnivariateLaw(LawKind::student_t, {dof, location, scale});
}

UnivariateLaw UnivariateLaw::empirical(std::vector<double> draws, std::size_t knots)
{
    for (double x : draws)
        if (!std::isfinite(x))
            throw DomainError("empirical draws must be finite");
    std::sort(draws.begin(), draws.end());
    UnivariateLaw law(LawKind::empirical, {});
    law.table_ = std::make_shared<numeric::TabulatedCdf>(numeric::TabulatedCdf::from_sorted_draws(draws, knots));
    const auto ms = numeric::mean_and_se(draws);
    law.draw_mean_ = ms.mean;
    law.draw_var_ = ms.se * ms.se * static_cast<double>(draws.size());
    return law;
}

double UnivariateLaw::cdf(double x) const
{
    if (std::isnan(x))
        return x;
    if (std::isinf(x) && kind_ != LawKind::empirical)
        return x > 0.0 ? 1.0 : 0.0;
    switch (kind_) {
    case LawKind::gaussian:
        return bm::cdf(bm::normal_distribution<double>(params_[0], std::sqrt(params_[1])), x);
    case LawKind::uniform:
        return std::clamp((x - params_[0]) / (params_[1] - params_[0]), 0.0, 1.0);
    case LawKind::logistic:
        return bm::cdf(bm::logistic_distribution<double>(params_[0], params_[1]), x);
    case LawKind::student_t:
        return bm::cdf(bm::students_t_distribution<double>(params_[0]), (x - params_[1]) / params_[2]);
    case LawKind::empirical:
        return table_->cdf(x);
    }
    return 0.0;
}

double UnivariateLaw::pdf(double x) const
{
    if (std::isinf(x))
        return 0.0;
    switch (kind_) {
    case LawKind::gaussian:
        return bm::pdf(bm::normal_distribution<double>(params_[0], std::sqrt(params_[1])), x);
    case LawKind::uniform:
        return (x < params_[0] || x > params_[1]) ? 0.0 : 1.0 / (params_[1] - params_[0]);
    case LawKind::logistic:
        return bm::pdf(bm::logistic_distribution<double>(params_[0], params_[1]), x);
    case LawKind::student_t:
        return bm::pdf(bm::students_t_distribution<double>(params_[0]), (x - params_[1]) / params_[2]) / params_[2];
    case LawKind::empirical:
        return table_->pdf(x);
    }
    return 0.0;
}

double UnivariateLaw::quantile(double p) const
{
    if (!(p > 0.0 && p < 1.0))
        throw DomainError("quantile level must lie in (0, 1)");
    switch (kind_) {
    case LawKind::gaussian:
        return bm::quantile(bm::normal_distribution<double>(params_[0], std::sqrt(params_[1])), p);
    case LawKind::uniform:
        return params_[0] + p * (params_[1] - params_[0]);
    case LawKind::logistic:
        return bm::quantile(bm::logistic_distribution<double>(params_[0], params_[1]), p);
    case LawKind::student_t:
        return params_[1] + params_[2] * bm::quantile(bm::students_t_distribution<double>(params_[0]), p);
    case LawKind::empirical:
        return table_->quantile(p);
    }
    return 0.0;
}

double UnivariateLaw::mean() const
{
    switch (kind_) {
    case LawKind::gaussian:
        return params_[0];
    case LawKind::uniform:
        return 0.5 * (params_[0] + params_[1]);
    case LawKind::logistic:
        return params_[0];
    case LawKind::student_t:
        return params_[1];
    case LawKind::empirical:
        return draw_mean_;
    }
    return 0.0;
}

double UnivariateLaw::variance() const
{
    switch (kind_) {
    case LawKind::gaussian:
        return params_[1];
    case LawKind::uniform:
        return (params_[1] - params_[0]) * (params_[1] - params_[0]) / 12.0;
    case LawKind::logistic:
        return params_[1] * params_[1] * M_PI * M_PI / 3.0;
    case LawKind::student_t:
        return params_[0] > 2.0 ? params_[2] * params_[2] * params_[0] / (params_[0] - 2.0) : kInf;
    case LawKind::empirical:
        return draw_var_;
    }
    return 0.0;
}

double UnivariateLaw::lower() const
{
    if (kind_ == LawKind::uniform)
        return params_[0];
    return -kInf;
}

double UnivariateLaw::upper() const
{
    if (kind_ == LawKind::uniform)
        return params_[1];
    return kInf;
}

std::string UnivariateLaw::describe() const
{
    std::ostringstream os;
    os.precision(17);
    os << to_string(kind_) << '(';
    for (std::size_t i = 0; i < params_.size(); ++i)
        os << (i ? ", " : "") << params_[i];
    os << ')';
    return os.str();
}

ErrorVectorLaw::ErrorVectorLaw(std::vector<UnivariateLaw> components)
    : size_(components.size()), components_(std::move(components))
{
}

ErrorVectorLaw ErrorVectorLaw::dependent(std::size_t size, JointSampler sampler)
{
    if (!sampler)
        throw DomainError("dependent error law needs a joint sampler");
    ErrorVectorLaw law;
    law.size_ = size;
    law.sampler_ = std::move(sampler);
    return law;
}

const UnivariateLaw& ErrorVectorLaw::component(std::size_t i) const
{
    if (!independent())
        throw UnsupportedError("component laws are unavailable for jointly sampled errors");
    return components_.at(i);
}

void ErrorVectorLaw::sample(Rng& rng, std::span<double> out) const
{
    if (out.size() != size_)
        throw DomainError("error draw buffer has the wrong size");
    if (sampler_) {
        sampler_(rng, out);
        return;
    }
    for (std::size_t i = 0; i < size_; ++i)
        out[i] = components_[i].sample(rng);
}

double DifferenceLaw::cdf(double w) const
{
    if (std::isnan(w))
        return w;
    if (std::isinf(w))
        return w > 0.0 ? 1.0 : 0.0;
    if (rep_ == DiffRepresentation::closed_form)
        return bm::cdf(bm::normal_distribution<double>(mu_, sigma_), w);
    return table_->cdf(w);
}

double DifferenceLaw::pdf(double w) const
{
    if (std::isinf(w))
        return 0.0;
    if (rep_ == DiffRepresentation::closed_form)
        return bm::pdf(bm::normal_distribution<double>(mu_, sigma_), w);
    return table_->pdf(w);
}

double DifferenceLaw::quantile(double p) const
{
    if (!(p > 0.0 && p < 1.0))
        throw DomainError("quantile level must lie in (0, 1)");
    if (rep_ != DiffRepresentation::closed_form)
        return table_->quantile(p);
    const double guess = bm::quantile(bm::normal_distribution<double>(mu_, sigma_), p);
    const double step = 1e-9 * (sigma_ + std::fabs(guess));
    double lo = 0.0, hi = 0.0;
    auto F = [this](double x) { return cdf(x); };
    numeric::bracket_increasing(F, p, guess, step, lo, hi);
    return numeric::solve_increasing(F, p, lo, hi);
}

double DifferenceLaw::quantile_closed(double p) const
{
    if (p == 0.0)
        return -kInf;
    if (p == 1.0)
        return kInf;
    return quantile(p);
}

namespace {

// Knots uniform in asinh((w - center) / scale) between lo and hi: dense near
// the center, sparse in the tails.
std::vector<double> convolution_grid(double lo, double hi, double center, double scale, std::size_t n)
{
    const double a = std::asinh((lo - center) / scale);
    const double b = std::asinh((hi - center) / scale);
    std::vector<double> x(n);
    for (std::size_t m = 0; m < n; ++m)
        x[m] = center + scale * std::sinh(a + (b - a) * static_cast<double>(m) / static_cast<double>(n - 1));
    x.front() = lo;
    x.back() = hi;
    return x;
}

std::shared_ptr<const numeric::TabulatedCdf> convolve(const UnivariateLaw& uk, const UnivariateLaw& ui,
                                                      std::size_t knots)
{
    const double tail = 1e-12;
    const double lo = uk.quantile(tail) - ui.quantile(1.0 - tail);
    const double hi = uk.quantile(1.0 - tail) - ui.quantile(tail);
    const double center = uk.quantile(0.5) - ui.quantile(0.5);
    double scale = std::sqrt(uk.variance() + ui.variance());
    if (!std::isfinite(scale))
        scale = (uk.quantile(0.75) - uk.quantile(0.25)) + (ui.quantile(0.75) - ui.quantile(0.25));
    auto x = convolution_grid(lo, hi, center, scale, std::max<std::size_t>(knots, 16));
    std::vector<double> F(x.size()), f(x.size());
    // P(U_k - U_i <= w) = int_0^1 F_k(Q_i(s) + w) ds, density likewise with f_k.
    for (std::size_t m = 0; m < x.size(); ++m) {
        const double w = x[m];
        F[m] = numeric::integrate([&](double s) { return uk.cdf(ui.quantile(clamp_level(s)) + w); }, 0.0, 1.0, 1e-12);
        f[m] = numeric::integrate([&](double s) { return uk.pdf(ui.quantile(clamp_level(s)) + w); }, 0.0, 1.0, 1e-12);
    }
    return std::make_shared<numeric::TabulatedCdf>(std::move(x), std::move(F), std::move(f));
}

} // namespace

DifferenceLaw difference_law(const ErrorVectorLaw& errors, int k, int i, const DifferenceOptions& opts)
{
    const int K = static_cast<int>(errors.size());
    if (k < 0 || i < 0 || k >= K || i >= K || k == i)
        throw DomainError("difference law needs two distinct treatments");
    DifferenceLaw law;
    law.k_ = k;
    law.i_ = i;
    if (!errors.independent()) {
        Rng rng(mix_seed(opts.seed, static_cast<std::uint64_t>(k * K + i)));
        std::vector<double> u(errors.size()), w(opts.empirical_draws);
        for (auto& x : w) {
            errors.sample(rng, u);
            x = u[static_cast<std::size_t>(k)] - u[static_cast<std::size_t>(i)];
            if (!std::isfinite(x))
                throw DomainError("joint sampler produced a non-finite draw");
        }
        std::sort(w.begin(), w.end());
        law.rep_ = DiffRepresentation::empirical_fit;
        law.table_ = std::make_shared<numeric::TabulatedCdf>(numeric::TabulatedCdf::from_sorted_draws(w));
        return law;
    }
    const auto& uk = errors.component(static_cast<std::size_t>(k));
    const auto& ui = errors.component(static_cast<std::size_t>(i));
    if (uk.kind() == LawKind::gaussian && ui.kind() == LawKind::gaussian && !opts.force_numeric) {
        law.rep_ = DiffRepresentation::closed_form;
        law.mu_ = uk.params()[0] - ui.params()[0];
        law.sigma_ = std::sqrt(uk.params()[1] + ui.params()[1]);
        return law;
    }
    law.rep_ = DiffRepresentation::numeric_convolution;
    law.table_ = convolve(uk, ui, opts.convolution_knots);
    return law;
}

int BaselineLaws::position(int treatment) const
{
    for (std::size_t p = 0; p < others.size(); ++p)
        if (others[p] == treatment)
            return static_cast<int>(p);
    throw DomainError("treatment " + std::to_string(treatment) + " is not a non-baseline treatment");
}

BaselineLaws baseline_laws(const ErrorVectorLaw& errors, int baseline, const DifferenceOptions& opts)
{
    const int K = static_cast<int>(errors.size());
    if (K < 2)
        throw DomainError("at least two treatments are required");
    if (baseline < 0 || baseline >= K)
        throw DomainError("baseline treatment out of range");
    BaselineLaws laws;
    laws.baseline = baseline;
    for (int i = 0; i < K; ++i) {
        if (i == baseline)
            continue;
        laws.others.push_back(i);
        laws.diffs.push_back(difference_law(errors, baseline, i, opts));
    }
    return laws;
}

std::vector<double> v_from_u(const BaselineLaws& laws, std::span<const double> u)
{
    std::vector<double> v(laws.others.size());
    const double uk = u[static_cast<std::size_t>(laws.baseline)];
    for (std::size_t p = 0; p < v.size(); ++p)
        v[p] = laws.diffs[p].cdf(uk - u[static_cast<std::size_t>(laws.others[p])]);
    return v;
}

Estimate joint_cdf_V(const ErrorVectorLaw& errors, const BaselineLaws& laws, std::span<const double> q,
                     std::size_t mc_draws, std::uint64_t seed)
{
    if (q.size() != laws.others.size())
        throw DomainError("joint CDF argument has the wrong dimension");
    for (double x : q)
        if (!(x >= 0.0 && x <= 1.0))
            throw DomainError("joint CDF argument must lie in [0, 1]");
    Estimate out;
    if (!errors.independent()) {
        std::vector<double> hits(mc_draws);
        std::vector<double> u(errors.size());
        Rng rng(seed);
        for (auto& h : hits) {
            errors.sample(rng, u);
            const auto v = v_from_u(laws, u);
            bool in = true;
            for (std::size_t p = 0; p < v.size(); ++p)
                in = in && v[p] <= q[p];
            h = in ? 1.0 : 0.0;
        }
        const auto ms = numeric::mean_and_se(hits);
        out.value = ms.mean;
        out.mc_se = ms.se;
        return out;
    }
    std::vector<double> x(q.size());
    for (std::size_t p = 0; p < q.size(); ++p) {
        x[p] = laws.diffs[p].quantile_closed(q[p]);
        if (x[p] == -kInf)
            return out;
    }
    // Given U_k = u, the events U_i > u - x_i are independent across i.
    const auto& uk = errors.component(static_cast<std::size_t>(laws.baseline));
    out.value = numeric::integrate(
        [&](double s) {
            const double u = uk.quantile(clamp_level(s));
            double prod = 1.0;
            for (std::size_t p = 0; p < x.size(); ++p)
                if (x[p] != kInf)
                    prod *= 1.0 - errors.component(static_cast<std::size_t>(laws.others[p])).cdf(u - x[p]);
            return prod;
        },
        0.0, 1.0, 1e-12, &out.error);
    return out;
}

} // namespace mte::dist
