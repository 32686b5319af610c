#include "mte/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace mte::numeric {

double solve_increasing(const std::function<double(double)>& f, double target, double lo, double hi, int max_iter)
{
    double flo = f(lo) - target;
    double fhi = f(hi) - target;
    if (!(flo <= 0.0 && fhi >= 0.0))
        throw ConvergenceError("root not bracketed");
    if (flo == 0.0)
        return lo;
    if (fhi == 0.0)
        return hi;
    // Illinois false position, falling back to bisection when progress stalls.
    double glo = flo, ghi = fhi;
    int side = 0;
    double last_width = hi - lo;
    for (int it = 0; it < max_iter; ++it) {
        const double width = hi - lo;
        const double scale = std::max(std::fabs(lo), std::fabs(hi));
        if (width <= 4.0 * std::numeric_limits<double>::epsilon() * scale || width <= 1e-300)
            break;
        double x = (lo * ghi - hi * glo) / (ghi - glo);
        const bool stalled = (it % 3 == 2) && width > 0.5 * last_width;
        if (it % 3 == 2)
            last_width = width;
        if (stalled || !(x > lo && x < hi) || !std::isfinite(x))
            x = lo + 0.5 * width;
        if (!(x > lo && x < hi))
            break;
        const double fx = f(x) - target;
        if (fx == 0.0)
            return x;
        if (fx < 0.0) {
            lo = x;
            flo = glo = fx;
            if (side == -1)
                ghi *= 0.5;
            side = -1;
        } else {
            hi = x;
            fhi = ghi = fx;
            if (side == +1)
                glo *= 0.5;
            side = +1;
        }
    }
    return (-flo <= fhi) ? lo : hi;
}

void bracket_increasing(const std::function<double(double)>& f, double target, double guess, double step, double& lo,
                        double& hi, double floor, double ceil)
{
    if (!(step > 0.0) || !std::isfinite(step))
        step = 1.0;
    lo = std::max(floor, guess - step);
    hi = std::min(ceil, guess + step);
    double s = step;
    for (int i = 0; i < 2100 && f(lo) > target; ++i) {
        s *= 2.0;
        hi = lo;
        lo = std::max(floor, guess - s);
        if (lo == floor && f(lo) > target)
            throw ConvergenceError("cannot bracket root from below");
    }
    s = step;
    for (int i = 0; i < 2100 && f(hi) < target; ++i) {
        s *= 2.0;
        lo = hi;
        hi = std::min(ceil, guess + s);
        if (hi == ceil && f(hi) < target)
            throw ConvergenceError("cannot bracket root from above");
    }
    if (f(lo) > target || f(hi) < target)
        throw ConvergenceError("cannot bracket root");
}

std::vector<double> pchip_slopes(std::span<const double> x, std::span<const double> y)
{
    const std::size_t n = x.size();
    std::vector<double> d(n, 0.0);
    if (n < 2)
        return d;
    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        h[i] = x[i + 1] - x[i];
        delta[i] = (y[i + 1] - y[i]) / h[i];
    }
    if (n == 2) {
        d[0] = d[1] = delta[0];
        return d;
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (delta[i - 1] * delta[i] <= 0.0) {
            d[i] = 0.0;
        } else {
            const double w1 = 2.0 * h[i] + h[i - 1];
            const double w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    auto end_slope = [](double h0, double h1, double d0, double d1) {
        double s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (s * d0 <= 0.0)
            s = 0.0;
        else if (d0 * d1 <= 0.0 && std::fabs(s) > 3.0 * std::fabs(d0))
            s = 3.0 * d0;
        return s;
    };
    d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    return d;
}

namespace {

double hermite(double t, double h, double y0, double y1, double d0, double d1)
{
    const double t2 = t * t, t3 = t2 * t;
    return (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * h * d0 + (-2.0 * t3 + 3.0 * t2) * y1 +
           (t3 - t2) * h * d1;
}

double hermite_slope(double t, double h, double y0, double y1, double d0, double d1)
{
    const double t2 = t * t;
    return (6.0 * t2 - 6.0 * t) / h * (y0 - y1) + (3.0 * t2 - 4.0 * t + 1.0) * d0 + (3.0 * t2 - 2.0 * t) * d1;
}

// Fritsch-Carlson limiter: keeps each cubic piece monotone.
void limit_slopes(const std::vector<double>& x, const std::vector<double>& y, std::vector<double>& d)
{
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        const double delta = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
        if (delta == 0.0) {
            d[i] = d[i + 1] = 0.0;
            continue;
        }
        const double a = d[i] / delta, b = d[i + 1] / delta;
        const double r = a * a + b * b;
        if (r > 9.0) {
            const double tau = 3.0 / std::sqrt(r);
            d[i] = tau * a * delta;
            d[i + 1] = tau * b * delta;
        }
    }
}

} // namespace

MonotoneInterpolant::MonotoneInterpolant(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y))
{
    if (x_.size() != y_.size() || x_.size() < 2)
        throw DomainError("monotone interpolant needs at least two points");
    for (std::size_t i = 0; i + 1 < x_.size(); ++i)
        if (!(x_[i + 1] > x_[i]))
            throw DomainError("interpolation abscissae must be strictly increasing");
    d_ = pchip_slopes(x_, y_);
    limit_slopes(x_, y_, d_);
}

double MonotoneInterpolant::operator()(double x) const
{
    if (x <= x_.front())
        return y_.front();
    if (x >= x_.back())
        return y_.back();
    const std::size_t i = static_cast<std::size_t>(std::upper_bound(x_.begin(), x_.end(), x) - x_.begin()) - 1;
    const double h = x_[i + 1] - x_[i];
    return hermite((x - x_[i]) / h, h, y_[i], y_[i + 1], d_[i], d_[i + 1]);
}

double MonotoneInterpolant::inverse(double y) const
{
    const bool up = y_.back() >= y_.front();
    const double lo = up ? y_.front() : y_.back();
    const double hi = up ? y_.back() : y_.front();
    if (y < lo || y > hi)
        throw DomainError("value outside the interpolant range");
    for (std::size_t i = 0; i + 1 < x_.size(); ++i) {
        const double a = y_[i], b = y_[i + 1];
        if ((up && a <= y && y <= b) || (!up && b <= y && y <= a)) {
            if (a == y)
                return x_[i];
            const double sign = up ? 1.0 : -1.0;
            return solve_increasing([&](double x) { return sign * (*this)(x); }, sign * y, x_[i], x_[i + 1]);
        }
    }
    return x_.back();
}

TabulatedCdf::TabulatedCdf(std::vector<double> x, std::vector<double> F, std::vector<double> dF)
    : x_(std::move(x)), F_(std::move(F)), d_(std::move(dF))
{
    if (x_.size() < 2 || F_.size() != x_.size() || d_.size() != x_.size())
        throw DomainError("tabulated CDF needs matching knot arrays");
    for (std::size_t i = 0; i + 1 < x_.size(); ++i)
        if (!(x_[i + 1] > x_[i]))
            throw DomainError("CDF knots must be strictly increasing");
    for (std::size_t i = 0; i < F_.size(); ++i) {
        F_[i] = std::clamp(F_[i], 0.0, 1.0);
        if (i > 0)
            F_[i] = std::max(F_[i], F_[i - 1]);
        d_[i] = std::max(d_[i], 0.0);
    }
    limit_slopes(x_, F_, d_);
    lam_lo_ = (F_.front() > 0.0 && d_.front() > 0.0) ? d_.front() / F_.front() : kInf;
    lam_hi_ = (F_.back() < 1.0 && d_.back() > 0.0) ? d_.back() / (1.0 - F_.back()) : kInf;
}

TabulatedCdf TabulatedCdf::from_sorted_draws(std::span<const double> sorted, std::size_t knots)
{
    const std::size_t n = sorted.size();
    if (n < 100)
        throw DomainError("empirical CDF fit needs at least 100 draws");
    knots = std::max<std::size_t>(knots, 8);
    const double p_min = std::max(5.0 / static_cast<double>(n), 1e-7);
    const double t_lo = std::log(p_min / (1.0 - p_min));
    std::vector<double> xs, ps;
    for (std::size_t m = 0; m < knots; ++m) {
        const double t = t_lo + (-2.0 * t_lo) * static_cast<double>(m) / static_cast<double>(knots - 1);
        const double p = 1.0 / (1.0 + std::exp(-t));
        const double pos = p * static_cast<double>(n) - 0.5;
        const auto j = static_cast<std::size_t>(std::clamp(std::floor(pos), 0.0, static_cast<double>(n - 2)));
        const double w = std::clamp(pos - static_cast<double>(j), 0.0, 1.0);
        const double x = sorted[j] + w * (sorted[j + 1] - sorted[j]);
        if (!xs.empty() && !(x > xs.back()))
            continue;
        xs.push_back(x);
        ps.push_back(p);
    }
    if (xs.size() < 3)
        throw DomainError("empirical draws are degenerate");
    auto d = pchip_slopes(xs, ps);
    return TabulatedCdf(std::move(xs), std::move(ps), std::move(d));
}

std::size_t TabulatedCdf::locate(double x) const
{
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t i = static_cast<std::size_t>(it - x_.begin());
    return std::min(i == 0 ? 0 : i - 1, x_.size() - 2);
}

double TabulatedCdf::cdf(double x) const
{
    if (std::isnan(x))
        return x;
    if (x < x_.front())
        return std::isinf(lam_lo_) ? 0.0 : F_.front() * std::exp(lam_lo_ * (x - x_.front()));
    if (x > x_.back())
        return std::isinf(lam_hi_) ? 1.0 : 1.0 - (1.0 - F_.back()) * std::exp(-lam_hi_ * (x - x_.back()));
    const std::size_t i = locate(x);
    const double h = x_[i + 1] - x_[i];
    return std::clamp(hermite((x - x_[i]) / h, h, F_[i], F_[i + 1], d_[i], d_[i + 1]), 0.0, 1.0);
}

double TabulatedCdf::pdf(double x) const
{
    if (x < x_.front())
        return std::isinf(lam_lo_) ? 0.0 : lam_lo_ * F_.front() * std::exp(lam_lo_ * (x - x_.front()));
    if (x > x_.back())
        return std::isinf(lam_hi_) ? 0.0 : lam_hi_ * (1.0 - F_.back()) * std::exp(-lam_hi_ * (x - x_.back()));
    const std::size_t i = locate(x);
    const double h = x_[i + 1] - x_[i];
    return std::max(0.0, hermite_slope((x - x_[i]) / h, h, F_[i], F_[i + 1], d_[i], d_[i + 1]));
}

double TabulatedCdf::quantile(double p) const
{
    if (!(p > 0.0 && p < 1.0))
        throw DomainError("quantile level must lie in (0, 1)");
    if (p < F_.front()) {
        if (std::isinf(lam_lo_))
            return x_.front();
        return x_.front() + std::log(p / F_.front()) / lam_lo_;
    }
    if (p > F_.back()) {
        if (std::isinf(lam_hi_))
            return x_.back();
        return x_.back() - std::log((1.0 - p) / (1.0 - F_.back())) / lam_hi_;
    }
    auto it = std::lower_bound(F_.begin(), F_.end(), p);
    std::size_t j = static_cast<std::size_t>(it - F_.begin());
    if (j < F_.size() && F_[j] == p)
        return x_[j];
    const std::size_t i = j - 1;
    const double h = x_[i + 1] - x_[i];
    return solve_increasing(
        [&](double x) { return hermite((x - x_[i]) / h, h, F_[i], F_[i + 1], d_[i], d_[i + 1]); }, p, x_[i],
        x_[i + 1]);
}

namespace {

// Tanh-sinh nodes on t in [-t_max, t_max]; integrands are bounded, so mass
// within exp(-38) of either endpoint is dropped. Level 0 holds every multiple
// of h0, level l > 0 only the odd multiples of h0 / 2^l.
struct DeRule {
    static constexpr double t_max = 3.2;
    static constexpr double h0 = 0.5;
    static constexpr int max_level = 8;
    struct Level {
        std::vector<double> dist; // 1 - |x|, measured from the nearer endpoint
        std::vector<bool> left;
        std::vector<double> weight;
    };
    std::vector<Level> levels;

    DeRule()
    {
        const double half_pi = 0.5 * M_PI;
        for (int l = 0; l <= max_level; ++l) {
            Level lv;
            const double h = h0 / std::ldexp(1.0, l);
            const int n = static_cast<int>(std::floor(t_max / h));
            for (int j = -n; j <= n; ++j) {
                if (l > 0 && j % 2 == 0)
                    continue;
                const double t = j * h;
                const double y = half_pi * std::sinh(t);
                const double e = std::exp(-2.0 * std::fabs(y));
                const double c = std::cosh(y);
                lv.dist.push_back(2.0 * e / (1.0 + e));
                lv.left.push_back(t < 0);
                lv.weight.push_back(half_pi * std::cosh(t) / (c * c));
            }
            levels.push_back(std::move(lv));
        }
    }
};

const DeRule& de_rule()
{
    static const DeRule rule;
    return rule;
}

} // namespace

double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol, double* abs_error)
{
    if (abs_error)
        *abs_error = 0.0;
    if (!(b > a))
        return 0.0;
    // Intervals a few ulps wide: the midpoint rule is exact enough there.
    if (b - a <= 1e-12 * std::max({1.0, std::fabs(a), std::fabs(b)}))
        return (b - a) * f(0.5 * (a + b));
    const auto& rule = de_rule();
    const double half = 0.5 * (b - a);
    double sum = 0.0, l1 = 0.0, prev = 0.0, diff = 0.0;
    for (int l = 0; l <= DeRule::max_level; ++l) {
        const auto& lv = rule.levels[static_cast<std::size_t>(l)];
        for (std::size_t i = 0; i < lv.dist.size(); ++i) {
            const double off = half * lv.dist[i];
            const double x = lv.left[i] ? a + off : b - off;
            if (!(x > a && x < b))
                continue;
            const double fx = f(x);
            sum += lv.weight[i] * fx;
            l1 += lv.weight[i] * std::fabs(fx);
        }
        const double scale = half * DeRule::h0 / std::ldexp(1.0, l);
        const double est = scale * sum;
        diff = std::fabs(est - prev);
        prev = est;
        if (l >= 2 && diff <= rel_tol * scale * l1)
            break;
    }
    if (abs_error)
        *abs_error = diff;
    return prev;
}

double ks_statistic(std::vector<double> draws, const std::function<double(double)>& cdf)
{
    if (draws.empty())
        throw DomainError("KS statistic needs draws");
    std::sort(draws.begin(), draws.end());
    const double n = static_cast<double>(draws.size());
    double d = 0.0;
    for (std::size_t i = 0; i < draws.size(); ++i) {
        const double F = cdf(draws[i]);
        d = std::max({d, F - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - F});
    }
    return d;
}

double ks_critical_value(std::size_t n, double alpha)
{
    return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(static_cast<double>(n));
}

MeanSe mean_and_se(std::span<const double> xs)
{
    MeanSe r;
    if (xs.empty())
        return r;
    const double n = static_cast<double>(xs.size());
    double mean = 0.0;
    for (double x : xs)
        mean += x;
    mean /= n;
    double ss = 0.0;
    for (double x : xs)
        ss += (x - mean) * (x - mean);
    r.mean = mean;
    r.se = xs.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
    return r;
}

} // namespace mte::numeric
