#include "mte/estimation.hpp"

#include "mte/errors.hpp"
#include "mte/rng.hpp"
#include "mte/selection.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <set>

namespace mte::estimation {

SampleSet simulate(const Scenario& scn, std::size_t n, std::uint64_t seed, std::string fingerprint, unsigned threads)
{
    if (n == 0)
        throw DomainError("sample size must be at least 1");
    SampleSet s;
    s.dim = scn.instrument_dim();
    s.z.resize(n * s.dim);
    s.d.resize(n);
    s.y.resize(n);
    s.seed = seed;
    s.fingerprint = std::move(fingerprint);
    const auto K = static_cast<std::size_t>(scn.K());
    for_each_chunk(n, kChunk, threads, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
        Rng rng(mix_seed(seed, chunk));
        std::vector<double> u(K);
        for (std::size_t i = begin; i < end; ++i) {
            std::span<double> z(s.z.data() + i * s.dim, s.dim);
            scn.sample_instruments(rng, z);
            scn.errors().sample(rng, u);
            const int t = choose(scn, z, u).chosen;
            const auto v = scn.by_treatment(dist::v_from_u(scn.laws(), u));
            s.d[i] = t;
            s.y[i] = draw_outcome(scn, t, v, rng);
        }
    });
    const auto shares = treatment_shares(s, scn.K());
    for (std::size_t t = 0; t < shares.size(); ++t)
        if (shares[t] == 0.0)
            throw DomainError("treatment " + std::to_string(t) + " is never chosen in the sample");
    return s;
}

std::vector<double> treatment_shares(const SampleSet& s, int K)
{
    std::vector<double> share(static_cast<std::size_t>(K), 0.0);
    for (int t : s.d)
        share.at(static_cast<std::size_t>(t)) += 1.0;
    for (auto& x : share)
        x /= static_cast<double>(std::max<std::size_t>(1, s.size()));
    return share;
}

void KernelSpec::validate() const
{
    if (rule == Bandwidth::fixed && !(fixed > 0.0))
        throw DomainError("fixed bandwidth must be positive");
    if (order != 0 && order != 1)
        throw DomainError("local polynomial order must be 0 or 1");
}

std::vector<double> bandwidths(const KernelSpec& k, std::span<const double> sd, std::size_t n)
{
    k.validate();
    const double d = static_cast<double>(sd.size());
    std::vector<double> h(sd.size());
    for (std::size_t c = 0; c < sd.size(); ++c) {
        h[c] = k.rule == KernelSpec::Bandwidth::fixed
                   ? k.fixed
                   : sd[c] * std::pow(4.0 / ((d + 2.0) * static_cast<double>(std::max<std::size_t>(n, 1))),
                                      1.0 / (d + 4.0));
        if (!(h[c] > 0.0))
            throw DomainError("bandwidth must be positive; the regressor has no spread");
    }
    return h;
}

namespace {

std::vector<double> column_sd(std::span<const double> x, std::size_t dim)
{
    const std::size_t n = x.size() / dim;
    std::vector<double> sd(dim, 0.0);
    for (std::size_t c = 0; c < dim; ++c) {
        double mean = 0.0, m2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double delta = x[i * dim + c] - mean;
            mean += delta / static_cast<double>(i + 1);
            m2 += delta * (x[i * dim + c] - mean);
        }
        sd[c] = n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1)) : 0.0;
    }
    return sd;
}

double empirical_quantile(std::vector<double> xs, double p)
{
    std::sort(xs.begin(), xs.end());
    const double pos = p * static_cast<double>(xs.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, xs.size() - 1);
    return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

std::vector<double> column(const SampleSet& s, std::size_t c)
{
    std::vector<double> out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i)
        out[i] = s.z[i * s.dim + c];
    return out;
}

} // namespace

KernelFit kernel_regression(std::span<const double> x, std::size_t dim, std::span<const std::vector<double>> responses,
                            std::span<const double> x0, std::span<const double> h, const KernelSpec& k,
                            double min_neighbours, unsigned threads)
{
    k.validate();
    if (dim == 0 || x.size() % dim != 0 || x0.size() != dim || h.size() != dim)
        throw DomainError("kernel regression inputs have inconsistent dimensions");
    const std::size_t n = x.size() / dim;
    if (n == 0)
        throw DomainError("kernel regression needs a nonempty sample");
    const std::size_t R = responses.size();
    const std::size_t P = k.order == 1 ? dim + 1 : 1;
    const bool epa = k.kernel == KernelSpec::Kernel::epanechnikov;
    // Per-chunk normal equations, reduced in chunk order for determinism.
    struct Acc {
        Eigen::MatrixXd XtWX;
        Eigen::MatrixXd XtWy;
        double sw = 0.0, sw2 = 0.0;
        std::size_t inside = 0;
    };
    const std::size_t chunks = (n + kChunk - 1) / kChunk;
    std::vector<Acc> acc(chunks);
    for_each_chunk(n, kChunk, threads, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
        Acc a{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(P), static_cast<Eigen::Index>(P)),
              Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(P), static_cast<Eigen::Index>(R)), 0.0, 0.0, 0};
        Eigen::VectorXd row(static_cast<Eigen::Index>(P));
        for (std::size_t i = begin; i < end; ++i) {
            double w = 1.0;
            bool window = true;
            for (std::size_t c = 0; c < dim && w > 0.0; ++c) {
                const double u = (x[i * dim + c] - x0[c]) / h[c];
                w *= epa ? std::max(0.0, 1.0 - u * u) : std::exp(-0.5 * u * u);
                window = window && std::fabs(u) <= 1.0;
            }
            if (w <= 0.0)
                continue;
            a.inside += window ? 1 : 0;
            row(0) = 1.0;
            if (P > 1)
                for (std::size_t c = 0; c < dim; ++c)
                    row(static_cast<Eigen::Index>(c + 1)) = (x[i * dim + c] - x0[c]) / h[c];
            a.XtWX.noalias() += w * row * row.transpose();
            for (std::size_t r = 0; r < R; ++r)
                a.XtWy.col(static_cast<Eigen::Index>(r)) += (w * responses[r][i]) * row;
            a.sw += w;
            a.sw2 += w * w;
        }
        acc[chunk] = std::move(a);
    });
    Eigen::MatrixXd XtWX = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(P), static_cast<Eigen::Index>(P));
    Eigen::MatrixXd XtWy = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(P), static_cast<Eigen::Index>(R));
    double sw = 0.0, sw2 = 0.0;
    std::size_t inside = 0;
    for (const auto& a : acc) {
        inside += a.inside;
        XtWX += a.XtWX;
        XtWy += a.XtWy;
        sw += a.sw;
        sw2 += a.sw2;
    }
    KernelFit fit;
    fit.neighbours = static_cast<double>(inside);
    fit.effective_n = sw2 > 0.0 ? sw * sw / sw2 : 0.0;
    if (fit.neighbours < min_neighbours)
        throw SparseRegionError("only " + std::to_string(inside) + " observations within one bandwidth of the evaluation point");
    Eigen::FullPivLU<Eigen::MatrixXd> lu(XtWX);
    if (lu.rank() < static_cast<Eigen::Index>(P))
        throw SparseRegionError("local design is rank deficient around the evaluation point");
    const Eigen::MatrixXd beta = lu.solve(XtWy);
    fit.value.resize(R);
    if (P > 1)
        fit.slope.assign(R, std::vector<double>(dim));
    for (std::size_t r = 0; r < R; ++r) {
        fit.value[r] = beta(0, static_cast<Eigen::Index>(r));
        if (P > 1)
            for (std::size_t c = 0; c < dim; ++c)
                fit.slope[r][c] = beta(static_cast<Eigen::Index>(c + 1), static_cast<Eigen::Index>(r)) / h[c];
    }
    return fit;
}

ShareEstimator::ShareEstimator(const SampleSet& s, int K, KernelSpec k, unsigned threads)
    : s_(s), K_(K), k_(k), threads_(threads)
{
    if (s.size() == 0)
        throw DomainError("share estimation needs a nonempty sample");
    h_ = bandwidths(k_, column_sd(s.z, s.dim), s.size());
    indicators_.assign(static_cast<std::size_t>(K), std::vector<double>(s.size(), 0.0));
    for (std::size_t i = 0; i < s.size(); ++i)
        indicators_.at(static_cast<std::size_t>(s.d[i]))[i] = 1.0;
}

ShareEstimate ShareEstimator::at(std::span<const double> z) const
{
    const auto fit = kernel_regression(s_.z, s_.dim, indicators_, z, h_, k_, 10.0, threads_);
    ShareEstimate out;
    out.neighbours = fit.neighbours;
    out.share.resize(fit.value.size());
    for (std::size_t t = 0; t < fit.value.size(); ++t)
        out.share[t] = std::clamp(fit.value[t], 0.0, 1.0);
    return out;
}

double estimate_H(const Scenario& scn, const SampleSet& s, std::span<const double> z, const KernelSpec& k,
                  unsigned threads)
{
    if (s.size() == 0)
        throw DomainError("share estimation needs a nonempty sample");
    const auto sd = column_sd(s.z, s.dim);
    const auto h = bandwidths(k, sd, s.size());
    std::vector<std::vector<double>> resp(1, std::vector<double>(s.size()));
    for (std::size_t i = 0; i < s.size(); ++i)
        resp[0][i] = s.d[i] == scn.baseline() ? 1.0 : 0.0;
    const auto fit = kernel_regression(s.z, s.dim, resp, z, h, k, 10.0, threads);
    return std::clamp(fit.value[0], 0.0, 1.0);
}

ShareOracle population_shares(const Scenario& scn, const population::IntegrationOptions& opts)
{
    return [&scn, opts](std::span<const double> z) -> std::optional<std::vector<double>> {
        return population::choice_probabilities(scn, z, opts);
    };
}

ShareOracle sample_shares(const ShareEstimator& est)
{
    const auto& s = est.sample();
    std::vector<double> lo(s.dim), hi(s.dim);
    for (std::size_t c = 0; c < s.dim; ++c) {
        const auto col = column(s, c);
        lo[c] = empirical_quantile(col, 0.001);
        hi[c] = empirical_quantile(col, 0.999);
    }
    return [&est, lo, hi](std::span<const double> z) -> std::optional<std::vector<double>> {
        for (std::size_t c = 0; c < z.size(); ++c)
            if (z[c] < lo[c] || z[c] > hi[c])
                return std::nullopt;
        try {
            return est.at(z).share;
        } catch (const SparseRegionError&) {
            return std::nullopt;
        }
    };
}

namespace {

population::LimitTrace trace_target(const Scenario& scn, std::span<const double> z, int target,
                                    const ShareOracle& shares, std::size_t& scheduled)
{
    population::LimitTrace tr;
    tr.target = target;
    for (int m : scn.others())
        if (m != target)
            tr.pushed.push_back(m);
    std::vector<std::vector<double>> sched;
    scheduled = tr.pushed.empty() ? 1 : std::numeric_limits<std::size_t>::max();
    for (int m : tr.pushed) {
        sched.push_back(scn.exclusion_for(m).schedule());
        scheduled = std::min(scheduled, sched.back().size());
    }
    for (std::size_t n = 0; n < scheduled; ++n) {
        std::vector<double> zn(z.begin(), z.end());
        for (std::size_t i = 0; i < tr.pushed.size(); ++i)
            zn[static_cast<std::size_t>(scn.exclusion_for(tr.pushed[i]).coordinate)] = sched[i][n];
        const auto pr = shares(zn);
        if (!pr)
            break;
        double rate = 0.0;
        for (int m : tr.pushed)
            rate += (*pr)[static_cast<std::size_t>(m)];
        tr.z.push_back(zn);
        tr.H.push_back((*pr)[static_cast<std::size_t>(scn.baseline())]);
        tr.rate.push_back(rate);
    }
    return tr;
}

double estimate_one(const Scenario& scn, std::span<const double> z, int target, const ShareOracle& shares,
                    population::LimitTrace& tr, std::vector<std::string>& warnings)
{
    std::size_t scheduled = 0;
    tr = trace_target(scn, z, target, shares, scheduled);
    if (tr.H.empty())
        throw SparseRegionError("no point of the exclusion schedule for threshold " + std::to_string(target) +
                                " lies in the data support");
    if (tr.H.size() < scheduled)
        warnings.push_back("schedule for threshold " + std::to_string(target) + " truncated to " +
                           std::to_string(tr.H.size()) + " of " + std::to_string(scheduled) +
                           " points by data support");
    if (tr.H.size() == 1 && scheduled > 1)
        warnings.push_back("threshold " + std::to_string(target) + " uses a single smoothed value");
    tr.limit = population::extrapolate_limit(tr.H, tr.rate);
    return tr.limit;
}

} // namespace

ThresholdEstimate estimate_thresholds(const Scenario& scn, std::span<const double> z, const ShareOracle& shares)
{
    ThresholdEstimate out;
    const auto tv = thresholds(scn, z);
    for (std::size_t p = 0; p < scn.others().size(); ++p) {
        population::LimitTrace tr;
        out.value.push_back(estimate_one(scn, z, scn.others()[p], shares, tr, out.warnings));
        tr.closed_form = tv.q[p];
        out.used_steps.push_back(tr.H.size());
        out.traces.push_back(std::move(tr));
    }
    return out;
}

ThresholdSurface estimate_threshold_surface(const Scenario& scn, const SampleSet& s, const ShareOracle& shares,
                                            std::size_t grid_points)
{
    if (s.size() == 0)
        throw DomainError("threshold estimation needs a nonempty sample");
    if (grid_points < 2)
        throw DomainError("threshold grid needs at least two points");
    ThresholdSurface out;
    std::set<std::string> warned;
    std::vector<double> centre(s.dim);
    for (std::size_t c = 0; c < s.dim; ++c)
        centre[c] = empirical_quantile(column(s, c), 0.5);
    for (int target : scn.others()) {
        std::vector<bool> pushed(s.dim, false);
        for (int m : scn.others())
            if (m != target)
                pushed[static_cast<std::size_t>(scn.exclusion_for(m).coordinate)] = true;
        std::vector<int> free;
        for (std::size_t c = 0; c < s.dim; ++c)
            if (!pushed[c])
                free.push_back(static_cast<int>(c));
        if (free.size() > 1)
            throw UnsupportedError("threshold " + std::to_string(target) +
                                   " depends on more than one free instrument coordinate");
        std::vector<double> grid, value;
        std::vector<std::string> warnings;
        if (free.empty()) {
            population::LimitTrace tr;
            grid.push_back(0.0);
            value.push_back(estimate_one(scn, centre, target, shares, tr, warnings));
        } else {
            const auto fc = static_cast<std::size_t>(free[0]);
            const auto col = column(s, fc);
            const double lo = empirical_quantile(col, 0.005), hi = empirical_quantile(col, 0.995);
            for (std::size_t g = 0; g < grid_points; ++g) {
                auto z = centre;
                z[fc] = lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(grid_points - 1);
                try {
                    population::LimitTrace tr;
                    const double v = estimate_one(scn, z, target, shares, tr, warnings);
                    grid.push_back(z[fc]);
                    value.push_back(v);
                } catch (const SparseRegionError&) {
                    warnings.push_back("threshold " + std::to_string(target) + " grid point " +
                                       std::to_string(z[fc]) + " skipped: outside the data support");
                }
            }
            if (grid.size() < 2)
                throw SparseRegionError("threshold " + std::to_string(target) +
                                        " has fewer than two supported grid points");
        }
        for (auto& w : warnings)
            if (warned.insert(w).second)
                out.warnings.push_back(w);
        std::vector<double> q(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (free.empty()) {
                q[i] = value[0];
                continue;
            }
            const double x = s.z[i * s.dim + static_cast<std::size_t>(free[0])];
            const auto it = std::upper_bound(grid.begin(), grid.end(), x);
            if (it == grid.begin()) {
                q[i] = value.front();
            } else if (it == grid.end()) {
                q[i] = value.back();
            } else {
                const auto b = static_cast<std::size_t>(it - grid.begin());
                const double w = (x - grid[b - 1]) / (grid[b] - grid[b - 1]);
                q[i] = value[b - 1] + w * (value[b] - value[b - 1]);
            }
            q[i] = std::clamp(q[i], 0.0, 1.0);
        }
        out.q.push_back(std::move(q));
        out.grid.push_back(std::move(grid));
        out.grid_value.push_back(std::move(value));
        out.free_coordinate.push_back(free.empty() ? -1 : free[0]);
    }
    return out;
}

MteEstimate estimate_mte(const Scenario& scn, const SampleSet& s, const ThresholdSurface& q, const GFunction& G,
                         const population::BoundaryPoint& bp, const KernelSpec& k, double min_effective,
                         unsigned threads)
{
    bp.validate();
    const std::size_t dim = scn.others().size();
    if (q.q.size() != dim)
        throw DomainError("threshold surface does not match the scenario");
    const std::size_t n = s.size();
    const auto j = static_cast<std::size_t>(scn.position(bp.contrast));
    std::vector<double> x(n * dim);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < dim; ++p)
            x[i * dim + p] = q.q[p][i];
    std::vector<std::vector<double>> resp(2, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        if (s.d[i] == scn.baseline())
            resp[0][i] = G(s.y[i]);
        else if (s.d[i] == bp.contrast)
            resp[1][i] = G(s.y[i]);
    }
    MteEstimate out;
    out.point = bp;
    out.bandwidth = bandwidths(k, column_sd(x, dim), n);
    out.warnings = q.warnings;
    std::vector<double> x0(dim);
    for (std::size_t p = 0; p < dim; ++p)
        x0[p] = p == j ? bp.qstar : 1.0 - out.bandwidth[p];
    out.offset = 0.0;
    for (std::size_t p = 0; p < dim; ++p)
        if (p != j)
            out.offset = std::max(out.offset, out.bandwidth[p]);
    KernelSpec local = k;
    local.order = 1;
    KernelFit fit;
    try {
        fit = kernel_regression(x, dim, resp, x0, out.bandwidth, local, 10.0, threads);
    } catch (const SparseRegionError& e) {
        throw BoundarySparsityError(std::string("no usable data near the boundary: ") + e.what());
    }
    out.effective_n = fit.effective_n;
    if (fit.effective_n < min_effective)
        throw BoundarySparsityError("effective sample near the boundary is " + std::to_string(fit.effective_n) +
                                    ", below " + std::to_string(min_effective));
    out.recovered_k = fit.slope[0][j];
    out.recovered_j = -fit.slope[1][j];
    out.mte = out.recovered_k - out.recovered_j;
    return out;
}

} // namespace mte::estimation
