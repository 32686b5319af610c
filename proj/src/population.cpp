#include "mte/population.hpp"

#include "mte/errors.hpp"
#include "mte/extension.hpp"
#include "mte/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mte::population {

using numeric::kInf;

void BoundaryPoint::validate() const
{
    if (!(delta > 0.0 && delta < 0.5))
        throw DomainError("boundary neighbourhood half-width must lie in (0, 0.5)");
    if (!(qstar > delta && qstar < 1.0 - delta))
        throw DomainError("q* must lie in (delta, 1 - delta)");
    if (!(qstar >= 0.05 && qstar <= 0.95))
        throw DomainError("q* must lie in [0.05, 0.95]");
}

namespace {

double level(double s) { return std::clamp(s, 1e-300, 1.0 - 0x1.0p-53); }

// Integrals over the error space with the non-baseline errors written as
// U_p = F_p^-1(s_p), s_p uniform. Given U_k (and U_j on contrast events) the
// remaining U_p are independent and each event restricts s_p to (L_p, 1).
class Engine {
public:
    Engine(const Scenario& scn, const GFunction& G, int t, double tol) : scn_(scn), G_(G), t_(t), tol_(tol)
    {
        if (!scn.errors().independent())
            throw UnsupportedError("quadrature needs independent errors");
        if (t < 0 || t >= scn.K())
            throw DomainError("treatment out of range");
        const auto& others = scn.others();
        P_ = others.size();
        uk_ = &scn.errors().component(static_cast<std::size_t>(scn.baseline()));
        for (std::size_t p = 0; p < P_; ++p) {
            comp_.push_back(&scn.errors().component(static_cast<std::size_t>(others[p])));
            diff_.push_back(&scn.laws().diffs[p]);
        }
        ref_.assign(P_, false);
        const auto& out = scn.spec().outcomes[static_cast<std::size_t>(t)];
        for (int i : out.mean.v_refs())
            ref_[static_cast<std::size_t>(scn.position(i))] = true;
        if (out.mean.v_refs().empty()) {
            std::vector<double> v(static_cast<std::size_t>(scn.K()), 0.5);
            constant_ = outcome_conditional_mean(scn, G, t, v);
            affine_ = true;
            coef_.assign(P_, 0.0);
        } else if (G.kind == GFunction::Kind::identity) {
            if (auto a = out.mean.affine_in_v()) {
                affine_ = true;
                constant_ = a->constant + (out.noise ? out.noise->mean() : 0.0);
                coef_.assign(P_, 0.0);
                for (const auto& [i, c] : a->coef)
                    coef_[static_cast<std::size_t>(scn.position(i))] = c;
            }
        }
    }

    std::size_t positions() const { return P_; }

    // E[g(V) prod_p 1{W_p < x_p}]
    double baseline(const std::vector<double>& x)
    {
        for (double xp : x)
            if (xp == -kInf)
                return 0.0;
        return numeric::integrate(
            [&](double s) {
                const double u = uk_->quantile(level(s));
                std::vector<double> L(P_), v(static_cast<std::size_t>(scn_.K()), std::nan(""));
                for (std::size_t p = 0; p < P_; ++p)
                    L[p] = x[p] == kInf ? 0.0 : comp_[p]->cdf(u - x[p]);
                return inner(u, v, L, -1);
            },
            0.0, 1.0, tol_);
    }

    // E[g(V) 1{W_j >= x_j} prod_{p != j} 1{W_p < W_j - x_j + x_p}]
    double contrast(std::size_t jp, const std::vector<double>& x)
    {
        const double xj = x[jp];
        if (xj == kInf)
            return 0.0;
        const int tj = scn_.others()[jp];
        return numeric::integrate(
            [&](double s) {
                const double u = uk_->quantile(level(s));
                const double top = xj == -kInf ? 1.0 : comp_[jp]->cdf(u - xj);
                return numeric::integrate(
                    [&](double sj) {
                        const double uj = comp_[jp]->quantile(level(sj));
                        std::vector<double> L(P_, 0.0), v(static_cast<std::size_t>(scn_.K()), std::nan(""));
                        v[static_cast<std::size_t>(tj)] = diff_[jp]->cdf(u - uj);
                        for (std::size_t p = 0; p < P_; ++p) {
                            if (p == jp)
                                continue;
                            if (x[p] == -kInf)
                                L[p] = 1.0;
                            else if (x[p] == kInf || xj == -kInf)
                                L[p] = 0.0;
                            else
                                L[p] = comp_[p]->cdf(uj + xj - x[p]);
                        }
                        return inner(u, v, L, static_cast<int>(jp));
                    },
                    0.0, top, tol_);
            },
            0.0, 1.0, tol_);
    }

    // E[g(V) | V_j = v] through the law of U_k given U_k - U_j = F_kj^-1(v).
    double given_vj(std::size_t jp, double vj)
    {
        const double w = diff_[jp]->quantile(vj);
        const int tj = scn_.others()[jp];
        double num = numeric::integrate(
            [&](double s) {
                const double u = uk_->quantile(level(s));
                const double dens = comp_[jp]->pdf(u - w);
                if (dens == 0.0)
                    return 0.0;
                std::vector<double> L(P_, 0.0), v(static_cast<std::size_t>(scn_.K()), std::nan(""));
                v[static_cast<std::size_t>(tj)] = vj;
                return dens * inner(u, v, L, static_cast<int>(jp));
            },
            0.0, 1.0, tol_);
        double den = numeric::integrate([&](double s) { return comp_[jp]->pdf(uk_->quantile(level(s)) - w); }, 0.0,
                                        1.0, tol_);
        if (!(den > 0.0))
            throw ConvergenceError("conditional density of U_k - U_j vanished");
        return num / den;
    }

private:
    double V(std::size_t p, double u, double s) const { return diff_[p]->cdf(u - comp_[p]->quantile(level(s))); }

    // E over the free positions of g(V) prod 1{s_p > L_p}; `fixed` is the
    // position already pinned in v, or -1.
    double inner(double u, std::vector<double>& v, const std::vector<double>& L, int fixed)
    {
        double mass = 1.0;
        for (std::size_t p = 0; p < P_; ++p) {
            if (static_cast<int>(p) == fixed)
                continue;
            if (L[p] >= 1.0)
                return 0.0;
        }
        if (affine_) {
            std::vector<double> m(P_, 1.0);
            for (std::size_t p = 0; p < P_; ++p)
                if (static_cast<int>(p) != fixed) {
                    m[p] = 1.0 - L[p];
                    mass *= m[p];
                }
            double c = constant_;
            if (fixed >= 0)
                c += coef_[static_cast<std::size_t>(fixed)] * v[static_cast<std::size_t>(scn_.others()[static_cast<std::size_t>(fixed)])];
            double val = c * mass;
            for (std::size_t p = 0; p < P_; ++p) {
                if (static_cast<int>(p) == fixed || coef_[p] == 0.0)
                    continue;
                const double A = numeric::integrate([&](double s) { return V(p, u, s); }, L[p], 1.0, tol_);
                double rest = 1.0;
                for (std::size_t q = 0; q < P_; ++q)
                    if (q != p && static_cast<int>(q) != fixed)
                        rest *= m[q];
                val += coef_[p] * A * rest;
            }
            return val;
        }
        std::vector<std::size_t> free_ref;
        for (std::size_t p = 0; p < P_; ++p) {
            if (static_cast<int>(p) == fixed)
                continue;
            if (ref_[p])
                free_ref.push_back(p);
            else
                mass *= 1.0 - L[p];
        }
        return mass * nested(0, free_ref, u, v, L);
    }

    double nested(std::size_t r, const std::vector<std::size_t>& free_ref, double u, std::vector<double>& v,
                  const std::vector<double>& L)
    {
        if (r == free_ref.size())
            return outcome_conditional_mean(scn_, G_, t_, v);
        const std::size_t p = free_ref[r];
        const auto tp = static_cast<std::size_t>(scn_.others()[p]);
        return numeric::integrate(
            [&](double s) {
                v[tp] = V(p, u, s);
                return nested(r + 1, free_ref, u, v, L);
            },
            L[p], 1.0, tol_);
    }

    const Scenario& scn_;
    const GFunction& G_;
    int t_;
    double tol_;
    std::size_t P_ = 0;
    const dist::UnivariateLaw* uk_ = nullptr;
    std::vector<const dist::UnivariateLaw*> comp_;
    std::vector<const dist::DifferenceLaw*> diff_;
    std::vector<bool> ref_;
    bool affine_ = false;
    double constant_ = 0.0;
    std::vector<double> coef_;
};

void check_q(const Scenario& scn, std::span<const double> q)
{
    if (q.size() != scn.others().size())
        throw DomainError("threshold vector has the wrong dimension");
    for (double x : q)
        if (!(x >= 0.0 && x <= 1.0))
            throw DomainError("thresholds must lie in [0, 1]");
}

// Monte Carlo fallback for jointly sampled errors.
Estimate cond_mean_mc(const Scenario& scn, const GFunction& G, int t, std::span<const double> q,
                      const IntegrationOptions& opts)
{
    const auto& others = scn.others();
    const auto& diffs = scn.laws().diffs;
    std::vector<double> x(q.size());
    for (std::size_t p = 0; p < q.size(); ++p)
        x[p] = diffs[p].quantile_closed(q[p]);
    const bool base = t == scn.baseline();
    const std::size_t jp = base ? 0 : static_cast<std::size_t>(scn.position(t));
    std::vector<double> vals(opts.mc_draws);
    for_each_chunk(opts.mc_draws, kChunk, 0, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
        Rng rng(mix_seed(opts.seed, chunk));
        std::vector<double> u(static_cast<std::size_t>(scn.K()));
        for (std::size_t n = begin; n < end; ++n) {
            scn.errors().sample(rng, u);
            const auto v = dist::v_from_u(scn.laws(), u);
            bool in = true;
            if (base) {
                for (std::size_t p = 0; p < v.size(); ++p)
                    in = in && v[p] < q[p];
            } else {
                in = v[jp] >= q[jp];
                const double wj = diffs[jp].quantile_closed(v[jp]);
                for (std::size_t p = 0; p < v.size() && in; ++p)
                    if (p != jp)
                        in = v[p] < diffs[p].cdf(wj - x[jp] + x[p]);
            }
            vals[n] = in ? outcome_conditional_mean(scn, G, t, scn.by_treatment(v)) : 0.0;
        }
    });
    (void)others;
    const auto ms = numeric::mean_and_se(vals);
    return Estimate{ms.mean, 0.0, ms.se};
}

} // namespace

Estimate cond_mean_GD(const Scenario& scn, const GFunction& G, int t, std::span<const double> q,
                      const IntegrationOptions& opts)
{
    check_q(scn, q);
    if (t < 0 || t >= scn.K())
        throw DomainError("treatment out of range");
    if (!scn.errors().independent())
        return cond_mean_mc(scn, G, t, q, opts);
    const auto& diffs = scn.laws().diffs;
    std::vector<double> x(q.size());
    for (std::size_t p = 0; p < q.size(); ++p)
        x[p] = diffs[p].quantile_closed(q[p]);
    Engine eng(scn, G, t, opts.rel_tol);
    Estimate e;
    e.value = t == scn.baseline() ? eng.baseline(x) : eng.contrast(static_cast<std::size_t>(scn.position(t)), x);
    return e;
}

Estimate extended_cond_mean_GD(const Scenario& scn, const GFunction& G, int t, int contrast, double qj,
                               const IntegrationOptions& opts)
{
    if (contrast == scn.baseline())
        throw DomainError("contrast must differ from the baseline");
    if (t != scn.baseline() && t != contrast)
        throw DomainError("treatment must be the baseline or the contrast");
    if (!(qj > 0.0 && qj < 1.0))
        throw DomainError("contrast threshold must lie in (0, 1)");
    std::vector<double> q(scn.others().size(), 1.0);
    q[static_cast<std::size_t>(scn.position(contrast))] = qj;
    return cond_mean_GD(scn, G, t, q, opts);
}

ExtensionCheck check_extension(const Scenario& scn, const GFunction& G, int t, int contrast, double qj,
                               const IntegrationOptions& opts, double tol)
{
    ExtensionCheck c;
    c.boundary = extended_cond_mean_GD(scn, G, t, contrast, qj, opts).value;
    const auto jp = static_cast<std::size_t>(scn.position(contrast));
    const double room = std::min(qj, 1.0 - qj);
    // Gaps shrink like eps, so the tail of eps = 1e-5 .. 1e-8 resolves tol = 1e-4.
    for (int m = 1; m <= 8; ++m) {
        const double eps = std::pow(10.0, -m);
        c.approach.push_back(1.0 - eps);
        std::vector<double> q(scn.others().size(), 1.0 - eps);
        q[jp] = qj;
        c.interior.push_back(cond_mean_GD(scn, G, t, q, opts).value);
        q[jp] = qj + 0.5 * room * eps;
        c.diagonal.push_back(cond_mean_GD(scn, G, t, q, opts).value);
    }
    const auto axis = extension::cauchy_image(c.interior, tol);
    const auto diag = extension::cauchy_image(c.diagonal, tol);
    c.cauchy = axis.cauchy && diag.cauchy;
    c.final_mismatch = std::max(std::fabs(c.interior.back() - c.boundary), std::fabs(c.diagonal.back() - c.boundary));
    if (!c.cauchy)
        throw ExtensionError("interior approach to the boundary is not Cauchy");
    if (c.final_mismatch > tol)
        throw ExtensionError("interior approach ends " + std::to_string(c.final_mismatch) +
                             " away from the boundary value");
    return c;
}

double conditional_mean_given_vj(const Scenario& scn, const GFunction& G, int t, int contrast, double v,
                                 const IntegrationOptions& opts)
{
    if (!(v > 0.0 && v < 1.0))
        throw DomainError("conditioning value must lie in (0, 1)");
    Engine eng(scn, G, t, opts.rel_tol);
    return eng.given_vj(static_cast<std::size_t>(scn.position(contrast)), v);
}

double boundary_integral_1d(const Scenario& scn, const GFunction& G, int t, int contrast, double qj,
                            const IntegrationOptions& opts)
{
    if (!(qj > 0.0 && qj < 1.0))
        throw DomainError("contrast threshold must lie in (0, 1)");
    Engine eng(scn, G, t, opts.rel_tol);
    const auto jp = static_cast<std::size_t>(scn.position(contrast));
    auto f = [&](double v) { return eng.given_vj(jp, std::clamp(v, 1e-10, 1.0 - 1e-10)); };
    if (t == scn.baseline())
        return numeric::integrate(f, 0.0, qj, opts.rel_tol);
    if (t == contrast)
        return numeric::integrate(f, qj, 1.0, opts.rel_tol);
    throw DomainError("treatment must be the baseline or the contrast");
}

DerivativeDiagnostics boundary_derivative(const Scenario& scn, const GFunction& G, int t, const BoundaryPoint& bp,
                                          std::optional<double> h, const IntegrationOptions& opts, double tol)
{
    bp.validate();
    DerivativeDiagnostics d;
    d.h = h ? *h : std::max(1e-4, std::cbrt(opts.rel_tol));
    if (!(d.h > 0.0) || 2.0 * d.h >= bp.delta)
        throw StepSizeError("finite-difference stencil leaves the neighbourhood of q*");
    auto F = [&](double q) {
        ++d.evaluations;
        return extended_cond_mean_GD(scn, G, t, bp.contrast, q, opts).value;
    };
    const double q = bp.qstar;
    d.central_h = (F(q + d.h) - F(q - d.h)) / (2.0 * d.h);
    d.central_h2 = (F(q + 0.5 * d.h) - F(q - 0.5 * d.h)) / d.h;
    d.richardson = (4.0 * d.central_h2 - d.central_h) / 3.0;
    if (std::fabs(d.richardson - d.central_h2) > tol)
        throw StepSizeError("Richardson extrapolation disagrees with the finer difference by " +
                            std::to_string(std::fabs(d.richardson - d.central_h2)));
    return d;
}

MteResult mte_identified(const Scenario& scn, const GFunction& G, const BoundaryPoint& bp, std::optional<double> h,
                         const IntegrationOptions& opts)
{
    bp.validate();
    MteResult r;
    r.point = bp;
    r.baseline_diag = boundary_derivative(scn, G, scn.baseline(), bp, h, opts);
    r.contrast_diag = boundary_derivative(scn, G, bp.contrast, bp, h, opts);
    r.baseline_value = r.baseline_diag.richardson;
    r.contrast_value = -r.contrast_diag.richardson;
    r.mte = r.baseline_value - r.contrast_value;
    return r;
}

MteOracle mte_oracle(const Scenario& scn, const GFunction& G, const BoundaryPoint& bp, const IntegrationOptions& opts)
{
    bp.validate();
    MteOracle o;
    o.baseline_value = conditional_mean_given_vj(scn, G, scn.baseline(), bp.contrast, bp.qstar, opts);
    o.contrast_value = conditional_mean_given_vj(scn, G, bp.contrast, bp.contrast, bp.qstar, opts);
    o.mte = o.baseline_value - o.contrast_value;
    return o;
}

std::vector<double> choice_probabilities(const Scenario& scn, std::span<const double> z, const IntegrationOptions& opts)
{
    const auto R = scn.utilities(z);
    const auto K = static_cast<std::size_t>(scn.K());
    std::vector<double> pr(K, 0.0);
    if (!scn.errors().independent()) {
        std::vector<double> u(K);
        Rng rng(opts.seed);
        for (std::size_t n = 0; n < opts.mc_draws; ++n) {
            scn.errors().sample(rng, u);
            pr[static_cast<std::size_t>(choose(scn, z, u).chosen)] += 1.0;
        }
        for (auto& p : pr)
            p /= static_cast<double>(opts.mc_draws);
        return pr;
    }
    for (std::size_t m = 0; m < K; ++m) {
        if (R[m] == -kInf)
            continue;
        const auto& um = scn.errors().component(m);
        pr[m] = numeric::integrate(
            [&](double s) {
                const double u = um.quantile(level(s));
                double prod = 1.0;
                for (std::size_t l = 0; l < K && prod > 0.0; ++l) {
                    if (l == m || R[l] == -kInf)
                        continue;
                    prod *= 1.0 - scn.errors().component(l).cdf(u + R[l] - R[m]);
                }
                return prod;
            },
            0.0, 1.0, opts.rel_tol);
    }
    return pr;
}

double baseline_share(const Scenario& scn, std::span<const double> z, const IntegrationOptions& opts)
{
    const auto tv = thresholds(scn, z);
    return dist::joint_cdf_V(scn.errors(), scn.laws(), tv.q, opts.mc_draws, opts.seed).value;
}

double extrapolate_limit(std::span<const double> H, std::span<const double> rate)
{
    if (H.empty() || H.size() != rate.size())
        throw DomainError("limit trace is empty or ragged");
    const std::size_t L = H.size();
    double lim = H[L - 1];
    if (L >= 2) {
        const double dr = rate[L - 2] - rate[L - 1];
        if (dr > 0.0 && rate[L - 1] >= 0.0)
            lim = H[L - 1] + rate[L - 1] * (H[L - 1] - H[L - 2]) / dr;
    }
    return std::clamp(lim, 0.0, 1.0);
}

namespace {

LimitTrace trace_limit(const Scenario& scn, std::span<const double> z, int target, const IntegrationOptions& opts)
{
    LimitTrace tr;
    tr.target = target;
    for (int m : scn.others())
        if (m != target)
            tr.pushed.push_back(m);
    std::vector<std::vector<double>> sched;
    std::size_t steps = tr.pushed.empty() ? 1 : std::numeric_limits<std::size_t>::max();
    for (int m : tr.pushed) {
        sched.push_back(scn.exclusion_for(m).schedule());
        steps = std::min(steps, sched.back().size());
    }
    for (std::size_t n = 0; n < steps; ++n) {
        std::vector<double> zn(z.begin(), z.end());
        for (std::size_t i = 0; i < tr.pushed.size(); ++i)
            zn[static_cast<std::size_t>(scn.exclusion_for(tr.pushed[i]).coordinate)] = sched[i][n];
        const auto pr = choice_probabilities(scn, zn, opts);
        double rate = 0.0;
        for (int m : tr.pushed)
            rate += pr[static_cast<std::size_t>(m)];
        tr.z.push_back(zn);
        tr.H.push_back(baseline_share(scn, zn, opts));
        tr.rate.push_back(rate);
    }
    tr.limit = extrapolate_limit(tr.H, tr.rate);
    return tr;
}

void check_trace(const LimitTrace& tr, double settle_tol)
{
    for (std::size_t n = 1; n < tr.H.size(); ++n)
        if (tr.H[n] < tr.H[n - 1] - 1e-10)
            throw ConvergenceError("limit trace is not monotone");
    if (tr.H.size() >= 2 && std::fabs(tr.H.back() - tr.H[tr.H.size() - 2]) > settle_tol)
        throw ConvergenceError("limit trace has not settled; extend the exclusion schedule");
}

} // namespace

ThresholdIdentification identify_thresholds_by_limit(const Scenario& scn, std::span<const double> z,
                                                     const IntegrationOptions& opts, double settle_tol)
{
    ThresholdIdentification out;
    const auto tv = thresholds(scn, z);
    for (std::size_t p = 0; p < scn.others().size(); ++p) {
        auto tr = trace_limit(scn, z, scn.others()[p], opts);
        tr.closed_form = tv.q[p];
        check_trace(tr, settle_tol);
        out.recovered.push_back(tr.limit);
        out.closed_form.push_back(tr.closed_form);
        out.traces.push_back(std::move(tr));
    }
    return out;
}

LimitTrace all_pushed_trace(const Scenario& scn, std::span<const double> z, const IntegrationOptions& opts)
{
    auto tr = trace_limit(scn, z, -1, opts);
    tr.closed_form = 1.0;
    return tr;
}

std::vector<QteResult> qte(const Scenario& scn, const BoundaryPoint& bp, std::span<const double> taus,
                           std::span<const double> y_grid, const IntegrationOptions& opts)
{
    bp.validate();
    for (double tau : taus)
        if (!(tau > 0.0 && tau < 1.0))
            throw DomainError("quantile level must lie in (0, 1)");
    if (y_grid.size() < 2)
        throw DomainError("outcome grid needs at least two points");
    QteResult base;
    base.y.assign(y_grid.begin(), y_grid.end());
    for (std::size_t n = 1; n < base.y.size(); ++n)
        if (!(base.y[n] > base.y[n - 1]))
            throw DomainError("outcome grid must be strictly increasing");
    for (double y : base.y) {
        const auto G = GFunction::indicator_below(y);
        base.cdf_k.push_back(boundary_derivative(scn, G, scn.baseline(), bp, std::nullopt, opts).richardson);
        base.cdf_j.push_back(-boundary_derivative(scn, G, bp.contrast, bp, std::nullopt, opts).richardson);
    }
    auto monotone = [&](std::vector<double> F, const char* which) {
        for (std::size_t n = 1; n < F.size(); ++n)
            if (F[n] < F[n - 1] - 1e-6)
                throw MonotonicityError(std::string("recovered conditional CDF of ") + which + " decreases");
        for (std::size_t n = 0; n < F.size(); ++n) {
            F[n] = std::clamp(F[n], 0.0, 1.0);
            if (n > 0)
                F[n] = std::max(F[n], F[n - 1]);
        }
        return F;
    };
    const auto Fk = monotone(base.cdf_k, "the baseline outcome");
    const auto Fj = monotone(base.cdf_j, "the contrast outcome");
    const numeric::MonotoneInterpolant ik(base.y, Fk), ij(base.y, Fj);
    std::vector<QteResult> out;
    for (double tau : taus) {
        if (!(Fk.front() <= tau && tau <= Fk.back()))
            throw DomainError("outcome grid does not bracket the quantile of the baseline outcome");
        if (!(Fj.front() <= tau && tau <= Fj.back()))
            throw DomainError("outcome grid does not bracket the quantile of the contrast outcome");
        QteResult r = base;
        r.tau = tau;
        r.cdf_k = Fk;
        r.cdf_j = Fj;
        r.quantile_k = ik.inverse(tau);
        r.quantile_j = ij.inverse(tau);
        r.qte = r.quantile_k - r.quantile_j;
        out.push_back(std::move(r));
    }
    return out;
}

QteResult qte(const Scenario& scn, const BoundaryPoint& bp, double tau, std::span<const double> y_grid,
              const IntegrationOptions& opts)
{
    const double taus[] = {tau};
    return qte(scn, bp, taus, y_grid, opts).front();
}

double conditional_quantile_given_vj(const Scenario& scn, int t, int contrast, double v, double tau,
                                     const IntegrationOptions& opts)
{
    if (!(tau > 0.0 && tau < 1.0))
        throw DomainError("quantile level must lie in (0, 1)");
    auto F = [&](double y) { return conditional_mean_given_vj(scn, GFunction::indicator_below(y), t, contrast, v, opts); };
    double lo = 0.0, hi = 0.0;
    numeric::bracket_increasing(F, tau, conditional_mean_given_vj(scn, GFunction::identity(), t, contrast, v, opts),
                                1.0, lo, hi);
    // Bisection to a fixed width keeps the number of quadratures bounded.
    for (int it = 0; it < 200 && hi - lo > 1e-10 * (1.0 + std::fabs(lo)); ++it) {
        const double mid = 0.5 * (lo + hi);
        (F(mid) < tau ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace mte::population
