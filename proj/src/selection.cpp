#include "mte/selection.hpp"

#include "mte/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <mutex>

namespace mte {

ChoiceOutcome choose(const Scenario& scn, std::span<const double> z, std::span<const double> u)
{
    if (u.size() != static_cast<std::size_t>(scn.K()))
        throw DomainError("error vector has the wrong dimension");
    ChoiceOutcome out;
    out.latent = scn.utilities(z);
    for (std::size_t t = 0; t < out.latent.size(); ++t)
        out.latent[t] -= u[t];
    double best = -numeric::kInf, second = -numeric::kInf;
    int arg = -1;
    for (std::size_t t = 0; t < out.latent.size(); ++t) {
        const double x = out.latent[t];
        if (std::isnan(x))
            throw DomainError("latent utility is NaN");
        if (x > best) {
            second = best;
            best = x;
            arg = static_cast<int>(t);
        } else if (x > second) {
            second = x;
        }
    }
    if (!(best > second))
        throw TieError("latent utilities tie at the maximum");
    out.chosen = arg;
    out.gap = best - second;
    return out;
}

ThresholdVector thresholds(const Scenario& scn, std::span<const double> z)
{
    const auto R = scn.utilities(z);
    const auto& others = scn.others();
    ThresholdVector tv;
    tv.q.resize(others.size());
    tv.index.resize(others.size());
    const double Rk = R[static_cast<std::size_t>(scn.baseline())];
    for (std::size_t p = 0; p < others.size(); ++p) {
        double idx = Rk - R[static_cast<std::size_t>(others[p])];
        if (std::isnan(idx)) // both utilities infinite in the same direction
            throw DomainError("threshold index is undefined");
        tv.index[p] = idx;
        tv.q[p] = scn.laws().diffs[p].cdf(idx);
    }
    return tv;
}

namespace {

double interior_quantile(const dist::DifferenceLaw& law, double p, const char* what)
{
    if (!(p > 0.0 && p < 1.0))
        throw BoundaryError(std::string(what) + " sits at the edge of [0, 1]");
    return law.quantile(p);
}

} // namespace

HurdleIndicators hurdle_indicators(const Scenario& scn, std::span<const double> z, std::span<const double> v,
                                   int contrast)
{
    const auto& others = scn.others();
    if (v.size() != others.size())
        throw DomainError("heterogeneity vector has the wrong dimension");
    const int jp = scn.position(contrast);
    const auto tv = thresholds(scn, z);
    const auto& diffs = scn.laws().diffs;
    HurdleIndicators h;
    h.contrast = contrast;
    h.s.resize(others.size());
    h.s_star.assign(others.size(), -1);
    for (std::size_t p = 0; p < others.size(); ++p)
        h.s[p] = v[p] < tv.q[p] ? 1 : 0;
    const auto j = static_cast<std::size_t>(jp);
    const double shift = interior_quantile(diffs[j], v[j], "V_j") - interior_quantile(diffs[j], tv.q[j], "Q_j");
    for (std::size_t p = 0; p < others.size(); ++p) {
        if (p == j)
            continue;
        const double bound = diffs[p].cdf(shift + interior_quantile(diffs[p], tv.q[p], "Q_i"));
        h.s_star[p] = v[p] < bound ? 1 : 0;
    }
    return h;
}

std::vector<int> represented_choice(const Scenario& scn, std::span<const double> z, std::span<const double> v)
{
    const auto& others = scn.others();
    std::vector<int> D(static_cast<std::size_t>(scn.K()), 0);
    int dk = 1;
    for (int contrast : others) {
        const auto h = hurdle_indicators(scn, z, v, contrast);
        const auto jp = static_cast<std::size_t>(scn.position(contrast));
        int dj = 1 - h.s[jp];
        for (std::size_t p = 0; p < others.size(); ++p)
            if (p != jp)
                dj *= h.s_star[p];
        D[static_cast<std::size_t>(contrast)] = dj;
        if (contrast == others.front())
            for (int s : h.s)
                dk *= s;
    }
    D[static_cast<std::size_t>(scn.baseline())] = dk;
    return D;
}

RepresentationReport verify_representation(const Scenario& scn, std::size_t n, std::uint64_t seed,
                                           double tie_tolerance, unsigned threads)
{
    const auto t0 = std::chrono::steady_clock::now();
    RepresentationReport rep;
    rep.draws = n;
    std::mutex mu;
    const auto& others = scn.others();
    const bool three = scn.K() == 3;
    for_each_chunk(n, kChunk, threads, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
        Rng rng(mix_seed(seed, chunk));
        std::vector<double> z(scn.instrument_dim()), u(static_cast<std::size_t>(scn.K()));
        std::size_t mism = 0, tol = 0, bnd = 0;
        std::vector<RepresentationMismatch> ex;
        for (std::size_t d = begin; d < end; ++d) {
            scn.sample_instruments(rng, z);
            scn.errors().sample(rng, u);
            const auto choice = choose(scn, z, u);
            const auto v = dist::v_from_u(scn.laws(), u);
            std::vector<int> D;
            bool ok = true;
            try {
                D = represented_choice(scn, z, v);
                for (std::size_t t = 0; t < D.size(); ++t)
                    ok = ok && D[t] == (static_cast<int>(t) == choice.chosen ? 1 : 0);
                if (three) {
                    for (std::size_t jp = 0; jp < 2; ++jp) {
                        const auto h = hurdle_indicators(scn, z, v, others[jp]);
                        const std::size_t mp = 1 - jp;
                        const int dm = (1 - h.s[mp]) * (1 - h.s_star[mp]);
                        ok = ok && dm == D[static_cast<std::size_t>(others[mp])];
                    }
                }
            } catch (const BoundaryError&) {
                ++bnd;
                continue;
            }
            if (ok)
                continue;
            if (choice.gap <= tie_tolerance) {
                ++tol;
                continue;
            }
            ++mism;
            if (ex.size() < 10)
                ex.push_back({z, u, v, choice.chosen, D, choice.gap});
        }
        std::lock_guard<std::mutex> lock(mu);
        rep.mismatches += mism;
        rep.tolerated += tol;
        rep.boundary += bnd;
        for (auto& e : ex)
            if (rep.examples.size() < 10)
                rep.examples.push_back(std::move(e));
    });
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

} // namespace mte
