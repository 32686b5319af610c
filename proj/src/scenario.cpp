#include "mte/scenario.hpp"

#include "mte/errors.hpp"
#include "mte/selection.hpp"

#include <cmath>

namespace mte {

std::vector<double> ExclusionSpec::schedule() const
{
    std::vector<double> z;
    for (int n = 1; n <= steps; ++n) {
        if (std::isinf(limit))
            z.push_back(start + (limit > 0 ? 1.0 : -1.0) * factor * static_cast<double>(n));
        else
            z.push_back(limit + (start - limit) * std::pow(factor, n));
    }
    return z;
}

void validate_spec(const ScenarioSpec& s)
{
    const int K = static_cast<int>(s.utilities.size());
    if (K < 2)
        throw ConfigError("a scenario needs at least two treatments");
    if (static_cast<int>(s.errors.size()) != K)
        throw ConfigError("error vector size does not match the number of treatments");
    if (static_cast<int>(s.outcomes.size()) != K)
        throw ConfigError("one outcome is required per treatment");
    if (s.baseline < 0 || s.baseline >= K)
        throw ConfigError("baseline treatment out of range");
    const int dim = static_cast<int>(s.instruments.size());
    for (int t = 0; t < K; ++t) {
        const auto& R = s.utilities[static_cast<std::size_t>(t)];
        if (!R.v_refs().empty() || R.uses_y())
            throw ConfigError("utility " + std::to_string(t) + " may only reference instruments z[i]");
        for (int c : R.z_refs())
            if (c >= dim)
                throw ConfigError("utility " + std::to_string(t) + " references a missing instrument coordinate");
        const auto& m = s.outcomes[static_cast<std::size_t>(t)].mean;
        if (!m.z_refs().empty() || m.uses_y())
            throw ConfigError("outcome " + std::to_string(t) + " may only reference heterogeneity coordinates v[i]");
        for (int c : m.v_refs())
            if (c >= K || c == s.baseline)
                throw ConfigError("outcome " + std::to_string(t) + " references v[" + std::to_string(c) +
                                  "], which is not a non-baseline treatment");
    }
    for (const auto& e : s.exclusions) {
        if (e.treatment < 0 || e.treatment >= K || e.treatment == s.baseline)
            throw ConfigError("exclusion spec must name a non-baseline treatment");
        if (e.coordinate < 0 || e.coordinate >= dim)
            throw ConfigError("exclusion spec names a missing instrument coordinate");
        if (e.steps < 2)
            throw ConfigError("exclusion schedule needs at least two steps");
        if (std::isinf(e.limit) ? !(e.factor > 0.0) : !(e.factor > 0.0 && e.factor < 1.0))
            throw ConfigError("exclusion schedule factor out of range");
        if (!s.utilities[static_cast<std::size_t>(e.treatment)].z_refs().count(e.coordinate))
            throw ConfigError("exclusion coordinate does not enter the pushed utility");
        for (int t = 0; t < K; ++t) {
            if (t == e.treatment)
                continue;
            const auto refs = s.utilities[static_cast<std::size_t>(t)].z_refs();
            const bool varies = s.reading == ExclusionReading::global ? !refs.empty() : refs.count(e.coordinate) > 0;
            if (varies)
                throw ConfigError("utility " + std::to_string(t) + " is not constant under the exclusion for treatment " +
                                  std::to_string(e.treatment));
        }
    }
}

Scenario::Scenario(ScenarioSpec spec) : spec_(std::move(spec))
{
    validate_spec(spec_);
    laws_ = dist::baseline_laws(spec_.errors, spec_.baseline, spec_.diff_options);
}

std::vector<double> Scenario::utilities(std::span<const double> z) const
{
    if (z.size() != instrument_dim())
        throw DomainError("instrument vector has the wrong dimension");
    std::vector<double> R(static_cast<std::size_t>(K()));
    expr::Context ctx{z, {}, 0.0};
    for (std::size_t t = 0; t < R.size(); ++t)
        R[t] = spec_.utilities[t].eval(ctx);
    return R;
}

void Scenario::sample_instruments(Rng& rng, std::span<double> z) const
{
    for (std::size_t c = 0; c < z.size(); ++c)
        z[c] = spec_.instruments[c].sample(rng);
}

std::vector<double> Scenario::by_treatment(std::span<const double> v) const
{
    std::vector<double> out(static_cast<std::size_t>(K()), std::nan(""));
    for (std::size_t p = 0; p < v.size(); ++p)
        out[static_cast<std::size_t>(laws_.others[p])] = v[p];
    return out;
}

const ExclusionSpec& Scenario::exclusion_for(int treatment) const
{
    for (const auto& e : spec_.exclusions)
        if (e.treatment == treatment)
            return e;
    throw ConfigError("no exclusion spec for treatment " + std::to_string(treatment));
}

GFunction GFunction::expression(expr::Expression e)
{
    if (!e.z_refs().empty() || !e.v_refs().empty())
        throw ConfigError("G expressions may only reference y");
    GFunction g;
    g.kind = Kind::expression;
    g.e = std::move(e);
    return g;
}

double GFunction::operator()(double y) const
{
    switch (kind) {
    case Kind::identity:
        return y;
    case Kind::indicator_below:
        return y <= this->y ? 1.0 : 0.0;
    case Kind::expression:
        return e.eval(expr::Context{{}, {}, y});
    }
    return 0.0;
}

std::string GFunction::describe() const
{
    switch (kind) {
    case Kind::identity:
        return "identity";
    case Kind::indicator_below: {
        char buf[64];
        std::snprintf(buf, sizeof buf, "indicator_below(%.17g)", y);
        return buf;
    }
    case Kind::expression:
        return "expression(" + e.str() + ")";
    }
    return "";
}

double outcome_conditional_mean(const Scenario& scn, const GFunction& G, int t, std::span<const double> v_by_treatment)
{
    const auto& out = scn.spec().outcomes.at(static_cast<std::size_t>(t));
    const double m = out.mean.eval(expr::Context{{}, v_by_treatment, 0.0});
    if (!out.noise)
        return G(m);
    const auto& eps = *out.noise;
    switch (G.kind) {
    case GFunction::Kind::identity:
        return m + eps.mean();
    case GFunction::Kind::indicator_below:
        return eps.cdf(G.y - m);
    case GFunction::Kind::expression:
        return numeric::integrate(
            [&](double s) { return G(m + eps.quantile(std::clamp(s, 1e-300, 1.0 - 0x1.0p-53))); }, 0.0, 1.0, 1e-10);
    }
    return 0.0;
}

double draw_outcome(const Scenario& scn, int t, std::span<const double> v_by_treatment, Rng& rng)
{
    const auto& out = scn.spec().outcomes.at(static_cast<std::size_t>(t));
    const double m = out.mean.eval(expr::Context{{}, v_by_treatment, 0.0});
    return out.noise ? m + out.noise->sample(rng) : m;
}

std::vector<double> check_treatment_support(const Scenario& scn, std::size_t draws, std::uint64_t seed)
{
    std::vector<double> share(static_cast<std::size_t>(scn.K()), 0.0);
    Rng rng(seed);
    std::vector<double> z(scn.instrument_dim()), u(static_cast<std::size_t>(scn.K()));
    for (std::size_t n = 0; n < draws; ++n) {
        scn.sample_instruments(rng, z);
        scn.errors().sample(rng, u);
        share[static_cast<std::size_t>(choose(scn, z, u).chosen)] += 1.0;
    }
    for (std::size_t t = 0; t < share.size(); ++t) {
        share[t] /= static_cast<double>(draws);
        if (share[t] == 0.0)
            throw DomainError("treatment " + std::to_string(t) + " is never chosen under the instrument law");
    }
    return share;
}

} // namespace mte
