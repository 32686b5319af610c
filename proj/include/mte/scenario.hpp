#pragma once

#include "mte/expression.hpp"
#include "mte/laws.hpp"
#include "mte/rng.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mte {

// Potential outcome Y_t = mean(V) + noise, noise independent of V.
struct OutcomeSpec {
    expr::Expression mean;
    std::optional<dist::UnivariateLaw> noise;
};

// Sends the utility of `treatment` to minus infinity by moving instrument
// coordinate `coordinate` toward `limit`. With a finite limit the schedule is
// limit + (start - limit) * factor^n; with an infinite limit it moves by
// `factor` per step from start.
struct ExclusionSpec {
    int treatment = 0;
    int coordinate = 0;
    double limit = 0.0;
    double start = 1.0;
    double factor = 0.1;
    int steps = 6;

    std::vector<double> schedule() const;
};

// How strictly the utilities of other treatments must ignore the pushed
// coordinate: not at all along it, or by being constant in every coordinate.
enum class ExclusionReading { along_coordinate, global };

struct ScenarioSpec {
    std::string name = "scenario";
    int baseline = 0;
    std::vector<expr::Expression> utilities;
    std::vector<dist::UnivariateLaw> instruments;
    dist::ErrorVectorLaw errors;
    std::vector<OutcomeSpec> outcomes;
    std::vector<ExclusionSpec> exclusions;
    ExclusionReading reading = ExclusionReading::along_coordinate;
    dist::DifferenceOptions diff_options;
};

// Throws ConfigError when sizes, indices or exclusion specs are inconsistent.
void validate_spec(const ScenarioSpec& spec);

class Scenario {
public:
    explicit Scenario(ScenarioSpec spec);

    const ScenarioSpec& spec() const { return spec_; }
    int K() const { return static_cast<int>(spec_.utilities.size()); }
    int baseline() const { return spec_.baseline; }
    const std::vector<int>& others() const { return laws_.others; }
    int position(int treatment) const { return laws_.position(treatment); }
    std::size_t instrument_dim() const { return spec_.instruments.size(); }
    const dist::ErrorVectorLaw& errors() const { return spec_.errors; }
    const dist::BaselineLaws& laws() const { return laws_; }
    const dist::DifferenceLaw& diff(int treatment) const { return laws_.diffs[static_cast<std::size_t>(position(treatment))]; }

    std::vector<double> utilities(std::span<const double> z) const;
    void sample_instruments(Rng& rng, std::span<double> z) const;
    // Scatters a heterogeneity vector indexed by position into one indexed by
    // treatment; the baseline entry is NaN.
    std::vector<double> by_treatment(std::span<const double> v) const;
    // Exclusion spec pushing `treatment`; throws ConfigError when absent.
    const ExclusionSpec& exclusion_for(int treatment) const;

private:
    ScenarioSpec spec_;
    dist::BaselineLaws laws_;
};

// Outcome transformation G applied inside expectations.
struct GFunction {
    enum class Kind { identity, indicator_below, expression };
    Kind kind = Kind::identity;
    double y = 0.0;
    expr::Expression e;

    static GFunction identity() { return {}; }
    static GFunction indicator_below(double y) { return {Kind::indicator_below, y, {}}; }
    static GFunction expression(expr::Expression e);

    double operator()(double y) const;
    std::string describe() const;
};

// E[G(Y_t) | V = v] with v indexed by treatment.
double outcome_conditional_mean(const Scenario& scn, const GFunction& G, int t, std::span<const double> v_by_treatment);

double draw_outcome(const Scenario& scn, int t, std::span<const double> v_by_treatment, Rng& rng);

// Share of each treatment among simulated choices; throws DomainError when a
// treatment is never chosen.
std::vector<double> check_treatment_support(const Scenario& scn, std::size_t draws, std::uint64_t seed);

} // namespace mte
