#pragma once

#include "mte/scenario.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

// Declarative scenario configuration: JSON in, canonical JSON out.
// Infinite numbers are written as the strings "inf" and "-inf".
namespace mte::config {

// Univariate law by name and parameter list. Gaussian parameters are
// (mean, variance) unless the config selects the std_dev convention.
struct LawConfig {
    std::string kind = "gaussian";
    std::vector<double> params;

    bool operator==(const LawConfig&) const = default;
};

struct ErrorsConfig {
    std::string kind = "independent"; // independent | multivariate_normal
    std::vector<LawConfig> components;
    std::vector<double> mean;
    std::vector<std::vector<double>> covariance;

    bool operator==(const ErrorsConfig&) const = default;
};

struct OutcomeConfig {
    std::string mean; // canonical expression text
    std::optional<LawConfig> noise;

    bool operator==(const OutcomeConfig&) const = default;
};

struct ExclusionConfig {
    int treatment = 0;
    int coordinate = 0;
    double limit = 0.0;
    double start = 1.0;
    double factor = 0.1;
    int steps = 6;

    bool operator==(const ExclusionConfig&) const = default;
};

struct GConfig {
    std::string kind = "identity"; // identity | indicator_below | expression
    double y = 0.0;
    std::string expression;

    bool operator==(const GConfig&) const = default;
};

struct KernelConfig {
    std::string kernel = "epanechnikov"; // epanechnikov | gaussian
    std::string bandwidth = "silverman"; // silverman | fixed
    double fixed = 0.1;
    int order = 1;

    bool operator==(const KernelConfig&) const = default;
};

struct GridsConfig {
    std::vector<double> qstar{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    std::vector<double> y;     // QTE outcome grid; empty disables QTE
    std::vector<double> tau;   // QTE levels
    std::vector<std::vector<double>> z_points; // threshold identification points
    std::vector<double> eps{0.1, 0.05, 0.025};
    std::vector<std::vector<double>> h_points; // share estimation points
    std::vector<double> estimate_qstar{0.5};    // finite-sample MTE points
    std::vector<double> qte_qstar{0.5};         // QTE evaluation points

    bool operator==(const GridsConfig&) const = default;
};

struct SizesConfig {
    std::size_t verify_draws = 100'000;
    std::size_t cloud_points = 100'000;
    std::size_t control_points = 1'000'000;
    std::size_t sample_n = 200'000;
    std::size_t mc_draws = 1'000'000;
    std::size_t threshold_grid = 41;

    bool operator==(const SizesConfig&) const = default;
};

struct TolerancesConfig {
    double rel_tol = 1e-10;
    double delta = 0.05;
    double mte_abs = 1e-3;
    double threshold_abs = 1e-4;
    double settle = 1e-6;
    double extension = 1e-4;
    double min_effective = 200.0;

    bool operator==(const TolerancesConfig&) const = default;
};

struct ScenarioConfig {
    std::string name = "scenario";
    int baseline = 0;
    int contrast = -1; // -1: every non-baseline treatment
    std::string variance_convention = "variance"; // variance | std_dev
    std::string exclusion_reading = "along_coordinate"; // along_coordinate | global
    std::vector<std::string> utilities;
    std::vector<LawConfig> instruments;
    ErrorsConfig errors;
    std::vector<OutcomeConfig> outcomes;
    std::vector<ExclusionConfig> exclusions;
    bool force_numeric_difference = false;
    GConfig g;
    KernelConfig kernel;
    GridsConfig grids;
    SizesConfig sizes;
    TolerancesConfig tolerances;
    std::uint64_t seed = 20261016;

    bool operator==(const ScenarioConfig&) const = default;

    // Non-baseline treatments used as contrasts.
    std::vector<int> contrasts() const;
};

// Throws ConfigError on missing fields, wrong types, unknown names, or
// expressions that do not parse or reference missing indices.
ScenarioConfig parse(const nlohmann::json& j);
ScenarioConfig load(const std::string& path);
nlohmann::json to_json(const ScenarioConfig& c);

// FNV-1a 64 of the canonical serialization, as 16 hex digits.
std::string fingerprint(const ScenarioConfig& c);

dist::UnivariateLaw build_law(const LawConfig& l, const std::string& variance_convention);
ScenarioSpec build_spec(const ScenarioConfig& c);
GFunction build_g(const GConfig& g);

// Number written as JSON, with infinities as strings.
nlohmann::json number(double x);
double read_number(const nlohmann::json& j, const std::string& what);

} // namespace mte::config
