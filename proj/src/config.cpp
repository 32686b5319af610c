#include "mte/config.hpp"

#include "mte/errors.hpp"
#include "mte/expression.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace mte::config {

using nlohmann::json;

json number(double x)
{
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    if (std::isnan(x))
        throw ConfigError("NaN cannot be serialized");
    return x;
}

double read_number(const json& j, const std::string& what)
{
    if (j.is_number())
        return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf" || s == "+inf")
            return numeric::kInf;
        if (s == "-inf")
            return -numeric::kInf;
    }
    throw ConfigError(what + " must be a number, \"inf\" or \"-inf\"");
}

std::vector<int> ScenarioConfig::contrasts() const
{
    if (contrast >= 0)
        return {contrast};
    std::vector<int> out;
    for (int t = 0; t < static_cast<int>(utilities.size()); ++t)
        if (t != baseline)
            out.push_back(t);
    return out;
}

namespace {

void allow_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys)
{
    if (!j.is_object())
        throw ConfigError(where + " must be an object");
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [k, v] : j.items())
        if (!allowed.count(k))
            throw ConfigError("unknown key '" + k + "' in " + where);
}

const json& need(const json& j, const char* key, const std::string& where)
{
    if (!j.contains(key))
        throw ConfigError(where + " is missing '" + key + "'");
    return j.at(key);
}

template <class T>
T get_as(const json& j, const std::string& what)
{
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        throw ConfigError(what + " has the wrong type");
    }
}

template <class T>
void read_opt(const json& j, const char* key, T& out, const std::string& where)
{
    if (j.contains(key))
        out = get_as<T>(j.at(key), where + "." + key);
}

void read_opt_number(const json& j, const char* key, double& out, const std::string& where)
{
    if (j.contains(key))
        out = read_number(j.at(key), where + "." + key);
}

std::vector<double> numbers(const json& j, const std::string& what)
{
    if (!j.is_array())
        throw ConfigError(what + " must be an array");
    std::vector<double> out;
    for (const auto& x : j)
        out.push_back(read_number(x, what));
    return out;
}

json numbers_json(const std::vector<double>& xs)
{
    json a = json::array();
    for (double x : xs)
        a.push_back(number(x));
    return a;
}

std::vector<std::vector<double>> matrix(const json& j, const std::string& what)
{
    if (!j.is_array())
        throw ConfigError(what + " must be an array of arrays");
    std::vector<std::vector<double>> out;
    for (const auto& row : j)
        out.push_back(numbers(row, what));
    return out;
}

json matrix_json(const std::vector<std::vector<double>>& m)
{
    json a = json::array();
    for (const auto& row : m)
        a.push_back(numbers_json(row));
    return a;
}

LawConfig parse_law(const json& j, const std::string& where)
{
    allow_keys(j, where, {"kind", "params"});
    LawConfig l;
    l.kind = get_as<std::string>(need(j, "kind", where), where + ".kind");
    l.params = numbers(need(j, "params", where), where + ".params");
    static const std::set<std::string> kinds{"gaussian", "uniform", "logistic", "student_t", "empirical"};
    if (!kinds.count(l.kind))
        throw ConfigError(where + ": unknown law kind '" + l.kind + "'");
    return l;
}

json law_json(const LawConfig& l) { return json{{"kind", l.kind}, {"params", numbers_json(l.params)}}; }

std::string canonical_expression(const json& j, const std::string& where)
{
    const auto text = get_as<std::string>(j, where);
    try {
        return expr::Expression::parse(text).str();
    } catch (const Error& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

} // namespace

ScenarioConfig parse(const json& j)
{
    const std::string top = "config";
    allow_keys(j, top,
               {"name", "baseline", "contrast", "variance_convention", "exclusion_reading", "utilities", "instruments",
                "errors", "outcomes", "exclusions", "force_numeric_difference", "g", "kernel", "grids", "sizes",
                "tolerances", "seed"});
    ScenarioConfig c;
    read_opt(j, "name", c.name, top);
    c.baseline = get_as<int>(need(j, "baseline", top), "baseline");
    read_opt(j, "contrast", c.contrast, top);
    read_opt(j, "variance_convention", c.variance_convention, top);
    if (c.variance_convention != "variance" && c.variance_convention != "std_dev")
        throw ConfigError("variance_convention must be 'variance' or 'std_dev'");
    read_opt(j, "exclusion_reading", c.exclusion_reading, top);
    if (c.exclusion_reading != "along_coordinate" && c.exclusion_reading != "global")
        throw ConfigError("exclusion_reading must be 'along_coordinate' or 'global'");

    const auto& u = need(j, "utilities", top);
    if (!u.is_array())
        throw ConfigError("utilities must be an array of expressions");
    for (std::size_t t = 0; t < u.size(); ++t)
        c.utilities.push_back(canonical_expression(u[t], "utilities[" + std::to_string(t) + "]"));

    const auto& inst = need(j, "instruments", top);
    if (!inst.is_array())
        throw ConfigError("instruments must be an array of laws");
    for (std::size_t i = 0; i < inst.size(); ++i)
        c.instruments.push_back(parse_law(inst[i], "instruments[" + std::to_string(i) + "]"));

    const auto& e = need(j, "errors", top);
    if (e.is_array()) {
        for (std::size_t i = 0; i < e.size(); ++i)
            c.errors.components.push_back(parse_law(e[i], "errors[" + std::to_string(i) + "]"));
    } else {
        allow_keys(e, "errors", {"kind", "mean", "covariance"});
        c.errors.kind = get_as<std::string>(need(e, "kind", "errors"), "errors.kind");
        if (c.errors.kind != "multivariate_normal")
            throw ConfigError("errors object must have kind 'multivariate_normal'; use an array for independent laws");
        c.errors.mean = numbers(need(e, "mean", "errors"), "errors.mean");
        c.errors.covariance = matrix(need(e, "covariance", "errors"), "errors.covariance");
    }

    const auto& o = need(j, "outcomes", top);
    if (!o.is_array())
        throw ConfigError("outcomes must be an array");
    for (std::size_t t = 0; t < o.size(); ++t) {
        const std::string where = "outcomes[" + std::to_string(t) + "]";
        allow_keys(o[t], where, {"mean", "noise"});
        OutcomeConfig oc;
        oc.mean = canonical_expression(need(o[t], "mean", where), where + ".mean");
        if (o[t].contains("noise") && !o[t].at("noise").is_null())
            oc.noise = parse_law(o[t].at("noise"), where + ".noise");
        c.outcomes.push_back(std::move(oc));
    }

    if (j.contains("exclusions")) {
        const auto& x = j.at("exclusions");
        if (!x.is_array())
            throw ConfigError("exclusions must be an array");
        for (std::size_t i = 0; i < x.size(); ++i) {
            const std::string where = "exclusions[" + std::to_string(i) + "]";
            allow_keys(x[i], where, {"treatment", "coordinate", "limit", "start", "factor", "steps"});
            ExclusionConfig ec;
            ec.treatment = get_as<int>(need(x[i], "treatment", where), where + ".treatment");
            ec.coordinate = get_as<int>(need(x[i], "coordinate", where), where + ".coordinate");
            ec.limit = read_number(need(x[i], "limit", where), where + ".limit");
            ec.start = read_number(need(x[i], "start", where), where + ".start");
            ec.factor = read_number(need(x[i], "factor", where), where + ".factor");
            ec.steps = get_as<int>(need(x[i], "steps", where), where + ".steps");
            c.exclusions.push_back(ec);
        }
    }
    read_opt(j, "force_numeric_difference", c.force_numeric_difference, top);

    if (j.contains("g")) {
        const auto& g = j.at("g");
        allow_keys(g, "g", {"kind", "y", "expression"});
        c.g.kind = get_as<std::string>(need(g, "kind", "g"), "g.kind");
        if (c.g.kind == "indicator_below")
            c.g.y = read_number(need(g, "y", "g"), "g.y");
        else if (c.g.kind == "expression")
            c.g.expression = canonical_expression(need(g, "expression", "g"), "g.expression");
        else if (c.g.kind != "identity")
            throw ConfigError("g.kind must be identity, indicator_below or expression");
    }
    if (j.contains("kernel")) {
        const auto& k = j.at("kernel");
        allow_keys(k, "kernel", {"kernel", "bandwidth", "fixed", "order"});
        read_opt(k, "kernel", c.kernel.kernel, "kernel");
        read_opt(k, "bandwidth", c.kernel.bandwidth, "kernel");
        read_opt_number(k, "fixed", c.kernel.fixed, "kernel");
        read_opt(k, "order", c.kernel.order, "kernel");
        if (c.kernel.kernel != "epanechnikov" && c.kernel.kernel != "gaussian")
            throw ConfigError("kernel.kernel must be epanechnikov or gaussian");
        if (c.kernel.bandwidth != "silverman" && c.kernel.bandwidth != "fixed")
            throw ConfigError("kernel.bandwidth must be silverman or fixed");
    }
    if (j.contains("grids")) {
        const auto& g = j.at("grids");
        allow_keys(g, "grids", {"qstar", "y", "tau", "z_points", "eps", "h_points", "estimate_qstar", "qte_qstar"});
        if (g.contains("qstar"))
            c.grids.qstar = numbers(g.at("qstar"), "grids.qstar");
        if (g.contains("y"))
            c.grids.y = numbers(g.at("y"), "grids.y");
        if (g.contains("tau"))
            c.grids.tau = numbers(g.at("tau"), "grids.tau");
        if (g.contains("z_points"))
            c.grids.z_points = matrix(g.at("z_points"), "grids.z_points");
        if (g.contains("eps"))
            c.grids.eps = numbers(g.at("eps"), "grids.eps");
        if (g.contains("h_points"))
            c.grids.h_points = matrix(g.at("h_points"), "grids.h_points");
        if (g.contains("estimate_qstar"))
            c.grids.estimate_qstar = numbers(g.at("estimate_qstar"), "grids.estimate_qstar");
        if (g.contains("qte_qstar"))
            c.grids.qte_qstar = numbers(g.at("qte_qstar"), "grids.qte_qstar");
    }
    if (j.contains("sizes")) {
        const auto& s = j.at("sizes");
        allow_keys(s, "sizes",
                   {"verify_draws", "cloud_points", "control_points", "sample_n", "mc_draws", "threshold_grid"});
        read_opt(s, "verify_draws", c.sizes.verify_draws, "sizes");
        read_opt(s, "cloud_points", c.sizes.cloud_points, "sizes");
        read_opt(s, "control_points", c.sizes.control_points, "sizes");
        read_opt(s, "sample_n", c.sizes.sample_n, "sizes");
        read_opt(s, "mc_draws", c.sizes.mc_draws, "sizes");
        read_opt(s, "threshold_grid", c.sizes.threshold_grid, "sizes");
    }
    if (j.contains("tolerances")) {
        const auto& t = j.at("tolerances");
        allow_keys(t, "tolerances",
                   {"rel_tol", "delta", "mte_abs", "threshold_abs", "settle", "extension", "min_effective"});
        read_opt_number(t, "rel_tol", c.tolerances.rel_tol, "tolerances");
        read_opt_number(t, "delta", c.tolerances.delta, "tolerances");
        read_opt_number(t, "mte_abs", c.tolerances.mte_abs, "tolerances");
        read_opt_number(t, "threshold_abs", c.tolerances.threshold_abs, "tolerances");
        read_opt_number(t, "settle", c.tolerances.settle, "tolerances");
        read_opt_number(t, "extension", c.tolerances.extension, "tolerances");
        read_opt_number(t, "min_effective", c.tolerances.min_effective, "tolerances");
    }
    read_opt(j, "seed", c.seed, top);

    // Building the scenario checks indices, exclusions and law parameters.
    const auto spec = build_spec(c);
    validate_spec(spec);
    const int K = static_cast<int>(spec.utilities.size());
    for (int t : c.contrasts())
        if (t < 0 || t >= K || t == c.baseline)
            throw ConfigError("contrast must be a non-baseline treatment");
    for (const auto& z : c.grids.z_points)
        if (z.size() != spec.instruments.size())
            throw ConfigError("grids.z_points entries must have one value per instrument");
    for (const auto& z : c.grids.h_points)
        if (z.size() != spec.instruments.size())
            throw ConfigError("grids.h_points entries must have one value per instrument");
    build_g(c.g);
    return c;
}

ScenarioConfig load(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open config '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
    return parse(j);
}

json to_json(const ScenarioConfig& c)
{
    json j;
    j["name"] = c.name;
    j["baseline"] = c.baseline;
    j["contrast"] = c.contrast;
    j["variance_convention"] = c.variance_convention;
    j["exclusion_reading"] = c.exclusion_reading;
    j["utilities"] = c.utilities;
    j["instruments"] = json::array();
    for (const auto& l : c.instruments)
        j["instruments"].push_back(law_json(l));
    if (c.errors.kind == "independent") {
        j["errors"] = json::array();
        for (const auto& l : c.errors.components)
            j["errors"].push_back(law_json(l));
    } else {
        j["errors"] = json{{"kind", c.errors.kind},
                           {"mean", numbers_json(c.errors.mean)},
                           {"covariance", matrix_json(c.errors.covariance)}};
    }
    j["outcomes"] = json::array();
    for (const auto& o : c.outcomes)
        j["outcomes"].push_back(json{{"mean", o.mean}, {"noise", o.noise ? law_json(*o.noise) : json(nullptr)}});
    j["exclusions"] = json::array();
    for (const auto& e : c.exclusions)
        j["exclusions"].push_back(json{{"treatment", e.treatment},
                                       {"coordinate", e.coordinate},
                                       {"limit", number(e.limit)},
                                       {"start", number(e.start)},
                                       {"factor", number(e.factor)},
                                       {"steps", e.steps}});
    j["force_numeric_difference"] = c.force_numeric_difference;
    json g{{"kind", c.g.kind}};
    if (c.g.kind == "indicator_below")
        g["y"] = number(c.g.y);
    if (c.g.kind == "expression")
        g["expression"] = c.g.expression;
    j["g"] = g;
    j["kernel"] = json{{"kernel", c.kernel.kernel},
                       {"bandwidth", c.kernel.bandwidth},
                       {"fixed", number(c.kernel.fixed)},
                       {"order", c.kernel.order}};
    j["grids"] = json{{"qstar", numbers_json(c.grids.qstar)}, {"y", numbers_json(c.grids.y)},
                      {"tau", numbers_json(c.grids.tau)},     {"z_points", matrix_json(c.grids.z_points)},
                      {"eps", numbers_json(c.grids.eps)},     {"h_points", matrix_json(c.grids.h_points)},
                      {"estimate_qstar", numbers_json(c.grids.estimate_qstar)},
                      {"qte_qstar", numbers_json(c.grids.qte_qstar)}};
    j["sizes"] = json{{"verify_draws", c.sizes.verify_draws}, {"cloud_points", c.sizes.cloud_points},
                      {"control_points", c.sizes.control_points}, {"sample_n", c.sizes.sample_n},
                      {"mc_draws", c.sizes.mc_draws},         {"threshold_grid", c.sizes.threshold_grid}};
    j["tolerances"] = json{{"rel_tol", number(c.tolerances.rel_tol)},
                           {"delta", number(c.tolerances.delta)},
                           {"mte_abs", number(c.tolerances.mte_abs)},
                           {"threshold_abs", number(c.tolerances.threshold_abs)},
                           {"settle", number(c.tolerances.settle)},
                           {"extension", number(c.tolerances.extension)},
                           {"min_effective", number(c.tolerances.min_effective)}};
    j["seed"] = c.seed;
    return j;
}

std::string fingerprint(const ScenarioConfig& c)
{
    const auto text = to_json(c).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

dist::UnivariateLaw build_law(const LawConfig& l, const std::string& variance_convention)
{
    const auto& p = l.params;
    auto arity = [&](std::size_t n) {
        if (p.size() != n)
            throw ConfigError("law '" + l.kind + "' takes " + std::to_string(n) + " parameters");
    };
    if (l.kind == "gaussian") {
        arity(2);
        if (!(p[1] > 0.0))
            throw ConfigError("gaussian spread parameter must be positive");
        return dist::UnivariateLaw::gaussian(p[0], variance_convention == "std_dev" ? p[1] * p[1] : p[1]);
    }
    if (l.kind == "uniform") {
        arity(2);
        if (!(p[0] < p[1]) || std::isinf(p[0]) || std::isinf(p[1]))
            throw ConfigError("uniform law needs finite lower < upper");
        return dist::UnivariateLaw::uniform(p[0], p[1]);
    }
    if (l.kind == "logistic") {
        arity(2);
        if (!(p[1] > 0.0))
            throw ConfigError("logistic scale must be positive");
        return dist::UnivariateLaw::logistic(p[0], p[1]);
    }
    if (l.kind == "student_t") {
        arity(3);
        if (!(p[0] > 1.0) || !(p[2] > 0.0))
            throw ConfigError("student_t needs dof > 1 and a positive scale");
        return dist::UnivariateLaw::student_t(p[0], p[1], p[2]);
    }
    if (l.kind == "empirical") {
        if (p.size() < 10)
            throw ConfigError("empirical law needs at least 10 draws");
        return dist::UnivariateLaw::empirical(p);
    }
    throw ConfigError("unknown law kind '" + l.kind + "'");
}

ScenarioSpec build_spec(const ScenarioConfig& c)
{
    ScenarioSpec s;
    s.name = c.name;
    s.baseline = c.baseline;
    for (const auto& u : c.utilities)
        s.utilities.push_back(expr::Expression::parse(u));
    for (const auto& l : c.instruments)
        s.instruments.push_back(build_law(l, c.variance_convention));
    if (c.errors.kind == "independent") {
        std::vector<dist::UnivariateLaw> comps;
        for (const auto& l : c.errors.components)
            comps.push_back(build_law(l, c.variance_convention));
        s.errors = dist::ErrorVectorLaw(std::move(comps));
    } else {
        const std::size_t K = c.errors.mean.size();
        if (c.errors.covariance.size() != K)
            throw ConfigError("covariance must be K x K");
        Eigen::MatrixXd cov(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(K));
        for (std::size_t a = 0; a < K; ++a) {
            if (c.errors.covariance[a].size() != K)
                throw ConfigError("covariance must be K x K");
            for (std::size_t b = 0; b < K; ++b)
                cov(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = c.errors.covariance[a][b];
        }
        if (!cov.isApprox(cov.transpose()))
            throw ConfigError("covariance must be symmetric");
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() != Eigen::Success)
            throw ConfigError("covariance must be positive definite");
        const Eigen::MatrixXd L = llt.matrixL();
        const auto mean = c.errors.mean;
        const auto std_normal = dist::UnivariateLaw::gaussian(0.0, 1.0);
        s.errors = dist::ErrorVectorLaw::dependent(K, [L, mean, std_normal](Rng& rng, std::span<double> out) {
            Eigen::VectorXd e(L.rows());
            for (Eigen::Index i = 0; i < e.size(); ++i)
                e(i) = std_normal.sample(rng);
            const Eigen::VectorXd u = L * e;
            for (Eigen::Index i = 0; i < e.size(); ++i)
                out[static_cast<std::size_t>(i)] = mean[static_cast<std::size_t>(i)] + u(i);
        });
    }
    for (const auto& o : c.outcomes) {
        OutcomeSpec os{expr::Expression::parse(o.mean), std::nullopt};
        if (o.noise)
            os.noise = build_law(*o.noise, c.variance_convention);
        s.outcomes.push_back(std::move(os));
    }
    for (const auto& e : c.exclusions)
        s.exclusions.push_back(ExclusionSpec{e.treatment, e.coordinate, e.limit, e.start, e.factor, e.steps});
    s.reading = c.exclusion_reading == "global" ? ExclusionReading::global : ExclusionReading::along_coordinate;
    s.diff_options.force_numeric = c.force_numeric_difference;
    s.diff_options.seed = mix_seed(c.seed, 0xd1ff);
    return s;
}

GFunction build_g(const GConfig& g)
{
    if (g.kind == "identity")
        return GFunction::identity();
    if (g.kind == "indicator_below")
        return GFunction::indicator_below(g.y);
    if (g.kind == "expression")
        return GFunction::expression(expr::Expression::parse(g.expression));
    throw ConfigError("unknown G kind '" + g.kind + "'");
}

} // namespace mte::config
