#include "mte/run.hpp"

#include "mte/config.hpp"
#include "mte/counterexample.hpp"
#include "mte/errors.hpp"
#include "mte/estimation.hpp"
#include "mte/io.hpp"
#include "mte/population.hpp"
#include "mte/selection.hpp"

#include <Eigen/Core>
#include <boost/version.hpp>

#include <chrono>
#include <cmath>
#include <functional>
#include <map>

namespace mte::run {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "1.0.0";

// Per-command random streams derived from the root seed.
enum Stream : std::uint64_t { verify_stream = 1, cloud_stream = 2, control_stream = 3, sample_stream = 4 };

struct Context {
    config::ScenarioConfig cfg;
    Scenario scn;
    GFunction G;
    population::IntegrationOptions integ;
    fs::path out;
    unsigned threads;
    std::uint64_t seed;
    std::string fingerprint;
    std::vector<std::string> artifacts;

    void write(const std::string& name, const std::string& text)
    {
        io::write_atomic(out / name, text);
        artifacts.push_back(name);
    }
    void write(const std::string& name, const json& j)
    {
        io::write_json(out / name, j);
        artifacts.push_back(name);
    }
};

// Outcome of one command: whether every check passed and a short summary.
struct Outcome {
    bool passed = true;
    json summary;
};

Outcome cmd_verify(Context& c)
{
    const auto rep = verify_representation(c.scn, c.cfg.sizes.verify_draws, mix_seed(c.seed, verify_stream), 1e-12,
                                           c.threads);
    auto j = io::to_json(rep);
    j["scenario"] = c.cfg.name;
    j["K"] = c.scn.K();
    c.write("representation_report.json", j);
    return {rep.passed(), json{{"draws", rep.draws}, {"mismatches", rep.mismatches}, {"boundary", rep.boundary}}};
}

Outcome cmd_figure1(Context& c)
{
    if (c.scn.K() != 3)
        throw UnsupportedError("figure1 needs exactly three treatments");
    const auto cloud = counterexample::support_cloud(c.scn.errors(), c.cfg.sizes.cloud_points,
                                                     mix_seed(c.seed, cloud_stream), 0.05, c.threads);
    const auto rep = counterexample::violation_report(cloud, c.cfg.grids.eps, c.cfg.sizes.control_points,
                                                      mix_seed(c.seed, control_stream));
    c.write("support_cloud.csv", io::support_cloud_csv(cloud));
    auto j = io::to_json(rep);
    j["residual_tolerance"] = 1e-9;
    const bool passed = rep.max_residual < 1e-9 && rep.lebesgue_null;
    j["passed"] = passed;
    c.write("violation_report.json", j);
    return {passed, json{{"max_residual", rep.max_residual},
                         {"final_volume", rep.cloud.occupied.back()},
                         {"control_final_volume", rep.control.occupied.back()},
                         {"lebesgue_null", rep.lebesgue_null}}};
}

json branch_json(double k, double j, double mte)
{
    return json{{"baseline", k}, {"contrast", j}, {"mte", mte}};
}

Outcome cmd_identify(Context& c)
{
    const double tol = c.cfg.tolerances.mte_abs;
    bool passed = true;
    json entries = json::array(), extensions = json::array(), qtes = json::array();
    double worst = 0.0;
    const auto contrasts = c.cfg.contrasts();
    for (std::size_t ci = 0; ci < contrasts.size(); ++ci) {
        const int j = contrasts[ci];
        io::Csv csv({"qstar", "recovered_k", "recovered_j", "mte", "oracle_mte", "abs_error"});
        for (double qs : c.cfg.grids.qstar) {
            const population::BoundaryPoint bp{j, qs, c.cfg.tolerances.delta};
            const auto r = population::mte_identified(c.scn, c.G, bp, std::nullopt, c.integ);
            const auto o = population::mte_oracle(c.scn, c.G, bp, c.integ);
            const double ek = std::fabs(r.baseline_value - o.baseline_value);
            const double ej = std::fabs(r.contrast_value - o.contrast_value);
            const double em = std::fabs(r.mte - o.mte);
            const bool ok = ek <= tol && ej <= tol && em <= tol;
            passed = passed && ok;
            worst = std::max({worst, ek, ej, em});
            csv.row({qs, r.baseline_value, r.contrast_value, r.mte, o.mte, em});
            entries.push_back(json{{"contrast", j},
                                   {"qstar", qs},
                                   {"recovered", branch_json(r.baseline_value, r.contrast_value, r.mte)},
                                   {"oracle", branch_json(o.baseline_value, o.contrast_value, o.mte)},
                                   {"abs_error", branch_json(ek, ej, em)},
                                   {"mc_se", 0.0},
                                   {"steps", json{{"baseline", io::to_json(r.baseline_diag)},
                                                  {"contrast", io::to_json(r.contrast_diag)}}},
                                   {"tolerance", tol},
                                   {"status", ok ? "PASS" : "FAIL"}});
        }
        if (ci == 0)
            c.write("mte_curve.csv", csv.str());
        if (contrasts.size() > 1)
            c.write("mte_curve_" + std::to_string(j) + ".csv", csv.str());
        if (ci != 0)
            continue;
        // Continuity of the boundary extension at the grid midpoint.
        const double qmid = c.cfg.grids.qstar[c.cfg.grids.qstar.size() / 2];
        for (int t : {c.scn.baseline(), j}) {
            const auto ext =
                population::check_extension(c.scn, c.G, t, j, qmid, c.integ, c.cfg.tolerances.extension);
            extensions.push_back(json{{"treatment", t},
                                      {"contrast", j},
                                      {"qj", qmid},
                                      {"approach", ext.approach},
                                      {"interior", ext.interior},
                                      {"diagonal", ext.diagonal},
                                      {"boundary", ext.boundary},
                                      {"final_mismatch", ext.final_mismatch},
                                      {"cauchy", ext.cauchy}});
        }
    }
    if (!c.cfg.grids.y.empty() && !c.cfg.grids.tau.empty()) {
        io::Csv csv({"contrast", "tau", "qstar", "recovered_k", "recovered_j", "qte", "oracle_qte", "abs_error"});
        for (int j : contrasts)
            for (double qs : c.cfg.grids.qte_qstar) {
                const population::BoundaryPoint bp{j, qs, c.cfg.tolerances.delta};
                const auto rs = population::qte(c.scn, bp, c.cfg.grids.tau, c.cfg.grids.y, c.integ);
                for (const auto& r : rs) {
                    const double oracle_k =
                        population::conditional_quantile_given_vj(c.scn, c.scn.baseline(), j, qs, r.tau, c.integ);
                    const double oracle_j = population::conditional_quantile_given_vj(c.scn, j, j, qs, r.tau, c.integ);
                    const double err = std::fabs(r.qte - (oracle_k - oracle_j));
                    csv.row({static_cast<double>(j), r.tau, qs, r.quantile_k, r.quantile_j, r.qte, oracle_k - oracle_j,
                             err});
                    qtes.push_back(json{{"contrast", j},
                                        {"tau", r.tau},
                                        {"qstar", qs},
                                        {"recovered", json{{"baseline", r.quantile_k},
                                                           {"contrast", r.quantile_j},
                                                           {"qte", r.qte}}},
                                        {"oracle", json{{"baseline", oracle_k},
                                                        {"contrast", oracle_j},
                                                        {"qte", oracle_k - oracle_j}}},
                                        {"abs_error", err}});
                }
            }
        c.write("qte_curve.csv", csv.str());
    }
    c.write("identification_report.json", json{{"scenario", c.cfg.name},
                                               {"g", c.G.describe()},
                                               {"entries", entries},
                                               {"extension", extensions},
                                               {"qte", qtes},
                                               {"max_abs_error", worst},
                                               {"passed", passed}});
    return {passed, json{{"points", entries.size()}, {"max_abs_error", worst}}};
}

Outcome cmd_thresholds(Context& c)
{
    if (c.cfg.grids.z_points.empty())
        throw ConfigError("thresholds needs grids.z_points");
    const double tol = c.cfg.tolerances.threshold_abs;
    io::Csv csv({"point", "target", "step", "H", "rate", "limit", "closed_form"});
    json points = json::array();
    bool passed = true;
    double worst = 0.0;
    auto add_trace = [&](std::size_t p, const population::LimitTrace& tr) {
        for (std::size_t n = 0; n < tr.H.size(); ++n)
            csv.row({static_cast<double>(p), static_cast<double>(tr.target), static_cast<double>(n), tr.H[n],
                     tr.rate[n], tr.limit, tr.closed_form});
    };
    for (std::size_t p = 0; p < c.cfg.grids.z_points.size(); ++p) {
        const auto& z = c.cfg.grids.z_points[p];
        const auto id = population::identify_thresholds_by_limit(c.scn, z, c.integ, c.cfg.tolerances.settle);
        json err = json::array();
        for (std::size_t i = 0; i < id.recovered.size(); ++i) {
            const double e = std::fabs(id.recovered[i] - id.closed_form[i]);
            err.push_back(e);
            worst = std::max(worst, e);
            passed = passed && e <= tol;
            add_trace(p, id.traces[i]);
        }
        const auto all = population::all_pushed_trace(c.scn, z, c.integ);
        add_trace(p, all);
        const double all_err = std::fabs(all.limit - 1.0);
        passed = passed && all_err <= tol;
        json traces = json::array();
        for (const auto& tr : id.traces)
            traces.push_back(io::to_json(tr));
        points.push_back(json{{"z", z},
                              {"recovered", id.recovered},
                              {"oracle", id.closed_form},
                              {"abs_error", err},
                              {"all_pushed_limit", all.limit},
                              {"all_pushed_abs_error", all_err},
                              {"traces", traces}});
    }
    c.write("threshold_traces.csv", csv.str());
    c.write("thresholds_report.json", json{{"scenario", c.cfg.name},
                                           {"tolerance", tol},
                                           {"points", points},
                                           {"max_abs_error", worst},
                                           {"passed", passed}});
    return {passed, json{{"points", points.size()}, {"max_abs_error", worst}}};
}

estimation::KernelSpec kernel_spec(const config::KernelConfig& k)
{
    estimation::KernelSpec s;
    s.kernel = k.kernel == "gaussian" ? estimation::KernelSpec::Kernel::gaussian
                                      : estimation::KernelSpec::Kernel::epanechnikov;
    s.rule = k.bandwidth == "fixed" ? estimation::KernelSpec::Bandwidth::fixed
                                    : estimation::KernelSpec::Bandwidth::silverman;
    s.fixed = k.fixed;
    s.order = k.order;
    return s;
}

Outcome cmd_estimate(Context& c)
{
    const auto kernel = kernel_spec(c.cfg.kernel);
    const auto sample = estimation::simulate(c.scn, c.cfg.sizes.sample_n, mix_seed(c.seed, sample_stream),
                                             c.fingerprint, c.threads);
    c.write("sample.csv", io::sample_csv(sample));
    c.write("sample.json", io::sample_sidecar(sample));
    const bool population_known = c.scn.errors().independent();
    estimation::ShareEstimator shares(sample, c.scn.K(), kernel, c.threads);
    json hs = json::array();
    for (const auto& z : c.cfg.grids.h_points) {
        const double est = shares.at(z).share[static_cast<std::size_t>(c.scn.baseline())];
        json e{{"z", z}, {"estimate", est}};
        if (population_known) {
            const double pop = population::baseline_share(c.scn, z, c.integ);
            e["population"] = pop;
            e["abs_error"] = std::fabs(est - pop);
        }
        hs.push_back(e);
    }
    // The threshold surface only feeds the boundary regression.
    estimation::ThresholdSurface surface;
    if (!c.cfg.grids.estimate_qstar.empty())
        surface = estimation::estimate_threshold_surface(c.scn, sample, estimation::sample_shares(shares),
                                                         c.cfg.sizes.threshold_grid);
    json thr = json::array();
    for (std::size_t p = 0; p < surface.q.size(); ++p) {
        json oracle = json::array();
        for (double g : surface.grid[p]) {
            std::vector<double> z(sample.dim, 0.0);
            if (surface.free_coordinate[p] >= 0)
                z[static_cast<std::size_t>(surface.free_coordinate[p])] = g;
            oracle.push_back(thresholds(c.scn, z).q[p]);
        }
        thr.push_back(json{{"target", c.scn.others()[p]},
                           {"free_coordinate", surface.free_coordinate[p]},
                           {"grid", surface.grid[p]},
                           {"estimate", surface.grid_value[p]},
                           {"oracle", oracle}});
    }
    json mtes = json::array();
    for (int j : c.cfg.contrasts())
        for (double qs : c.cfg.grids.estimate_qstar) {
            const population::BoundaryPoint bp{j, qs, c.cfg.tolerances.delta};
            const auto m = estimation::estimate_mte(c.scn, sample, surface, c.G, bp, kernel,
                                                    c.cfg.tolerances.min_effective, c.threads);
            auto e = io::to_json(m);
            if (population_known) {
                const auto pop = population::mte_identified(c.scn, c.G, bp, std::nullopt, c.integ);
                e["population"] = branch_json(pop.baseline_value, pop.contrast_value, pop.mte);
                e["abs_error"] = std::fabs(m.mte - pop.mte);
            }
            mtes.push_back(e);
        }
    const auto shares_all = estimation::treatment_shares(sample, c.scn.K());
    c.write("estimation_report.json", json{{"scenario", c.cfg.name},
                                           {"n", sample.size()},
                                           {"seed", sample.seed},
                                           {"fingerprint", sample.fingerprint},
                                           {"treatment_shares", shares_all},
                                           {"bandwidth", shares.bandwidth()},
                                           {"H", hs},
                                           {"thresholds", thr},
                                           {"threshold_warnings", surface.warnings},
                                           {"mte", mtes}});
    return {true, json{{"n", sample.size()}, {"mte_points", mtes.size()}}};
}

using Command = std::function<Outcome(Context&)>;

const std::map<std::string, Command>& table()
{
    static const std::map<std::string, Command> t{{"verify", cmd_verify},
                                                  {"figure1", cmd_figure1},
                                                  {"identify", cmd_identify},
                                                  {"thresholds", cmd_thresholds},
                                                  {"estimate", cmd_estimate}};
    return t;
}

json error_json(const std::string& kind, const std::string& message, const std::string& command)
{
    return json{{"error", json{{"kind", kind}, {"message", message}, {"command", command}}}};
}

json versions()
{
    return json{{"mte_lab", kVersion},
                {"boost", BOOST_LIB_VERSION},
                {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                              std::to_string(EIGEN_MINOR_VERSION)},
                {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                      std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                      std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                {"compiler", __VERSION__}};
}

} // namespace

const std::vector<std::string>& commands()
{
    static const std::vector<std::string> c{"verify", "figure1", "identify", "thresholds", "estimate", "all"};
    return c;
}

int execute(const RunOptions& opts, std::ostream& err)
{
    const auto t0 = std::chrono::steady_clock::now();
    json manifest{{"command", opts.command}, {"config_path", opts.config.string()}, {"versions", versions()}};
    auto fail = [&](const std::string& kind, const std::string& message, const std::string& command) {
        const auto e = error_json(kind, message, command);
        err << e.dump() << std::endl;
        try {
            io::write_json(opts.out / "error.json", e);
        } catch (const std::exception&) {
            // the error already went to err
        }
        return kExitError;
    };
    const bool known = std::find(commands().begin(), commands().end(), opts.command) != commands().end();
    if (!known)
        return fail("usage", "unknown command '" + opts.command + "'", opts.command);

    std::optional<Context> ctx;
    try {
        auto cfg = config::load(opts.config.string());
        if (opts.seed)
            cfg.seed = *opts.seed;
        const unsigned threads = opts.threads ? opts.threads : default_threads();
        population::IntegrationOptions integ;
        integ.rel_tol = cfg.tolerances.rel_tol;
        integ.mc_draws = cfg.sizes.mc_draws;
        integ.seed = mix_seed(cfg.seed, 0x1a7e);
        const auto fp = config::fingerprint(cfg);
        ctx.emplace(Context{cfg, Scenario(config::build_spec(cfg)), config::build_g(cfg.g), integ, opts.out, threads,
                            cfg.seed, fp, {}});
        std::filesystem::create_directories(opts.out);
    } catch (const Error& e) {
        return fail(e.kind(), e.what(), opts.command);
    } catch (const std::exception& e) {
        return fail("internal", e.what(), opts.command);
    }

    auto& c = *ctx;
    std::vector<std::string> run_list;
    if (opts.command == "all") {
        run_list = {"verify"};
        if (c.scn.K() == 3)
            run_list.push_back("figure1");
        run_list.push_back("identify");
        if (!c.cfg.grids.z_points.empty())
            run_list.push_back("thresholds");
        run_list.push_back("estimate");
    } else {
        run_list = {opts.command};
    }

    int status = kExitOk;
    json results = json::object();
    json errors = json::array();
    for (const auto& name : run_list) {
        const auto s0 = std::chrono::steady_clock::now();
        try {
            auto outcome = table().at(name)(c);
            outcome.summary["status"] = outcome.passed ? "PASS" : "FAIL";
            outcome.summary["seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - s0).count();
            results[name] = outcome.summary;
            if (!outcome.passed && status == kExitOk)
                status = kExitCheckFailed;
        } catch (const Error& e) {
            results[name] = json{{"status", "ERROR"}, {"kind", e.kind()}, {"message", e.what()}};
            errors.push_back(error_json(e.kind(), e.what(), name)["error"]);
            status = kExitError;
        } catch (const std::exception& e) {
            results[name] = json{{"status", "ERROR"}, {"kind", "internal"}, {"message", e.what()}};
            errors.push_back(error_json("internal", e.what(), name)["error"]);
            status = kExitError;
        }
    }
    if (!errors.empty()) {
        const json e{{"error", errors.front()}, {"errors", errors}};
        err << e.dump() << std::endl;
        io::write_json(opts.out / "error.json", e);
    } else {
        std::error_code ec;
        std::filesystem::remove(opts.out / "error.json", ec);
    }
    manifest["scenario"] = c.cfg.name;
    manifest["fingerprint"] = c.fingerprint;
    manifest["seed"] = c.seed;
    manifest["threads"] = c.threads;
    manifest["config"] = config::to_json(c.cfg);
    manifest["results"] = results;
    manifest["artifacts"] = c.artifacts;
    manifest["exit_status"] = status;
    manifest["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    try {
        io::write_json(opts.out / "manifest.json", manifest);
    } catch (const Error& e) {
        return fail(e.kind(), e.what(), opts.command);
    }
    return status;
}

} // namespace mte::run
