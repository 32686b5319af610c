#include "mte/config.hpp"
#include "mte/io.hpp"
#include "support.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <unistd.h>

using namespace mte;
using Catch::Matchers::WithinAbs;
using nlohmann::json;

namespace {

std::filesystem::path scratch(const std::string& name)
{
    auto p = std::filesystem::temp_directory_path() / ("mte_test_" + std::to_string(::getpid())) / name;
    std::filesystem::create_directories(p.parent_path());
    return p;
}

json bundled_json(const std::string& name)
{
    std::ifstream in(test::config_path(name));
    return json::parse(in);
}

} // namespace

TEST_CASE("bundled configs load and round-trip through canonical JSON")
{
    for (const char* name : {"figure1", "trivial", "estimation", "open_range_violation", "logistic_t", "k4"}) {
        INFO(name);
        const auto c = test::bundled_config(name);
        const auto again = config::parse(config::to_json(c));
        CHECK(again == c);
        CHECK(config::fingerprint(again) == config::fingerprint(c));
        CHECK(config::fingerprint(c).size() == 16);
        CHECK_NOTHROW(Scenario(config::build_spec(c)));
    }
}

TEST_CASE("fingerprint changes with the scenario")
{
    auto c = test::bundled_config("figure1");
    const auto fp = config::fingerprint(c);
    c.seed += 1;
    CHECK(config::fingerprint(c) != fp);
}

TEST_CASE("contrasts default to every non-baseline treatment")
{
    auto c = test::bundled_config("k4");
    CHECK(c.contrasts() == std::vector<int>{3});
    c.contrast = -1;
    CHECK(c.contrasts() == std::vector<int>{0, 2, 3});
}

TEST_CASE("invalid configs raise config errors")
{
    const auto base = bundled_json("figure1");
    auto with = [&](auto edit) {
        json j = base;
        edit(j);
        return j;
    };
    CHECK_THROWS_AS(config::parse(with([](json& j) { j["colour"] = 1; })), ConfigError);
    CHECK_THROWS_AS(config::parse(with([](json& j) { j.erase("utilities"); })), ConfigError);
    CHECK_THROWS_AS(config::parse(with([](json& j) { j["utilities"][0] = "1.2*z[7]"; })), ConfigError);
    CHECK_THROWS_AS(config::parse(with([](json& j) { j["utilities"][0] = "1.2*"; })), ConfigError);
    CHECK_THROWS_AS(config::parse(with([](json& j) { j["baseline"] = 5; })), ConfigError);
    CHECK_THROWS_AS(config::parse(with([](json& j) { j["instruments"][0]["kind"] = "cauchy"; })), ConfigError);
    CHECK_THROWS_AS(config::parse(with([](json& j) { j["exclusions"][0]["treatment"] = 1; })), ConfigError);
    CHECK_THROWS_AS(config::parse(with([](json& j) { j["outcomes"].erase(0); })), ConfigError);
    CHECK_THROWS_AS(config::parse(with([](json& j) { j["variance_convention"] = "precision"; })), ConfigError);
    CHECK_THROWS_AS(config::load(scratch("missing.json").string()), Error);
}

TEST_CASE("standard deviation convention squares Gaussian scales")
{
    const config::LawConfig l{"gaussian", {1.0, 2.0}};
    CHECK_THAT(config::build_law(l, "variance").variance(), WithinAbs(2.0, 1e-15));
    CHECK_THAT(config::build_law(l, "std_dev").variance(), WithinAbs(4.0, 1e-15));
}

TEST_CASE("infinite numbers are written as strings")
{
    CHECK(config::number(-numeric::kInf) == json("-inf"));
    CHECK(config::read_number(json("inf"), "x") == numeric::kInf);
    CHECK(config::read_number(json(2.5), "x") == 2.5);
    CHECK_THROWS_AS(config::read_number(json("lots"), "x"), ConfigError);
}

TEST_CASE("numbers format to shortest round-trip text")
{
    for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.0})
        CHECK(std::stod(io::format_number(x)) == x);
    CHECK(io::format_number(numeric::kInf) == "inf");
}

TEST_CASE("CSV writer and reader agree")
{
    io::Csv csv({"a", "b"});
    csv.row({1.5, -numeric::kInf});
    csv.row({0.1, 2.0});
    CHECK(csv.rows() == 2);
    CHECK_THROWS_AS(csv.row({1.0}), DomainError);
    const auto path = scratch("t.csv");
    io::write_atomic(path, csv.str());
    const auto t = io::read_csv(path);
    CHECK(t.header == std::vector<std::string>{"a", "b"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0][1] == -numeric::kInf);
    CHECK(t.rows[1][0] == 0.1);
    io::write_atomic(path, "a,b\n1,x\n");
    CHECK_THROWS_AS(io::read_csv(path), IoError);
}

TEST_CASE("samples survive a CSV round trip")
{
    const auto scn = test::bundled("trivial");
    const auto s = estimation::simulate(scn, 500, 4, "abc");
    const auto csv = scratch("sample.csv"), side = scratch("sample.json");
    io::write_atomic(csv, io::sample_csv(s));
    io::write_json(side, io::sample_sidecar(s));
    const auto r = io::read_sample(csv, side);
    CHECK(r.z == s.z);
    CHECK(r.d == s.d);
    CHECK(r.y == s.y);
    CHECK(r.seed == 4);
    CHECK(r.fingerprint == "abc");
}

TEST_CASE("report serialization exposes the checked fields")
{
    RepresentationReport r;
    r.draws = 10;
    const auto j = io::to_json(r);
    CHECK(j.at("passed").get<bool>());
    CHECK(j.at("draws").get<int>() == 10);
    population::LimitTrace t;
    t.limit = 0.4;
    CHECK(io::to_json(t).at("limit").get<double>() == 0.4);
}
