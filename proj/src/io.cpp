#include "mte/io.hpp"

#include "mte/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace mte::io {

using nlohmann::json;

void write_atomic(const std::filesystem::path& path, std::string_view content)
{
    std::error_code ec;
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path(), ec);
    auto tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError("cannot open '" + tmp.string() + "' for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out)
            throw IoError("write to '" + tmp.string() + "' failed");
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot move output into place at '" + path.string() + "'");
    }
}

void write_json(const std::filesystem::path& path, const json& j) { write_atomic(path, j.dump(2) + "\n"); }

std::string format_number(double x)
{
    if (std::isnan(x))
        return "nan";
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

Csv::Csv(std::vector<std::string> header) : columns_(header.size())
{
    for (std::size_t c = 0; c < header.size(); ++c)
        text_ += (c ? "," : "") + header[c];
    text_ += "\n";
}

void Csv::row(const std::vector<double>& values)
{
    if (values.size() != columns_)
        throw DomainError("CSV row has the wrong number of columns");
    for (std::size_t c = 0; c < values.size(); ++c) {
        if (c)
            text_ += ',';
        text_ += format_number(values[c]);
    }
    text_ += '\n';
    ++rows_;
}

Table read_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open '" + path.string() + "'");
    Table t;
    std::string line;
    if (!std::getline(in, line))
        throw IoError("'" + path.string() + "' has no header");
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            t.header.push_back(cell);
    }
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(cell == "inf" ? numeric::kInf : cell == "-inf" ? -numeric::kInf : std::stod(cell));
            } catch (const std::exception&) {
                throw IoError("'" + path.string() + "' holds a non-numeric cell '" + cell + "'");
            }
        }
        if (row.size() != t.header.size())
            throw IoError("'" + path.string() + "' has a ragged row");
        t.rows.push_back(std::move(row));
    }
    return t;
}

std::string sample_csv(const estimation::SampleSet& s)
{
    std::vector<std::string> header;
    for (std::size_t c = 0; c < s.dim; ++c)
        header.push_back("z" + std::to_string(c + 1));
    header.push_back("d");
    header.push_back("y");
    Csv csv(header);
    std::vector<double> row(s.dim + 2);
    for (std::size_t i = 0; i < s.size(); ++i) {
        for (std::size_t c = 0; c < s.dim; ++c)
            row[c] = s.z[i * s.dim + c];
        row[s.dim] = s.d[i];
        row[s.dim + 1] = s.y[i];
        csv.row(row);
    }
    return csv.str();
}

json sample_sidecar(const estimation::SampleSet& s)
{
    return json{{"seed", s.seed}, {"fingerprint", s.fingerprint}, {"n", s.size()}, {"instrument_dim", s.dim}};
}

estimation::SampleSet read_sample(const std::filesystem::path& csv, const std::filesystem::path& sidecar)
{
    const auto t = read_csv(csv);
    if (t.header.size() < 3 || t.header[t.header.size() - 2] != "d" || t.header.back() != "y")
        throw IoError("sample CSV must have columns z1..zm,d,y");
    estimation::SampleSet s;
    s.dim = t.header.size() - 2;
    for (const auto& r : t.rows) {
        s.z.insert(s.z.end(), r.begin(), r.begin() + static_cast<std::ptrdiff_t>(s.dim));
        s.d.push_back(static_cast<int>(r[s.dim]));
        s.y.push_back(r[s.dim + 1]);
    }
    std::ifstream in(sidecar);
    if (!in)
        throw IoError("cannot open '" + sidecar.string() + "'");
    try {
        const auto j = json::parse(in);
        s.seed = j.at("seed").get<std::uint64_t>();
        s.fingerprint = j.at("fingerprint").get<std::string>();
    } catch (const json::exception& e) {
        throw IoError("malformed sample sidecar: " + std::string(e.what()));
    }
    return s;
}

std::string support_cloud_csv(const counterexample::SupportCloud& cloud)
{
    Csv csv({"v01", "v02", "v12"});
    for (const auto& p : cloud.points)
        csv.row({p.v01, p.v02, p.v12});
    return csv.str();
}

json to_json(const RepresentationReport& r)
{
    json ex = json::array();
    for (const auto& m : r.examples)
        ex.push_back(json{{"z", m.z}, {"u", m.u}, {"v", m.v}, {"argmax", m.argmax},
                          {"represented", m.represented}, {"gap", m.gap}});
    return json{{"draws", r.draws},         {"mismatches", r.mismatches}, {"tolerated", r.tolerated},
                {"boundary", r.boundary},   {"seconds", r.seconds},       {"passed", r.passed()},
                {"examples", ex}};
}

namespace {

json trace_json(const counterexample::OccupancyTrace& t)
{
    return json{{"eps", t.eps}, {"occupied", t.occupied}, {"points", t.points}};
}

} // namespace

json to_json(const counterexample::ViolationReport& r)
{
    return json{{"cloud", trace_json(r.cloud)},
                {"control", trace_json(r.control)},
                {"max_residual", r.max_residual},
                {"final_volume", r.cloud.occupied.empty() ? 1.0 : r.cloud.occupied.back()},
                {"lebesgue_null", r.lebesgue_null},
                {"verdict", r.verdict}};
}

json to_json(const population::DerivativeDiagnostics& d)
{
    return json{{"h", d.h},
                {"central_h", d.central_h},
                {"central_h2", d.central_h2},
                {"richardson", d.richardson},
                {"evaluations", d.evaluations}};
}

json to_json(const population::LimitTrace& t)
{
    return json{{"target", t.target}, {"pushed", t.pushed},           {"z", t.z},
                {"H", t.H},           {"rate", t.rate},               {"limit", t.limit},
                {"closed_form", t.closed_form}};
}

json to_json(const estimation::MteEstimate& m)
{
    return json{{"contrast", m.point.contrast},
                {"qstar", m.point.qstar},
                {"recovered_k", m.recovered_k},
                {"recovered_j", m.recovered_j},
                {"mte", m.mte},
                {"offset", m.offset},
                {"bandwidth", m.bandwidth},
                {"effective_n", m.effective_n},
                {"warnings", m.warnings}};
}

} // namespace mte::io
