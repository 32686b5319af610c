#pragma once

#include "mte/counterexample.hpp"
#include "mte/estimation.hpp"
#include "mte/population.hpp"
#include "mte/selection.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

// Artifact serialization. Files are written to a temporary sibling and
// renamed into place, so readers never observe partial output.
namespace mte::io {

void write_atomic(const std::filesystem::path& path, std::string_view content);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

// Shortest text that reads back to the same double (at most 17 significant
// digits); infinities as inf / -inf.
std::string format_number(double x);

class Csv {
public:
    explicit Csv(std::vector<std::string> header);
    void row(const std::vector<double>& values);
    const std::string& str() const { return text_; }
    std::size_t rows() const { return rows_; }

private:
    std::size_t columns_;
    std::size_t rows_ = 0;
    std::string text_;
};

// Header and rows of a numeric CSV file.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

Table read_csv(const std::filesystem::path& path);

// Columns z1..zm, d, y.
std::string sample_csv(const estimation::SampleSet& s);
nlohmann::json sample_sidecar(const estimation::SampleSet& s);
estimation::SampleSet read_sample(const std::filesystem::path& csv, const std::filesystem::path& sidecar);

// Columns v01, v02, v12.
std::string support_cloud_csv(const counterexample::SupportCloud& cloud);

nlohmann::json to_json(const RepresentationReport& r);
nlohmann::json to_json(const counterexample::ViolationReport& r);
nlohmann::json to_json(const population::DerivativeDiagnostics& d);
nlohmann::json to_json(const population::LimitTrace& t);
nlohmann::json to_json(const estimation::MteEstimate& m);

} // namespace mte::io
