#pragma once

#include <stdexcept>
#include <string>

namespace mte {

// Every failure raised by the library carries a stable machine-readable kind,
// which the command line tool copies into its error report.
class Error : public std::runtime_error {
public:
    Error(const char* kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    const char* kind() const noexcept { return kind_; }

private:
    const char* kind_;
};

struct DomainError : Error {
    explicit DomainError(const std::string& w) : Error("domain", w) {}
};
struct TieError : Error {
    explicit TieError(const std::string& w) : Error("tie", w) {}
};
struct BoundaryError : Error {
    explicit BoundaryError(const std::string& w) : Error("boundary", w) {}
};
struct ConvergenceError : Error {
    explicit ConvergenceError(const std::string& w) : Error("convergence", w) {}
};
struct ExtensionError : Error {
    explicit ExtensionError(const std::string& w) : Error("extension_consistency", w) {}
};
struct StepSizeError : Error {
    explicit StepSizeError(const std::string& w) : Error("step_size", w) {}
};
struct MonotonicityError : Error {
    explicit MonotonicityError(const std::string& w) : Error("non_monotone", w) {}
};
struct SparseRegionError : Error {
    explicit SparseRegionError(const std::string& w) : Error("sparse_region", w) {}
};
struct BoundarySparsityError : Error {
    explicit BoundarySparsityError(const std::string& w) : Error("boundary_sparsity", w) {}
};
struct ConfigError : Error {
    explicit ConfigError(const std::string& w) : Error("config", w) {}
};
struct UnsupportedError : Error {
    explicit UnsupportedError(const std::string& w) : Error("unsupported", w) {}
};
struct IoError : Error {
    explicit IoError(const std::string& w) : Error("io", w) {}
};

} // namespace mte
