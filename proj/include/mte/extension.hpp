#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

// Extension of a function to limit points of its domain through images of
// Cauchy sequences: a uniformly continuous function maps every Cauchy
// sequence to a Cauchy sequence, so a sequence whose images keep oscillating
// rules the extension out.
namespace mte::extension {

struct CauchyCheck {
    bool cauchy = false;
    double limit = 0.0;       // last image
    double tail_spread = 0.0; // max - min over the second half of the images
    std::vector<double> images;
};

CauchyCheck cauchy_image(std::vector<double> images, double tol);
CauchyCheck cauchy_image(const std::function<double(double)>& f, std::span<const double> xs, double tol);

struct ExtensionResult {
    bool extendable = false;
    double value = 0.0;
    std::vector<CauchyCheck> paths;
    std::string reason;
};

// Every approach sequence must have Cauchy images and all limits must agree
// within tol; the extension value is their mean.
ExtensionResult extend(const std::function<double(double)>& f, std::span<const std::vector<double>> sequences,
                       double tol);

} // namespace mte::extension
