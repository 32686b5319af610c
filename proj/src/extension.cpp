#include "mte/extension.hpp"

#include "mte/errors.hpp"

#include <algorithm>
#include <cmath>

namespace mte::extension {

CauchyCheck cauchy_image(std::vector<double> images, double tol)
{
    if (images.size() < 2)
        throw DomainError("a Cauchy check needs at least two images");
    CauchyCheck c;
    c.images = std::move(images);
    const std::size_t half = c.images.size() / 2;
    const auto [lo, hi] = std::minmax_element(c.images.begin() + static_cast<std::ptrdiff_t>(half), c.images.end());
    c.tail_spread = *hi - *lo;
    c.limit = c.images.back();
    c.cauchy = std::isfinite(c.tail_spread) && c.tail_spread <= tol;
    return c;
}

CauchyCheck cauchy_image(const std::function<double(double)>& f, std::span<const double> xs, double tol)
{
    std::vector<double> images;
    images.reserve(xs.size());
    for (double x : xs)
        images.push_back(f(x));
    return cauchy_image(std::move(images), tol);
}

ExtensionResult extend(const std::function<double(double)>& f, std::span<const std::vector<double>> sequences,
                       double tol)
{
    ExtensionResult r;
    if (sequences.empty())
        throw DomainError("extension needs at least one approach sequence");
    double lo = INFINITY, hi = -INFINITY, sum = 0.0;
    for (const auto& seq : sequences) {
        r.paths.push_back(cauchy_image(f, seq, tol));
        const auto& c = r.paths.back();
        if (!c.cauchy) {
            r.reason = "images of an approach sequence are not Cauchy";
            return r;
        }
        lo = std::min(lo, c.limit);
        hi = std::max(hi, c.limit);
        sum += c.limit;
    }
    if (hi - lo > tol) {
        r.reason = "approach sequences reach different limits";
        return r;
    }
    r.extendable = true;
    r.value = sum / static_cast<double>(sequences.size());
    return r;
}

} // namespace mte::extension
