#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "types.hpp"

namespace rewarddance {

// Class-conditional Gaussian mixture geometry shared by the synthetic
// preference data, the toy generator and the oracle quality.
struct Mixture {
    std::vector<Vector> means; // one per class
    double stddev = 0.5;

    std::size_t dim() const { return means.empty() ? 0 : means.front().size(); }
    std::size_t num_classes() const { return means.size(); }

    // Class means on a circle in the first two coordinates; extra
    // coordinates get a fixed deterministic pattern.
    static Mixture standard(std::size_t dim, std::size_t num_classes, double radius = 2.0, double stddev = 0.5);

    // Same mixture with every mean moved by `shift` along the all-ones diagonal.
    Mixture shifted(double shift) const;
};

// q(x | c) = exp(-||x - mu_c||^2 / (2 tau^2)), in (0, 1].
struct QualityModel {
    Mixture mixture;
    double tau = 0.5;

    double quality(std::span<const double> x, int condition) const;
    // dq/dx
    Vector quality_grad(std::span<const double> x, int condition) const;
    // Index of the nearest class mean.
    int nearest_class(std::span<const double> x) const;
};

} // namespace rewarddance
