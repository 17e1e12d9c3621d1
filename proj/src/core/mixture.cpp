#include "mixture.hpp"

#include <cmath>
#include <numbers>

namespace rewarddance {

Mixture Mixture::standard(std::size_t dim, std::size_t num_classes, double radius, double stddev)
{
    require(dim >= 1 && num_classes >= 1, ErrorCode::InvalidArgument, "mixture needs dim >= 1 and >= 1 class");
    Mixture m;
    m.stddev = stddev;
    for (std::size_t c = 0; c < num_classes; ++c) {
        Vector mu(dim, 0.0);
        if (dim == 1) {
            mu[0] = radius * (static_cast<double>(c) - 0.5 * static_cast<double>(num_classes - 1));
        } else {
            const double angle = 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(num_classes);
            mu[0] = radius * std::cos(angle);
            mu[1] = radius * std::sin(angle);
            for (std::size_t j = 2; j < dim; ++j) {
                mu[j] = 0.5 * radius * std::sin(1.3 * static_cast<double>((c + 1) * (j + 1)));
            }
        }
        m.means.push_back(std::move(mu));
    }
    return m;
}

Mixture Mixture::shifted(double shift) const
{
    Mixture m = *this;
    const double step = shift / std::sqrt(static_cast<double>(dim()));
    for (auto& mu : m.means) {
        for (auto& v : mu) {
            v += step;
        }
    }
    return m;
}

namespace {

const Vector& mean_for(const Mixture& m, std::span<const double> x, int condition)
{
    require(condition >= 0 && static_cast<std::size_t>(condition) < m.num_classes(), ErrorCode::InvalidArgument,
        "condition " + std::to_string(condition) + " outside [0, " + std::to_string(m.num_classes()) + ")");
    require(x.size() == m.dim(), ErrorCode::Dimension,
        "sample has " + std::to_string(x.size()) + " coordinates, expected " + std::to_string(m.dim()));
    return m.means[static_cast<std::size_t>(condition)];
}

} // namespace

double QualityModel::quality(std::span<const double> x, int condition) const
{
    const Vector& mu = mean_for(mixture, x, condition);
    double d2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        d2 += (x[i] - mu[i]) * (x[i] - mu[i]);
    }
    return std::exp(-d2 / (2.0 * tau * tau));
}

Vector QualityModel::quality_grad(std::span<const double> x, int condition) const
{
    const Vector& mu = mean_for(mixture, x, condition);
    const double q = quality(x, condition);
    Vector g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        g[i] = -q * (x[i] - mu[i]) / (tau * tau);
    }
    return g;
}

int QualityModel::nearest_class(std::span<const double> x) const
{
    int best = 0;
    double best_d2 = INFINITY;
    for (std::size_t c = 0; c < mixture.num_classes(); ++c) {
        double d2 = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            d2 += (x[i] - mixture.means[c][i]) * (x[i] - mixture.means[c][i]);
        }
        if (d2 < best_d2) {
            best_d2 = d2;
            best = static_cast<int>(c);
        }
    }
    return best;
}

} // namespace rewarddance
