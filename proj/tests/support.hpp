#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include <unistd.h>

#include "core/random.hpp"
#include "core/types.hpp"

namespace rewarddance::testing {

// Central differences of f around w, one coordinate at a time.
inline Vector numeric_gradient(const std::function<double(const Vector&)>& f, Vector w, double eps = 1e-4)
{
    Vector g(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double keep = w[i];
        w[i] = keep + eps;
        const double up = f(w);
        w[i] = keep - eps;
        const double down = f(w);
        w[i] = keep;
        g[i] = (up - down) / (2.0 * eps);
    }
    return g;
}

// ||a - b|| / max(||a||, ||b||); zero when both vanish.
inline double relative_error(const Vector& a, const Vector& b)
{
    double diff = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    const double scale = std::sqrt(std::max(na, nb));
    return scale == 0.0 ? std::sqrt(diff) : std::sqrt(diff) / scale;
}

inline Candidate make_candidate(const std::string& id, Vector features, std::optional<double> quality = std::nullopt)
{
    Candidate c;
    c.id = id;
    c.features = std::move(features);
    c.oracle_quality = quality;
    return c;
}

inline Vector random_vector(Rng& rng, std::size_t n, double scale = 1.0)
{
    Vector v = standard_normal(rng, n);
    for (auto& x : v) {
        x *= scale;
    }
    return v;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag)
        : path_(std::filesystem::temp_directory_path() / ("rewarddance_" + tag + "_" + std::to_string(::getpid())))
    {
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

} // namespace rewarddance::testing
