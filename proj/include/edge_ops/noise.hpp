#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace edge {

/// One Brownian realization on the uniform grid t_i = i * step. Immutable once built.
struct BrownianPath {
    double step = 0.0;
    double horizon = 0.0;
    std::vector<double> values;
    std::uint64_t seed = 0;
    int refinement_level = 0;

    std::size_t size() const { return values.size(); }
    double time(std::size_t i) const { return static_cast<double>(i) * step; }
};

/// Number of grid values for a uniform grid of the given step on [0, horizon].
std::size_t grid_count(double horizon, double step);

BrownianPath sample_path(std::uint64_t seed, double horizon, double step);
BrownianPath refine(const BrownianPath& path, int factor);

double eval(const BrownianPath& path, double t);
double scaled_eval(const BrownianPath& path, double a, double x);
double fluctuation_constant(const BrownianPath& path, double s_min);

/// Grid samples of a (possibly scaled) Brownian motion as consumed by the SDE solvers.
/// Times may be piecewise uniform; increments are exact differences of knot values.
struct NoiseGrid {
    std::vector<double> t;
    std::vector<double> b;

    std::size_t size() const { return t.size(); }
    double horizon() const { return t.empty() ? 0.0 : t.back(); }
};

/// Samples B at i*h, i = 0..floor(T/h). Refines a copy of the path when h is finer than its step.
NoiseGrid sample_grid(const BrownianPath& path, double T, double h);

/// Samples B_{2a}(t) = a^{-1/3} B(a^{2/3} t) at t = i*h on [0, T]; a = 0 means B itself.
NoiseGrid scaled_grid(const BrownianPath& path, double a, double T, double h);

/// Restriction of the path to the knots in [0, T].
BrownianPath restrict_path(const BrownianPath& path, double T);

/// Piecewise uniform grid: step h on [0, T_fine] (refining a prefix copy of the path when needed),
/// then the path's own knots on (T_fine, T]. T_fine is rounded up to a knot of the path.
NoiseGrid piecewise_grid(const BrownianPath& path, double h, double T_fine, double T);

/// Zero path on [0, T] with step h (noise-off runs).
NoiseGrid zero_grid(double T, double h);

/// Uniform grid from explicit values (tests and synthetic paths).
NoiseGrid grid_from_values(const std::vector<double>& values, double h);

void save_binary(const BrownianPath& path, const std::string& file);
BrownianPath load_binary(const std::string& file);
void write_csv(const BrownianPath& path, std::ostream& out);

}  // namespace edge
