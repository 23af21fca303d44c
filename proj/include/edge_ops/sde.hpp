#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <numbers>
#include <vector>

#include "edge_ops/noise.hpp"

namespace edge {

enum class PairKind { airy, hard, scaled };

struct PairParams {
    double beta = 2.0;
    double a = 0.0;  // hard: a (index 2a); scaled: a (infinity for the Airy limit)
    double lambda = 0.0;
    double c0 = 0.0;
    double c1 = 1.0;
};

/// Noise amplitude 2/sqrt(beta); beta = infinity switches the noise (and the 2/beta drift) off.
inline double noise_amp(double beta) { return 2.0 / std::sqrt(beta); }

/// Grid solution (f, f') stored as mantissas with a shared binary exponent:
/// f = f_m * 2^e, f' = fp_m * 2^e, so neither overflow nor sign information is lost.
struct SolutionPair {
    PairKind kind = PairKind::airy;
    PairParams params;
    std::vector<double> grid;
    std::vector<double> f_m;
    std::vector<double> fp_m;
    std::vector<int> e2;
    std::vector<std::size_t> crossings;  // indices i with a sign change on (grid[i-1], grid[i]]

    std::size_t size() const { return grid.size(); }
    int sign(std::size_t i) const { return (f_m[i] > 0) - (f_m[i] < 0); }
    double log_mag(std::size_t i) const {
        return std::log(std::fabs(f_m[i])) + e2[i] * std::numbers::ln2;
    }
    double log_abs_deriv(std::size_t i) const {
        return std::log(std::fabs(fp_m[i])) + e2[i] * std::numbers::ln2;
    }
    double deriv_ratio(std::size_t i) const {
        return f_m[i] == 0.0 ? std::numeric_limits<double>::infinity() : fp_m[i] / f_m[i];
    }
    double raw_f(std::size_t i) const { return std::ldexp(f_m[i], e2[i]); }
    double raw_fp(std::size_t i) const { return std::ldexp(fp_m[i], e2[i]); }
    /// Index of the grid point nearest to x.
    std::size_t index_of(double x) const;
    /// Largest grid time at which f changes sign (0 when it never does).
    double last_zero() const;
};

/// Riccati trajectory. values[i] is finite, or +infinity right after a restart.
struct RiccatiPath {
    std::vector<double> grid;
    std::vector<double> values;
    std::vector<double> explosions;              // sub-grid explosion times
    std::vector<std::size_t> explosion_index;    // grid index right after each explosion
    double m_cap = 1e6;
    PairKind kind = PairKind::airy;
    PairParams params;

    std::size_t size() const { return grid.size(); }
};

struct RiccatiOptions {
    double m_switch = 1e3;
    double m_cap = 1e6;
};

/// Chart switch threshold actually used for step h.
double effective_switch(const RiccatiOptions& opt, double h);

SolutionPair solve_airy_pair(const NoiseGrid& noise, double beta, double c0, double c1, double L);
SolutionPair solve_airy_pair(const BrownianPath& noise, double beta, double c0, double c1, double L, double h);

/// Hard-edge pair in the original variable. The noise grid must already hold B_{2a} (see scaled_grid).
SolutionPair solve_hard_pair(const NoiseGrid& noise_2a, double beta, double a, double lambda, double c0, double c1,
                             double T);
SolutionPair solve_hard_pair(const BrownianPath& noise, double beta, double a, double lambda, double c0, double c1,
                             double T, double h);

/// Scaled pair in soft-edge coordinates; a = infinity gives the Airy pair exactly.
SolutionPair solve_scaled_pair(const NoiseGrid& noise, double beta, double a, double eta0, double eta1, double L);
SolutionPair solve_scaled_pair(const BrownianPath& noise, double beta, double a, double eta0, double eta1, double L,
                               double h);

/// Airy Riccati dX = (t - lambda - X^2) dt + (2/sqrt(beta)) dB on [t0, T]; x0 = +infinity is the Dirichlet start.
RiccatiPath solve_airy_riccati(const NoiseGrid& noise, double beta, double t0, double x0, double T,
                               double lambda = 0.0, const RiccatiOptions& opt = {});
RiccatiPath solve_airy_riccati(const BrownianPath& noise, double beta, double t0, double x0, double T, double h,
                               double lambda = 0.0, const RiccatiOptions& opt = {});

/// Bessel Riccati for p = phi'/phi started at +infinity. The noise grid must hold B_{2a}.
RiccatiPath solve_bessel_riccati(const NoiseGrid& noise_2a, double beta, double a, double lambda, double T,
                                 const RiccatiOptions& opt = {});
RiccatiPath solve_bessel_riccati(const BrownianPath& noise, double beta, double a, double lambda, double T, double h,
                                 const RiccatiOptions& opt = {});

/// Riccati of the scaled pair, P = u'/u in soft coordinates, with spectral shift mu.
RiccatiPath solve_scaled_riccati(const NoiseGrid& noise, double beta, double a, double mu, double T,
                                 const RiccatiOptions& opt = {});

/// log|f| by trapezoid integration of the Riccati path; the sign flips at every explosion.
SolutionPair log_reconstruct(const RiccatiPath& r, double log_f_at_start, int sign_at_start,
                             bool flip_at_explosions = true);

/// Explosion count of a Riccati flow without storing the path; `final_value` receives X(T).
struct CountResult {
    int explosions = 0;
    double final_value = 0.0;
};
CountResult count_airy_explosions(const NoiseGrid& noise, double beta, double lambda, double T,
                                  const RiccatiOptions& opt = {});
CountResult count_bessel_explosions(const NoiseGrid& noise_2a, double beta, double a, double lambda, double T,
                                    const RiccatiOptions& opt = {});
CountResult count_scaled_explosions(const NoiseGrid& noise, double beta, double a, double mu, double T,
                                    const RiccatiOptions& opt = {});

/// Pair from raw grid values (tests and synthetic inputs).
SolutionPair pair_from_values(PairKind kind, const std::vector<double>& grid, const std::vector<double>& f,
                              const std::vector<double>& fp);

/// Fills indices [0, i0) of s by running the pair scheme of s.kind/s.params backwards from index i0 on the
/// noise that produced s. The one-step map is inverted exactly, so discrete Wronskians carry over.
void integrate_backward(SolutionPair& s, const NoiseGrid& noise, std::size_t i0);

/// Recomputes the sign-change indices of s.
void recount_crossings(SolutionPair& s);

/// Trajectory dump with columns t, sign, log_mag, deriv_ratio.
void write_trajectory_csv(const SolutionPair& s, std::ostream& out);

}  // namespace edge
