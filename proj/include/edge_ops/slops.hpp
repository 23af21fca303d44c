#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "edge_ops/noise.hpp"
#include "edge_ops/sde.hpp"

namespace edge {

/// Coefficients of the generalized Sturm-Liouville form sampled on a grid.
struct SLCoefficients {
    enum class Kind { airy, bessel };
    Kind kind = Kind::airy;
    double beta = 2.0;
    double two_a = 0.0;
    std::vector<double> grid;
    std::vector<double> r;
    std::vector<double> p1;
    std::vector<double> q0;
    std::vector<double> p0;
};

SLCoefficients airy_coefficients(const NoiseGrid& noise, double beta);
/// r = m_{2a}, p1 = 1/s_{2a}; the grid must hold B_{2a}.
SLCoefficients bessel_coefficients(const NoiseGrid& noise_2a, double beta, double a);

enum class TailPolicy { asymptotic, none };

struct RightOptions {
    double margin = 1.0;  // distance kept from the last zero of u_d, and from the window end
    TailPolicy tail = TailPolicy::asymptotic;
};

/// Right solution u_inf = u_d * int_x^inf w / u_d^2 for grid indices >= i0, where w is the Wronskian weight
/// (u_d u_inf' - u_d' u_inf = -w). The integral beyond the grid is closed as w/(rate u_d^2) at the end.
/// Indices below i0 are left zero.
SolutionPair right_solution(const SolutionPair& u_d, const std::vector<double>& weight, std::size_t i0,
                            double tail_rate);

/// J(x) = u_d(x)^2 int_x^inf w / u_d^2, i.e. u_d * u_inf, for indices >= i0.
std::vector<double> right_products(const SolutionPair& u_d, const std::vector<double>& weight, std::size_t i0,
                                   double tail_rate);

/// G(x) = u_d(x)^-2 int_0^x u_d^2 (trapezoid; exact ratios of the stored mantissas).
std::vector<double> left_ratios(const SolutionPair& u_d);

SolutionPair airy_dirichlet(const NoiseGrid& noise, double beta, double L_grid);
SolutionPair airy_neumann(const NoiseGrid& noise, double beta, double L_grid);

/// psi_inf from psi_d: the integral formula beyond the last zero plus a margin, backward integration below.
SolutionPair airy_infty(const SolutionPair& psi_d, const NoiseGrid& noise, double L_grid,
                        const RightOptions& opt = {});

/// psi_L = psi_star - (psi_star(L) / psi_d(L)) psi_d on [0, L].
SolutionPair airy_truncated(const SolutionPair& psi_d, const SolutionPair& psi_star, double L);

/// Multiplies a scaled-pair solution by exp(-eps^2 x / 2 - eps B(x) / sqrt(beta)), eps = a^{-1/3}.
SolutionPair tilde_transform(const SolutionPair& u_hat, const NoiseGrid& noise);

/// tilde phi_d and the Neumann-normalized tilde phi_star, in soft-edge coordinates on [0, L_grid].
SolutionPair bessel_tilde_dirichlet(const NoiseGrid& noise, double beta, double a, double L_grid);
SolutionPair bessel_tilde_neumann(const NoiseGrid& noise, double beta, double a, double L_grid);

/// tilde phi_inf from the scaled Dirichlet pair u_hat (data (0, 1)). A zero of u_hat in [L, end] is a
/// hard-eigenvalue-collision.
SolutionPair bessel_tilde_infty(const SolutionPair& u_hat_d, const NoiseGrid& noise, double L,
                                const RightOptions& opt = {});

/// Mirror of airy_truncated on tilde functions.
SolutionPair bessel_tilde_truncated(const SolutionPair& phi_tilde_d, const SolutionPair& phi_tilde_star, double L);

/// K(x, y) = u_right(max) u_d(min) / p1_at_0, factors stored as mantissa and binary exponent.
struct TriangularKernel {
    std::vector<double> grid;
    std::vector<double> d_m;
    std::vector<int> d_e;
    std::vector<double> r_m;
    std::vector<int> r_e;
    double p1_at_0 = 1.0;
    std::optional<double> trunc;
    double hard_edge_a = 0.0;  // > 0 when the kernel represents a^{4/3}(G - a^2)^{-1}

    std::size_t size() const { return grid.size(); }
    double u_d(std::size_t i) const;
    double u_right(std::size_t i) const;
    double operator()(std::size_t i, std::size_t j) const;
    /// Trapezoid weights of the grid.
    std::vector<double> weights() const;
};

TriangularKernel assemble_kernel(const SolutionPair& u_d, const SolutionPair& u_right, double p1_at_0,
                                 std::optional<double> trunc = std::nullopt);

/// Trapezoid HS norm in O(n) (two times the lower triangle minus the diagonal, scaled accumulators).
double hs_norm(const TriangularKernel& K);
/// HS distance in O(n); a kernel on a prefix grid is extended by zero.
double hs_distance(const TriangularKernel& K1, const TriangularKernel& K2);

/// Direct O(n^2) reference quadratures; the parallel variants split rows over OpenMP threads.
double hs_norm_direct(const TriangularKernel& K);
double hs_distance_direct(const TriangularKernel& K1, const TriangularKernel& K2);
double hs_norm_direct_parallel(const TriangularKernel& K);
double hs_distance_direct_parallel(const TriangularKernel& K1, const TriangularKernel& K2);

/// p1 (f1 f2' - f1' f2) pointwise on the shared grid.
std::vector<double> wronskian(const SolutionPair& f1, const SolutionPair& f2, double p1_at_0 = 1.0);

/// Grid dump with columns x, y, K (every stride-th point in each direction).
void write_kernel_csv(const TriangularKernel& K, std::ostream& out, std::size_t stride = 1);
/// JSON object {hs_norm, trunc, params}.
std::string kernel_summary_json(const TriangularKernel& K, double beta, double h);

}  // namespace edge
