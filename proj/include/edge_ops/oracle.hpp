#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace edge {

/// Laguerre beta-ensemble of size n as a bidiagonal matrix model.
struct TridiagonalModel {
    int n = 1;
    double beta = 2.0;
    double a = 0.0;  // > -1
    std::uint64_t seed = 1;
};

/// Ascending eigenvalues of B B^T / beta, B lower bidiagonal with diagonal chi_{beta(a+n-i+1)} and
/// subdiagonal chi_{beta(n-i)}, i = 1..n.
std::vector<double> sample_laguerre(const TridiagonalModel& model);

/// Tridiagonal B B^T / beta of one draw (diagonal, off-diagonal).
void laguerre_tridiagonal(const TridiagonalModel& model, std::vector<double>& diag, std::vector<double>& off);

std::vector<double> hard_edge_scale(const std::vector<double>& evals, int n);

struct SoftScaled {
    std::vector<double> values;
    bool advisory = false;  // a_n small against n: outside the proved regime
};

SoftScaled soft_edge_scale(const std::vector<double>& evals, int n, double a_n);
/// Centre (sqrt(n + a_n) - sqrt(n))^2 and factor ((n + a_n) n)^{1/6} / (sqrt(n + a_n) - sqrt(n))^{4/3}.
double soft_edge_center(int n, double a_n);
double soft_edge_factor(int n, double a_n);

double mp_density(double x, double gamma);
double mp_cdf(double x, double gamma);
/// sup |F_emp(lambda / n) - F_MP|.
double mp_cdf_distance(const std::vector<double>& evals, int n, double gamma);

/// Two-sample Kolmogorov-Smirnov statistic.
double ks_two_sample(std::vector<double> x, std::vector<double> y);
/// One-sample statistic against a continuous CDF.
double ks_one_sample(std::vector<double> x, const std::function<double(double)>& cdf);

/// {n, quantiles {q05, q25, q50, q75, q95}, mean} per sample plus the KS statistic.
std::string distribution_summary_json(const std::vector<double>& operator_side, const std::vector<double>& matrix_side,
                                      double ks);

void write_eigenvalues_csv(const std::vector<std::vector<double>>& draws, std::ostream& out);

}  // namespace edge
