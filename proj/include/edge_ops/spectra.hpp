#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "edge_ops/noise.hpp"
#include "edge_ops/sde.hpp"
#include "edge_ops/slops.hpp"

namespace edge {

enum class OperatorKind { airy, bessel, scaled };

/// One realization of an edge operator. airy and scaled read B in soft-edge coordinates; bessel reads B_{2a}
/// on the original half-line (index 2a, eigenvalues of the hard-edge operator itself).
struct OperatorDescriptor {
    OperatorKind kind = OperatorKind::airy;
    double beta = 2.0;
    double a = 0.0;
    std::shared_ptr<const NoiseGrid> noise;
};

OperatorDescriptor airy_operator(NoiseGrid noise, double beta);
OperatorDescriptor bessel_operator(NoiseGrid noise_2a, double beta, double a);
/// Hard edge in soft-edge coordinates: eigenvalues a^{-4/3}(Lambda - a^2).
OperatorDescriptor scaled_operator(NoiseGrid noise, double beta, double a);

enum class SpectrumMethod { oscillation_bisection, kernel_eig };

struct SpectrumEstimate {
    std::vector<double> eigenvalues;  // ascending
    SpectrumMethod method = SpectrumMethod::oscillation_bisection;
    double beta = 0.0;
    double a = 0.0;  // NaN when the operator has no a
    double L = 0.0;
    double h = 0.0;
    std::size_t count_requested = 0;
    bool ties = false;  // two located eigenvalues closer than the tolerance
};

/// Number of eigenvalues below lambda: explosions of the shifted Riccati flow on (0, T], plus one when the
/// flow ends below the unstable branch. Throws indeterminate-count when the end state cannot be classified.
int counting_function(const OperatorDescriptor& op, double lambda, double T, const RiccatiOptions& opt = {});

/// Lowest k eigenvalues by bisection on counting_function over one noise realization. An indeterminate count
/// retries once on a doubled window (capped by the noise horizon).
SpectrumEstimate eigs_by_bisection(const OperatorDescriptor& op, std::size_t k, double tol, double T,
                                   const RiccatiOptions& opt = {});

/// Operator eigenvalues 1/mu from the k largest |mu| of the weighted kernel matrix; a hard-edge kernel is
/// mapped back to Lambda = a^2 + a^{4/3}/mu. Dense below 2000 points, Lanczos with an O(n) matvec above.
SpectrumEstimate eigs_from_kernel(const TriangularKernel& K, std::size_t k);

/// Largest |mu| of the weighted kernel matrix by Lanczos (exposed for tests).
std::vector<double> kernel_top_eigs_lanczos(const TriangularKernel& K, std::size_t k);
std::vector<double> kernel_top_eigs_dense(const TriangularKernel& K, std::size_t k);

/// Soft-edge image a^{-4/3}(Lambda - a^2) of hard-edge eigenvalues.
SpectrumEstimate hard_to_soft(const SpectrumEstimate& s, double a);

/// sum_k |1/lambda_k - 1/lambda'_k|^2 over the common length, ascending order.
double hw_distance(const SpectrumEstimate& s1, const SpectrumEstimate& s2);

/// {method, params, eigenvalues[]}
std::string spectrum_json(const SpectrumEstimate& s);

const char* to_string(SpectrumMethod m);

}  // namespace edge
