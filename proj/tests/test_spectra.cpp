#include <doctest.h>

#include <boost/math/special_functions/airy.hpp>
#include <cmath>
#include <limits>
#include <numbers>

#include <json.hpp>

#include "edge_ops/errors.hpp"
#include "edge_ops/noise.hpp"
#include "edge_ops/slops.hpp"
#include "edge_ops/spectra.hpp"

using namespace edge;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double airy_zero(int k) { return -boost::math::airy_ai_zero<double>(k); }

TriangularKernel green_kernel(double h) {
    std::vector<double> x, f, fp, g, gp;
    std::size_t n = static_cast<std::size_t>(std::llround(1.0 / h)) + 1;
    for (std::size_t i = 0; i < n; ++i) {
        double t = h * static_cast<double>(i);
        x.push_back(t);
        f.push_back(t);
        fp.push_back(1.0);
        g.push_back(1.0 - t);
        gp.push_back(-1.0);
    }
    return assemble_kernel(pair_from_values(PairKind::airy, x, f, fp), pair_from_values(PairKind::airy, x, g, gp), 1.0);
}

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("no error raised");
    return ErrorKind::invalid_state;
}

SpectrumEstimate with_values(std::vector<double> v) {
    SpectrumEstimate s;
    s.eigenvalues = std::move(v);
    return s;
}

}  // namespace

TEST_SUITE("spectra") {

TEST_CASE("noiseless Airy counting function") {
    OperatorDescriptor op = airy_operator(zero_grid(40.0, 1e-3), kInf);
    CHECK(counting_function(op, 0.0, 20.0) == 0);
    CHECK(counting_function(op, 3.0, 20.0) == 1);
    CHECK(counting_function(op, 5.0, 20.0) == 2);
}

TEST_CASE("counting function is non-decreasing in lambda") {
    NoiseGrid g = sample_grid(sample_path(17, 40.0, 1e-3), 40.0, 1e-3);
    OperatorDescriptor op = airy_operator(g, 2.0);
    int prev = -1;
    bool monotone = true;
    for (double lambda = -4.0; lambda <= 8.0; lambda += 0.25) {
        int c = counting_function(op, lambda, 20.0);
        monotone = monotone && c >= prev;
        prev = c;
    }
    CHECK(monotone);
    CHECK(prev >= 3);
}

TEST_CASE("bisection locates simple jumps of the counting function") {
    NoiseGrid g = sample_grid(sample_path(23, 40.0, 1e-3), 40.0, 1e-3);
    OperatorDescriptor op = airy_operator(g, 2.0);
    const double tol = 1e-5;
    SpectrumEstimate s = eigs_by_bisection(op, 4, tol, 20.0);
    REQUIRE(s.eigenvalues.size() == 4);
    CHECK(s.method == SpectrumMethod::oscillation_bisection);
    CHECK_FALSE(s.ties);
    for (std::size_t j = 0; j < 4; ++j) {
        double l = s.eigenvalues[j];
        CHECK(counting_function(op, l + tol, 20.0) - counting_function(op, l - tol, 20.0) == 1);
        CHECK(counting_function(op, l - tol, 20.0) == static_cast<int>(j));
        if (j > 0) CHECK(l > s.eigenvalues[j - 1]);
    }
}

TEST_CASE("noiseless Airy eigenvalues against the Airy-zero oracle") {
    SpectrumEstimate s = eigs_by_bisection(airy_operator(zero_grid(40.0, 1e-3), kInf), 3, 1e-6, 20.0);
    for (int k = 1; k <= 3; ++k) CHECK(std::fabs(s.eigenvalues[static_cast<std::size_t>(k - 1)] - airy_zero(k)) < 2e-3);
}

TEST_CASE("Green kernel spectrum") {
    TriangularKernel G = green_kernel(1e-3);
    SpectrumEstimate s = eigs_from_kernel(G, 3);
    CHECK(s.method == SpectrumMethod::kernel_eig);
    const double pi2 = std::numbers::pi * std::numbers::pi;
    CHECK(std::fabs(s.eigenvalues[0] - pi2) < 1e-2);
    CHECK(std::fabs(s.eigenvalues[1] - 4 * pi2) < 5e-2);
    std::vector<double> mu = kernel_top_eigs_dense(G, 1);
    CHECK(mu[0] > 0.0);
    CHECK(mu[0] == doctest::Approx(1.0 / pi2).epsilon(1e-3));
    CHECK(kind_of([&] { eigs_from_kernel(green_kernel(0.25), 6); }) == ErrorKind::invalid_argument);
}

TEST_CASE("dense and Lanczos kernel eigensolvers agree") {
    TriangularKernel G = green_kernel(1e-3);
    std::vector<double> d = kernel_top_eigs_dense(G, 4), l = kernel_top_eigs_lanczos(G, 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(l[i] == doctest::Approx(d[i]).epsilon(1e-9));
}

TEST_CASE("kernel and bisection spectra agree without noise") {
    const double Lg = 16.0, tol = 1e-4;
    NoiseGrid z = zero_grid(Lg, 1e-3);
    SolutionPair d = airy_dirichlet(z, kInf, Lg);
    SpectrumEstimate k = eigs_from_kernel(assemble_kernel(d, airy_infty(d, z, Lg), 1.0), 3);
    SpectrumEstimate b = eigs_by_bisection(airy_operator(zero_grid(40.0, 1e-3), kInf), 3, tol, 20.0);
    CHECK(std::fabs(k.eigenvalues[0] - b.eigenvalues[0]) < 5e-3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::fabs(k.eigenvalues[i] - b.eigenvalues[i]) < 10 * tol);
}

TEST_CASE("kernel and bisection spectra agree under noise") {
    const double h = 1e-4, Lg = 16.0;
    NoiseGrid g = sample_grid(sample_path(11, 40.0, h), 40.0, h);
    SpectrumEstimate b = eigs_by_bisection(airy_operator(g, 2.0), 3, 1e-6, 20.0);
    NoiseGrid w;
    std::size_t n = static_cast<std::size_t>(std::llround(Lg / h)) + 1;
    w.t.assign(g.t.begin(), g.t.begin() + static_cast<long>(n));
    w.b.assign(g.b.begin(), g.b.begin() + static_cast<long>(n));
    SolutionPair d = airy_dirichlet(w, 2.0, Lg);
    SpectrumEstimate k = eigs_from_kernel(assemble_kernel(d, airy_infty(d, w, Lg), 1.0), 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::fabs(k.eigenvalues[i] - b.eigenvalues[i]) < 5e-2);
}

TEST_CASE("hard-edge eigenvalues map onto the scaled operator") {
    const double a = 10.0, h = 1e-3, T = 20.0;
    const double s = std::pow(a, 2.0 / 3.0);
    SpectrumEstimate hard = eigs_by_bisection(bessel_operator(zero_grid(2 * T / s, h / s), kInf, a), 3, 1e-7, T / s);
    SpectrumEstimate soft = eigs_by_bisection(scaled_operator(zero_grid(2 * T, h), kInf, a), 3, 1e-6, T);
    SpectrumEstimate mapped = hard_to_soft(hard, a);
    for (std::size_t i = 0; i < 3; ++i) CHECK(mapped.eigenvalues[i] == doctest::Approx(soft.eigenvalues[i]).epsilon(1e-3));
}

TEST_CASE("inverse-eigenvalue distance") {
    CHECK(hw_distance(with_values({1.0, 2.0}), with_values({1.0, 2.0})) == 0.0);
    CHECK(hw_distance(with_values({1.0, 2.0}), with_values({2.0, 2.0})) == doctest::Approx(0.25));
    CHECK(hw_distance(with_values({2.0, 1.0}), with_values({2.0, 2.0, 5.0})) == doctest::Approx(0.25));
    CHECK(kind_of([] { hw_distance(with_values({0.0}), with_values({1.0})); }) == ErrorKind::undefined_inverse);

    OperatorDescriptor airy = airy_operator(zero_grid(40.0, 1e-3), kInf);
    SpectrumEstimate s0 = eigs_by_bisection(airy, 3, 1e-7, 20.0);
    double prev = kInf;
    for (double a : {1e2, 1e4}) {
        SpectrumEstimate sa = eigs_by_bisection(scaled_operator(zero_grid(40.0, 1e-3), kInf, a), 3, 1e-7, 20.0);
        double d = hw_distance(s0, sa);
        CHECK(d < prev);
        prev = d;
    }
}

TEST_CASE("spectrum JSON") {
    SpectrumEstimate s = with_values({1.5, 2.5});
    s.beta = kInf;
    s.a = std::numeric_limits<double>::quiet_NaN();
    s.L = 20.0;
    s.h = 1e-3;
    s.count_requested = 2;
    auto j = nlohmann::json::parse(spectrum_json(s));
    CHECK(j["method"] == "oscillation-bisection");
    CHECK(j["params"]["beta"] == "inf");
    CHECK(j["params"]["a"].is_null());
    CHECK(j["eigenvalues"].size() == 2);
    CHECK(j["eigenvalues"][1].get<double>() == 2.5);
}

}
