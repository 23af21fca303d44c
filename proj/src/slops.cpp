#include "edge_ops/slops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <json.hpp>

#include "edge_ops/errors.hpp"
#include "edge_ops/format.hpp"

namespace edge {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double ratio(const SolutionPair& s, std::size_t i, std::size_t j) {
    return std::ldexp(s.f_m[i] / s.f_m[j], s.e2[i] - s.e2[j]);
}

void normalize(double& u, double& v, int& e) {
    double m = std::max(std::fabs(u), std::fabs(v));
    if (m == 0.0 || !std::isfinite(m)) return;
    int k = 0;
    std::frexp(m, &k);
    u = std::ldexp(u, -k);
    v = std::ldexp(v, -k);
    e += k;
}

// Value m * 2^e kept in range while summing terms of very different magnitude.
struct ScaledSum {
    double m = 0.0;
    long e = 0;

    void add(double mant, long ex) {
        if (mant == 0.0) return;
        if (m == 0.0) {
            m = mant;
            e = ex;
        } else if (ex > e) {
            m = std::ldexp(m, static_cast<int>(std::max<long>(e - ex, -2000))) + mant;
            e = ex;
        } else {
            m += std::ldexp(mant, static_cast<int>(std::max<long>(ex - e, -2000)));
        }
        if (m != 0.0) {
            int k = 0;
            std::frexp(m, &k);
            m = std::ldexp(m, -k);
            e += k;
        }
    }
    double value() const { return std::ldexp(m, static_cast<int>(std::clamp<long>(e, -4000, 4000))); }
};

std::size_t prefix_count(const SolutionPair& s, double L) {
    require(!s.grid.empty(), ErrorKind::invalid_argument, "empty solution");
    require(L >= 0.0 && L <= s.grid.back() * (1.0 + 1e-12) + 1e-12, ErrorKind::out_of_range,
            "L = " + fmt_num(L) + " outside the solution window [0, " + fmt_num(s.grid.back()) + "]");
    return s.index_of(L) + 1;
}

SolutionPair prefix(const SolutionPair& s, std::size_t n) {
    SolutionPair out;
    out.kind = s.kind;
    out.params = s.params;
    out.grid.assign(s.grid.begin(), s.grid.begin() + static_cast<std::ptrdiff_t>(n));
    out.f_m.assign(s.f_m.begin(), s.f_m.begin() + static_cast<std::ptrdiff_t>(n));
    out.fp_m.assign(s.fp_m.begin(), s.fp_m.begin() + static_cast<std::ptrdiff_t>(n));
    out.e2.assign(s.e2.begin(), s.e2.begin() + static_cast<std::ptrdiff_t>(n));
    recount_crossings(out);
    return out;
}

// p - c q on [0, L]; c = p(L) / q(L) puts a zero at L.
SolutionPair truncate_with(const SolutionPair& q, const SolutionPair& p, double L) {
    require(q.grid.size() >= 2 && p.grid.size() >= 2, ErrorKind::invalid_argument, "empty solution");
    std::size_t n = prefix_count(q, L);
    require(p.size() >= n, ErrorKind::invalid_argument, "solutions do not both cover [0, L]");
    for (std::size_t i = 0; i < n; ++i)
        require(p.grid[i] == q.grid[i], ErrorKind::invalid_argument, "solutions live on different grids");
    std::size_t iL = n - 1;
    double top = -kInf;
    for (std::size_t i = 0; i < n; ++i)
        if (q.f_m[i] != 0.0) top = std::max(top, q.log_mag(i));
    if (q.f_m[iL] == 0.0 || q.log_mag(iL) < std::log(1e-10) + top)
        fail(ErrorKind::near_eigenvalue, "Dirichlet solution vanishes at L = " + fmt_num(L));
    const double c_m = p.f_m[iL] / q.f_m[iL];
    const int c_e = p.e2[iL] - q.e2[iL];
    SolutionPair out;
    out.kind = p.kind;
    out.params = p.params;
    out.grid.assign(p.grid.begin(), p.grid.begin() + static_cast<std::ptrdiff_t>(n));
    out.f_m.resize(n);
    out.fp_m.resize(n);
    out.e2.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        int eq = q.e2[i] + c_e;
        int E = std::max(p.e2[i], eq);
        double f = std::ldexp(p.f_m[i], p.e2[i] - E) - c_m * std::ldexp(q.f_m[i], eq - E);
        double fp = std::ldexp(p.fp_m[i], p.e2[i] - E) - c_m * std::ldexp(q.fp_m[i], eq - E);
        normalize(f, fp, E);
        out.f_m[i] = f;
        out.fp_m[i] = fp;
        out.e2[i] = E;
    }
    out.f_m[iL] = 0.0;
    recount_crossings(out);
    return out;
}

double scaled_eps(const SolutionPair& s) {
    double a = s.params.a;
    return std::isinf(a) ? 0.0 : std::pow(a, -1.0 / 3.0);
}

void check_noise(const SolutionPair& s, const NoiseGrid& noise) {
    require(noise.size() >= s.size(), ErrorKind::invalid_argument, "noise grid shorter than the solution");
    require(s.size() == 0 || noise.t[s.size() - 1] == s.grid.back(), ErrorKind::invalid_argument,
            "solution and noise grids differ");
}

// Decay rate of log(w / u^2) over the last stretch of the window.
double fitted_rate(const SolutionPair& u, const std::vector<double>& w, std::size_t i0) {
    std::size_t n = u.size();
    double x_end = u.grid[n - 1];
    double span = std::min(1.0, 0.5 * (x_end - u.grid[i0]));
    std::size_t m = u.index_of(x_end - span);
    if (m >= n - 1) m = n - 2;
    auto ell = [&](std::size_t i) { return std::log(w[i]) - 2.0 * u.log_mag(i); };
    return (ell(m) - ell(n - 1)) / (x_end - u.grid[m]);
}

}  // namespace

SLCoefficients airy_coefficients(const NoiseGrid& noise, double beta) {
    SLCoefficients c;
    c.kind = SLCoefficients::Kind::airy;
    c.beta = beta;
    c.grid = noise.t;
    std::size_t n = noise.size();
    c.r.assign(n, 1.0);
    c.p1.assign(n, 1.0);
    c.q0.resize(n);
    c.p0.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        c.q0[i] = noise_amp(beta) * noise.b[i];
        c.p0[i] = noise.t[i];
    }
    return c;
}

SLCoefficients bessel_coefficients(const NoiseGrid& noise_2a, double beta, double a) {
    require(a >= 0.0, ErrorKind::invalid_argument, "a must be non-negative");
    SLCoefficients c;
    c.kind = SLCoefficients::Kind::bessel;
    c.beta = beta;
    c.two_a = 2.0 * a;
    c.grid = noise_2a.t;
    std::size_t n = noise_2a.size();
    c.r.resize(n);
    c.p1.resize(n);
    c.q0.assign(n, 0.0);
    c.p0.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double t = noise_2a.t[i];
        double sb = noise_amp(beta) * noise_2a.b[i];
        c.r[i] = std::exp(-(2.0 * a + 1.0) * t - sb);
        c.p1[i] = std::exp(-2.0 * a * t - sb);
    }
    return c;
}

std::vector<double> right_products(const SolutionPair& u_d, const std::vector<double>& weight, std::size_t i0,
                                   double tail_rate) {
    std::size_t n = u_d.size();
    require(weight.size() >= n, ErrorKind::invalid_argument, "weight shorter than the solution");
    require(i0 < n, ErrorKind::invalid_argument, "start index outside the grid");
    for (std::size_t i = i0; i < n; ++i)
        require(u_d.f_m[i] != 0.0, ErrorKind::invalid_state, "u_d vanishes inside the integration range");
    if (!u_d.crossings.empty())
        require(u_d.crossings.back() <= i0, ErrorKind::invalid_state, "u_d changes sign beyond the start index");
    std::vector<double> J(n, std::numeric_limits<double>::quiet_NaN());
    J[n - 1] = (tail_rate > 0.0 && std::isfinite(tail_rate)) ? weight[n - 1] / tail_rate : 0.0;
    for (std::size_t i = n - 1; i-- > i0;) {
        double h = u_d.grid[i + 1] - u_d.grid[i];
        double rho = ratio(u_d, i, i + 1);
        double r2 = rho * rho;
        J[i] = r2 * J[i + 1] + 0.5 * h * (weight[i] + r2 * weight[i + 1]);
    }
    return J;
}

SolutionPair right_solution(const SolutionPair& u_d, const std::vector<double>& weight, std::size_t i0,
                            double tail_rate) {
    std::vector<double> J = right_products(u_d, weight, i0, tail_rate);
    std::size_t n = u_d.size();
    SolutionPair out;
    out.kind = u_d.kind;
    out.params = u_d.params;
    out.params.c0 = 1.0;
    out.params.c1 = std::numeric_limits<double>::quiet_NaN();
    out.grid = u_d.grid;
    out.f_m.assign(n, 0.0);
    out.fp_m.assign(n, 0.0);
    out.e2.assign(n, 0);
    for (std::size_t i = i0; i < n; ++i) {
        double f = J[i] / u_d.f_m[i];
        double fp = (u_d.deriv_ratio(i) * J[i] - weight[i]) / u_d.f_m[i];
        int e = -u_d.e2[i];
        normalize(f, fp, e);
        out.f_m[i] = f;
        out.fp_m[i] = fp;
        out.e2[i] = e;
    }
    return out;
}

std::vector<double> left_ratios(const SolutionPair& u_d) {
    std::size_t n = u_d.size();
    std::vector<double> G(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        double h = u_d.grid[i + 1] - u_d.grid[i];
        double rho = u_d.f_m[i] == 0.0 ? 0.0 : ratio(u_d, i, i + 1);
        double r2 = rho * rho;
        G[i + 1] = r2 * G[i] + 0.5 * h * (r2 + 1.0);
    }
    return G;
}

SolutionPair airy_dirichlet(const NoiseGrid& noise, double beta, double L_grid) {
    return solve_airy_pair(noise, beta, 0.0, 1.0, L_grid);
}

SolutionPair airy_neumann(const NoiseGrid& noise, double beta, double L_grid) {
    return solve_airy_pair(noise, beta, 1.0, 0.0, L_grid);
}

SolutionPair airy_infty(const SolutionPair& psi_d, const NoiseGrid& noise, double L_grid, const RightOptions& opt) {
    std::size_t n = prefix_count(psi_d, L_grid);
    SolutionPair d = prefix(psi_d, n);
    check_noise(d, noise);
    double x_end = d.grid.back();
    double x0 = d.last_zero() + opt.margin;
    if (x0 > x_end - opt.margin)
        fail(ErrorKind::window_too_short, "last zero of psi_d at " + fmt_num(d.last_zero()) +
                                              " leaves no room before L_grid = " + fmt_num(x_end));
    std::size_t i0 = d.index_of(x0);
    std::vector<double> w(n, 1.0);
    double rate = opt.tail == TailPolicy::asymptotic ? 2.0 * std::sqrt(x_end) : kInf;
    SolutionPair r = right_solution(d, w, i0, rate);
    integrate_backward(r, noise, i0);
    r.params.c1 = r.raw_fp(0);
    return r;
}

SolutionPair airy_truncated(const SolutionPair& psi_d, const SolutionPair& psi_star, double L) {
    return truncate_with(psi_d, psi_star, L);
}

SolutionPair tilde_transform(const SolutionPair& u_hat, const NoiseGrid& noise) {
    check_noise(u_hat, noise);
    double eps = scaled_eps(u_hat);
    if (eps == 0.0) return u_hat;
    double c = eps / std::sqrt(u_hat.params.beta);
    SolutionPair out = u_hat;
    for (std::size_t i = 0; i < out.size(); ++i) {
        double F = std::exp(-0.5 * eps * eps * out.grid[i] - c * noise.b[i]);
        double f = out.f_m[i] * F, fp = out.fp_m[i] * F;
        int e = out.e2[i];
        normalize(f, fp, e);
        out.f_m[i] = f;
        out.fp_m[i] = fp;
        out.e2[i] = e;
    }
    return out;
}

SolutionPair bessel_tilde_dirichlet(const NoiseGrid& noise, double beta, double a, double L_grid) {
    require(a > 0.5, ErrorKind::invalid_argument, "hard-edge parameter needs a > 1/2");
    return tilde_transform(solve_scaled_pair(noise, beta, a, 0.0, 1.0, L_grid), noise);
}

SolutionPair bessel_tilde_neumann(const NoiseGrid& noise, double beta, double a, double L_grid) {
    require(a > 0.5, ErrorKind::invalid_argument, "hard-edge parameter needs a > 1/2");
    return tilde_transform(solve_scaled_pair(noise, beta, a, 1.0, 0.0, L_grid), noise);
}

SolutionPair bessel_tilde_infty(const SolutionPair& u_hat_d, const NoiseGrid& noise, double L,
                                const RightOptions& opt) {
    check_noise(u_hat_d, noise);
    std::size_t n = u_hat_d.size();
    if (!u_hat_d.crossings.empty() && u_hat_d.grid[u_hat_d.crossings.back()] >= L)
        fail(ErrorKind::hard_eigenvalue_collision,
             "phi_d changes sign at x = " + fmt_num(u_hat_d.last_zero()) + " beyond L = " + fmt_num(L));
    double x_end = u_hat_d.grid.back();
    double x0 = u_hat_d.last_zero() + opt.margin;
    if (x0 > x_end - opt.margin)
        fail(ErrorKind::window_too_short, "last zero of phi_d at " + fmt_num(u_hat_d.last_zero()) +
                                              " leaves no room before the window end " + fmt_num(x_end));
    std::size_t i0 = u_hat_d.index_of(x0);
    double eps = scaled_eps(u_hat_d);
    double s = noise_amp(u_hat_d.params.beta) * eps;
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = std::exp(s * noise.b[i]);
    double rate = kInf;
    if (opt.tail == TailPolicy::asymptotic)
        rate = eps == 0.0 ? 2.0 * std::sqrt(x_end) : fitted_rate(u_hat_d, w, i0);
    SolutionPair v = right_solution(u_hat_d, w, i0, rate);
    integrate_backward(v, noise, i0);
    v.params.c1 = v.raw_fp(0);
    return tilde_transform(v, noise);
}

SolutionPair bessel_tilde_truncated(const SolutionPair& phi_tilde_d, const SolutionPair& phi_tilde_star, double L) {
    return truncate_with(phi_tilde_d, phi_tilde_star, L);
}

double TriangularKernel::u_d(std::size_t i) const { return std::ldexp(d_m[i], d_e[i]); }
double TriangularKernel::u_right(std::size_t i) const { return std::ldexp(r_m[i], r_e[i]); }

double TriangularKernel::operator()(std::size_t i, std::size_t j) const {
    if (i < j) std::swap(i, j);
    return std::ldexp(r_m[i] * d_m[j], r_e[i] + d_e[j]) / p1_at_0;
}

std::vector<double> TriangularKernel::weights() const {
    std::size_t n = grid.size();
    std::vector<double> w(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        double h = grid[i + 1] - grid[i];
        w[i] += 0.5 * h;
        w[i + 1] += 0.5 * h;
    }
    return w;
}

TriangularKernel assemble_kernel(const SolutionPair& u_d, const SolutionPair& u_right, double p1_at_0,
                                 std::optional<double> trunc) {
    require(p1_at_0 > 0.0, ErrorKind::invalid_argument, "p1(0) must be positive");
    std::size_t n = 0;
    if (trunc) {
        n = prefix_count(u_d, *trunc);
        require(u_right.size() >= n, ErrorKind::invalid_argument, "right solution does not cover [0, L]");
    } else {
        require(u_d.size() == u_right.size(), ErrorKind::invalid_argument, "grid mismatch between kernel factors");
        n = u_d.size();
    }
    for (std::size_t i = 0; i < n; ++i)
        require(u_d.grid[i] == u_right.grid[i], ErrorKind::invalid_argument, "grid mismatch between kernel factors");
    TriangularKernel K;
    K.grid.assign(u_d.grid.begin(), u_d.grid.begin() + static_cast<std::ptrdiff_t>(n));
    K.d_m.assign(u_d.f_m.begin(), u_d.f_m.begin() + static_cast<std::ptrdiff_t>(n));
    K.d_e.assign(u_d.e2.begin(), u_d.e2.begin() + static_cast<std::ptrdiff_t>(n));
    K.r_m.assign(u_right.f_m.begin(), u_right.f_m.begin() + static_cast<std::ptrdiff_t>(n));
    K.r_e.assign(u_right.e2.begin(), u_right.e2.begin() + static_cast<std::ptrdiff_t>(n));
    K.p1_at_0 = p1_at_0;
    K.trunc = trunc;
    if (u_d.kind == PairKind::scaled && std::isfinite(u_d.params.a)) K.hard_edge_a = u_d.params.a;
    if (trunc) {
        double top = -kInf;
        for (std::size_t i = 0; i < n; ++i)
            if (K.r_m[i] != 0.0) top = std::max(top, std::log(std::fabs(K.r_m[i])) + K.r_e[i] * std::numbers::ln2);
        double end = K.u_right(n - 1);
        require(end == 0.0 || std::log(std::fabs(end)) <= std::log(1e-8) + top, ErrorKind::invalid_argument,
                "truncated right solution does not vanish at L");
    }
    return K;
}

namespace {

struct Factors {
    const std::vector<double>* dm;
    const std::vector<int>* de;
    const std::vector<double>* rm;
    const std::vector<int>* re;
    std::size_t n;
    double get_d(std::size_t i, int& e) const {
        if (i >= n) {
            e = 0;
            return 0.0;
        }
        e = (*de)[i];
        return (*dm)[i];
    }
    double get_r(std::size_t i, int& e) const {
        if (i >= n) {
            e = 0;
            return 0.0;
        }
        e = (*re)[i];
        return (*rm)[i];
    }
};

Factors factors(const TriangularKernel& K) { return Factors{&K.d_m, &K.d_e, &K.r_m, &K.r_e, K.size()}; }

// sum_ij w_i w_j K1_ij K2_ij on the longer grid (K1 = K2 allowed).
double cross_sum(const TriangularKernel& A, const TriangularKernel& B, const std::vector<double>& w) {
    Factors fa = factors(A), fb = factors(B);
    std::size_t n = w.size();
    ScaledSum lower;  // sum_{j<i} w_j dA_j dB_j
    ScaledSum total;
    for (std::size_t i = 0; i < n; ++i) {
        int ea, eb, ra, rb;
        double da = fa.get_d(i, ea), db = fb.get_d(i, eb);
        double xa = fa.get_r(i, ra), xb = fb.get_r(i, rb);
        double rr = w[i] * xa * xb;
        if (rr != 0.0) {
            if (lower.m != 0.0) total.add(2.0 * rr * lower.m, lower.e + ra + rb);
            total.add(rr * w[i] * da * db, static_cast<long>(ra) + rb + ea + eb);
        }
        lower.add(w[i] * da * db, static_cast<long>(ea) + eb);
    }
    return total.value() / (A.p1_at_0 * B.p1_at_0);
}

const TriangularKernel& longer(const TriangularKernel& K1, const TriangularKernel& K2) {
    return K1.size() >= K2.size() ? K1 : K2;
}

void check_prefix(const TriangularKernel& K1, const TriangularKernel& K2) {
    std::size_t m = std::min(K1.size(), K2.size());
    for (std::size_t i = 0; i < m; ++i)
        require(K1.grid[i] == K2.grid[i], ErrorKind::invalid_argument, "kernels live on different grids");
}

double direct(const TriangularKernel& K1, const TriangularKernel* K2, bool parallel) {
    const TriangularKernel& big = K2 ? longer(K1, *K2) : K1;
    std::vector<double> w = big.weights();
    const long long n = static_cast<long long>(big.size());
    auto entry = [&](const TriangularKernel& K, std::size_t i, std::size_t j) {
        return (i < K.size() && j < K.size()) ? K(i, j) : 0.0;
    };
    double S = 0.0;
    auto row = [&](long long ii) {
        std::size_t i = static_cast<std::size_t>(ii);
        double acc = 0.0;
        for (std::size_t j = 0; j <= i; ++j) {
            double k = entry(K1, i, j) - (K2 ? entry(*K2, i, j) : 0.0);
            acc += (j == i ? 1.0 : 2.0) * w[j] * k * k;
        }
        return w[i] * acc;
    };
    if (parallel) {
#pragma omp parallel for reduction(+ : S) schedule(dynamic, 64)
        for (long long i = 0; i < n; ++i) S += row(i);
    } else {
        for (long long i = 0; i < n; ++i) S += row(i);
    }
    return std::sqrt(std::max(S, 0.0));
}

}  // namespace

double hs_norm(const TriangularKernel& K) {
    std::vector<double> w = K.weights();
    return std::sqrt(std::max(cross_sum(K, K, w), 0.0));
}

double hs_distance(const TriangularKernel& K1, const TriangularKernel& K2) {
    check_prefix(K1, K2);
    std::vector<double> w = longer(K1, K2).weights();
    double s = cross_sum(K1, K1, w) + cross_sum(K2, K2, w) - 2.0 * cross_sum(K1, K2, w);
    return std::sqrt(std::max(s, 0.0));
}

double hs_norm_direct(const TriangularKernel& K) { return direct(K, nullptr, false); }
double hs_norm_direct_parallel(const TriangularKernel& K) { return direct(K, nullptr, true); }

double hs_distance_direct(const TriangularKernel& K1, const TriangularKernel& K2) {
    check_prefix(K1, K2);
    return direct(K1, &K2, false);
}

double hs_distance_direct_parallel(const TriangularKernel& K1, const TriangularKernel& K2) {
    check_prefix(K1, K2);
    return direct(K1, &K2, true);
}

std::vector<double> wronskian(const SolutionPair& f1, const SolutionPair& f2, double p1_at_0) {
    require(f1.size() == f2.size(), ErrorKind::invalid_argument, "Wronskian needs a shared grid");
    std::vector<double> W(f1.size());
    for (std::size_t i = 0; i < f1.size(); ++i) {
        require(f1.grid[i] == f2.grid[i], ErrorKind::invalid_argument, "Wronskian needs a shared grid");
        W[i] = p1_at_0 * std::ldexp(f1.f_m[i] * f2.fp_m[i] - f1.fp_m[i] * f2.f_m[i], f1.e2[i] + f2.e2[i]);
    }
    return W;
}

void write_kernel_csv(const TriangularKernel& K, std::ostream& out, std::size_t stride) {
    stride = std::max<std::size_t>(stride, 1);
    out << "x,y,K\n";
    for (std::size_t i = 0; i < K.size(); i += stride)
        for (std::size_t j = 0; j < K.size(); j += stride)
            out << fmt_num(K.grid[i]) << ',' << fmt_num(K.grid[j]) << ',' << fmt_num(K(i, j)) << '\n';
}

std::string kernel_summary_json(const TriangularKernel& K, double beta, double h) {
    nlohmann::ordered_json j;
    j["hs_norm"] = hs_norm(K);
    if (K.trunc)
        j["trunc"] = *K.trunc;
    else
        j["trunc"] = nullptr;
    nlohmann::ordered_json p;
    p["beta"] = std::isinf(beta) ? nlohmann::ordered_json("inf") : nlohmann::ordered_json(beta);
    p["h"] = h;
    p["n"] = K.size();
    p["p1_at_0"] = K.p1_at_0;
    if (K.hard_edge_a > 0.0) p["a"] = K.hard_edge_a;
    j["params"] = p;
    return j.dump(2);
}

}  // namespace edge
