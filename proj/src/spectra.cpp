#include "edge_ops/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <json.hpp>

#include "edge_ops/errors.hpp"
#include "edge_ops/format.hpp"
#include "edge_ops/rng.hpp"

namespace edge {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Relative distance from the unstable branch below which the end state is not classified.
constexpr double kBranchGap = 0.1;

int close_count(CountResult c, double root, const char* what) {
    require(std::isfinite(root) && root >= 1.0, ErrorKind::indeterminate_count,
            std::string(what) + " window ends before the turning point (partial count " +
                std::to_string(c.explosions) + ")");
    double x = c.final_value;
    if (std::isinf(x)) return c.explosions;
    require(std::fabs(x + root) > kBranchGap * root, ErrorKind::indeterminate_count,
            std::string(what) + " flow ends on the unstable branch (partial count " + std::to_string(c.explosions) +
                ")");
    return c.explosions + (x < -root ? 1 : 0);
}

int count_once(const OperatorDescriptor& op, double lambda, double T, const RiccatiOptions& opt) {
    const NoiseGrid& g = *op.noise;
    switch (op.kind) {
        case OperatorKind::airy: {
            CountResult c = count_airy_explosions(g, op.beta, lambda, T, opt);
            return close_count(c, std::sqrt(std::max(T - lambda, 0.0)), "Airy");
        }
        case OperatorKind::scaled: {
            CountResult c = count_scaled_explosions(g, op.beta, op.a, lambda, T, opt);
            double e2 = std::pow(op.a, -2.0 / 3.0);
            double v = -std::expm1(-e2 * T) / e2 - lambda * std::exp(-e2 * T) + (2.0 / op.beta) * std::sqrt(e2);
            return close_count(c, std::sqrt(std::max(v, 0.0)), "scaled");
        }
        case OperatorKind::bessel: {
            CountResult c = count_bessel_explosions(g, op.beta, op.a, lambda, T, opt);
            require(!std::isnan(c.final_value), ErrorKind::indeterminate_count,
                    "Bessel flow ends undefined (partial count " + std::to_string(c.explosions) + ")");
            return c.explosions + (c.final_value < 0.0 ? 1 : 0);
        }
    }
    fail(ErrorKind::invalid_argument, "unknown operator kind");
}

double window_h(const NoiseGrid& g) { return g.size() >= 2 ? g.t[1] - g.t[0] : kNaN; }

struct Bisector {
    const OperatorDescriptor& op;
    double T;
    const RiccatiOptions& opt;

    int count(double lambda) const { return count_once(op, lambda, T, opt); }

    double locate(std::size_t j, double tol, double lo_hint) const {
        double width = 1.0;
        double lo = lo_hint;
        while (count(lo) > static_cast<int>(j)) {
            lo -= width;
            width *= 2.0;
            require(width < 1e8, ErrorKind::invalid_state, "no lower bracket for eigenvalue " + std::to_string(j));
        }
        width = 1.0;
        double hi = lo + width;
        while (count(hi) <= static_cast<int>(j)) {
            lo = hi;
            width *= 2.0;
            hi = lo + width;
            require(width < 1e8, ErrorKind::invalid_state, "no upper bracket for eigenvalue " + std::to_string(j));
        }
        while (hi - lo > tol) {
            double mid = 0.5 * (lo + hi);
            if (count(mid) <= static_cast<int>(j))
                lo = mid;
            else
                hi = mid;
        }
        return 0.5 * (lo + hi);
    }
};

SpectrumEstimate bisect_all(const OperatorDescriptor& op, std::size_t k, double tol, double T,
                            const RiccatiOptions& opt) {
    SpectrumEstimate s;
    s.method = SpectrumMethod::oscillation_bisection;
    s.beta = op.beta;
    s.a = op.kind == OperatorKind::airy ? kNaN : op.a;
    s.L = T;
    s.h = window_h(*op.noise);
    s.count_requested = k;
    Bisector b{op, T, opt};
    double start = op.kind == OperatorKind::bessel ? 0.0 : -1.0;
    for (std::size_t j = 0; j < k; ++j) {
        double hint = s.eigenvalues.empty() ? start : s.eigenvalues.back();
        double lam = b.locate(j, tol, hint);
        if (!s.eigenvalues.empty() && lam - s.eigenvalues.back() <= 2.0 * tol) s.ties = true;
        s.eigenvalues.push_back(lam);
    }
    return s;
}

SpectrumEstimate from_mu(const TriangularKernel& K, std::vector<double> mu, std::size_t k) {
    SpectrumEstimate s;
    s.method = SpectrumMethod::kernel_eig;
    s.beta = kNaN;
    s.a = K.hard_edge_a > 0.0 ? K.hard_edge_a : kNaN;
    s.L = K.grid.back();
    s.h = K.grid.size() >= 2 ? K.grid[1] - K.grid[0] : kNaN;
    s.count_requested = k;
    for (double m : mu) {
        require(m != 0.0, ErrorKind::undefined_inverse, "kernel eigenvalue is zero");
        double lam = 1.0 / m;
        if (K.hard_edge_a > 0.0) lam = K.hard_edge_a * K.hard_edge_a + std::pow(K.hard_edge_a, 4.0 / 3.0) * lam;
        s.eigenvalues.push_back(lam);
    }
    std::sort(s.eigenvalues.begin(), s.eigenvalues.end());
    for (std::size_t i = 1; i < s.eigenvalues.size(); ++i)
        if (s.eigenvalues[i] - s.eigenvalues[i - 1] <= 1e-10 * std::fabs(s.eigenvalues[i])) s.ties = true;
    return s;
}

std::vector<double> top_abs(std::vector<double> ev, std::size_t k) {
    std::sort(ev.begin(), ev.end(), [](double x, double y) { return std::fabs(x) > std::fabs(y); });
    ev.resize(std::min(k, ev.size()));
    return ev;
}

// y = W^{1/2} K W^{1/2} x with K(i, j) = r(max) d(min) / p1, in O(n).
struct KernelOperator {
    std::vector<double> sw, d, r;
    double inv_p1;

    explicit KernelOperator(const TriangularKernel& K) {
        std::size_t n = K.size();
        std::vector<double> w = K.weights();
        sw.resize(n);
        d.resize(n);
        r.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            sw[i] = std::sqrt(w[i]);
            d[i] = K.u_d(i);
            r[i] = K.u_right(i);
            require(std::isfinite(d[i]) && std::isfinite(r[i]), ErrorKind::invalid_state,
                    "kernel factors overflow double range");
        }
        inv_p1 = 1.0 / K.p1_at_0;
    }

    void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
        std::size_t n = sw.size();
        y.resize(static_cast<Eigen::Index>(n));
        double left = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            left += d[i] * sw[i] * x[static_cast<Eigen::Index>(i)];
            y[static_cast<Eigen::Index>(i)] = r[i] * left;
        }
        double right = 0.0;
        for (std::size_t i = n; i-- > 0;) {
            y[static_cast<Eigen::Index>(i)] += d[i] * right;
            right += r[i] * sw[i] * x[static_cast<Eigen::Index>(i)];
        }
        for (std::size_t i = 0; i < n; ++i) y[static_cast<Eigen::Index>(i)] *= sw[i] * inv_p1;
    }
};

}  // namespace

OperatorDescriptor airy_operator(NoiseGrid noise, double beta) {
    require(beta > 0.0, ErrorKind::invalid_argument, "beta must be positive");
    return {OperatorKind::airy, beta, 0.0, std::make_shared<const NoiseGrid>(std::move(noise))};
}

OperatorDescriptor bessel_operator(NoiseGrid noise_2a, double beta, double a) {
    require(beta > 0.0, ErrorKind::invalid_argument, "beta must be positive");
    require(a >= 0.0, ErrorKind::invalid_argument, "a must be non-negative");
    return {OperatorKind::bessel, beta, a, std::make_shared<const NoiseGrid>(std::move(noise_2a))};
}

OperatorDescriptor scaled_operator(NoiseGrid noise, double beta, double a) {
    require(beta > 0.0, ErrorKind::invalid_argument, "beta must be positive");
    require(a > 0.0, ErrorKind::invalid_argument, "a must be positive");
    return {OperatorKind::scaled, beta, a, std::make_shared<const NoiseGrid>(std::move(noise))};
}

int counting_function(const OperatorDescriptor& op, double lambda, double T, const RiccatiOptions& opt) {
    require(op.noise != nullptr, ErrorKind::invalid_argument, "operator has no noise grid");
    return count_once(op, lambda, T, opt);
}

SpectrumEstimate eigs_by_bisection(const OperatorDescriptor& op, std::size_t k, double tol, double T,
                                   const RiccatiOptions& opt) {
    require(k >= 1, ErrorKind::invalid_argument, "k must be at least 1");
    require(tol > 0.0, ErrorKind::invalid_argument, "tol must be positive");
    require(op.noise != nullptr, ErrorKind::invalid_argument, "operator has no noise grid");
    try {
        return bisect_all(op, k, tol, T, opt);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::indeterminate_count) throw;
        double wider = std::min(2.0 * T, op.noise->horizon());
        if (!(wider > T)) throw;
        return bisect_all(op, k, tol, wider, opt);
    }
}

std::vector<double> kernel_top_eigs_dense(const TriangularKernel& K, std::size_t k) {
    std::size_t n = K.size();
    require(k >= 1 && k <= n, ErrorKind::invalid_argument, "k must lie in [1, n]");
    std::vector<double> w = K.weights();
    Eigen::MatrixXd M(n, n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = j; i < n; ++i) {
            double v = std::sqrt(w[i] * w[j]) * K(i, j);
            M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
            M(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
        }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
    require(es.info() == Eigen::Success, ErrorKind::invalid_state, "dense eigensolver failed");
    const Eigen::VectorXd& ev = es.eigenvalues();
    return top_abs(std::vector<double>(ev.data(), ev.data() + ev.size()), k);
}

std::vector<double> kernel_top_eigs_lanczos(const TriangularKernel& K, std::size_t k) {
    const std::size_t n = K.size();
    require(k >= 1 && k <= n, ErrorKind::invalid_argument, "k must lie in [1, n]");
    KernelOperator A(K);
    const auto N = static_cast<Eigen::Index>(n);
    std::size_t m = std::min(n, std::max<std::size_t>(2 * k + 40, 80));
    const std::uint64_t key = stream_key(0, 0x1a2c305ULL);
    for (;;) {
        Eigen::MatrixXd V(N, static_cast<Eigen::Index>(m) + 1);
        Eigen::VectorXd alpha(static_cast<Eigen::Index>(m)), beta(static_cast<Eigen::Index>(m));
        Eigen::VectorXd q(N), z(N);
        for (Eigen::Index i = 0; i < N; ++i) q[i] = 1.0 + 0.1 * counter_normal(key, static_cast<std::uint64_t>(i));
        q.normalize();
        V.col(0) = q;
        std::size_t steps = m;
        for (std::size_t j = 0; j < m; ++j) {
            const auto J = static_cast<Eigen::Index>(j);
            A.apply(V.col(J), z);
            alpha[J] = V.col(J).dot(z);
            for (int pass = 0; pass < 2; ++pass) z -= V.leftCols(J + 1) * (V.leftCols(J + 1).transpose() * z);
            beta[J] = z.norm();
            if (beta[J] <= 1e-14 * std::fabs(alpha[J]) || beta[J] == 0.0) {
                steps = j + 1;
                break;
            }
            V.col(J + 1) = z / beta[J];
        }
        const auto S = static_cast<Eigen::Index>(steps);
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(S, S);
        for (Eigen::Index j = 0; j < S; ++j) {
            T(j, j) = alpha[j];
            if (j + 1 < S) T(j, j + 1) = T(j + 1, j) = beta[j];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        require(es.info() == Eigen::Success, ErrorKind::invalid_state, "Lanczos tridiagonal solver failed");
        std::vector<Eigen::Index> order(static_cast<std::size_t>(S));
        for (Eigen::Index j = 0; j < S; ++j) order[static_cast<std::size_t>(j)] = j;
        std::sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
            return std::fabs(es.eigenvalues()[x]) > std::fabs(es.eigenvalues()[y]);
        });
        std::size_t take = std::min(k, order.size());
        bool converged = true;
        double last_beta = steps < m || steps == n ? 0.0 : beta[S - 1];
        std::vector<double> out;
        for (std::size_t j = 0; j < take; ++j) {
            Eigen::Index c = order[j];
            double theta = es.eigenvalues()[c];
            double resid = std::fabs(last_beta * es.eigenvectors()(S - 1, c));
            if (resid > 1e-10 * std::fabs(theta)) converged = false;
            out.push_back(theta);
        }
        if (converged || m >= n) return out;
        m = std::min(n, 2 * m);
    }
}

SpectrumEstimate eigs_from_kernel(const TriangularKernel& K, std::size_t k) {
    require(k >= 1 && k <= K.size(), ErrorKind::invalid_argument,
            "k = " + std::to_string(k) + " outside [1, " + std::to_string(K.size()) + "]");
    std::vector<double> mu = K.size() < 2000 ? kernel_top_eigs_dense(K, k) : kernel_top_eigs_lanczos(K, k);
    return from_mu(K, std::move(mu), k);
}

SpectrumEstimate hard_to_soft(const SpectrumEstimate& s, double a) {
    require(a > 0.0, ErrorKind::invalid_argument, "a must be positive");
    SpectrumEstimate out = s;
    double c = std::pow(a, -4.0 / 3.0);
    for (double& x : out.eigenvalues) x = c * (x - a * a);
    return out;
}

double hw_distance(const SpectrumEstimate& s1, const SpectrumEstimate& s2) {
    std::vector<double> x = s1.eigenvalues, y = s2.eigenvalues;
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    std::size_t n = std::min(x.size(), y.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        require(std::fabs(x[i]) > 1e-12 && std::fabs(y[i]) > 1e-12, ErrorKind::undefined_inverse,
                "eigenvalue " + std::to_string(i) + " within 1e-12 of zero");
        double d = 1.0 / x[i] - 1.0 / y[i];
        sum += d * d;
    }
    return sum;
}

const char* to_string(SpectrumMethod m) {
    return m == SpectrumMethod::kernel_eig ? "kernel-eig" : "oscillation-bisection";
}

std::string spectrum_json(const SpectrumEstimate& s) {
    auto num = [](double x) -> nlohmann::ordered_json {
        if (std::isfinite(x)) return x;
        if (std::isnan(x)) return nullptr;
        return fmt_num(x);
    };
    nlohmann::ordered_json j;
    j["method"] = to_string(s.method);
    nlohmann::ordered_json p;
    p["beta"] = num(s.beta);
    p["a"] = num(s.a);
    p["L"] = num(s.L);
    p["h"] = num(s.h);
    p["count_requested"] = s.count_requested;
    p["ties"] = s.ties;
    j["params"] = p;
    j["eigenvalues"] = s.eigenvalues;
    return j.dump(2);
}

}  // namespace edge
