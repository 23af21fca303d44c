#include "edge_ops/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <json.hpp>

#include "edge_ops/errors.hpp"
#include "edge_ops/format.hpp"
#include "edge_ops/rng.hpp"

namespace edge {

namespace {

double chi(std::mt19937_64& gen, double k) {
    if (k <= 0.0) return 0.0;
    std::gamma_distribution<double> g(0.5 * k, 1.0);
    return std::sqrt(2.0 * g(gen));
}

double quantile(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
    double pos = q * static_cast<double>(sorted.size() - 1);
    std::size_t i = static_cast<std::size_t>(std::floor(pos));
    if (i + 1 >= sorted.size()) return sorted.back();
    double f = pos - static_cast<double>(i);
    return sorted[i] + f * (sorted[i + 1] - sorted[i]);
}

nlohmann::ordered_json summary(std::vector<double> x) {
    std::sort(x.begin(), x.end());
    nlohmann::ordered_json j;
    j["n"] = x.size();
    nlohmann::ordered_json q;
    for (auto [name, p] : {std::pair{"q05", 0.05}, {"q25", 0.25}, {"q50", 0.5}, {"q75", 0.75}, {"q95", 0.95}})
        q[name] = quantile(x, p);
    j["quantiles"] = q;
    double m = 0.0;
    for (double v : x) m += v;
    j["mean"] = x.empty() ? 0.0 : m / static_cast<double>(x.size());
    return j;
}

}  // namespace

void laguerre_tridiagonal(const TridiagonalModel& model, std::vector<double>& diag, std::vector<double>& off) {
    require(model.n >= 1, ErrorKind::invalid_argument, "n must be at least 1");
    require(model.beta > 0.0, ErrorKind::invalid_argument, "beta must be positive");
    require(model.a > -1.0, ErrorKind::invalid_argument, "Laguerre parameter a must exceed -1 (got " +
                                                             fmt_num(model.a) + ")");
    const int n = model.n;
    std::mt19937_64 gen(stream_key(model.seed, streams::laguerre));
    std::vector<double> d(static_cast<std::size_t>(n)), s(static_cast<std::size_t>(n), 0.0);
    for (int i = 1; i <= n; ++i) {
        d[static_cast<std::size_t>(i - 1)] = chi(gen, model.beta * (model.a + n - i + 1));
        if (i < n) s[static_cast<std::size_t>(i - 1)] = chi(gen, model.beta * (n - i));
    }
    diag.assign(static_cast<std::size_t>(n), 0.0);
    off.assign(static_cast<std::size_t>(n > 1 ? n - 1 : 0), 0.0);
    for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
        double below = i > 0 ? s[i - 1] : 0.0;
        diag[i] = (d[i] * d[i] + below * below) / model.beta;
        if (i + 1 < static_cast<std::size_t>(n)) off[i] = d[i] * s[i] / model.beta;
    }
}

std::vector<double> sample_laguerre(const TridiagonalModel& model) {
    std::vector<double> diag, off;
    laguerre_tridiagonal(model, diag, off);
    if (model.n == 1) return {diag[0]};
    Eigen::Map<const Eigen::VectorXd> D(diag.data(), static_cast<Eigen::Index>(diag.size()));
    Eigen::Map<const Eigen::VectorXd> E(off.data(), static_cast<Eigen::Index>(off.size()));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(D, E, Eigen::EigenvaluesOnly);
    require(es.info() == Eigen::Success, ErrorKind::invalid_state, "tridiagonal eigensolver failed");
    std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    for (double& v : ev) v = std::max(v, 0.0);
    std::sort(ev.begin(), ev.end());
    return ev;
}

std::vector<double> hard_edge_scale(const std::vector<double>& evals, int n) {
    require(n >= 1, ErrorKind::invalid_argument, "n must be at least 1");
    std::vector<double> out(evals);
    for (double& v : out) v *= n;
    return out;
}

double soft_edge_center(int n, double a_n) {
    double g = std::sqrt(n + a_n) - std::sqrt(static_cast<double>(n));
    return g * g;
}

double soft_edge_factor(int n, double a_n) {
    double g = std::sqrt(n + a_n) - std::sqrt(static_cast<double>(n));
    return std::pow((n + a_n) * n, 1.0 / 6.0) / std::pow(g, 4.0 / 3.0);
}

SoftScaled soft_edge_scale(const std::vector<double>& evals, int n, double a_n) {
    require(n >= 1, ErrorKind::invalid_argument, "n must be at least 1");
    require(a_n > -1.0, ErrorKind::invalid_argument, "a_n must exceed -1");
    SoftScaled out;
    out.advisory = !(a_n >= 0.01 * n);
    double c = soft_edge_factor(n, a_n), d = soft_edge_center(n, a_n);
    out.values.reserve(evals.size());
    for (double v : evals) out.values.push_back(c * (v - d));
    return out;
}

double mp_density(double x, double gamma) {
    require(gamma >= 1.0, ErrorKind::invalid_argument, "gamma must be at least 1");
    double sg = std::sqrt(gamma);
    double lo = (sg - 1.0) * (sg - 1.0), hi = (sg + 1.0) * (sg + 1.0);
    if (x <= lo || x >= hi) return 0.0;
    return std::sqrt((x - lo) * (hi - x)) / (2.0 * std::numbers::pi * x);
}

double mp_cdf(double x, double gamma) {
    require(gamma >= 1.0, ErrorKind::invalid_argument, "gamma must be at least 1");
    double sg = std::sqrt(gamma);
    double lo = (sg - 1.0) * (sg - 1.0), hi = (sg + 1.0) * (sg + 1.0);
    if (x <= lo) return 0.0;
    if (x >= hi) return 1.0;
    // x = m + r cos(phi): the square root becomes r sin(phi) and the integrand is smooth.
    // Half angles keep x = lo + 2 r cos^2(phi/2) free of cancellation near phi = pi.
    double m = gamma + 1.0, r = 2.0 * sg;
    double phi_x = std::acos(std::clamp((x - m) / r, -1.0, 1.0));
    auto f = [&](double phi) {
        double s = std::sin(0.5 * phi), c = std::cos(0.5 * phi);
        return 4.0 * r * r * s * s * c * c / (2.0 * std::numbers::pi * (lo + 2.0 * r * c * c));
    };
    double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, phi_x, std::numbers::pi, 15, 1e-13);
    return std::clamp(v, 0.0, 1.0);
}

double mp_cdf_distance(const std::vector<double>& evals, int n, double gamma) {
    std::vector<double> x(evals);
    for (double& v : x) v /= n;
    return ks_one_sample(std::move(x), [gamma](double t) { return mp_cdf(t, gamma); });
}

double ks_two_sample(std::vector<double> x, std::vector<double> y) {
    require(!x.empty() && !y.empty(), ErrorKind::invalid_argument, "KS needs two non-empty samples");
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double nx = static_cast<double>(x.size()), ny = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] == v) ++i;
        while (j < y.size() && y[j] == v) ++j;
        d = std::max(d, std::fabs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
    }
    return d;
}

double ks_one_sample(std::vector<double> x, const std::function<double(double)>& cdf) {
    require(!x.empty(), ErrorKind::invalid_argument, "KS needs a non-empty sample");
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double F = cdf(x[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n});
    }
    return d;
}

std::string distribution_summary_json(const std::vector<double>& operator_side, const std::vector<double>& matrix_side,
                                      double ks) {
    nlohmann::ordered_json j;
    j["operator"] = summary(operator_side);
    j["matrix"] = summary(matrix_side);
    j["ks"] = ks;
    return j.dump(2);
}

void write_eigenvalues_csv(const std::vector<std::vector<double>>& draws, std::ostream& out) {
    out << "draw,index,lambda\n";
    for (std::size_t d = 0; d < draws.size(); ++d)
        for (std::size_t k = 0; k < draws[d].size(); ++k) out << d << ',' << k << ',' << fmt_num(draws[d][k]) << '\n';
}

}  // namespace edge
