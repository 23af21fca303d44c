#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

#include "edge_ops/errors.hpp"
#include "edge_ops/oracle.hpp"
#include "oracles.hpp"

using namespace edge;

namespace {

// Independent sampler for n = 2: product density lambda^{beta(a+1)/2-1} e^{-beta lambda/2} |l1 - l2|^beta.
std::vector<std::vector<double>> rejection_pairs(double beta, double a, int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::gamma_distribution<double> g(beta * (a + 1.0) / 2.0, 2.0 / beta);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double R = 40.0;
    std::vector<std::vector<double>> out;
    while (static_cast<int>(out.size()) < count) {
        double x = g(rng), y = g(rng);
        double d = std::fabs(x - y);
        if (d > R) continue;
        if (u(rng) < std::pow(d / R, beta)) out.push_back({std::min(x, y), std::max(x, y)});
    }
    return out;
}

}  // namespace

TEST_SUITE("oracle") {

TEST_CASE("n = 1 with beta = 2, a = 0 is Exp(1)") {
    std::vector<double> v;
    for (std::uint64_t s = 1; s <= 10000; ++s) v.push_back(sample_laguerre({1, 2.0, 0.0, s})[0]);
    CHECK(std::fabs(oracle::mean(v) - 1.0) < 0.05);
    CHECK(std::fabs(oracle::variance(v) - 1.0) < 0.1);
    CHECK(ks_one_sample(v, [](double x) { return 1.0 - std::exp(-x); }) < 0.02);
}

TEST_CASE("eigenvalues are nonnegative, ascending and match the tridiagonal trace") {
    for (double beta : {1.0, 2.0, 4.0, 0.7}) {
        TridiagonalModel m{30, beta, 0.5, 9};
        std::vector<double> e = sample_laguerre(m);
        REQUIRE(e.size() == 30);
        CHECK(e.front() >= 0.0);
        CHECK(std::is_sorted(e.begin(), e.end()));
        std::vector<double> d, o;
        laguerre_tridiagonal(m, d, o);
        double tr = 0, sum = 0;
        for (double x : d) tr += x;
        for (double x : e) sum += x;
        CHECK(sum == doctest::Approx(tr).epsilon(1e-10));
    }
}

TEST_CASE("n = 2 matches the joint density by rejection sampling") {
    for (double beta : {1.0, 2.0}) {
        const double a = 0.5;
        const int N = 20000;
        std::vector<double> mn, mx, rmn, rmx;
        for (int i = 0; i < N; ++i) {
            std::vector<double> e = sample_laguerre({2, beta, a, static_cast<std::uint64_t>(100 + i)});
            mn.push_back(e[0]);
            mx.push_back(e[1]);
        }
        for (const auto& p : rejection_pairs(beta, a, N, 77)) {
            rmn.push_back(p[0]);
            rmx.push_back(p[1]);
        }
        CHECK(ks_two_sample(mn, rmn) < 0.02);
        CHECK(ks_two_sample(mx, rmx) < 0.02);
    }
}

TEST_CASE("bulk follows Marchenko-Pastur") {
    const int n = 500;
    double mean_trace = 0.0;
    for (std::uint64_t s = 1; s <= 100; ++s) {
        std::vector<double> e = sample_laguerre({n, 2.0, 0.0, s});
        if (s == 1) CHECK(mp_cdf_distance(e, n, 1.0) < 0.05);
        double t = 0;
        for (double x : e) t += x;
        mean_trace += t / (static_cast<double>(n) * n) / 100.0;
    }
    CHECK(std::fabs(mean_trace - 1.0) < 0.03);
}

TEST_CASE("edge scalings") {
    CHECK(hard_edge_scale({0.5, 1.0}, 20) == std::vector<double>{10.0, 20.0});
    CHECK(soft_edge_center(100, 100) == doctest::Approx(std::pow(std::sqrt(200.0) - 10.0, 2)).epsilon(1e-14));
    CHECK(soft_edge_center(100, 100) == doctest::Approx(17.157).epsilon(1e-4));
    double f = std::pow(200.0 * 100.0, 1.0 / 6.0) / std::pow(std::sqrt(200.0) - 10.0, 4.0 / 3.0);
    CHECK(soft_edge_factor(100, 100) == doctest::Approx(f).epsilon(1e-14));
    SoftScaled s = soft_edge_scale({17.157}, 100, 100);
    CHECK_FALSE(s.advisory);
    CHECK(std::fabs(s.values[0]) < 1e-2);
    CHECK(soft_edge_scale({1.0}, 100, 0.0).advisory);
}

TEST_CASE("Marchenko-Pastur density and distribution") {
    CHECK(mp_density(2.0, 1.0) == doctest::Approx(1.0 / (2.0 * std::numbers::pi)).epsilon(1e-14));
    CHECK(mp_density(0.0, 1.0) == 0.0);
    CHECK(mp_density(4.0, 1.0) == 0.0);
    for (double gamma : {1.0, 2.0, 5.0}) {
        double lo = std::pow(std::sqrt(gamma) - 1.0, 2), hi = std::pow(std::sqrt(gamma) + 1.0, 2);
        double m = 0.5 * (lo + hi), r = 0.5 * (hi - lo);
        double total = oracle::midpoint(
            [&](double phi) {
                double x = m - r * std::cos(phi);
                return mp_density(x, gamma) * r * std::sin(phi);
            },
            0.0, std::numbers::pi, 200000);
        CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
        double mid = oracle::midpoint(
            [&](double phi) {
                double x = m - r * std::cos(phi);
                return mp_density(x, gamma) * r * std::sin(phi);
            },
            0.0, std::numbers::pi / 2.0, 200000);
        CHECK(mp_cdf(m, gamma) == doctest::Approx(mid).epsilon(1e-6));
    }
    CHECK(mp_cdf(-1.0, 2.0) == 0.0);
    CHECK(mp_cdf(100.0, 2.0) == 1.0);
}

TEST_CASE("draws are reproducible") {
    TridiagonalModel m{40, 2.0, 1.0, 123};
    CHECK(sample_laguerre(m) == sample_laguerre(m));
    m.seed = 124;
    CHECK(sample_laguerre(m) != sample_laguerre({40, 2.0, 1.0, 123}));
}

TEST_CASE("Kolmogorov-Smirnov statistics") {
    CHECK(ks_two_sample({1, 2, 3}, {1, 2, 3}) == 0.0);
    CHECK(ks_two_sample({1, 2}, {3, 4}) == 1.0);
    CHECK(ks_two_sample({1, 2, 3, 4}, {3, 4, 5, 6}) == doctest::Approx(0.5));
    CHECK(ks_one_sample({0.5}, [](double x) { return x; }) == doctest::Approx(0.5));
    CHECK_THROWS_AS(ks_two_sample({}, {1.0}), Error);
}

TEST_CASE("summary JSON and eigenvalue CSV") {
    auto j = nlohmann::json::parse(distribution_summary_json({1, 2, 3, 4, 5}, {2, 3, 4}, 0.2));
    CHECK(j["ks"].get<double>() == 0.2);
    for (const char* side : {"operator", "matrix"}) {
        REQUIRE(j.contains(side));
        CHECK(j[side].contains("n"));
        CHECK(j[side].contains("mean"));
        for (const char* q : {"q05", "q25", "q50", "q75", "q95"}) CHECK(j[side]["quantiles"].contains(q));
    }
    CHECK(j["operator"]["n"] == 5);
    CHECK(j["operator"]["mean"].get<double>() == doctest::Approx(3.0));
    std::ostringstream o;
    write_eigenvalues_csv({{1.0, 2.0}, {3.0}}, o);
    std::string s = o.str();
    CHECK(s.substr(0, s.find('\n')) == "draw,index,lambda");
    CHECK(std::count(s.begin(), s.end(), '\n') == 4);
}

}
