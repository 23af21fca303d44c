#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "edge_ops/errors.hpp"
#include "edge_ops/transition.hpp"

using namespace edge;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string error_text(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

std::string csv_of(const std::vector<RunRecord>& r) {
    std::ostringstream o;
    write_records_csv(r, o);
    return o.str();
}

SolutionPair exponential_pair(double T, double h) {
    std::vector<double> x, f;
    for (std::size_t i = 0; i <= static_cast<std::size_t>(std::llround(T / h)); ++i) {
        x.push_back(h * static_cast<double>(i));
        f.push_back(std::exp(x.back()));
    }
    return pair_from_values(PairKind::airy, x, f, f);
}

RiccatiPath riccati_from(const std::vector<double>& t, const std::function<double(double)>& f) {
    RiccatiPath r;
    r.grid = t;
    for (double s : t) r.values.push_back(f(s));
    return r;
}

SolutionPair scaled_copy(SolutionPair s, double factor) {
    for (std::size_t i = 0; i < s.size(); ++i) {
        s.f_m[i] *= factor;
        s.fp_m[i] *= factor;
    }
    return s;
}

SolutionPair prefix_pair(SolutionPair s, double T) {
    std::size_t n = 0;
    while (n < s.size() && s.grid[n] <= T + 1e-9) ++n;
    s.grid.resize(n);
    s.f_m.resize(n);
    s.fp_m.resize(n);
    s.e2.resize(n);
    std::erase_if(s.crossings, [n](std::size_t i) { return i >= n; });
    return s;
}

NoiseGrid prefix(const NoiseGrid& g, double T) {
    NoiseGrid out;
    for (std::size_t i = 0; i < g.size() && g.t[i] <= T + 1e-9; ++i) {
        out.t.push_back(g.t[i]);
        out.b.push_back(g.b[i]);
    }
    return out;
}

}  // namespace

TEST_SUITE("transition") {

TEST_CASE("config validation names the violated constraint") {
    ExperimentConfig c;
    CHECK_NOTHROW(validate(c));
    c.h = 0.0;
    CHECK(error_text([&] { validate(c); }).find("h must be positive") != std::string::npos);
    c = ExperimentConfig{};
    c.h = 0.1;
    std::string msg = error_text([&] { validate(c); });
    CHECK(msg.find("h must be below L/100") != std::string::npos);
    CHECK(msg.find("h = 0.1") != std::string::npos);
    CHECK(msg.find("L = 6") != std::string::npos);
    c = ExperimentConfig{};
    c.a_sweep = {1000.0, 100.0};
    CHECK(error_text([&] { validate(c); }).find("strictly ascending") != std::string::npos);
    c = ExperimentConfig{};
    c.L_grid = 5.0;
    CHECK(error_text([&] { validate(c); }).find("L must be below L_grid") != std::string::npos);
}

TEST_CASE("replica seeds and the empty sweep") {
    ExperimentConfig c;
    c.seed = 40;
    c.replicas = 3;
    CHECK(replica_seeds(c) == std::vector<std::uint64_t>{40, 41, 42});
    c.a_sweep.clear();
    CHECK(run_coupled_sweep(c).empty());
}

TEST_CASE("noiseless sweep: truncated distance decreases tenfold") {
    ExperimentConfig c;
    c.beta = kInf;
    c.a_sweep = {1e2, 1e3, 1e4};
    c.replicas = 1;
    std::vector<RunRecord> r = run_coupled_sweep(c);
    REQUIRE(r.size() == 3);
    CHECK(r[1].hs_dist_truncated < r[0].hs_dist_truncated);
    CHECK(r[2].hs_dist_truncated < r[1].hs_dist_truncated);
    CHECK(r[2].hs_dist_truncated < 0.1 * r[0].hs_dist_truncated);
    CHECK(r[2].hw_dist < r[0].hw_dist);
    for (const RunRecord& x : r) {
        CHECK_FALSE(x.flag_collision);
        CHECK(x.hs_dist_truncated >= 0.0);
        CHECK(x.airy_trunc_err >= 0.0);
        CHECK(x.bessel_trunc_err >= 0.0);
    }
}

TEST_CASE("sweeps are reproducible and independent of threading") {
    ExperimentConfig c;
    c.replicas = 3;
    c.hw_k = 2;
    std::string a = csv_of(run_coupled_sweep(c));
    CHECK(a == csv_of(run_coupled_sweep(c)));
    CHECK(a == csv_of(run_coupled_sweep_serial(c)));
    CHECK(a.substr(0, a.find('\n')) == "seed,a,hs_dist_truncated,airy_trunc_err,bessel_trunc_err,hw_dist,flag_collision,flag_band");
}

TEST_CASE("closed form of the on-window defect for exponentials") {
    SolutionPair e = exponential_pair(30.0, 1e-3);
    CHECK(khs_closed_form(e, 20.0, 2.0) == doctest::Approx(1.0 / 32.0).epsilon(1e-5));
}

TEST_CASE("on-window defect of the truncated Airy kernel is twice the half-square closed form") {
    for (double beta : {kInf, 2.0}) {
        const double Lg = 16.0, L = 6.0;
        NoiseGrid g = beta == kInf ? zero_grid(Lg, 1e-3) : sample_grid(sample_path(2, Lg, 1e-3), Lg, 1e-3);
        SolutionPair d = airy_dirichlet(g, beta, Lg);
        REQUIRE(d.last_zero() < L);
        SolutionPair r = airy_infty(d, g, Lg);
        SolutionPair s = airy_neumann(g, beta, Lg);
        SolutionPair dL = prefix_pair(d, L);
        double dist = hs_distance(assemble_kernel(dL, prefix_pair(r, L), 1.0),
                                  assemble_kernel(dL, prefix_pair(airy_truncated(d, s, L), L), 1.0));
        double closed = khs_closed_form(d, L, 2.0 * std::sqrt(Lg));
        CHECK(dist * dist == doctest::Approx(2.0 * closed).epsilon(1e-2));
        CHECK(airy_truncation_terms(d, L, Lg).on_window == doctest::Approx(dist * dist).epsilon(1e-2));
    }
}

TEST_CASE("Airy truncation error") {
    const double Lg = 30.0;
    NoiseGrid z = zero_grid(Lg, 1e-3);
    SolutionPair d = airy_dirichlet(z, kInf, Lg);
    double e5 = airy_truncation_error(d, 5.0, Lg), e10 = airy_truncation_error(d, 10.0, Lg),
           e20 = airy_truncation_error(d, 20.0, Lg);
    CHECK(e5 > e10);
    CHECK(e10 > e20);
    CHECK(e20 > 0.0);
    TruncationTerms t = airy_truncation_terms(d, Lg, Lg, TailPolicy::none);
    CHECK(t.off_square == 0.0);
    CHECK(t.tail == 0.0);
    CHECK(t.value() == doctest::Approx(std::sqrt(t.on_window)));

    NoiseGrid g = sample_grid(sample_path(1, 20.0, 1e-3), 20.0, 1e-3);
    SolutionPair n = airy_dirichlet(g, 0.05, 20.0);
    REQUIRE(n.last_zero() > 1.0);
    CHECK(error_text([&] { airy_truncation_error(n, 0.5, 20.0); }).find("invalid-argument") == 0);
}

TEST_CASE("Bessel truncation error") {
    const double a = 1e3, X = 60.0;
    NoiseGrid z = zero_grid(X, 1e-3);
    SolutionPair u = solve_scaled_pair(z, kInf, a, 0.0, 1.0, X);
    SolutionPair phd = tilde_transform(u, z);
    double prev = kInf;
    for (double L : {5.0, 10.0, 20.0}) {
        double e = bessel_truncation_error(phd, bessel_tilde_infty(u, z, L), L, a, X);
        CHECK(e >= 0.0);
        CHECK(e < prev);
        prev = e;
    }
    TruncationTerms t = bessel_truncation_terms(phd, bessel_tilde_infty(u, z, 20.0), X, a, X, TailPolicy::none);
    CHECK(t.off_square == 0.0);
    CHECK(t.tail == 0.0);
}

TEST_CASE("triangle decomposition bounds the full-window distance") {
    ExperimentConfig c;
    c.a_sweep = {1e3};
    c.hw_k = 0;
    for (std::uint64_t seed : {1, 2, 3}) {
        std::vector<RunRecord> r = run_replica(c, seed);
        REQUIRE(r.size() == 1);
        if (r[0].flag_collision || !std::isfinite(r[0].airy_trunc_err)) continue;
        ReplicaNoise rn = replica_noise(c, seed);
        const double Lg = c.grid_end(), a = 1e3;
        NoiseGrid gA = prefix(rn.grid, Lg);
        SolutionPair d = airy_dirichlet(gA, c.beta, Lg);
        TriangularKernel KA = assemble_kernel(d, airy_infty(d, gA, Lg), 1.0);
        NoiseGrid ga = prefix(rn.grid, std::max(std::pow(a, 2.0 / 3.0) * c.T_tail, Lg + 2.0));
        SolutionPair u = solve_scaled_pair(ga, c.beta, a, 0.0, 1.0, ga.horizon());
        SolutionPair phd = tilde_transform(u, ga);
        SolutionPair phi = bessel_tilde_infty(u, ga, c.L);
        SolutionPair phn = scaled_copy(phi, -1.0 / wronskian(phd, phi)[0]);
        TriangularKernel KG = assemble_kernel(prefix_pair(phd, Lg), prefix_pair(phn, Lg), 1.0);
        double full = hs_distance(KA, KG);
        CHECK(full <= r[0].airy_trunc_err + r[0].hs_dist_truncated + r[0].bessel_trunc_err + 1e-3);
    }
}

TEST_CASE("guard soundness: unflagged records carry finite hard-edge terms") {
    ExperimentConfig c;
    c.a_sweep = {1e3, 1e4};
    c.replicas = 4;
    c.hw_k = 0;
    for (const RunRecord& r : run_coupled_sweep(c)) {
        if (r.flag_collision) continue;
        CHECK(std::isfinite(r.bessel_trunc_err));
        CHECK(std::isfinite(r.hs_dist_truncated));
    }
}

TEST_CASE("Riccati band diagnostics") {
    std::vector<double> t;
    for (int i = 0; i <= 9000; ++i) t.push_back(10.0 + 0.01 * i);
    BandDiagnostics on = riccati_band_diagnostics(riccati_from(t, [](double s) { return std::sqrt(s); }), 10.0);
    REQUIRE(on.sigma_s.has_value());
    CHECK(*on.sigma_s == 10.0);
    CHECK(on.holds_to_end);
    CHECK(on.T_entry.has_value());

    RiccatiPath X = solve_airy_riccati(zero_grid(100.0, 1e-3), kInf, 10.0, std::sqrt(10.0), 100.0);
    CHECK(riccati_band_diagnostics(X, 10.0).holds_to_end);

    BandDiagnostics off = riccati_band_diagnostics(riccati_from(t, [](double s) { return -std::sqrt(s); }), 10.0);
    CHECK_FALSE(off.sigma_s.has_value());
    CHECK_FALSE(off.T_entry.has_value());
    CHECK_FALSE(off.holds_to_end);
    CHECK(error_text([&] { riccati_band_diagnostics(X, 5.0); }).find("invalid-argument") == 0);
}

TEST_CASE("Bessel events on synthetic paths") {
    double a = 1e4;
    std::vector<double> t;
    for (int i = 0; i <= 5000; ++i) t.push_back(0.01 * i);
    NoiseGrid flat;
    flat.t = t;
    flat.b.assign(t.size(), 0.0);
    RiccatiPath early = riccati_from(t, [&](double s) { return a * (1.0 + std::sqrt(s)); });
    CHECK(bessel_event_diagnostics(early, flat, a, 10.0, 1.0, 2.0).e62);
    RiccatiPath low = riccati_from(t, [&](double s) { return a * (1.0 + 0.5 * std::sqrt(s)); });
    CHECK_FALSE(bessel_event_diagnostics(low, flat, a, 10.0, 1.0, 2.0).e62);

    a = 64.0;
    const double d2 = 4.0;
    std::vector<double> late;
    for (double s = 0.125; s <= std::exp(std::pow(a, 1.0 / 6.0) * d2 / 2.0); s += 0.01) late.push_back(s);
    RiccatiPath constant = riccati_from(late, [&](double) { return a * std::exp(d2 / 2.0); });
    NoiseGrid flat_late;
    flat_late.t = late;
    flat_late.b.assign(late.size(), 0.0);
    CHECK(bessel_event_diagnostics(constant, flat_late, a, 10.0, 0.3, d2).e63);
}

TEST_CASE("Bessel events e62 and e64 hold for most noisy paths") {
    const double a = 1e4, h = 1e-2;
    const double X = std::floor(std::pow(a, 2.0 / 3.0) * 3.0);
    int e62 = 0, e64 = 0;
    const int N = 200;
    for (int s = 1; s <= N; ++s) {
        NoiseGrid g = sample_grid(sample_path(static_cast<std::uint64_t>(s), X, h), X, h);
        RiccatiPath P = solve_scaled_riccati(g, 2.0, a, 0.0, X);
        BesselEvents ev = bessel_event_diagnostics(bessel_p_from_scaled(P, a), hard_noise_from_soft(g, a), a, 10.0, 0.3, 2.0);
        e62 += ev.e62;
        e64 += ev.e64;
    }
    CHECK(e62 >= 0.9 * N);
    CHECK(e64 >= 0.9 * N);
}

TEST_CASE("literal e63 lower bound exceeds the noiseless Bessel diffusion near t = 1/8") {
    const double a = 1e4;
    const double X = std::floor(std::pow(a, 2.0 / 3.0) * 3.0);
    NoiseGrid z = zero_grid(X, 1e-2);
    RiccatiPath p = bessel_p_from_scaled(solve_scaled_riccati(z, kInf, a, 0.0, X), a);
    std::size_t i = 0;
    while (p.grid[i] < 0.125) ++i;
    const double t = p.grid[i];
    const double deterministic = 1.0 + std::sqrt(1.0 - std::exp(-t));
    CHECK(p.values[i] / a == doctest::Approx(deterministic).epsilon(2e-2));
    CHECK(p.values[i] / a < std::exp(-std::pow(a, -1.0 / 6.0) * std::log(t)));
    CHECK_FALSE(bessel_event_diagnostics(p, hard_noise_from_soft(z, a), a, 10.0, 0.3, 2.0).e63);
}

TEST_CASE("soft-to-hard maps") {
    const double a = 1000.0;
    RiccatiPath P;
    P.grid = {0.0, 100.0, 200.0};
    P.values = {kInf, 1.0, -2.0};
    RiccatiPath p = bessel_p_from_scaled(P, a);
    CHECK(p.grid[1] == doctest::Approx(1.0));
    CHECK(std::isinf(p.values[0]));
    CHECK(p.values[1] == doctest::Approx(a + 100.0));
    CHECK(p.values[2] == doctest::Approx(a - 200.0));
    NoiseGrid g;
    g.t = {0.0, 100.0};
    g.b = {0.0, 5.0};
    NoiseGrid q = hard_noise_from_soft(g, a);
    CHECK(q.t[1] == doctest::Approx(1.0));
    CHECK(q.b[1] == doctest::Approx(0.5));
}

TEST_CASE("record JSON") {
    ExperimentConfig c;
    c.replicas = 1;
    c.a_sweep = {100.0};
    c.hw_k = 0;
    std::vector<RunRecord> r = run_coupled_sweep(c);
    auto j = nlohmann::json::parse(record_json(r[0]));
    for (const char* k : {"seed", "a", "hs_dist_truncated", "airy_trunc_err", "bessel_trunc_err", "hw_dist",
                          "flag_collision", "flag_band", "diagnostics"})
        CHECK(j.contains(k));
    CHECK(j["hw_dist"].is_null());
    for (const char* k : {"band_entry_time", "sigma_10", "band_holds_to_end", "e62", "e63", "e64", "fluctuation_C"})
        CHECK(j["diagnostics"].contains(k));
    std::ostringstream lines;
    write_records_jsonl(r, lines);
    CHECK(std::ranges::count(lines.str(), '\n') == 1);
}

}
