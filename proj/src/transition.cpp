#include "edge_ops/transition.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <ostream>

#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "edge_ops/errors.hpp"
#include "edge_ops/format.hpp"
#include "edge_ops/spectra.hpp"

namespace edge {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

NoiseGrid grid_prefix(const NoiseGrid& g, double T) {
    auto it = std::upper_bound(g.t.begin(), g.t.end(), T * (1.0 + 1e-12) + 1e-15);
    auto n = it - g.t.begin();
    NoiseGrid out;
    out.t.assign(g.t.begin(), g.t.begin() + n);
    out.b.assign(g.b.begin(), g.b.begin() + n);
    return out;
}

double raw(double m, int e) { return std::ldexp(m, e); }

double trapezoid_from(const std::vector<double>& x, const std::vector<double>& f, std::size_t i0, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = i0; i + 1 < n; ++i) s += 0.5 * (x[i + 1] - x[i]) * (f[i] + f[i + 1]);
    return s;
}

// Squared norms of K - K^(L) from P = u_d u_right and G = int_0^x u_d^2 / u_d(x)^2.
TruncationTerms terms_from(const std::vector<double>& x, const std::vector<double>& P, const std::vector<double>& G,
                           std::size_t iL, std::size_t n) {
    TruncationTerms t;
    double gp = G[iL] * P[iL];
    t.on_window = gp * gp;
    std::vector<double> f(n, 0.0);
    for (std::size_t i = iL; i < n; ++i) f[i] = P[i] * P[i] * G[i];
    t.off_square = 2.0 * trapezoid_from(x, f, iL, n);
    return t;
}

std::size_t window_count(const SolutionPair& s, double L_grid) {
    if (L_grid >= s.grid.back()) return s.size();
    return s.index_of(L_grid) + 1;
}

double tail_decay_rate(const std::vector<double>& x, const std::vector<double>& f, std::size_t i0, std::size_t n) {
    double x_end = x[n - 1];
    double span = std::min(1.0, 0.5 * (x_end - x[i0]));
    auto it = std::lower_bound(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n), x_end - span);
    std::size_t m = std::min<std::size_t>(static_cast<std::size_t>(it - x.begin()), n - 2);
    if (!(f[m] > 0.0) || !(f[n - 1] > 0.0)) return kNaN;
    return (std::log(f[m]) - std::log(f[n - 1])) / (x_end - x[m]);
}

std::uint64_t coarse_multiple(const ExperimentConfig& c) {
    return static_cast<std::uint64_t>(std::max(1.0, std::round(c.coarse_step / c.h)));
}

}  // namespace

void validate(const ExperimentConfig& c) {
    auto bad = [](const std::string& m) { fail(ErrorKind::invalid_argument, m); };
    if (!(c.h > 0.0)) bad("h must be positive (got " + fmt_num(c.h) + ")");
    if (!(c.beta > 0.0)) bad("beta must be positive (got " + fmt_num(c.beta) + ")");
    if (!(c.L > 0.0)) bad("L must be positive (got " + fmt_num(c.L) + ")");
    if (!(c.h < c.L / 100.0)) bad("h must be below L/100 (h = " + fmt_num(c.h) + ", L = " + fmt_num(c.L) + ")");
    if (!(c.L < c.grid_end()))
        bad("L must be below L_grid (L = " + fmt_num(c.L) + ", L_grid = " + fmt_num(c.grid_end()) + ")");
    if (c.replicas < 1) bad("replicas must be at least 1 (got " + std::to_string(c.replicas) + ")");
    if (c.jobs < 0) bad("jobs must be non-negative (got " + std::to_string(c.jobs) + ")");
    for (std::size_t i = 0; i < c.a_sweep.size(); ++i) {
        if (!(c.a_sweep[i] > 0.5)) bad("a values must exceed 1/2 (got " + fmt_num(c.a_sweep[i]) + ")");
        if (i > 0 && !(c.a_sweep[i] > c.a_sweep[i - 1]))
            bad("a_sweep must be strictly ascending (" + fmt_num(c.a_sweep[i - 1]) + " then " +
                fmt_num(c.a_sweep[i]) + ")");
    }
    if (!(c.T_tail > 0.0)) bad("T_tail must be positive (got " + fmt_num(c.T_tail) + ")");
    if (!(c.L_diag > 0.0)) bad("L_diag must be positive (got " + fmt_num(c.L_diag) + ")");
    if (c.hw_k < 0) bad("hw_k must be non-negative (got " + std::to_string(c.hw_k) + ")");
    if (c.hw_k > 0 && !(c.count_T > 0.0)) bad("count_T must be positive (got " + fmt_num(c.count_T) + ")");
    if (c.hw_k > 0 && !(c.hw_tol > 0.0)) bad("hw_tol must be positive (got " + fmt_num(c.hw_tol) + ")");
    if (!(c.coarse_step > 0.0)) bad("coarse_step must be positive (got " + fmt_num(c.coarse_step) + ")");
}

std::vector<std::uint64_t> replica_seeds(const ExperimentConfig& c) {
    std::vector<std::uint64_t> s(static_cast<std::size_t>(std::max(c.replicas, 0)));
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = c.seed + i;
    return s;
}

double TruncationTerms::value() const { return std::sqrt(on_window + off_square + tail); }

double khs_closed_form(const SolutionPair& psi_d, double L, double tail_rate) {
    std::size_t iL = psi_d.index_of(L);
    std::vector<double> w(psi_d.size(), 1.0);
    std::vector<double> J = right_products(psi_d, w, iL, tail_rate);
    std::vector<double> G = left_ratios(psi_d);
    double left = G[iL] * G[iL];
    double right = J[iL] * J[iL];
    return 0.5 * left * right;
}

TruncationTerms airy_truncation_terms(const SolutionPair& psi_d, double L, double L_grid, TailPolicy tail) {
    require(L > 0.0 && L <= L_grid, ErrorKind::invalid_argument,
            "need 0 < L <= L_grid (L = " + fmt_num(L) + ", L_grid = " + fmt_num(L_grid) + ")");
    require(L_grid <= psi_d.grid.back() * (1.0 + 1e-12), ErrorKind::out_of_range,
            "psi_d ends at " + fmt_num(psi_d.grid.back()) + " before L_grid = " + fmt_num(L_grid));
    std::size_t n = window_count(psi_d, L_grid);
    std::size_t iL = psi_d.index_of(L);
    if (!psi_d.crossings.empty() && psi_d.crossings.back() > iL)
        fail(ErrorKind::invalid_argument, "psi_d vanishes at " + fmt_num(psi_d.last_zero()) + " beyond L = " +
                                              fmt_num(L));
    require(psi_d.f_m[iL] != 0.0, ErrorKind::invalid_argument, "psi_d vanishes at L");
    SolutionPair d = psi_d;
    d.grid.resize(n);
    d.f_m.resize(n);
    d.fp_m.resize(n);
    d.e2.resize(n);
    double x_end = d.grid.back();
    double rate = tail == TailPolicy::asymptotic ? 2.0 * std::sqrt(x_end) : kInf;
    std::vector<double> w(n, 1.0);
    std::vector<double> J = right_products(d, w, iL, rate);
    std::vector<double> G = left_ratios(d);
    TruncationTerms t = terms_from(d.grid, J, G, iL, n);
    if (tail == TailPolicy::asymptotic && iL + 1 < n) {
        // integrand ~ y^{-3/2} beyond the window
        t.tail = 2.0 * 2.0 * x_end * J[n - 1] * J[n - 1] * G[n - 1];
    }
    return t;
}

double airy_truncation_error(const SolutionPair& psi_d, double L, double L_grid, TailPolicy tail) {
    return airy_truncation_terms(psi_d, L, L_grid, tail).value();
}

TruncationTerms bessel_truncation_terms(const SolutionPair& phi_tilde_d, const SolutionPair& phi_tilde_infty, double L,
                                        double a, double L_grid, TailPolicy tail) {
    require(a > 0.0, ErrorKind::invalid_argument, "a must be positive");
    require(L > 0.0 && L <= L_grid, ErrorKind::invalid_argument,
            "need 0 < L <= L_grid (L = " + fmt_num(L) + ", L_grid = " + fmt_num(L_grid) + ")");
    require(phi_tilde_d.size() == phi_tilde_infty.size(), ErrorKind::invalid_argument,
            "tilde solutions live on different grids");
    std::size_t iL = phi_tilde_d.index_of(L);
    if (!phi_tilde_d.crossings.empty() && phi_tilde_d.crossings.back() > iL)
        fail(ErrorKind::hard_eigenvalue_collision,
             "phi_d vanishes at " + fmt_num(phi_tilde_d.last_zero()) + " beyond L = " + fmt_num(L));
    std::size_t n = window_count(phi_tilde_d, L_grid);
    std::vector<double> W = wronskian(phi_tilde_d, phi_tilde_infty);
    double norm = -W[0];
    require(norm > 0.0 && std::isfinite(norm), ErrorKind::invalid_state, "tilde Wronskian at 0 is not negative");
    std::vector<double> P(n);
    for (std::size_t i = 0; i < n; ++i)
        P[i] = raw(phi_tilde_d.f_m[i] * phi_tilde_infty.f_m[i], phi_tilde_d.e2[i] + phi_tilde_infty.e2[i]) / norm;
    std::vector<double> G = left_ratios(phi_tilde_d);
    TruncationTerms t = terms_from(phi_tilde_d.grid, P, G, iL, n);
    if (tail == TailPolicy::asymptotic && iL + 1 < n) {
        std::vector<double> f(n, 0.0);
        for (std::size_t i = iL; i < n; ++i) f[i] = P[i] * P[i] * G[i];
        double x_end = phi_tilde_d.grid[n - 1];
        double r = tail_decay_rate(phi_tilde_d.grid, f, iL, n);
        if (std::isfinite(r) && r > 1.0 / x_end)
            t.tail = 2.0 * f[n - 1] / r;
        else
            t.tail = 2.0 * 2.0 * x_end * f[n - 1];
    }
    return t;
}

double bessel_truncation_error(const SolutionPair& phi_tilde_d, const SolutionPair& phi_tilde_infty, double L, double a,
                               double L_grid, TailPolicy tail) {
    return bessel_truncation_terms(phi_tilde_d, phi_tilde_infty, L, a, L_grid, tail).value();
}

BandDiagnostics riccati_band_diagnostics(const RiccatiPath& X, double s) {
    require(s >= 10.0, ErrorKind::invalid_argument, "band diagnostics need s >= 10 (got " + fmt_num(s) + ")");
    BandDiagnostics out;
    auto dev = [&](std::size_t i) {
        double v = X.values[i];
        return std::isfinite(v) ? std::fabs(v - std::sqrt(X.grid[i])) : kInf;
    };
    auto width = [&](std::size_t i) { return std::pow(X.grid[i], -0.25) * std::log(X.grid[i]); };
    std::size_t n = X.size();
    auto first = std::lower_bound(X.grid.begin(), X.grid.end(), s - 1e-9 * s);
    std::size_t i0 = static_cast<std::size_t>(first - X.grid.begin());
    if (i0 >= n) return out;
    for (std::size_t i = i0; i < n; ++i) {
        if (dev(i) <= 0.5 * width(i)) {
            out.sigma_s = X.grid[i];
            bool holds = true;
            for (std::size_t j = i; j < n && holds; ++j) holds = dev(j) <= width(j);
            out.holds_to_end = holds;
            break;
        }
    }
    std::size_t j = n;
    while (j > i0 && dev(j - 1) <= width(j - 1)) --j;
    if (j < n) out.T_entry = X.grid[j];
    return out;
}

BesselEvents bessel_event_diagnostics(const RiccatiPath& p, const NoiseGrid& noise_2a, double a, double L_diag,
                                      double d1, double d2) {
    require(a > 0.0, ErrorKind::invalid_argument, "a must be positive");
    require(noise_2a.size() >= p.size(), ErrorKind::invalid_argument, "noise grid shorter than the path");
    const double t_lo = std::pow(a, -2.0 / 3.0) * L_diag;
    const double t0 = 0.125;
    const double c = std::pow(a, -1.0 / 6.0);
    const double sigma = noise_amp(p.params.beta);
    BesselEvents ev{true, true, true};
    std::size_t n = p.size();
    for (std::size_t i = 0; i < n; ++i) {
        double t = p.grid[i];
        double v = p.values[i];
        if (t >= t_lo && t <= t0 && !(v >= a * (1.0 + d1 * std::sqrt(t)))) ev.e62 = false;
        if (t >= t0) {
            double r = v / a;
            double lt = std::log(t);
            if (!(std::isfinite(r) && r >= std::exp(-c * lt) && r <= std::exp(d2 + c * lt))) ev.e63 = false;
        }
    }
    const double sa = std::sqrt(a);
    double up = -kInf, down = -kInf;
    for (std::size_t i = n; i-- > 0;) {
        double t = noise_2a.t[i];
        if (t < t_lo) break;
        double fu = sigma * noise_2a.b[i] - sa * t;
        double fd = -sigma * noise_2a.b[i] - sa * t;
        up = std::max(up, fu);
        down = std::max(down, fd);
        double bound = c * std::log(std::pow(a, 2.0 / 3.0) * t);
        if (up - fu > bound || down - fd > bound) {
            ev.e64 = false;
            break;
        }
    }
    return ev;
}

RiccatiPath bessel_p_from_scaled(const RiccatiPath& P, double a) {
    require(a > 0.0, ErrorKind::invalid_argument, "a must be positive");
    RiccatiPath p = P;
    p.kind = PairKind::hard;
    p.params.a = a;
    const double stretch = std::pow(a, 2.0 / 3.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
        p.grid[i] = P.grid[i] / stretch;
        p.values[i] = std::isfinite(P.values[i]) ? a + stretch * P.values[i] : P.values[i];
    }
    for (double& e : p.explosions) e /= stretch;
    return p;
}

NoiseGrid hard_noise_from_soft(const NoiseGrid& soft, double a) {
    require(a > 0.0, ErrorKind::invalid_argument, "a must be positive");
    NoiseGrid g = soft;
    const double stretch = std::pow(a, 2.0 / 3.0);
    const double shrink = std::pow(a, -1.0 / 3.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        g.t[i] = soft.t[i] / stretch;
        g.b[i] = shrink * soft.b[i];
    }
    return g;
}

namespace {

double fine_end(const ExperimentConfig& c) { return std::max(c.grid_end(), c.hw_k > 0 ? 2.0 * c.count_T : 0.0); }

double soft_window(const ExperimentConfig& c, double a) {
    return std::max(std::pow(a, 2.0 / 3.0) * c.T_tail, fine_end(c) + 2.0);
}

}  // namespace

ReplicaNoise replica_noise(const ExperimentConfig& c, std::uint64_t seed) {
    validate(c);
    const double H = c.h * static_cast<double>(coarse_multiple(c));
    const double T_fine = fine_end(c);
    const double X = c.a_sweep.empty() ? T_fine + 2.0 : soft_window(c, c.a_sweep.back());
    ReplicaNoise r;
    r.path = sample_path(seed, std::ceil(X / H - 1e-9) * H, H);
    r.grid = piecewise_grid(r.path, c.h, T_fine, r.path.horizon);
    r.fine_end = T_fine;
    return r;
}

std::vector<RunRecord> run_replica(const ExperimentConfig& c, std::uint64_t seed) {
    validate(c);
    std::vector<RunRecord> out;
    if (c.a_sweep.empty()) return out;
    const double Lg = c.grid_end();
    const bool want_hw = c.hw_k > 0;
    auto window = [&](double a) { return soft_window(c, a); };
    const ReplicaNoise noise = replica_noise(c, seed);
    const BrownianPath& path = noise.path;
    const NoiseGrid& g = noise.grid;
    const NoiseGrid g_air = grid_prefix(g, Lg);
    const double Lg_eff = g_air.horizon();
    const RightOptions ropt{1.0, c.tail_policy};

    RecordDiagnostics diag;
    diag.fluctuation_C = fluctuation_constant(path, 1.0);
    if (Lg_eff > 10.0)
        diag.band = riccati_band_diagnostics(solve_airy_riccati(g_air, c.beta, 0.0, kInf, Lg_eff), 10.0);

    const SolutionPair psi_d = airy_dirichlet(g_air, c.beta, Lg_eff);
    const SolutionPair psi_s = airy_neumann(g_air, c.beta, Lg_eff);
    std::optional<TriangularKernel> KA;
    std::string airy_note;
    bool airy_collision = false;
    try {
        KA = assemble_kernel(psi_d, airy_truncated(psi_d, psi_s, c.L), 1.0, c.L);
    } catch (const Error& e) {
        airy_collision = e.kind() == ErrorKind::near_eigenvalue;
        airy_note = e.what();
    }
    double airy_err = kNaN;
    try {
        airy_err = airy_truncation_error(psi_d, c.L, Lg_eff, c.tail_policy);
    } catch (const Error& e) {
        if (airy_note.empty()) airy_note = e.what();
    }
    std::optional<SpectrumEstimate> airy_spec;
    if (want_hw) {
        try {
            airy_spec = eigs_by_bisection(airy_operator(grid_prefix(g, 2.0 * c.count_T), c.beta),
                                          static_cast<std::size_t>(c.hw_k), c.hw_tol, c.count_T);
        } catch (const Error& e) {
            if (airy_note.empty()) airy_note = e.what();
        }
    }

    for (double a : c.a_sweep) {
        RunRecord r;
        r.seed = seed;
        r.a = a;
        r.hs_dist_truncated = kNaN;
        r.airy_trunc_err = airy_err;
        r.bessel_trunc_err = kNaN;
        r.hw_dist = kNaN;
        r.flag_collision = airy_collision;
        r.flag_band = Lg_eff > 10.0 && !diag.band.holds_to_end;
        r.diagnostics = diag;
        r.note = airy_note;
        auto note = [&r](const Error& e) {
            if (r.note.empty()) r.note = e.what();
        };

        const NoiseGrid ga = grid_prefix(g, window(a));
        const SolutionPair u = solve_scaled_pair(ga, c.beta, a, 0.0, 1.0, ga.horizon());
        const SolutionPair phd = tilde_transform(u, ga);
        if (!u.crossings.empty() && u.grid[u.crossings.back()] >= c.L) r.flag_collision = true;
        try {
            SolutionPair phi_inf = bessel_tilde_infty(u, ga, c.L, ropt);
            r.bessel_trunc_err = bessel_truncation_error(phd, phi_inf, c.L, a, ga.horizon(), c.tail_policy);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::hard_eigenvalue_collision) r.flag_collision = true;
            note(e);
        }
        try {
            const SolutionPair phs = bessel_tilde_neumann(g_air, c.beta, a, Lg_eff);
            TriangularKernel KG = assemble_kernel(phd, bessel_tilde_truncated(phd, phs, c.L), 1.0, c.L);
            KG.hard_edge_a = a;
            if (KA) r.hs_dist_truncated = hs_distance(*KA, KG);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::near_eigenvalue) r.flag_collision = true;
            note(e);
        }
        if (airy_spec) {
            try {
                double Tc = std::min(2.0 * c.count_T, ga.horizon());
                SpectrumEstimate soft = eigs_by_bisection(scaled_operator(grid_prefix(ga, Tc), c.beta, a),
                                                          static_cast<std::size_t>(c.hw_k), c.hw_tol,
                                                          std::min(c.count_T, Tc));
                r.hw_dist = hw_distance(*airy_spec, soft);
            } catch (const Error& e) {
                note(e);
            }
        }
        if (a >= c.a1) {
            try {
                RiccatiPath P = solve_scaled_riccati(ga, c.beta, a, 0.0, ga.horizon());
                r.diagnostics.events = bessel_event_diagnostics(bessel_p_from_scaled(P, a),
                                                                hard_noise_from_soft(ga, a), a, c.L_diag, c.d1, c.d2);
            } catch (const Error& e) {
                note(e);
            }
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<RunRecord> run_coupled_sweep_serial(const ExperimentConfig& c) {
    validate(c);
    std::vector<RunRecord> out;
    for (std::uint64_t s : replica_seeds(c)) {
        std::vector<RunRecord> r = run_replica(c, s);
        out.insert(out.end(), r.begin(), r.end());
    }
    return out;
}

std::vector<RunRecord> run_coupled_sweep(const ExperimentConfig& c) {
    validate(c);
#ifdef _OPENMP
    if (c.jobs == 1) return run_coupled_sweep_serial(c);
    const std::vector<std::uint64_t> seeds = replica_seeds(c);
    const int n = static_cast<int>(seeds.size());
    std::vector<std::vector<RunRecord>> slots(seeds.size());
    std::vector<std::exception_ptr> errors(seeds.size());
    const int threads = c.jobs > 0 ? c.jobs : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (int i = 0; i < n; ++i) {
        try {
            slots[static_cast<std::size_t>(i)] = run_replica(c, seeds[static_cast<std::size_t>(i)]);
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    std::vector<RunRecord> out;
    for (auto& s : slots) out.insert(out.end(), s.begin(), s.end());
    return out;
#else
    return run_coupled_sweep_serial(c);
#endif
}

const char* const kRecordCsvHeader =
    "seed,a,hs_dist_truncated,airy_trunc_err,bessel_trunc_err,hw_dist,flag_collision,flag_band";

void write_records_csv(const std::vector<RunRecord>& records, std::ostream& out) {
    out << kRecordCsvHeader << '\n';
    for (const RunRecord& r : records) {
        out << r.seed << ',' << fmt_num(r.a) << ',' << fmt_num(r.hs_dist_truncated) << ',' << fmt_num(r.airy_trunc_err)
            << ',' << fmt_num(r.bessel_trunc_err) << ',' << fmt_num(r.hw_dist) << ',' << (r.flag_collision ? 1 : 0)
            << ',' << (r.flag_band ? 1 : 0) << '\n';
    }
}

std::string record_json(const RunRecord& r) {
    auto num = [](double x) -> nlohmann::ordered_json {
        if (std::isnan(x)) return nullptr;
        if (std::isinf(x)) return fmt_num(x);
        return x;
    };
    auto opt = [&](const std::optional<double>& x) -> nlohmann::ordered_json {
        return x ? num(*x) : nlohmann::ordered_json(nullptr);
    };
    nlohmann::ordered_json j;
    j["seed"] = r.seed;
    j["a"] = num(r.a);
    j["hs_dist_truncated"] = num(r.hs_dist_truncated);
    j["airy_trunc_err"] = num(r.airy_trunc_err);
    j["bessel_trunc_err"] = num(r.bessel_trunc_err);
    j["hw_dist"] = num(r.hw_dist);
    j["flag_collision"] = r.flag_collision;
    j["flag_band"] = r.flag_band;
    nlohmann::ordered_json d;
    d["band_entry_time"] = opt(r.diagnostics.band.T_entry);
    d["sigma_10"] = opt(r.diagnostics.band.sigma_s);
    d["band_holds_to_end"] = r.diagnostics.band.holds_to_end;
    if (r.diagnostics.events) {
        d["e62"] = r.diagnostics.events->e62;
        d["e63"] = r.diagnostics.events->e63;
        d["e64"] = r.diagnostics.events->e64;
    } else {
        d["e62"] = d["e63"] = d["e64"] = nullptr;
    }
    d["fluctuation_C"] = num(r.diagnostics.fluctuation_C);
    j["diagnostics"] = d;
    j["note"] = r.note;
    return j.dump();
}

void write_records_jsonl(const std::vector<RunRecord>& records, std::ostream& out) {
    for (const RunRecord& r : records) out << record_json(r) << '\n';
}

}  // namespace edge
