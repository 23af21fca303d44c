#include "edge_ops/sde.hpp"

#include <algorithm>
#include <ostream>

#include "edge_ops/errors.hpp"
#include "edge_ops/format.hpp"

namespace edge {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct AiryModel {
    static constexpr bool geometric = false;
    double sigma;
    double lambda;
    void coeffs(double t0, double t1, double h, double db, double& e, double& k0, double& k1) const {
        e = 1.0;
        k0 = 0.5 * ((t0 - lambda) * h + sigma * db);
        k1 = 0.5 * ((t1 - lambda) * h + sigma * db);
    }
};

struct HardModel {
    static constexpr bool geometric = true;
    double sigma;
    double index;  // 2a
    double lambda;
    void coeffs(double t0, double t1, double h, double db, double& e, double& k0, double& k1) const {
        e = std::exp(0.5 * (sigma * db + index * h));
        k0 = -0.5 * lambda * std::exp(-t0) * h;
        k1 = -0.5 * lambda * std::exp(-t1) * h;
    }
};

struct ScaledModel {
    static constexpr bool geometric = true;
    double sigma;
    double eps;
    double mu;
    double drift_const;  // (2/beta) * eps
    double potential(double x) const {
        double e2 = eps * eps;
        return -std::expm1(-e2 * x) / e2 - mu * std::exp(-e2 * x) + drift_const;
    }
    void coeffs(double t0, double t1, double h, double db, double& e, double& k0, double& k1) const {
        e = std::exp(0.5 * sigma * eps * db);
        k0 = 0.5 * (potential(t0) * h + sigma * db);
        k1 = 0.5 * (potential(t1) * h + sigma * db);
    }
};

ScaledModel make_scaled(double beta, double a, double mu) {
    double eps = std::pow(a, -1.0 / 3.0);
    return ScaledModel{noise_amp(beta), eps, mu, (2.0 / beta) * eps};
}

void renormalize(double& u, double& v, int& e) {
    double m = std::max(std::fabs(u), std::fabs(v));
    if (m == 0.0) return;
    int ex = 0;
    std::frexp(m, &ex);
    if (ex > 64 || ex < -64) {
        u = std::ldexp(u, -ex);
        v = std::ldexp(v, -ex);
        e += ex;
    }
}

std::size_t end_index(const NoiseGrid& g, double T) {
    require(g.size() >= 2, ErrorKind::invalid_argument, "noise grid needs at least two points");
    require(T <= g.horizon() * (1.0 + 1e-12) + 1e-12, ErrorKind::out_of_range,
            "noise horizon " + fmt_num(g.horizon()) + " shorter than requested " + fmt_num(T));
    auto it = std::upper_bound(g.t.begin(), g.t.end(), T * (1.0 + 1e-12) + 1e-15);
    return static_cast<std::size_t>(it - g.t.begin());
}

template <class Model>
SolutionPair integrate_pair(const NoiseGrid& g, std::size_t n, const Model& model, double c0, double c1) {
    require(c0 != 0.0 || c1 != 0.0, ErrorKind::invalid_argument, "initial data must not be (0, 0)");
    SolutionPair s;
    s.grid.assign(g.t.begin(), g.t.begin() + static_cast<std::ptrdiff_t>(n));
    s.f_m.resize(n);
    s.fp_m.resize(n);
    s.e2.resize(n);
    double u = c0, v = c1;
    int ex = 0;
    renormalize(u, v, ex);
    s.f_m[0] = u;
    s.fp_m[0] = v;
    s.e2[0] = ex;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        double h = g.t[i + 1] - g.t[i];
        double db = g.b[i + 1] - g.b[i];
        double e, k0, k1;
        model.coeffs(g.t[i], g.t[i + 1], h, db, e, k0, k1);
        double u_prev = u;
        if constexpr (Model::geometric) v *= e;
        v += k0 * u;
        u += h * v;
        v += k1 * u;
        if constexpr (Model::geometric) v *= e;
        if ((u_prev > 0 && u <= 0) || (u_prev < 0 && u >= 0)) {
            if (u != 0.0 || u_prev != 0.0) s.crossings.push_back(i + 1);
        }
        renormalize(u, v, ex);
        s.f_m[i + 1] = u;
        s.fp_m[i + 1] = v;
        s.e2[i + 1] = ex;
    }
    return s;
}

// Projective state of (f, f'): z = f'/f in the direct chart, z = f/f' in the inverse chart.
struct Mobius {
    bool inv = false;
    double z = 0.0;
    double m = 1e3;

    double value() const {
        if (!inv) return z;
        return z == 0.0 ? kInf : 1.0 / z;
    }
    void geom(double e) {
        if (inv)
            z /= e;
        else
            z *= e;
    }
    void kick(double k) {
        if (inv)
            z = z / (1.0 + k * z);
        else
            z += k;
    }
    // Fraction of the step at which f vanished, or -1 when it kept its sign.
    double drift(double h) {
        if (!inv) {
            double d = 1.0 + h * z;
            if (d > 0.0) {
                z /= d;
                return -1.0;
            }
            double theta = -1.0 / (h * z);
            if (d == 0.0) {
                inv = true;
                z = 0.0;
                return 1.0;
            }
            z /= d;
            return theta;
        }
        double y1 = z + h;
        double theta = (z < 0.0 && y1 >= 0.0) ? -z / h : -1.0;
        z = y1;
        return theta;
    }
    void chart() {
        if (!inv && std::fabs(z) > m) {
            inv = true;
            z = 1.0 / z;
        } else if (inv && z != 0.0 && std::fabs(z) > 2.0 / m) {
            inv = false;
            z = 1.0 / z;
        }
    }
};

Mobius start_state(double x0, double m) {
    Mobius st;
    st.m = m;
    if (std::isinf(x0) && x0 > 0) {
        st.inv = true;
        st.z = 0.0;
    } else {
        require(std::isfinite(x0), ErrorKind::invalid_argument, "Riccati start must be finite or +infinity");
        st.z = x0;
        st.chart();
    }
    return st;
}

template <class Model>
double mobius_step(Mobius& st, const Model& model, double t0, double t1, double db) {
    double h = t1 - t0;
    double e, k0, k1;
    model.coeffs(t0, t1, h, db, e, k0, k1);
    if constexpr (Model::geometric) st.geom(e);
    st.kick(k0);
    double theta = st.drift(h);
    st.kick(k1);
    if constexpr (Model::geometric) st.geom(e);
    st.chart();
    return theta;
}

template <class Model>
RiccatiPath integrate_riccati(const NoiseGrid& g, std::size_t i0, std::size_t n, const Model& model, double x0,
                              const RiccatiOptions& opt) {
    require(i0 + 1 < n, ErrorKind::invalid_argument, "Riccati window is empty");
    double h0 = g.t[i0 + 1] - g.t[i0];
    Mobius st = start_state(x0, effective_switch(opt, h0));
    RiccatiPath r;
    r.m_cap = opt.m_cap;
    r.grid.assign(g.t.begin() + static_cast<std::ptrdiff_t>(i0), g.t.begin() + static_cast<std::ptrdiff_t>(n));
    r.values.resize(n - i0);
    auto store = [&](std::size_t j, bool restart) {
        double x = st.value();
        if (restart || std::isinf(x))
            r.values[j] = kInf;
        else
            r.values[j] = std::clamp(x, -opt.m_cap, opt.m_cap);
    };
    store(0, false);
    for (std::size_t i = i0; i + 1 < n; ++i) {
        double theta = mobius_step(st, model, g.t[i], g.t[i + 1], g.b[i + 1] - g.b[i]);
        bool exploded = theta >= 0.0;
        if (exploded) {
            r.explosions.push_back(g.t[i] + theta * (g.t[i + 1] - g.t[i]));
            r.explosion_index.push_back(i + 1 - i0);
        }
        store(i + 1 - i0, exploded);
    }
    return r;
}

template <class Model>
CountResult count_run(const NoiseGrid& g, std::size_t n, const Model& model, const RiccatiOptions& opt) {
    require(n >= 2, ErrorKind::invalid_argument, "Riccati window is empty");
    Mobius st = start_state(kInf, effective_switch(opt, g.t[1] - g.t[0]));
    CountResult c;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (mobius_step(st, model, g.t[i], g.t[i + 1], g.b[i + 1] - g.b[i]) >= 0.0) ++c.explosions;
    }
    c.final_value = st.value();
    return c;
}

std::size_t start_index(const NoiseGrid& g, double t0) {
    auto it = std::lower_bound(g.t.begin(), g.t.end(), t0 - 1e-9 * std::max(1.0, t0));
    return static_cast<std::size_t>(it - g.t.begin());
}

}  // namespace

std::size_t SolutionPair::index_of(double x) const {
    auto it = std::lower_bound(grid.begin(), grid.end(), x);
    if (it == grid.end()) return grid.size() - 1;
    std::size_t i = static_cast<std::size_t>(it - grid.begin());
    if (i > 0 && x - grid[i - 1] < grid[i] - x) --i;
    return i;
}

double SolutionPair::last_zero() const {
    if (crossings.empty()) return 0.0;
    std::size_t i = crossings.back();
    double f0 = raw_f(i - 1), f1 = raw_f(i);
    if (!std::isfinite(f0) || !std::isfinite(f1) || f0 == f1) return grid[i];
    return grid[i - 1] + (grid[i] - grid[i - 1]) * f0 / (f0 - f1);
}

double effective_switch(const RiccatiOptions& opt, double h) { return std::min(opt.m_switch, 0.1 / h); }

SolutionPair solve_airy_pair(const NoiseGrid& noise, double beta, double c0, double c1, double L) {
    require(beta > 0.0, ErrorKind::invalid_argument, "beta must be positive");
    SolutionPair s = integrate_pair(noise, end_index(noise, L), AiryModel{noise_amp(beta), 0.0}, c0, c1);
    s.kind = PairKind::airy;
    s.params = PairParams{beta, 0.0, 0.0, c0, c1};
    return s;
}

SolutionPair solve_airy_pair(const BrownianPath& noise, double beta, double c0, double c1, double L, double h) {
    return solve_airy_pair(sample_grid(noise, L, h), beta, c0, c1, L);
}

SolutionPair solve_hard_pair(const NoiseGrid& noise_2a, double beta, double a, double lambda, double c0, double c1,
                             double T) {
    require(beta > 0.0, ErrorKind::invalid_argument, "beta must be positive");
    require(a >= 0.0, ErrorKind::invalid_argument, "a must be non-negative");
    SolutionPair s =
        integrate_pair(noise_2a, end_index(noise_2a, T), HardModel{noise_amp(beta), 2.0 * a, lambda}, c0, c1);
    s.kind = PairKind::hard;
    s.params = PairParams{beta, a, lambda, c0, c1};
    return s;
}

SolutionPair solve_hard_pair(const BrownianPath& noise, double beta, double a, double lambda, double c0, double c1,
                             double T, double h) {
    return solve_hard_pair(scaled_grid(noise, a, T, h), beta, a, lambda, c0, c1, T);
}

SolutionPair solve_scaled_pair(const NoiseGrid& noise, double beta, double a, double eta0, double eta1, double L) {
    require(a > 0.0, ErrorKind::invalid_argument, "scaled pair needs a > 0");
    if (std::isinf(a)) {
        SolutionPair s = solve_airy_pair(noise, beta, eta0, eta1, L);
        s.kind = PairKind::scaled;
        s.params.a = a;
        return s;
    }
    SolutionPair s = integrate_pair(noise, end_index(noise, L), make_scaled(beta, a, 0.0), eta0, eta1);
    s.kind = PairKind::scaled;
    s.params = PairParams{beta, a, 0.0, eta0, eta1};
    return s;
}

SolutionPair solve_scaled_pair(const BrownianPath& noise, double beta, double a, double eta0, double eta1, double L,
                               double h) {
    return solve_scaled_pair(sample_grid(noise, L, h), beta, a, eta0, eta1, L);
}

RiccatiPath solve_airy_riccati(const NoiseGrid& noise, double beta, double t0, double x0, double T, double lambda,
                               const RiccatiOptions& opt) {
    require(T > t0 && t0 >= 0.0, ErrorKind::invalid_argument, "need T > t0 >= 0");
    RiccatiPath r = integrate_riccati(noise, start_index(noise, t0), end_index(noise, T),
                                      AiryModel{noise_amp(beta), lambda}, x0, opt);
    r.kind = PairKind::airy;
    r.params = PairParams{beta, 0.0, lambda, 0.0, 1.0};
    return r;
}

RiccatiPath solve_airy_riccati(const BrownianPath& noise, double beta, double t0, double x0, double T, double h,
                               double lambda, const RiccatiOptions& opt) {
    return solve_airy_riccati(sample_grid(noise, T, h), beta, t0, x0, T, lambda, opt);
}

RiccatiPath solve_bessel_riccati(const NoiseGrid& noise_2a, double beta, double a, double lambda, double T,
                                 const RiccatiOptions& opt) {
    require(a >= 0.0, ErrorKind::invalid_argument, "a must be non-negative");
    RiccatiPath r = integrate_riccati(noise_2a, 0, end_index(noise_2a, T),
                                      HardModel{noise_amp(beta), 2.0 * a, lambda}, kInf, opt);
    r.kind = PairKind::hard;
    r.params = PairParams{beta, a, lambda, 0.0, 1.0};
    return r;
}

RiccatiPath solve_bessel_riccati(const BrownianPath& noise, double beta, double a, double lambda, double T, double h,
                                 const RiccatiOptions& opt) {
    return solve_bessel_riccati(scaled_grid(noise, a, T, h), beta, a, lambda, T, opt);
}

RiccatiPath solve_scaled_riccati(const NoiseGrid& noise, double beta, double a, double mu, double T,
                                 const RiccatiOptions& opt) {
    require(a > 0.0, ErrorKind::invalid_argument, "scaled Riccati needs a > 0");
    if (std::isinf(a)) {
        RiccatiPath r = solve_airy_riccati(noise, beta, 0.0, kInf, T, mu, opt);
        r.kind = PairKind::scaled;
        r.params.a = a;
        return r;
    }
    RiccatiPath r = integrate_riccati(noise, 0, end_index(noise, T), make_scaled(beta, a, mu), kInf, opt);
    r.kind = PairKind::scaled;
    r.params = PairParams{beta, a, mu, 0.0, 1.0};
    return r;
}

CountResult count_airy_explosions(const NoiseGrid& noise, double beta, double lambda, double T,
                                  const RiccatiOptions& opt) {
    return count_run(noise, end_index(noise, T), AiryModel{noise_amp(beta), lambda}, opt);
}

CountResult count_bessel_explosions(const NoiseGrid& noise_2a, double beta, double a, double lambda, double T,
                                    const RiccatiOptions& opt) {
    return count_run(noise_2a, end_index(noise_2a, T), HardModel{noise_amp(beta), 2.0 * a, lambda}, opt);
}

CountResult count_scaled_explosions(const NoiseGrid& noise, double beta, double a, double mu, double T,
                                    const RiccatiOptions& opt) {
    if (std::isinf(a)) return count_airy_explosions(noise, beta, mu, T, opt);
    return count_run(noise, end_index(noise, T), make_scaled(beta, a, mu), opt);
}

SolutionPair log_reconstruct(const RiccatiPath& r, double log_f_at_start, int sign_at_start,
                             bool flip_at_explosions) {
    require(sign_at_start == 1 || sign_at_start == -1, ErrorKind::invalid_argument, "sign must be +1 or -1");
    if (!flip_at_explosions)
        require(r.explosions.empty(), ErrorKind::invalid_state, "window contains an explosion");
    std::size_t n = r.size();
    SolutionPair s;
    s.kind = r.kind;
    s.params = r.params;
    s.grid = r.grid;
    s.f_m.resize(n);
    s.fp_m.resize(n);
    s.e2.resize(n);
    std::size_t next = 0;
    double lg = log_f_at_start;
    int sg = sign_at_start;
    auto put = [&](std::size_t i) {
        int ex = static_cast<int>(std::floor(lg / std::numbers::ln2));
        s.f_m[i] = sg * std::exp(lg - ex * std::numbers::ln2);
        s.fp_m[i] = s.f_m[i] * r.values[i];
        s.e2[i] = ex;
    };
    put(0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        double h = r.grid[i + 1] - r.grid[i];
        double x0 = r.values[i], x1 = r.values[i + 1];
        bool exploded = next < r.explosion_index.size() && r.explosion_index[next] == i + 1;
        if (std::isfinite(x0) && std::isfinite(x1))
            lg += 0.5 * h * (x0 + x1);
        else if (std::isfinite(x0))
            lg += std::log(std::fabs(1.0 + h * x0));
        else if (std::isfinite(x1))
            lg -= std::log(std::fabs(1.0 - h * x1));
        if (exploded) {
            sg = -sg;
            s.crossings.push_back(i + 1);
            ++next;
        }
        put(i + 1);
    }
    return s;
}

SolutionPair pair_from_values(PairKind kind, const std::vector<double>& grid, const std::vector<double>& f,
                              const std::vector<double>& fp) {
    require(grid.size() == f.size() && f.size() == fp.size(), ErrorKind::invalid_argument,
            "grid, f and f' must have equal length");
    SolutionPair s;
    s.kind = kind;
    s.grid = grid;
    s.f_m.resize(grid.size());
    s.fp_m.resize(grid.size());
    s.e2.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double u = f[i], v = fp[i];
        int ex = 0;
        renormalize(u, v, ex);
        s.f_m[i] = u;
        s.fp_m[i] = v;
        s.e2[i] = ex;
    }
    recount_crossings(s);
    return s;
}

void recount_crossings(SolutionPair& s) {
    s.crossings.clear();
    for (std::size_t i = 1; i < s.size(); ++i) {
        double u0 = s.f_m[i - 1], u1 = s.f_m[i];
        if ((u0 > 0 && u1 <= 0) || (u0 < 0 && u1 >= 0)) {
            if (u0 != 0.0 || u1 != 0.0) s.crossings.push_back(i);
        }
    }
}

namespace {

template <class Model>
void backward(SolutionPair& s, const NoiseGrid& g, std::size_t i0, const Model& model) {
    double u = s.f_m[i0], v = s.fp_m[i0];
    int ex = s.e2[i0];
    for (std::size_t i = i0; i-- > 0;) {
        double h = g.t[i + 1] - g.t[i];
        double e, k0, k1;
        model.coeffs(g.t[i], g.t[i + 1], h, g.b[i + 1] - g.b[i], e, k0, k1);
        if constexpr (Model::geometric) v /= e;
        v -= k1 * u;
        u -= h * v;
        v -= k0 * u;
        if constexpr (Model::geometric) v /= e;
        renormalize(u, v, ex);
        s.f_m[i] = u;
        s.fp_m[i] = v;
        s.e2[i] = ex;
    }
}

}  // namespace

void integrate_backward(SolutionPair& s, const NoiseGrid& noise, std::size_t i0) {
    require(i0 < s.size() && s.size() <= noise.size(), ErrorKind::invalid_argument,
            "backward start outside the solution grid");
    for (std::size_t i = 0; i <= i0; ++i)
        require(noise.t[i] == s.grid[i], ErrorKind::invalid_argument, "solution and noise grids differ");
    const PairParams& p = s.params;
    switch (s.kind) {
        case PairKind::airy:
            backward(s, noise, i0, AiryModel{noise_amp(p.beta), p.lambda});
            break;
        case PairKind::hard:
            backward(s, noise, i0, HardModel{noise_amp(p.beta), 2.0 * p.a, p.lambda});
            break;
        case PairKind::scaled:
            if (std::isinf(p.a))
                backward(s, noise, i0, AiryModel{noise_amp(p.beta), p.lambda});
            else
                backward(s, noise, i0, make_scaled(p.beta, p.a, p.lambda));
            break;
    }
    recount_crossings(s);
}

void write_trajectory_csv(const SolutionPair& s, std::ostream& out) {
    out << "t,sign,log_mag,deriv_ratio\n";
    for (std::size_t i = 0; i < s.size(); ++i) {
        out << fmt_num(s.grid[i]) << ',' << s.sign(i) << ',' << fmt_num(s.log_mag(i)) << ','
            << fmt_num(s.deriv_ratio(i)) << '\n';
    }
}

}  // namespace edge
