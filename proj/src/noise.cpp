#include "edge_ops/noise.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <ostream>

#include "edge_ops/errors.hpp"
#include "edge_ops/format.hpp"
#include "edge_ops/rng.hpp"

namespace edge {

namespace {

constexpr char kMagic[8] = {'E', 'D', 'G', 'E', 'B', 'M', '0', '1'};

bool near_integer(double r, long long& n) {
    n = std::llround(r);
    return n >= 1 && std::fabs(r - static_cast<double>(n)) <= 1e-9 * std::max(1.0, r);
}

bool is_power_of_two(long long n) { return n > 0 && (n & (n - 1)) == 0; }

BrownianPath midpoint_level(const BrownianPath& p) {
    BrownianPath out;
    out.step = p.step / 2.0;
    out.horizon = p.horizon;
    out.seed = p.seed;
    out.refinement_level = p.refinement_level + 1;
    const std::uint64_t key = stream_key(p.seed, streams::refine_base + out.refinement_level);
    const double sd = std::sqrt(p.step / 4.0);
    std::size_t n = p.values.size();
    out.values.resize(2 * n - 1);
    for (std::size_t j = 0; j + 1 < n; ++j) {
        out.values[2 * j] = p.values[j];
        out.values[2 * j + 1] = 0.5 * (p.values[j] + p.values[j + 1]) + sd * counter_normal(key, j);
    }
    out.values[2 * (n - 1)] = p.values[n - 1];
    return out;
}

BrownianPath bridge_level(const BrownianPath& p, int k) {
    BrownianPath out;
    out.step = p.step / k;
    out.horizon = p.horizon;
    out.seed = p.seed;
    out.refinement_level = p.refinement_level + 1;
    const std::uint64_t key = stream_key(p.seed, streams::refine_base + out.refinement_level);
    std::size_t n = p.values.size();
    out.values.resize((n - 1) * k + 1);
    for (std::size_t j = 0; j + 1 < n; ++j) {
        double left = p.values[j];
        double right = p.values[j + 1];
        out.values[j * k] = left;
        for (int m = 1; m < k; ++m) {
            double remaining = static_cast<double>(k - m + 1);
            double mean = left + (right - left) / remaining;
            double var = out.step * (remaining - 1.0) / remaining;
            left = mean + std::sqrt(var) * counter_normal(key, j * k + m);
            out.values[j * k + m] = left;
        }
    }
    out.values[(n - 1) * k] = p.values[n - 1];
    return out;
}

}  // namespace

std::size_t grid_count(double horizon, double step) {
    return static_cast<std::size_t>(std::floor(horizon / step + 1e-9)) + 1;
}

BrownianPath sample_path(std::uint64_t seed, double horizon, double step) {
    require(step > 0.0, ErrorKind::invalid_argument, "step must be positive");
    require(horizon > 0.0, ErrorKind::invalid_argument, "horizon must be positive");
    require(step <= horizon, ErrorKind::invalid_argument, "step must not exceed horizon");
    BrownianPath p;
    p.step = step;
    p.horizon = horizon;
    p.seed = seed;
    std::size_t n = grid_count(horizon, step);
    p.values.resize(n);
    const std::uint64_t key = stream_key(seed, streams::path);
    const double sd = std::sqrt(step);
    double w = 0.0;
    p.values[0] = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
        w += sd * counter_normal(key, i - 1);
        p.values[i] = w;
    }
    return p;
}

BrownianPath refine(const BrownianPath& path, int factor) {
    require(factor >= 2, ErrorKind::invalid_argument, "refinement factor must be at least 2");
    require(path.values.size() >= 2, ErrorKind::invalid_argument, "path has no increments");
    if (is_power_of_two(factor)) {
        BrownianPath out = midpoint_level(path);
        for (int f = factor / 2; f > 1; f /= 2) out = midpoint_level(out);
        return out;
    }
    return bridge_level(path, factor);
}

double eval(const BrownianPath& path, double t) {
    require(t >= 0.0 && t <= path.horizon * (1.0 + 1e-12), ErrorKind::out_of_range,
            "time " + fmt_num(t) + " outside [0, " + fmt_num(path.horizon) + "]");
    double r = t / path.step;
    std::size_t i = static_cast<std::size_t>(std::floor(r));
    if (i + 1 >= path.values.size()) return path.values.back();
    double frac = r - static_cast<double>(i);
    if (frac == 0.0) return path.values[i];
    return path.values[i] + frac * (path.values[i + 1] - path.values[i]);
}

double scaled_eval(const BrownianPath& path, double a, double x) {
    require(a > 0.0, ErrorKind::invalid_argument, "scale parameter a must be positive");
    return std::pow(a, -1.0 / 3.0) * eval(path, std::pow(a, 2.0 / 3.0) * x);
}

double fluctuation_constant(const BrownianPath& path, double s_min) {
    require(s_min > 0.0, ErrorKind::invalid_argument, "s_min must be positive");
    const double h = path.step;
    std::size_t first = static_cast<std::size_t>(std::ceil(s_min / h - 1e-9));
    require(first + 1 < path.values.size(), ErrorKind::invalid_argument, "empty grid range above s_min");
    const double lh = std::fabs(std::log(h));
    double best = 0.0;
    for (std::size_t i = first; i + 1 < path.values.size(); ++i) {
        double s = static_cast<double>(i) * h;
        double v = std::fabs(path.values[i + 1] - path.values[i]) / std::sqrt(h * std::log(2.0 + s / h + lh));
        best = std::max(best, v);
    }
    return best;
}

NoiseGrid sample_grid(const BrownianPath& path, double T, double h) {
    require(h > 0.0, ErrorKind::invalid_argument, "h must be positive");
    require(T <= path.horizon * (1.0 + 1e-12), ErrorKind::out_of_range,
            "noise horizon " + fmt_num(path.horizon) + " shorter than " + fmt_num(T));
    std::size_t n = grid_count(T, h);
    NoiseGrid g;
    g.t.resize(n);
    g.b.resize(n);
    long long stride = 0;
    long long k = 0;
    if (near_integer(h / path.step, stride)) {
        for (std::size_t i = 0; i < n; ++i) {
            g.t[i] = static_cast<double>(i) * h;
            std::size_t j = std::min(i * static_cast<std::size_t>(stride), path.values.size() - 1);
            g.b[i] = path.values[j];
        }
        return g;
    }
    if (near_integer(path.step / h, k) && k >= 2) return sample_grid(refine(path, static_cast<int>(k)), T, h);
    for (std::size_t i = 0; i < n; ++i) {
        g.t[i] = static_cast<double>(i) * h;
        g.b[i] = eval(path, std::min(g.t[i], path.horizon));
    }
    return g;
}

NoiseGrid scaled_grid(const BrownianPath& path, double a, double T, double h) {
    require(a >= 0.0, ErrorKind::invalid_argument, "scale parameter a must be non-negative");
    if (a == 0.0 || a == 1.0) return sample_grid(path, T, h);
    const double stretch = std::pow(a, 2.0 / 3.0);
    NoiseGrid g = sample_grid(path, stretch * T, stretch * h);
    const double shrink = std::pow(a, -1.0 / 3.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        g.t[i] = static_cast<double>(i) * h;
        g.b[i] *= shrink;
    }
    return g;
}

BrownianPath restrict_path(const BrownianPath& path, double T) {
    require(T > 0.0 && T <= path.horizon * (1.0 + 1e-12), ErrorKind::out_of_range,
            "restriction horizon " + fmt_num(T) + " outside (0, " + fmt_num(path.horizon) + "]");
    std::size_t n = std::min(grid_count(T, path.step), path.values.size());
    BrownianPath out = path;
    out.values.resize(n);
    out.horizon = static_cast<double>(n - 1) * path.step;
    return out;
}

NoiseGrid piecewise_grid(const BrownianPath& path, double h, double T_fine, double T) {
    require(h > 0.0, ErrorKind::invalid_argument, "h must be positive");
    require(T_fine > 0.0 && T_fine <= T, ErrorKind::invalid_argument, "need 0 < T_fine <= T");
    require(T <= path.horizon * (1.0 + 1e-12), ErrorKind::out_of_range,
            "noise horizon " + fmt_num(path.horizon) + " shorter than " + fmt_num(T));
    const double H = path.step;
    std::size_t knots = static_cast<std::size_t>(std::ceil(T_fine / H - 1e-9));
    knots = std::min(knots, path.values.size() - 1);
    const double tf = static_cast<double>(knots) * H;
    NoiseGrid g = sample_grid(restrict_path(path, tf), tf, h);
    std::size_t n = grid_count(T, H);
    for (std::size_t j = knots + 1; j < n; ++j) {
        g.t.push_back(static_cast<double>(j) * H);
        g.b.push_back(path.values[j]);
    }
    return g;
}

NoiseGrid zero_grid(double T, double h) {
    require(h > 0.0, ErrorKind::invalid_argument, "h must be positive");
    std::size_t n = grid_count(T, h);
    NoiseGrid g;
    g.t.resize(n);
    g.b.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) g.t[i] = static_cast<double>(i) * h;
    return g;
}

NoiseGrid grid_from_values(const std::vector<double>& values, double h) {
    NoiseGrid g;
    g.b = values;
    g.t.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) g.t[i] = static_cast<double>(i) * h;
    return g;
}

void save_binary(const BrownianPath& path, const std::string& file) {
    std::ofstream out(file, std::ios::binary);
    require(static_cast<bool>(out), ErrorKind::io_error, "cannot open " + file);
    std::uint64_t seed = path.seed;
    std::uint64_t count = path.values.size();
    out.write(kMagic, 8);
    out.write(reinterpret_cast<const char*>(&seed), sizeof seed);
    out.write(reinterpret_cast<const char*>(&path.step), sizeof path.step);
    out.write(reinterpret_cast<const char*>(&count), sizeof count);
    out.write(reinterpret_cast<const char*>(path.values.data()), static_cast<std::streamsize>(count * sizeof(double)));
    require(static_cast<bool>(out), ErrorKind::io_error, "write failed for " + file);
}

BrownianPath load_binary(const std::string& file) {
    std::ifstream in(file, std::ios::binary);
    require(static_cast<bool>(in), ErrorKind::io_error, "cannot open " + file);
    char magic[8];
    in.read(magic, 8);
    require(in && std::memcmp(magic, kMagic, 8) == 0, ErrorKind::io_error, "bad magic in " + file);
    BrownianPath p;
    std::uint64_t count = 0;
    in.read(reinterpret_cast<char*>(&p.seed), sizeof p.seed);
    in.read(reinterpret_cast<char*>(&p.step), sizeof p.step);
    in.read(reinterpret_cast<char*>(&count), sizeof count);
    require(static_cast<bool>(in) && count >= 1, ErrorKind::io_error, "truncated header in " + file);
    p.values.resize(count);
    in.read(reinterpret_cast<char*>(p.values.data()), static_cast<std::streamsize>(count * sizeof(double)));
    require(static_cast<bool>(in), ErrorKind::io_error, "truncated data in " + file);
    p.horizon = static_cast<double>(count - 1) * p.step;
    return p;
}

void write_csv(const BrownianPath& path, std::ostream& out) {
    out << "t,W\n";
    for (std::size_t i = 0; i < path.values.size(); ++i) out << fmt_num(path.time(i)) << ',' << fmt_num(path.values[i]) << '\n';
}

}  // namespace edge
