#include "edge_ops/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <omp.h>

#include "edge_ops/errors.hpp"
#include "edge_ops/format.hpp"
#include "edge_ops/oracle.hpp"
#include "edge_ops/spectra.hpp"

namespace edge {

const char* const kVersion = "edge_ops-0.1.0";

namespace {

namespace fs = std::filesystem;

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string normalize_key(std::string k) {
    k = trim(k);
    std::replace(k.begin(), k.end(), '-', '_');
    return k;
}

double parse_double(const std::string& key, const std::string& v) {
    std::string s = trim(v);
    double x = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
        fail(ErrorKind::invalid_argument, key + ": '" + v + "' is not a number");
    return x;
}

long long parse_int(const std::string& key, const std::string& v) {
    std::string s = trim(v);
    long long x = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
        fail(ErrorKind::invalid_argument, key + ": '" + v + "' is not an integer");
    return x;
}

std::uint64_t parse_seed(const std::string& key, const std::string& v) {
    std::string s = trim(v);
    std::uint64_t x = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
        fail(ErrorKind::invalid_argument, key + ": '" + v + "' is not a non-negative integer");
    return x;
}

bool parse_bool(const std::string& key, const std::string& v) {
    std::string s = trim(v);
    if (s == "1" || s == "true" || s == "yes") return true;
    if (s == "0" || s == "false" || s == "no") return false;
    fail(ErrorKind::invalid_argument, key + ": '" + v + "' is not a boolean");
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    if (trim(v).empty()) return out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(key, item));
    return out;
}

std::string choice(const std::string& key, const std::string& v, std::initializer_list<const char*> allowed) {
    std::string s = trim(v);
    std::string list;
    for (const char* a : allowed) {
        if (s == a) return s;
        list += list.empty() ? a : std::string(", ") + a;
    }
    fail(ErrorKind::invalid_argument, key + ": '" + v + "' is not one of " + list);
}

Command parse_command(const std::string& v) {
    std::string s = choice("command", v, {"transition-sweep", "spectrum", "oracle-compare", "diagnostics"});
    if (s == "spectrum") return Command::spectrum;
    if (s == "oracle-compare") return Command::oracle_compare;
    if (s == "diagnostics") return Command::diagnostics;
    return Command::transition_sweep;
}

std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt_num(v[i]);
    return s;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream f(p, std::ios::binary);
    require(static_cast<bool>(f), ErrorKind::io_error, "cannot write " + p.string());
    return f;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream f = open_out(p);
    f << text;
    require(static_cast<bool>(f), ErrorKind::io_error, "write failed for " + p.string());
}

NoiseGrid prefix_of(const NoiseGrid& g, double T) {
    auto it = std::upper_bound(g.t.begin(), g.t.end(), T * (1.0 + 1e-12) + 1e-15);
    NoiseGrid out;
    out.t.assign(g.t.begin(), it);
    out.b.assign(g.b.begin(), g.b.begin() + (it - g.t.begin()));
    return out;
}

void write_replica_dumps(const RunManifest& m, const fs::path& dir) {
    const ExperimentConfig& c = m.config;
    for (std::uint64_t s : replica_seeds(c)) {
        ReplicaNoise rn = replica_noise(c, s);
        const std::string tag = std::to_string(s);
        if (m.save_paths) {
            save_binary(rn.path, (dir / ("path_" + tag + ".bin")).string());
            std::ofstream f = open_out(dir / ("path_" + tag + ".csv"));
            write_csv(rn.path, f);
        }
        if (!m.dump_trajectories && !m.dump_kernels) continue;
        NoiseGrid g = prefix_of(rn.grid, c.grid_end());
        SolutionPair psi_d = airy_dirichlet(g, c.beta, g.horizon());
        if (m.dump_trajectories) {
            std::ofstream f = open_out(dir / ("trajectory_" + tag + ".csv"));
            write_trajectory_csv(psi_d, f);
        }
        if (m.dump_kernels) {
            SolutionPair psi_s = airy_neumann(g, c.beta, g.horizon());
            TriangularKernel K = assemble_kernel(psi_d, airy_truncated(psi_d, psi_s, c.L), 1.0, c.L);
            std::size_t stride = std::max<std::size_t>(1, K.size() / 150);
            std::ofstream f = open_out(dir / ("kernel_" + tag + ".csv"));
            write_kernel_csv(K, f, stride);
            write_file(dir / ("kernel_" + tag + ".json"), kernel_summary_json(K, c.beta, c.h) + "\n");
        }
    }
}

int run_sweep(const RunManifest& m, const fs::path& dir, std::ostream& log) {
    std::vector<RunRecord> records = run_coupled_sweep(m.config);
    if (m.format == OutputFormat::csv) {
        std::ofstream f = open_out(dir / "records.csv");
        write_records_csv(records, f);
    } else {
        std::ofstream f = open_out(dir / "records.jsonl");
        write_records_jsonl(records, f);
    }
    write_replica_dumps(m, dir);
    std::size_t flagged = static_cast<std::size_t>(
        std::count_if(records.begin(), records.end(), [](const RunRecord& r) { return r.flag_collision; }));
    log << "transition-sweep: " << records.size() << " records, " << flagged << " collision-flagged\n";
    return !records.empty() && flagged == records.size() ? 2 : 0;
}

int run_diagnostics(const RunManifest& m, const fs::path& dir, std::ostream& log) {
    ExperimentConfig c = m.config;
    c.hw_k = 0;
    std::vector<RunRecord> records = run_coupled_sweep(c);
    std::map<std::uint64_t, double> drift;
    for (std::uint64_t s : replica_seeds(c)) {
        ReplicaNoise rn = replica_noise(c, s);
        NoiseGrid g = prefix_of(rn.grid, c.grid_end());
        double d = std::numeric_limits<double>::quiet_NaN();
        try {
            SolutionPair psi_d = airy_dirichlet(g, c.beta, g.horizon());
            SolutionPair psi_inf = airy_infty(psi_d, g, g.horizon());
            d = 0.0;
            for (double w : wronskian(psi_d, psi_inf)) d = std::max(d, std::fabs(w + 1.0));
        } catch (const Error&) {
        }
        drift[s] = d;
    }
    if (m.format == OutputFormat::json) {
        std::ofstream f = open_out(dir / "diagnostics.jsonl");
        for (const RunRecord& r : records) {
            nlohmann::ordered_json j = nlohmann::ordered_json::parse(record_json(r));
            double d = drift[r.seed];
            j["wronskian_drift"] = std::isnan(d) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(d);
            f << j.dump() << '\n';
        }
    } else {
        std::ofstream f = open_out(dir / "diagnostics.csv");
        f << "seed,a,band_entry_time,sigma_10,band_holds_to_end,e62,e63,e64,fluctuation_C,wronskian_drift\n";
        auto opt = [](const std::optional<double>& x) { return x ? fmt_num(*x) : std::string("nan"); };
        auto ev = [](const std::optional<BesselEvents>& e, bool BesselEvents::*field) {
            return e ? std::string((*e).*field ? "1" : "0") : std::string("nan");
        };
        for (const RunRecord& r : records) {
            const RecordDiagnostics& d = r.diagnostics;
            f << r.seed << ',' << fmt_num(r.a) << ',' << opt(d.band.T_entry) << ',' << opt(d.band.sigma_s) << ','
              << (d.band.holds_to_end ? 1 : 0) << ',' << ev(d.events, &BesselEvents::e62) << ','
              << ev(d.events, &BesselEvents::e63) << ',' << ev(d.events, &BesselEvents::e64) << ','
              << fmt_num(d.fluctuation_C) << ',' << fmt_num(drift[r.seed]) << '\n';
        }
    }
    write_replica_dumps(m, dir);
    log << "diagnostics: " << records.size() << " records\n";
    return 0;
}

int run_spectrum(const RunManifest& m, const fs::path& dir, std::ostream& log) {
    const ExperimentConfig& c = m.config;
    const SpectrumRequest& q = m.spectrum;
    const double T = c.count_T;
    SpectrumEstimate s;
    if (q.method == "kernel") {
        const double Lg = c.grid_end();
        NoiseGrid g = sample_grid(sample_path(c.seed, Lg, c.h), Lg, c.h);
        SolutionPair psi_d = airy_dirichlet(g, c.beta, g.horizon());
        SolutionPair psi_inf = airy_infty(psi_d, g, g.horizon(), RightOptions{1.0, c.tail_policy});
        s = eigs_from_kernel(assemble_kernel(psi_d, psi_inf, 1.0), static_cast<std::size_t>(q.k));
        s.beta = c.beta;
    } else {
        const double stretch = q.op == "bessel" && q.a > 1.0 ? std::pow(q.a, 2.0 / 3.0) : 1.0;
        BrownianPath path = sample_path(c.seed, 2.0 * T * stretch, c.h);
        OperatorDescriptor op;
        if (q.op == "airy")
            op = airy_operator(sample_grid(path, 2.0 * T, c.h), c.beta);
        else if (q.op == "bessel")
            op = bessel_operator(scaled_grid(path, q.a, 2.0 * T, c.h), c.beta, q.a);
        else
            op = scaled_operator(sample_grid(path, 2.0 * T, c.h), c.beta, q.a);
        s = eigs_by_bisection(op, static_cast<std::size_t>(q.k), q.tol, T);
    }
    write_file(dir / "spectrum.json", spectrum_json(s) + "\n");
    log << "spectrum: " << s.eigenvalues.size() << " eigenvalues (" << to_string(s.method) << ")\n";
    return 0;
}

int run_oracle(const RunManifest& m, const fs::path& dir, std::ostream& log) {
    const ExperimentConfig& c = m.config;
    const OracleRequest& q = m.oracle;
    const bool hard = q.edge == "hard";
    const double T = c.count_T;
    const int N = q.samples;
    std::vector<double> op(static_cast<std::size_t>(N)), mat(static_cast<std::size_t>(N));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(N));
    bool advisory = false;
    if (!hard) advisory = soft_edge_scale({}, q.n, q.a_n).advisory;
    const int threads = c.jobs > 0 ? c.jobs : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 8) num_threads(threads)
    for (int i = 0; i < N; ++i) {
        const auto k = static_cast<std::size_t>(i);
        try {
            const std::uint64_t seed = c.seed + k;
            BrownianPath path = sample_path(seed, 2.0 * T, c.h);
            NoiseGrid g = sample_grid(path, 2.0 * T, c.h);
            TridiagonalModel model{q.n, c.beta, hard ? q.laguerre_a : q.a_n, seed};
            std::vector<double> ev = sample_laguerre(model);
            if (hard) {
                op[k] = eigs_by_bisection(bessel_operator(std::move(g), c.beta, 0.5 * q.laguerre_a), 1, 1e-6, T)
                            .eigenvalues[0];
                mat[k] = hard_edge_scale(ev, q.n)[0];
            } else {
                op[k] = eigs_by_bisection(airy_operator(std::move(g), c.beta), 1, 1e-6, T).eigenvalues[0];
                mat[k] = soft_edge_scale(ev, q.n, q.a_n).values[0];
            }
        } catch (...) {
            errors[k] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    const double ks = ks_two_sample(op, mat);
    nlohmann::ordered_json j = nlohmann::ordered_json::parse(distribution_summary_json(op, mat, ks));
    nlohmann::ordered_json out;
    out["edge"] = q.edge;
    out["n"] = q.n;
    out["beta"] = std::isinf(c.beta) ? nlohmann::ordered_json("inf") : nlohmann::ordered_json(c.beta);
    out["laguerre_a"] = hard ? q.laguerre_a : q.a_n;
    out["samples"] = N;
    out["advisory"] = advisory;
    for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = it.value();
    write_file(dir / "oracle_summary.json", out.dump(2) + "\n");
    std::ofstream f = open_out(dir / "oracle_samples.csv");
    f << "sample,operator,matrix\n";
    for (std::size_t i = 0; i < op.size(); ++i) f << i << ',' << fmt_num(op[i]) << ',' << fmt_num(mat[i]) << '\n';
    log << "oracle-compare: KS = " << fmt_num(ks) << (advisory ? " (outside the proved regime)" : "") << "\n";
    return 0;
}

}  // namespace

const char* to_string(Command c) {
    switch (c) {
        case Command::spectrum: return "spectrum";
        case Command::oracle_compare: return "oracle-compare";
        case Command::diagnostics: return "diagnostics";
        case Command::transition_sweep: break;
    }
    return "transition-sweep";
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{
        "command", "seed",      "beta",    "a_sweep", "L",       "L_grid", "h",         "replicas",
        "jobs",    "out",       "format",  "d1",      "d2",      "a1",     "L_diag",    "tail_policy",
        "T_tail",  "hw_k",      "count_T", "hw_tol",  "coarse_step", "operator", "method", "a",
        "k",       "tol",       "edge",    "samples", "n",       "laguerre_a", "a_n", "dump_trajectories",
        "dump_kernels", "save_paths", "version"};
    return keys;
}

void apply_setting(RunManifest& m, const std::string& raw_key, const std::string& v) {
    const std::string key = normalize_key(raw_key);
    ExperimentConfig& c = m.config;
    if (key == "command") m.command = parse_command(v);
    else if (key == "seed") c.seed = parse_seed(key, v);
    else if (key == "beta") c.beta = parse_double(key, v);
    else if (key == "a_sweep") c.a_sweep = parse_list(key, v);
    else if (key == "L") c.L = parse_double(key, v);
    else if (key == "L_grid") c.L_grid = parse_double(key, v);
    else if (key == "h") c.h = parse_double(key, v);
    else if (key == "replicas") c.replicas = static_cast<int>(parse_int(key, v));
    else if (key == "jobs") c.jobs = static_cast<int>(parse_int(key, v));
    else if (key == "out") m.output_dir = trim(v);
    else if (key == "format") m.format = choice(key, v, {"csv", "json"}) == "json" ? OutputFormat::json : OutputFormat::csv;
    else if (key == "d1") c.d1 = parse_double(key, v);
    else if (key == "d2") c.d2 = parse_double(key, v);
    else if (key == "a1") c.a1 = parse_double(key, v);
    else if (key == "L_diag") c.L_diag = parse_double(key, v);
    else if (key == "tail_policy")
        c.tail_policy = choice(key, v, {"asymptotic", "none"}) == "none" ? TailPolicy::none : TailPolicy::asymptotic;
    else if (key == "T_tail") c.T_tail = parse_double(key, v);
    else if (key == "hw_k") c.hw_k = static_cast<int>(parse_int(key, v));
    else if (key == "count_T") c.count_T = parse_double(key, v);
    else if (key == "hw_tol") c.hw_tol = parse_double(key, v);
    else if (key == "coarse_step") c.coarse_step = parse_double(key, v);
    else if (key == "operator") m.spectrum.op = choice(key, v, {"airy", "bessel", "scaled"});
    else if (key == "method") m.spectrum.method = choice(key, v, {"bisection", "kernel"});
    else if (key == "a") m.spectrum.a = parse_double(key, v);
    else if (key == "k") m.spectrum.k = static_cast<int>(parse_int(key, v));
    else if (key == "tol") m.spectrum.tol = parse_double(key, v);
    else if (key == "edge") m.oracle.edge = choice(key, v, {"hard", "soft"});
    else if (key == "samples") m.oracle.samples = static_cast<int>(parse_int(key, v));
    else if (key == "n") m.oracle.n = static_cast<int>(parse_int(key, v));
    else if (key == "laguerre_a") m.oracle.laguerre_a = parse_double(key, v);
    else if (key == "a_n") m.oracle.a_n = parse_double(key, v);
    else if (key == "dump_trajectories") m.dump_trajectories = parse_bool(key, v);
    else if (key == "dump_kernels") m.dump_kernels = parse_bool(key, v);
    else if (key == "save_paths") m.save_paths = parse_bool(key, v);
    else if (key == "version") {
        if (trim(v) != kVersion)
            fail(ErrorKind::invalid_argument,
                 "version: manifest written by '" + trim(v) + "', this build is '" + kVersion + "'");
    } else {
        std::string list;
        for (const std::string& k : config_keys()) list += (list.empty() ? "" : ", ") + k;
        fail(ErrorKind::invalid_argument, "unknown key '" + key + "'; valid keys: " + list);
    }
}

void apply_config_text(RunManifest& m, const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            fail(ErrorKind::invalid_argument, origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        try {
            apply_setting(m, line.substr(0, eq), line.substr(eq + 1));
        } catch (const Error& e) {
            std::string what = e.what();
            std::string prefix = std::string(to_string(e.kind())) + ": ";
            if (what.rfind(prefix, 0) == 0) what.erase(0, prefix.size());
            fail(e.kind(), origin + ":" + std::to_string(lineno) + ": " + what);
        }
    }
}

void validate(const RunManifest& m) {
    validate(m.config);
    auto bad = [](const std::string& s) { fail(ErrorKind::invalid_argument, s); };
    if (m.output_dir.empty()) bad("out must name a directory");
    if (m.command == Command::spectrum) {
        const SpectrumRequest& q = m.spectrum;
        if (q.k < 1) bad("k must be at least 1 (got " + std::to_string(q.k) + ")");
        if (!(q.tol > 0.0)) bad("tol must be positive (got " + fmt_num(q.tol) + ")");
        if (!(m.config.count_T > 0.0)) bad("count_T must be positive (got " + fmt_num(m.config.count_T) + ")");
        if (q.op == "bessel" && !(q.a >= 0.0)) bad("a must be non-negative for the bessel operator (got " + fmt_num(q.a) + ")");
        if (q.op == "scaled" && !(q.a > 0.5)) bad("a must exceed 1/2 for the scaled operator (got " + fmt_num(q.a) + ")");
        if (q.method == "kernel" && q.op != "airy")
            bad("method = kernel needs operator = airy (got operator = " + q.op + ")");
    }
    if (m.command == Command::oracle_compare) {
        const OracleRequest& q = m.oracle;
        if (q.samples < 1) bad("samples must be at least 1 (got " + std::to_string(q.samples) + ")");
        if (q.n < 1) bad("n must be at least 1 (got " + std::to_string(q.n) + ")");
        if (!(q.laguerre_a > -1.0)) bad("laguerre_a must exceed -1 (got " + fmt_num(q.laguerre_a) + ")");
        if (!(q.a_n > -1.0)) bad("a_n must exceed -1 (got " + fmt_num(q.a_n) + ")");
        if (!(m.config.count_T > 0.0)) bad("count_T must be positive (got " + fmt_num(m.config.count_T) + ")");
    }
}

std::optional<RunManifest> parse_and_validate(const std::vector<std::string>& args, const char* env_seed,
                                              std::ostream& out) {
    CLI::App app{"Coupled hard-to-soft edge operator experiments", "edge_ops"};
    app.set_help_flag("--help", "print this help");
    std::string config, seed, beta, a_sweep, L, h, replicas, jobs, outdir, format, command;
    std::vector<std::string> sets;
    bool dump_traj = false, dump_kernels = false, save_paths = false;
    app.add_option("--config", config, "key = value file");
    auto* o_seed = app.add_option("--seed", seed, "base seed (replicas use seed, seed + 1, ...)");
    auto* o_beta = app.add_option("--beta", beta, "beta > 0; inf switches the noise off");
    auto* o_sweep = app.add_option("--a-sweep", a_sweep, "ascending comma-separated a values");
    auto* o_L = app.add_option("--L", L, "truncation length");
    auto* o_h = app.add_option("--h", h, "grid step");
    auto* o_rep = app.add_option("--replicas", replicas, "number of replicas");
    auto* o_jobs = app.add_option("--jobs", jobs, "worker threads (0 = all)");
    auto* o_out = app.add_option("--out", outdir, "output directory");
    auto* o_fmt = app.add_option("--format", format, "csv or json");
    auto* o_cmd = app.add_option("--command", command,
                                 "transition-sweep | spectrum | oracle-compare | diagnostics");
    app.add_option("--set", sets, "KEY=VALUE override for any config key (repeatable)");
    app.add_flag("--dump-trajectories", dump_traj, "write the Airy Dirichlet trajectory of every replica");
    app.add_flag("--dump-kernels", dump_kernels, "write truncated Airy kernel grids and summaries");
    app.add_flag("--save-paths", save_paths, "write every base Brownian path (binary and CSV)");
    app.set_version_flag("--version", kVersion);

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return std::nullopt;
    } catch (const CLI::CallForVersion&) {
        out << kVersion << "\n";
        return std::nullopt;
    } catch (const CLI::ParseError& e) {
        fail(ErrorKind::invalid_argument, e.what());
    }

    RunManifest m;
    if (!config.empty()) {
        std::ifstream f(config, std::ios::binary);
        require(static_cast<bool>(f), ErrorKind::io_error, "cannot read config file " + config);
        std::stringstream ss;
        ss << f.rdbuf();
        apply_config_text(m, ss.str(), config);
    }
    if (env_seed != nullptr && *env_seed != '\0') m.config.seed = parse_seed("EDGE_OPS_SEED", env_seed);
    auto set = [&](CLI::Option* o, const char* key, const std::string& v) {
        if (o->count() > 0) apply_setting(m, key, v);
    };
    set(o_cmd, "command", command);
    set(o_seed, "seed", seed);
    set(o_beta, "beta", beta);
    set(o_sweep, "a_sweep", a_sweep);
    set(o_L, "L", L);
    set(o_h, "h", h);
    set(o_rep, "replicas", replicas);
    set(o_jobs, "jobs", jobs);
    set(o_out, "out", outdir);
    set(o_fmt, "format", format);
    for (const std::string& s : sets) {
        auto eq = s.find('=');
        require(eq != std::string::npos, ErrorKind::invalid_argument, "--set expects KEY=VALUE (got '" + s + "')");
        apply_setting(m, s.substr(0, eq), s.substr(eq + 1));
    }
    if (dump_traj) m.dump_trajectories = true;
    if (dump_kernels) m.dump_kernels = true;
    if (save_paths) m.save_paths = true;
    validate(m);
    return m;
}

std::string replay_text(const RunManifest& m) {
    const ExperimentConfig& c = m.config;
    std::ostringstream o;
    auto kv = [&o](const char* k, const std::string& v) { o << k << " = " << v << '\n'; };
    auto b = [](bool x) { return std::string(x ? "true" : "false"); };
    kv("command", to_string(m.command));
    kv("seed", std::to_string(c.seed));
    kv("beta", fmt_num(c.beta));
    kv("a_sweep", join(c.a_sweep));
    kv("L", fmt_num(c.L));
    kv("L_grid", fmt_num(c.L_grid));
    kv("h", fmt_num(c.h));
    kv("replicas", std::to_string(c.replicas));
    kv("jobs", std::to_string(c.jobs));
    kv("out", m.output_dir);
    kv("format", m.format == OutputFormat::json ? "json" : "csv");
    kv("d1", fmt_num(c.d1));
    kv("d2", fmt_num(c.d2));
    kv("a1", fmt_num(c.a1));
    kv("L_diag", fmt_num(c.L_diag));
    kv("tail_policy", c.tail_policy == TailPolicy::none ? "none" : "asymptotic");
    kv("T_tail", fmt_num(c.T_tail));
    kv("hw_k", std::to_string(c.hw_k));
    kv("count_T", fmt_num(c.count_T));
    kv("hw_tol", fmt_num(c.hw_tol));
    kv("coarse_step", fmt_num(c.coarse_step));
    kv("operator", m.spectrum.op);
    kv("method", m.spectrum.method);
    kv("a", fmt_num(m.spectrum.a));
    kv("k", std::to_string(m.spectrum.k));
    kv("tol", fmt_num(m.spectrum.tol));
    kv("edge", m.oracle.edge);
    kv("samples", std::to_string(m.oracle.samples));
    kv("n", std::to_string(m.oracle.n));
    kv("laguerre_a", fmt_num(m.oracle.laguerre_a));
    kv("a_n", fmt_num(m.oracle.a_n));
    kv("dump_trajectories", b(m.dump_trajectories));
    kv("dump_kernels", b(m.dump_kernels));
    kv("save_paths", b(m.save_paths));
    kv("version", kVersion);
    std::string seeds;
    const int count = m.command == Command::oracle_compare ? m.oracle.samples
                      : m.command == Command::spectrum     ? 1
                                                           : c.replicas;
    for (int i = 0; i < count; ++i) seeds += (i ? "," : "") + std::to_string(c.seed + static_cast<std::uint64_t>(i));
    o << "# seeds: " << seeds << '\n';
    return o.str();
}

int execute(const RunManifest& m, std::ostream& log) {
    validate(m);
    const fs::path dir(m.output_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    require(!ec && fs::is_directory(dir), ErrorKind::io_error, "cannot create output directory " + m.output_dir);
    write_file(dir / "replay.cfg", replay_text(m));
    switch (m.command) {
        case Command::spectrum: return run_spectrum(m, dir, log);
        case Command::oracle_compare: return run_oracle(m, dir, log);
        case Command::diagnostics: return run_diagnostics(m, dir, log);
        case Command::transition_sweep: break;
    }
    return run_sweep(m, dir, log);
}

int run_cli(const std::vector<std::string>& args, const char* env_seed, std::ostream& out, std::ostream& err) {
    try {
        std::optional<RunManifest> m = parse_and_validate(args, env_seed, out);
        if (!m) return 0;
        return execute(*m, err);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace edge
