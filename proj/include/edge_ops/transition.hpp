#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "edge_ops/noise.hpp"
#include "edge_ops/sde.hpp"
#include "edge_ops/slops.hpp"

namespace edge {

struct ExperimentConfig {
    std::uint64_t seed = 1;
    double beta = 2.0;
    std::vector<double> a_sweep{100.0, 1000.0};
    double L = 6.0;
    double L_grid = 0.0;  // 0 means L + 10
    double h = 1e-3;
    int replicas = 8;
    int jobs = 0;  // 0 means every available thread
    double d1 = 0.3;
    double d2 = 2.0;
    double a1 = 100.0;
    double L_diag = 10.0;
    TailPolicy tail_policy = TailPolicy::asymptotic;
    double T_tail = 3.0;      // hard-edge window end, in the original variable
    int hw_k = 3;             // eigenvalues per side for hw_dist; 0 skips it
    double count_T = 20.0;    // counting window for hw_dist
    double hw_tol = 1e-6;
    double coarse_step = 1e-3;

    double grid_end() const { return L_grid > 0.0 ? L_grid : L + 10.0; }
};

/// Throws invalid-argument naming the violated constraint.
void validate(const ExperimentConfig& c);

/// Seeds of the replicas: seed, seed + 1, ...
std::vector<std::uint64_t> replica_seeds(const ExperimentConfig& c);

struct BandDiagnostics {
    std::optional<double> T_entry;
    std::optional<double> sigma_s;
    bool holds_to_end = false;
};

struct BesselEvents {
    bool e62 = false;
    bool e63 = false;
    bool e64 = false;
};

struct RecordDiagnostics {
    BandDiagnostics band;
    std::optional<BesselEvents> events;  // only for a >= a1
    double fluctuation_C = 0.0;
};

struct RunRecord {
    std::uint64_t seed = 0;
    double a = 0.0;
    double hs_dist_truncated = 0.0;
    double airy_trunc_err = 0.0;
    double bessel_trunc_err = 0.0;
    double hw_dist = 0.0;  // NaN when not computed or undefined
    bool flag_collision = false;
    bool flag_band = false;
    RecordDiagnostics diagnostics;
    std::string note;  // error text of a flagged or partial record
};

struct TruncationTerms {
    double on_window = 0.0;   // squared HS norm of the defect on [0, L]^2
    double off_square = 0.0;  // squared norm on the part of the window outside [0, L]^2
    double tail = 0.0;        // closure beyond the window
    double value() const;     // square root of the sum
};

/// Half-square closed form 1/2 (int_0^L psi^2/psi(L)^2)^2 (int_L^inf psi(L)^2/psi^2)^2 with unit weight.
double khs_closed_form(const SolutionPair& psi_d, double L, double tail_rate);

TruncationTerms airy_truncation_terms(const SolutionPair& psi_d, double L, double L_grid,
                                      TailPolicy tail = TailPolicy::asymptotic);
/// HS estimate of K_A - K_A^(L); a zero of psi_d beyond L is invalid-argument.
double airy_truncation_error(const SolutionPair& psi_d, double L, double L_grid,
                             TailPolicy tail = TailPolicy::asymptotic);

TruncationTerms bessel_truncation_terms(const SolutionPair& phi_tilde_d, const SolutionPair& phi_tilde_infty, double L,
                                        double a, double L_grid, TailPolicy tail = TailPolicy::asymptotic);
double bessel_truncation_error(const SolutionPair& phi_tilde_d, const SolutionPair& phi_tilde_infty, double L, double a,
                               double L_grid, TailPolicy tail = TailPolicy::asymptotic);

/// Band |X - sqrt t| <= t^{-1/4} ln t (half width for sigma_s), scanned on grid times >= s.
BandDiagnostics riccati_band_diagnostics(const RiccatiPath& X, double s);

/// Events of the Bessel diffusion p on the original variable; noise_2a holds B_{2a} on the grid of p.
BesselEvents bessel_event_diagnostics(const RiccatiPath& p, const NoiseGrid& noise_2a, double a, double L_diag,
                                      double d1 = 0.3, double d2 = 2.0);

/// p(t) = a + a^{2/3} P(a^{2/3} t) from the soft-coordinate Riccati P.
RiccatiPath bessel_p_from_scaled(const RiccatiPath& P, double a);
/// B_{2a}(t) = a^{-1/3} B(a^{2/3} t) read off a soft-coordinate grid.
NoiseGrid hard_noise_from_soft(const NoiseGrid& soft, double a);

/// Shared noise of one replica: the base path and the grid refined to step h on the fine prefix.
struct ReplicaNoise {
    BrownianPath path;
    NoiseGrid grid;
    double fine_end = 0.0;  // end of the step-h prefix
};
ReplicaNoise replica_noise(const ExperimentConfig& c, std::uint64_t seed);

/// All records of one replica, a ascending.
std::vector<RunRecord> run_replica(const ExperimentConfig& c, std::uint64_t seed);

/// Records ordered by (replica, a); replicas run on OpenMP threads unless jobs == 1.
std::vector<RunRecord> run_coupled_sweep(const ExperimentConfig& c);
std::vector<RunRecord> run_coupled_sweep_serial(const ExperimentConfig& c);

extern const char* const kRecordCsvHeader;
void write_records_csv(const std::vector<RunRecord>& records, std::ostream& out);
/// One JSON object per line.
void write_records_jsonl(const std::vector<RunRecord>& records, std::ostream& out);
std::string record_json(const RunRecord& r);

}  // namespace edge
