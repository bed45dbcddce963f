#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sirlt/bounds.hpp"
#include "sirlt/brw.hpp"
#include "sirlt/config.hpp"
#include "sirlt/families.hpp"
#include "sirlt/kernel.hpp"
#include "sirlt/likelihood.hpp"

namespace sirlt {

/// Version string baked in at build time (reported for provenance).
std::string library_version();

/// Requested KS resolution cannot be reached with the configured replicates.
class InsufficientReplicatesError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Verdict { Pass, Fail, Inconclusive, Report };
std::string verdict_name(Verdict v);

struct LevelStat {
    std::size_t level = 0;
    double param = 0.0;  // k or N
    std::string stat;
    double value = 0.0;
    double se = 0.0;     // 0 when not applicable
    std::size_t n = 0;
};

struct LadderDistance {
    std::string probe;
    double from = 0.0, to = 0.0;
    double ks = 0.0;
    double pvalue = 1.0;
    std::size_t n_from = 0, n_to = 0;
};

struct Check {
    std::string name;
    double value = 0.0;
    double bound = 0.0;
    bool pass = false;
};

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

struct DiagnosticReport {
    ExperimentConfig config;
    std::string hash;
    std::string version;
    std::vector<LevelStat> levels;
    std::vector<LadderDistance> distances;
    std::vector<Check> checks;
    Verdict trend = Verdict::Inconclusive;  // ladder trend alone
    Verdict verdict = Verdict::Inconclusive;
    std::vector<std::string> notes;
    Table replicates;
    std::vector<BoundReport> bounds;
    std::vector<ImportanceResult> importance;

    /// Values of one statistic along the ladder, in level order.
    std::vector<double> series(const std::string& stat) const;
};

// Pure verdict rules; they only look at numbers that are also in the CSVs.

/// Fewer than two values: Inconclusive. Otherwise Pass iff non-increasing.
Verdict nonincreasing_verdict(std::span<const double> seq);
/// Fewer than two values: Inconclusive. Otherwise Pass iff strictly decreasing.
Verdict strictly_decreasing_verdict(std::span<const double> seq);
/// `stat[i]` is the largest suppression statistic over the probe times at
/// ladder level i. Below the critical exponent it must fall strictly along
/// the ladder and end below `null_bound`; at the critical exponent it must
/// reach `threshold` at every level. One level: Inconclusive.
Verdict threshold_verdict(std::span<const double> stat, bool critical, double threshold, double null_bound);
/// Fail if any check fails, otherwise the trend verdict.
Verdict combine_verdict(Verdict trend, std::span<const Check> checks);

struct RunOptions {
    unsigned workers = 1;
    std::string kernel_cache;  // directory for cached kernel tables ("" = none)
};

/// Probe grid at level k: generation floor(k t) and site round(sqrt(k) x).
struct Probe {
    double t = 0.0;
    std::vector<double> x;
    int n = 0;
    Site site{0, 0, 0};
    std::string label;
};
std::vector<Probe> make_probes(int d, int k, std::span<const double> t_grid, std::span<const std::vector<double>> x_grid);

/// Y_k(t, x) = (R_{floor(kt)}(round(sqrt k x)) - (mu G_{floor(kt)})(round(sqrt k x))) / k^{2-d/2}
/// on the grid, indexed [t][x]. Throws HorizonError when floor(kt) exceeds
/// horizon + 1 (R_n needs X_0..X_{n-1}) or the kernel table.
std::vector<std::vector<double>> local_time_field(const Trajectory& traj, const LatticeField& mu, int k,
                                                  std::span<const double> t_grid,
                                                  std::span<const std::vector<double>> x_grid,
                                                  const KernelTable& table);

/// Replicate samples of Y_k at the probes ([probe][rep]) plus exact means.
struct LocalTimeLevel {
    int k = 0;
    std::vector<Probe> probes;
    std::vector<double> exact_mean;  // (mu G_n)(site), unscaled
    std::vector<std::vector<double>> samples;
};

LocalTimeLevel sample_local_time_level(const InitialConfigFamily& family, int k, std::span<const Probe> probes,
                                       std::size_t reps, std::uint64_t seed, unsigned workers);

/// Exact Var Y_k(t, x) from the second cumulant of R_n(site) summed over the
/// ancestors (critical Poisson offspring).
double local_time_variance(const LatticeField& mu, int k, const Probe& probe);

/// Counts sum_{1<=m<=floor(kt)} 1{X_m(0) > 0}, one per replicate.
std::vector<double> occupation_counts(const InitialConfigFamily& family, int k, double t, std::size_t reps,
                                      std::uint64_t seed, unsigned workers);

/// mu at level N: the family at k = round(N^alpha).
LatticeField threshold_initial(const InitialConfigFamily& family, std::int64_t village, double alpha);

DiagnosticReport converge_diagnostic(const ExperimentConfig& cfg, const RunOptions& opt);
DiagnosticReport threshold_sweep(const ExperimentConfig& cfg, const RunOptions& opt);
DiagnosticReport occupation_time_stat(const ExperimentConfig& cfg, const RunOptions& opt);
DiagnosticReport bounds_suite(const ExperimentConfig& cfg, const RunOptions& opt);
DiagnosticReport importance_battery(const ExperimentConfig& cfg, const RunOptions& opt);
DiagnosticReport coupling_diagnostic(const ExperimentConfig& cfg, const RunOptions& opt);

/// Dispatch on cfg.mode.
DiagnosticReport run_experiment(const ExperimentConfig& cfg, const RunOptions& opt);

std::string report_json(const DiagnosticReport& r);
void write_levels_csv(std::ostream& os, const DiagnosticReport& r);
void write_replicates_csv(std::ostream& os, const DiagnosticReport& r);
/// report.json, levels.csv, replicates.csv (plus bounds.csv or
/// importance.csv for those modes) under `dir`, created if needed.
/// Returns the paths written.
std::vector<std::string> write_report(const DiagnosticReport& r, const std::string& dir);

/// One line: mode, hash, verdict and the headline numbers.
std::string summary_line(const DiagnosticReport& r);

/// Exit codes of run().
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitFail = 3;

/// Load, validate, run and write. Config problems go to `err` with their
/// location; PASS, REPORT and INCONCLUSIVE exit 0, FAIL exits kExitFail.
int run(const std::string& config_path, const RunOptions& opt, std::ostream& out, std::ostream& err,
        const std::vector<std::pair<std::string, std::string>>& overrides = {});
/// Same on an already parsed config; overrides replace or add keys.
int run_raw(RawConfig raw, const RunOptions& opt, std::ostream& out, std::ostream& err,
            const std::vector<std::pair<std::string, std::string>>& overrides = {});

}  // namespace sirlt
