// sirlt: command line front end for the simulators, exact moments and the
// experiment runner.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "sirlt/brw.hpp"
#include "sirlt/experiments.hpp"
#include "sirlt/kernel.hpp"
#include "sirlt/likelihood.hpp"
#include "sirlt/moments.hpp"
#include "sirlt/parallel.hpp"
#include "sirlt/sir.hpp"

using namespace sirlt;

namespace {

struct Common {
    std::string config;
    std::uint64_t seed = 1;
    bool seed_set = false;
    std::string out;
    unsigned workers = 1;
    std::string kernel_cache;
    std::vector<std::string> sets;
};

void add_common(CLI::App* app, Common& c, bool with_config) {
    if (with_config) app->add_option("--config", c.config, "Experiment config file (key = value lines)");
    app->add_option("--seed", c.seed, "Master seed")->each([&c](const std::string&) { c.seed_set = true; });
    app->add_option("--out", c.out, "Output directory (experiments) or file (default stdout)");
    app->add_option("--workers", c.workers, "Worker threads (0 = hardware)");
    app->add_option("--kernel-cache", c.kernel_cache, "Directory for cached kernel tables");
}

// Output stream: the --out file, or stdout.
class Sink {
public:
    explicit Sink(const std::string& path) {
        if (!path.empty()) {
            const auto parent = std::filesystem::path(path).parent_path();
            if (!parent.empty()) std::filesystem::create_directories(parent);
            file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
            if (!*file_) throw std::runtime_error("cannot write " + path);
        }
    }
    std::ostream& os() { return file_ ? *file_ : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

Site parse_site(const std::string& s, int d) {
    Site out{0, 0, 0};
    std::istringstream is(s);
    std::string part;
    int a = 0;
    while (std::getline(is, part, ',')) {
        if (a >= d) throw CLI::ValidationError("--site", "too many coordinates");
        out[static_cast<std::size_t>(a++)] = std::stoi(part);
    }
    if (a != d) throw CLI::ValidationError("--site", "needs d coordinates");
    return out;
}

std::string kernel_file(const Common& c, int d) {
    if (c.kernel_cache.empty()) return {};
    std::filesystem::create_directories(c.kernel_cache);
    return (std::filesystem::path(c.kernel_cache) / ("kernel_d" + std::to_string(d) + ".bin")).string();
}

OffspringLaw make_law(const std::string& name, std::int64_t village) {
    if (name == "poisson") return OffspringLaw::poisson_unit();
    if (name == "envelope") return OffspringLaw::envelope(village);
    throw CLI::ValidationError("--law", "expected poisson or envelope");
}

// Experiment subcommands share one path: config file (optional), forced
// mode, then --set overrides and the common flags.
int run_mode(const Common& c, const std::string& mode) {
    std::vector<std::pair<std::string, std::string>> ov;
    for (const auto& s : c.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            std::cerr << "config error: --set expects key=value, got '" << s << "'\n";
            return kExitConfig;
        }
        ov.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    if (c.seed_set) ov.emplace_back("seed", std::to_string(c.seed));
    if (!c.out.empty()) ov.emplace_back("out_dir", c.out);
    RunOptions opt;
    opt.workers = c.workers;
    opt.kernel_cache = c.kernel_cache;

    RawConfig raw;
    if (!c.config.empty()) {
        try {
            raw = load_config_file(c.config);
        } catch (const ConfigError& e) {
            std::cerr << "config error: " << e.what() << "\n";
            return kExitConfig;
        }
    } else {
        raw.source = "<command line>";
    }
    if (!mode.empty()) {
        const auto* m = raw.find("mode");
        if (m && m->value != mode) {
            std::cerr << "config error: " << raw.source << ":" << m->line << ": mode: this subcommand runs " << mode
                      << ", the config asks for " << m->value << "\n";
            return kExitConfig;
        }
        if (!m) raw.items.push_back({"mode", mode, 0});
    }
    return run_raw(std::move(raw), opt, std::cout, std::cerr, ov);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sirlt: branching envelopes, SIR epidemics and local-time diagnostics on Z^d"};
    app.set_version_flag("--version", library_version());
    app.require_subcommand(1);

    // kernel
    Common ck;
    int k_d = 2, k_n = 10;
    std::string k_site = "";
    bool k_check = false;
    auto* kernel = app.add_subcommand("kernel", "Transition kernel P_n and Green function G_n of the lazy walk");
    add_common(kernel, ck, false);
    kernel->add_option("--d", k_d, "Dimension (2 or 3)")->check(CLI::IsMember({2, 3}));
    kernel->add_option("--n", k_n, "Largest step")->check(CLI::NonNegativeNumber);
    kernel->add_option("--site", k_site, "Site x,y[,z] (default origin)");
    kernel->add_flag("--check", k_check, "Run the exactness check (mass, symmetry, Chapman-Kolmogorov)");

    // brw
    Common cb;
    int b_d = 2, b_horizon = 20, b_mass = 10;
    std::size_t b_reps = 1;
    std::string b_law = "poisson";
    std::int64_t b_village = 100;
    bool b_traj = false;
    auto* brw = app.add_subcommand("brw", "Branching random walk replicates (summary CSV or one trajectory)");
    add_common(brw, cb, false);
    brw->add_option("--d", b_d)->check(CLI::IsMember({2, 3}));
    brw->add_option("--horizon", b_horizon)->check(CLI::NonNegativeNumber);
    brw->add_option("--mu-mass", b_mass, "Particles at the origin")->check(CLI::NonNegativeNumber);
    brw->add_option("--reps", b_reps);
    brw->add_option("--law", b_law, "poisson or envelope");
    brw->add_option("--village", b_village, "Village size N for the envelope law");
    brw->add_flag("--trajectory", b_traj, "Write every generation of replicate 0");

    // sir
    Common cs;
    int s_d = 2;
    std::int64_t s_village = 1000;
    double s_alpha = -1.0, s_horizon_t = 2.0;
    std::size_t s_reps = 100;
    auto* sir = app.add_subcommand("sir", "Coupled envelope / standard / modified epidemic runs");
    add_common(sir, cs, false);
    sir->add_option("--d", s_d)->check(CLI::IsMember({2, 3}));
    sir->add_option("--village", s_village)->check(CLI::PositiveNumber);
    sir->add_option("--alpha", s_alpha, "Initial mass exponent (default 1/(3-d/2))");
    sir->add_option("--horizon-t", s_horizon_t, "Horizon in units of N^alpha generations");
    sir->add_option("--reps", s_reps);

    // exact
    Common ce;
    int e_d = 2, e_n = 5, e_h = 2;
    std::string e_site = "", e_conv = "gen_0_to_n_minus_1";
    double e_theta = 1.0;
    auto* exact = app.add_subcommand("exact", "Cumulant recursion for psi = theta * indicator of a site (JSON)");
    add_common(exact, ce, false);
    exact->add_option("--d", e_d)->check(CLI::IsMember({2, 3}));
    exact->add_option("--n", e_n)->check(CLI::NonNegativeNumber);
    exact->add_option("--order", e_h, "Largest cumulant order h")->check(CLI::PositiveNumber);
    exact->add_option("--site", e_site);
    exact->add_option("--theta", e_theta);
    exact->add_option("--convention", e_conv, "gen_1_to_n or gen_0_to_n_minus_1");

    // lr
    Common cl;
    int l_d = 2, l_horizon = 4, l_mass = 3;
    std::int64_t l_village = 10;
    double l_alpha = 0.5;
    std::size_t l_reps = 1000;
    auto* lr = app.add_subcommand("lr", "Log likelihood ratios of Poisson envelope paths (per-replicate CSV)");
    add_common(lr, cl, false);
    lr->add_option("--d", l_d)->check(CLI::IsMember({2, 3}));
    lr->add_option("--village", l_village)->check(CLI::PositiveNumber);
    lr->add_option("--alpha", l_alpha);
    lr->add_option("--horizon", l_horizon)->check(CLI::NonNegativeNumber);
    lr->add_option("--mu-mass", l_mass)->check(CLI::NonNegativeNumber);
    lr->add_option("--reps", l_reps);

    // experiments
    struct Exp {
        const char* name;
        const char* mode;
        const char* help;
        Common c;
        CLI::App* app = nullptr;
    };
    std::vector<Exp> exps{
        {"converge", "local_time", "Local-time convergence diagnostic", {}},
        {"threshold", "threshold_sweep", "Threshold sweep across the critical exponent", {}},
        {"occupation", "occupation_time", "Occupation-time statistic at the origin (d=2)", {}},
        {"bounds", "bounds_suite", "Kernel and Green-function inequality scans", {}},
        {"run", "", "Run whatever mode the config file names", {}},
    };
    for (auto& e : exps) {
        e.app = app.add_subcommand(e.name, e.help);
        add_common(e.app, e.c, true);
        e.app->add_option("--set", e.c.sets, "Override a config key (key=value), repeatable");
        if (std::string(e.name) == "run") e.app->get_option("--config")->required();
    }

    CLI11_PARSE(app, argc, argv);

    try {
        for (auto& e : exps)
            if (e.app->parsed()) return run_mode(e.c, e.mode);

        if (kernel->parsed()) {
            Sink sink(ck.out);
            auto& os = sink.os();
            if (k_check) {
                const auto r = check_kernel_exactness(WalkSpec(k_d), k_n);
                os << "d=" << r.d << " n_max=" << r.n_max << " max_mass_error=" << r.max_mass_error
                   << " worst_row=" << r.worst_mass_row << " symmetric=" << r.symmetric << " symmetry_rows="
                   << r.symmetry_rows << " support_ok=" << r.support_ok << " max_ck_error=" << r.max_ck_error
                   << " ck_checks=" << r.ck_checks << " pass=" << r.pass() << "\n";
                return r.pass() ? 0 : kExitFail;
            }
            const Site x = k_site.empty() ? Site{0, 0, 0} : parse_site(k_site, k_d);
            const auto table = KernelTable::cached(kernel_file(ck, k_d), WalkSpec(k_d), k_n);
            os.precision(17);
            os << "n,P_n,G_n\n";
            for (int i = 0; i <= k_n; ++i) os << i << ',' << table.p(i, x) << ',' << table.green_at(i, x) << '\n';
            return 0;
        }

        if (brw->parsed()) {
            Sink sink(cb.out);
            const auto law = make_law(b_law, b_village);
            const auto mu = LatticeField::point(b_d, {0, 0, 0}, b_mass);
            if (b_traj) {
                write_trajectory_csv(sink.os(), brw_run(mu, law, b_horizon, RngContext(cb.seed, 0)));
                return 0;
            }
            const auto rows = parallel_map(b_reps, cb.workers, [&](std::size_t r) {
                return summarize(brw_run(mu, law, b_horizon, RngContext(cb.seed, r)), r);
            });
            write_brw_summary_header(sink.os());
            for (const auto& s : rows) write_brw_summary_row(sink.os(), s);
            return 0;
        }

        if (sir->parsed()) {
            Sink sink(cs.out);
            const double alpha = s_alpha > 0 ? s_alpha : critical_alpha(s_d);
            const auto fam = build_family(s_d == 2 ? FamilyKind::PointSpreadD2 : FamilyKind::BallBoundedD3, {});
            const auto mu = threshold_initial(fam, s_village, alpha);
            const int H = static_cast<int>(std::ceil(s_horizon_t * std::pow(double(s_village), alpha)));
            const auto law = OffspringLaw::envelope(s_village);
            const auto runs = parallel_map(s_reps, cs.workers, [&](std::size_t r) {
                return coupled_run(mu, s_village, alpha, H, law, RngContext(cs.seed, r));
            });
            write_coupled_header(sink.os());
            for (std::size_t r = 0; r < runs.size(); ++r) write_coupled_row(sink.os(), r, s_d, runs[r]);
            return 0;
        }

        if (exact->parsed()) {
            Sink sink(ce.out);
            const Site x = e_site.empty() ? Site{0, 0, 0} : parse_site(e_site, e_d);
            BoxGrid psi(e_d, x, x);
            psi[x] = e_theta;
            const auto t = cumulant_recursion(psi, e_h, e_n, OffspringLaw::poisson_unit(), parse_convention(e_conv),
                                              CumulantEngine::Direct);
            sink.os() << to_json(t) << '\n';
            return 0;
        }

        if (lr->parsed()) {
            Sink sink(cl.out);
            const auto mu = LatticeField::point(l_d, {0, 0, 0}, l_mass);
            const auto law = OffspringLaw::poisson_unit();
            const auto rows = parallel_map(l_reps, cl.workers, [&](std::size_t r) {
                return log_lr(brw_run(mu, law, l_horizon, RngContext(cl.seed, r)), l_village, l_alpha);
            });
            auto& os = sink.os();
            os.precision(17);
            os << "replicate,log_lr,s1,s2,epsilon,active\n";
            for (std::size_t r = 0; r < rows.size(); ++r)
                os << r << ',' << rows[r].log_lr << ',' << rows[r].s1 << ',' << rows[r].s2 << ',' << rows[r].epsilon
                   << ',' << rows[r].active << '\n';
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}
