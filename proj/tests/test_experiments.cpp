#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "sirlt/experiments.hpp"
#include "sirlt/stats.hpp"

using namespace sirlt;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("sirlt_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

ExperimentConfig cfg_of(const std::string& text) { return build_config(parse_config_text(text, "t.cfg")); }

InitialConfigFamily point_spread() { return build_family(FamilyKind::PointSpreadD2, FamilyParams{}); }

}  // namespace

TEST_CASE("trend verdicts") {
    const std::vector<double> down{3, 2, 2}, strict{3, 2, 1}, up{1, 2}, one{1};
    CHECK(nonincreasing_verdict(down) == Verdict::Pass);
    CHECK(nonincreasing_verdict(up) == Verdict::Fail);
    CHECK(nonincreasing_verdict(one) == Verdict::Inconclusive);
    CHECK(strictly_decreasing_verdict(down) == Verdict::Fail);
    CHECK(strictly_decreasing_verdict(strict) == Verdict::Pass);

    const std::vector<double> crit{6, 7, 8}, weak{6, 4.9, 8}, fade{0.7, 0.3, 0.1}, stuck{9, 8, 7};
    CHECK(threshold_verdict(crit, true, 5, 4) == Verdict::Pass);
    CHECK(threshold_verdict(weak, true, 5, 4) == Verdict::Fail);
    CHECK(threshold_verdict(fade, false, 5, 4) == Verdict::Pass);
    CHECK(threshold_verdict(stuck, false, 5, 4) == Verdict::Fail);
    CHECK(threshold_verdict(one, true, 5, 4) == Verdict::Inconclusive);
    CHECK(threshold_verdict(one, false, 5, 4) == Verdict::Inconclusive);

    const std::vector<Check> ok{{"a", 0, 1, true}}, bad{{"a", 0, 1, true}, {"b", 2, 1, false}};
    CHECK(combine_verdict(Verdict::Pass, ok) == Verdict::Pass);
    CHECK(combine_verdict(Verdict::Pass, bad) == Verdict::Fail);
    CHECK(combine_verdict(Verdict::Inconclusive, ok) == Verdict::Inconclusive);
    CHECK(verdict_name(Verdict::Inconclusive) == "INCONCLUSIVE");
}

TEST_CASE("probes") {
    const std::vector<double> ts{0.5, 1.0};
    const std::vector<std::vector<double>> xs{{0.0, 0.0}, {0.5, -0.25}};
    const auto p = make_probes(2, 64, ts, xs);
    REQUIRE(p.size() == 4);
    CHECK(p[0].n == 32);
    CHECK(p[2].n == 64);
    CHECK(p[1].site == Site{4, -2, 0});
}

TEST_CASE("local time field: t = 0 is zero and matches the level sampler") {
    const auto fam = point_spread();
    const int k = 16;
    const auto mu = fam.generate(k);
    const KernelTable table(WalkSpec(2), 16);
    const std::vector<double> ts{0.0, 0.5, 1.0};
    const std::vector<std::vector<double>> xs{{0.0, 0.0}, {0.25, 0.0}};
    const auto probes = make_probes(2, k, ts, xs);
    const auto lvl = sample_local_time_level(fam, k, probes, 3, 7, 1);
    for (std::size_t r = 0; r < 3; ++r) {
        // Same replicate stream as the sampler.
        const auto traj = brw_run(mu, OffspringLaw::poisson_unit(), 16, RngContext(7, r).fork(k));
        const auto y = local_time_field(traj, mu, k, ts, xs, table);
        CHECK(y[0][0] == 0.0);
        CHECK(y[0][1] == 0.0);
        for (std::size_t ti = 0; ti < ts.size(); ++ti)
            for (std::size_t xi = 0; xi < xs.size(); ++xi)
                CHECK(y[ti][xi] == doctest::Approx(lvl.samples[ti * xs.size() + xi][r]).epsilon(1e-12));
    }
    const auto traj = brw_run(mu, OffspringLaw::poisson_unit(), 4, RngContext(1));
    CHECK_THROWS_AS(local_time_field(traj, mu, k, ts, xs, table), HorizonError);
}

TEST_CASE("two identical levels are at KS distance 0") {
    const auto fam = point_spread();
    const std::vector<double> ts{0.5};
    const std::vector<std::vector<double>> xs{{0.0, 0.0}};
    const auto probes = make_probes(2, 16, ts, xs);
    const auto a = sample_local_time_level(fam, 16, probes, 200, 3, 1);
    const auto b = sample_local_time_level(fam, 16, probes, 200, 3, 2);
    CHECK(a.samples == b.samples);
    CHECK(ks_distance(a.samples[0], b.samples[0]) == 0.0);
}

TEST_CASE("Y_k has mean zero and the cumulant variance") {
    const auto fam = point_spread();
    const int k = 16;
    const std::vector<double> ts{0.5};
    const std::vector<std::vector<double>> xs{{0.0, 0.0}};
    const auto probes = make_probes(2, k, ts, xs);
    const auto lvl = sample_local_time_level(fam, k, probes, 20000, 11, 1);
    const RunningStats st = summarize(lvl.samples[0]);
    CHECK(std::abs(st.mean()) <= 4.0 * st.se());
    const double v = local_time_variance(fam.generate(k), k, probes[0]);
    CHECK(v > 0.0);
    double m4 = 0.0;
    for (double y : lvl.samples[0]) m4 += std::pow(y - st.mean(), 4);
    m4 /= static_cast<double>(lvl.samples[0].size());
    const double se = std::sqrt((m4 - st.variance() * st.variance()) / static_cast<double>(lvl.samples[0].size()));
    CHECK(std::abs(st.variance() - v) <= 4.0 * se);
}

TEST_CASE("occupation counts vanish for t = 0 and for an empty family") {
    const auto fam = point_spread();
    for (double c : occupation_counts(fam, 64, 0.0, 20, 1, 1)) CHECK(c == 0.0);
    FamilyParams p;
    p.custom_d = 2;
    p.custom = [](int) { return LatticeField(2); };
    const auto empty = build_family(FamilyKind::Custom, p);
    for (double c : occupation_counts(empty, 64, 1.0, 20, 1, 1)) CHECK(c == 0.0);
    const auto some = occupation_counts(fam, 16, 1.0, 50, 1, 1);
    double tot = 0.0;
    for (double c : some) {
        CHECK(c >= 0.0);
        CHECK(c <= 16.0);
        tot += c;
    }
    CHECK(tot > 0.0);
}

TEST_CASE("threshold sweep with one level is inconclusive") {
    const auto cfg = cfg_of("mode = threshold_sweep\nvillage_ladder = 100\nreplicates = 30\nprobe_t = 0.5, 1\nhorizon_t = 1\n");
    const auto rep = threshold_sweep(cfg, {});
    CHECK(rep.verdict == Verdict::Inconclusive);
    CHECK(rep.series("max_suppression").size() == 1);
    CHECK(rep.replicates.rows.size() == 30);
}

TEST_CASE("KS resolution needs enough replicates") {
    const auto cfg = cfg_of("mode = local_time\nk_ladder = 4, 16\nreplicates = 50\nks_resolution = 0.05\n");
    CHECK_THROWS_AS(converge_diagnostic(cfg, {}), InsufficientReplicatesError);
}

TEST_CASE("local time diagnostic on a small ladder") {
    const auto cfg = cfg_of("mode = local_time\nk_ladder = 4, 16\nreplicates = 300\nvariance_k = 16\nprobe_t = 0.5, 1\n");
    const auto rep = converge_diagnostic(cfg, {});
    CHECK(rep.distances.size() == 2);
    CHECK(rep.trend == Verdict::Inconclusive);  // one distance per probe
    CHECK(rep.replicates.rows.size() == 600);
    CHECK(rep.replicates.columns.size() == 5);
    std::size_t var_checks = 0;
    for (const auto& c : rep.checks) var_checks += c.name.rfind("variance", 0) == 0;
    CHECK(var_checks == 2);
}

TEST_CASE("run: determinism, worker independence and missing config") {
    const auto dir = scratch_dir("run");
    const auto cfg = dir / "occ.cfg";
    std::ofstream(cfg) << "mode = occupation_time\nk_ladder = 8, 16\nreplicates = 40\nseed = 5\n";
    std::ostringstream out, err;
    RunOptions one;
    RunOptions three;
    three.workers = 3;
    // The verdict on such a short ladder may go either way; only the outputs matter here.
    const int code = run(cfg.string(), one, out, err, {{"out_dir", (dir / "a").string()}});
    CHECK((code == kExitOk || code == kExitFail));
    CHECK(run(cfg.string(), one, out, err, {{"out_dir", (dir / "b").string()}}) == code);
    CHECK(run(cfg.string(), three, out, err, {{"out_dir", (dir / "c").string()}}) == code);
    for (const char* f : {"replicates.csv", "levels.csv", "report.json"}) {
        CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
        CHECK(slurp(dir / "a" / f) == slurp(dir / "c" / f));
    }
    CHECK(slurp(dir / "a" / "report.json").find("\"schema\": \"sirlt.diagnostic_report/1\"") != std::string::npos);
    CHECK(out.str().find("occupation_time") != std::string::npos);

    std::ostringstream out2, err2;
    CHECK(run((dir / "missing.cfg").string(), one, out2, err2) != 0);
    CHECK(err2.str().find("cannot open") != std::string::npos);

    std::ofstream(dir / "bad.cfg") << "mode = local_time\nk_ladder = 16, 4\n";
    std::ostringstream out3, err3;
    CHECK(run((dir / "bad.cfg").string(), one, out3, err3) == kExitConfig);
    CHECK(err3.str().find(":2: k_ladder") != std::string::npos);
}

TEST_CASE("bounds suite writes reports and records a baseline") {
    const auto dir = scratch_dir("bounds");
    const auto cfg_path = dir / "b.cfg";
    std::ofstream(cfg_path) << "mode = bounds_suite\ninequalities = lclt_bd, fg_central\nbounds_baseline = "
                            << (dir / "base.json").string() << "\nout_dir = " << (dir / "out").string() << "\n";
    std::ostringstream out, err;
    CHECK(run(cfg_path.string(), {}, out, err) == kExitOk);
    CHECK(fs::exists(dir / "base.json"));
    CHECK(fs::exists(dir / "out" / "bounds.csv"));
    CHECK(run(cfg_path.string(), {}, out, err) == kExitOk);
    const auto rep = slurp(dir / "out" / "report.json");
    CHECK(rep.find("lclt_bd.baseline") != std::string::npos);
    CHECK(rep.find("\"verdict\": \"PASS\"") != std::string::npos);
}
