#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "sirlt/config.hpp"

using namespace sirlt;

namespace {

ExperimentConfig from_text(const std::string& text) { return build_config(parse_config_text(text, "t.cfg")); }

template <class F>
ConfigError catch_config(F&& f) {
    try {
        f();
    } catch (const ConfigError& e) {
        return e;
    }
    FAIL("expected a ConfigError");
    return ConfigError("", 0, "", "");
}

}  // namespace

TEST_CASE("parse: comments, blanks and values") {
    const auto raw = parse_config_text("# top\n\nmode = local_time   # trailing\n d=3\n", "x");
    REQUIRE(raw.items.size() == 2);
    CHECK(raw.items[0].key == "mode");
    CHECK(raw.items[0].value == "local_time");
    CHECK(raw.items[1].line == 4);
    CHECK(raw.find("d")->value == "3");
    CHECK(raw.find("seed") == nullptr);
}

TEST_CASE("mode defaults are filled in") {
    const auto lt = from_text("mode = local_time\n");
    CHECK(lt.d == 2);
    CHECK(lt.family == "point_spread_d2");
    CHECK(lt.k_ladder == std::vector<int>{16, 64, 256});
    CHECK(lt.probe_t == std::vector<double>{0.5});
    CHECK(lt.probe_x == std::vector<double>{0.0, 0.0});
    CHECK(lt.replicates_at(2) == 10000);

    const auto lt3 = from_text("mode = local_time\nd = 3\n");
    CHECK(lt3.family == "ball_bounded_d3");
    CHECK(lt3.probe_x.size() == 3);

    const auto th = from_text("mode = threshold_sweep\n");
    CHECK(th.alpha == doctest::Approx(0.5));
    CHECK(th.village_ladder == std::vector<std::int64_t>{1000, 10000, 100000});
    CHECK(from_text("mode = threshold_sweep\nd = 3\nfamily = ball_bounded_d3\n").alpha == doctest::Approx(2.0 / 3.0));

    const auto bs = from_text("mode = bounds_suite\n");
    CHECK(bs.inequalities.size() == 10);
    CHECK(from_text("mode = bounds_suite\ninequalities = lclt_bd, fg_central\n").inequalities.size() == 2);
}

TEST_CASE("lists, integers in exponent form and per-level replicates") {
    const auto c = from_text("mode = coupling\nvillage_ladder = 1e3, 1e4\nreplicates = 10, 20\nseed = 42\n");
    CHECK(c.village_ladder == std::vector<std::int64_t>{1000, 10000});
    CHECK(c.replicates_at(0) == 10);
    CHECK(c.replicates_at(1) == 20);
    CHECK(c.seed == 42);
}

TEST_CASE("errors carry line and field") {
    auto e = catch_config([] { from_text("mode = local_time\n\nk_ladder = 16, 8\n"); });
    CHECK(e.line() == 3);
    CHECK(e.field() == "k_ladder");

    e = catch_config([] { from_text("mode = local_time\nbogus = 1\n"); });
    CHECK(e.line() == 2);
    CHECK(e.field() == "bogus");

    e = catch_config([] { from_text("mode = local_time\nseed = abc\n"); });
    CHECK(e.line() == 2);
    CHECK(e.field() == "seed");

    e = catch_config([] { from_text("d = 2\n"); });
    CHECK(e.field() == "mode");
    CHECK(e.line() == 0);

    e = catch_config([] { from_text("mode = threshold_sweep\nalpha = 0.6\n"); });
    CHECK(e.line() == 2);
    CHECK(e.field() == "alpha");

    e = catch_config([] { from_text("mode = occupation_time\nd = 3\n"); });
    CHECK(e.field() == "d");

    e = catch_config([] { from_text("mode = local_time\nprobe_x = 0\n"); });
    CHECK(e.field() == "probe_x");

    e = catch_config([] { from_text("mode = local_time\nreplicates = 1, 2\n"); });
    CHECK(e.field() == "replicates");

    e = catch_config([] { from_text("mode = local_time\nmode = coupling\n"); });
    CHECK(e.line() == 2);

    e = catch_config([] { from_text("mode = nothing\n"); });
    CHECK(e.field() == "mode");

    e = catch_config([] { from_text("mode = local_time\nfamily = ball_bounded_d3\n"); });
    CHECK(e.field() == "family");

    e = catch_config([] { parse_config_text("mode local_time\n", "t.cfg"); });
    CHECK(e.line() == 1);
}

TEST_CASE("threshold sweep accepts alpha up to the critical exponent") {
    CHECK_NOTHROW(from_text("mode = threshold_sweep\nalpha = 0.5\n"));
    CHECK_NOTHROW(from_text("mode = threshold_sweep\nalpha = 0.25\n"));
    CHECK(critical_alpha(2) == 0.5);
    CHECK(critical_alpha(3) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("missing file") {
    const auto e = catch_config([] { load_config_file("/nonexistent/dir/x.cfg"); });
    CHECK(e.line() == 0);
    CHECK(std::string(e.what()).find("cannot open") != std::string::npos);
}

TEST_CASE("canonical text and hash") {
    const auto a = from_text("mode = local_time\n");
    const auto b = from_text("# same thing, explicit\nmode = local_time\nd = 2\nk_ladder = 16,64,256\nout_dir = elsewhere\n");
    CHECK(canonical_config(a) == canonical_config(b));
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a).size() == 16);
    const auto c = from_text("mode = local_time\nseed = 2\n");
    CHECK(config_hash(a) != config_hash(c));
    // Every default is spelled out.
    const auto text = canonical_config(a);
    for (const char* key : {"alpha = ", "beta = ", "family.cap = ", "ks_resolution = ", "se_multiplier = "})
        CHECK(text.find(key) != std::string::npos);
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}
