#include <cmath>
#include <numbers>

#include "doctest.h"
#include "sirlt/bounds.hpp"

using namespace sirlt;

TEST_CASE("names round trip") {
    for (BoundId id : all_bound_ids()) CHECK(parse_bound_id(bound_id_name(id)) == id);
    CHECK(all_bound_ids().size() == 10);
    CHECK_THROWS(parse_bound_id("nope"));
}

TEST_CASE("lclt_bd at n=1, x=0 gives 2 pi / 5") {
    const KernelTable tb(WalkSpec(2), 4);
    BoundParams p;
    p.n_ladder = {1};
    p.radius = 0;
    const auto r = verify_bounds(BoundId::LcltBd, p, tb);
    CHECK(r.constant == doctest::Approx(2.0 * std::numbers::pi / 5.0).epsilon(1e-14));
    CHECK(r.witness == "n=1 x=(0,0)");
    CHECK(r.evaluated == 1);
    CHECK(r.pass);
    CHECK_FALSE(r.zero_rhs);
}

TEST_CASE("green_bd at k=1 by hand") {
    const KernelTable tb(WalkSpec(2), 1);
    BoundParams p;
    p.k_ladder = {1};
    const auto r = verify_bounds(BoundId::GreenBd, p, tb);
    // Sites with |x| <= 1: the origin gives phi_1(0) / P_1(0) = 5 / (2 pi).
    CHECK(r.constant == doctest::Approx(5.0 / (2.0 * std::numbers::pi)).epsilon(1e-14));
    CHECK(r.evaluated == 5);
}

TEST_CASE("scan constants grow with the scan") {
    const KernelTable tb(WalkSpec(2), 16);
    for (BoundId id : {BoundId::LcltBd, BoundId::PDiff, BoundId::PDiffAlpha, BoundId::DisConv}) {
        BoundParams small;
        small.n_ladder = {1, 2, 4};
        small.m_ladder = {1, 2};
        small.radius = 3;
        small.offset = 1;
        BoundParams big = small;
        big.n_ladder = {1, 2, 4, 8, 16};
        big.m_ladder = {1, 2, 4};
        big.radius = 6;
        big.offset = 2;
        const auto a = verify_bounds(id, small, tb);
        const auto b = verify_bounds(id, big, tb);
        CAPTURE(bound_id_name(id));
        CHECK(b.constant >= a.constant);
        CHECK(b.evaluated > a.evaluated);
        CHECK(std::isfinite(b.constant));
    }
}

TEST_CASE("F and J suites are finite and deterministic") {
    const KernelTable tb(WalkSpec(2), 8);
    for (BoundId id : {BoundId::GreenIndc, BoundId::Conv, BoundId::GreenIndcB, BoundId::ConvB}) {
        BoundParams p;
        p.n_ladder = {2, 4, 8};
        p.m_ladder = {1, 3};
        p.radius = 3;
        p.offset = 1;
        const auto a = verify_bounds(id, p, tb);
        const auto b = verify_bounds(id, p, tb);
        CAPTURE(bound_id_name(id));
        CHECK(a.constant > 0.0);
        CHECK(std::isfinite(a.constant));
        CHECK_FALSE(a.zero_rhs);
        CHECK(a.constant == b.constant);
        CHECK(a.witness == b.witness);
    }
}

TEST_CASE("h = 1 ball is a single site") {
    // F_{n,1} F_{n,1} / F_{n,1} = F_{n,1}: the constant is max F / n^eta.
    const KernelTable tb(WalkSpec(2), 1);
    BoundParams p;
    p.n_ladder = {2};
    p.radius = 0;
    p.offset = 0;
    p.h_pairs = {{1, 1}};
    const auto r = verify_bounds(BoundId::GreenIndc, p, tb);
    const double f = 2.0 / (2.0 * std::numbers::pi);  // 2 phi_1(0), l = 1 only
    CHECK(r.constant == doctest::Approx(f / std::pow(2.0, 2.0 - (2.0 + 0.25) / 2.0)).epsilon(1e-14));
}

TEST_CASE("fg_central holds with equality for point masses") {
    const KernelTable tb(WalkSpec(2), 0);
    const auto r = verify_bounds(BoundId::FgCentral, standard_bound_params(BoundId::FgCentral, 2), tb);
    CHECK(r.pass);
    CHECK(r.constant == doctest::Approx(1.0));
}

TEST_CASE("parameter checks") {
    const KernelTable tb(WalkSpec(2), 4);
    BoundParams p;
    p.n_ladder = {1, 2};
    p.beta = 0.75;  // >= 1/sqrt 2
    CHECK_THROWS_AS(verify_bounds(BoundId::LcltBd, p, tb), std::invalid_argument);
    p.beta = 0.4;
    p.gamma = 1.0;  // >= 2 - d/2
    CHECK_THROWS_AS(verify_bounds(BoundId::GreenIndc, p, tb), std::invalid_argument);
    p.gamma = 0.25;
    p.n_ladder = {8};
    CHECK_THROWS_AS(verify_bounds(BoundId::LcltBd, p, tb), HorizonError);
    const KernelTable t3(WalkSpec(3), 4);
    CHECK_THROWS(verify_bounds(BoundId::LcltBd, p, t3));
}

TEST_CASE("report json") {
    const KernelTable tb(WalkSpec(2), 2);
    BoundParams p;
    p.n_ladder = {1, 2};
    p.radius = 2;
    const auto j = to_json(verify_bounds(BoundId::LcltBd, p, tb));
    CHECK(j.find("\"inequality\": \"lclt_bd\"") != std::string::npos);
    CHECK(j.find("\"witness\"") != std::string::npos);
}
