#include <catch2/catch_amalgamated.hpp>

#include "dyadlab/report.hpp"
#include "dyadlab/verify.hpp"

using namespace dyadlab;
using Catch::Approx;

namespace {

ExperimentSpec small_spec() {
    ExperimentSpec s;
    s.n = 1;
    s.L = 6;
    s.root_origin = -1.0;
    s.root_side = 2.0;
    s.sigma = "lebesgue";
    s.omega = "power:0.5:0";
    s.kernel = "hilbert";
    s.alpha = 0;
    s.cube_samples = 6;
    s.subset_samples = 4;
    s.pair_samples = 4;
    return s;
}

} // namespace

TEST_CASE("check records") {
    SECTION("vacuous when both sides vanish") {
        auto r = ratio_check("x", 0, 0, 10);
        CHECK(r.vacuous);
        CHECK(r.pass);
    }
    SECTION("pass iff ratio below ceiling") {
        CHECK(ratio_check("x", 5, 1, 10).pass);
        CHECK_FALSE(ratio_check("x", 50, 1, 10).pass);
    }
}

TEST_CASE("config parsing") {
    auto cfg = Config::parse_text(
        "[lattice]\nn = 1\nL = 7\nroot_origin = -1\nroot_side = 2\n"
        "[measures]\nsigma = lebesgue\nomega = power:0.5:0  # weight\n"
        "[experiment]\nseed = 42\n");
    auto spec = ExperimentSpec::from_config(cfg);
    CHECK(spec.L == 7);
    CHECK(spec.root_origin == -1.0);
    CHECK(spec.omega == "power:0.5:0");
    CHECK(spec.seed == 42);
}

TEST_CASE("experiment budget gate") {
    ExperimentSpec s = small_spec();
    s.L = 14;  // 16384 cells: matrix would be 2.7e8 entries
    CHECK_THROWS_AS(s.grid(), Error);
}

TEST_CASE("t1 chain on a small comparable pair") {
    auto recs = run_t1_chain(small_spec());
    REQUIRE(recs.size() >= 2);
    for (const auto& r : recs) {
        CHECK(r.pass);
        CHECK(std::isfinite(r.ratio));
    }
}

TEST_CASE("good-lambda suite") {
    ExperimentSpec s = small_spec();
    s.L = 7;
    s.alpha = 0.5;
    auto recs = run_goodlambda(s, 6, 4);
    bool found_fit = false;
    for (const auto& r : recs) {
        if (r.name == "good-lambda envelope exponent") {
            found_fit = true;
            CHECK(r.pass);
        }
        if (r.name == "maximum principle N") CHECK(r.pass);
    }
    CHECK(found_fit);
}

TEST_CASE("truncation uniformity suite") {
    auto recs = run_truncation_uniformity(small_spec(), 4);
    REQUIRE(recs.size() == 2);
    CHECK(recs[0].pass);
    CHECK(recs[1].pass);
    CHECK(recs[1].rhs == Approx(10.0));  // 2^1 (1 + 1/a)^1 with a = 1/4
}

TEST_CASE("polynomial testing control suite") {
    auto recs = run_poly_testing_control(small_spec());
    for (const auto& r : recs) CHECK(r.pass);
    CHECK(recs.back().name == "linear recovery identity (exact)");
    CHECK(recs.back().lhs == 0.0);
}

TEST_CASE("cancellation suite") {
    auto recs = run_cancellation(small_spec());
    for (const auto& r : recs) CHECK(r.pass);
}

TEST_CASE("wavelet and corona suites") {
    auto w = run_wavelets(small_spec());
    for (const auto& r : w) CHECK(r.pass);
    auto c = run_corona_suite(small_spec());
    for (const auto& r : c) CHECK(r.pass);
}

TEST_CASE("determinism: identical spec and seed give identical records") {
    auto a = run_t1_chain(small_spec());
    auto b = run_t1_chain(small_spec());
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].lhs == b[i].lhs);
        CHECK(a[i].rhs == b[i].rhs);
        CHECK(a[i].ratio == b[i].ratio);
    }
    // byte-identical serialized form
    CHECK(checks_to_csv(a) == checks_to_csv(b));
}

TEST_CASE("vacuity labeling in serialized reports") {
    std::vector<CheckRecord> recs{ratio_check("zero", 0, 0, 10)};
    auto csv = checks_to_csv(recs);
    CHECK(csv.find(",1,1,") != std::string::npos);  // pass=1, vacuous=1
    auto j = check_to_json(recs[0]);
    CHECK(j["vacuous"].get<bool>());
}
