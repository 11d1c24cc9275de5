#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "imcdse/dnn.hpp"
#include "imcdse/errors.hpp"
#include "imcdse/explorer.hpp"
#include "support.hpp"

using namespace imcdse;

TEST_CASE("INT4 quantization") {
    auto q = quantize_int4({-1.4, 0.0, 0.7, 0.35, 1.39});
    CHECK(q.scale == doctest::Approx(1.4 / 7));
    CHECK(q.codes == std::vector<int>{-7, 0, 4, 2, 7});
    auto z = quantize_int4({0.0, 0.0});
    CHECK(z.scale == 1.0);
    CHECK(z.codes == std::vector<int>{0, 0});
}

TEST_CASE("exact backend is integer multiplication") {
    auto be = MulBackend::exact();
    for (int a = -7; a <= 7; ++a)
        for (int b = -7; b <= 7; ++b) CHECK(signed_mul(a, b, be) == a * b);
}

TEST_CASE("LUT backend uses sign-magnitude around the unsigned code") {
    SweepResult s;
    s.pairs.resize(256);
    for (int i = 0; i < 256; ++i) {
        s.pairs[i].a = i / 16;
        s.pairs[i].b = i % 16;
        s.pairs[i].code = (i / 16) * (i % 16) + (i % 3);
    }
    auto be = MulBackend::from_lut("x", s);
    CHECK(signed_mul(3, 5, be) == s.pairs[3 * 16 + 5].code);
    CHECK(signed_mul(-3, 5, be) == -s.pairs[3 * 16 + 5].code);
    CHECK(signed_mul(3, -5, be) == -s.pairs[3 * 16 + 5].code);
    CHECK(signed_mul(-3, -5, be) == s.pairs[3 * 16 + 5].code);
    CHECK(signed_mul(0, 5, be) == 0);
    // a zero input still passes through the hardware
    CHECK(signed_mul(4, 0, be) == s.pairs[4 * 16].code);
}

TEST_CASE("stochastic backend is keyed, not stateful") {
    auto m = testsupport::truth_model();
    m.discharge.sigma_vwl = PolyCoeffs({2e-2, 2e-2, 1e-2, 0.0}); // loud enough to move codes
    auto be = MulBackend::stochastic("s", preset_corner("fom"), m, 11);
    CHECK(signed_mul(5, 6, be, 123) == signed_mul(5, 6, be, 123));
    int diff = 0;
    for (uint64_t k = 0; k < 64; ++k) diff += signed_mul(7, 7, be, k) != signed_mul(7, 7, be, 0);
    CHECK(diff > 0);
    CHECK(signed_mul(0, 7, be, 9) == 0);
}

TEST_CASE("synthetic task is deterministic and in the target accuracy band") {
    TaskSpec s;
    auto a = make_task(s), b = make_task(s);
    CHECK(a.test_x == b.test_x);
    CHECK(a.weights == b.weights);
    CHECK(a.test_y.size() == size_t(s.n_test));
    CHECK(a.real_top1 >= 0.85);
    CHECK(a.real_top1 <= 0.97);
    CHECK(a.real_topk >= a.real_top1);
    for (double x : a.test_x) CHECK(x >= 0.0);
    TaskSpec bad;
    bad.density_lo = 0;
    CHECK_THROWS_AS(make_task(bad), UsageError);
}

TEST_CASE("integer inference matches an independent argmax") {
    TaskSpec s;
    s.n_test = 200;
    auto t = make_task(s);
    auto acc = infer_and_score(t, {MulBackend::exact()}, 1);
    REQUIRE(acc.size() == 1);
    auto w = quantize_int4(t.weights);
    int hit = 0;
    for (int i = 0; i < s.n_test; ++i) {
        std::vector<double> x(t.test_x.begin() + i * s.dim, t.test_x.begin() + (i + 1) * s.dim);
        auto qx = quantize_int4(x);
        long best = 0;
        int arg = -1;
        for (int c = 0; c < s.classes; ++c) {
            long acc2 = 0;
            for (int j = 0; j < s.dim; ++j) acc2 += long(w.codes[c * s.dim + j]) * qx.codes[j];
            if (arg < 0 || acc2 > best) { best = acc2; arg = c; }
        }
        hit += arg == t.test_y[i];
    }
    CHECK(acc[0].top1 == doctest::Approx(double(hit) / s.n_test));
    CHECK(acc[0].k == 5);
}

TEST_CASE("inference is schedule independent") {
    auto m = testsupport::truth_model();
    TaskSpec s;
    s.n_test = 150;
    auto t = make_task(s);
    std::vector<MulBackend> bes{MulBackend::exact(), MulBackend::stochastic("fom_mc", preset_corner("fom"), m, 4)};
    auto a = infer_and_score(t, bes, 1), b = infer_and_score(t, bes, 4);
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].top1 == b[i].top1);
        CHECK(a[i].topk == b[i].topk);
    }
}

TEST_CASE("LUT and accuracy CSV headers") {
    testsupport::TempDir tmp("dnn");
    write_lut_csv(MulBackend::exact(), tmp / "lut.csv");
    write_accuracy_csv({{"exact", 0.9, 0.99, 5}}, tmp / "acc.csv");
    CHECK(testsupport::first_line(tmp / "lut.csv") == "a,b,expected_code");
    CHECK(testsupport::first_line(tmp / "acc.csv") == "backend,top1,top5");
}
