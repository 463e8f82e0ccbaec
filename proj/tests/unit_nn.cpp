#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "urbdiff/nn/gradcheck.hpp"
#include "urbdiff/nn/ops.hpp"
#include "urbdiff/nn/sgd.hpp"
#include "urbdiff/rng.hpp"

using namespace urbdiff;
using namespace urbdiff::nn;

namespace {

TensorT<double> random_tensor(std::vector<int> shape, std::uint64_t seed, double lo = -1.0,
                              double hi = 1.0) {
    TensorT<double> t(std::move(shape));
    Rng rng(seed);
    for (double& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

VarT<double> dvar(TensorT<double> t, bool requires_grad = false) {
    return make_var(std::move(t), requires_grad);
}

// Scalar head shared by the per-op checks below.
TensorT<double> coeffs_like(const std::vector<int>& shape, std::uint64_t seed) {
    return random_tensor(shape, seed ^ 0xC0FFEE, -1.0, 1.0);
}

const std::vector<std::uint64_t> kSeeds = {11, 22, 33, 44, 55};

}  // namespace

// --- conv2d ----------------------------------------------------------------

TEST_CASE("conv2d: all-ones 3x3 counts in-bounds taps") {
    auto x = dvar(TensorT<double>({1, 1, 3, 3}, std::vector<double>(9, 1.0)));
    auto w = dvar(TensorT<double>({1, 1, 3, 3}, std::vector<double>(9, 1.0)));
    auto b = dvar(TensorT<double>({1}, {0.0}));
    const auto y = conv2d(x, w, b);
    const std::vector<double> want = {4, 6, 4, 6, 9, 6, 4, 6, 4};
    for (int i = 0; i < 9; ++i) CHECK(y->value.data[i] == doctest::Approx(want[i]));
}

TEST_CASE("conv2d: identity kernel reproduces the input") {
    auto x = dvar(random_tensor({2, 1, 5, 5}, 3));
    TensorT<double> ident({1, 1, 3, 3});
    ident.data[4] = 1.0;  // center tap
    auto w = dvar(std::move(ident));
    auto b = dvar(TensorT<double>({1}, {0.0}));
    const auto y = conv2d(x, w, b);
    for (std::size_t i = 0; i < y->value.data.size(); ++i)
        CHECK(y->value.data[i] == doctest::Approx(x->value.data[i]));
}

TEST_CASE("conv2d: bias adds per output channel and shape is preserved") {
    auto x = dvar(random_tensor({1, 2, 4, 4}, 5));
    auto w = dvar(TensorT<double>({3, 2, 3, 3}));
    auto b = dvar(TensorT<double>({3}, {1.0, -2.0, 0.5}));
    const auto y = conv2d(x, w, b);
    CHECK(y->value.shape == std::vector<int>{1, 3, 4, 4});
    CHECK(y->value.data[0] == doctest::Approx(1.0));
    CHECK(y->value.data[16] == doctest::Approx(-2.0));
    CHECK(y->value.data[32] == doctest::Approx(0.5));
}

TEST_CASE("conv2d: shape violations raise ShapeError") {
    auto x = dvar(random_tensor({1, 3, 4, 4}, 1));
    auto b1 = dvar(TensorT<double>({1}));
    CHECK_THROWS_AS(conv2d(x, dvar(TensorT<double>({1, 2, 3, 3})), b1), ShapeError);
    CHECK_THROWS_AS(conv2d(x, dvar(TensorT<double>({1, 3, 5, 5})), b1), ShapeError);
    CHECK_THROWS_AS(conv2d(x, dvar(TensorT<double>({2, 3, 3, 3})), b1), ShapeError);
    CHECK_THROWS_AS(conv2d(dvar(TensorT<double>({3, 4, 4})),
                           dvar(TensorT<double>({1, 3, 3, 3})), b1),
                    ShapeError);
}

TEST_CASE("conv2d: gradients match finite differences on 2x3x8x8") {
    for (std::uint64_t seed : kSeeds) {
        const auto coeffs = coeffs_like({2, 4, 8, 8}, seed);
        GradCheckOptions opts;
        opts.h = 1e-3;
        opts.seed = seed;
        const auto res = finite_diff_check(
            [&](const std::vector<VarT<double>>& in) {
                return project(conv2d(in[0], in[1], in[2]), coeffs);
            },
            {dvar(random_tensor({2, 3, 8, 8}, seed)),
             dvar(random_tensor({4, 3, 3, 3}, seed + 100)),
             dvar(random_tensor({4}, seed + 200))},
            opts);
        INFO("seed ", seed, " worst: ", res.worst);
        CHECK(res.ok(1e-4));
    }
}

// --- conv_transpose2d ------------------------------------------------------

TEST_CASE("conv_transpose2d: single input pixel stamps the kernel") {
    auto x = dvar(TensorT<double>({1, 1, 1, 1}, {1.0}));
    auto w = dvar(TensorT<double>({1, 1, 2, 2}, {1.5, -2.0, 3.0, 0.25}));
    const auto y = conv_transpose2d(x, w);
    CHECK(y->value.shape == std::vector<int>{1, 1, 2, 2});
    CHECK(y->value.data == std::vector<double>{1.5, -2.0, 3.0, 0.25});
}

TEST_CASE("conv_transpose2d: stride-2 scatter places inputs at even coordinates") {
    auto x = dvar(TensorT<double>({1, 1, 2, 2}, {1.0, 2.0, 3.0, 4.0}));
    auto w = dvar(TensorT<double>({1, 1, 2, 2}, {1.0, 0.0, 0.0, 0.0}));
    const auto y = conv_transpose2d(x, w);
    REQUIRE(y->value.shape == std::vector<int>{1, 1, 4, 4});
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            const double got = y->value.data[i * 4 + j];
            if (i % 2 == 0 && j % 2 == 0)
                CHECK(got == doctest::Approx(x->value.data[(i / 2) * 2 + j / 2]));
            else
                CHECK(got == 0.0);
        }
}

TEST_CASE("conv_transpose2d: channel mismatch raises ShapeError") {
    auto x = dvar(random_tensor({1, 3, 2, 2}, 1));
    CHECK_THROWS_AS(conv_transpose2d(x, dvar(TensorT<double>({2, 4, 2, 2}))), ShapeError);
    CHECK_THROWS_AS(conv_transpose2d(x, dvar(TensorT<double>({3, 4, 3, 3}))), ShapeError);
}

TEST_CASE("conv_transpose2d: gradients match finite differences") {
    for (std::uint64_t seed : kSeeds) {
        const auto coeffs = coeffs_like({2, 3, 8, 8}, seed);
        GradCheckOptions opts;
        opts.seed = seed;
        const auto res = finite_diff_check(
            [&](const std::vector<VarT<double>>& in) {
                return project(conv_transpose2d(in[0], in[1]), coeffs);
            },
            {dvar(random_tensor({2, 2, 4, 4}, seed)),
             dvar(random_tensor({2, 3, 2, 2}, seed + 100))},
            opts);
        INFO("seed ", seed, " worst: ", res.worst);
        CHECK(res.ok(1e-4));
    }
}

// --- maxpool2x2 ------------------------------------------------------------

TEST_CASE("maxpool2x2: picks the block maximum and halves spatial dims") {
    auto x = dvar(TensorT<double>({1, 1, 2, 2}, {1.0, 2.0, 3.0, 4.0}));
    const auto y = maxpool2x2(x);
    CHECK(y->value.shape == std::vector<int>{1, 1, 1, 1});
    CHECK(y->value.data[0] == 4.0);
}

TEST_CASE("maxpool2x2: ties route the full gradient to the first element") {
    auto x = dvar(TensorT<double>({1, 1, 2, 2}, {7.0, 7.0, 7.0, 7.0}), true);
    const auto y = maxpool2x2(x);
    CHECK(y->value.data[0] == 7.0);
    backward(y);
    CHECK(x->grad.data == std::vector<double>{1.0, 0.0, 0.0, 0.0});
}

TEST_CASE("maxpool2x2: odd spatial dims are rejected") {
    CHECK_THROWS_AS(maxpool2x2(dvar(TensorT<double>({1, 1, 3, 4}))), ShapeError);
    CHECK_THROWS_AS(maxpool2x2(dvar(TensorT<double>({1, 1, 4, 5}))), ShapeError);
}

TEST_CASE("maxpool2x2: gradients match finite differences on 1x1x6x6") {
    for (std::uint64_t seed : kSeeds) {
        auto input = random_tensor({1, 1, 6, 6}, seed);
        const auto coeffs = coeffs_like({1, 1, 3, 3}, seed);
        GradCheckOptions opts;
        opts.seed = seed;
        opts.n_coords = 50;
        // A coordinate whose 2x2 block has a near-tie would flip the argmax
        // under perturbation; the derivative is undefined there, so skip it.
        opts.skip = [&input](std::size_t, std::int64_t i) {
            const int y = static_cast<int>(i) / 6, x = static_cast<int>(i) % 6;
            const int by = (y / 2) * 2, bx = (x / 2) * 2;
            double best = -1e300, second = -1e300;
            for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx) {
                    const double v = input.data[(by + dy) * 6 + bx + dx];
                    if (v > best) {
                        second = best;
                        best = v;
                    } else if (v > second) {
                        second = v;
                    }
                }
            return best - second < 1e-3;
        };
        const auto res = finite_diff_check(
            [&](const std::vector<VarT<double>>& in) {
                return project(maxpool2x2(in[0]), coeffs);
            },
            {dvar(input)}, opts);
        INFO("seed ", seed, " worst: ", res.worst);
        CHECK(res.ok(1e-4));
    }
}

// --- relu ------------------------------------------------------------------

TEST_CASE("relu: clamps negatives, passes positives, zero at zero") {
    auto x = dvar(TensorT<double>({3}, {-1.0, 0.0, 2.0}));
    CHECK(relu(x)->value.data == std::vector<double>{0.0, 0.0, 2.0});

    auto pos = dvar(random_tensor({2, 2, 2, 2}, 9, 0.1, 2.0));
    CHECK(relu(pos)->value.data == pos->value.data);
}

TEST_CASE("relu: gradients away from the kink are near machine-exact") {
    for (std::uint64_t seed : kSeeds) {
        // Push every sample away from zero so the kink cannot interfere.
        auto input = random_tensor({1, 2, 6, 6}, seed);
        for (double& v : input.data) v += v >= 0.0 ? 0.5 : -0.5;
        const auto coeffs = coeffs_like({1, 2, 6, 6}, seed);
        const auto res = finite_diff_check(
            [&](const std::vector<VarT<double>>& in) { return project(relu(in[0]), coeffs); },
            {dvar(input)});
        INFO("seed ", seed, " worst: ", res.worst);
        CHECK(res.ok(1e-6));
    }
}

// --- log_softmax -----------------------------------------------------------

TEST_CASE("log_softmax: equal logits give ln(0.5) on both channels") {
    auto x = dvar(TensorT<double>({1, 2, 1, 1}, {3.0, 3.0}));
    const auto y = log_softmax(x);
    CHECK(y->value.data[0] == doctest::Approx(std::log(0.5)));
    CHECK(y->value.data[1] == doctest::Approx(std::log(0.5)));
}

TEST_CASE("log_softmax: extreme logits stay finite via max subtraction") {
    auto x = dvar(TensorT<double>({1, 2, 1, 1}, {1000.0, 0.0}));
    const auto y = log_softmax(x);
    CHECK(std::isfinite(y->value.data[0]));
    CHECK(std::isfinite(y->value.data[1]));
    CHECK(y->value.data[0] == doctest::Approx(0.0));
    CHECK(y->value.data[1] == doctest::Approx(-1000.0));
}

TEST_CASE("log_softmax: exp of outputs sums to one per pixel") {
    auto x = dvar(random_tensor({2, 3, 4, 4}, 17, -5.0, 5.0));
    const auto y = log_softmax(x);
    for (int n = 0; n < 2; ++n)
        for (int p = 0; p < 16; ++p) {
            double sum = 0.0;
            for (int c = 0; c < 3; ++c) sum += std::exp(y->value.data[(n * 3 + c) * 16 + p]);
            CHECK(std::abs(sum - 1.0) < 1e-6);
        }
}

TEST_CASE("log_softmax: gradients match finite differences") {
    for (std::uint64_t seed : kSeeds) {
        const auto coeffs = coeffs_like({1, 2, 6, 6}, seed);
        const auto res = finite_diff_check(
            [&](const std::vector<VarT<double>>& in) {
                return project(log_softmax(in[0]), coeffs);
            },
            {dvar(random_tensor({1, 2, 6, 6}, seed, -2.0, 2.0))});
        INFO("seed ", seed, " worst: ", res.worst);
        CHECK(res.ok(1e-4));
    }
}

// --- nll_weighted ----------------------------------------------------------

namespace {

LabelBatch checker_labels(int n, int h, int w) {
    LabelBatch t;
    t.n = n;
    t.h = h;
    t.w = w;
    t.data.resize(static_cast<std::size_t>(n) * h * w);
    for (std::size_t i = 0; i < t.data.size(); ++i) t.data[i] = i % 2;
    return t;
}

}  // namespace

TEST_CASE("nll_weighted: perfect prediction drives the loss to zero") {
    // Strong logits for the true class; log_softmax makes logp[target] ~ 0.
    const LabelBatch t = checker_labels(1, 2, 2);
    TensorT<double> logits({1, 2, 2, 2});
    for (int p = 0; p < 4; ++p) logits.data[t.data[p] * 4 + p] = 50.0;
    const auto loss = nll_weighted(log_softmax(dvar(logits)), t, 1.0, 1.0);
    CHECK(loss->scalar == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("nll_weighted: uniform prediction costs ln 2 under any weights") {
    const LabelBatch t = checker_labels(1, 4, 4);
    auto logp = dvar(TensorT<double>({1, 2, 4, 4},
                                     std::vector<double>(32, std::log(0.5))));
    CHECK(nll_weighted(logp, t, 1.0, 1.0)->scalar == doctest::Approx(std::log(2.0)));
    CHECK(nll_weighted(logp, t, 0.25, 9.0)->scalar == doctest::Approx(std::log(2.0)));
}

TEST_CASE("nll_weighted: bad targets and weights raise typed errors") {
    LabelBatch t = checker_labels(1, 2, 2);
    auto logp = dvar(TensorT<double>({1, 2, 2, 2}, std::vector<double>(8, std::log(0.5))));
    t.data[1] = 2;
    CHECK_THROWS_AS(nll_weighted(logp, t, 1.0, 1.0), LabelError);
    t.data[1] = 1;
    CHECK_THROWS_AS(nll_weighted(logp, t, -1.0, 1.0), ConfigError);
    LabelBatch zeros = checker_labels(1, 2, 2);
    std::fill(zeros.data.begin(), zeros.data.end(), std::uint8_t(0));
    CHECK_THROWS_AS(nll_weighted(logp, zeros, 0.0, 1.0), ConfigError);
    CHECK_THROWS_AS(nll_weighted(dvar(TensorT<double>({1, 3, 2, 2})), t, 1.0, 1.0), ShapeError);
}

TEST_CASE("nll_weighted: gradients match finite differences") {
    for (std::uint64_t seed : kSeeds) {
        const LabelBatch t = checker_labels(2, 4, 4);
        const auto res = finite_diff_check(
            [&](const std::vector<VarT<double>>& in) {
                return nll_weighted(in[0], t, 0.6, 5.0);
            },
            {dvar(random_tensor({2, 2, 4, 4}, seed, -3.0, -0.1))});
        INFO("seed ", seed, " worst: ", res.worst);
        CHECK(res.ok(1e-4));
    }
}

// --- elementwise difference helpers ----------------------------------------

TEST_CASE("sub and abs compose into the absolute difference with correct grads") {
    auto a = dvar(TensorT<double>({3}, {1.0, -2.0, 5.0}), true);
    auto b = dvar(TensorT<double>({3}, {4.0, -2.5, 1.0}), true);
    auto d = abs_op(sub(a, b));
    CHECK(d->value.data == std::vector<double>{3.0, 0.5, 4.0});

    for (std::uint64_t seed : kSeeds) {
        auto xa = random_tensor({2, 3, 4, 4}, seed);
        auto xb = random_tensor({2, 3, 4, 4}, seed + 1);
        // Keep the difference away from zero where |.| is not differentiable.
        for (std::size_t i = 0; i < xa.data.size(); ++i)
            if (std::abs(xa.data[i] - xb.data[i]) < 0.05) xa.data[i] += 0.1;
        const auto coeffs = coeffs_like({2, 3, 4, 4}, seed);
        const auto res = finite_diff_check(
            [&](const std::vector<VarT<double>>& in) {
                return project(abs_op(sub(in[0], in[1])), coeffs);
            },
            {dvar(xa), dvar(xb)});
        INFO("seed ", seed, " worst: ", res.worst);
        CHECK(res.ok(1e-4));
    }
}

TEST_CASE("channel_l2: collapses channels to a per-pixel norm") {
    auto x = dvar(TensorT<double>({1, 2, 1, 2}, {3.0, 0.0, 4.0, 0.0}));
    const auto y = channel_l2(x);
    CHECK(y->value.shape == std::vector<int>{1, 1, 1, 2});
    CHECK(y->value.data[0] == doctest::Approx(5.0));
    CHECK(y->value.data[1] == doctest::Approx(0.0));

    SUBCASE("zero input vector has zero gradient") {
        auto z = dvar(TensorT<double>({1, 2, 1, 1}), true);
        auto out = channel_l2(z);
        backward(out);
        CHECK(z->grad.data == std::vector<double>{0.0, 0.0});
    }
    SUBCASE("gradients match finite differences away from zero") {
        for (std::uint64_t seed : kSeeds) {
            const auto coeffs = coeffs_like({1, 1, 6, 6}, seed);
            const auto res = finite_diff_check(
                [&](const std::vector<VarT<double>>& in) {
                    return project(channel_l2(in[0]), coeffs);
                },
                {dvar(random_tensor({1, 4, 6, 6}, seed, 0.2, 1.0))});
            INFO("seed ", seed, " worst: ", res.worst);
            CHECK(res.ok(1e-4));
        }
    }
}

// --- shape algebra and determinism -----------------------------------------

TEST_CASE("conv/pool/transpose composition restores the spatial size") {
    auto x = dvar(random_tensor({1, 2, 8, 8}, 21));
    auto w = dvar(random_tensor({4, 2, 3, 3}, 22, -0.3, 0.3));
    auto b = dvar(TensorT<double>({4}));
    auto tw = dvar(random_tensor({4, 2, 2, 2}, 23, -0.3, 0.3));
    const auto y = conv_transpose2d(maxpool2x2(conv2d(x, w, b)), tw);
    CHECK(y->value.shape == std::vector<int>{1, 2, 8, 8});
}

TEST_CASE("ops are deterministic: repeated evaluation is bit-identical") {
    auto x = dvar(random_tensor({2, 3, 8, 8}, 31));
    auto w = dvar(random_tensor({4, 3, 3, 3}, 32));
    auto b = dvar(random_tensor({4}, 33));
    const auto y1 = conv2d(x, w, b);
    const auto y2 = conv2d(x, w, b);
    CHECK(y1->value.data == y2->value.data);
    const auto s1 = log_softmax(y1);
    const auto s2 = log_softmax(y2);
    CHECK(s1->value.data == s2->value.data);
}

TEST_CASE("non-finite inputs trip a numeric fault") {
    TensorT<double> bad({1, 1, 4, 4});
    bad.data[5] = std::numeric_limits<double>::infinity();
    auto x = dvar(bad);
    auto w = dvar(random_tensor({1, 1, 3, 3}, 2));
    auto b = dvar(TensorT<double>({1}));
    CHECK_THROWS_AS(conv2d(x, w, b), NumericFault);
}

// --- gradcheck harness contracts -------------------------------------------

TEST_CASE("finite_diff_check: enforces its own preconditions") {
    GradCheckOptions opts;
    opts.h = 1e-6;
    auto build = [](const std::vector<VarT<double>>& in) {
        return project(relu(in[0]), TensorT<double>({4}, {1, 1, 1, 1}));
    };
    CHECK_THROWS_AS(
        finite_diff_check(build, {dvar(random_tensor({4}, 1))}, opts), ConfigError);
    opts.h = 1e-4;
    opts.n_coords = 10;
    CHECK_THROWS_AS(
        finite_diff_check(build, {dvar(random_tensor({4}, 1))}, opts), ConfigError);
}

TEST_CASE("finite_diff_check: flags a deliberately wrong gradient") {
    // An op with a broken backward must fail the check; this guards the
    // harness against vacuous passes.
    auto broken_scale = [](const VarT<double>& x) {
        TensorT<double> out = x->value;
        for (double& v : out.data) v *= 2.0;
        auto node = make_var(std::move(out));
        node->parents = {x};
        node->requires_grad = x->requires_grad;
        node->backward_fn = [x](NodeT<double>& self) {
            x->ensure_grad();
            for (std::size_t i = 0; i < self.grad.data.size(); ++i)
                x->grad.data[i] += 3.0 * self.grad.data[i];  // wrong on purpose
        };
        return node;
    };
    const auto coeffs = coeffs_like({2, 2, 4, 4}, 77);
    const auto res = finite_diff_check(
        [&](const std::vector<VarT<double>>& in) {
            return project(broken_scale(in[0]), coeffs);
        },
        {dvar(random_tensor({2, 2, 4, 4}, 77))});
    CHECK_FALSE(res.ok(1e-4));
    CHECK(res.max_rel_err > 0.1);
}

// --- optimizer -------------------------------------------------------------

namespace {

VarT<float> fparam(std::vector<float> vals, const std::string& name) {
    const int n = static_cast<int>(vals.size());
    return make_var(TensorT<float>({n}, std::move(vals)), true, name);
}

}  // namespace

TEST_CASE("sgd: one plain step matches hand arithmetic") {
    auto p = fparam({1.0f}, "p");
    p->grad.data[0] = 0.5f;
    Sgd opt({p}, 0.1);
    opt.step();
    CHECK(p->value.data[0] == doctest::Approx(0.95));
    CHECK(p->grad.data[0] == 0.0f);  // consumed gradients are cleared
}

TEST_CASE("sgd: zero gradient with zero weight decay is a fixed point") {
    auto p = fparam({2.5f, -1.5f}, "p");
    Sgd opt({p}, 0.1, 0.9, 0.0);
    for (int i = 0; i < 5; ++i) opt.step();
    CHECK(p->value.data[0] == 2.5f);
    CHECK(p->value.data[1] == -1.5f);
}

TEST_CASE("sgd: momentum accumulates velocity across steps") {
    // v1 = 1, p = 1 - 0.1 = 0.9; v2 = 0.9*1 + 1 = 1.9, p = 0.9 - 0.19 = 0.71
    auto p = fparam({1.0f}, "p");
    Sgd opt({p}, 0.1, 0.9, 0.0);
    p->grad.data[0] = 1.0f;
    opt.step();
    CHECK(p->value.data[0] == doctest::Approx(0.9));
    p->grad.data[0] = 1.0f;
    opt.step();
    CHECK(p->value.data[0] == doctest::Approx(0.71));
}

TEST_CASE("sgd: weight decay pulls parameters toward zero with zero grad") {
    auto p = fparam({1.0f}, "p");
    Sgd opt({p}, 0.1, 0.0, 0.01);
    p->grad.data[0] = 0.0f;
    opt.step();
    CHECK(p->value.data[0] == doctest::Approx(1.0 - 0.1 * 0.01 * 1.0));
}

TEST_CASE("sgd: quadratic bowl converges under momentum") {
    // f(p) = p^2, grad = 2p; lr 0.1, momentum 0.9.
    auto p = fparam({1.0f}, "p");
    Sgd opt({p}, 0.1, 0.9, 0.0);
    int steps = 0;
    for (; steps < 200; ++steps) {
        if (std::abs(p->value.data[0]) < 1e-3) break;
        p->ensure_grad();
        p->grad.data[0] = 2.0f * p->value.data[0];
        opt.step();
    }
    CHECK(std::abs(p->value.data[0]) < 1e-3);
    CHECK(steps < 200);
}

TEST_CASE("sgd: invalid hyperparameters and non-finite gradients are rejected") {
    auto p = fparam({1.0f}, "theta");
    CHECK_THROWS_AS(Sgd({p}, 0.0), ConfigError);
    CHECK_THROWS_AS(Sgd({p}, -0.1), ConfigError);
    CHECK_THROWS_AS(Sgd({p}, 0.1, 1.0), ConfigError);
    CHECK_THROWS_AS(Sgd({p}, 0.1, -0.1), ConfigError);
    CHECK_THROWS_AS(Sgd({p}, 0.1, 0.0, -1e-4), ConfigError);

    Sgd opt({p}, 0.1);
    p->grad.data[0] = std::numeric_limits<float>::quiet_NaN();
    try {
        opt.step();
        FAIL("expected NumericFault");
    } catch (const NumericFault& e) {
        CHECK(std::string(e.what()).find("theta") != std::string::npos);
    }
}
