#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "autodiff/grad_check.hpp"
#include "autodiff/ops.hpp"
#include "autodiff/parameters.hpp"
#include "autodiff/transformer.hpp"
#include "common/rng.hpp"

using namespace ffae;
using namespace ffae::ad;

namespace {

Tensor random_tensor(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
    Tensor t(r, c);
    for (double& x : t.data()) x = scale * rng.normal();
    return t;
}

// Naive scaled dot-product attention, one head at a time.
Tensor attention_oracle(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t heads, const Tensor* mask) {
    const std::size_t dh = q.cols() / heads;
    Tensor out(q.rows(), v.cols());
    for (std::size_t h = 0; h < heads; ++h) {
        for (std::size_t i = 0; i < q.rows(); ++i) {
            std::vector<double> s(k.rows());
            double mx = -1e300;
            for (std::size_t j = 0; j < k.rows(); ++j) {
                double d = 0;
                for (std::size_t c = 0; c < dh; ++c) d += q(i, h * dh + c) * k(j, h * dh + c);
                s[j] = d / std::sqrt(double(dh)) + (mask ? (*mask)(i, j) : 0.0);
                mx = std::max(mx, s[j]);
            }
            double z = 0;
            for (double& x : s) z += (x = std::exp(x - mx));
            for (std::size_t c = 0; c < dh; ++c) {
                double acc = 0;
                for (std::size_t j = 0; j < k.rows(); ++j) acc += s[j] / z * v(j, h * dh + c);
                out(i, h * dh + c) = acc;
            }
        }
    }
    return out;
}

void check_close(const Tensor& a, const Tensor& b, double tol) {
    REQUIRE(a.same_shape(b));
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= tol);
}

}  // namespace

TEST_CASE("matmul matches a naive triple loop") {
    Rng rng(1);
    const auto a = random_tensor(5, 7, rng), b = random_tensor(7, 3, rng);
    Tensor ref(5, 3);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            for (std::size_t k = 0; k < 7; ++k) ref(i, j) += a(i, k) * b(k, j);
    check_close(matmul(constant(a), constant(b)).value(), ref, 1e-12);
}

TEST_CASE("shape mismatches name the op and both shapes") {
    const auto a = constant(Tensor(2, 3)), b = constant(Tensor(2, 3));
    try {
        matmul(a, b);
        FAIL("no throw");
    } catch (const std::invalid_argument& e) {
        const std::string m = e.what();
        CHECK(m.find("matmul") != std::string::npos);
        CHECK(m.find("[2 x 3]") != std::string::npos);
    }
    CHECK_THROWS_AS(add(a, constant(Tensor(3, 3))), std::invalid_argument);
    CHECK_THROWS_AS(slice_rows(a, 1, 2), std::invalid_argument);
    CHECK_THROWS_AS(cross_entropy(a, std::vector<std::size_t>{0}), std::invalid_argument);
    CHECK_THROWS_AS(cross_entropy(a, std::vector<std::size_t>{0, 3}), std::invalid_argument);
}

TEST_CASE("gelu uses the exact erf form") {
    const auto y = gelu(constant(Tensor::row_vector({1.0, -1.0, 0.0}))).value();
    CHECK(y[0] == doctest::Approx(0.8413447460685429).epsilon(1e-15));
    CHECK(y[1] == doctest::Approx(-0.15865525393145707).epsilon(1e-15));
    CHECK(y[2] == 0.0);
}

TEST_CASE("softmax known values and axis handling") {
    const auto y = softmax(constant(Tensor::row_vector({1.0, 2.0, 3.0}))).value();
    CHECK(y[0] == doctest::Approx(0.09003057317038046).epsilon(1e-14));
    CHECK(y[1] == doctest::Approx(0.24472847105479764).epsilon(1e-14));
    CHECK(y[2] == doctest::Approx(0.6652409557748219).epsilon(1e-14));
    // Large logits do not overflow.
    const auto big = softmax(constant(Tensor::row_vector({1000.0, 1000.0}))).value();
    CHECK(big[0] == doctest::Approx(0.5));
    Rng rng(2);
    const auto t = random_tensor(4, 3, rng);
    const auto cols = softmax(constant(t), Axis::rows).value();
    for (std::size_t c = 0; c < 3; ++c) {
        double s = 0;
        for (std::size_t r = 0; r < 4; ++r) s += cols(r, c);
        CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("layer norm normalizes each row with eps 1e-5") {
    const auto x = constant(Tensor::row_vector({1.0, 2.0, 3.0}));
    const auto y = layer_norm(x, constant(Tensor(1, 3, 1.0)), constant(Tensor(1, 3, 0.0))).value();
    const double sd = std::sqrt(2.0 / 3.0 + 1e-5);
    CHECK(y[0] == doctest::Approx(-1.0 / sd).epsilon(1e-14));
    CHECK(y[1] == doctest::Approx(0.0));
    CHECK(y[2] == doctest::Approx(1.0 / sd).epsilon(1e-14));
}

TEST_CASE("cross entropy of uniform logits is log C, mean over rows") {
    const auto logits = constant(Tensor(3, 5, 0.25));
    CHECK(cross_entropy(logits, std::vector<std::size_t>{0, 4, 2}).item() == doctest::Approx(std::log(5.0)).epsilon(1e-15));
    const auto l2 = constant(Tensor(2, 2, std::vector<double>{0.0, std::log(3.0), 0.0, 0.0}));
    // row 0 target 1: -log(3/4); row 1: log 2
    CHECK(cross_entropy(l2, std::vector<std::size_t>{1, 0}).item() ==
          doctest::Approx(0.5 * (-std::log(0.75) + std::log(2.0))).epsilon(1e-15));
}

TEST_CASE("attention matches the naive oracle with and without a mask") {
    Rng rng(3);
    const auto q = random_tensor(4, 8, rng), k = random_tensor(6, 8, rng), v = random_tensor(6, 8, rng);
    for (std::size_t heads : {1u, 2u, 4u}) {
        check_close(attention(constant(q), constant(k), constant(v), heads).value(),
                    attention_oracle(q, k, v, heads, nullptr), 1e-12);
    }
    Tensor mask(4, 6);
    mask(0, 5) = -1e9;
    mask(2, 1) = -3.0;
    check_close(attention(constant(q), constant(k), constant(v), 2, &mask).value(),
                attention_oracle(q, k, v, 2, &mask), 1e-12);
    CHECK_THROWS_AS(attention(constant(q), constant(k), constant(v), 3), std::invalid_argument);
}

TEST_CASE("row ops: concat, slice, gather, replace, mean_pool") {
    const auto a = constant(Tensor(2, 2, std::vector<double>{1, 2, 3, 4}));
    const auto b = constant(Tensor(1, 2, std::vector<double>{5, 6}));
    const std::vector<Value> parts{a, b};
    const auto c = concat_rows(parts).value();
    CHECK(c == Tensor(3, 2, std::vector<double>{1, 2, 3, 4, 5, 6}));
    CHECK(slice_rows(constant(c), 1, 2).value() == Tensor(2, 2, std::vector<double>{3, 4, 5, 6}));
    const std::vector<std::size_t> idx{2, 0, 2};
    CHECK(gather_rows(constant(c), idx).value() == Tensor(3, 2, std::vector<double>{5, 6, 1, 2, 5, 6}));
    const std::vector<std::size_t> rows{0, 2};
    CHECK(replace_rows(constant(c), rows, constant(Tensor(1, 2, 9.0))).value() ==
          Tensor(3, 2, std::vector<double>{9, 9, 3, 4, 9, 9}));
    CHECK(mean_pool(constant(c)).value() == Tensor(1, 2, std::vector<double>{3, 4}));
}

TEST_CASE("every op passes a finite-difference check") {
    Rng rng(4);
    ParameterSet ps;
    auto a = ps.add("a", random_tensor(3, 4, rng));
    auto b = ps.add("b", random_tensor(4, 4, rng));
    auto r = ps.add("r", random_tensor(1, 4, rng));
    auto g = ps.add("g", random_tensor(1, 4, rng));
    auto kk = ps.add("k", random_tensor(5, 4, rng));
    auto vv = ps.add("v", random_tensor(5, 4, rng));
    const std::vector<std::size_t> targets{1, 3, 0};
    const std::vector<std::size_t> gather{2, 2, 0, 1};
    const std::vector<std::size_t> replace{0, 2};
    Tensor mask(3, 5);
    mask(1, 4) = -2.0;

    const std::vector<std::pair<const char*, std::function<Value()>>> cases = {
        {"matmul", [&] { return sum(mul(matmul(a, b), matmul(a, b))); }},
        {"add/sub/mul broadcast", [&] { return sum(mul(sub(add(a, r), r), add(a, g))); }},
        {"scale/transpose", [&] { return sum(matmul(transpose(scale(a, 0.7)), a)); }},
        {"concat/slice", [&] {
             const std::vector<Value> p{a, r, slice_rows(b, 1, 2)};
             return sum(gelu(concat_rows(p)));
         }},
        {"gather/replace", [&] { return sum(gelu(replace_rows(gather_rows(matmul(a, b), gather), replace, r))); }},
        {"mean_pool", [&] { return sum(mul(mean_pool(a), g)); }},
        {"gelu", [&] { return sum(gelu(a)); }},
        {"softmax cols", [&] { return sum(mul(softmax(a), a)); }},
        {"softmax rows", [&] { return sum(mul(softmax(a, Axis::rows), a)); }},
        {"layer_norm", [&] { return sum(mul(layer_norm(a, g, r), a)); }},
        {"cross_entropy", [&] { return cross_entropy(matmul(a, b), targets); }},
        {"attention", [&] { return sum(mul(attention(a, kk, vv, 2), a)); }},
        {"attention masked", [&] { return sum(gelu(attention(a, kk, vv, 1, &mask))); }},
    };
    GradCheckOptions opts;
    opts.eps = 1e-6;
    for (const auto& [name, f] : cases) {
        CAPTURE(name);
        const auto res = grad_check(f, ps, opts);
        CHECK(res.max_relative_error < 1e-5);
        CHECK(res.coordinates_checked == ps.scalar_count());
    }
}

TEST_CASE("leaf gradients accumulate across backward calls until zero_grad") {
    auto p = parameter(Tensor::row_vector({1.0, 2.0}));
    const auto loss = sum(mul(p, p));
    loss.backward();
    CHECK(p.grad() == Tensor::row_vector({2.0, 4.0}));
    loss.backward();
    CHECK(p.grad() == Tensor::row_vector({4.0, 8.0}));
    p.zero_grad();
    loss.backward();
    CHECK(p.grad() == Tensor::row_vector({2.0, 4.0}));
}

TEST_CASE("a value used on several paths sums its path gradients") {
    auto p = parameter(Tensor::scalar(3.0));
    const auto y = add(mul(p, p), scale(p, 5.0));  // p^2 + 5p -> 2p + 5
    y.backward();
    CHECK(p.grad()[0] == 11.0);
}

TEST_CASE("backward needs a scalar root; constants get no gradient") {
    auto p = parameter(Tensor(2, 2, 1.0));
    CHECK_THROWS(matmul(p, p).backward());
    auto c = constant(Tensor(2, 2, 1.0));
    sum(mul(p, c)).backward();
    CHECK(c.grad().empty());
    CHECK(p.grad() == Tensor(2, 2, 1.0));
}

TEST_CASE("parameter set keeps insertion order and rejects duplicates") {
    ParameterSet ps;
    ps.add("z", Tensor(1, 1));
    ps.add("a", Tensor(2, 3));
    CHECK(ps.begin()->first == "z");
    CHECK(ps.scalar_count() == 7);
    CHECK_THROWS(ps.add("a", Tensor(1, 1)));
    CHECK(ps.contains("a"));
    CHECK_FALSE(ps.contains("b"));
    CHECK_THROWS(ps.at("b"));
}

TEST_CASE("checkpoint round-trip restores values exactly and checks shapes") {
    Rng rng(5);
    ParameterSet ps;
    ps.add("w", random_tensor(3, 4, rng));
    ps.add("b", random_tensor(1, 4, rng));
    const auto path = std::filesystem::temp_directory_path() / "ffae_test_params.ffck";
    save_parameters(path, ps);

    ParameterSet other;
    other.add("w", Tensor(3, 4));
    other.add("b", Tensor(1, 4));
    load_parameters(path, other);
    CHECK(other.at("w").value() == ps.at("w").value());
    CHECK(other.at("b").value() == ps.at("b").value());

    ParameterSet wrong;
    wrong.add("w", Tensor(4, 3));
    wrong.add("b", Tensor(1, 4));
    CHECK_THROWS(load_parameters(path, wrong));
    ParameterSet missing;
    missing.add("w", Tensor(3, 4));
    missing.add("c", Tensor(1, 4));
    CHECK_THROWS(load_parameters(path, missing));
    std::filesystem::remove(path);
}

TEST_CASE("transformer block gradients check out, with and without cross-attention") {
    Rng rng(6);
    ParameterSet ps;
    const auto block = TransformerBlockParams::create(ps, "blk", 8, 16, 2, true, 0.3, rng);
    auto x = ps.add("x", random_tensor(5, 8, rng));
    auto ctx = ps.add("ctx", random_tensor(3, 8, rng));
    GradCheckOptions opts;
    opts.eps = 1e-5;
    opts.coords_per_param = 6;
    // Key biases shift every score of a row equally, so their exact gradient
    // is zero and the finite difference is pure roundoff.
    opts.denominator_floor = 1e-4;
    const auto res = grad_check([&] { return sum(gelu(transformer_block(x, block, &ctx))); }, ps, opts);
    CHECK(res.max_relative_error < 1e-5);
    const auto plain = TransformerBlockParams::create(ps, "plain", 8, 16, 2, false, 0.3, rng);
    const auto res2 = grad_check([&] { return sum(gelu(transformer_block(x, plain))); }, ps, opts);
    CHECK(res2.max_relative_error < 1e-5);
    CHECK(ps.contains("blk.cross_attn.query.weight"));
    CHECK_FALSE(ps.contains("plain.cross_attn.query.weight"));
}

TEST_CASE("grad_check flags a wrong gradient") {
    auto p = parameter(Tensor::row_vector({0.5, -1.5}));
    ParameterSet ps;
    ps.add("p", p);
    // sum of cubes with a backward that is off by a factor 2/3
    const auto broken = [&] {
        Tensor out(1, 1, 0.0);
        for (double v : p.value().data()) out[0] += v * v * v;
        return make_result(out, {p}, "cube_broken", [](Node& n) {
            Tensor& g = n.inputs[0]->ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[0] * 2.0 * n.inputs[0]->value[i];
        });
    };
    CHECK(grad_check(broken, ps).max_relative_error > 0.1);
}
