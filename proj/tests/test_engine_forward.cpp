#include <cmath>

#include "doctest.h"
#include "test_utils.hpp"

using namespace advlab;
using namespace testutil;

TEST_CASE("forward output is a probability vector") {
    Rng rng(7);
    auto model = random_model(small_conv_spec(), 11);
    for (int i = 0; i < 20; ++i) {
        Tensor x = random_input(rng, {1, 8, 8});
        Tensor p = forward(model, x);
        double sum = 0.0;
        for (double v : p.data) {
            CHECK(v >= 0.0);
            sum += v;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-9);
    }
}

TEST_CASE("zero-weight dense model is uniform") {
    NetworkSpec s = mlp_spec(3, {}, 2);
    TrainedModel m;
    m.spec = s;
    m.params.weights.resize(2);
    m.params.biases.resize(2);
    m.params.weights[0] = Tensor({2, 3});
    m.params.biases[0] = Tensor({2});
    Tensor x({3}, {0.2, 0.9, 0.4});
    Tensor p = forward(m, x);
    CHECK(p.data[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(p.data[1] == doctest::Approx(0.5).epsilon(1e-12));
    Tensor z = logits(m, x);
    CHECK(z.data[0] == 0.0);
    CHECK(z.data[1] == 0.0);
    CHECK(predict_class(m, x) == 0); // exact tie breaks to the lowest index
}

TEST_CASE("identity linear model reproduces softmax(2,0)") {
    auto m = linear_model({{1, 0}, {0, 1}}, {0, 0});
    Tensor x({2}, {2.0, 0.0});
    Tensor p = forward(m, x);
    CHECK(p.data[0] == doctest::Approx(0.8808).epsilon(1e-3));
    CHECK(p.data[1] == doctest::Approx(0.1192).epsilon(1e-3));
}

TEST_CASE("softmax(logits) equals forward and is shift invariant") {
    Rng rng(3);
    auto model = random_model(mlp_spec(4, {6}, 3), 5);
    for (int i = 0; i < 100; ++i) {
        Tensor x = random_input(rng, {4});
        Tensor z = logits(model, x);
        Tensor p = forward(model, x);
        std::vector<double> sz = z.data;
        softmax_inplace(sz);
        for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(sz[k] - p.data[k]) <= 1e-12);

        std::vector<double> shifted = z.data;
        for (double& v : shifted) v += 17.25;
        softmax_inplace(shifted);
        for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(shifted[k] - p.data[k]) <= 1e-9);
    }
}

TEST_CASE("activation_apply matches the BRELU piecewise definition") {
    Tensor x({3}, {-0.3, 0.5, 2.7});
    Tensor r = activation_apply(ActKind::Brelu, 1.0, x);
    CHECK(r.data[0] == 0.0);
    CHECK(r.data[1] == 0.5);
    CHECK(r.data[2] == 1.0);
    Tensor rr = activation_apply(ActKind::Relu, 0.0, x);
    CHECK(rr.data[0] == 0.0);
    CHECK(rr.data[1] == 0.5);
    CHECK(rr.data[2] == 2.7);
    CHECK_THROWS_AS(activation_apply(ActKind::Brelu, 0.0, x), ConfigError);
    CHECK_THROWS_AS(activation_apply(ActKind::Brelu, -1.0, x), ConfigError);
}

TEST_CASE("predict_class picks the argmax, ties to the lowest index") {
    auto m = linear_model({{0, 0}, {0, 0}, {0, 0}}, {std::log(0.1), std::log(0.7), std::log(0.2)});
    Tensor x({2}, {0.3, 0.6});
    Tensor p = forward(m, x);
    CHECK(p.data[1] == doctest::Approx(0.7).epsilon(1e-9));
    CHECK(predict_class(m, x) == 1);

    Rng rng(21);
    auto rm = random_model(mlp_spec(4, {5}, 3), 9);
    for (int i = 0; i < 50; ++i) {
        Tensor xx = random_input(rng, {4});
        CHECK(predict_class(rm, xx) == static_cast<int>(argmax(logits(rm, xx).data)));
    }
}

TEST_CASE("forward rejects shape mismatches") {
    auto m = random_model(small_conv_spec(), 4);
    Tensor bad({2, 8, 8});
    CHECK_THROWS_AS(forward(m, bad), InputError);
    CHECK_THROWS_AS(logits(m, bad), InputError);
}

TEST_CASE("identity shortcut matches the hand-unrolled computation") {
    auto spec = small_resnet_spec();
    auto m = random_model(spec, 33);
    Rng rng(12);
    Tensor x = random_input(rng, {2, 6, 6});

    Trace tr;
    forward_trace(m.spec, m.params, x.data.data(), tr);

    // unroll by hand: a4 = a1 + a3, then pool, dense, softmax
    std::vector<double> a4(tr.acts[1].size());
    for (std::size_t i = 0; i < a4.size(); ++i) a4[i] = tr.acts[1][i] + tr.acts[3][i];
    for (std::size_t i = 0; i < a4.size(); ++i) CHECK(tr.acts[4][i] == a4[i]);

    std::vector<std::int32_t> arg;
    std::vector<double> pooled(4 * 2 * 2);
    detail::maxpool_forward(a4.data(), 4, 4, 4, 2, 2, pooled.data(), arg);
    std::vector<double> dense_out(3);
    detail::dense_forward(pooled.data(), pooled.size(), m.params.weights[6], m.params.biases[6],
                          dense_out.data(), 3);
    softmax_inplace(dense_out);
    Tensor p = forward(m, x);
    for (std::size_t k = 0; k < 3; ++k) CHECK(p.data[k] == doctest::Approx(dense_out[k]).epsilon(1e-14));
}

TEST_CASE("post-brelu activations of any two inputs differ by at most t") {
    // the saturation bound: outputs live in [0, t], so the layer's response
    // to any input change is bounded by t in the max norm
    const double t = 0.8;
    NetworkSpec s = mlp_spec(6, {12}, 3);
    s.layers[1] = LayerSpec::brelu(t);
    s.validate();
    auto m = random_model(s, 31, 2.0);
    Rng rng(32);
    Trace tr_a, tr_b;
    for (int rep = 0; rep < 200; ++rep) {
        Tensor a = random_input(rng, {6});
        Tensor b = random_input(rng, {6});
        forward_trace(m.spec, m.params, a.data.data(), tr_a);
        forward_trace(m.spec, m.params, b.data.data(), tr_b);
        for (std::size_t k = 0; k < tr_a.acts[1].size(); ++k) {
            CHECK(tr_a.acts[1][k] >= 0.0);
            CHECK(tr_a.acts[1][k] <= t);
            CHECK(std::abs(tr_a.acts[1][k] - tr_b.acts[1][k]) <= t);
        }
    }
}

TEST_CASE("network validation catches bad specs") {
    NetworkSpec s;
    s.input_shape = {4};
    s.num_classes = 2;
    s.layers.push_back(LayerSpec::dense(2));
    CHECK_THROWS_AS(s.validate(), ConfigError); // no softmax

    NetworkSpec s2;
    s2.input_shape = {4};
    s2.num_classes = 2;
    s2.layers.push_back(LayerSpec::dense(3)); // width != classes
    s2.layers.push_back(LayerSpec::softmax());
    CHECK_THROWS_AS(s2.validate(), ConfigError);

    NetworkSpec s3;
    s3.input_shape = {1, 4, 4};
    s3.num_classes = 2;
    s3.layers.push_back(LayerSpec::conv2d(2, 5, 5)); // kernel larger than input
    s3.layers.push_back(LayerSpec::dense(2));
    s3.layers.push_back(LayerSpec::softmax());
    CHECK_THROWS_AS(s3.validate(), ConfigError);

    NetworkSpec s4;
    s4.input_shape = {1, 4, 4};
    s4.num_classes = 2;
    s4.layers.push_back(LayerSpec::conv2d(2, 3, 3)); // (2,2,2)
    s4.layers.push_back(LayerSpec::maxpool(2, 2));   // (2,1,1)
    s4.layers.push_back(LayerSpec::shortcut(0, 1));  // shapes differ
    s4.layers.push_back(LayerSpec::dense(2));
    s4.layers.push_back(LayerSpec::softmax());
    CHECK_THROWS_AS(s4.validate(), ConfigError);

    NetworkSpec s5 = mlp_spec(4, {3}, 2);
    s5.layers[1] = LayerSpec::brelu(0.5);
    s5.layers[1].brelu_t = -0.5;
    CHECK_THROWS_AS(s5.validate(), ConfigError);
}
