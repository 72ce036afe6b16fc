#include <cmath>

#include "doctest.h"
#include "test_utils.hpp"

using namespace advlab;
using namespace testutil;

namespace {

// first `want` seeds whose (model, input) pair keeps every unit away from
// activation kinks and pool ties
template <typename MakeSpec>
std::vector<std::pair<TrainedModel, Tensor>> smooth_fixtures(MakeSpec make_spec,
                                                             const std::vector<std::size_t>& xshape,
                                                             int want) {
    std::vector<std::pair<TrainedModel, Tensor>> out;
    for (std::uint64_t seed = 1; out.size() < static_cast<std::size_t>(want) && seed < 500;
         ++seed) {
        auto model = random_model(make_spec(), seed);
        Rng rng(derive_seed(seed, 99));
        Tensor x = random_input(rng, xshape);
        if (fixture_is_smooth(model, x)) out.emplace_back(std::move(model), std::move(x));
    }
    REQUIRE(out.size() == static_cast<std::size_t>(want));
    return out;
}

double max_input_grad_rel_err(const TrainedModel& m, const Tensor& x,
                              const std::vector<double>& target) {
    auto lg = loss_and_input_gradient(m, x, target);
    Tensor fd = fd_input_gradient(m, x, target);
    double worst = 0.0;
    for (std::size_t i = 0; i < fd.numel(); ++i)
        worst = std::max(worst, rel_err(lg.grad.data[i], fd.data[i]));
    return worst;
}

double max_param_grad_rel_err(const TrainedModel& m, const std::vector<Tensor>& xs,
                              const std::vector<std::vector<double>>& targets) {
    std::vector<const double*> px, pt;
    for (const auto& x : xs) px.push_back(x.data.data());
    for (const auto& t : targets) pt.push_back(t.data());
    Parameters g = parameter_gradients(m, px, pt);
    Parameters fd = fd_parameter_gradients(m, xs, targets);
    double worst = 0.0;
    for (std::size_t l = 0; l < g.weights.size(); ++l) {
        for (std::size_t k = 0; k < g.weights[l].numel(); ++k)
            worst = std::max(worst, rel_err(g.weights[l].data[k], fd.weights[l].data[k]));
        for (std::size_t k = 0; k < g.biases[l].numel(); ++k)
            worst = std::max(worst, rel_err(g.biases[l].data[k], fd.biases[l].data[k]));
    }
    return worst;
}

} // namespace

TEST_CASE("input gradient matches central finite differences on an MLP") {
    auto fixtures = smooth_fixtures([] { return mlp_spec(6, {8, 5}, 3, true); }, {6}, 5);
    Rng rng(42);
    for (auto& [model, x] : fixtures) {
        auto target = random_target(rng, 3);
        CHECK(max_input_grad_rel_err(model, x, target) < 1e-5);
    }
}

TEST_CASE("input gradient matches finite differences on a conv net") {
    auto fixtures = smooth_fixtures([] { return small_conv_spec(); }, {1, 8, 8}, 4);
    Rng rng(43);
    for (auto& [model, x] : fixtures) {
        auto target = random_target(rng, 3);
        CHECK(max_input_grad_rel_err(model, x, target) < 1e-5);
    }
}

TEST_CASE("input gradient matches finite differences through a shortcut") {
    auto fixtures = smooth_fixtures([] { return small_resnet_spec(); }, {2, 6, 6}, 4);
    Rng rng(44);
    for (auto& [model, x] : fixtures) {
        auto target = random_target(rng, 3);
        CHECK(max_input_grad_rel_err(model, x, target) < 1e-5);
    }
}

TEST_CASE("parameter gradients match finite differences") {
    Rng rng(45);
    SUBCASE("mlp") {
        auto fixtures = smooth_fixtures([] { return mlp_spec(5, {7}, 3); }, {5}, 3);
        for (auto& [model, x] : fixtures) {
            std::vector<Tensor> xs{x, random_input(rng, {5}), random_input(rng, {5})};
            std::vector<std::vector<double>> ts{random_target(rng, 3), random_target(rng, 3),
                                                random_target(rng, 3)};
            CHECK(max_param_grad_rel_err(model, xs, ts) < 1e-5);
        }
    }
    SUBCASE("conv") {
        auto fixtures = smooth_fixtures([] { return small_conv_spec(); }, {1, 8, 8}, 2);
        for (auto& [model, x] : fixtures) {
            std::vector<Tensor> xs{x};
            std::vector<std::vector<double>> ts{random_target(rng, 3)};
            CHECK(max_param_grad_rel_err(model, xs, ts) < 1e-5);
        }
    }
    SUBCASE("resnet shortcut") {
        auto fixtures = smooth_fixtures([] { return small_resnet_spec(); }, {2, 6, 6}, 2);
        for (auto& [model, x] : fixtures) {
            std::vector<Tensor> xs{x};
            std::vector<std::vector<double>> ts{random_target(rng, 3)};
            CHECK(max_param_grad_rel_err(model, xs, ts) < 1e-5);
        }
    }
}

TEST_CASE("logistic closed form: input gradient is (p - y) * w") {
    std::vector<double> w = {0.8, -1.3, 0.4};
    auto m = binary_linear_model(w, 0.2);
    Tensor x({3}, {0.3, 0.7, 0.5});
    auto p = forward(m, x);
    // true label 0: dJ/dx = (p1 - y1) * w with y1 = 0
    auto lg = loss_and_input_gradient(m, x, one_hot(2, 0));
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(lg.grad.data[i] == doctest::Approx(p.data[1] * w[i]).epsilon(1e-10));
    // true label 1: factor is p1 - 1
    auto lg1 = loss_and_input_gradient(m, x, one_hot(2, 1));
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(lg1.grad.data[i] == doctest::Approx((p.data[1] - 1.0) * w[i]).epsilon(1e-10));
}

TEST_CASE("loss is ~0 and gradient ~0 when prediction equals the one-hot target") {
    // huge bias difference drives p(true class) above 1 - 1e-7
    auto m = linear_model({{0, 0}, {0, 0}}, {40.0, 0.0});
    Tensor x({2}, {0.4, 0.6});
    auto p = forward(m, x);
    REQUIRE(p.data[0] > 1.0 - 1e-7);
    auto lg = loss_and_input_gradient(m, x, one_hot(2, 0));
    CHECK(lg.loss < 1e-6);
    for (double g : lg.grad.data) CHECK(std::abs(g) < 1e-6);
}

TEST_CASE("target distribution is validated") {
    auto m = random_model(mlp_spec(4, {5}, 3), 3);
    Rng rng(9);
    Tensor x = random_input(rng, {4});
    std::vector<double> bad = {0.5, 0.2, 0.1}; // sums to 0.8
    CHECK_THROWS_AS(loss_and_input_gradient(m, x, bad), InputError);
}

TEST_CASE("batch gradient of k duplicated samples equals the single-sample gradient") {
    auto model = random_model(small_conv_spec(), 17);
    Rng rng(18);
    Tensor x = random_input(rng, {1, 8, 8});
    auto target = random_target(rng, 3);

    std::vector<const double*> xs1{x.data.data()}, ts1{target.data()};
    Parameters g1 = parameter_gradients(model, xs1, ts1);

    std::vector<const double*> xs4(4, x.data.data()), ts4(4, target.data());
    Parameters g4 = parameter_gradients(model, xs4, ts4);

    for (std::size_t l = 0; l < g1.weights.size(); ++l)
        for (std::size_t k = 0; k < g1.weights[l].numel(); ++k)
            CHECK(std::abs(g1.weights[l].data[k] - g4.weights[l].data[k]) <= 1e-12);
}

TEST_CASE("zero learning signal gives a zero gradient") {
    auto model = random_model(mlp_spec(4, {6}, 3), 23);
    Rng rng(24);
    Tensor x = random_input(rng, {4});
    std::vector<double> target = forward(model, x).data; // target == prediction
    std::vector<const double*> xs{x.data.data()}, ts{target.data()};
    Parameters g = parameter_gradients(model, xs, ts);
    for (const auto& w : g.weights)
        for (double v : w.data) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("empty batch is rejected") {
    auto model = random_model(mlp_spec(4, {6}, 3), 23);
    std::vector<const double*> none;
    CHECK_THROWS_AS(parameter_gradients(model, none, none), InputError);
}
