#include <catch2/catch_amalgamated.hpp>

#include <aga/adam.hpp>
#include <aga/grad_check.hpp>
#include <aga/loss.hpp>
#include <aga/network.hpp>

#include "support/random_net.hpp"

using namespace aga;
using Catch::Matchers::WithinAbs;

namespace {

Network two_layer_relu_net() {
    Network net;
    net.input_dim = 2;
    LinearLayer l1;
    l1.weight = Matrix(2, 1);
    l1.weight(0, 0) = 1.0;
    l1.weight(1, 0) = 1.0;
    l1.bias = {0.0};
    net.layers.emplace_back(std::move(l1));
    net.layers.emplace_back(ReluLayer{});
    LinearLayer l2;
    l2.weight = Matrix(1, 1);
    l2.weight(0, 0) = 2.0;
    l2.bias = {0.5};
    net.layers.emplace_back(std::move(l2));
    return net;
}

}  // namespace

TEST_CASE("matrix multiply basics") {
    Matrix a(2, 3);
    Matrix b(3, 2);
    for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] = static_cast<double>(i + 1);
    for (std::size_t i = 0; i < b.data.size(); ++i) b.data[i] = static_cast<double>(i + 1);
    Matrix c = matmul(a, b);
    CHECK(c.rows == 2);
    CHECK(c.cols == 2);
    CHECK(c(0, 0) == 22.0);
    CHECK(c(0, 1) == 28.0);
    CHECK(c(1, 0) == 49.0);
    CHECK(c(1, 1) == 64.0);
    CHECK_THROWS_AS(matmul(a, a), std::invalid_argument);
}

TEST_CASE("rng streams are deterministic and distinct per seed") {
    Rng a(42), b(42), c(43);
    for (int i = 0; i < 100; ++i) {
        const double va = a.uniform();
        CHECK(va == b.uniform());
        CHECK(va >= 0.0);
        CHECK(va < 1.0);
    }
    bool differs = false;
    Rng a2(42);
    for (int i = 0; i < 10; ++i) differs = differs || (a2.next_u64() != c.next_u64());
    CHECK(differs);
}

TEST_CASE("fixed two-layer ReLU net maps (1,2) to 6.5") {
    Network net = two_layer_relu_net();
    Matrix x(1, 2);
    x(0, 0) = 1.0;
    x(0, 1) = 2.0;
    ForwardTrace trace = forward(net, x);
    REQUIRE(trace.output.rows == 1);
    REQUIRE(trace.output.cols == 1);
    CHECK_THAT(trace.output(0, 0), WithinAbs(6.5, 1e-12));
}

TEST_CASE("forward validates input shape and finiteness") {
    Network net = two_layer_relu_net();
    Matrix bad(1, 3);
    CHECK_THROWS_AS(forward(net, bad), std::invalid_argument);
    Matrix empty(0, 2);
    CHECK_THROWS_AS(forward(net, empty), std::invalid_argument);
    Matrix inf(1, 2);
    inf(0, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(forward(net, inf), std::runtime_error);

    // parameter overflow surfaces as a runtime error naming the layer
    Network big = two_layer_relu_net();
    std::get<LinearLayer>(big.layers[0]).weight(0, 0) = 1e308;
    Matrix x(1, 2);
    x(0, 0) = 1e12;
    x(0, 1) = 1e12;
    CHECK_THROWS_AS(forward(big, x), std::runtime_error);
}

TEST_CASE("train-mode dropout requires an rng") {
    Network net;
    net.input_dim = 2;
    net.layers.emplace_back(DropoutLayer{0.25});
    Matrix x(2, 2, 1.0);
    CHECK_THROWS_AS(forward(net, x, Mode::Train, nullptr), std::invalid_argument);
    Rng rng(1);
    CHECK_NOTHROW(forward(net, x, Mode::Train, &rng));
}

TEST_CASE("batchnorm normalizes per column in train mode and tracks running stats") {
    Network net;
    net.input_dim = 2;
    net.layers.emplace_back(BatchNormLayer(2));
    Matrix x(4, 2);
    const double col0[] = {1.0, 2.0, 3.0, 4.0};
    const double col1[] = {-1.0, 0.0, 1.0, 8.0};
    for (std::size_t r = 0; r < 4; ++r) {
        x(r, 0) = col0[r];
        x(r, 1) = col1[r];
    }
    ForwardTrace trace = forward(net, x, Mode::Train, nullptr);
    for (std::size_t c = 0; c < 2; ++c) {
        double m = 0.0, v = 0.0;
        for (std::size_t r = 0; r < 4; ++r) m += trace.output(r, c);
        m /= 4.0;
        for (std::size_t r = 0; r < 4; ++r) {
            const double d = trace.output(r, c) - m;
            v += d * d;
        }
        v /= 4.0;
        CHECK_THAT(m, WithinAbs(0.0, 1e-12));
        CHECK_THAT(v, WithinAbs(1.0, 1e-3));  // epsilon in the denominator shrinks it slightly
    }
    const auto& bn = std::get<BatchNormLayer>(net.layers[0]);
    // momentum 0.1 against zero-init mean and unit-init variance
    CHECK_THAT(bn.running_mean[0], WithinAbs(0.1 * 2.5, 1e-12));
    const double batch_var_unbiased = (2.25 + 0.25 + 0.25 + 2.25) / 3.0;
    CHECK_THAT(bn.running_var[0], WithinAbs(0.9 + 0.1 * batch_var_unbiased, 1e-12));

    // eval mode then uses the running statistics, not the batch
    Matrix single(1, 2);
    single(0, 0) = bn.running_mean[0];
    single(0, 1) = bn.running_mean[1];
    ForwardTrace etrace = forward(net, single);
    CHECK_THAT(etrace.output(0, 0), WithinAbs(0.0, 1e-12));
    CHECK_THAT(etrace.output(0, 1), WithinAbs(0.0, 1e-12));
}

TEST_CASE("batchnorm train mode rejects single-row batches") {
    Network net;
    net.input_dim = 3;
    net.layers.emplace_back(BatchNormLayer(3));
    Matrix x(1, 3, 1.0);
    CHECK_THROWS_AS(forward(net, x, Mode::Train, nullptr), std::invalid_argument);
    CHECK_NOTHROW(forward(net, x));  // eval mode is fine
}

TEST_CASE("dropout masks scale survivors and vanish in eval mode") {
    Network net;
    net.input_dim = 1;
    net.layers.emplace_back(DropoutLayer{0.25});
    Matrix x(2000, 1, 1.0);
    Rng rng(7);
    ForwardTrace trace = forward(net, x, Mode::Train, &rng);
    double sum = 0.0;
    for (double v : trace.output.data) {
        CHECK((v == 0.0 || v == Catch::Approx(1.0 / 0.75)));
        sum += v;
    }
    // inverted scaling keeps the expectation near the input
    CHECK_THAT(sum / 2000.0, WithinAbs(1.0, 0.05));

    ForwardTrace etrace = forward(net, x);
    CHECK(etrace.output.data == x.data);
}

TEST_CASE("identical seeds give identical dropout masks and init") {
    Rng ra(11), rb(11);
    Network na = testsupport::random_net(ra, 4, 2);
    Network nb = testsupport::random_net(rb, 4, 2);
    auto sa = parameter_spans(na);
    auto sb = parameter_spans(nb);
    REQUIRE(sa.size() == sb.size());
    for (std::size_t i = 0; i < sa.size(); ++i)
        CHECK(std::vector<double>(sa[i].begin(), sa[i].end()) ==
              std::vector<double>(sb[i].begin(), sb[i].end()));

    Matrix x = testsupport::random_batch(ra, 5, 4);
    Rng d1(99), d2(99);
    ForwardTrace t1 = forward(na, x, Mode::Train, &d1);
    ForwardTrace t2 = forward(nb, x, Mode::Train, &d2);
    CHECK(t1.output.data == t2.output.data);
}

TEST_CASE("backward rejects mismatched traces") {
    Network net = two_layer_relu_net();
    Matrix x(1, 2);
    x(0, 0) = 1.0;
    x(0, 1) = 2.0;
    ForwardTrace trace = forward(net, x);
    Matrix bad_grad(2, 1, 1.0);
    CHECK_THROWS_AS(backward(net, trace, bad_grad), std::invalid_argument);

    Network other;
    other.input_dim = 2;
    CHECK_THROWS_AS(backward(other, trace, trace.output), std::invalid_argument);
}

TEST_CASE("adam takes a full learning-rate step when gradient history is fresh") {
    Network net;
    net.input_dim = 1;
    LinearLayer lin;
    lin.weight = Matrix(1, 1);
    lin.weight(0, 0) = 1.0;
    lin.bias = {0.0};
    net.layers.emplace_back(std::move(lin));

    AdamState state = make_adam(net, 0.001);
    Gradients grads;
    grads.layers.resize(1);
    grads.layers[0].weight = Matrix(1, 1);
    grads.layers[0].weight(0, 0) = 3.0;
    grads.layers[0].bias = {0.0};
    adam_step(net, grads, state);
    // bias correction makes the first step exactly lr * g/|g| (up to epsilon)
    CHECK_THAT(std::get<LinearLayer>(net.layers[0]).weight(0, 0), WithinAbs(0.999, 1e-8));
    CHECK(state.timestep == 1);

    grads.layers[0].weight(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(adam_step(net, grads, state), std::runtime_error);
}

TEST_CASE("adam drives a small regression loss down") {
    Rng rng(3);
    Network net = testsupport::random_net(rng, 3, 1, false);
    Matrix x = testsupport::random_batch(rng, 16, 3);
    Matrix target(16, 1);
    for (std::size_t r = 0; r < 16; ++r) target(r, 0) = 0.5 * x(r, 0) - x(r, 1);
    LossSpec loss = MseLoss{target};

    AdamState state = make_adam(net, 0.01);
    const double first = loss_value(net, x, Mode::Train, 0, loss);
    double last = first;
    for (int step = 0; step < 200; ++step) {
        LossGrads lg = loss_gradients(net, x, Mode::Train, 0, loss);
        adam_step(net, lg.grads, state);
        last = lg.value;
    }
    CHECK(last < first);
    CHECK(std::isfinite(last));
}

TEST_CASE("gradient check passes on random stacks covering every layer kind") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        Rng rng(derive_seed(1000, seed));
        Network net = testsupport::random_net(rng, 4, 2);
        Matrix x = testsupport::random_batch(rng, 4, 4);
        Matrix target = testsupport::random_batch(rng, 4, 2);
        const Mode mode = (seed % 2 == 0) ? Mode::Train : Mode::Eval;
        GradCheckResult res = grad_check(net, x, mode, seed, MseLoss{target});
        INFO("seed " << seed << " mode " << (mode == Mode::Train ? "train" : "eval"));
        CHECK(res.parameter_count > 0);
        CHECK(res.max_rel_error < 1e-6);
    }
}

TEST_CASE("gradient check passes through a frozen regressor composite loss") {
    Rng rng(2024);
    // encoder-decoder shaped stack: width-preserving, ends in ReLU
    Network phi;
    phi.input_dim = 4;
    LinearLayer e1;
    e1.weight = Matrix(4, 3);
    e1.bias.assign(3, 0.0);
    phi.layers.emplace_back(std::move(e1));
    phi.layers.emplace_back(BatchNormLayer(3));
    phi.layers.emplace_back(EluLayer{1.0});
    phi.layers.emplace_back(DropoutLayer{0.25});
    LinearLayer e2;
    e2.weight = Matrix(3, 4);
    e2.bias.assign(4, 0.0);
    phi.layers.emplace_back(std::move(e2));
    phi.layers.emplace_back(ReluLayer{});
    init_parameters(phi, rng);
    testsupport::perturb_parameters(phi, rng);

    Network gamma = testsupport::random_net(rng, 4, 1, false);
    Matrix x = testsupport::random_batch(rng, 4, 4, 0.1, 1.5);

    CompositeLoss loss;
    loss.attribute_regressor = &gamma;
    loss.target = 2.0;
    loss.lambda = 0.01;
    GradCheckResult res = grad_check(phi, x, Mode::Train, 5, LossSpec{loss});
    CHECK(res.max_rel_error < 1e-6);

    // frozen regressor: its parameters must be untouched by the composite path
    Network gamma_copy = gamma;
    LossGrads lg = loss_gradients(phi, x, Mode::Train, 5, LossSpec{loss});
    auto before = parameter_spans(gamma_copy);
    auto after = parameter_spans(gamma);
    for (std::size_t i = 0; i < before.size(); ++i)
        CHECK(std::vector<double>(before[i].begin(), before[i].end()) ==
              std::vector<double>(after[i].begin(), after[i].end()));
    CHECK(std::isfinite(lg.value));
}

TEST_CASE("composite loss validates its wiring") {
    Rng rng(5);
    Network phi = testsupport::random_net(rng, 4, 4, false);
    Network gamma = testsupport::random_net(rng, 4, 2, false);  // wrong: vector output
    Matrix x = testsupport::random_batch(rng, 3, 4);
    CompositeLoss loss;
    loss.attribute_regressor = &gamma;
    loss.target = 1.0;
    CHECK_THROWS_AS(loss_value(phi, x, Mode::Eval, 0, LossSpec{loss}), std::invalid_argument);
    loss.attribute_regressor = nullptr;
    CHECK_THROWS_AS(loss_value(phi, x, Mode::Eval, 0, LossSpec{loss}), std::invalid_argument);
}

TEST_CASE("network validation catches dimension conflicts") {
    Network net;
    net.input_dim = 3;
    LinearLayer lin;
    lin.weight = Matrix(4, 2);  // expects 4 inputs, net provides 3
    lin.bias.assign(2, 0.0);
    net.layers.emplace_back(std::move(lin));
    CHECK_THROWS_AS(validate_network(net), std::invalid_argument);

    Network bn_net;
    bn_net.input_dim = 3;
    bn_net.layers.emplace_back(BatchNormLayer(2));
    CHECK_THROWS_AS(validate_network(bn_net), std::invalid_argument);

    Network drop_net;
    drop_net.input_dim = 3;
    drop_net.layers.emplace_back(DropoutLayer{1.0});
    CHECK_THROWS_AS(validate_network(drop_net), std::invalid_argument);
}
