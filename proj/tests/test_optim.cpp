#include "oracles.hpp"

#include "n2g/optim.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace n2g;

namespace {

ModelParams<double> random_model(std::uint64_t seed, std::uint32_t classes = 3) {
    NetConfig cfg;
    cfg.heads = 4;
    cfg.hidden = 5;
    Rng rng(seed);
    auto p = init_params<double>(cfg, 6, 3, classes, rng);
    oracle::randomize(p, rng);
    return p;
}

ModelParams<double> scalar_model(double x) {
    ModelParams<double> p;
    p.conv_weight = {x};
    return p;
}

} // namespace

TEST_SUITE("optim") {

TEST_CASE("uniform logits cost ln C") {
    const auto p = random_model(1, 7);
    const std::vector<double> logits(4 * 7, 0.25);
    const std::vector<std::int32_t> targets{0, 3, 6, 2};
    const auto r = total_loss<double>(logits, 4, 7, targets, p, LossConfig{});
    CHECK(r.task_loss == doctest::Approx(std::log(7.0)).epsilon(1e-14));
    CHECK(r.regularizer == 0.0);
}

TEST_CASE("confident correct predictions cost almost nothing") {
    const auto p = random_model(2);
    std::vector<double> logits{40, 0, 0, 0, 40, 0};
    const std::vector<std::int32_t> targets{0, 1};
    CHECK(total_loss<double>(logits, 2, 3, targets, p, LossConfig{}).total < 1e-15);
    LossConfig bce;
    bce.task = LossKind::binary_cross_entropy;
    std::vector<double> ml{40, -40, -40, -40, 40, 40};
    const std::vector<std::int32_t> flags{1, 0, 0, 0, 1, 1};
    CHECK(total_loss<double>(ml, 2, 3, flags, p, bce).total < 1e-15);
}

TEST_CASE("regularizer equals the direct sums") {
    const auto p = random_model(3);
    LossConfig cfg;
    cfg.lambda = 0.01;
    cfg.lambda_att = 0.3;
    double w = 0.0, a = 0.0;
    for (double v : p.conv_weight) w += v * v;
    for (double v : p.fc1_weight) w += v * v;
    for (double v : p.fc2_weight) w += v * v;
    for (double v : p.attention) a += v * v;
    CHECK(regularizer(p, cfg) == doctest::Approx(0.01 * w + 0.3 * a).epsilon(1e-13));

    auto g = p.zeros_like();
    add_regularizer_grad(p, cfg, g);
    for (std::size_t i = 0; i < p.fc1_weight.size(); ++i) CHECK(g.fc1_weight[i] == doctest::Approx(0.02 * p.fc1_weight[i]));
    for (std::size_t i = 0; i < p.attention.size(); ++i) CHECK(g.attention[i] == doctest::Approx(0.6 * p.attention[i]));
    for (double v : g.fc1_bias) CHECK(v == 0.0);
}

TEST_CASE("every tensor falls under exactly one coefficient, biases under none") {
    auto p = random_model(4);
    p.for_each_tensor([](auto, ParamRole, auto values) {
        for (auto& v : values) v = 1.0;
    });
    std::size_t weights = 0, attention = 0, biases = 0;
    p.for_each_tensor([&](auto, ParamRole role, auto values) {
        (role == ParamRole::weight ? weights : role == ParamRole::attention ? attention : biases) += values.size();
    });
    CHECK(weights + attention + biases == p.parameter_count());
    CHECK(regularizer(p, LossConfig{1.0, 0.0}) == doctest::Approx(static_cast<double>(weights)));
    CHECK(regularizer(p, LossConfig{0.0, 1.0}) == doctest::Approx(static_cast<double>(attention)));
    CHECK(attention == p.attention.size());
    CHECK(biases == p.conv_bias.size() + p.fc1_bias.size() + p.fc2_bias.size());
}

TEST_CASE("logit gradient matches central differences") {
    const auto p = random_model(5, 4);
    Rng rng(6);
    std::uniform_real_distribution<double> u(-3, 3);
    for (LossKind kind : {LossKind::cross_entropy, LossKind::binary_cross_entropy}) {
        LossConfig cfg;
        cfg.task = kind;
        std::vector<double> logits(3 * 4);
        for (auto& v : logits) v = u(rng);
        std::vector<std::int32_t> targets =
            kind == LossKind::cross_entropy ? std::vector<std::int32_t>{1, 3, 0}
                                            : std::vector<std::int32_t>{1, 0, 0, 1, 0, 1, 1, 0, 0, 0, 0, 1};
        const auto r = total_loss<double>(logits, 3, 4, targets, p, cfg);
        for (std::size_t i = 0; i < logits.size(); ++i) {
            auto up = logits, down = logits;
            up[i] += 1e-5;
            down[i] -= 1e-5;
            const double num = (total_loss<double>(up, 3, 4, targets, p, cfg).task_loss -
                                total_loss<double>(down, 3, 4, targets, p, cfg).task_loss) /
                               2e-5;
            CHECK(std::abs(num - r.dlogits[i]) <= 1e-4 * std::max(1e-6, std::abs(num)));
        }
        for (std::size_t s = 0; s < 3; ++s) {
            if (kind == LossKind::cross_entropy) {
                // softmax - onehot sums to zero, so the softmax row sums to one
                double row = 0.0;
                for (std::size_t c = 0; c < 4; ++c) row += r.dlogits[s * 4 + c];
                CHECK(std::abs(row) < 1e-12);
            } else {
                for (std::size_t c = 0; c < 4; ++c) {
                    const double prob = r.dlogits[s * 4 + c] * 12.0 + targets[s * 4 + c];
                    CHECK(prob > 0.0);
                    CHECK(prob < 1.0);
                }
            }
        }
    }
}

TEST_CASE("full-batch loss is the weighted mean of mini-batch losses") {
    const auto p = random_model(7, 5);
    Rng rng(8);
    std::uniform_real_distribution<double> u(-2, 2);
    std::vector<double> logits(10 * 5);
    for (auto& v : logits) v = u(rng);
    std::vector<std::int32_t> targets(10);
    for (auto& t : targets) t = static_cast<std::int32_t>(rng() % 5);
    const double full = total_loss<double>(logits, 10, 5, targets, p, LossConfig{}).task_loss;
    double weighted = 0.0;
    for (std::size_t lo : {0, 3, 7}) {
        const std::size_t b = lo == 0 ? 3 : lo == 3 ? 4 : 3;
        weighted += b * total_loss<double>(std::span<const double>(logits).subspan(lo * 5, b * 5), b, 5,
                                           std::span<const std::int32_t>(targets).subspan(lo, b), p, LossConfig{})
                            .task_loss;
    }
    CHECK(std::abs(full - weighted / 10.0) <= 1e-10);
}

TEST_CASE("bad targets and logits are rejected") {
    const auto p = random_model(9);
    const std::vector<double> logits(3, 0.0);
    CHECK_THROWS_AS(total_loss<double>(logits, 1, 3, std::vector<std::int32_t>{3}, p, LossConfig{}), std::out_of_range);
    CHECK_THROWS_AS(total_loss<double>(logits, 1, 3, std::vector<std::int32_t>{-1}, p, LossConfig{}), std::out_of_range);
    const std::vector<double> bad{0.0, std::nan(""), 0.0};
    CHECK_THROWS_AS(total_loss<double>(bad, 1, 3, std::vector<std::int32_t>{0}, p, LossConfig{}), std::domain_error);
    LossConfig bce;
    bce.task = LossKind::binary_cross_entropy;
    CHECK_THROWS_AS(total_loss<double>(logits, 1, 3, std::vector<std::int32_t>{0, 2, 1}, p, bce), std::out_of_range);
}

TEST_CASE("attention coefficient relation") {
    CHECK(LossConfig{0.001, 0.01}.attention_dominates());
    CHECK_FALSE(LossConfig{0.01, 0.001}.attention_dominates());
    CHECK(LossConfig{0.01, 0.0}.attention_dominates());
}

TEST_CASE("zero gradient without decay leaves parameters alone") {
    for (OptimizerKind kind : {OptimizerKind::rmsprop, OptimizerKind::nadam}) {
        auto p = random_model(10);
        const auto before = p;
        OptimizerConfig cfg;
        cfg.kind = kind;
        OptimizerState<double> st(cfg, p);
        optimizer_step(st, p, p.zeros_like());
        CHECK(p == before);
        CHECK(st.step == 1);
    }
}

TEST_CASE("decoupled decay shrinks weights only") {
    auto p = random_model(11);
    const auto before = p;
    OptimizerConfig cfg;
    cfg.weight_decay = 0.5;
    OptimizerState<double> st(cfg, p);
    rmsprop_step(st, p, p.zeros_like());
    for (std::size_t i = 0; i < p.fc1_weight.size(); ++i)
        CHECK(p.fc1_weight[i] == doctest::Approx(before.fc1_weight[i] * (1.0 - 0.008 * 0.5)).epsilon(1e-14));
    CHECK(p.attention == before.attention);
    CHECK(p.fc2_bias == before.fc2_bias);
}

TEST_CASE("RMSprop settles a one-dimensional quadratic") {
    auto p = scalar_model(1.0);
    OptimizerState<double> st(OptimizerConfig{}, p);
    for (int i = 0; i < 500; ++i) {
        auto g = p.zeros_like();
        g.conv_weight[0] = 2.0 * p.conv_weight[0];
        rmsprop_step(st, p, g);
    }
    CHECK(std::abs(p.conv_weight[0]) < 1e-2);
}

TEST_CASE("first Nadam step on a unit gradient") {
    auto p = scalar_model(0.0);
    OptimizerConfig cfg;
    cfg.kind = OptimizerKind::nadam;
    cfg.lr = 0.001;
    OptimizerState<double> st(cfg, p);
    auto g = p.zeros_like();
    g.conv_weight[0] = 1.0;
    nadam_step(st, p, g);
    // m_hat = 0.9 * 0.1 / (1 - 0.81) + 0.1 / 0.1 = 28 / 19;  v_hat = 1
    CHECK(p.conv_weight[0] == doctest::Approx(-0.001 * (28.0 / 19.0) / (1.0 + 1e-8)).epsilon(1e-12));
}

TEST_CASE("non-finite gradients are rejected before any change") {
    for (OptimizerKind kind : {OptimizerKind::rmsprop, OptimizerKind::nadam}) {
        auto p = random_model(12);
        const auto before = p;
        OptimizerConfig cfg;
        cfg.kind = kind;
        OptimizerState<double> st(cfg, p);
        auto g = p.zeros_like();
        g.fc1_weight[0] = 1.0;
        g.fc2_bias[0] = std::numeric_limits<double>::infinity();
        CHECK_THROWS_AS(optimizer_step(st, p, g), std::domain_error);
        CHECK(p == before);
        CHECK(st.step == 0);
        CHECK(st.second == p.zeros_like());
    }
}

TEST_CASE("optimizer steps are deterministic") {
    for (OptimizerKind kind : {OptimizerKind::rmsprop, OptimizerKind::nadam}) {
        auto a = random_model(13), b = random_model(13);
        OptimizerConfig cfg;
        cfg.kind = kind;
        OptimizerState<double> sa(cfg, a), sb(cfg, b);
        const auto g = random_model(14);
        for (int i = 0; i < 3; ++i) {
            optimizer_step(sa, a, g);
            optimizer_step(sb, b, g);
        }
        CHECK(a == b);
    }
}

}
