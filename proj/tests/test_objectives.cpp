#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "prdiag/objectives.hpp"
#include "prdiag/rng.hpp"

using namespace prdiag;

namespace {

TokenizedResponse<double> make_response(std::vector<double> values, Eigen::Index p_len) {
    TokenizedResponse<double> resp;
    resp.values = Eigen::Map<ArrayX<double>>(values.data(),
                                             static_cast<Eigen::Index>(values.size()));
    resp.perception_len = p_len;
    resp.reasoning_len = static_cast<Eigen::Index>(values.size()) - p_len;
    return resp;
}

TokenizedResponse<double> random_response(Rng& rng, int max_span = 64) {
    int p = 1 + static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(max_span)));
    int r = 1 + static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(max_span)));
    std::vector<double> values;
    for (int i = 0; i < p + r; ++i) values.push_back(3.0 * rng.uniform_real());
    return make_response(std::move(values), p);
}

}  // namespace

TEST_CASE("sft_losses sums spans") {
    auto resp = make_response({0.5, 0.5, 0.3, 0.3, 0.3, 0.3}, 2);
    auto losses = sft_losses(resp);
    CHECK(losses.perception_sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(losses.reasoning_sum == doctest::Approx(1.2).epsilon(1e-12));
    CHECK(losses.token_mean == doctest::Approx(2.2 / 6.0).epsilon(1e-12));

    auto zeros = make_response({0, 0, 0}, 1);
    auto zl = sft_losses(zeros);
    CHECK(zl.perception_sum == 0.0);
    CHECK(zl.reasoning_sum == 0.0);
    CHECK(zl.token_mean == 0.0);

    // Degenerate reasoning span.
    auto p_only = make_response({1.0, 1.0}, 2);
    auto pl = sft_losses(p_only);
    CHECK(pl.perception_sum == 2.0);
    CHECK(pl.reasoning_sum == 0.0);
    CHECK(pl.token_mean == 1.0);

    CHECK_THROWS_AS(sft_losses(make_response({}, 0)), std::invalid_argument);
}

TEST_CASE("sft_reweighted evaluates the convex combination") {
    // lambda equal to the perception token fraction recovers the standard
    // token-averaged loss.
    CHECK(sft_reweighted(2.0, 30.0, 4, 96, 0.04) == doctest::Approx(0.32).epsilon(1e-12));
    CHECK(sft_reweighted(2.0, 30.0, 4, 96, 0.5) ==
          doctest::Approx(0.40625).epsilon(1e-12));
    CHECK(sft_reweighted(2.0, 30.0, 4, 96, 1.0) == 0.5);

    CHECK_THROWS_AS(sft_reweighted(1.0, 1.0, 4, 4, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(sft_reweighted(1.0, 1.0, 0, 4, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(sft_reweighted(1.0, 1.0, 4, 0, 0.5), std::invalid_argument);
    // Zero span is fine when its weight is zero.
    CHECK(sft_reweighted(1.0, 4.0, 0, 4, 0.0) == 1.0);
    CHECK(sft_reweighted(3.0, 0.0, 3, 0, 1.0) == 1.0);
}

TEST_CASE("sft reweighting identity at the token fraction") {
    Rng rng(11);
    for (int i = 0; i < 1000; ++i) {
        auto resp = random_response(rng);
        auto losses = sft_losses(resp);
        double lam = static_cast<double>(resp.perception_len) /
                     static_cast<double>(resp.total_len());
        double reweighted = sft_reweighted(losses.perception_sum, losses.reasoning_sum,
                                           resp.perception_len, resp.reasoning_len, lam);
        CHECK(std::abs(reweighted - losses.token_mean) <=
              1e-12 * std::max(1.0, std::abs(losses.token_mean)));
    }
}

TEST_CASE("sft_reweighted is linear in lambda") {
    Rng rng(12);
    for (int i = 0; i < 50; ++i) {
        auto resp = random_response(rng);
        auto losses = sft_losses(resp);
        auto at = [&](double lam) {
            return sft_reweighted(losses.perception_sum, losses.reasoning_sum,
                                  resp.perception_len, resp.reasoning_len, lam);
        };
        double slope = losses.perception_sum / static_cast<double>(resp.perception_len) -
                       losses.reasoning_sum / static_cast<double>(resp.reasoning_len);
        CHECK(at(0.75) - at(0.25) == doctest::Approx(0.5 * slope).epsilon(1e-9));
    }
}

TEST_CASE("ngdiff_weight") {
    CHECK(ngdiff_weight<double>({2.0, 2.0}).lambda == 0.5);
    CHECK_FALSE(ngdiff_weight<double>({2.0, 2.0}).degenerate);
    CHECK(ngdiff_weight<double>({1.0, 3.0}).lambda == 0.75);

    auto degenerate = ngdiff_weight<double>({0.0, 3.0});
    CHECK(degenerate.lambda == 0.5);
    CHECK(degenerate.degenerate);

    Rng rng(13);
    for (int i = 0; i < 100; ++i) {
        double a = 0.1 + rng.uniform_real() * 10;
        double b = 0.1 + rng.uniform_real() * 10;
        auto base = ngdiff_weight<double>({a, b});
        auto scaled = ngdiff_weight<double>({10 * a, 10 * b});
        CHECK(base.lambda == doctest::Approx(scaled.lambda).epsilon(1e-12));
        CHECK(base.lambda > 0.0);
        CHECK(base.lambda < 1.0);
        // Strictly decreasing in the perception norm.
        CHECK(ngdiff_weight<double>({a * 1.5, b}).lambda < base.lambda);
    }
}

TEST_CASE("grpo_advantages normalizes within the group") {
    ArrayX<double> rewards(4);
    rewards << 1, 1, 0, 0;
    ArrayX<double> advantages = grpo_advantages(rewards);
    CHECK(advantages(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(advantages(1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(advantages(2) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(advantages(3) == doctest::Approx(-1.0).epsilon(1e-12));

    ArrayX<double> constant(3);
    constant << 0.5, 0.5, 0.5;
    CHECK((grpo_advantages(constant) == 0.0).all());

    ArrayX<double> single(1);
    single << 1.0;
    CHECK_THROWS_AS(grpo_advantages(single), std::invalid_argument);

    Rng rng(14);
    for (int g : {2, 4, 8, 16}) {
        ArrayX<double> r(g);
        for (int i = 0; i < g; ++i) r(i) = rng.uniform_real() * 4 - 2;
        ArrayX<double> adv = grpo_advantages(r);
        CHECK(std::abs(adv.mean()) < 1e-12);
        CHECK(std::abs(std::sqrt((adv - adv.mean()).square().mean()) - 1.0) < 1e-12);
    }
}

TEST_CASE("grpo_advantages is permutation equivariant") {
    ArrayX<double> rewards(5);
    rewards << 0.3, 0.9, 0.1, 0.7, 0.5;
    ArrayX<double> advantages = grpo_advantages(rewards);
    std::vector<int> perm{4, 2, 0, 1, 3};
    ArrayX<double> permuted(5), expected(5);
    for (int i = 0; i < 5; ++i) {
        permuted(i) = rewards(perm[static_cast<std::size_t>(i)]);
        expected(i) = advantages(perm[static_cast<std::size_t>(i)]);
    }
    ArrayX<double> result = grpo_advantages(permuted);
    for (int i = 0; i < 5; ++i) CHECK(result(i) == doctest::Approx(expected(i)).epsilon(1e-14));
}

TEST_CASE("rescale_advantages spans and identities") {
    auto resp = make_response(std::vector<double>(10, 1.0), 2);

    // lambda equal to the perception token fraction is a no-op, exactly.
    ArrayX<double> flat = rescale_advantages(resp, 1.0, 0.2);
    CHECK((flat == 1.0).all());

    ArrayX<double> shaped = rescale_advantages(resp, 1.0, 0.5);
    CHECK(shaped(0) == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(shaped(1) == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(shaped(2) == doctest::Approx(0.625).epsilon(1e-12));
    CHECK(shaped(9) == doctest::Approx(0.625).epsilon(1e-12));

    CHECK((rescale_advantages(resp, 0.0, 0.7) == 0.0).all());

    auto no_reasoning = make_response({1.0, 1.0}, 2);
    CHECK_THROWS_AS(rescale_advantages(no_reasoning, 1.0, 0.5), std::invalid_argument);
}

TEST_CASE("rescale identity is exact at the token fraction") {
    Rng rng(15);
    for (int i = 0; i < 1000; ++i) {
        auto resp = random_response(rng, 200);
        double advantage = rng.uniform_real() * 4 - 2;
        double lam = static_cast<double>(resp.perception_len) /
                     static_cast<double>(resp.total_len());
        ArrayX<double> rescaled = rescale_advantages(resp, advantage, lam);
        CHECK((rescaled == advantage).all());
    }
}

TEST_CASE("grpo_objective collapses when ratios are 1") {
    GroupRollouts<double> group;
    group.rewards = ArrayX<double>::Zero(3);
    std::vector<ArrayX<double>> advantages;
    std::vector<double> per_response{0.5, -1.0, 0.25};
    for (double a : per_response) {
        auto resp = make_response(std::vector<double>(8, 1.0), 3);
        group.responses.push_back(resp);
        advantages.push_back(ArrayX<double>::Constant(8, a));
    }
    double expected = (0.5 - 1.0 + 0.25) / 3.0;
    CHECK(grpo_objective(group, advantages) == doctest::Approx(expected).epsilon(1e-12));

    // G = 1 with zero advantage.
    GroupRollouts<double> tiny;
    tiny.rewards = ArrayX<double>::Zero(1);
    tiny.responses.push_back(make_response(std::vector<double>(4, 1.3), 2));
    std::vector<ArrayX<double>> zero{ArrayX<double>::Zero(4)};
    CHECK(grpo_objective(tiny, zero) == 0.0);

    std::vector<ArrayX<double>> mismatched{ArrayX<double>::Zero(3)};
    CHECK_THROWS_AS(grpo_objective(tiny, mismatched), std::invalid_argument);
}

TEST_CASE("rescaled objective equals the decomposed reweighting") {
    Rng rng(16);
    for (int trial = 0; trial < 1000; ++trial) {
        int g = 1 + static_cast<int>(rng.uniform_below(4));
        GroupRollouts<double> group;
        group.rewards = ArrayX<double>::Zero(g);
        std::vector<ArrayX<double>> rescaled, flat;
        double lam = rng.uniform_real();
        for (int i = 0; i < g; ++i) {
            int p = 1 + static_cast<int>(rng.uniform_below(32));
            int r = 1 + static_cast<int>(rng.uniform_below(96));
            std::vector<double> ratios;
            for (int t = 0; t < p + r; ++t) ratios.push_back(0.5 + rng.uniform_real());
            auto resp = make_response(std::move(ratios), p);
            double advantage = rng.uniform_real() * 4 - 2;
            rescaled.push_back(rescale_advantages(resp, advantage, lam));
            flat.push_back(ArrayX<double>::Constant(resp.total_len(), advantage));
            group.responses.push_back(std::move(resp));
        }
        double objective = grpo_objective(group, rescaled);
        auto parts = grpo_decomposed(group, flat);
        double recomposed = lam * parts.perception + (1.0 - lam) * parts.reasoning;
        CHECK(std::abs(objective - recomposed) <=
              1e-10 * std::max(1.0, std::abs(objective)));
    }
}
