#include <doctest.h>

#include "causalmix/causalmix.hpp"
#include "test_support.hpp"

using namespace causalmix;
using namespace testsupport;

TEST_SUITE_BEGIN("estimate");

TEST_CASE("one-node sampling hits the binomial 4-sigma band") {
    const auto net = make_net<double>({2}, {{}}, {{{0.5, 0.5}}});
    const std::size_t m = 1000000;
    const auto samples = ancestral_sample(net, {17}, m);
    std::size_t zeros = 0;
    for (std::size_t r = 0; r < m; ++r) zeros += samples.at(r, 0) == 0 ? 1 : 0;
    const double freq = static_cast<double>(zeros) / static_cast<double>(m);
    CHECK(freq == doctest::Approx(0.5).epsilon(0.004)); // 4 * 0.5 / sqrt(M)
}

TEST_CASE("deterministic CPTs sample deterministically") {
    const auto net = make_net<double>({2, 2}, {{}, {0}},
                                      {{{1.0, 0.0}}, {{1.0, 0.0}, {0.0, 1.0}}},
                                      /*positivity=*/false);
    const auto samples = ancestral_sample(net, {5}, 1000);
    for (std::size_t r = 0; r < samples.rows(); ++r) {
        CHECK(samples.at(r, 0) == 0);
        CHECK(samples.at(r, 1) == 0);
    }
}

TEST_CASE("example C.1 sampling reproduces the joint within 0.002") {
    const auto net = example_c1_net<double>();
    const std::size_t m = 1000000;
    const auto samples = ancestral_sample(net, {29}, m);
    Assignment both_zero(2);
    both_zero.set(0, 0);
    both_zero.set(1, 0);
    CHECK(empirical_marginal(samples, both_zero) == doctest::Approx(0.25).epsilon(0.008));
}

TEST_CASE("identical seeds reproduce identical sample sets bit for bit") {
    const auto net = example_c2_net<double>();
    const auto a = ancestral_sample(net, {123}, 5000);
    const auto b = ancestral_sample(net, {123}, 5000);
    CHECK(a.data == b.data);
    const auto c = ancestral_sample(net, {124}, 5000);
    CHECK(a.data != c.data);

    const auto ts = example_c2_tuples<double>(0.2, 0.3, 0.5);
    const auto ma = mixture_sample(net, ts, {9}, 5000);
    const auto mb = mixture_sample(net, ts, {9}, 5000);
    CHECK(ma.data == mb.data);
}

TEST_CASE("mixture sampling matches mixture_prob and trivial cases") {
    SUBCASE("trivial mixture equals observational sampling in distribution") {
        const auto net = example_c1_net<double>();
        const InterventionTupleSet<double> ts({{InterventionTarget(), 1.0}});
        const auto samples = mixture_sample(net, ts, {41}, 200000);
        Assignment a(2);
        a.set(0, 0);
        CHECK(empirical_marginal(samples, a) == doctest::Approx(0.5).epsilon(0.01));
    }
    SUBCASE("example C.1 mixture frequency near 0.75") {
        const auto net = example_c1_net<double>();
        const auto samples = mixture_sample(net, example_c1_tuples<double>(), {43}, 1000000);
        Assignment a(2);
        a.set(0, 0);
        a.set(1, 0);
        CHECK(empirical_marginal(samples, a) == doctest::Approx(0.75).epsilon(0.003));
    }
    SUBCASE("weight-1 target forces its column") {
        const auto net = example_c1_net<double>();
        const InterventionTupleSet<double> ts({{InterventionTarget({{0, 0}}), 1.0}});
        const auto samples = mixture_sample(net, ts, {47}, 1000);
        for (std::size_t r = 0; r < samples.rows(); ++r) CHECK(samples.at(r, 0) == 0);
    }
}

TEST_CASE("mle_cpds smooths one-sided counts as delta/(1+2*delta)") {
    SampleSet samples;
    samples.num_nodes = 1;
    samples.data.assign(100, 0);
    const auto skeleton = make_net<double>({2}, {{}}, {{{0.5, 0.5}}});
    const double delta = 1e-6;
    const auto net = mle_cpds(samples, skeleton, delta);
    const double expected_tail = delta / (1.0 + 2.0 * delta);
    CHECK(net.cpds[0].table[0][1] == doctest::Approx(expected_tail).epsilon(1e-12));
    CHECK(net.cpds[0].table[0][0] + net.cpds[0].table[0][1] == doctest::Approx(1.0));
    CHECK(validate(net).ok()); // positivity restored
}

TEST_CASE("unobserved parent rows become uniform after smoothing") {
    // V1 -> V2 with V1 constant 0 in the data: row for V1=1 is never seen
    SampleSet samples;
    samples.num_nodes = 2;
    for (int r = 0; r < 50; ++r) {
        samples.data.push_back(0);
        samples.data.push_back(r % 2);
    }
    const auto skeleton = example_c1_net<double>();
    const auto net = mle_cpds(samples, skeleton, 1e-6);
    CHECK(net.cpds[1].table[1][0] == doctest::Approx(0.5));
    CHECK(net.cpds[1].table[1][1] == doctest::Approx(0.5));
}

TEST_CASE("example C.1 estimates converge at M = 2^20") {
    const auto net = example_c1_net<double>();
    const std::size_t m = 1 << 20;
    const auto samples = ancestral_sample(net, {71}, m);
    const auto net_hat = mle_cpds(samples, net, 1e-6);
    for (std::size_t v = 0; v < 2; ++v) {
        for (std::size_t r = 0; r < net.cpds[v].table.size(); ++r) {
            for (std::size_t j = 0; j < 2; ++j) {
                CHECK(std::fabs(net_hat.cpds[v].table[r][j] - 0.5) < 0.004);
            }
        }
    }
}

TEST_CASE("mle_cpds rejects empty input") {
    SampleSet samples;
    samples.num_nodes = 1;
    const auto skeleton = make_net<double>({2}, {{}}, {{{0.5, 0.5}}});
    CHECK_THROWS_AS((void)mle_cpds(samples, skeleton, 1e-6), CausalError);
}

TEST_CASE("empirical_marginal boundary behavior") {
    const auto net = example_c1_net<double>();
    const auto samples = ancestral_sample(net, {3}, 1000);
    SUBCASE("empty partial is 1") {
        CHECK(empirical_marginal(samples, Assignment(2)) == 1.0);
    }
    SUBCASE("contradicting a constant column is 0") {
        const InterventionTupleSet<double> ts({{InterventionTarget({{0, 1}}), 1.0}});
        const auto forced = mixture_sample(net, ts, {3}, 1000);
        Assignment a(2);
        a.set(0, 0);
        CHECK(empirical_marginal(forced, a) == 0.0);
    }
    SUBCASE("single-column marginals sum to exactly 1") {
        double sum = 0;
        for (std::int32_t v = 0; v < 2; ++v) {
            Assignment a(2);
            a.set(1, v);
            sum += empirical_marginal(samples, a);
        }
        CHECK(sum == 1.0);
    }
}

TEST_CASE("empirical oracle agrees with the scan on prefix and non-prefix queries") {
    const auto net = example_c2_net<double>();
    const auto ts = example_c2_tuples<double>(0.5, 0.3, 0.2);
    const auto samples = mixture_sample(net, ts, {61}, 20000);
    const EmpiricalOracle oracle(samples, topological_order(net));

    Assignment prefix2(3);
    prefix2.set(0, 0);
    prefix2.set(1, 1);
    CHECK(oracle.prob(prefix2) == empirical_marginal(samples, prefix2));

    Assignment non_prefix(3);
    non_prefix.set(2, 1);
    CHECK(oracle.prob(non_prefix) == empirical_marginal(samples, non_prefix));

    Assignment full(3);
    full.set(0, 0);
    full.set(1, 0);
    full.set(2, 0);
    CHECK(oracle.prob(full) == empirical_marginal(samples, full));
}

TEST_SUITE_END();
