#include <doctest.h>

#include <algorithm>

#include "causalmix/causalmix.hpp"
#include "test_support.hpp"

using namespace causalmix;
using namespace testsupport;

namespace {

InstanceConfig small_cfg(std::int32_t nodes, std::int32_t card, std::int32_t m_max,
                         std::uint64_t seed) {
    InstanceConfig cfg;
    cfg.nodes = nodes;
    cfg.cardinality = card;
    cfg.m_min = 1;
    cfg.m_max = m_max;
    cfg.seed = seed;
    return cfg;
}

// Independent per-level recovery on a 3-node instance: for every reduced
// target, set up the unsubstituted (k+1)-variable system (k lift weights plus
// the bare-target remainder), pin one lift weight to zero at a time, solve by
// generic rational elimination, and accept iff all equations hold and the
// solution is nonnegative. Cross-checks lift_level's closed-form route.
InterventionTupleSet<Rational> brute_force_level(
    const CausalNet<Rational>& net, const std::vector<NodeId>& order, std::size_t level,
    const InterventionTupleSet<Rational>& reduced, const MarginalOracle<Rational>& mix) {
    const NodeId new_node = order[level - 1];
    const std::size_t k = static_cast<std::size_t>(net.cardinality(new_node));
    const std::span<const NodeId> prev(order.data(), level - 1);
    const std::span<const NodeId> cur(order.data(), level);

    const auto targets = reduced.targets();
    std::vector<ValueCode> witness(net.size(), 0);
    for (NodeId u : prev) {
        const auto v = smallest_excluded_value(targets, u, net.cardinality(u));
        REQUIRE(v.has_value());
        witness[static_cast<std::size_t>(u)] = *v;
    }

    std::vector<InterventionTuple<Rational>> result;
    for (std::size_t i = 0; i < reduced.size(); ++i) {
        const auto& s_i = reduced[i].target;
        const Rational& mu_i = reduced[i].weight;
        Assignment setting(net.size());
        for (NodeId u : prev) {
            const auto forced = s_i.value_of(u);
            setting.set(u, forced ? *forced : witness[static_cast<std::size_t>(u)]);
        }
        // rows: k settings plus the conservation equation
        std::vector<std::vector<Rational>> rows;
        std::vector<Rational> rhs;
        for (std::size_t l = 0; l < k; ++l) {
            setting.set(new_node, static_cast<ValueCode>(l));
            std::vector<Rational> row(k + 1);
            for (std::size_t lp = 0; lp < k; ++lp) {
                row[lp] = interventional_prefix_prob(
                    net, s_i.with(new_node, static_cast<ValueCode>(lp)), setting, cur);
            }
            row[k] = interventional_prefix_prob(net, s_i, setting, cur);
            Rational delta = 0;
            for (const auto& done : result) {
                delta += done.weight * interventional_prefix_prob(net, done.target, setting, cur);
            }
            rows.push_back(std::move(row));
            rhs.push_back(mix.prob(setting) - delta);
        }
        setting.unset(new_node);
        rows.push_back(std::vector<Rational>(k + 1, Rational(1)));
        rhs.push_back(mu_i);

        std::optional<std::vector<Rational>> accepted;
        for (std::size_t zero = 0; zero < k; ++zero) {
            // eliminate column `zero`, solve k of the k+1 equations, verify all
            std::vector<std::vector<Rational>> m;
            std::vector<Rational> r;
            for (std::size_t e = 0; e + 1 < rows.size() + 1 && m.size() < k; ++e) {
                std::vector<Rational> row;
                for (std::size_t c = 0; c < k + 1; ++c) {
                    if (c != zero) row.push_back(rows[e][c]);
                }
                m.push_back(std::move(row));
                r.push_back(rhs[e]);
            }
            const auto partial = rational_solve(m, r);
            if (!partial) continue;
            std::vector<Rational> full(k + 1);
            for (std::size_t c = 0, j = 0; c < k + 1; ++c) {
                full[c] = c == zero ? Rational(0) : (*partial)[j++];
            }
            bool ok = true;
            for (const auto& xi : full) {
                if (xi < 0) ok = false;
            }
            for (std::size_t e = 0; ok && e < rows.size(); ++e) {
                Rational lhs = 0;
                for (std::size_t c = 0; c < k + 1; ++c) lhs += rows[e][c] * full[c];
                if (lhs != rhs[e]) ok = false;
            }
            if (!ok) continue;
            if (accepted) {
                CHECK(*accepted == full); // multiple zeros must mean the same solution
            } else {
                accepted = full;
            }
        }
        REQUIRE(accepted.has_value());
        for (std::size_t lp = 0; lp < k; ++lp) {
            if ((*accepted)[lp] > 0) {
                result.push_back(
                    {s_i.with(new_node, static_cast<ValueCode>(lp)), (*accepted)[lp]});
            }
        }
        if ((*accepted)[k] > 0) result.push_back({s_i, (*accepted)[k]});
    }
    return InterventionTupleSet<Rational>(std::move(result));
}

} // namespace

TEST_SUITE_BEGIN("disentangle");

TEST_CASE("golden: example C.1 is recovered exactly") {
    const auto net = example_c1_net<Rational>();
    const auto truth = example_c1_tuples<Rational>();
    const auto recovered = disentangle_oracle(net, truth);
    CHECK(recovered == truth);
    REQUIRE(recovered.size() == 2);
    CHECK(recovered[0].weight == Rational(1, 2));
    CHECK(recovered[1].weight == Rational(1, 2));
}

TEST_CASE("golden: example C.2 recovers all six lift coefficients") {
    const auto net = example_c2_net<Rational>();
    // planted positive (mu0, mu1, mu2); the other three lifts must come back 0
    const auto truth =
        example_c2_tuples<Rational>(Rational(1, 4), Rational(7, 20), Rational(2, 5));
    const auto recovered = disentangle_oracle(net, truth);
    CHECK(recovered == truth);
    REQUIRE(recovered.size() == 3);
    CHECK(recovered[0].weight == Rational(1, 4));
    CHECK(recovered[1].weight == Rational(7, 20));
    CHECK(recovered[2].weight == Rational(2, 5));
}

TEST_CASE("golden: appendix B.1 works without positivity") {
    const auto net = example_b1_net<Rational>();
    auto strict = net;
    strict.positivity_flag = true;
    REQUIRE_FALSE(validate(strict).ok()); // the joint truly violates positivity
    const auto truth = example_c1_tuples<Rational>();
    const auto recovered = disentangle_oracle(net, truth);
    CHECK(recovered == truth);
}

TEST_CASE("observational mixture collapses to the empty tuple") {
    const auto net = example_c2_net<Rational>();
    const NetOracle<Rational> as_mix(net);
    const auto recovered = disentangle_oracle(net, as_mix);
    REQUIRE(recovered.size() == 1);
    CHECK(recovered[0].target.empty());
    CHECK(recovered[0].weight == 1);
}

TEST_CASE("base_case examples") {
    const auto net = make_net<Rational>({3}, {{}}, {{{0.2, 0.5, 0.3}}});
    const NetOracle<Rational> p(net);
    DisentangleOptions<Rational> opt;

    SUBCASE("mix equal to P itself gives the empty tuple") {
        const auto out = base_case<Rational>(0, 3, p, p, 1, opt);
        REQUIRE(out.size() == 1);
        CHECK(out[0].target.empty());
        CHECK(out[0].weight == 1);
    }
    SUBCASE("a pure point mass is the do() of that value") {
        const InterventionTupleSet<Rational> truth({{InterventionTarget({{0, 1}}), Rational(1)}});
        const MixtureOracle<Rational> mix(net, truth);
        const auto out = base_case<Rational>(0, 3, p, mix, 1, opt);
        CHECK(out == truth);
    }
    SUBCASE("k=3 planted weights are recovered exactly") {
        const InterventionTupleSet<Rational> truth({
            {InterventionTarget({{0, 0}}), Rational(3, 10)},
            {InterventionTarget({{0, 1}}), Rational(2, 10)},
            {InterventionTarget(), Rational(5, 10)},
        });
        const MixtureOracle<Rational> mix(net, truth);
        const auto out = base_case<Rational>(0, 3, p, mix, 1, opt);
        CHECK(out == truth);
    }
}

TEST_CASE("lift_level agrees with the brute-force full-system solve") {
    auto rng = SplitMix64(777);
    int checked = 0;
    for (int trial = 0; trial < 40 && checked < 15; ++trial) {
        const auto cfg = small_cfg(3, 2 + static_cast<std::int32_t>(rng.next_below(2)), 4,
                                   rng.next_u64());
        const auto net = to_rational(random_cbn(random_dag(cfg), 2.0, cfg.seed));
        const auto truth =
            to_rational(random_tupleset(to_real(net), cfg, cfg.seed), /*renormalize=*/true);
        const auto order = topological_order(net);

        const MixtureOracle<Rational> mix(net, truth);
        const NetOracle<Rational> p(net);
        DisentangleOptions<Rational> opt;
        opt.check_vanishing = true;

        // walk both routes level by level
        auto engine_set = base_case<Rational>(order[0], net.cardinality(order[0]), p, mix,
                                              net.size(), opt);
        for (std::size_t level = 2; level <= net.size(); ++level) {
            const auto lifted = lift_level(net, order, level, engine_set, mix, opt);
            const auto brute = brute_force_level(net, order, level, engine_set, mix);
            CHECK(lifted == brute);
            engine_set = lifted;
        }
        CHECK(engine_set == truth);
        ++checked;
    }
    CHECK(checked >= 15);
}

TEST_CASE("lift with trivial reduced set and observational mixture stays trivial") {
    const auto net = example_c1_net<Rational>();
    const auto order = topological_order(net);
    const NetOracle<Rational> p(net);
    const InterventionTupleSet<Rational> trivial({{InterventionTarget(), Rational(1)}});
    DisentangleOptions<Rational> opt;
    const auto out = lift_level(net, order, 2, trivial, p, opt);
    CHECK(out == trivial);
}

TEST_CASE("theorem 1 round trip on random small instances") {
    auto rng = SplitMix64(4242);
    for (int trial = 0; trial < 100; ++trial) {
        const auto cfg = small_cfg(2 + static_cast<std::int32_t>(rng.next_below(3)),
                                   2 + static_cast<std::int32_t>(rng.next_below(2)), 8,
                                   rng.next_u64());
        const auto dnet = random_cbn(random_dag(cfg), 2.0, cfg.seed);
        const auto net = to_rational(dnet);
        const auto truth = to_rational(random_tupleset(dnet, cfg, cfg.seed));
        CHECK_NOTHROW((void)check_exclusion(truth, net));

        DisentangleOptions<Rational> opt;
        opt.check_vanishing = true; // lemma 4 holds at every constructed setting
        const NetOracle<Rational> p(net);
        const MixtureOracle<Rational> mix(net, truth);
        const auto report = run_disentangle(net, p, mix, opt);
        CHECK(report.tuples == truth);
        CHECK(report.pruned_mass == 0);
        for (const auto& r : report.residuals) CHECK(r.residual == 0.0);
        CHECK_NOTHROW((void)check_exclusion(report.tuples, net));
    }
}

TEST_CASE("the double-backed oracle engine round-trips within float tolerance") {
    auto rng = SplitMix64(8080);
    for (int trial = 0; trial < 30; ++trial) {
        const auto cfg = small_cfg(2 + static_cast<std::int32_t>(rng.next_below(4)), 3, 8,
                                   rng.next_u64());
        const auto net = random_cbn(random_dag(cfg), 2.0, cfg.seed);
        const auto truth = random_tupleset(net, cfg, cfg.seed);

        const NetOracle<double> p(net);
        const MixtureOracle<double> mix(net, truth);
        DisentangleOptions<double> opt;
        const auto report = run_disentangle(net, p, mix, opt);

        REQUIRE(report.tuples.size() == truth.size());
        for (std::size_t i = 0; i < truth.size(); ++i) {
            CHECK(report.tuples[i].target == truth[i].target);
            CHECK(std::fabs(report.tuples[i].weight - truth[i].weight) < 1e-9);
        }
    }
}

TEST_CASE("witness failure raises ExclusionUnsatisfiable") {
    const auto net = example_c1_net<Rational>();
    const auto order = topological_order(net);
    const NetOracle<Rational> p(net);
    // both values of V1 present in the reduced set: no witness exists
    const InterventionTupleSet<Rational> bad({
        {InterventionTarget({{0, 0}}), Rational(1, 2)},
        {InterventionTarget({{0, 1}}), Rational(1, 2)},
    });
    DisentangleOptions<Rational> opt;
    try {
        (void)lift_level(net, order, 2, bad, p, opt);
        FAIL("expected ExclusionUnsatisfiable");
    } catch (const CausalError& e) {
        CHECK(e.code() == ErrorCode::ExclusionUnsatisfiable);
    }
}

TEST_CASE("an exclusion-violating generating set is either rewritten or rejected") {
    // do(V1=0)/do(V1=1) on a single binary node: the same mixture is generated
    // by an exclusion-satisfying set, which must be returned instead
    const auto net = make_net<Rational>({2}, {{}}, {{{0.3, 0.7}}});
    const InterventionTupleSet<Rational> violating({
        {InterventionTarget({{0, 0}}), Rational(1, 2)},
        {InterventionTarget({{0, 1}}), Rational(1, 2)},
    });
    const auto recovered = disentangle_oracle(net, violating);
    CHECK_NOTHROW((void)check_exclusion(recovered, net));
    for_each_assignment(net, [&](const Assignment& a) {
        CHECK(mixture_prob(net, recovered, a) == mixture_prob(net, violating, a));
    });
}

TEST_CASE("finite: example C.1 at M=2^20 recovers targets with small weight error") {
    const auto net = example_c1_net<double>();
    const auto truth = example_c1_tuples<double>();
    const std::size_t m = 1 << 20;
    const auto obs = ancestral_sample(net, {101}, m);
    const auto mix = mixture_sample(net, truth, {202}, m);
    const auto net_hat = mle_cpds(obs, net, 1e-6);
    const auto report = disentangle_finite(net_hat, mix, 0.01);

    REQUIRE(report.tuples.size() == truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i) {
        CHECK(report.tuples[i].target == truth[i].target);
        CHECK(std::fabs(report.tuples[i].weight - truth[i].weight) < 0.02);
    }
}

TEST_CASE("finite: observational samples yield the empty tuple plus sub-epsilon noise") {
    const auto net = example_c2_net<double>();
    const std::size_t m = 1 << 16;
    const auto obs = ancestral_sample(net, {303}, m);
    const auto mix = ancestral_sample(net, {404}, m); // mixture = P itself
    const auto net_hat = mle_cpds(obs, net, 1e-6);
    const double epsilon = 0.01;
    const auto report = disentangle_finite(net_hat, mix, epsilon);

    double empty_weight = 0.0;
    for (const auto& tuple : report.tuples.tuples()) {
        if (tuple.target.empty()) {
            empty_weight = tuple.weight;
        } else {
            CHECK(tuple.weight < epsilon);
        }
    }
    CHECK(empty_weight > 0.9);
}

TEST_CASE("finite reduces to the oracle path when fed exact probabilities") {
    auto rng = SplitMix64(606);
    int checked = 0;
    for (int trial = 0; trial < 60 && checked < 10; ++trial) {
        const auto cfg = small_cfg(3, 2 + static_cast<std::int32_t>(rng.next_below(2)), 5,
                                   rng.next_u64());
        const auto dnet = random_cbn(random_dag(cfg), 2.0, cfg.seed);
        const auto net = to_rational(dnet);
        const auto truth = to_rational(random_tupleset(dnet, cfg, cfg.seed));

        const double epsilon = 0.01;
        bool weights_clear_epsilon = true;
        for (const auto& t : truth.tuples()) {
            if (to_double(t.weight) <= 2 * epsilon) weights_clear_epsilon = false;
        }
        if (!weights_clear_epsilon) continue; // epsilon renormalization would differ by design

        const NetOracle<Rational> p(net);
        const MixtureOracle<Rational> mix(net, truth);
        DisentangleOptions<Rational> oracle_opt;
        DisentangleOptions<Rational> finite_opt;
        finite_opt.finite = true;
        finite_opt.epsilon = Rational(1, 100);

        const auto exact = run_disentangle(net, p, mix, oracle_opt);
        const auto finite = run_disentangle(net, p, mix, finite_opt);
        CHECK(finite.tuples == exact.tuples);
        CHECK(finite.pruned_mass == 0);
        ++checked;
    }
    CHECK(checked >= 10);
}

TEST_CASE("excluded-value repair zeroes the lightest column and conserves level mass") {
    using Rec = causalmix::detail::LiftRecord<double>;
    SUBCASE("renormalization scales lifts back to their budget") {
        std::vector<Rec> records(2);
        records[0].base = InterventionTarget({{0, 0}});
        records[0].budget = 0.5;
        records[0].lifted = {0.2, 0.3};
        records[0].remainder = 0.0;
        records[1].base = InterventionTarget();
        records[1].budget = 0.5;
        records[1].lifted = {0.25, 0.05};
        records[1].remainder = 0.2;
        causalmix::detail::repair_excluded_value(records, 2);

        // column 1 carries less mass (0.35 < 0.45) and is zeroed
        CHECK(records[0].lifted[1] == 0.0);
        CHECK(records[1].lifted[1] == 0.0);
        CHECK(records[0].lifted[0] == doctest::Approx(0.5));
        CHECK(records[1].lifted[0] == doctest::Approx(0.3));
        CHECK(records[1].remainder == doctest::Approx(0.2));
        const double total = records[0].lifted[0] + records[0].remainder +
                             records[1].lifted[0] + records[1].remainder;
        CHECK(total == doctest::Approx(1.0));
    }
    SUBCASE("a level losing all lift mass folds it into the remainder") {
        std::vector<Rec> records(2);
        records[0].base = InterventionTarget({{0, 0}});
        records[0].budget = 0.4;
        records[0].lifted = {0.4, 0.0};
        records[0].remainder = 0.0;
        records[1].base = InterventionTarget();
        records[1].budget = 0.6;
        records[1].lifted = {0.0, 0.1};
        records[1].remainder = 0.5;
        causalmix::detail::repair_excluded_value(records, 2);

        CHECK(records[1].lifted[1] == 0.0);
        CHECK(records[1].remainder == doctest::Approx(0.6));
        CHECK(records[0].lifted[0] == doctest::Approx(0.4));
    }
    SUBCASE("no repair when a value is already excluded") {
        std::vector<Rec> records(1);
        records[0].base = InterventionTarget();
        records[0].budget = 1.0;
        records[0].lifted = {0.7, 0.0};
        records[0].remainder = 0.3;
        causalmix::detail::repair_excluded_value(records, 2);
        CHECK(records[0].lifted[0] == 0.7);
        CHECK(records[0].remainder == 0.3);
    }
}

TEST_CASE("finite outputs satisfy exclusion even at tiny sample sizes") {
    // the base-case zero index and the per-level repair must leave every node
    // with at least one untargeted value, however noisy the estimates
    auto rng = SplitMix64(1618);
    for (int trial = 0; trial < 25; ++trial) {
        const auto cfg = small_cfg(4, 3, 6, rng.next_u64());
        const auto net = random_cbn(random_dag(cfg), 2.0, cfg.seed);
        const auto truth = random_tupleset(net, cfg, cfg.seed);
        const std::size_t m = 16 + rng.next_below(48);
        const auto obs = ancestral_sample(net, {rng.next_u64()}, m);
        const auto mix = mixture_sample(net, truth, {rng.next_u64()}, m);
        const auto net_hat = mle_cpds(obs, net, 1e-6);
        const auto report = disentangle_finite(net_hat, mix, 0.01);
        CHECK_NOTHROW((void)check_exclusion(report.tuples, net));
    }
}

TEST_CASE("a tabulated mixture oracle recovers the same tuples") {
    const auto net = example_c2_net<Rational>();
    const auto truth =
        example_c2_tuples<Rational>(Rational(1, 2), Rational(1, 5), Rational(3, 10));
    std::vector<Rational> cells;
    for_each_assignment(net, [&](const Assignment& a) {
        cells.push_back(mixture_prob(net, truth, a));
    });
    const TableOracle<Rational> mix(net.domains, cells);
    const auto recovered = disentangle_oracle(net, mix);
    CHECK(recovered == truth);
}

TEST_CASE("disentangle_finite rejects empty samples and unsmoothed nets") {
    const auto net = example_c1_net<double>();
    SampleSet empty;
    empty.num_nodes = 2;
    CHECK_THROWS_AS((void)disentangle_finite(net, empty, 0.01), CausalError);

    auto unsmoothed = example_b1_net<double>(); // has a zero CPT cell
    const auto mix = ancestral_sample(net, {1}, 64);
    CHECK_THROWS_AS((void)disentangle_finite(unsmoothed, mix, 0.01), CausalError);
}

TEST_SUITE_END();
