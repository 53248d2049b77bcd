#pragma once

#include <cassert>
#include <chrono>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "causalmix/cbn.hpp"
#include "causalmix/errors.hpp"
#include "causalmix/estimate.hpp"
#include "causalmix/intervene.hpp"
#include "causalmix/oracle.hpp"
#include "causalmix/solver.hpp"

namespace causalmix {

template <typename T>
struct DisentangleOptions {
    // exact path: solve_exact, no pruning; finite path: solve_scored, clamp,
    // epsilon-gated renormalization and the excluded-value repair
    bool finite = false;
    T epsilon{};
    // verify the vanishing of later targets at every constructed setting
#ifdef NDEBUG
    bool check_vanishing = false;
#else
    bool check_vanishing = true;
#endif
};

struct LevelResidual {
    int level = 0;        // 1-based position in the topological order
    int target_index = 0; // index of the reduced target within the level
    double residual = 0.0;
};

template <typename T>
struct DisentangleReport {
    InterventionTupleSet<T> tuples;
    std::vector<LevelResidual> residuals;
    T pruned_mass{};
    double wall_time_ms = 0.0;
};

namespace detail {

// Per-target bookkeeping while one level is being lifted; step 4 of the
// finite algorithm needs the lifted weights by value after all targets of the
// level were solved.
template <typename T>
struct LiftRecord {
    InterventionTarget base;
    T budget{};            // mu_i
    std::vector<T> lifted; // weight of base + {new node = value}, by value
    T remainder{};         // weight staying on the bare base target
};

template <typename T>
InterventionTupleSet<T> collect_level(const std::vector<LiftRecord<T>>& records,
                                      NodeId new_node) {
    std::vector<InterventionTuple<T>> tuples;
    for (const auto& rec : records) {
        for (std::size_t v = 0; v < rec.lifted.size(); ++v) {
            if (rec.lifted[v] > 0) {
                tuples.push_back(
                    {rec.base.with(new_node, static_cast<ValueCode>(v)), rec.lifted[v]});
            }
        }
        if (rec.remainder > 0) tuples.push_back({rec.base, rec.remainder});
    }
    return InterventionTupleSet<T>(std::move(tuples));
}

// Shared epsilon handling for the residual mass of one solved system: absorb
// it into the lifted weights when it is below epsilon, otherwise keep it as
// the bare-target tuple. Mass that cannot be reassigned is pruned.
template <typename T>
void settle_remainder(LiftRecord<T>& rec, const DisentangleOptions<T>& opt, T& pruned) {
    if constexpr (!kExactScalar<T>) {
        if (!opt.finite) {
            // weights that are exact zeros in rational arithmetic come out as
            // rounding noise here; snap them so no phantom tuples are emitted
            for (T& x : rec.lifted) {
                if (to_double(x) <= 1e-12) x = T{};
            }
        }
    }
    T lifted_sum{};
    for (const T& x : rec.lifted) lifted_sum += x;
    T residual_mass = rec.budget - lifted_sum;
    if (!opt.finite) {
        if (residual_mass < 0) {
            if constexpr (kExactScalar<T>) {
                raise(ErrorCode::Inconsistent, "negative residual mass on the exact path");
            } else {
                if (to_double(residual_mass) < -1e-9) {
                    raise(ErrorCode::Inconsistent, "negative residual mass on the exact path");
                }
                residual_mass = T{};
            }
        }
        if constexpr (!kExactScalar<T>) {
            if (to_double(residual_mass) <= 1e-12) residual_mass = T{};
        }
        rec.remainder = residual_mass;
        return;
    }
    if (residual_mass < opt.epsilon) {
        rec.remainder = T{};
        if (lifted_sum > 0) {
            for (T& x : rec.lifted) x = (rec.budget * x) / lifted_sum;
        } else {
            // nothing to renormalize onto; the level's mass is pruned
            pruned += rec.budget;
        }
    } else {
        rec.remainder = residual_mass;
    }
}

// Step 4 of the finite algorithm: if every value of the new node occurs in
// some lifted target, zero the value with the least total weight and scale
// each target's lifted weights back to their pre-repair mass. (The paper's
// renormalization divides out mu_i; scaling to the lift budget mu_i minus the
// already-emitted remainder keeps level mass conserved when a remainder tuple
// exists.)
template <typename T>
void repair_excluded_value(std::vector<LiftRecord<T>>& records, std::int32_t cardinality) {
    std::vector<T> column_mass(static_cast<std::size_t>(cardinality), T{});
    std::vector<bool> present(static_cast<std::size_t>(cardinality), false);
    for (const auto& rec : records) {
        for (std::size_t v = 0; v < rec.lifted.size(); ++v) {
            if (rec.lifted[v] > 0) present[v] = true;
            column_mass[v] += rec.lifted[v];
        }
    }
    for (bool p : present) {
        if (!p) return; // some value is already excluded
    }
    std::size_t drop = 0;
    for (std::size_t v = 1; v < column_mass.size(); ++v) {
        if (column_mass[v] < column_mass[drop]) drop = v;
    }
    for (auto& rec : records) {
        rec.lifted[drop] = T{};
        const T lift_budget = rec.budget - rec.remainder;
        T post{};
        for (const T& x : rec.lifted) post += x;
        if (post > 0) {
            for (T& x : rec.lifted) x = (x * lift_budget) / post;
        } else if (lift_budget > 0) {
            rec.remainder += lift_budget;
        }
    }
}

template <typename T>
double residual_as_double(const T& r) {
    return to_double(r);
}

} // namespace detail

// Base case of the recovery: a single node with values 0..k-1. Builds the
// system a_i = P(v^i), b_i = P_mix(v^i) - P(v^i), c = sum(a), solves it under
// the one-zero constraint and emits one tuple per positive weight plus the
// observational remainder.
template <typename T>
detail::LiftRecord<T> base_case_record(NodeId node, std::int32_t cardinality,
                                       const MarginalOracle<T>& p, const MarginalOracle<T>& mix,
                                       std::size_t num_nodes, const DisentangleOptions<T>& opt,
                                       DisentangleReport<T>& report) {
    const std::size_t k = static_cast<std::size_t>(cardinality);
    std::vector<T> a(k), b(k);
    T c{};
    Assignment query(num_nodes);
    for (std::size_t v = 0; v < k; ++v) {
        query.set(node, static_cast<ValueCode>(v));
        a[v] = p.prob(query);
        if (!(a[v] > 0)) {
            raise(ErrorCode::Degenerate, "marginal of node " + std::to_string(node) +
                                             " at value " + std::to_string(v) +
                                             " is not positive");
        }
        b[v] = mix.prob(query) - a[v];
        c += a[v];
    }
    StructuredSystem<T> sys(std::move(a), std::move(b), std::move(c));
    const auto sol = opt.finite ? solve_scored(sys) : solve_exact(sys);
    report.residuals.push_back({1, 0, detail::residual_as_double(sol.residual)});

    detail::LiftRecord<T> rec;
    rec.base = InterventionTarget(); // the observational component
    rec.budget = from_double<T>(1.0);
    rec.lifted = sol.x;
    detail::settle_remainder(rec, opt, report.pruned_mass);
    return rec;
}

template <typename T>
InterventionTupleSet<T> base_case(NodeId node, std::int32_t cardinality,
                                  const MarginalOracle<T>& p, const MarginalOracle<T>& mix,
                                  std::size_t num_nodes, const DisentangleOptions<T>& opt) {
    DisentangleReport<T> scratch;
    auto rec = base_case_record(node, cardinality, p, mix, num_nodes, opt, scratch);
    return detail::collect_level(std::vector<detail::LiftRecord<T>>{std::move(rec)}, node);
}

// One induction step: lifts the unique reduced solution S over the first
// level-1 nodes of the order to a solution over the first `level` nodes.
// Reduced targets are processed smallest-first (never lifting a target before
// one of its subsets); for target s_i the settings fix s_i, fill the other
// previous nodes with their excluded values and sweep the new node, which
// makes every later target's contribution vanish. The observational side
// enters through the net's CPTs (all interventional factors are products of
// conditional probabilities), so only the mixture needs an oracle here.
template <typename T>
InterventionTupleSet<T> lift_level(const CausalNet<T>& net, const std::vector<NodeId>& order,
                                   std::size_t level, const InterventionTupleSet<T>& reduced,
                                   const MarginalOracle<T>& mix,
                                   const DisentangleOptions<T>& opt,
                                   DisentangleReport<T>* report_out = nullptr) {
    DisentangleReport<T> local;
    DisentangleReport<T>& report = report_out ? *report_out : local;

    const NodeId new_node = order[level - 1];
    const std::size_t k = static_cast<std::size_t>(net.cardinality(new_node));
    const std::span<const NodeId> prev(order.data(), level - 1);
    const std::span<const NodeId> cur(order.data(), level);

    // excluded value per previous node, from the reduced solution
    const auto targets = reduced.targets();
    std::vector<ValueCode> witness(net.size(), 0);
    for (NodeId u : prev) {
        const auto v = smallest_excluded_value(targets, u, net.cardinality(u));
        if (!v) {
            raise(ErrorCode::ExclusionUnsatisfiable,
                  "every value of node " + std::to_string(u) +
                      " appears in the reduced targets");
        }
        witness[static_cast<std::size_t>(u)] = *v;
    }

    std::vector<detail::LiftRecord<T>> records;
    records.reserve(reduced.size());
    std::vector<InterventionTuple<T>> lifted_so_far;

    for (std::size_t i = 0; i < reduced.size(); ++i) {
        const auto& s_i = reduced[i].target;
        const T& mu_i = reduced[i].weight;

        Assignment setting(net.size());
        for (NodeId u : prev) {
            const auto forced = s_i.value_of(u);
            setting.set(u, forced ? *forced : witness[static_cast<std::size_t>(u)]);
        }
        const T c = interventional_prefix_prob(net, s_i, setting, prev);

        std::vector<T> a(k), b(k);
        for (std::size_t l = 0; l < k; ++l) {
            setting.set(new_node, static_cast<ValueCode>(l));
            a[l] = interventional_prefix_prob(net, s_i, setting, cur);
            if (!(a[l] > 0)) {
                raise(ErrorCode::Degenerate,
                      "interventional probability of a lift setting is not positive");
            }
            T delta{}; // contribution of the targets already lifted at this level
            for (const auto& done : lifted_so_far) {
                delta += done.weight * interventional_prefix_prob(net, done.target, setting, cur);
            }
            b[l] = mix.prob(setting) - mu_i * a[l] - delta;

            if (opt.check_vanishing) {
                for (std::size_t j = i + 1; j < reduced.size(); ++j) {
                    const T vanish =
                        interventional_prefix_prob(net, reduced[j].target, setting, cur);
                    assert(vanish == 0 && "later targets must vanish at lift settings");
                    if (!(vanish == 0)) {
                        raise(ErrorCode::Inconsistent,
                              "later target does not vanish at a lift setting");
                    }
                }
            }
        }
        setting.unset(new_node);

        StructuredSystem<T> sys(std::move(a), std::move(b), c);
        const auto sol = opt.finite ? solve_scored(sys) : solve_exact(sys);
        report.residuals.push_back({static_cast<int>(level), static_cast<int>(i),
                                    detail::residual_as_double(sol.residual)});

        detail::LiftRecord<T> rec;
        rec.base = s_i;
        rec.budget = mu_i;
        rec.lifted = sol.x;
        detail::settle_remainder(rec, opt, report.pruned_mass);

        for (std::size_t v = 0; v < rec.lifted.size(); ++v) {
            if (rec.lifted[v] > 0) {
                lifted_so_far.push_back(
                    {s_i.with(new_node, static_cast<ValueCode>(v)), rec.lifted[v]});
            }
        }
        if (rec.remainder > 0) lifted_so_far.push_back({s_i, rec.remainder});
        records.push_back(std::move(rec));
    }

    if (opt.finite) {
        detail::repair_excluded_value(records, static_cast<std::int32_t>(k));
    }
    return detail::collect_level(records, new_node);
}

// Full recovery loop over the topological prefix: base case on the first
// node, then one lift per further node, each level consuming the previous
// level's unique reduced solution.
template <typename T>
DisentangleReport<T> run_disentangle(const CausalNet<T>& net, const MarginalOracle<T>& p,
                                     const MarginalOracle<T>& mix,
                                     const DisentangleOptions<T>& opt) {
    const auto start = std::chrono::steady_clock::now();
    const auto order = topological_order(net);

    DisentangleReport<T> report;
    auto first = base_case_record(order[0], net.cardinality(order[0]), p, mix, net.size(), opt,
                                  report);
    auto current =
        detail::collect_level(std::vector<detail::LiftRecord<T>>{std::move(first)}, order[0]);
    for (std::size_t level = 2; level <= net.size(); ++level) {
        current = lift_level(net, order, level, current, mix, opt, &report);
    }
    report.tuples = std::move(current);
    report.wall_time_ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - start)
                              .count();
    return report;
}

// DISENTANGLE with exact distribution oracles: returns the unique
// exclusion-satisfying tuple set generating the mixture. Exact in rational
// mode.
template <typename T>
InterventionTupleSet<T> disentangle_oracle(const CausalNet<T>& net,
                                           const MarginalOracle<T>& mix) {
    const NetOracle<T> p(net);
    DisentangleOptions<T> opt;
    opt.finite = false;
    return run_disentangle(net, p, mix, opt).tuples;
}

// Convenience overload: the mixture oracle is built from a generating tuple
// set (the caller-side "self oracle").
template <typename T>
InterventionTupleSet<T> disentangle_oracle(const CausalNet<T>& net,
                                           const InterventionTupleSet<T>& generating) {
    const MixtureOracle<T> mix(net, generating);
    return disentangle_oracle(net, mix);
}

// DISENTANGLE against finite samples: the observational side is the
// delta-smoothed estimated network, the mixture side is queried as raw
// relative frequencies.
inline DisentangleReport<double> disentangle_finite(const CausalNet<double>& net_hat,
                                                    const SampleSet& mix_samples,
                                                    double epsilon) {
    if (mix_samples.rows() == 0) {
        raise(ErrorCode::EmptySampleSet, "mixture sample set is empty");
    }
    if (!(epsilon > 0)) {
        raise(ErrorCode::InvalidArgument, "epsilon must be positive");
    }
    for (const auto& cpd : net_hat.cpds) {
        for (const auto& row : cpd.table) {
            for (double x : row) {
                if (!(x > 0)) {
                    raise(ErrorCode::DegenerateEstimate,
                          "estimated network has a zero CPT cell; smooth it first");
                }
            }
        }
    }
    const NetOracle<double> p(net_hat);
    const EmpiricalOracle mix(mix_samples, topological_order(net_hat));
    DisentangleOptions<double> opt;
    opt.finite = true;
    opt.epsilon = epsilon;
    return run_disentangle(net_hat, p, mix, opt);
}

} // namespace causalmix
