#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "causalmix/cbn.hpp"
#include "causalmix/disentangle.hpp"
#include "causalmix/estimate.hpp"
#include "causalmix/intervene.hpp"
#include "causalmix/rng.hpp"

namespace causalmix {

enum class GraphModel { ScaleFree, ErdosRenyi };

inline const char* graph_model_name(GraphModel m) {
    return m == GraphModel::ScaleFree ? "sf" : "er";
}

// Simulation-protocol knobs: N nodes of fixed cardinality, edge count uniform
// in [N, 5N] (capped by the DAG maximum), Dirichlet(cpd_alpha) CPT rows,
// m ~ U[m_min, m_max] targets with Dirichlet(weight_alpha) weights.
struct InstanceConfig {
    std::int32_t nodes = 4;
    std::int64_t samples = 1 << 10;
    GraphModel model = GraphModel::ScaleFree;
    std::int32_t cardinality = 3;
    double cpd_alpha = 2.0;
    std::int32_t m_min = 4;
    std::int32_t m_max = 16;
    double weight_alpha = 2.0;
    std::uint64_t seed = 0;
    double epsilon = 0.01;
    double delta = 1e-6;
};

struct MetricsRecord {
    double recall = 0.0;
    double rmse = 0.0;
    double fp_rmse = 0.0;
    double fn_rmse = 0.0;
};

namespace detail {

// substream ids carved out of an instance seed
enum : std::uint64_t {
    kStreamDag = 1,
    kStreamCpds = 2,
    kStreamTuples = 3,
    kStreamObs = 4,
    kStreamMix = 5,
};

inline std::size_t max_dag_edges(std::int32_t n) {
    return static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1) / 2;
}

} // namespace detail

// Random DAG skeleton (no CPDs yet). Both models first draw a random node
// ordering and orient every edge from earlier to later in it, which
// guarantees acyclicity. Scale-free grows by preferential attachment and is
// then nudged edge-by-edge to the drawn edge count; Erdos-Renyi picks the
// drawn number of ordered pairs uniformly.
inline CausalNet<double> random_dag(const InstanceConfig& cfg) {
    const std::int32_t n = cfg.nodes;
    if (n < 1) {
        raise(ErrorCode::InvalidArgument, "need at least one node");
    }
    auto rng = SplitMix64::stream(cfg.seed, detail::kStreamDag);

    CausalNet<double> net;
    net.domains.assign(static_cast<std::size_t>(n), Domain{cfg.cardinality});
    net.parents.assign(static_cast<std::size_t>(n), {});
    net.labels.resize(static_cast<std::size_t>(n));
    for (std::int32_t v = 0; v < n; ++v) net.labels[static_cast<std::size_t>(v)] = "V" + std::to_string(v + 1);
    net.cpds.resize(static_cast<std::size_t>(n));
    for (std::int32_t v = 0; v < n; ++v) net.cpds[static_cast<std::size_t>(v)].child = v;

    const std::size_t cap = detail::max_dag_edges(n);
    const std::size_t lo = std::min<std::size_t>(static_cast<std::size_t>(n), cap);
    const std::size_t hi = std::min<std::size_t>(static_cast<std::size_t>(5) * n, cap);
    const std::size_t edge_count = lo + rng.next_below(hi - lo + 1);
    if (edge_count == 0) return net;

    // random arrival order; position in it orients every edge
    std::vector<std::int32_t> arrival(static_cast<std::size_t>(n));
    for (std::int32_t v = 0; v < n; ++v) arrival[static_cast<std::size_t>(v)] = v;
    for (std::size_t i = arrival.size(); i > 1; --i) {
        std::swap(arrival[i - 1], arrival[rng.next_below(i)]);
    }

    // adjacency over arrival positions: edge (i, j) with i < j
    std::vector<std::vector<bool>> has_edge(static_cast<std::size_t>(n),
                                            std::vector<bool>(static_cast<std::size_t>(n), false));
    std::size_t edges = 0;
    const auto add = [&](std::size_t i, std::size_t j) {
        if (i == j) return false;
        if (i > j) std::swap(i, j);
        if (has_edge[i][j]) return false;
        has_edge[i][j] = true;
        ++edges;
        return true;
    };

    if (cfg.model == GraphModel::ScaleFree) {
        const std::size_t attach =
            std::max<std::size_t>(1, (edge_count + static_cast<std::size_t>(n) - 1) /
                                         static_cast<std::size_t>(n));
        std::vector<std::size_t> degree(static_cast<std::size_t>(n), 0);
        for (std::size_t j = 1; j < static_cast<std::size_t>(n); ++j) {
            const std::size_t wanted = std::min(attach, j);
            for (std::size_t e = 0; e < wanted; ++e) {
                // degree-proportional pick with +1 smoothing over positions < j
                std::size_t total = 0;
                for (std::size_t i = 0; i < j; ++i) total += degree[i] + 1;
                std::size_t ticket = rng.next_below(total);
                std::size_t pick = 0;
                for (std::size_t i = 0; i < j; ++i) {
                    const std::size_t w = degree[i] + 1;
                    if (ticket < w) {
                        pick = i;
                        break;
                    }
                    ticket -= w;
                }
                if (add(pick, j)) {
                    ++degree[pick];
                    ++degree[j];
                }
            }
        }
        // nudge to the drawn edge count
        while (edges < edge_count) {
            const std::size_t i = rng.next_below(static_cast<std::size_t>(n));
            const std::size_t j = rng.next_below(static_cast<std::size_t>(n));
            add(i, j);
        }
        while (edges > edge_count) {
            const std::size_t i = rng.next_below(static_cast<std::size_t>(n));
            const std::size_t j = rng.next_below(static_cast<std::size_t>(n));
            const auto [lo_i, hi_j] = std::minmax(i, j);
            if (lo_i != hi_j && has_edge[lo_i][hi_j]) {
                has_edge[lo_i][hi_j] = false;
                --edges;
            }
        }
    } else {
        while (edges < edge_count) {
            const std::size_t i = rng.next_below(static_cast<std::size_t>(n));
            const std::size_t j = rng.next_below(static_cast<std::size_t>(n));
            add(i, j);
        }
    }

    for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
        for (std::size_t j = i + 1; j < static_cast<std::size_t>(n); ++j) {
            if (has_edge[i][j]) {
                const NodeId parent = arrival[i];
                const NodeId child = arrival[j];
                net.parents[static_cast<std::size_t>(child)].push_back(parent);
            }
        }
    }
    for (auto& ps : net.parents) std::sort(ps.begin(), ps.end());
    for (std::size_t v = 0; v < net.size(); ++v) net.cpds[v].parents = net.parents[v];
    return net;
}

// Fills every CPT row with a Dirichlet(alpha, ..., alpha) draw; strictly
// positive with probability one, so the result satisfies positivity.
inline CausalNet<double> random_cbn(CausalNet<double> skeleton, double alpha,
                                    std::uint64_t seed) {
    auto rng = SplitMix64::stream(seed, detail::kStreamCpds);
    for (std::size_t v = 0; v < skeleton.size(); ++v) {
        auto& cpd = skeleton.cpds[v];
        cpd.child = static_cast<NodeId>(v);
        cpd.parents = skeleton.parents[v];
        std::size_t rows = 1;
        for (NodeId p : cpd.parents) rows *= static_cast<std::size_t>(skeleton.cardinality(p));
        const std::size_t k = static_cast<std::size_t>(skeleton.cardinality(static_cast<NodeId>(v)));
        cpd.table.resize(rows);
        for (auto& row : cpd.table) row = rng.next_dirichlet(alpha, k);
    }
    skeleton.positivity_flag = true;
    return skeleton;
}

// Random exclusion-satisfying tuple set: one value per node is reserved as
// excluded for the whole instance, target sizes are uniform in {0..N},
// member nodes and values uniform over what remains, weights Dirichlet.
// Duplicate targets merge by weight.
inline InterventionTupleSet<double> random_tupleset(const CausalNet<double>& net,
                                                    const InstanceConfig& cfg,
                                                    std::uint64_t seed) {
    auto rng = SplitMix64::stream(seed, detail::kStreamTuples);
    const std::int32_t n = static_cast<std::int32_t>(net.size());

    std::vector<ValueCode> reserved(static_cast<std::size_t>(n));
    for (std::int32_t v = 0; v < n; ++v) {
        reserved[static_cast<std::size_t>(v)] =
            static_cast<ValueCode>(rng.next_below(static_cast<std::uint64_t>(net.cardinality(v))));
    }

    const std::int32_t m =
        cfg.m_min + static_cast<std::int32_t>(rng.next_below(
                        static_cast<std::uint64_t>(cfg.m_max - cfg.m_min + 1)));
    const auto weights = rng.next_dirichlet(cfg.weight_alpha, static_cast<std::size_t>(m));

    std::vector<std::int32_t> pool(static_cast<std::size_t>(n));
    std::vector<InterventionTuple<double>> tuples;
    tuples.reserve(static_cast<std::size_t>(m));
    for (std::int32_t t = 0; t < m; ++t) {
        const std::int32_t r =
            static_cast<std::int32_t>(rng.next_below(static_cast<std::uint64_t>(n) + 1));
        for (std::int32_t v = 0; v < n; ++v) pool[static_cast<std::size_t>(v)] = v;
        // partial Fisher-Yates: the first r entries are a uniform r-subset
        for (std::int32_t i = 0; i < r; ++i) {
            const std::size_t j =
                static_cast<std::size_t>(i) +
                rng.next_below(static_cast<std::uint64_t>(n - i));
            std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
        }
        std::vector<InterventionTarget::Entry> entries;
        entries.reserve(static_cast<std::size_t>(r));
        for (std::int32_t i = 0; i < r; ++i) {
            const NodeId node = pool[static_cast<std::size_t>(i)];
            const std::int32_t k = net.cardinality(node);
            std::int32_t value = static_cast<std::int32_t>(
                rng.next_below(static_cast<std::uint64_t>(k - 1)));
            if (value >= reserved[static_cast<std::size_t>(node)]) ++value;
            entries.emplace_back(node, value);
        }
        tuples.push_back({InterventionTarget(std::move(entries)),
                          weights[static_cast<std::size_t>(t)]});
    }
    return InterventionTupleSet<double>(std::move(tuples));
}

// Recall and RMSE family over target sets: RMSE averages squared weight
// errors over the union (missing side counted as weight zero), FP-RMSE over
// the spurious targets only, FN-RMSE over the missed ones; both are zero when
// their set is empty.
template <typename T>
MetricsRecord metrics(const InterventionTupleSet<T>& truth,
                      const InterventionTupleSet<T>& recovered) {
    if (truth.empty()) {
        raise(ErrorCode::InvalidArgument, "metrics need a nonempty truth set");
    }
    const auto weight_in = [](const InterventionTupleSet<T>& ts, const InterventionTarget& t,
                              bool& found) -> double {
        for (const auto& tuple : ts.tuples()) {
            if (tuple.target == t) {
                found = true;
                return to_double(tuple.weight);
            }
        }
        found = false;
        return 0.0;
    };

    std::size_t hits = 0;
    double sq_union = 0.0;
    double sq_fn = 0.0;
    std::size_t fn_count = 0;
    for (const auto& tuple : truth.tuples()) {
        bool found = false;
        const double w_hat = weight_in(recovered, tuple.target, found);
        const double diff = to_double(tuple.weight) - w_hat;
        sq_union += diff * diff;
        if (found) {
            ++hits;
        } else {
            sq_fn += diff * diff;
            ++fn_count;
        }
    }
    double sq_fp = 0.0;
    std::size_t fp_count = 0;
    for (const auto& tuple : recovered.tuples()) {
        bool found = false;
        weight_in(truth, tuple.target, found);
        if (!found) {
            const double w = to_double(tuple.weight);
            sq_union += w * w;
            sq_fp += w * w;
            ++fp_count;
        }
    }
    const std::size_t union_count = truth.size() + fp_count;

    MetricsRecord rec;
    rec.recall = static_cast<double>(hits) / static_cast<double>(truth.size());
    rec.rmse = std::sqrt(sq_union / static_cast<double>(union_count));
    rec.fp_rmse = fp_count == 0 ? 0.0 : std::sqrt(sq_fp / static_cast<double>(fp_count));
    rec.fn_rmse = fn_count == 0 ? 0.0 : std::sqrt(sq_fn / static_cast<double>(fn_count));
    return rec;
}

// One full simulation instance: draw the network and tuple set, sample both
// distributions, estimate, disentangle, score.
struct BenchRow {
    std::string model;
    std::int32_t nodes = 0;
    std::int64_t samples = 0;
    std::uint64_t seed = 0;
    std::int32_t m = 0;
    MetricsRecord metrics;
    double pruned_mass = 0.0;
    double runtime_ms = 0.0;
};

inline BenchRow run_instance(const InstanceConfig& cfg) {
    const auto net = random_cbn(random_dag(cfg), cfg.cpd_alpha, cfg.seed);
    const auto truth = random_tupleset(net, cfg, cfg.seed);

    const auto obs = ancestral_sample(net, {SplitMix64::mix(cfg.seed + detail::kStreamObs)},
                                      static_cast<std::size_t>(cfg.samples));
    const auto mix = mixture_sample(net, truth,
                                    {SplitMix64::mix(cfg.seed + detail::kStreamMix)},
                                    static_cast<std::size_t>(cfg.samples));

    const auto start = std::chrono::steady_clock::now();
    const auto net_hat = mle_cpds(obs, net, cfg.delta);
    const auto report = disentangle_finite(net_hat, mix, cfg.epsilon);
    const double elapsed = std::chrono::duration<double, std::milli>(
                               std::chrono::steady_clock::now() - start)
                               .count();

    BenchRow row;
    row.model = graph_model_name(cfg.model);
    row.nodes = cfg.nodes;
    row.samples = cfg.samples;
    row.seed = cfg.seed;
    row.m = static_cast<std::int32_t>(truth.size());
    row.metrics = metrics(truth, report.tuples);
    row.pruned_mass = report.pruned_mass;
    row.runtime_ms = elapsed;
    return row;
}

// Fans instances out across a worker pool. Rows come back indexed, so the
// result order is independent of scheduling. `on_row` (if set) is invoked
// from the calling thread, in index order, as rows complete.
inline std::vector<BenchRow> run_sweep(const std::vector<InstanceConfig>& configs,
                                       std::size_t workers,
                                       const std::function<void(std::size_t, const BenchRow&)>&
                                           on_row = {},
                                       const std::atomic<bool>* cancel = nullptr) {
    std::vector<BenchRow> rows(configs.size());
    std::vector<std::atomic<std::int8_t>> state(configs.size()); // 0 pending, 1 done, 2 skipped
    for (auto& s : state) s.store(0);
    std::atomic<std::size_t> next{0};

    const std::size_t pool = std::max<std::size_t>(1, workers);
    std::vector<std::thread> threads;
    threads.reserve(pool);
    for (std::size_t w = 0; w < pool; ++w) {
        threads.emplace_back([&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= configs.size()) return;
                if (cancel && cancel->load()) {
                    state[i].store(2, std::memory_order_release);
                    continue;
                }
                rows[i] = run_instance(configs[i]);
                state[i].store(1, std::memory_order_release);
            }
        });
    }
    if (on_row) {
        std::size_t emitted = 0;
        while (emitted < configs.size()) {
            const std::int8_t s = state[emitted].load(std::memory_order_acquire);
            if (s == 0) {
                std::this_thread::sleep_for(std::chrono::milliseconds(2));
                continue;
            }
            if (s == 1) on_row(emitted, rows[emitted]);
            ++emitted;
        }
    }
    for (auto& t : threads) t.join();
    return rows;
}

} // namespace causalmix
