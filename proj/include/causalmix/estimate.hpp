#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "causalmix/cbn.hpp"
#include "causalmix/errors.hpp"
#include "causalmix/intervene.hpp"
#include "causalmix/rng.hpp"

namespace causalmix {

struct RngSeed {
    std::uint64_t value = 0;
};

// Row-major matrix of sampled value codes, one column per node (in NodeId
// order), one row per draw.
struct SampleSet {
    enum class Source { Observational, Mixture };

    std::int32_t num_nodes = 0;
    std::vector<ValueCode> data;
    Source source = Source::Observational;

    std::size_t rows() const {
        return num_nodes == 0 ? 0 : data.size() / static_cast<std::size_t>(num_nodes);
    }
    ValueCode at(std::size_t row, NodeId node) const {
        return data[row * static_cast<std::size_t>(num_nodes) + static_cast<std::size_t>(node)];
    }
};

namespace detail {

inline ValueCode draw_from_row(const std::vector<double>& row, double u) {
    double acc = 0.0;
    for (std::size_t v = 0; v + 1 < row.size(); ++v) {
        acc += row[v];
        if (u < acc) return static_cast<ValueCode>(v);
    }
    return static_cast<ValueCode>(row.size() - 1);
}

// One ancestral pass for one row; intervened nodes are forced instead of
// drawn.
inline void sample_row(const CausalNet<double>& net, const std::vector<NodeId>& order,
                       const InterventionTarget& target, SplitMix64& rng,
                       Assignment& scratch, ValueCode* out) {
    for (NodeId node : order) {
        ValueCode value;
        if (const auto forced = target.value_of(node)) {
            value = *forced;
        } else {
            const auto& cpd = net.cpds[static_cast<std::size_t>(node)];
            const auto& row = cpd.table[cpd.row_index(scratch, net.domains)];
            value = draw_from_row(row, rng.next_unit());
        }
        scratch.set(node, value);
        out[static_cast<std::size_t>(node)] = value;
    }
}

} // namespace detail

// I.i.d. ancestral sampling: row r is drawn from the substream
// SplitMix64::stream(seed, r), nodes in topological order.
inline SampleSet ancestral_sample(const CausalNet<double>& net, RngSeed seed, std::size_t count) {
    const auto order = topological_order(net);
    SampleSet out;
    out.num_nodes = static_cast<std::int32_t>(net.size());
    out.data.resize(count * net.size());
    out.source = SampleSet::Source::Observational;
    Assignment scratch(net.size());
    const InterventionTarget none;
    for (std::size_t r = 0; r < count; ++r) {
        auto rng = SplitMix64::stream(seed.value, r);
        detail::sample_row(net, order, none, rng, scratch, out.data.data() + r * net.size());
    }
    return out;
}

// Mixture sampling: each row first draws a component index by weight, then
// ancestral-samples the intervened network, all from the row's substream.
inline SampleSet mixture_sample(const CausalNet<double>& net,
                                const InterventionTupleSet<double>& ts, RngSeed seed,
                                std::size_t count) {
    if (ts.empty()) {
        raise(ErrorCode::InvalidArgument, "mixture_sample needs a nonempty tuple set");
    }
    require_compatible(ts, net);
    const auto order = topological_order(net);
    const double total = ts.total_weight();
    SampleSet out;
    out.num_nodes = static_cast<std::int32_t>(net.size());
    out.data.resize(count * net.size());
    out.source = SampleSet::Source::Mixture;
    Assignment scratch(net.size());
    for (std::size_t r = 0; r < count; ++r) {
        auto rng = SplitMix64::stream(seed.value, r);
        const double u = rng.next_unit() * total;
        double acc = 0.0;
        std::size_t component = ts.size() - 1;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            acc += ts[i].weight;
            if (u < acc) {
                component = i;
                break;
            }
        }
        detail::sample_row(net, order, ts[component].target, rng, scratch,
                           out.data.data() + r * net.size());
    }
    return out;
}

// Maximum-likelihood CPT estimation on a given DAG skeleton. Rows whose
// relative frequencies contain a zero get delta added to every entry and are
// re-normalized, which restores positivity; rows that are already strictly
// positive are left as plain frequencies.
inline CausalNet<double> mle_cpds(const SampleSet& samples, const CausalNet<double>& skeleton,
                                  double delta) {
    if (samples.rows() == 0) {
        raise(ErrorCode::EmptySampleSet, "cannot estimate CPDs from zero samples");
    }
    if (!(delta > 0)) {
        raise(ErrorCode::InvalidArgument, "smoothing delta must be positive");
    }
    if (samples.num_nodes != static_cast<std::int32_t>(skeleton.size())) {
        raise(ErrorCode::InvalidArgument, "sample columns do not match the skeleton");
    }
    CausalNet<double> out;
    out.domains = skeleton.domains;
    out.labels = skeleton.labels;
    out.parents = skeleton.parents;
    out.positivity_flag = true;
    out.cpds.resize(skeleton.size());

    std::vector<std::vector<std::vector<double>>> counts(skeleton.size());
    for (std::size_t v = 0; v < skeleton.size(); ++v) {
        auto& cpd = out.cpds[v];
        cpd.child = static_cast<NodeId>(v);
        cpd.parents = skeleton.parents[v];
        std::size_t rows = 1;
        for (NodeId p : cpd.parents) rows *= static_cast<std::size_t>(skeleton.cardinality(p));
        counts[v].assign(rows, std::vector<double>(
                                   static_cast<std::size_t>(
                                       skeleton.cardinality(static_cast<NodeId>(v))),
                                   0.0));
    }

    const std::size_t m = samples.rows();
    Assignment row_view(skeleton.size());
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t j = 0; j < skeleton.size(); ++j) {
            const ValueCode code = samples.at(r, static_cast<NodeId>(j));
            if (code < 0 || code >= skeleton.cardinality(static_cast<NodeId>(j))) {
                raise(ErrorCode::InvalidArgument,
                      "sample row " + std::to_string(r) + " has value " +
                          std::to_string(code) + " outside the domain of node " +
                          std::to_string(j));
            }
            row_view.set(static_cast<NodeId>(j), code);
        }
        for (std::size_t v = 0; v < skeleton.size(); ++v) {
            counts[v][out.cpds[v].row_index(row_view, skeleton.domains)]
                  [static_cast<std::size_t>(row_view[static_cast<NodeId>(v)])] += 1.0;
        }
    }

    for (std::size_t v = 0; v < skeleton.size(); ++v) {
        const std::size_t k = static_cast<std::size_t>(skeleton.cardinality(static_cast<NodeId>(v)));
        auto& cpd = out.cpds[v];
        cpd.table.resize(counts[v].size());
        for (std::size_t r = 0; r < counts[v].size(); ++r) {
            double total = 0.0;
            for (double c : counts[v][r]) total += c;
            auto& out_row = cpd.table[r];
            out_row.assign(k, 0.0);
            bool has_zero = total == 0.0;
            if (total > 0.0) {
                for (std::size_t j = 0; j < k; ++j) {
                    out_row[j] = counts[v][r][j] / total;
                    if (out_row[j] == 0.0) has_zero = true;
                }
            }
            if (has_zero) {
                double sum = 0.0;
                for (std::size_t j = 0; j < k; ++j) {
                    out_row[j] += delta;
                    sum += out_row[j];
                }
                for (std::size_t j = 0; j < k; ++j) out_row[j] /= sum;
            }
        }
    }
    return out;
}

// Relative frequency of rows matching the assigned nodes of `partial`.
inline double empirical_marginal(const SampleSet& samples, const Assignment& partial) {
    const std::size_t m = samples.rows();
    if (m == 0) {
        raise(ErrorCode::EmptySampleSet, "empirical_marginal needs at least one sample");
    }
    std::vector<NodeId> assigned;
    for (std::size_t i = 0; i < partial.size(); ++i) {
        if (partial.is_set(static_cast<NodeId>(i))) assigned.push_back(static_cast<NodeId>(i));
    }
    std::size_t hits = 0;
    for (std::size_t r = 0; r < m; ++r) {
        bool match = true;
        for (NodeId node : assigned) {
            if (samples.at(r, node) != partial[node]) {
                match = false;
                break;
            }
        }
        hits += match ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(m);
}

} // namespace causalmix
