#pragma once

#include <algorithm>
#include <memory>
#include <numeric>
#include <vector>

#include "causalmix/cbn.hpp"
#include "causalmix/estimate.hpp"
#include "causalmix/intervene.hpp"

namespace causalmix {

// Query interface for P(v) or P_mix(v) on partial assignments. The recovery
// engine only ever asks about topological prefixes; net-backed oracles rely
// on that (the assigned set must be parent-closed), the empirical one does
// not.
template <typename T>
class MarginalOracle {
public:
    virtual ~MarginalOracle() = default;
    virtual T prob(const Assignment& partial) const = 0;
};

// Exact marginal of the network joint over a parent-closed assigned set.
template <typename T>
class NetOracle final : public MarginalOracle<T> {
public:
    explicit NetOracle(const CausalNet<T>& net) : net_(&net) {}

    T prob(const Assignment& partial) const override {
        T prod = from_double<T>(1.0);
        for (std::size_t i = 0; i < net_->size(); ++i) {
            if (partial.is_set(static_cast<NodeId>(i))) {
                prod *= net_->cpds[i].prob(partial, net_->domains);
            }
        }
        return prod;
    }

private:
    const CausalNet<T>* net_;
};

// Exact mixture marginal built from a generating tuple set. Marginalizing a
// perfect intervention over a topological suffix just restricts the target,
// so each component is an interventional product over the assigned nodes.
template <typename T>
class MixtureOracle final : public MarginalOracle<T> {
public:
    MixtureOracle(const CausalNet<T>& net, InterventionTupleSet<T> tuples)
        : net_(&net), tuples_(std::move(tuples)) {
        require_compatible(tuples_, net);
    }

    T prob(const Assignment& partial) const override {
        T sum{};
        for (const auto& tuple : tuples_.tuples()) {
            T prod = tuple.weight;
            for (std::size_t i = 0; i < net_->size() && prod != 0; ++i) {
                const NodeId node = static_cast<NodeId>(i);
                if (!partial.is_set(node)) continue;
                if (const auto forced = tuple.target.value_of(node)) {
                    if (*forced != partial[node]) prod = T{};
                } else {
                    prod *= net_->cpds[i].prob(partial, net_->domains);
                }
            }
            sum += prod;
        }
        return sum;
    }

private:
    const CausalNet<T>* net_;
    InterventionTupleSet<T> tuples_;
};

// Relative-frequency oracle over a sample set. Rows are sorted once by the
// given node order so that queries covering a prefix of that order become a
// binary-search range; other query shapes fall back to a scan.
class EmpiricalOracle final : public MarginalOracle<double> {
public:
    EmpiricalOracle(const SampleSet& samples, std::vector<NodeId> key_order)
        : samples_(&samples), key_order_(std::move(key_order)) {
        if (samples.rows() == 0) {
            raise(ErrorCode::EmptySampleSet, "empirical oracle needs at least one sample");
        }
        row_index_.resize(samples.rows());
        std::iota(row_index_.begin(), row_index_.end(), std::size_t{0});
        std::sort(row_index_.begin(), row_index_.end(), [&](std::size_t x, std::size_t y) {
            for (NodeId node : key_order_) {
                const ValueCode a = samples.at(x, node);
                const ValueCode b = samples.at(y, node);
                if (a != b) return a < b;
            }
            return false;
        });
    }

    double prob(const Assignment& partial) const override {
        const std::size_t level = covered_prefix(partial);
        if (level < partial.assigned_count()) return scan(partial);

        const auto less_than = [&](std::size_t row, bool upper) {
            for (std::size_t i = 0; i < level; ++i) {
                const NodeId node = key_order_[i];
                const ValueCode a = samples_->at(row, node);
                const ValueCode b = partial[node];
                if (a != b) return a < b;
            }
            return upper; // equal keys: below the query for upper_bound
        };
        std::size_t lo = 0, hi = row_index_.size();
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (less_than(row_index_[mid], false)) lo = mid + 1; else hi = mid;
        }
        const std::size_t first = lo;
        hi = row_index_.size();
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (less_than(row_index_[mid], true)) lo = mid + 1; else hi = mid;
        }
        return static_cast<double>(lo - first) / static_cast<double>(row_index_.size());
    }

private:
    std::size_t covered_prefix(const Assignment& partial) const {
        std::size_t level = 0;
        while (level < key_order_.size() && partial.is_set(key_order_[level])) ++level;
        return level;
    }

    double scan(const Assignment& partial) const {
        return empirical_marginal(*samples_, partial);
    }

    const SampleSet* samples_;
    std::vector<NodeId> key_order_;
    std::vector<std::size_t> row_index_;
};

// Dense joint table oracle (exponential in n; small-n escape hatch for
// explicitly tabulated mixtures). Unassigned nodes are summed out.
template <typename T>
class TableOracle final : public MarginalOracle<T> {
public:
    TableOracle(std::vector<Domain> domains, std::vector<T> table)
        : domains_(std::move(domains)), table_(std::move(table)) {
        std::size_t cells = 1;
        for (const auto& d : domains_) cells *= static_cast<std::size_t>(d.cardinality);
        if (cells != table_.size()) {
            raise(ErrorCode::InvalidArgument, "table size does not match domains");
        }
    }

    T prob(const Assignment& partial) const override {
        return sum_cells(partial, 0, 0);
    }

private:
    T sum_cells(const Assignment& partial, std::size_t node, std::size_t base) const {
        if (node == domains_.size()) return table_[base];
        const std::size_t k = static_cast<std::size_t>(domains_[node].cardinality);
        if (partial.is_set(static_cast<NodeId>(node))) {
            return sum_cells(partial, node + 1,
                             base * k + static_cast<std::size_t>(partial[static_cast<NodeId>(node)]));
        }
        T sum{};
        for (std::size_t v = 0; v < k; ++v) {
            sum += sum_cells(partial, node + 1, base * k + v);
        }
        return sum;
    }

    std::vector<Domain> domains_;
    std::vector<T> table_;
};

} // namespace causalmix
