#pragma once

#include <algorithm>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "causalmix/cbn.hpp"
#include "causalmix/errors.hpp"
#include "causalmix/scalar.hpp"

namespace causalmix {

// Partial assignment of nodes to values describing a perfect intervention.
// The empty target denotes the observational distribution. Entries are kept
// sorted by node id, so equality is structural.
class InterventionTarget {
public:
    using Entry = std::pair<NodeId, ValueCode>;

    InterventionTarget() = default;
    explicit InterventionTarget(std::vector<Entry> entries) : entries_(std::move(entries)) {
        std::sort(entries_.begin(), entries_.end());
        for (std::size_t i = 1; i < entries_.size(); ++i) {
            if (entries_[i].first == entries_[i - 1].first) {
                raise(ErrorCode::InvalidArgument,
                      "target assigns node " + std::to_string(entries_[i].first) + " twice");
            }
        }
    }

    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }
    const std::vector<Entry>& entries() const { return entries_; }

    bool intervenes(NodeId node) const {
        return value_of(node).has_value();
    }

    std::optional<ValueCode> value_of(NodeId node) const {
        const auto it = std::lower_bound(entries_.begin(), entries_.end(),
                                         Entry{node, std::numeric_limits<ValueCode>::min()});
        if (it != entries_.end() && it->first == node) return it->second;
        return std::nullopt;
    }

    InterventionTarget with(NodeId node, ValueCode value) const {
        auto entries = entries_;
        entries.emplace_back(node, value);
        return InterventionTarget(std::move(entries));
    }

    InterventionTarget without(NodeId node) const {
        std::vector<Entry> entries;
        entries.reserve(entries_.size());
        for (const auto& e : entries_) {
            if (e.first != node) entries.push_back(e);
        }
        return InterventionTarget(std::move(entries));
    }

    bool subset_of(const InterventionTarget& other) const {
        for (const auto& e : entries_) {
            const auto v = other.value_of(e.first);
            if (!v || *v != e.second) return false;
        }
        return true;
    }

    bool operator==(const InterventionTarget&) const = default;

    // canonical order: by size, then lexicographically on (node, value) pairs
    static bool canonical_less(const InterventionTarget& a, const InterventionTarget& b) {
        if (a.size() != b.size()) return a.size() < b.size();
        return a.entries_ < b.entries_;
    }

    std::string to_string() const {
        if (entries_.empty()) return "{}";
        std::string out = "{";
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            if (i > 0) out += ",";
            out += "V" + std::to_string(entries_[i].first) + "=" +
                   std::to_string(entries_[i].second);
        }
        return out + "}";
    }

private:
    std::vector<Entry> entries_;
};

template <typename T>
struct InterventionTuple {
    InterventionTarget target;
    T weight{};

    bool operator==(const InterventionTuple&) const = default;
};

// Set of (target, weight) tuples with pairwise-distinct targets, kept in
// canonical order so that set equality is structural equality. Duplicate
// targets passed to the constructor are merged by summing weights; tuples
// with exactly-zero weight are dropped.
template <typename T>
class InterventionTupleSet {
public:
    InterventionTupleSet() = default;

    explicit InterventionTupleSet(std::vector<InterventionTuple<T>> tuples) {
        std::sort(tuples.begin(), tuples.end(),
                  [](const InterventionTuple<T>& x, const InterventionTuple<T>& y) {
                      return InterventionTarget::canonical_less(x.target, y.target);
                  });
        for (auto& t : tuples) {
            if (t.weight < 0) {
                raise(ErrorCode::InvalidArgument, "negative tuple weight");
            }
            if (!tuples_.empty() && tuples_.back().target == t.target) {
                tuples_.back().weight += t.weight;
            } else {
                tuples_.push_back(std::move(t));
            }
        }
        std::erase_if(tuples_, [](const InterventionTuple<T>& t) { return t.weight == 0; });
    }

    const std::vector<InterventionTuple<T>>& tuples() const { return tuples_; }
    std::size_t size() const { return tuples_.size(); }
    bool empty() const { return tuples_.empty(); }
    const InterventionTuple<T>& operator[](std::size_t i) const { return tuples_[i]; }

    T total_weight() const {
        T sum{};
        for (const auto& t : tuples_) sum += t.weight;
        return sum;
    }

    bool normalized() const {
        if constexpr (kExactScalar<T>) {
            return total_weight() == 1;
        } else {
            return std::fabs(to_double(total_weight()) - 1.0) <= 1e-9;
        }
    }

    std::vector<InterventionTarget> targets() const {
        std::vector<InterventionTarget> out;
        out.reserve(tuples_.size());
        for (const auto& t : tuples_) out.push_back(t.target);
        return out;
    }

    bool operator==(const InterventionTupleSet&) const = default;

private:
    std::vector<InterventionTuple<T>> tuples_;
};

// Every target must assign only nodes of the net, with values inside their
// domains.
template <typename T, typename U>
void require_compatible(const InterventionTupleSet<T>& ts, const CausalNet<U>& net) {
    for (const auto& tuple : ts.tuples()) {
        for (const auto& [node, value] : tuple.target.entries()) {
            if (node < 0 || static_cast<std::size_t>(node) >= net.size()) {
                raise(ErrorCode::InvalidArgument,
                      "target assigns unknown node " + std::to_string(node));
            }
            if (value < 0 || value >= net.cardinality(node)) {
                raise(ErrorCode::InvalidArgument,
                      "target value " + std::to_string(value) + " outside the domain of node " +
                          std::to_string(node));
            }
        }
    }
}

// Interventional distribution of a total assignment: non-intervened nodes
// contribute their CPT entry, intervened nodes a Kronecker delta.
template <typename T>
T interventional_prob(const CausalNet<T>& net, const InterventionTarget& t,
                      const Assignment& v) {
    if (v.size() != net.size() || !v.total()) {
        raise(ErrorCode::IncompleteAssignment, "interventional_prob needs a total assignment");
    }
    T prod = from_double<T>(1.0);
    for (std::size_t i = 0; i < net.size(); ++i) {
        const NodeId node = static_cast<NodeId>(i);
        if (const auto forced = t.value_of(node)) {
            if (*forced != v[node]) return T{};
        } else {
            prod *= net.cpds[i].prob(v, net.domains);
        }
    }
    return prod;
}

// Same restricted to a topological prefix; used by the recovery engine on the
// vertex-deleted subproblems.
template <typename T>
T interventional_prefix_prob(const CausalNet<T>& net, const InterventionTarget& t,
                             const Assignment& v, std::span<const NodeId> prefix) {
    T prod = from_double<T>(1.0);
    for (NodeId node : prefix) {
        if (const auto forced = t.value_of(node)) {
            if (*forced != v[node]) return T{};
        } else {
            prod *= net.cpds[static_cast<std::size_t>(node)].prob(v, net.domains);
        }
    }
    return prod;
}

template <typename T>
T mixture_prob(const CausalNet<T>& net, const InterventionTupleSet<T>& ts,
               const Assignment& v) {
    T sum{};
    for (const auto& tuple : ts.tuples()) {
        sum += tuple.weight * interventional_prob(net, tuple.target, v);
    }
    return sum;
}

// Per-node value excluded from every target of the witnessed set.
struct ExclusionWitness {
    std::vector<ValueCode> excluded; // indexed by NodeId
};

// Smallest value of `node` absent from every target, or nullopt if every
// value appears.
inline std::optional<ValueCode> smallest_excluded_value(
    std::span<const InterventionTarget> targets, NodeId node, std::int32_t cardinality) {
    std::vector<bool> present(static_cast<std::size_t>(cardinality), false);
    for (const auto& t : targets) {
        if (const auto v = t.value_of(node)) {
            present[static_cast<std::size_t>(*v)] = true;
        }
    }
    for (std::int32_t v = 0; v < cardinality; ++v) {
        if (!present[static_cast<std::size_t>(v)]) return v;
    }
    return std::nullopt;
}

// Checks the exclusion assumption: every node must have at least one value
// that no target assigns. Returns the smallest such value per node; throws
// ExclusionViolated naming the first node without one.
template <typename T>
ExclusionWitness check_exclusion(const InterventionTupleSet<T>& ts, const CausalNet<T>& net) {
    const auto targets = ts.targets();
    ExclusionWitness witness;
    witness.excluded.reserve(net.size());
    for (std::size_t i = 0; i < net.size(); ++i) {
        const NodeId node = static_cast<NodeId>(i);
        const auto v = smallest_excluded_value(targets, node, net.cardinality(node));
        if (!v) {
            raise(ErrorCode::ExclusionViolated,
                  "every value of node " + std::to_string(node) + " appears in some target");
        }
        witness.excluded.push_back(*v);
    }
    return witness;
}

// Marginalizes a tuple set over a sink node: assignments to `last` are
// dropped from each target and colliding reduced targets merge by weight.
// Node ids are not re-indexed.
template <typename T>
InterventionTupleSet<T> marginalize_tuples(const InterventionTupleSet<T>& ts, NodeId last) {
    std::vector<InterventionTuple<T>> reduced;
    reduced.reserve(ts.size());
    for (const auto& tuple : ts.tuples()) {
        reduced.push_back({tuple.target.without(last), tuple.weight});
    }
    return InterventionTupleSet<T>(std::move(reduced));
}

template <typename T>
InterventionTupleSet<Rational> to_rational(const InterventionTupleSet<T>& ts,
                                           bool renormalize = true) {
    std::vector<InterventionTuple<Rational>> tuples;
    tuples.reserve(ts.size());
    Rational sum = 0;
    for (const auto& t : ts.tuples()) {
        tuples.push_back({t.target, Rational(to_double(t.weight))});
        sum += tuples.back().weight;
    }
    if (renormalize && sum != 0) {
        for (auto& t : tuples) t.weight /= sum; // weights now sum to exactly 1
    }
    return InterventionTupleSet<Rational>(std::move(tuples));
}

inline InterventionTupleSet<double> to_real(const InterventionTupleSet<Rational>& ts) {
    std::vector<InterventionTuple<double>> tuples;
    tuples.reserve(ts.size());
    for (const auto& t : ts.tuples()) {
        tuples.push_back({t.target, to_double(t.weight)});
    }
    return InterventionTupleSet<double>(std::move(tuples));
}

} // namespace causalmix
