#pragma once

#include <algorithm>
#include <cstdint>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "causalmix/errors.hpp"
#include "causalmix/scalar.hpp"

namespace causalmix {

using NodeId = std::int32_t;
using ValueCode = std::int32_t;

struct Domain {
    std::int32_t cardinality = 2;
};

// Full or partial assignment of value codes, indexed by NodeId. kUnset marks
// unassigned nodes.
class Assignment {
public:
    static constexpr ValueCode kUnset = -1;

    Assignment() = default;
    explicit Assignment(std::size_t num_nodes) : values_(num_nodes, kUnset) {}
    explicit Assignment(std::vector<ValueCode> values) : values_(std::move(values)) {}

    std::size_t size() const { return values_.size(); }
    ValueCode operator[](NodeId node) const { return values_[static_cast<std::size_t>(node)]; }
    bool is_set(NodeId node) const { return values_[static_cast<std::size_t>(node)] != kUnset; }
    void set(NodeId node, ValueCode value) { values_[static_cast<std::size_t>(node)] = value; }
    void unset(NodeId node) { values_[static_cast<std::size_t>(node)] = kUnset; }

    bool total() const {
        return std::none_of(values_.begin(), values_.end(),
                            [](ValueCode v) { return v == kUnset; });
    }

    std::size_t assigned_count() const {
        return static_cast<std::size_t>(std::count_if(
            values_.begin(), values_.end(), [](ValueCode v) { return v != kUnset; }));
    }

    const std::vector<ValueCode>& values() const { return values_; }
    bool operator==(const Assignment&) const = default;

private:
    std::vector<ValueCode> values_;
};

// Conditional probability table of one node. Rows are indexed by the
// mixed-radix code of the parent assignment, parents in listed order with the
// first parent most significant.
template <typename T>
struct CptTable {
    NodeId child = 0;
    std::vector<NodeId> parents;
    std::vector<std::vector<T>> table;

    std::size_t row_index(const Assignment& a, const std::vector<Domain>& domains) const {
        std::size_t idx = 0;
        for (NodeId p : parents) {
            idx = idx * static_cast<std::size_t>(domains[static_cast<std::size_t>(p)].cardinality)
                  + static_cast<std::size_t>(a[p]);
        }
        return idx;
    }

    const T& prob(const Assignment& a, const std::vector<Domain>& domains) const {
        return table[row_index(a, domains)][static_cast<std::size_t>(a[child])];
    }
};

// Discrete causal Bayesian network: DAG plus one CPT per node. Immutable
// after validation; all operations on it are pure.
template <typename T>
struct CausalNet {
    std::vector<Domain> domains;
    std::vector<std::string> labels; // file-format labels, ignored by algorithms
    std::vector<std::vector<NodeId>> parents;
    std::vector<CptTable<T>> cpds;
    bool positivity_flag = true;

    std::size_t size() const { return domains.size(); }
    std::int32_t cardinality(NodeId node) const {
        return domains[static_cast<std::size_t>(node)].cardinality;
    }

    std::vector<std::vector<NodeId>> children() const {
        std::vector<std::vector<NodeId>> out(size());
        for (std::size_t v = 0; v < size(); ++v) {
            for (NodeId p : parents[v]) {
                out[static_cast<std::size_t>(p)].push_back(static_cast<NodeId>(v));
            }
        }
        return out;
    }
};

struct ValidationIssue {
    ErrorCode code;
    NodeId node = -1;
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    bool ok() const { return issues.empty(); }
};

namespace detail {

template <typename T>
bool row_normalized(const std::vector<T>& row) {
    T sum{};
    for (const T& x : row) sum += x;
    if constexpr (kExactScalar<T>) {
        return sum == 1;
    } else {
        return std::fabs(to_double(sum) - 1.0) <= 1e-12;
    }
}

template <typename T>
std::size_t expected_rows(const CausalNet<T>& net, NodeId node) {
    std::size_t rows = 1;
    for (NodeId p : net.parents[static_cast<std::size_t>(node)]) {
        rows *= static_cast<std::size_t>(net.cardinality(p));
    }
    return rows;
}

} // namespace detail

// Deterministic topological order: Kahn's algorithm, ties broken by smallest
// NodeId first. Throws CycleDetected.
template <typename T>
std::vector<NodeId> topological_order(const CausalNet<T>& net) {
    const std::size_t n = net.size();
    std::vector<std::size_t> in_degree(n, 0);
    for (std::size_t v = 0; v < n; ++v) in_degree[v] = net.parents[v].size();
    const auto children = net.children();

    std::priority_queue<NodeId, std::vector<NodeId>, std::greater<>> ready;
    for (std::size_t v = 0; v < n; ++v) {
        if (in_degree[v] == 0) ready.push(static_cast<NodeId>(v));
    }
    std::vector<NodeId> order;
    order.reserve(n);
    while (!ready.empty()) {
        const NodeId v = ready.top();
        ready.pop();
        order.push_back(v);
        for (NodeId c : children[static_cast<std::size_t>(v)]) {
            if (--in_degree[static_cast<std::size_t>(c)] == 0) ready.push(c);
        }
    }
    if (order.size() != n) {
        raise(ErrorCode::CycleDetected, "graph has a directed cycle");
    }
    return order;
}

template <typename T>
ValidationReport validate(const CausalNet<T>& net) {
    ValidationReport report;
    const std::size_t n = net.size();
    if (n == 0) {
        report.issues.push_back({ErrorCode::InvalidArgument, -1, "network has no nodes"});
        return report;
    }
    if (net.parents.size() != n || net.cpds.size() != n || net.labels.size() != n) {
        report.issues.push_back({ErrorCode::InvalidArgument, -1, "inconsistent field sizes"});
        return report;
    }
    for (std::size_t v = 0; v < n; ++v) {
        if (net.domains[v].cardinality < 2) {
            report.issues.push_back({ErrorCode::InvalidArgument, static_cast<NodeId>(v),
                                     "cardinality must be at least 2"});
        }
        for (NodeId p : net.parents[v]) {
            if (p < 0 || static_cast<std::size_t>(p) >= n || p == static_cast<NodeId>(v)) {
                report.issues.push_back({ErrorCode::InvalidArgument, static_cast<NodeId>(v),
                                         "parent id out of range"});
            }
        }
    }
    if (!report.ok()) return report;

    try {
        topological_order(net);
    } catch (const CausalError&) {
        report.issues.push_back({ErrorCode::CycleDetected, -1, "graph has a directed cycle"});
        return report;
    }

    for (std::size_t v = 0; v < n; ++v) {
        const auto& cpd = net.cpds[v];
        if (cpd.child != static_cast<NodeId>(v) || cpd.parents != net.parents[v]) {
            report.issues.push_back({ErrorCode::InvalidArgument, static_cast<NodeId>(v),
                                     "CPT parents do not match graph parents"});
            continue;
        }
        if (cpd.table.size() != detail::expected_rows(net, static_cast<NodeId>(v))) {
            report.issues.push_back({ErrorCode::UnnormalizedCpt, static_cast<NodeId>(v),
                                     "CPT row count does not match parent domains"});
            continue;
        }
        for (std::size_t r = 0; r < cpd.table.size(); ++r) {
            const auto& row = cpd.table[r];
            if (row.size() != static_cast<std::size_t>(net.domains[v].cardinality)) {
                report.issues.push_back({ErrorCode::UnnormalizedCpt, static_cast<NodeId>(v),
                                         "CPT row " + std::to_string(r) + " has wrong width"});
                continue;
            }
            bool nonneg = true;
            for (const T& x : row) {
                if (x < 0) nonneg = false;
            }
            if (!nonneg || !detail::row_normalized(row)) {
                report.issues.push_back({ErrorCode::UnnormalizedCpt, static_cast<NodeId>(v),
                                         "CPT row " + std::to_string(r) + " is not a distribution"});
            }
            if (net.positivity_flag) {
                for (std::size_t j = 0; j < row.size(); ++j) {
                    if (!(row[j] > 0)) {
                        report.issues.push_back(
                            {ErrorCode::PositivityViolated, static_cast<NodeId>(v),
                             "CPT entry (row " + std::to_string(r) + ", value " +
                                 std::to_string(j) + ") is zero"});
                    }
                }
            }
        }
    }
    return report;
}

template <typename T>
void require_valid(const CausalNet<T>& net) {
    const auto report = validate(net);
    if (!report.ok()) {
        const auto& first = report.issues.front();
        raise(first.code, first.detail + (first.node >= 0
                                              ? " (node " + std::to_string(first.node) + ")"
                                              : ""));
    }
}

// Exact joint probability of a total assignment: the product of one CPT entry
// per node.
template <typename T>
T joint_prob(const CausalNet<T>& net, const Assignment& v) {
    if (v.size() != net.size() || !v.total()) {
        raise(ErrorCode::IncompleteAssignment, "joint_prob needs a total assignment");
    }
    T prod = from_double<T>(1.0);
    for (std::size_t i = 0; i < net.size(); ++i) {
        prod *= net.cpds[i].prob(v, net.domains);
    }
    return prod;
}

// Marginal over a topological prefix: the product of the prefix nodes' CPT
// entries. The assignment must cover the prefix (which is parent-closed).
template <typename T>
T prefix_prob(const CausalNet<T>& net, const Assignment& v, std::span<const NodeId> prefix) {
    T prod = from_double<T>(1.0);
    for (NodeId node : prefix) {
        prod *= net.cpds[static_cast<std::size_t>(node)].prob(v, net.domains);
    }
    return prod;
}

// Deletes the last node of the order, which must be a sink. Remaining nodes
// with larger ids are shifted down by one to keep ids dense.
template <typename T>
CausalNet<T> delete_last(const CausalNet<T>& net, const std::vector<NodeId>& order) {
    if (order.empty() || net.size() < 2) {
        raise(ErrorCode::InvalidArgument, "delete_last needs at least two nodes");
    }
    const NodeId last = order.back();
    for (std::size_t v = 0; v < net.size(); ++v) {
        for (NodeId p : net.parents[v]) {
            if (p == last) {
                raise(ErrorCode::NotASink,
                      "node " + std::to_string(last) + " has child " + std::to_string(v));
            }
        }
    }
    const auto remap = [last](NodeId v) { return v > last ? v - 1 : v; };
    CausalNet<T> out;
    out.positivity_flag = net.positivity_flag;
    for (std::size_t v = 0; v < net.size(); ++v) {
        if (static_cast<NodeId>(v) == last) continue;
        out.domains.push_back(net.domains[v]);
        out.labels.push_back(net.labels[v]);
        std::vector<NodeId> ps;
        for (NodeId p : net.parents[v]) ps.push_back(remap(p));
        out.parents.push_back(ps);
        CptTable<T> cpd = net.cpds[v];
        cpd.child = remap(cpd.child);
        for (NodeId& p : cpd.parents) p = remap(p);
        out.cpds.push_back(std::move(cpd));
    }
    return out;
}

// Enumerates all total assignments of the net in mixed-radix order (node 0
// most significant) and calls fn on each.
template <typename T, typename Fn>
void for_each_assignment(const CausalNet<T>& net, Fn&& fn) {
    const std::size_t n = net.size();
    Assignment a(n);
    for (std::size_t i = 0; i < n; ++i) a.set(static_cast<NodeId>(i), 0);
    for (;;) {
        fn(const_cast<const Assignment&>(a));
        std::size_t i = n;
        while (i > 0) {
            --i;
            const NodeId node = static_cast<NodeId>(i);
            if (a[node] + 1 < net.cardinality(node)) {
                a.set(node, a[node] + 1);
                break;
            }
            a.set(node, 0);
            if (i == 0) return;
        }
    }
}

template <typename T>
CausalNet<Rational> to_rational(const CausalNet<T>& net) {
    CausalNet<Rational> out;
    out.domains = net.domains;
    out.labels = net.labels;
    out.parents = net.parents;
    out.positivity_flag = net.positivity_flag;
    out.cpds.reserve(net.cpds.size());
    for (const auto& cpd : net.cpds) {
        CptTable<Rational> q;
        q.child = cpd.child;
        q.parents = cpd.parents;
        q.table.reserve(cpd.table.size());
        for (const auto& row : cpd.table) {
            std::vector<Rational> qrow;
            qrow.reserve(row.size());
            Rational sum = 0;
            for (const auto& x : row) {
                qrow.push_back(Rational(to_double(x)));
                sum += qrow.back();
            }
            if (sum == 0) {
                raise(ErrorCode::UnnormalizedCpt, "all-zero CPT row");
            }
            for (auto& x : qrow) x /= sum; // rows become exactly normalized
            q.table.push_back(std::move(qrow));
        }
        out.cpds.push_back(std::move(q));
    }
    return out;
}

inline CausalNet<double> to_real(const CausalNet<Rational>& net) {
    CausalNet<double> out;
    out.domains = net.domains;
    out.labels = net.labels;
    out.parents = net.parents;
    out.positivity_flag = net.positivity_flag;
    out.cpds.reserve(net.cpds.size());
    for (const auto& cpd : net.cpds) {
        CptTable<double> d;
        d.child = cpd.child;
        d.parents = cpd.parents;
        d.table.reserve(cpd.table.size());
        for (const auto& row : cpd.table) {
            std::vector<double> drow;
            drow.reserve(row.size());
            for (const auto& x : row) drow.push_back(to_double(x));
            d.table.push_back(std::move(drow));
        }
        out.cpds.push_back(std::move(d));
    }
    return out;
}

} // namespace causalmix
