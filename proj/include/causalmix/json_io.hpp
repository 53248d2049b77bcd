#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "causalmix/benchgen.hpp"
#include "causalmix/cbn.hpp"
#include "causalmix/disentangle.hpp"
#include "causalmix/estimate.hpp"
#include "causalmix/intervene.hpp"

namespace causalmix {

namespace detail {

// Accepts a JSON number or a string like "1/3" / "0.25"; strings are parsed
// exactly in rational mode.
template <typename T>
T number_from_json(const nlohmann::json& j) {
    if (j.is_string()) {
        const Rational q = parse_rational(j.get<std::string>());
        if constexpr (kExactScalar<T>) {
            return q;
        } else {
            return to_double(q);
        }
    }
    if constexpr (kExactScalar<T>) {
        return Rational(j.get<double>());
    } else {
        return j.get<double>();
    }
}

// Rows must sum to 1 within 1e-12, else the file is rejected. In rational
// mode rows are then renormalized exactly (so oracles built from the file are
// consistent); in float mode entries are kept verbatim, which keeps
// load(save(x)) bit-exact and is already inside the validation tolerance.
template <typename T>
void normalize_row(std::vector<T>& row, NodeId node, std::size_t row_idx) {
    T sum{};
    for (const T& x : row) {
        if (x < 0) {
            raise(ErrorCode::UnnormalizedCpt,
                  "negative CPT entry at node " + std::to_string(node));
        }
        sum += x;
    }
    if (std::fabs(to_double(sum) - 1.0) > 1e-12) {
        raise(ErrorCode::UnnormalizedCpt,
              "CPT row " + std::to_string(row_idx) + " of node " + std::to_string(node) +
                  " sums to " + std::to_string(to_double(sum)));
    }
    if constexpr (kExactScalar<T>) {
        for (T& x : row) x /= sum;
    }
}

} // namespace detail

// {"nodes":[{"id":0,"card":3,"label":"V1"},...], "edges":[[0,1],...],
//  "cpds":[{"child":0,"parents":[],"table":[[0.4,0.6]]},...]}
template <typename T>
CausalNet<T> network_from_json(const nlohmann::json& j) {
    CausalNet<T> net;
    const auto& nodes = j.at("nodes");
    net.domains.resize(nodes.size());
    net.labels.resize(nodes.size());
    net.parents.resize(nodes.size());
    net.cpds.resize(nodes.size());
    for (const auto& nj : nodes) {
        const auto id = nj.at("id").get<std::int64_t>();
        if (id < 0 || static_cast<std::size_t>(id) >= nodes.size()) {
            raise(ErrorCode::IoError, "node ids must be dense in [0, N)");
        }
        net.domains[static_cast<std::size_t>(id)].cardinality = nj.at("card").get<std::int32_t>();
        net.labels[static_cast<std::size_t>(id)] =
            nj.contains("label") ? nj.at("label").get<std::string>() : "V" + std::to_string(id + 1);
    }
    for (const auto& ej : j.at("edges")) {
        const NodeId from = ej.at(0).get<NodeId>();
        const NodeId to = ej.at(1).get<NodeId>();
        if (from < 0 || to < 0 || static_cast<std::size_t>(from) >= nodes.size() ||
            static_cast<std::size_t>(to) >= nodes.size()) {
            raise(ErrorCode::IoError, "edge endpoint out of range");
        }
        net.parents[static_cast<std::size_t>(to)].push_back(from);
    }
    for (const auto& cj : j.at("cpds")) {
        const NodeId child = cj.at("child").get<NodeId>();
        auto& cpd = net.cpds[static_cast<std::size_t>(child)];
        cpd.child = child;
        cpd.parents = cj.at("parents").get<std::vector<NodeId>>();
        {
            // the CPT's parent order is authoritative for row indexing; the
            // edge list must agree as a set
            auto declared = net.parents[static_cast<std::size_t>(child)];
            auto listed = cpd.parents;
            std::sort(declared.begin(), declared.end());
            std::sort(listed.begin(), listed.end());
            if (declared != listed) {
                raise(ErrorCode::IoError,
                      "cpd parents of node " + std::to_string(child) + " do not match edges");
            }
        }
        net.parents[static_cast<std::size_t>(child)] = cpd.parents;
        for (std::size_t r = 0; r < cj.at("table").size(); ++r) {
            std::vector<T> row;
            for (const auto& xj : cj.at("table")[r]) {
                row.push_back(detail::number_from_json<T>(xj));
            }
            detail::normalize_row(row, child, r);
            cpd.table.push_back(std::move(row));
        }
    }
    if (j.contains("positivity")) net.positivity_flag = j.at("positivity").get<bool>();
    return net;
}

template <typename T>
nlohmann::json network_to_json(const CausalNet<T>& net) {
    nlohmann::json j;
    j["nodes"] = nlohmann::json::array();
    for (std::size_t v = 0; v < net.size(); ++v) {
        j["nodes"].push_back({{"id", v},
                              {"card", net.domains[v].cardinality},
                              {"label", net.labels[v]}});
    }
    j["edges"] = nlohmann::json::array();
    for (std::size_t v = 0; v < net.size(); ++v) {
        for (NodeId p : net.parents[v]) {
            j["edges"].push_back({p, static_cast<NodeId>(v)});
        }
    }
    j["cpds"] = nlohmann::json::array();
    for (const auto& cpd : net.cpds) {
        nlohmann::json cj;
        cj["child"] = cpd.child;
        cj["parents"] = cpd.parents;
        cj["table"] = nlohmann::json::array();
        for (const auto& row : cpd.table) {
            nlohmann::json rj = nlohmann::json::array();
            for (const T& x : row) rj.push_back(to_double(x));
            cj["table"].push_back(rj);
        }
        j["cpds"].push_back(cj);
    }
    j["positivity"] = net.positivity_flag;
    return j;
}

// {"tuples":[{"target":{"0":0,"1":0},"weight":0.5},...]}. Weights must sum
// to 1 within 1e-9; in rational mode they are then renormalized exactly so
// that mixture oracles built from the file stay consistent.
template <typename T>
InterventionTupleSet<T> tupleset_from_json(const nlohmann::json& j) {
    std::vector<InterventionTuple<T>> tuples;
    for (const auto& tj : j.at("tuples")) {
        std::vector<InterventionTarget::Entry> entries;
        for (const auto& [key, value] : tj.at("target").items()) {
            entries.emplace_back(static_cast<NodeId>(std::stol(key)),
                                 value.template get<ValueCode>());
        }
        const auto& wj = tj.contains("weight_exact") ? tj.at("weight_exact") : tj.at("weight");
        tuples.push_back({InterventionTarget(std::move(entries)),
                          detail::number_from_json<T>(wj)});
    }
    T sum{};
    for (const auto& t : tuples) sum += t.weight;
    if (std::fabs(to_double(sum) - 1.0) > 1e-9) {
        raise(ErrorCode::InvalidArgument,
              "tuple weights sum to " + std::to_string(to_double(sum)));
    }
    if constexpr (kExactScalar<T>) {
        for (auto& t : tuples) t.weight /= sum;
    }
    return InterventionTupleSet<T>(std::move(tuples));
}

template <typename T>
nlohmann::json tupleset_to_json(const InterventionTupleSet<T>& ts) {
    nlohmann::json j;
    j["tuples"] = nlohmann::json::array();
    for (const auto& tuple : ts.tuples()) {
        nlohmann::json tj;
        tj["target"] = nlohmann::json::object();
        for (const auto& [node, value] : tuple.target.entries()) {
            tj["target"][std::to_string(node)] = value;
        }
        tj["weight"] = to_double(tuple.weight);
        if constexpr (kExactScalar<T>) {
            tj["weight_exact"] = to_exact_string(tuple.weight);
        }
        j["tuples"].push_back(tj);
    }
    return j;
}

template <typename T>
nlohmann::json report_to_json(const DisentangleReport<T>& report) {
    nlohmann::json j;
    j["tuples"] = tupleset_to_json(report.tuples)["tuples"];
    j["residuals"] = nlohmann::json::array();
    for (const auto& r : report.residuals) {
        j["residuals"].push_back(
            {{"level", r.level}, {"target_index", r.target_index}, {"residual", r.residual}});
    }
    j["pruned_mass"] = to_double(report.pruned_mass);
    j["wall_time_ms"] = report.wall_time_ms;
    return j;
}

// Headerful CSV of value codes, one column per node.
inline void samples_to_csv(const SampleSet& samples, const std::vector<std::string>& labels,
                           std::ostream& out) {
    for (std::int32_t v = 0; v < samples.num_nodes; ++v) {
        out << (v ? "," : "") << labels[static_cast<std::size_t>(v)];
    }
    out << "\n";
    for (std::size_t r = 0; r < samples.rows(); ++r) {
        for (std::int32_t v = 0; v < samples.num_nodes; ++v) {
            out << (v ? "," : "") << samples.at(r, v);
        }
        out << "\n";
    }
}

inline SampleSet samples_from_csv(std::istream& in, SampleSet::Source source) {
    SampleSet out;
    out.source = source;
    std::string line;
    if (!std::getline(in, line)) {
        raise(ErrorCode::EmptySampleSet, "sample CSV has no header");
    }
    out.num_nodes = 1;
    for (char c : line) {
        if (c == ',') ++out.num_nodes;
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string cell;
        std::int32_t cols = 0;
        while (std::getline(row, cell, ',')) {
            out.data.push_back(static_cast<ValueCode>(std::stol(cell)));
            ++cols;
        }
        if (cols != out.num_nodes) {
            raise(ErrorCode::IoError, "ragged sample CSV row");
        }
    }
    return out;
}

inline std::string bench_csv_header() {
    return "model,N,M,seed,m,recall,rmse,fp_rmse,fn_rmse,pruned_mass,runtime_ms";
}

inline std::string bench_csv_row(const BenchRow& row) {
    std::ostringstream out;
    out << row.model << ',' << row.nodes << ',' << row.samples << ',' << row.seed << ','
        << row.m << ',' << row.metrics.recall << ',' << row.metrics.rmse << ','
        << row.metrics.fp_rmse << ',' << row.metrics.fn_rmse << ',' << row.pruned_mass << ','
        << row.runtime_ms;
    return out.str();
}

inline nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        raise(ErrorCode::IoError, "cannot open " + path);
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::IoError, path + ": " + e.what());
    }
    return j;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) {
        raise(ErrorCode::IoError, "cannot write " + path);
    }
    out << content;
}

} // namespace causalmix
