// Python bindings over the JSON-facing surface: networks and tuple sets move
// as JSON strings or small dicts, samples as row lists. The oracle-mode
// recovery runs on the exact rational backend and reports weights both as
// floats and exact fraction strings.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "causalmix/causalmix.hpp"

namespace py = pybind11;
using namespace causalmix;

namespace {

CausalNet<double> net_from_json_str(const std::string& text) {
    return network_from_json<double>(nlohmann::json::parse(text));
}

InterventionTupleSet<double> tuples_from_json_str(const std::string& text) {
    return tupleset_from_json<double>(nlohmann::json::parse(text));
}

InterventionTarget target_from_dict(const std::map<NodeId, ValueCode>& entries) {
    std::vector<InterventionTarget::Entry> pairs(entries.begin(), entries.end());
    return InterventionTarget(std::move(pairs));
}

SampleSet samples_from_rows(const std::vector<std::vector<ValueCode>>& rows,
                            SampleSet::Source source) {
    if (rows.empty()) {
        raise(ErrorCode::EmptySampleSet, "no sample rows given");
    }
    SampleSet out;
    out.source = source;
    out.num_nodes = static_cast<std::int32_t>(rows.front().size());
    out.data.reserve(rows.size() * rows.front().size());
    for (const auto& row : rows) {
        if (row.size() != rows.front().size()) {
            raise(ErrorCode::InvalidArgument, "ragged sample rows");
        }
        out.data.insert(out.data.end(), row.begin(), row.end());
    }
    return out;
}

std::vector<std::vector<ValueCode>> rows_from_samples(const SampleSet& samples) {
    std::vector<std::vector<ValueCode>> rows(samples.rows());
    for (std::size_t r = 0; r < samples.rows(); ++r) {
        rows[r].resize(static_cast<std::size_t>(samples.num_nodes));
        for (std::int32_t v = 0; v < samples.num_nodes; ++v) {
            rows[r][static_cast<std::size_t>(v)] = samples.at(r, v);
        }
    }
    return rows;
}

Assignment assignment_from_list(const std::vector<ValueCode>& values) {
    return Assignment(values);
}

Assignment partial_from_dict(std::size_t num_nodes, const std::map<NodeId, ValueCode>& set) {
    Assignment a(num_nodes);
    for (const auto& [node, value] : set) a.set(node, value);
    return a;
}

template <typename T>
py::dict report_to_dict(const DisentangleReport<T>& report) {
    py::list tuples;
    for (const auto& tuple : report.tuples.tuples()) {
        py::dict target;
        for (const auto& [node, value] : tuple.target.entries()) {
            target[py::int_(node)] = value;
        }
        py::dict item;
        item["target"] = target;
        item["weight"] = to_double(tuple.weight);
        if constexpr (kExactScalar<T>) {
            item["weight_exact"] = to_exact_string(tuple.weight);
        }
        tuples.append(item);
    }
    py::list residuals;
    for (const auto& r : report.residuals) {
        py::dict item;
        item["level"] = r.level;
        item["target_index"] = r.target_index;
        item["residual"] = r.residual;
        residuals.append(item);
    }
    py::dict out;
    out["tuples"] = tuples;
    out["residuals"] = residuals;
    out["pruned_mass"] = to_double(report.pruned_mass);
    out["wall_time_ms"] = report.wall_time_ms;
    return out;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Causal Bayesian networks, mixtures of perfect interventions, and "
              "recovery of the generating intervention tuples";
    m.attr("__version__") = kVersion;

    py::register_exception<CausalError>(m, "CausalError");

    py::class_<CausalNet<double>>(m, "Network")
        .def_static("from_json", &net_from_json_str, py::arg("text"))
        .def("to_json",
             [](const CausalNet<double>& net) { return network_to_json(net).dump(2); })
        .def_property_readonly("num_nodes",
                               [](const CausalNet<double>& net) { return net.size(); })
        .def("cardinality", &CausalNet<double>::cardinality, py::arg("node"))
        .def("validate",
             [](const CausalNet<double>& net) {
                 std::vector<std::string> issues;
                 for (const auto& issue : validate(net).issues) {
                     issues.push_back(std::string(error_code_name(issue.code)) + ": " +
                                      issue.detail);
                 }
                 return issues;
             })
        .def("topological_order",
             [](const CausalNet<double>& net) { return topological_order(net); })
        .def("joint_prob",
             [](const CausalNet<double>& net, const std::vector<ValueCode>& v) {
                 return joint_prob(net, assignment_from_list(v));
             },
             py::arg("assignment"))
        .def("interventional_prob",
             [](const CausalNet<double>& net, const std::map<NodeId, ValueCode>& target,
                const std::vector<ValueCode>& v) {
                 return interventional_prob(net, target_from_dict(target),
                                            assignment_from_list(v));
             },
             py::arg("target"), py::arg("assignment"));

    py::class_<InterventionTupleSet<double>>(m, "TupleSet")
        .def_static("from_json", &tuples_from_json_str, py::arg("text"))
        .def("to_json",
             [](const InterventionTupleSet<double>& ts) { return tupleset_to_json(ts).dump(2); })
        .def("__len__", &InterventionTupleSet<double>::size)
        .def("targets",
             [](const InterventionTupleSet<double>& ts) {
                 std::vector<std::map<NodeId, ValueCode>> out;
                 for (const auto& tuple : ts.tuples()) {
                     out.emplace_back(tuple.target.entries().begin(),
                                      tuple.target.entries().end());
                 }
                 return out;
             })
        .def("weights", [](const InterventionTupleSet<double>& ts) {
            std::vector<double> out;
            for (const auto& tuple : ts.tuples()) out.push_back(tuple.weight);
            return out;
        });

    m.def("mixture_prob",
          [](const CausalNet<double>& net, const InterventionTupleSet<double>& ts,
             const std::vector<ValueCode>& v) {
              return mixture_prob(net, ts, assignment_from_list(v));
          },
          py::arg("net"), py::arg("tuples"), py::arg("assignment"));

    m.def("check_exclusion",
          [](const InterventionTupleSet<double>& ts, const CausalNet<double>& net) {
              return check_exclusion(ts, net).excluded;
          },
          py::arg("tuples"), py::arg("net"),
          "Per-node excluded value; raises CausalError when a node has every value targeted");

    m.def("marginalize_tuples",
          [](const InterventionTupleSet<double>& ts, NodeId last) {
              return marginalize_tuples(ts, last);
          },
          py::arg("tuples"), py::arg("last"));

    m.def("solve_exact",
          [](const std::vector<double>& a, const std::vector<double>& b, double c) {
              const auto sol = solve_exact(StructuredSystem<double>(a, b, c));
              return py::make_tuple(sol.x, sol.zero_index, sol.residual);
          },
          py::arg("a"), py::arg("b"), py::arg("c"),
          "Unique nonnegative one-zero-coordinate solve of (c*I - a*1^T) x = b");

    m.def("solve_scored",
          [](const std::vector<double>& a, const std::vector<double>& b, double c) {
              const auto sol = solve_scored(StructuredSystem<double>(a, b, c));
              return py::make_tuple(sol.x, sol.zero_index, sol.residual);
          },
          py::arg("a"), py::arg("b"), py::arg("c"));

    m.def("ancestral_sample",
          [](const CausalNet<double>& net, std::uint64_t seed, std::size_t count) {
              return rows_from_samples(ancestral_sample(net, {seed}, count));
          },
          py::arg("net"), py::arg("seed"), py::arg("count"));

    m.def("mixture_sample",
          [](const CausalNet<double>& net, const InterventionTupleSet<double>& ts,
             std::uint64_t seed, std::size_t count) {
              return rows_from_samples(mixture_sample(net, ts, {seed}, count));
          },
          py::arg("net"), py::arg("tuples"), py::arg("seed"), py::arg("count"));

    m.def("mle_cpds",
          [](const std::vector<std::vector<ValueCode>>& rows, const CausalNet<double>& skeleton,
             double delta) {
              return mle_cpds(samples_from_rows(rows, SampleSet::Source::Observational),
                              skeleton, delta);
          },
          py::arg("rows"), py::arg("skeleton"), py::arg("delta") = 1e-6);

    m.def("empirical_marginal",
          [](const std::vector<std::vector<ValueCode>>& rows,
             const std::map<NodeId, ValueCode>& partial) {
              const auto samples = samples_from_rows(rows, SampleSet::Source::Mixture);
              return empirical_marginal(
                  samples, partial_from_dict(static_cast<std::size_t>(samples.num_nodes),
                                             partial));
          },
          py::arg("rows"), py::arg("partial"));

    m.def("disentangle_oracle",
          [](const CausalNet<double>& net, const InterventionTupleSet<double>& generating) {
              const auto qnet = to_rational(net);
              const auto qts = to_rational(generating);
              const NetOracle<Rational> p(qnet);
              const MixtureOracle<Rational> mix(qnet, qts);
              DisentangleOptions<Rational> opt;
              return report_to_dict(run_disentangle(qnet, p, mix, opt));
          },
          py::arg("net"), py::arg("generating"),
          "Exact recovery against the self-oracle built from the generating tuple set");

    m.def("disentangle_finite",
          [](const CausalNet<double>& skeleton, const std::vector<std::vector<ValueCode>>& obs,
             const std::vector<std::vector<ValueCode>>& mix, double epsilon, double delta) {
              const auto net_hat = mle_cpds(
                  samples_from_rows(obs, SampleSet::Source::Observational), skeleton, delta);
              const auto report = disentangle_finite(
                  net_hat, samples_from_rows(mix, SampleSet::Source::Mixture), epsilon);
              return report_to_dict(report);
          },
          py::arg("skeleton"), py::arg("observational_rows"), py::arg("mixture_rows"),
          py::arg("epsilon") = 0.01, py::arg("delta") = 1e-6);

    m.def("random_instance",
          [](std::int32_t nodes, std::int32_t cardinality, const std::string& model,
             std::uint64_t seed) {
              InstanceConfig cfg;
              cfg.nodes = nodes;
              cfg.cardinality = cardinality;
              cfg.model =
                  model == "er" ? GraphModel::ErdosRenyi : GraphModel::ScaleFree;
              cfg.seed = seed;
              const auto net = random_cbn(random_dag(cfg), cfg.cpd_alpha, seed);
              const auto ts = random_tupleset(net, cfg, seed);
              return py::make_tuple(net, ts);
          },
          py::arg("nodes"), py::arg("cardinality") = 3, py::arg("model") = "sf",
          py::arg("seed") = 0);

    m.def("metrics",
          [](const InterventionTupleSet<double>& truth,
             const InterventionTupleSet<double>& recovered) {
              const auto rec = metrics(truth, recovered);
              py::dict out;
              out["recall"] = rec.recall;
              out["rmse"] = rec.rmse;
              out["fp_rmse"] = rec.fp_rmse;
              out["fn_rmse"] = rec.fn_rmse;
              return out;
          },
          py::arg("truth"), py::arg("recovered"));
}
