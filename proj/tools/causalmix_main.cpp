// Command-line surface: instance generation, sampling, disentangling and
// benchmark sweeps over the library.
//
// Exit codes: 0 success, 2 usage error, 3 exclusion violated/unsatisfiable,
// 4 solver inconsistency or degeneracy, 1 anything else.

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "causalmix/causalmix.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::atomic<bool> g_interrupted{false};

void handle_sigint(int) { g_interrupted.store(true); }

std::string timestamp_utc() {
    std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return buf;
}

// DISENTANGLE_SEED overrides --seed when set
std::uint64_t effective_seed(std::uint64_t flag_seed) {
    if (const char* env = std::getenv("DISENTANGLE_SEED")) {
        return std::strtoull(env, nullptr, 10);
    }
    return flag_seed;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
    using causalmix::SplitMix64;
    return SplitMix64::mix(SplitMix64::mix(master) ^ SplitMix64::mix((a << 32) ^ b));
}

void write_manifest(const fs::path& path, const std::string& command, const json& config,
                    std::uint64_t seed, const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs) {
    json m;
    m["command"] = command;
    m["config"] = config;
    m["seed"] = seed;
    m["inputs"] = inputs;
    m["outputs"] = outputs;
    m["tool_version"] = causalmix::kVersion;
    m["created_at"] = timestamp_utc();
    std::ofstream out(path);
    out << m.dump(2) << "\n";
}

std::int64_t parse_count_token(const std::string& token) {
    if (token.rfind("2^", 0) == 0) {
        return std::int64_t{1} << std::stoi(token.substr(2));
    }
    return std::stoll(token);
}

// "4x2^10" or "4,8,12x2^4..2^20"; M ranges step by doubling
void parse_grid(const std::string& spec, std::vector<std::int32_t>& nodes,
                std::vector<std::int64_t>& samples) {
    const auto split = [](const std::string& s, char sep) {
        std::vector<std::string> parts;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= s.size(); ++i) {
            if (i == s.size() || s[i] == sep) {
                parts.push_back(s.substr(start, i - start));
                start = i + 1;
            }
        }
        return parts;
    };
    const auto x = spec.find('x');
    if (x == std::string::npos) {
        throw CLI::ValidationError("--grid", "expected NxM, e.g. 4x2^10");
    }
    for (const auto& tok : split(spec.substr(0, x), ',')) {
        nodes.push_back(static_cast<std::int32_t>(std::stol(tok)));
    }
    for (const auto& tok : split(spec.substr(x + 1), ',')) {
        const auto range = tok.find("..");
        if (range == std::string::npos) {
            samples.push_back(parse_count_token(tok));
        } else {
            const std::int64_t lo = parse_count_token(tok.substr(0, range));
            const std::int64_t hi = parse_count_token(tok.substr(range + 2));
            for (std::int64_t m = lo; m <= hi; m *= 2) samples.push_back(m);
        }
    }
    if (nodes.empty() || samples.empty()) {
        throw CLI::ValidationError("--grid", "empty grid");
    }
}

int map_error(const causalmix::CausalError& e) {
    using causalmix::ErrorCode;
    switch (e.code()) {
        case ErrorCode::ExclusionViolated:
        case ErrorCode::ExclusionUnsatisfiable:
            return 3;
        case ErrorCode::Inconsistent:
        case ErrorCode::Degenerate:
            return 4;
        default:
            return 1;
    }
}

struct GenArgs {
    std::int32_t nodes = 4;
    std::int32_t cardinality = 3;
    std::string model = "sf";
    std::uint64_t seed = 0;
    std::string out = ".";
};

int run_gen(const GenArgs& args) {
    causalmix::InstanceConfig cfg;
    cfg.nodes = args.nodes;
    cfg.cardinality = args.cardinality;
    cfg.model = args.model == "er" ? causalmix::GraphModel::ErdosRenyi
                                   : causalmix::GraphModel::ScaleFree;
    cfg.seed = effective_seed(args.seed);

    const auto net = causalmix::random_cbn(causalmix::random_dag(cfg), cfg.cpd_alpha, cfg.seed);
    const auto tuples = causalmix::random_tupleset(net, cfg, cfg.seed);

    fs::create_directories(args.out);
    const fs::path dir(args.out);
    causalmix::write_text_file((dir / "net.json").string(),
                               causalmix::network_to_json(net).dump(2) + "\n");
    causalmix::write_text_file((dir / "tuples.json").string(),
                               causalmix::tupleset_to_json(tuples).dump(2) + "\n");
    write_manifest(dir / "manifest.json", "gen",
                   json{{"nodes", args.nodes},
                        {"cardinality", args.cardinality},
                        {"model", args.model}},
                   cfg.seed, {}, {"net.json", "tuples.json"});
    std::cout << "wrote " << (dir / "net.json").string() << " and "
              << (dir / "tuples.json").string() << "\n";
    return 0;
}

struct SampleArgs {
    std::string net;
    std::string tuples;
    std::int64_t samples = 1 << 10;
    std::int64_t samples_mix = -1; // defaults to --samples
    std::uint64_t seed = 0;
    std::string out = ".";
};

int run_sample(const SampleArgs& args) {
    const auto net = causalmix::network_from_json<double>(causalmix::load_json_file(args.net));
    causalmix::require_valid(net);
    const auto tuples =
        causalmix::tupleset_from_json<double>(causalmix::load_json_file(args.tuples));
    const std::uint64_t seed = effective_seed(args.seed);
    const std::int64_t mix_count = args.samples_mix > 0 ? args.samples_mix : args.samples;

    const auto obs = causalmix::ancestral_sample(net, {derive_seed(seed, 0, 0)},
                                                 static_cast<std::size_t>(args.samples));
    const auto mix = causalmix::mixture_sample(net, tuples, {derive_seed(seed, 1, 0)},
                                               static_cast<std::size_t>(mix_count));

    fs::create_directories(args.out);
    const fs::path dir(args.out);
    std::ofstream obs_out(dir / "observational.csv");
    causalmix::samples_to_csv(obs, net.labels, obs_out);
    std::ofstream mix_out(dir / "mixture.csv");
    causalmix::samples_to_csv(mix, net.labels, mix_out);
    write_manifest(dir / "manifest.json", "sample",
                   json{{"samples", args.samples}, {"samples_mix", mix_count}}, seed,
                   {args.net, args.tuples}, {"observational.csv", "mixture.csv"});
    std::cout << "wrote " << args.samples << "+" << mix_count << " rows to " << dir.string()
              << "\n";
    return 0;
}

struct DisentangleArgs {
    std::string mode = "oracle";
    std::string net;
    std::string tuples;
    std::string mixture_table;
    std::string samples;
    std::string mix_samples;
    double epsilon = 0.01;
    double delta = 1e-6;
    std::string out = "report.json";
};

int run_disentangle(const DisentangleArgs& args) {
    json report_json;
    std::vector<std::string> inputs{args.net};

    if (args.mode == "oracle") {
        const auto net =
            causalmix::network_from_json<causalmix::Rational>(causalmix::load_json_file(args.net));
        causalmix::require_valid(net);
        causalmix::DisentangleOptions<causalmix::Rational> opt;
        opt.finite = false;
        causalmix::DisentangleReport<causalmix::Rational> report;
        if (!args.mixture_table.empty()) {
            inputs.push_back(args.mixture_table);
            const auto tj = causalmix::load_json_file(args.mixture_table);
            std::vector<causalmix::Domain> domains;
            for (const auto& k : tj.at("domains")) {
                domains.push_back({k.get<std::int32_t>()});
            }
            std::vector<causalmix::Rational> cells;
            for (const auto& x : tj.at("table")) {
                cells.push_back(causalmix::detail::number_from_json<causalmix::Rational>(x));
            }
            const causalmix::TableOracle<causalmix::Rational> mix(domains, cells);
            const causalmix::NetOracle<causalmix::Rational> p(net);
            report = causalmix::run_disentangle(net, p, mix, opt);
        } else {
            inputs.push_back(args.tuples);
            const auto tuples = causalmix::tupleset_from_json<causalmix::Rational>(
                causalmix::load_json_file(args.tuples));
            causalmix::check_exclusion(tuples, net); // exit 3 on violation
            const causalmix::MixtureOracle<causalmix::Rational> mix(net, tuples);
            const causalmix::NetOracle<causalmix::Rational> p(net);
            report = causalmix::run_disentangle(net, p, mix, opt);
        }
        report_json = causalmix::report_to_json(report);
    } else if (args.mode == "finite") {
        const auto skeleton =
            causalmix::network_from_json<double>(causalmix::load_json_file(args.net));
        std::ifstream obs_in(args.samples);
        if (!obs_in) {
            causalmix::raise(causalmix::ErrorCode::IoError, "cannot open " + args.samples);
        }
        const auto obs =
            causalmix::samples_from_csv(obs_in, causalmix::SampleSet::Source::Observational);
        std::ifstream mix_in(args.mix_samples);
        if (!mix_in) {
            causalmix::raise(causalmix::ErrorCode::IoError, "cannot open " + args.mix_samples);
        }
        const auto mix =
            causalmix::samples_from_csv(mix_in, causalmix::SampleSet::Source::Mixture);
        inputs.push_back(args.samples);
        inputs.push_back(args.mix_samples);

        const auto net_hat = causalmix::mle_cpds(obs, skeleton, args.delta);
        const auto report = causalmix::disentangle_finite(net_hat, mix, args.epsilon);
        report_json = causalmix::report_to_json(report);
    } else {
        throw CLI::ValidationError("--mode", "expected oracle or finite");
    }

    causalmix::write_text_file(args.out, report_json.dump(2) + "\n");
    const fs::path outp(args.out);
    write_manifest(outp.parent_path() / (outp.stem().string() + ".manifest.json"),
                   "disentangle",
                   json{{"mode", args.mode}, {"epsilon", args.epsilon}, {"delta", args.delta}},
                   0, inputs, {args.out});
    std::cout << "recovered " << report_json["tuples"].size() << " tuples -> " << args.out
              << "\n";
    return 0;
}

struct BenchArgs {
    std::string grid = "4x2^10";
    std::int32_t instances = 4;
    std::size_t workers = 4;
    std::string model = "sf";
    std::uint64_t seed = 0;
    double epsilon = 0.01;
    double delta = 1e-6;
    std::string out = "results.csv";
};

int run_bench(const BenchArgs& args) {
    std::vector<std::int32_t> nodes;
    std::vector<std::int64_t> samples;
    parse_grid(args.grid, nodes, samples);
    const std::uint64_t master = effective_seed(args.seed);

    std::vector<causalmix::InstanceConfig> configs;
    for (std::size_t ci = 0; ci < nodes.size() * samples.size(); ++ci) {
        const std::int32_t n = nodes[ci / samples.size()];
        const std::int64_t m = samples[ci % samples.size()];
        for (std::int32_t i = 0; i < args.instances; ++i) {
            causalmix::InstanceConfig cfg;
            cfg.nodes = n;
            cfg.samples = m;
            cfg.model = args.model == "er" ? causalmix::GraphModel::ErdosRenyi
                                           : causalmix::GraphModel::ScaleFree;
            cfg.epsilon = args.epsilon;
            cfg.delta = args.delta;
            cfg.seed = derive_seed(master, ci, static_cast<std::uint64_t>(i));
            configs.push_back(cfg);
        }
    }

    std::signal(SIGINT, handle_sigint);
    std::ofstream out(args.out);
    if (!out) {
        causalmix::raise(causalmix::ErrorCode::IoError, "cannot write " + args.out);
    }
    out << causalmix::bench_csv_header() << "\n";
    // rows are streamed in instance order, so partial results survive Ctrl-C
    causalmix::run_sweep(
        configs, args.workers,
        [&](std::size_t, const causalmix::BenchRow& row) {
            out << causalmix::bench_csv_row(row) << "\n";
            out.flush();
        },
        &g_interrupted);

    const fs::path outp(args.out);
    write_manifest(outp.parent_path() / (outp.stem().string() + ".manifest.json"), "bench",
                   json{{"grid", args.grid},
                        {"instances", args.instances},
                        {"workers", args.workers},
                        {"model", args.model},
                        {"epsilon", args.epsilon},
                        {"delta", args.delta}},
                   master, {}, {args.out});
    if (g_interrupted.load()) {
        std::cerr << "interrupted; partial results flushed to " << args.out << "\n";
        return 130;
    }
    std::cout << "wrote " << configs.size() << " rows to " << args.out << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mixture-of-interventions toolkit: generate causal networks, sample them, "
                 "recover intervention targets, run benchmark sweeps"};
    app.require_subcommand(1);

    GenArgs gen_args;
    auto* gen = app.add_subcommand("gen", "Generate a random network and tuple set");
    gen->add_option("--nodes", gen_args.nodes, "Number of nodes")
        ->required()
        ->check(CLI::PositiveNumber);
    gen->add_option("--cardinality", gen_args.cardinality, "Values per node")
        ->check(CLI::Range(2, 64));
    gen->add_option("--model", gen_args.model, "Graph model: sf or er")
        ->check(CLI::IsMember({"sf", "er"}));
    gen->add_option("--seed", gen_args.seed, "Random seed");
    gen->add_option("--out", gen_args.out, "Output directory");

    SampleArgs sample_args;
    auto* sample = app.add_subcommand("sample", "Draw observational and mixture samples");
    sample->add_option("--net", sample_args.net, "Network JSON")->required();
    sample->add_option("--tuples", sample_args.tuples, "Tuple-set JSON")->required();
    sample->add_option("--samples", sample_args.samples, "Rows per sample set")
        ->check(CLI::PositiveNumber);
    sample->add_option("--samples-mix", sample_args.samples_mix,
                       "Mixture rows (defaults to --samples)")
        ->check(CLI::PositiveNumber);
    sample->add_option("--seed", sample_args.seed, "Random seed");
    sample->add_option("--out", sample_args.out, "Output directory");

    DisentangleArgs dis_args;
    auto* dis = app.add_subcommand("disentangle", "Recover the generating intervention tuples");
    dis->add_option("--mode", dis_args.mode, "oracle or finite")
        ->required()
        ->check(CLI::IsMember({"oracle", "finite"}));
    dis->add_option("--net", dis_args.net, "Network JSON (finite mode: DAG skeleton)")
        ->required();
    dis->add_option("--tuples", dis_args.tuples, "Generating tuple set (oracle self-oracle)");
    dis->add_option("--mixture-table", dis_args.mixture_table,
                    "Explicit joint mixture table JSON (oracle mode, small N)");
    dis->add_option("--samples", dis_args.samples, "Observational sample CSV (finite)");
    dis->add_option("--mix-samples", dis_args.mix_samples, "Mixture sample CSV (finite)");
    dis->add_option("--epsilon", dis_args.epsilon, "Pruning threshold (finite)")
        ->check(CLI::PositiveNumber);
    dis->add_option("--delta", dis_args.delta, "CPT smoothing (finite)")
        ->check(CLI::PositiveNumber);
    dis->add_option("--out", dis_args.out, "Report JSON path");

    BenchArgs bench_args;
    auto* bench = app.add_subcommand("bench", "Run a benchmark sweep to CSV");
    bench->add_option("--grid", bench_args.grid, "Grid spec, e.g. 4,8x2^4..2^10");
    bench->add_option("--instances", bench_args.instances, "Instances per cell")
        ->check(CLI::PositiveNumber);
    bench->add_option("--workers", bench_args.workers, "Worker threads");
    bench->add_option("--model", bench_args.model, "Graph model: sf or er")
        ->check(CLI::IsMember({"sf", "er"}));
    bench->add_option("--seed", bench_args.seed, "Master seed");
    bench->add_option("--epsilon", bench_args.epsilon, "Pruning threshold")
        ->check(CLI::PositiveNumber);
    bench->add_option("--delta", bench_args.delta, "CPT smoothing")
        ->check(CLI::PositiveNumber);
    bench->add_option("--out", bench_args.out, "Results CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (gen->parsed()) return run_gen(gen_args);
        if (sample->parsed()) return run_sample(sample_args);
        if (dis->parsed()) {
            if (dis_args.mode == "oracle" && dis_args.tuples.empty() &&
                dis_args.mixture_table.empty()) {
                std::cerr << "oracle mode needs --tuples or --mixture-table\n";
                return 2;
            }
            if (dis_args.mode == "finite" &&
                (dis_args.samples.empty() || dis_args.mix_samples.empty())) {
                std::cerr << "finite mode needs --samples and --mix-samples\n";
                return 2;
            }
            return run_disentangle(dis_args);
        }
        if (bench->parsed()) return run_bench(bench_args);
    } catch (const causalmix::CausalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return map_error(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
