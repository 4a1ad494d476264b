#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>

#include "CLI11.hpp"
#include "json.hpp"
#include "retrotab/bench.hpp"
#include "retrotab/engine.hpp"
#include "retrotab/parser.hpp"

namespace {

using namespace retrotab;

// Exit codes, one per failure class.
constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitFileNotFound = 2;
constexpr int kExitParseError = 3;
constexpr int kExitOracleMismatch = 4;
constexpr int kExitConfig = 5;

struct Options {
    std::string program;
    std::string dataset;
    std::string size;  // a number, or "desk" with bench --all
    bool no_wrap = false;
    std::string mode = "variant";
    std::string goal;
    std::string format = "text";
    bool oracle = false;
    bool all = false;

    uint32_t numeric_size() const {
        if (size.empty()) return 0;
        char* end = nullptr;
        long n = std::strtol(size.c_str(), &end, 10);
        if (end == size.c_str() || *end != '\0' || n < 1)
            throw ConfigError("--size must be a positive integer (got '" + size + "')");
        return static_cast<uint32_t>(n);
    }
};

uint32_t env_threshold(const char* name, uint32_t fallback) {
    const char* v = std::getenv(name);
    if (!v || !*v) return fallback;
    char* end = nullptr;
    long n = std::strtol(v, &end, 10);
    if (end == v || n < 1) throw ConfigError(std::string(name) + " must be a positive integer");
    return static_cast<uint32_t>(n);
}

EngineOptions engine_options() {
    EngineOptions opts;
    opts.table.pending_threshold = env_threshold("RETROTAB_PENDING_THRESHOLD", 8);
    opts.table.trie_hash_threshold = env_threshold("RETROTAB_TRIE_HASH_THRESHOLD", 8);
    return opts;
}

bool is_builtin_variant(const std::string& name) {
    try {
        parse_path_variant(name);
        return true;
    } catch (const ConfigError&) {
        return false;
    }
}

std::optional<DatasetSpec> dataset_spec(const Options& o) {
    if (o.dataset.empty()) return std::nullopt;
    uint32_t n = o.numeric_size();
    if (n == 0) throw ConfigError("--dataset requires --size");
    return DatasetSpec{parse_dataset_kind(o.dataset), n, !o.no_wrap};
}

Program load_program(const Options& o) {
    if (is_builtin_variant(o.program)) {
        auto spec = dataset_spec(o);
        if (!spec) throw ConfigError("builtin programs need --dataset and --size");
        return make_path_program(parse_path_variant(o.program), parse_eval_mode(o.mode), *spec);
    }
    std::ifstream in(o.program);
    if (!in)
        throw std::system_error(ENOENT, std::generic_category(),
                                "cannot open program file '" + o.program + "'");
    std::ostringstream text;
    text << in.rdbuf();
    Program prog = parse_program(text.str());
    if (auto spec = dataset_spec(o)) add_edge_facts(prog, *spec);
    // An explicit --mode overrides every tabling declaration in the file.
    if (!o.mode.empty()) {
        EvalMode m = parse_eval_mode(o.mode);
        for (auto& [key, mode] : prog.tabled) mode = m;
    }
    return prog;
}

std::string default_goal(const Options& o) {
    if (!o.goal.empty()) return o.goal;
    if (is_builtin_variant(o.program)) return o.no_wrap ? "path(X,Y)" : "path(f(X),f(Y))";
    throw ConfigError("--goal is required");
}

int cmd_query(const Options& o) {
    Program prog = load_program(o);
    ParsedGoals query = parse_goals(default_goal(o), *prog.syms);
    Program oracle_prog;
    ParsedGoals oracle_query;
    if (o.oracle) {
        oracle_prog = load_program(o);
        oracle_query = parse_goals(default_goal(o), *oracle_prog.syms);
    }

    Engine eng(std::move(prog), engine_options());
    SolveResult res = eng.solve(query);
    const SymbolTable& syms = *eng.program().syms;

    for (const auto& tuple : res.answers) {
        Subst s;
        for (size_t i = 0; i < tuple.size(); ++i) s.bind(static_cast<uint32_t>(i), tuple[i]);
        if (o.format == "jsonl") {
            nlohmann::json j;
            for (size_t i = 0; i < tuple.size(); ++i) {
                std::string key = res.var_names[i];
                if (key == "_") key = "_" + std::to_string(i);  // anonymous
                j[key] = write_term(tuple[i], syms);
            }
            std::cout << j.dump() << "\n";
        } else {
            std::string sep;
            for (const auto& g : query.goals) {
                std::cout << sep << write_term(apply_subst(s, g), syms);
                sep = ", ";
            }
            std::cout << "\n";
        }
    }

    if (o.oracle) {
        auto expected = seminaive_solve(oracle_prog, oracle_query);
        if (answer_set_strings(res.answers, syms) !=
            answer_set_strings(expected, *oracle_prog.syms)) {
            std::cerr << "oracle mismatch: engine returned " << res.answers.size()
                      << " answers, bottom-up evaluation " << expected.size() << "\n";
            return kExitOracleMismatch;
        }
    }
    return kExitOk;
}

int cmd_bench(const Options& o) {
    EngineOptions opts = engine_options();
    if (o.all) {
        if (!o.size.empty() && o.size != "desk")
            throw ConfigError("bench --all runs the desk-scale sizes; use --size desk");
        const std::pair<DatasetKind, uint32_t> desk[] = {
            {DatasetKind::Chain, 64},   {DatasetKind::Cycle, 64}, {DatasetKind::Grid, 8},
            {DatasetKind::Pyramid, 16}, {DatasetKind::Tree, 255},
        };
        const PathVariant variants[] = {
            PathVariant::LeftFirst, PathVariant::LeftLast,    PathVariant::RightFirst,
            PathVariant::RightLast, PathVariant::DoubleFirst, PathVariant::DoubleLast,
        };
        const EvalMode modes[] = {EvalMode::Variant, EvalMode::Subsumptive,
                                  EvalMode::Retroactive};
        for (PathVariant v : variants)
            for (auto [kind, n] : desk)
                for (EvalMode m : modes) {
                    StatsRecord rec = run_benchmark(v, {kind, n, true}, m, o.oracle, opts);
                    std::cout << stats_to_json(rec) << "\n";
                }
        return kExitOk;
    }
    if (o.program.empty() || o.dataset.empty() || o.numeric_size() == 0)
        throw ConfigError("bench needs --all or --program/--dataset/--size");
    DatasetSpec spec{parse_dataset_kind(o.dataset), o.numeric_size(), !o.no_wrap};
    StatsRecord rec = run_benchmark(parse_path_variant(o.program), spec,
                                    parse_eval_mode(o.mode), o.oracle, opts);
    std::cout << stats_to_json(rec) << "\n";
    return kExitOk;
}

int cmd_dump(const Options& o) {
    Program prog = load_program(o);
    ParsedGoals query = parse_goals(default_goal(o), *prog.syms);
    Engine eng(std::move(prog), engine_options());
    eng.solve(query);
    eng.dump_tables(std::cout);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tabled logic-program evaluation with variant, subsumptive and "
                 "retroactive table organizations"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub, bool need_goal) {
        sub->add_option("--program", o.program,
                        "builtin variant (left_first, right_last, ...) or a program file");
        sub->add_option("--dataset", o.dataset, "chain|cycle|grid|pyramid|tree");
        sub->add_option("--size", o.size, "dataset size parameter");
        sub->add_flag("--no-wrap", o.no_wrap, "skip the f/1 term transformation");
        sub->add_option("--mode", o.mode, "variant|subsumptive|retroactive")
            ->default_val("variant");
        if (need_goal) sub->add_option("--goal", o.goal, "query goal, e.g. \"path(f(X),f(Y))\"");
        sub->add_flag("--oracle", o.oracle, "verify answers against bottom-up evaluation");
    };

    CLI::App* query = app.add_subcommand("query", "run a query and print its answers");
    add_common(query, true);
    query->add_option("--format", o.format, "text|jsonl")->default_val("text");

    CLI::App* bench = app.add_subcommand("bench", "run benchmarks, one JSON record per line");
    add_common(bench, false);
    bench->add_flag("--all", o.all, "desk-scale matrix: 6 programs x 5 datasets x 3 modes");

    CLI::App* dump = app.add_subcommand("dump", "run a query, then print the table space");
    add_common(dump, true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (query->parsed()) return cmd_query(o);
        if (bench->parsed()) return cmd_bench(o);
        if (dump->parsed()) return cmd_dump(o);
        return kExitConfig;
    } catch (const std::system_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFileNotFound;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitParseError;
    } catch (const BenchmarkError& e) {
        std::cerr << "benchmark failure: " << e.what() << "\n";
        return kExitOracleMismatch;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
}
