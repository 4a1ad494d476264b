#ifndef RETROTAB_BENCH_HPP
#define RETROTAB_BENCH_HPP

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "retrotab/engine.hpp"
#include "retrotab/program.hpp"

namespace retrotab {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};
struct BenchmarkError : std::runtime_error {
    explicit BenchmarkError(const std::string& msg) : std::runtime_error(msg) {}
};
struct OracleInapplicableError : std::runtime_error {
    explicit OracleInapplicableError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class DatasetKind : uint8_t { Chain, Cycle, Grid, Pyramid, Tree };

struct DatasetSpec {
    DatasetKind kind = DatasetKind::Chain;
    uint32_t n = 1;
    bool wrap = true;  // rewrite edge(a,b) to edge(f(a),f(b))
};

const char* dataset_kind_name(DatasetKind k);
DatasetKind parse_dataset_kind(const std::string& name);

// Deterministic edge list for a dataset, sorted ascending.
//   chain(n):   i -> i+1
//   cycle(n):   chain plus n -> 1
//   grid(k):    k*k lattice, both directions of every 4-neighbor edge
//   pyramid(h): levels 1..h; (i,j) -> (i+1,j) and (i+1,j+1), row-major ids
//   tree(n):    complete binary tree, i -> 2i and 2i+1
std::vector<std::pair<int64_t, int64_t>> dataset_edges(const DatasetSpec& spec);

void add_edge_facts(Program& prog, const DatasetSpec& spec);

// Reachability answer counts that have a closed form; pyramid and tree
// are computed structurally, grid assumes full mutual reachability.
std::optional<uint64_t> analytic_answer_count(const DatasetSpec& spec);

enum class PathVariant : uint8_t {
    LeftFirst, LeftLast, RightFirst, RightLast, DoubleFirst, DoubleLast
};
const char* path_variant_name(PathVariant v);
// Accepts left_first etc.; bare left/right/double mean the *_first form.
PathVariant parse_path_variant(const std::string& name);
EvalMode parse_eval_mode(const std::string& name);

// The two-clause reachability program in its six clause arrangements:
// left  = path,edge recursion; right = edge,path; double = path,path;
// first/last picks whether the recursive clause precedes the base one.
// Arguments carry the f/1 wrapper when the dataset does.
Program make_path_program(PathVariant v, EvalMode mode, const DatasetSpec& spec);

// Bottom-up least-fixpoint evaluation over the whole program, used as
// the correctness oracle for every engine mode. Derived terms deeper
// than `depth_bound` abort with OracleInapplicableError.
std::vector<TermTuple> seminaive_solve(const Program& prog, const ParsedGoals& query,
                                       uint32_t depth_bound = 64);

// Canonical printed forms, for order-insensitive set comparison.
std::set<std::string> answer_set_strings(const std::vector<TermTuple>& answers,
                                         const SymbolTable& syms);

struct StatsRecord {
    std::string program;
    std::string dataset;
    uint32_t size = 0;
    bool wrapped = true;
    std::string mode;
    uint64_t answers = 0;
    uint64_t answer_trie_nodes = 0;
    uint64_t subgoal_trie_nodes = 0;
    uint64_t generators = 0;
    uint64_t consumers = 0;
    uint64_t loaders = 0;
    uint64_t conversions = 0;
    double elapsed_ms = 0.0;
};

std::string stats_to_json(const StatsRecord& r);

// Runs the query path(f(X),f(Y)) (or its unwrapped form), harvests table
// measurements, and cross-checks the answer count against the analytic
// value; with oracle_check it also compares the full answer set against
// seminaive_solve. Mismatches throw BenchmarkError.
StatsRecord run_benchmark(PathVariant v, const DatasetSpec& spec, EvalMode mode,
                          bool oracle_check = false,
                          const EngineOptions& opts = {});

}  // namespace retrotab

#endif
