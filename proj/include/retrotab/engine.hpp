#ifndef RETROTAB_ENGINE_HPP
#define RETROTAB_ENGINE_HPP

#include <deque>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "retrotab/parser.hpp"
#include "retrotab/program.hpp"
#include "retrotab/tablespace.hpp"

namespace retrotab {

struct EvalError : std::runtime_error {
    explicit EvalError(const std::string& msg) : std::runtime_error(msg) {}
};

struct RunCounters {
    uint64_t generators = 0;   // generator frames created
    uint64_t consumers = 0;    // consumer nodes attached to incomplete frames
    uint64_t loaders = 0;      // nodes that consumed a completed table
    uint64_t conversions = 0;  // generator frames turned into consumers
    uint64_t new_answer_ops = 0;
    uint64_t answers_accepted = 0;
    uint64_t tasks = 0;

    RunCounters operator-(const RunCounters& o) const;
};

struct SolveResult {
    std::vector<TermTuple> answers;  // canonical tuples in insertion order
    std::vector<std::string> var_names;
    RunCounters counters;  // this query only
    double elapsed_ms = 0.0;
};

struct EngineOptions {
    TableSpaceOptions table;
    // Answers a consumer hands its continuation before yielding the
    // scheduler; bounds the run queue on long answer streams.
    size_t delivery_chunk = 4096;
};

// Tabled resolution over pure Horn programs. Generator frames run
// program clauses; consumer nodes replay stored answers and suspend
// until more arrive; completion is detected per dependency SCC once the
// run queue drains. The table space persists across solve() calls, so
// later queries reuse completed tables.
class Engine {
public:
    explicit Engine(Program prog, EngineOptions opts = {});
    ~Engine();

    SolveResult solve(const ParsedGoals& query);
    SolveResult solve_text(std::string_view text);

    TableSpace& tables() { return tables_; }
    const TableSpace& tables() const { return tables_; }
    const Program& program() const { return prog_; }
    const RunCounters& totals() const { return totals_; }
    const EngineOptions& options() const { return opts_; }

    // Frame-id groups in the order completion marked them.
    const std::vector<std::vector<uint32_t>>& completion_batches() const {
        return completion_batches_;
    }

    // True (and marks the SCC complete) when no member of the leader's
    // dependency SCC has runnable work or unconsumed answers; otherwise
    // reschedules the members' consumers that do have some.
    bool check_completion(SubgoalFrame& leader);

    void dump_tables(std::ostream& os) const { tables_.dump(os); }

    // Test/introspection helper: the frame whose canonical call matches
    // the goal text, or null.
    SubgoalFrame* find_frame(std::string_view goal_text);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;

    Program prog_;
    EngineOptions opts_;
    TableSpace tables_;
    RunCounters totals_;
    std::vector<std::vector<uint32_t>> completion_batches_;
    uint32_t query_counter_ = 0;
    bool poisoned_ = false;
};

}  // namespace retrotab

#endif
