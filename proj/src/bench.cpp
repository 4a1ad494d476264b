#include "retrotab/bench.hpp"

#include <algorithm>
#include <sstream>

#include "json.hpp"
#include "retrotab/parser.hpp"

namespace retrotab {

const char* dataset_kind_name(DatasetKind k) {
    switch (k) {
        case DatasetKind::Chain: return "chain";
        case DatasetKind::Cycle: return "cycle";
        case DatasetKind::Grid: return "grid";
        case DatasetKind::Pyramid: return "pyramid";
        case DatasetKind::Tree: return "tree";
    }
    return "?";
}

DatasetKind parse_dataset_kind(const std::string& name) {
    if (name == "chain") return DatasetKind::Chain;
    if (name == "cycle") return DatasetKind::Cycle;
    if (name == "grid") return DatasetKind::Grid;
    if (name == "pyramid") return DatasetKind::Pyramid;
    if (name == "tree") return DatasetKind::Tree;
    throw ConfigError("unknown dataset kind '" + name + "'");
}

std::vector<std::pair<int64_t, int64_t>> dataset_edges(const DatasetSpec& spec) {
    if (spec.n < 1) throw ConfigError("dataset size must be at least 1");
    int64_t n = spec.n;
    std::vector<std::pair<int64_t, int64_t>> edges;
    switch (spec.kind) {
        case DatasetKind::Chain:
            for (int64_t i = 1; i < n; ++i) edges.emplace_back(i, i + 1);
            break;
        case DatasetKind::Cycle:
            for (int64_t i = 1; i < n; ++i) edges.emplace_back(i, i + 1);
            edges.emplace_back(n, 1);
            break;
        case DatasetKind::Grid: {
            int64_t k = n;
            for (int64_t i = 1; i <= k; ++i) {
                for (int64_t j = 1; j <= k; ++j) {
                    int64_t u = (i - 1) * k + j;
                    if (j < k) {
                        edges.emplace_back(u, u + 1);
                        edges.emplace_back(u + 1, u);
                    }
                    if (i < k) {
                        edges.emplace_back(u, u + k);
                        edges.emplace_back(u + k, u);
                    }
                }
            }
            break;
        }
        case DatasetKind::Pyramid: {
            // level i has i nodes; (i,j) is node i*(i-1)/2 + j
            int64_t h = n;
            for (int64_t i = 1; i < h; ++i) {
                for (int64_t j = 1; j <= i; ++j) {
                    int64_t u = i * (i - 1) / 2 + j;
                    int64_t below = i * (i + 1) / 2;
                    edges.emplace_back(u, below + j);
                    edges.emplace_back(u, below + j + 1);
                }
            }
            break;
        }
        case DatasetKind::Tree:
            for (int64_t i = 1; i <= n; ++i) {
                if (2 * i <= n) edges.emplace_back(i, 2 * i);
                if (2 * i + 1 <= n) edges.emplace_back(i, 2 * i + 1);
            }
            break;
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return edges;
}

void add_edge_facts(Program& prog, const DatasetSpec& spec) {
    uint32_t edge_sym = prog.syms->intern("edge");
    uint32_t f_sym = prog.syms->intern("f");
    auto node_term = [&](int64_t v) -> TermPtr {
        TermPtr i = Term::integer(v);
        return spec.wrap ? Term::compound(f_sym, {i}) : i;
    };
    for (auto [a, b] : dataset_edges(spec))
        prog.add_clause(Term::compound(edge_sym, {node_term(a), node_term(b)}), {});
    prog.defined.insert(pred_key(edge_sym, 2));
}

std::optional<uint64_t> analytic_answer_count(const DatasetSpec& spec) {
    uint64_t n = spec.n;
    switch (spec.kind) {
        case DatasetKind::Chain:
            return n * (n - 1) / 2;
        case DatasetKind::Cycle:
            return n * n;
        case DatasetKind::Grid:
            // every node reaches every node (itself included) once k >= 2
            return n >= 2 ? (n * n) * (n * n) : 0;
        case DatasetKind::Pyramid: {
            // from any node on level i: (h-i)(h-i+3)/2 descendants-by-path
            uint64_t total = 0;
            for (uint64_t i = 1; i < n; ++i) {
                uint64_t d = n - i;
                total += i * (d * (d + 3) / 2);
            }
            return total;
        }
        case DatasetKind::Tree: {
            // pairs (ancestor, strict descendant) in the complete tree
            std::vector<uint64_t> size(n + 1, 0);
            uint64_t total = 0;
            for (uint64_t v = n; v >= 1; --v) {
                uint64_t s = 1;
                if (2 * v <= n) s += size[2 * v];
                if (2 * v + 1 <= n) s += size[2 * v + 1];
                size[v] = s;
                total += s - 1;
            }
            return total;
        }
    }
    return std::nullopt;
}

const char* path_variant_name(PathVariant v) {
    switch (v) {
        case PathVariant::LeftFirst: return "left_first";
        case PathVariant::LeftLast: return "left_last";
        case PathVariant::RightFirst: return "right_first";
        case PathVariant::RightLast: return "right_last";
        case PathVariant::DoubleFirst: return "double_first";
        case PathVariant::DoubleLast: return "double_last";
    }
    return "?";
}

PathVariant parse_path_variant(const std::string& name) {
    // accept an optional path_ prefix, e.g. path_left_first
    std::string n = name.rfind("path_", 0) == 0 ? name.substr(5) : name;
    if (n == "left_first" || n == "left") return PathVariant::LeftFirst;
    if (n == "left_last") return PathVariant::LeftLast;
    if (n == "right_first" || n == "right") return PathVariant::RightFirst;
    if (n == "right_last") return PathVariant::RightLast;
    if (n == "double_first" || n == "double") return PathVariant::DoubleFirst;
    if (n == "double_last") return PathVariant::DoubleLast;
    throw ConfigError("unknown program variant '" + name + "'");
}

EvalMode parse_eval_mode(const std::string& name) {
    if (name == "variant") return EvalMode::Variant;
    if (name == "subsumptive") return EvalMode::Subsumptive;
    if (name == "retroactive") return EvalMode::Retroactive;
    throw ConfigError("unknown evaluation mode '" + name + "'");
}

Program make_path_program(PathVariant v, EvalMode mode, const DatasetSpec& spec) {
    const char* rec_wrapped = nullptr;
    const char* rec_plain = nullptr;
    switch (v) {
        case PathVariant::LeftFirst:
        case PathVariant::LeftLast:
            rec_wrapped = "path(f(X),f(Z)) :- path(f(X),f(Y)), edge(f(Y),f(Z)).";
            rec_plain = "path(X,Z) :- path(X,Y), edge(Y,Z).";
            break;
        case PathVariant::RightFirst:
        case PathVariant::RightLast:
            rec_wrapped = "path(f(X),f(Z)) :- edge(f(X),f(Y)), path(f(Y),f(Z)).";
            rec_plain = "path(X,Z) :- edge(X,Y), path(Y,Z).";
            break;
        case PathVariant::DoubleFirst:
        case PathVariant::DoubleLast:
            rec_wrapped = "path(f(X),f(Z)) :- path(f(X),f(Y)), path(f(Y),f(Z)).";
            rec_plain = "path(X,Z) :- path(X,Y), path(Y,Z).";
            break;
    }
    const char* base = spec.wrap ? "path(f(X),f(Z)) :- edge(f(X),f(Z))."
                                 : "path(X,Z) :- edge(X,Z).";
    const char* rec = spec.wrap ? rec_wrapped : rec_plain;
    bool rec_first = v == PathVariant::LeftFirst || v == PathVariant::RightFirst ||
                     v == PathVariant::DoubleFirst;

    std::ostringstream text;
    text << ":- table path/2 as " << eval_mode_name(mode) << ".\n";
    if (rec_first)
        text << rec << "\n" << base << "\n";
    else
        text << base << "\n" << rec << "\n";
    Program prog = parse_program(text.str());
    add_edge_facts(prog, spec);
    return prog;
}

// ---------------------------------------------------------------------
// Bottom-up oracle
// ---------------------------------------------------------------------

namespace {

struct Relation {
    std::vector<TermTuple> tuples;  // canonical
    std::unordered_set<std::string> keys;
    // first-argument index: printed ground first arg -> tuple indices
    std::unordered_map<std::string, std::vector<size_t>> by_first;
    std::vector<size_t> open_first;

    bool insert(TermTuple t, const SymbolTable& syms) {
        std::string key = write_tuple(t, syms);
        if (!keys.insert(std::move(key)).second) return false;
        size_t idx = tuples.size();
        if (!t.empty() && t[0]->ground())
            by_first[write_term(t[0], syms)].push_back(idx);
        else
            open_first.push_back(idx);
        tuples.push_back(std::move(t));
        return true;
    }

    std::vector<size_t> candidates(const TermPtr& first, const SymbolTable& syms) const {
        if (!first || !first->ground()) {
            std::vector<size_t> all(tuples.size());
            for (size_t i = 0; i < all.size(); ++i) all[i] = i;
            return all;
        }
        std::vector<size_t> out = open_first;
        auto it = by_first.find(write_term(first, syms));
        if (it != by_first.end())
            out.insert(out.end(), it->second.begin(), it->second.end());
        std::sort(out.begin(), out.end());
        return out;
    }
};

struct BottomUp {
    const Program& prog;
    uint32_t depth_bound;
    std::unordered_map<uint64_t, Relation> rels;

    void check_depth(const TermTuple& t) {
        for (const auto& x : t)
            if (term_depth(x) > depth_bound)
                throw OracleInapplicableError("derived term exceeds depth bound");
    }

    bool derive(const TermTuple& head_args, uint64_t key) {
        TermTuple canon = canonicalize_tuple(head_args);
        check_depth(canon);
        return rels[key].insert(std::move(canon), *prog.syms);
    }

    // Enumerate instantiations of goals[i..] against current relations;
    // on full match hand the bound head args to `emit`.
    template <typename Emit>
    void join(const TermTuple& goals, size_t i, const TermTuple& head_args,
              uint32_t next_var, const Emit& emit) {
        if (i == goals.size()) {
            emit(head_args);
            return;
        }
        const TermPtr& g = goals[i];
        auto rit = rels.find(pred_key(g->symbol(), g->arity()));
        if (rit == rels.end()) return;
        const Relation& rel = rit->second;
        const TermPtr first = g->arity() >= 1 ? g->args()[0] : nullptr;
        for (size_t idx : rel.candidates(first, *prog.syms)) {
            const TermTuple& stored = rel.tuples[idx];
            TermTuple fresh = rename_tuple(stored, next_var);
            auto sigma = unify_tuple(g->args(), fresh);
            if (!sigma) continue;
            TermTuple rest_head = apply_tuple(*sigma, head_args);
            TermTuple rest_goals = goals;
            for (size_t j = i + 1; j < rest_goals.size(); ++j)
                rest_goals[j] = apply_subst(*sigma, rest_goals[j]);
            join(rest_goals, i + 1, rest_head, next_var + tuple_var_ceiling(stored), emit);
        }
    }

    void run() {
        // facts first
        for (const auto& c : prog.clauses)
            if (c.body.empty())
                derive(c.head->args(), pred_key(c.head->symbol(), c.head->arity()));
        // naive rounds to fixpoint
        for (;;) {
            bool changed = false;
            for (const auto& c : prog.clauses) {
                if (c.body.empty()) continue;
                uint64_t key = pred_key(c.head->symbol(), c.head->arity());
                join(c.body, 0, c.head->args(), c.nvars, [&](const TermTuple& bound) {
                    changed |= derive(bound, key);
                });
            }
            if (!changed) break;
        }
    }
};

}  // namespace

std::vector<TermTuple> seminaive_solve(const Program& prog, const ParsedGoals& query,
                                       uint32_t depth_bound) {
    BottomUp bu{prog, depth_bound, {}};
    bu.run();

    uint32_t nvars = tuple_var_ceiling(query.goals);
    TermTuple var_tuple;
    var_tuple.reserve(nvars);
    for (uint32_t i = 0; i < nvars; ++i) var_tuple.push_back(Term::var(i));

    std::vector<TermTuple> out;
    std::unordered_set<std::string> seen;
    bu.join(query.goals, 0, var_tuple, nvars, [&](const TermTuple& bound) {
        TermTuple canon = canonicalize_tuple(bound);
        if (seen.insert(write_tuple(canon, *prog.syms)).second) out.push_back(std::move(canon));
    });
    return out;
}

std::set<std::string> answer_set_strings(const std::vector<TermTuple>& answers,
                                         const SymbolTable& syms) {
    std::set<std::string> out;
    for (const auto& a : answers) out.insert(write_tuple(a, syms));
    return out;
}

std::string stats_to_json(const StatsRecord& r) {
    nlohmann::json j;
    j["program"] = r.program;
    j["dataset"] = r.dataset;
    j["size"] = r.size;
    j["wrapped"] = r.wrapped;
    j["mode"] = r.mode;
    j["answers"] = r.answers;
    j["answer_trie_nodes"] = r.answer_trie_nodes;
    j["subgoal_trie_nodes"] = r.subgoal_trie_nodes;
    j["generators"] = r.generators;
    j["consumers"] = r.consumers;
    j["loaders"] = r.loaders;
    j["conversions"] = r.conversions;
    j["elapsed_ms"] = r.elapsed_ms;
    return j.dump();
}

StatsRecord run_benchmark(PathVariant v, const DatasetSpec& spec, EvalMode mode,
                          bool oracle_check, const EngineOptions& opts) {
    Program prog = make_path_program(v, mode, spec);
    ParsedGoals goal = parse_goals(spec.wrap ? "path(f(X),f(Y))" : "path(X,Y)", *prog.syms);
    Program oracle_prog;
    if (oracle_check) oracle_prog = make_path_program(v, mode, spec);

    Engine eng(std::move(prog), opts);
    SolveResult res = eng.solve(goal);

    StatsRecord rec;
    rec.program = path_variant_name(v);
    rec.dataset = dataset_kind_name(spec.kind);
    rec.size = spec.n;
    rec.wrapped = spec.wrap;
    rec.mode = eval_mode_name(mode);
    rec.answers = res.answers.size();
    rec.answer_trie_nodes = eng.tables().answer_trie_nodes();
    rec.subgoal_trie_nodes = eng.tables().subgoal_trie_nodes();
    rec.generators = res.counters.generators;
    rec.consumers = res.counters.consumers;
    rec.loaders = res.counters.loaders;
    rec.conversions = res.counters.conversions;
    rec.elapsed_ms = res.elapsed_ms;

    if (auto expect = analytic_answer_count(spec)) {
        if (rec.answers != *expect)
            throw BenchmarkError("answer count " + std::to_string(rec.answers) +
                                 " does not match analytic value " + std::to_string(*expect) +
                                 " for " + rec.program + "/" + rec.dataset + "(" +
                                 std::to_string(rec.size) + ") mode " + rec.mode);
    }
    if (oracle_check) {
        ParsedGoals ogoal =
            parse_goals(spec.wrap ? "path(f(X),f(Y))" : "path(X,Y)", *oracle_prog.syms);
        auto expected = seminaive_solve(oracle_prog, ogoal);
        auto got = answer_set_strings(res.answers, *eng.program().syms);
        auto want = answer_set_strings(expected, *oracle_prog.syms);
        if (got != want)
            throw BenchmarkError("answer set differs from bottom-up oracle for " +
                                 rec.program + "/" + rec.dataset + "(" +
                                 std::to_string(rec.size) + ") mode " + rec.mode);
    }
    return rec;
}

}  // namespace retrotab
