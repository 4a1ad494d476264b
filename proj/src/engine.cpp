#include "retrotab/engine.hpp"

#include <algorithm>
#include <cassert>
#include <chrono>
#include <unordered_map>

namespace retrotab {

RunCounters RunCounters::operator-(const RunCounters& o) const {
    RunCounters r;
    r.generators = generators - o.generators;
    r.consumers = consumers - o.consumers;
    r.loaders = loaders - o.loaders;
    r.conversions = conversions - o.conversions;
    r.new_answer_ops = new_answer_ops - o.new_answer_ops;
    r.answers_accepted = answers_accepted - o.answers_accepted;
    r.tasks = tasks - o.tasks;
    return r;
}

namespace {

// A resolution task: the remaining goals of one derivation branch, with
// all bindings applied eagerly, plus the answer tuple under construction
// for the owning generator frame.
struct Task {
    TermTuple goals;
    TermTuple answer_args;
    SubgoalFrame* owner = nullptr;
    uint32_t owner_generation = 0;
    uint32_t next_var = 0;
};

enum class NodeStatus : uint8_t { Queued, Suspended, Retired };

// One tabled-call occurrence: replays the source frame's answer return
// list into its continuation, with a private cursor.
struct ConsumerNode {
    SubgoalFrame* source = nullptr;
    TermPtr goal;  // the call instance
    TermTuple cont_goals;
    TermTuple answer_args;
    SubgoalFrame* owner = nullptr;
    uint32_t owner_generation = 0;
    uint32_t next_var = 0;
    size_t cursor = 0;
    NodeStatus status = NodeStatus::Queued;
};

struct QItem {
    Task* task = nullptr;
    ConsumerNode* node = nullptr;
};

// Clause lookup per predicate: clauses whose head has a ground first
// argument are reachable by exact lookup, the rest are scanned. Order
// numbers keep program clause order across the two groups.
struct PredClauses {
    std::vector<std::pair<size_t, size_t>> open;  // (seq, clause index)
    std::unordered_map<TupleKey, std::vector<std::pair<size_t, size_t>>, TupleKeyHash>
        ground_first;
    std::vector<size_t> all;  // clause indices in order
};

TupleKey single_key(const TermPtr& t) {
    return TupleKey::of(std::span<const TermPtr>(&t, 1));
}

// Tarjan's algorithm, iterative. Components come out dependencies-first:
// each emitted component only points at earlier ones.
std::vector<std::vector<int>> scc_components(const std::vector<std::vector<int>>& adj) {
    int n = static_cast<int>(adj.size());
    std::vector<int> index(n, -1), low(n, 0);
    std::vector<bool> on_stack(n, false);
    std::vector<int> stack;
    std::vector<std::vector<int>> comps;
    int counter = 0;

    struct Frame {
        int v;
        size_t child = 0;
    };
    for (int root = 0; root < n; ++root) {
        if (index[root] != -1) continue;
        std::vector<Frame> call{{root, 0}};
        index[root] = low[root] = counter++;
        stack.push_back(root);
        on_stack[root] = true;
        while (!call.empty()) {
            Frame& f = call.back();
            if (f.child < adj[f.v].size()) {
                int w = adj[f.v][f.child++];
                if (index[w] == -1) {
                    index[w] = low[w] = counter++;
                    stack.push_back(w);
                    on_stack[w] = true;
                    call.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[f.v] = std::min(low[f.v], index[w]);
                }
            } else {
                if (low[f.v] == index[f.v]) {
                    std::vector<int> comp;
                    for (;;) {
                        int w = stack.back();
                        stack.pop_back();
                        on_stack[w] = false;
                        comp.push_back(w);
                        if (w == f.v) break;
                    }
                    std::sort(comp.begin(), comp.end());
                    comps.push_back(std::move(comp));
                }
                int v = f.v;
                call.pop_back();
                if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
            }
        }
    }
    return comps;
}

}  // namespace

struct Engine::Impl {
    Engine& eng;

    std::unordered_map<uint64_t, PredClauses> clause_index;

    struct FrameSched {
        uint32_t generation = 0;
        int64_t live_work = 0;
        std::vector<ConsumerNode*> waiters;  // suspended on this frame's arl
        // suspended on this generator's answer trie, with the trie
        // timestamp at suspension (subsumptive consumers)
        std::vector<std::pair<ConsumerNode*, uint64_t>> ts_waiters;
    };
    struct EntrySched {
        // suspended on the predicate's shared answer trie (retroactive)
        std::vector<std::pair<ConsumerNode*, uint64_t>> ts_waiters;
    };
    std::vector<FrameSched> fsched;
    std::vector<EntrySched> esched;

    std::deque<QItem> queue;
    std::vector<std::unique_ptr<ConsumerNode>> nodes;  // one solve's nodes

    explicit Impl(Engine& e) : eng(e) {}
    ~Impl() { discard_queue(); }

    // Queued tasks are owned by the queue once pushed; on an aborted
    // solve they must be reclaimed explicitly.
    void discard_queue() {
        for (QItem& q : queue) delete q.task;
        queue.clear();
    }

    void reset_after_failure() {
        discard_queue();
        nodes.clear();
        for (auto& s : fsched) {
            s.waiters.clear();
            s.ts_waiters.clear();
            s.live_work = 0;
        }
        for (auto& s : esched) s.ts_waiters.clear();
    }

    FrameSched& fs(const SubgoalFrame& f) {
        if (f.id >= fsched.size()) fsched.resize(f.id + 1);
        return fsched[f.id];
    }
    EntrySched& es(const TableEntry& e) {
        if (e.id >= esched.size()) esched.resize(e.id + 1);
        return esched[e.id];
    }

    bool stale(const Task& t) { return t.owner_generation != fs(*t.owner).generation; }
    bool stale(const ConsumerNode& n) { return n.owner_generation != fs(*n.owner).generation; }

    // --- clause indexing -------------------------------------------------

    void index_clause(size_t clause_idx) {
        const Clause& c = eng.prog_.clauses[clause_idx];
        uint64_t key = pred_key(c.head->symbol(), c.head->arity());
        PredClauses& pc = clause_index[key];
        size_t seq = pc.all.size();
        pc.all.push_back(clause_idx);
        if (c.head->arity() >= 1 && c.head->args()[0]->ground()) {
            pc.ground_first[single_key(c.head->args()[0])].emplace_back(seq, clause_idx);
        } else {
            pc.open.emplace_back(seq, clause_idx);
        }
    }

    // Clause indices matching the goal, in program order.
    std::vector<size_t> candidates(const TermPtr& goal) {
        auto it = clause_index.find(pred_key(goal->symbol(), goal->arity()));
        if (it == clause_index.end()) return {};
        PredClauses& pc = it->second;
        if (goal->arity() == 0 || !goal->args()[0]->ground()) return pc.all;
        std::vector<std::pair<size_t, size_t>> merged = pc.open;
        auto git = pc.ground_first.find(single_key(goal->args()[0]));
        if (git != pc.ground_first.end())
            merged.insert(merged.end(), git->second.begin(), git->second.end());
        std::sort(merged.begin(), merged.end());
        std::vector<size_t> out;
        out.reserve(merged.size());
        for (auto& [seq, idx] : merged) out.push_back(idx);
        return out;
    }

    // --- queue -----------------------------------------------------------

    void push_task(std::unique_ptr<Task> t) {
        fs(*t->owner).live_work++;
        eng.totals_.tasks++;
        queue.push_back({t.release(), nullptr});
    }

    void push_node(ConsumerNode* n) {
        n->status = NodeStatus::Queued;
        fs(*n->owner).live_work++;
        queue.push_back({nullptr, n});
    }

    void wake(ConsumerNode* n) {
        if (n->status != NodeStatus::Suspended) return;
        if (stale(*n)) {
            n->status = NodeStatus::Retired;
            return;
        }
        push_node(n);
    }

    void wake_frame_waiters(SubgoalFrame& f) {
        auto list = std::move(fs(f).waiters);
        fs(f).waiters.clear();
        for (ConsumerNode* n : list) wake(n);
    }

    // --- resolution ------------------------------------------------------

    void run_task(Task& t) {
        if (t.goals.empty()) {
            new_answer(t);
            return;
        }
        const TermPtr goal = t.goals.front();
        if (!goal->is_atom() && !goal->is_compound())
            throw EvalError("goal is not callable");
        uint64_t key = pred_key(goal->symbol(), goal->arity());
        if (eng.prog_.tabled.count(key)) {
            tabled_call(t, goal);
            return;
        }
        if (!eng.prog_.is_defined(goal->symbol(), goal->arity()))
            throw EvalError("undefined predicate " +
                            eng.prog_.syms->name(goal->symbol()) + "/" +
                            std::to_string(goal->arity()));
        for (size_t ci : candidates(goal)) {
            const Clause& c = eng.prog_.clauses[ci];
            uint32_t off = t.next_var;
            TermTuple head_args = rename_tuple(c.head->args(), off);
            auto sigma = unify_tuple(goal->args(), head_args);
            if (!sigma) continue;
            auto child = std::make_unique<Task>();
            child->goals.reserve(c.body.size() + t.goals.size() - 1);
            for (const auto& b : c.body) child->goals.push_back(apply_subst(*sigma, rename(b, off)));
            for (size_t i = 1; i < t.goals.size(); ++i)
                child->goals.push_back(apply_subst(*sigma, t.goals[i]));
            child->answer_args = apply_tuple(*sigma, t.answer_args);
            child->owner = t.owner;
            child->owner_generation = t.owner_generation;
            child->next_var = off + c.nvars;
            push_task(std::move(child));
        }
    }

    void new_answer(Task& t) {
        SubgoalFrame* f = t.owner;
        if (f->state != FrameState::Generator) return;
        bool count = !f->entry->synthetic;
        if (count) eng.totals_.new_answer_ops++;
        auto leaf = eng.tables_.insert_answer(t.answer_args, *f);
        if (leaf) {
            if (count) eng.totals_.answers_accepted++;
            wake_frame_waiters(*f);
        }
    }

    void tabled_call(Task& t, const TermPtr& goal) {
        TableEntry* e = eng.tables_.find(goal->symbol(), goal->arity());
        assert(e);
        TermTuple ccall = canonicalize_tuple(goal->args());
        CallOutcome outcome = eng.tables_.subgoal_call_lookup(*e, ccall);
        SubgoalFrame* src = outcome.frame;
        switch (outcome.kind) {
            case CallOutcome::Kind::VariantFound:
                break;
            case CallOutcome::Kind::SubsumingFound: {
                SubgoalFrame& c = eng.tables_.create_consumer_frame(*e, ccall, *outcome.frame);
                if (c.state == FrameState::Loader) complete_loader(c);
                src = &c;
                break;
            }
            case CallOutcome::Kind::NewGenerator: {
                SubgoalFrame& f = *outcome.frame;
                if (!e->synthetic) eng.totals_.generators++;
                for (SubgoalFrame* r : outcome.subsumed) convert(*r, f);
                if (e->mode == EvalMode::Retroactive) answer_reuse(f);
                spawn_clause_tasks(f);
                break;
            }
        }
        attach_node(t, goal, *src);
    }

    void spawn_clause_tasks(SubgoalFrame& fr) {
        uint32_t ceiling = tuple_var_ceiling(fr.call);
        TermPtr call_probe = fr.call.empty() ? Term::atom(fr.entry->pred_sym)
                                             : Term::compound(fr.entry->pred_sym, fr.call);
        for (size_t ci : candidates(call_probe)) {
            const Clause& c = eng.prog_.clauses[ci];
            TermTuple head_args = rename_tuple(c.head->args(), ceiling);
            auto sigma = unify_tuple(fr.call, head_args);
            if (!sigma) continue;
            auto task = std::make_unique<Task>();
            task->goals.reserve(c.body.size());
            for (const auto& b : c.body) task->goals.push_back(apply_subst(*sigma, rename(b, ceiling)));
            task->answer_args = apply_tuple(*sigma, fr.tmpl);
            task->owner = &fr;
            task->owner_generation = fs(fr).generation;
            task->next_var = ceiling + c.nvars;
            push_task(std::move(task));
        }
    }

    // Feed answers already stored in the shared trie through the
    // insertion machinery, so a fresh generator reports them before its
    // clauses run.
    void answer_reuse(SubgoalFrame& fr) {
        Trie* shared = fr.entry->shared_trie.get();
        if (!shared || shared->predicate_ts() == 0) return;
        bool count = !fr.entry->synthetic;
        for (AnswerLeaf l : shared->collect_relevant(fr.tmpl, 0)) {
            if (count) eng.totals_.new_answer_ops++;
            TermTuple decoded = shared->decode(l);
            if (eng.tables_.retroactive_insert_answer(decoded, fr) && count)
                eng.totals_.answers_accepted++;
        }
    }

    // Retire everything the frame's derivation owns, convert it, and let
    // its readers pick up the pending answers that moved to the arl.
    void convert(SubgoalFrame& r, SubgoalFrame& general) {
        if (r.state != FrameState::Generator) return;
        eng.totals_.conversions++;
        fs(r).generation++;
        eng.tables_.convert_generator_to_consumer(r, general);
        if (r.state == FrameState::Loader) complete_loader(r);
        wake_frame_waiters(r);
    }

    // A loader's answer set is fixed: pull everything once and seal it.
    void complete_loader(SubgoalFrame& fr) {
        eng.tables_.extend_arl(fr);
        fr.state = FrameState::Complete;
    }

    void attach_node(Task& t, const TermPtr& goal, SubgoalFrame& src) {
        auto n = std::make_unique<ConsumerNode>();
        n->source = &src;
        n->goal = goal;
        n->cont_goals.assign(t.goals.begin() + 1, t.goals.end());
        n->answer_args = t.answer_args;
        n->owner = t.owner;
        n->owner_generation = t.owner_generation;
        n->next_var = t.next_var;
        if (!src.entry->synthetic) {
            if (src.state == FrameState::Complete)
                eng.totals_.loaders++;
            else
                eng.totals_.consumers++;
        }
        ConsumerNode* raw = n.get();
        nodes.push_back(std::move(n));
        push_node(raw);
    }

    void deliver(ConsumerNode& n, AnswerLeaf leaf) {
        TermTuple full = eng.tables_.answer_terms(*n.source, leaf);
        uint32_t off = n.next_var;
        TermTuple fresh = rename_tuple(full, off);
        auto sigma = unify_tuple(n.goal->args(), fresh);
        if (!sigma) return;
        auto child = std::make_unique<Task>();
        child->goals = apply_tuple(*sigma, n.cont_goals);
        child->answer_args = apply_tuple(*sigma, n.answer_args);
        child->owner = n.owner;
        child->owner_generation = n.owner_generation;
        child->next_var = off + tuple_var_ceiling(full);
        push_task(std::move(child));
    }

    void run_node(ConsumerNode& n) {
        SubgoalFrame* src = n.source;
        size_t budget = eng.opts_.delivery_chunk;
        for (;;) {
            while (n.cursor < src->arl.size() && budget > 0) {
                deliver(n, src->arl[n.cursor++]);
                --budget;
            }
            if (n.cursor < src->arl.size()) {
                push_node(&n);  // out of budget; yield
                return;
            }
            if (src->state == FrameState::Consumer || src->state == FrameState::Loader) {
                if (eng.tables_.extend_arl(*src) > 0) continue;
            }
            if (src->state == FrameState::Complete) {
                n.status = NodeStatus::Retired;
                return;
            }
            suspend(n);
            return;
        }
    }

    void suspend(ConsumerNode& n) {
        n.status = NodeStatus::Suspended;
        SubgoalFrame* src = n.source;
        if (src->state == FrameState::Generator) {
            fs(*src).waiters.push_back(&n);
            return;
        }
        // Consumer frames grow when their source trie does; those checks
        // are batched at quiescence.
        if (src->entry->mode == EvalMode::Retroactive) {
            es(*src->entry).ts_waiters.emplace_back(&n, src->entry->shared_trie->predicate_ts());
        } else {
            SubgoalFrame* g = src->general;
            fs(*g).ts_waiters.emplace_back(&n, g->own_trie->predicate_ts());
        }
    }

    // --- quiescence ------------------------------------------------------

    size_t lazy_wake_pass() {
        size_t woken = 0;
        for (const auto& entry : eng.tables_.entries()) {
            if (entry->id >= esched.size()) continue;
            auto& list = esched[entry->id].ts_waiters;
            if (list.empty()) continue;
            uint64_t now = entry->shared_trie ? entry->shared_trie->predicate_ts() : 0;
            std::vector<std::pair<ConsumerNode*, uint64_t>> keep;
            for (auto& [n, ts] : list) {
                if (n->status != NodeStatus::Suspended || stale(*n)) continue;
                if (now > ts) {
                    wake(n);
                    ++woken;
                } else {
                    keep.push_back({n, ts});
                }
            }
            list = std::move(keep);
        }
        for (const auto& entry : eng.tables_.entries()) {
            for (const auto& frp : entry->frames) {
                if (frp->id >= fsched.size()) continue;
                auto& list = fsched[frp->id].ts_waiters;
                if (list.empty()) continue;
                uint64_t now = frp->own_trie ? frp->own_trie->predicate_ts() : 0;
                std::vector<std::pair<ConsumerNode*, uint64_t>> keep;
                for (auto& [n, ts] : list) {
                    if (n->status != NodeStatus::Suspended || stale(*n)) continue;
                    if (now > ts) {
                        wake(n);
                        ++woken;
                    } else {
                        keep.push_back({n, ts});
                    }
                }
                list = std::move(keep);
            }
        }
        return woken;
    }

    std::vector<SubgoalFrame*> incomplete_frames() {
        std::vector<SubgoalFrame*> out;
        for (const auto& entry : eng.tables_.entries())
            for (const auto& fr : entry->frames)
                if (fr->state != FrameState::Complete) out.push_back(fr.get());
        std::sort(out.begin(), out.end(),
                  [](auto* a, auto* b) { return a->id < b->id; });
        return out;
    }

    // Dependency edges among incomplete frames: a frame waits on the
    // frames its suspended consumers read from, and a consumer frame
    // waits on its general.
    std::vector<std::vector<int>> dependency_graph(const std::vector<SubgoalFrame*>& inc) {
        std::unordered_map<const SubgoalFrame*, int> pos;
        for (size_t i = 0; i < inc.size(); ++i) pos[inc[i]] = static_cast<int>(i);
        std::vector<std::vector<int>> adj(inc.size());
        auto add_edge = [&](const SubgoalFrame* from, const SubgoalFrame* to) {
            auto fi = pos.find(from);
            auto ti = pos.find(to);
            if (fi == pos.end() || ti == pos.end() || fi->second == ti->second) return;
            adj[fi->second].push_back(ti->second);
        };
        for (const auto& np : nodes) {
            const ConsumerNode& n = *np;
            if (n.status != NodeStatus::Suspended || stale(n)) continue;
            add_edge(n.owner, n.source);
        }
        for (const SubgoalFrame* fr : inc)
            if ((fr->state == FrameState::Consumer || fr->state == FrameState::Loader) &&
                fr->general)
                add_edge(fr, fr->general);
        for (auto& v : adj) {
            std::sort(v.begin(), v.end());
            v.erase(std::unique(v.begin(), v.end()), v.end());
        }
        return adj;
    }

    // At a global fixpoint every remaining frame is finished; mark them
    // complete one dependency SCC at a time, innermost first.
    void completion_sweep() {
        std::vector<SubgoalFrame*> inc = incomplete_frames();
        if (inc.empty()) return;
        auto comps = scc_components(dependency_graph(inc));
        for (const auto& comp : comps) {
            std::vector<uint32_t> batch;
            batch.reserve(comp.size());
            for (int i : comp) {
                inc[i]->state = FrameState::Complete;
                batch.push_back(inc[i]->id);
            }
            eng.completion_batches_.push_back(std::move(batch));
        }
        for (const auto& np : nodes)
            if (np->status == NodeStatus::Suspended) np->status = NodeStatus::Retired;
        for (auto& s : fsched) {
            s.waiters.clear();
            s.ts_waiters.clear();
        }
        for (auto& s : esched) s.ts_waiters.clear();
    }

    void run_loop() {
        for (;;) {
            while (!queue.empty()) {
                QItem q = queue.front();
                queue.pop_front();
                if (q.task) {
                    std::unique_ptr<Task> t(q.task);
                    fs(*t->owner).live_work--;
                    if (!stale(*t)) run_task(*t);
                } else {
                    ConsumerNode* n = q.node;
                    fs(*n->owner).live_work--;
                    if (n->status != NodeStatus::Queued) continue;
                    if (stale(*n)) {
                        n->status = NodeStatus::Retired;
                        continue;
                    }
                    run_node(*n);
                }
            }
            if (lazy_wake_pass() > 0) continue;
            completion_sweep();
            return;
        }
    }
};

Engine::Engine(Program prog, EngineOptions opts)
    : impl_(std::make_unique<Impl>(*this)),
      prog_(std::move(prog)),
      opts_(opts),
      tables_(prog_.syms, opts.table) {
    if (opts_.delivery_chunk == 0) opts_.delivery_chunk = 1;
    for (const auto& [key, mode] : prog_.tabled)
        tables_.declare(static_cast<uint32_t>(key >> 16), static_cast<uint32_t>(key & 0xFFFF),
                        mode);
    for (size_t i = 0; i < prog_.clauses.size(); ++i) impl_->index_clause(i);
}

Engine::~Engine() = default;

SolveResult Engine::solve_text(std::string_view text) {
    return solve(parse_goals(text, *prog_.syms));
}

SolveResult Engine::solve(const ParsedGoals& query) {
    if (poisoned_)
        throw EvalError("engine holds tables of a failed query; start a fresh engine");
    auto t0 = std::chrono::steady_clock::now();
    RunCounters before = totals_;

    for (const auto& g : query.goals)
        if (!g->is_atom() && !g->is_compound()) throw EvalError("goal is not callable");
    for (const auto& g : query.goals) {
        if (prog_.is_tabled(g->symbol(), g->arity())) continue;
        if (!prog_.is_defined(g->symbol(), g->arity()))
            throw EvalError("undefined predicate " + prog_.syms->name(g->symbol()) + "/" +
                            std::to_string(g->arity()));
    }

    // The query runs as a synthetic tabled call so canonical answers,
    // deduplication and ordering fall out of the normal machinery.
    uint32_t nvars = tuple_var_ceiling(query.goals);
    std::string qname = "$query" + std::to_string(query_counter_++);
    uint32_t qsym = prog_.syms->intern(qname);
    TermTuple head_args;
    head_args.reserve(nvars);
    for (uint32_t i = 0; i < nvars; ++i) head_args.push_back(Term::var(i));
    TermPtr head = head_args.empty() ? Term::atom(qsym)
                                     : Term::compound(qsym, head_args);
    prog_.add_clause(head, query.goals);
    prog_.declare_tabled(qsym, nvars, EvalMode::Variant);
    impl_->index_clause(prog_.clauses.size() - 1);

    TableEntry& qe = tables_.declare(qsym, nvars, EvalMode::Variant, /*synthetic=*/true);
    CallOutcome outcome = tables_.subgoal_call_lookup(qe, head_args);
    assert(outcome.kind == CallOutcome::Kind::NewGenerator);
    SubgoalFrame* qframe = outcome.frame;
    try {
        impl_->spawn_clause_tasks(*qframe);
        impl_->run_loop();
    } catch (...) {
        // Aborted evaluations leave unfinished tables behind; refuse to
        // answer from them later.
        impl_->reset_after_failure();
        poisoned_ = true;
        throw;
    }

    SolveResult res;
    res.var_names = query.var_names;
    res.answers.reserve(qframe->arl.size());
    for (AnswerLeaf l : qframe->arl) res.answers.push_back(qframe->own_trie->decode(l));
    res.counters = totals_ - before;
    res.elapsed_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    impl_->nodes.clear();
    return res;
}

bool Engine::check_completion(SubgoalFrame& leader) {
    auto inc = impl_->incomplete_frames();
    auto it = std::find(inc.begin(), inc.end(), &leader);
    if (it == inc.end()) return leader.state == FrameState::Complete;
    auto adj = impl_->dependency_graph(inc);
    auto comps = scc_components(adj);
    // locate the leader's component
    int lpos = static_cast<int>(it - inc.begin());
    const std::vector<int>* mine = nullptr;
    for (const auto& c : comps)
        if (std::find(c.begin(), c.end(), lpos) != c.end()) {
            mine = &c;
            break;
        }
    assert(mine);
    std::vector<bool> member(inc.size(), false);
    for (int i : *mine) member[i] = true;

    // Closed only when nothing inside is runnable and no dependency
    // leaves the component for an incomplete frame.
    bool ok = true;
    for (int i : *mine) {
        if (impl_->fs(*inc[i]).live_work > 0) ok = false;
        for (int j : adj[i])
            if (!member[j]) ok = false;
    }
    size_t rescheduled = 0;
    for (const auto& np : impl_->nodes) {
        ConsumerNode& n = *np;
        if (n.status != NodeStatus::Suspended || impl_->stale(n)) continue;
        auto oit = std::find(inc.begin(), inc.end(), n.owner);
        if (oit == inc.end() || !member[oit - inc.begin()]) continue;
        SubgoalFrame* src = n.source;
        bool more = n.cursor < src->arl.size();
        if (!more && (src->state == FrameState::Consumer || src->state == FrameState::Loader)) {
            Trie* t = tables_.answer_source(*src);
            more = t && t->predicate_ts() > src->ts;
        }
        if (more) {
            impl_->wake(&n);
            ++rescheduled;
        }
    }
    if (!ok || rescheduled > 0) return false;

    std::vector<uint32_t> batch;
    for (int i : *mine) {
        inc[i]->state = FrameState::Complete;
        batch.push_back(inc[i]->id);
    }
    std::sort(batch.begin(), batch.end());
    completion_batches_.push_back(std::move(batch));
    for (const auto& np : impl_->nodes)
        if (np->status == NodeStatus::Suspended && np->source->state == FrameState::Complete)
            np->status = NodeStatus::Retired;
    return true;
}

SubgoalFrame* Engine::find_frame(std::string_view goal_text) {
    TermPtr goal = parse_term(goal_text, *prog_.syms);
    TableEntry* e = tables_.find(goal->symbol(), goal->arity());
    if (!e) return nullptr;
    TermTuple ccall = canonicalize_tuple(goal->args());
    auto it = e->by_call.find(TupleKey::of(ccall));
    return it == e->by_call.end() ? nullptr : it->second;
}

}  // namespace retrotab
