#include "retrotab/tablespace.hpp"

#include <algorithm>
#include <cassert>
#include <ostream>
#include <sstream>

#include "retrotab/parser.hpp"

namespace retrotab {

const char* frame_state_name(FrameState s) {
    switch (s) {
        case FrameState::Generator: return "generator";
        case FrameState::Consumer: return "consumer";
        case FrameState::Loader: return "loader";
        case FrameState::Complete: return "complete";
    }
    return "?";
}

bool PendingIndex::contains(AnswerLeaf l) const {
    if (set_) return set_->count(l) != 0;
    return std::find(items_.begin(), items_.end(), l) != items_.end();
}

void PendingIndex::insert(AnswerLeaf l) {
    if (contains(l)) return;
    items_.push_back(l);
    if (set_) {
        set_->insert(l);
    } else if (items_.size() > threshold_) {
        set_ = std::make_unique<std::unordered_set<AnswerLeaf>>(items_.begin(), items_.end());
    }
}

bool PendingIndex::erase(AnswerLeaf l) {
    if (set_) {
        if (set_->erase(l) == 0) return false;
        items_.erase(std::find(items_.begin(), items_.end(), l));
        return true;
    }
    auto it = std::find(items_.begin(), items_.end(), l);
    if (it == items_.end()) return false;
    items_.erase(it);
    return true;
}

std::vector<AnswerLeaf> PendingIndex::drain_sorted_by_ts() {
    std::vector<AnswerLeaf> out = std::move(items_);
    items_.clear();
    set_.reset();
    std::sort(out.begin(), out.end(),
              [](AnswerLeaf a, AnswerLeaf b) { return a->ts < b->ts; });
    return out;
}

TableSpace::TableSpace(std::shared_ptr<SymbolTable> syms, TableSpaceOptions opts)
    : syms_(std::move(syms)), opts_(opts) {}

TableEntry& TableSpace::declare(uint32_t pred_sym, uint32_t arity, EvalMode mode,
                                bool synthetic) {
    uint64_t key = pred_key(pred_sym, arity);
    auto it = by_pred_.find(key);
    if (it != by_pred_.end()) return *it->second;
    auto entry = std::make_unique<TableEntry>(arity, opts_.trie_hash_threshold);
    entry->id = static_cast<uint32_t>(entries_.size());
    entry->pred_sym = pred_sym;
    entry->arity = arity;
    entry->mode = mode;
    entry->synthetic = synthetic;
    if (mode == EvalMode::Retroactive)
        entry->shared_trie = std::make_unique<Trie>(arity, opts_.trie_hash_threshold);
    TableEntry* raw = entry.get();
    entries_.push_back(std::move(entry));
    by_pred_.emplace(key, raw);
    return *raw;
}

TableEntry* TableSpace::find(uint32_t pred_sym, uint32_t arity) {
    auto it = by_pred_.find(pred_key(pred_sym, arity));
    return it == by_pred_.end() ? nullptr : it->second;
}

const TableEntry* TableSpace::find(uint32_t pred_sym, uint32_t arity) const {
    auto it = by_pred_.find(pred_key(pred_sym, arity));
    return it == by_pred_.end() ? nullptr : it->second;
}

SubgoalFrame& TableSpace::new_frame(TableEntry& e, const TermTuple& call) {
    auto fr = std::make_unique<SubgoalFrame>(opts_.pending_threshold);
    fr->id = next_frame_id_++;
    fr->entry = &e;
    fr->call = call;
    auto [leaf, fresh] = e.subgoal_trie.check_insert_tuple(call);
    assert(fresh);
    (void)fresh;
    e.frame_of_leaf.emplace(leaf, fr.get());
    e.by_call.emplace(TupleKey::of(call), fr.get());
    e.frames.push_back(std::move(fr));
    return *e.frames.back();
}

std::vector<SubgoalFrame*> TableSpace::frames_in_preorder(TableEntry& e) const {
    std::vector<SubgoalFrame*> out;
    out.reserve(e.frames.size());
    e.subgoal_trie.for_each_leaf([&](const TrieNode* leaf) {
        auto it = e.frame_of_leaf.find(leaf);
        if (it != e.frame_of_leaf.end()) out.push_back(it->second);
    });
    return out;
}

TermTuple TableSpace::build_answer_template(EvalMode mode, const TermTuple& call,
                                            const SubgoalFrame* general) const {
    switch (mode) {
        case EvalMode::Retroactive:
            return call;
        case EvalMode::Variant:
            break;
        case EvalMode::Subsumptive:
            if (general) {
                auto sigma = subsumes_tuple(general->call, call);
                if (!sigma)
                    throw std::logic_error("answer template: general does not subsume call");
                TermTuple out;
                std::vector<uint32_t> gvars = tuple_vars(general->call);
                out.reserve(gvars.size());
                for (uint32_t v : gvars) {
                    const TermPtr* b = sigma->lookup(v);
                    out.push_back(b ? *b : Term::var(v));
                }
                return out;
            }
            break;
    }
    // Variant organization (and subsumptive generators): the call's
    // variables in first-occurrence order.
    TermTuple out;
    for (uint32_t v : tuple_vars(call)) out.push_back(Term::var(v));
    return out;
}

CallOutcome TableSpace::subgoal_call_lookup(TableEntry& e, const TermTuple& call) {
    auto it = e.by_call.find(TupleKey::of(call));
    if (it != e.by_call.end()) return {CallOutcome::Kind::VariantFound, it->second, {}};

    if (e.mode != EvalMode::Variant && !e.frames.empty()) {
        // Most specific subsuming frame; ties broken by subgoal-trie
        // preorder. Subsumptive consumers must anchor to a frame that owns
        // an answer trie, so only generator-born frames qualify there.
        SubgoalFrame* best = nullptr;
        for (SubgoalFrame* fr : frames_in_preorder(e)) {
            if (e.mode == EvalMode::Subsumptive && !fr->born_generator) continue;
            if (!subsumes_tuple(fr->call, call)) continue;
            if (!best || subsumes_tuple(best->call, fr->call))
                best = fr;
        }
        if (best) return {CallOutcome::Kind::SubsumingFound, best, {}};
    }

    std::vector<SubgoalFrame*> subsumed;
    if (e.mode == EvalMode::Retroactive) {
        for (SubgoalFrame* fr : frames_in_preorder(e)) {
            if (fr->state == FrameState::Complete) continue;
            if (subsumes_tuple(call, fr->call)) subsumed.push_back(fr);
        }
    }

    SubgoalFrame& fr = new_frame(e, call);
    fr.state = FrameState::Generator;
    fr.born_generator = true;
    fr.tmpl = build_answer_template(e.mode, call, nullptr);
    switch (e.mode) {
        case EvalMode::Variant:
        case EvalMode::Subsumptive:
            fr.storage = AnswerStorage::OwnSubstitutions;
            fr.own_trie = std::make_unique<Trie>(static_cast<uint32_t>(fr.tmpl.size()),
                                                 opts_.trie_hash_threshold);
            break;
        case EvalMode::Retroactive:
            fr.storage = AnswerStorage::FullAnswers;
            break;
    }
    return {CallOutcome::Kind::NewGenerator, &fr, std::move(subsumed)};
}

SubgoalFrame& TableSpace::create_consumer_frame(TableEntry& e, const TermTuple& call,
                                                SubgoalFrame& general) {
    if (e.mode == EvalMode::Variant)
        throw std::logic_error("variant tables have no consumer frames");
    SubgoalFrame& fr = new_frame(e, call);
    fr.born_generator = false;
    fr.general = &general;
    fr.state = general.state == FrameState::Complete ? FrameState::Loader
                                                     : FrameState::Consumer;
    fr.tmpl = build_answer_template(e.mode, call, &general);
    fr.storage = e.mode == EvalMode::Retroactive ? AnswerStorage::FullAnswers
                                                 : AnswerStorage::GeneralSubstitutions;
    return fr;
}

Trie* TableSpace::answer_source(SubgoalFrame& fr) const {
    switch (fr.storage) {
        case AnswerStorage::FullAnswers: return fr.entry->shared_trie.get();
        case AnswerStorage::OwnSubstitutions: return fr.own_trie.get();
        case AnswerStorage::GeneralSubstitutions:
            return fr.general ? fr.general->own_trie.get() : nullptr;
    }
    return nullptr;
}

std::optional<AnswerLeaf> TableSpace::retroactive_insert_answer(std::span<const TermPtr> answer,
                                                         SubgoalFrame& fr) {
    Trie& shared = *fr.entry->shared_trie;
    if (answer.size() != shared.tuple_arity())
        throw TrieStructureError("answer arity does not match predicate arity");

    uint64_t old_ts = shared.predicate_ts();
    auto [leaf, fresh] = shared.check_insert_tuple(answer);
    (void)fresh;
    uint64_t leaf_ts = leaf->ts;
    uint64_t new_ts = shared.predicate_ts();

    std::optional<AnswerLeaf> result;
    if (new_ts == old_ts + 1 && fr.ts == old_ts) {
        // case 1: consecutive new answer by the same subgoal
        fr.ts = new_ts;
        result = leaf;
    } else if (new_ts == old_ts && old_ts == leaf_ts && fr.ts == new_ts - 1) {
        // case 2: the single stored answer this subgoal had not seen yet
        fr.ts = new_ts;
        result = leaf;
    } else if (leaf_ts <= fr.ts) {
        // case 3: answer with a past timestamp; the pending index decides
        // whether it is still new for this subgoal
        if (fr.pending.erase(leaf)) result = leaf;
    } else {
        // case 4: other subgoals inserted answers in between; everything
        // this subgoal missed (except the current answer) becomes pending
        for (AnswerLeaf missed : shared.collect_relevant(fr.tmpl, fr.ts))
            if (missed != leaf) fr.pending.insert(missed);
        fr.ts = new_ts;
        result = leaf;
    }
    if (result) fr.arl.push_back(*result);
    return result;
}

std::optional<AnswerLeaf> TableSpace::subsumptive_insert_answer(std::span<const TermPtr> subst_values,
                                                        SubgoalFrame& fr) {
    auto [leaf, fresh] = fr.own_trie->check_insert_tuple(subst_values);
    if (!fresh) return std::nullopt;
    fr.ts = fr.own_trie->predicate_ts();
    fr.arl.push_back(leaf);
    return leaf;
}

std::optional<AnswerLeaf> TableSpace::variant_insert_answer(
    std::span<const TermPtr> subst_values, SubgoalFrame& fr) {
    auto [leaf, fresh] = fr.own_trie->check_insert_tuple(subst_values);
    if (!fresh) return std::nullopt;
    fr.arl.push_back(leaf);
    return leaf;
}

std::optional<AnswerLeaf> TableSpace::insert_answer(std::span<const TermPtr> answer_instance,
                                                    SubgoalFrame& fr) {
    TermTuple canon = canonicalize_tuple(answer_instance);
    switch (fr.entry->mode) {
        case EvalMode::Variant: return variant_insert_answer(canon, fr);
        case EvalMode::Subsumptive: return subsumptive_insert_answer(canon, fr);
        case EvalMode::Retroactive: return retroactive_insert_answer(canon, fr);
    }
    return std::nullopt;
}

size_t TableSpace::extend_arl(SubgoalFrame& fr) {
    if (fr.state != FrameState::Consumer && fr.state != FrameState::Loader) return 0;
    Trie* src = answer_source(fr);
    if (!src || src->predicate_ts() <= fr.ts) return 0;
    std::vector<AnswerLeaf> leaves = src->collect_relevant(fr.tmpl, fr.ts);
    for (AnswerLeaf l : leaves) fr.arl.push_back(l);
    fr.ts = src->predicate_ts();
    return leaves.size();
}

std::vector<AnswerLeaf> TableSpace::fetch_new_answers(SubgoalFrame& fr) {
    extend_arl(fr);
    std::vector<AnswerLeaf> out(fr.arl.begin() + fr.arl_cursor, fr.arl.end());
    fr.arl_cursor = fr.arl.size();
    return out;
}

bool TableSpace::convert_generator_to_consumer(SubgoalFrame& fr, SubgoalFrame& general) {
    if (fr.state == FrameState::Complete)
        throw std::logic_error("cannot convert a completed frame");
    if (fr.state != FrameState::Generator) return false;
    if (!subsumes_tuple(general.call, fr.call))
        throw std::logic_error("conversion target is not subsumed by the general call");
    fr.arl_at_conversion = fr.arl.size();
    for (AnswerLeaf l : fr.pending.drain_sorted_by_ts()) fr.arl.push_back(l);
    fr.general = &general;
    fr.converted = true;
    fr.state = general.state == FrameState::Complete ? FrameState::Loader
                                                     : FrameState::Consumer;
    return true;
}

TermTuple TableSpace::answer_terms(const SubgoalFrame& fr, AnswerLeaf leaf) const {
    switch (fr.storage) {
        case AnswerStorage::FullAnswers:
            return fr.entry->shared_trie->decode(leaf);
        case AnswerStorage::OwnSubstitutions: {
            TermTuple values = fr.own_trie->decode(leaf);
            Subst s;
            for (size_t i = 0; i < values.size(); ++i)
                s.bind(fr.tmpl[i]->var_index(), values[i]);
            return apply_tuple(s, fr.call);
        }
        case AnswerStorage::GeneralSubstitutions: {
            TermTuple values = fr.general->own_trie->decode(leaf);
            uint32_t ceiling = tuple_var_ceiling(fr.tmpl);
            TermTuple apart = rename_tuple(values, ceiling);
            auto sigma = unify_tuple(apart, fr.tmpl, /*occurs_check=*/true);
            if (!sigma)
                throw std::logic_error("stored answer does not match consumer template");
            return canonicalize_tuple(apply_tuple(*sigma, fr.call));
        }
    }
    return {};
}

size_t TableSpace::answer_trie_nodes() const {
    size_t total = 0;
    for (const auto& e : entries_) {
        if (e->synthetic) continue;
        if (e->shared_trie) total += e->shared_trie->node_count();
        for (const auto& fr : e->frames)
            if (fr->own_trie) total += fr->own_trie->node_count();
    }
    return total;
}

size_t TableSpace::subgoal_trie_nodes() const {
    size_t total = 0;
    for (const auto& e : entries_)
        if (!e->synthetic) total += e->subgoal_trie.node_count();
    return total;
}

void TableSpace::dump(std::ostream& os) const {
    for (const auto& e : entries_) {
        os << "table " << syms_->name(e->pred_sym) << "/" << e->arity
           << " mode=" << eval_mode_name(e->mode);
        if (e->synthetic) os << " synthetic";
        os << "\n";
        os << "  subgoal_trie: nodes=" << e->subgoal_trie.node_count() << "\n";
        {
            std::ostringstream sub;
            e->subgoal_trie.dump(sub, *syms_);
            std::string line;
            std::istringstream in(sub.str());
            while (std::getline(in, line)) os << "    " << line << "\n";
        }
        if (e->shared_trie) {
            os << "  shared_answer_trie: ts=" << e->shared_trie->predicate_ts()
               << " nodes=" << e->shared_trie->node_count() << "\n";
            std::ostringstream sub;
            e->shared_trie->dump(sub, *syms_);
            std::string line;
            std::istringstream in(sub.str());
            while (std::getline(in, line)) os << "    " << line << "\n";
        }
        size_t idx = 0;
        for (const auto& fr : e->frames) {
            os << "  frame " << idx++ << ": call="
               << syms_->name(e->pred_sym);
            if (!fr->call.empty()) os << "(";
            for (size_t i = 0; i < fr->call.size(); ++i) {
                if (i) os << ",";
                os << write_term(fr->call[i], *syms_);
            }
            if (!fr->call.empty()) os << ")";
            os << " state=" << frame_state_name(fr->state) << " ts=" << fr->ts
               << " arl=" << fr->arl.size() << " pending=" << fr->pending.size();
            if (fr->converted) os << " converted";
            if (fr->own_trie)
                os << " trie_nodes=" << fr->own_trie->node_count();
            os << "\n";
            if (fr->own_trie && fr->own_trie->node_count() > 0) {
                std::ostringstream sub;
                fr->own_trie->dump(sub, *syms_);
                std::string line;
                std::istringstream in(sub.str());
                while (std::getline(in, line)) os << "    " << line << "\n";
            }
        }
    }
}

}  // namespace retrotab
