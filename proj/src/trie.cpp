#include "retrotab/trie.hpp"

#include <algorithm>
#include <ostream>

#include "retrotab/parser.hpp"

namespace retrotab {

namespace {
constexpr int64_t kMaxPackedInt = (int64_t{1} << 60) - 1;

TrieSymbol sentinel_root_symbol() { return TrieSymbol::atom(0xFFFFFFFFu >> 2); }
}  // namespace

TrieSymbol TrieSymbol::integer(int64_t v) {
    if (v > kMaxPackedInt || v < -kMaxPackedInt)
        throw TrieStructureError("integer too large to index");
    return TrieSymbol((static_cast<uint64_t>(v) << 2) | 2);
}

namespace {

void encode_rec(const TermPtr& t, TokenSeq& out) {
    switch (t->kind()) {
        case TermKind::Var:
            out.push_back(TrieSymbol::var(t->var_index()));
            break;
        case TermKind::Int:
            out.push_back(TrieSymbol::integer(t->int_value()));
            break;
        case TermKind::Atom:
            out.push_back(TrieSymbol::atom(t->symbol()));
            break;
        case TermKind::Compound:
            out.push_back(TrieSymbol::functor(t->symbol(), t->arity()));
            for (const auto& a : t->args()) encode_rec(a, out);
            break;
    }
}

TermPtr decode_one(std::span<const TrieSymbol> tokens, size_t& pos) {
    if (pos >= tokens.size()) throw TrieStructureError("truncated token stream");
    TrieSymbol s = tokens[pos++];
    switch (s.kind()) {
        case TrieSymbol::Kind::Var: return Term::var(s.var_index());
        case TrieSymbol::Kind::Atom: return Term::atom(s.atom_symbol());
        case TrieSymbol::Kind::Int: return Term::integer(s.int_value());
        case TrieSymbol::Kind::Functor: {
            TermTuple args;
            uint32_t n = s.functor_arity();
            args.reserve(n);
            for (uint32_t i = 0; i < n; ++i) args.push_back(decode_one(tokens, pos));
            return Term::compound(s.functor_symbol(), std::move(args));
        }
    }
    throw TrieStructureError("bad token");
}

}  // namespace

TokenSeq encode_tuple(std::span<const TermPtr> ts) {
    TokenSeq out;
    for (const auto& t : ts) encode_rec(t, out);
    return out;
}

TermTuple decode_tokens(std::span<const TrieSymbol> tokens) {
    TermTuple out;
    size_t pos = 0;
    while (pos < tokens.size()) out.push_back(decode_one(tokens, pos));
    return out;
}

Trie::Trie(uint32_t tuple_arity, uint32_t hash_threshold)
    : tuple_arity_(tuple_arity),
      hash_threshold_(hash_threshold < 2 ? 2 : hash_threshold),
      root_(sentinel_root_symbol()) {}

TrieNode* Trie::child_for(TrieNode* parent, TrieSymbol sym, bool& created) {
    if (parent->index) {
        auto it = parent->index->by_symbol.find(sym.raw());
        if (it != parent->index->by_symbol.end()) {
            created = false;
            return it->second;
        }
    } else {
        for (TrieNode* c = parent->first_child; c; c = c->next_sibling) {
            if (c->symbol == sym) {
                created = false;
                return c;
            }
        }
    }
    nodes_.emplace_back(sym);
    TrieNode* n = &nodes_.back();
    n->parent = parent;
    if (parent->last_child) {
        parent->last_child->next_sibling = n;
    } else {
        parent->first_child = n;
    }
    parent->last_child = n;
    ++parent->child_count;
    ++node_count_;
    if (parent->index) {
        parent->index->by_symbol.emplace(sym.raw(), n);
        if (sym.kind() == TrieSymbol::Kind::Var) parent->index->var_children.push_back(n);
    } else {
        maybe_index(parent);
    }
    created = true;
    return n;
}

void Trie::maybe_index(TrieNode* parent) {
    if (parent->child_count <= hash_threshold_) return;
    indexes_.emplace_back();
    TrieChildIndex* idx = &indexes_.back();
    for (TrieNode* c = parent->first_child; c; c = c->next_sibling) {
        idx->by_symbol.emplace(c->symbol.raw(), c);
        if (c->symbol.kind() == TrieSymbol::Kind::Var) idx->var_children.push_back(c);
    }
    parent->index = idx;
}

std::pair<AnswerLeaf, bool> Trie::check_insert(std::span<const TrieSymbol> tokens) {
    // Structural validation: each token consumes one expected term and a
    // functor opens `arity` more.
    uint64_t remaining = tuple_arity_;
    for (const auto& t : tokens) {
        if (remaining == 0) throw TrieStructureError("token stream overflows tuple arity");
        remaining = remaining - 1 + t.opens();
    }
    if (remaining != 0) throw TrieStructureError("token stream underflows tuple arity");

    TrieNode* node = &root_;
    bool any_created = false;
    for (const auto& t : tokens) {
        bool created = false;
        node = child_for(node, t, created);
        any_created |= created;
    }
    if (!any_created && node->is_leaf) return {node, false};

    node->is_leaf = true;
    ++leaf_count_;
    uint64_t stamp = root_.ts + 1;
    for (TrieNode* n = node; n; n = n->parent) n->ts = stamp;
    root_.ts = stamp;
    return {node, true};
}

TermTuple Trie::decode(const TrieNode* leaf) const {
    TokenSeq rev;
    for (const TrieNode* n = leaf; n != &root_; n = n->parent) rev.push_back(n->symbol);
    std::reverse(rev.begin(), rev.end());
    return decode_tokens(rev);
}

namespace {

// End index (one past) of the template subterm starting at `i`.
size_t subterm_end(const TokenSeq& tokens, size_t i) {
    size_t count = 1;
    size_t j = i;
    while (count > 0) {
        count += tokens[j].opens();
        --count;
        ++j;
    }
    return j;
}

struct CollectWalk {
    const Trie& trie;
    const TokenSeq& tmpl_tokens;
    std::span<const TermPtr> tmpl;
    uint32_t tmpl_ceiling;
    uint64_t after_ts;
    std::vector<size_t> ends;  // ends[i] = one past subterm starting at i
    std::vector<AnswerLeaf> out;

    // The descent keeps a conservative alignment between the trie path
    // and the template token stream: `ti` is the template position,
    // `skip` counts trie tokens still being swallowed by a template
    // variable. Variable-for-variable consistency is not tracked here;
    // the leaf is verified with a real unification.
    void step(TrieNode* child, size_t ti, size_t skip) {
        if (child->ts <= after_ts) return;
        size_t nti = ti, nskip = skip;
        if (skip > 0) {
            nskip = skip - 1 + child->symbol.opens();
        } else {
            TrieSymbol t = tmpl_tokens[ti];
            if (t.kind() == TrieSymbol::Kind::Var) {
                nti = ti + 1;
                nskip = child->symbol.opens();
            } else if (child->symbol.kind() == TrieSymbol::Kind::Var) {
                nti = ends[ti];
                nskip = 0;
            } else if (child->symbol == t) {
                nti = ti + 1;
                nskip = 0;
            } else {
                return;
            }
        }
        if (child->is_leaf) {
            verify(child);
            return;
        }
        descend(child, nti, nskip);
    }

    void descend(TrieNode* node, size_t ti, size_t skip) {
        bool ground_pos = skip == 0 && ti < tmpl_tokens.size() &&
                          tmpl_tokens[ti].kind() != TrieSymbol::Kind::Var;
        if (node->index && ground_pos) {
            auto it = node->index->by_symbol.find(tmpl_tokens[ti].raw());
            if (it != node->index->by_symbol.end()) step(it->second, ti, skip);
            for (TrieNode* v : node->index->var_children) step(v, ti, skip);
            return;
        }
        for (TrieNode* c = node->first_child; c; c = c->next_sibling) step(c, ti, skip);
    }

    void verify(TrieNode* leaf) {
        TermTuple decoded = trie.decode(leaf);
        TermTuple apart = rename_tuple(decoded, tmpl_ceiling);
        if (unify_tuple(apart, tmpl, /*occurs_check=*/true)) out.push_back(leaf);
    }
};

}  // namespace

std::vector<AnswerLeaf> Trie::collect_relevant(std::span<const TermPtr> tmpl,
                                               uint64_t after_ts) const {
    if (tmpl.size() != tuple_arity_)
        throw TrieStructureError("template arity does not match trie arity");
    if (root_.ts <= after_ts) return {};
    if (tuple_arity_ == 0) {
        // The only possible tuple is the empty one, stored at the root.
        if (root_.is_leaf && root_.ts > after_ts)
            return {const_cast<TrieNode*>(&root_)};
        return {};
    }
    TokenSeq tmpl_tokens = encode_tuple(tmpl);
    CollectWalk walk{*this, tmpl_tokens, tmpl, tuple_var_ceiling(tmpl), after_ts, {}, {}};
    walk.ends.resize(tmpl_tokens.size());
    for (size_t i = 0; i < tmpl_tokens.size(); ++i) walk.ends[i] = subterm_end(tmpl_tokens, i);
    walk.descend(const_cast<TrieNode*>(&root_), 0, 0);
    std::sort(walk.out.begin(), walk.out.end(),
              [](const TrieNode* a, const TrieNode* b) { return a->ts < b->ts; });
    return std::move(walk.out);
}

namespace {

void leaves_rec(const TrieNode* node, const std::function<void(const TrieNode*)>& fn) {
    if (node->is_leaf) fn(node);
    for (const TrieNode* c = node->first_child; c; c = c->next_sibling) leaves_rec(c, fn);
}

std::string symbol_text(TrieSymbol s, const SymbolTable& syms) {
    switch (s.kind()) {
        case TrieSymbol::Kind::Var: return "_" + std::to_string(s.var_index());
        case TrieSymbol::Kind::Atom: return syms.name(s.atom_symbol());
        case TrieSymbol::Kind::Int: return std::to_string(s.int_value());
        case TrieSymbol::Kind::Functor:
            return syms.name(s.functor_symbol()) + "/" + std::to_string(s.functor_arity());
    }
    return "?";
}

void dump_rec(std::ostream& os, const TrieNode* node, const SymbolTable& syms, int depth) {
    for (int i = 0; i < depth; ++i) os << "  ";
    os << symbol_text(node->symbol, syms) << " @" << node->ts << "\n";
    for (const TrieNode* c = node->first_child; c; c = c->next_sibling)
        dump_rec(os, c, syms, depth + 1);
}

}  // namespace

void Trie::for_each_leaf(const std::function<void(const TrieNode*)>& fn) const {
    if (root_.is_leaf) fn(&root_);
    for (const TrieNode* c = root_.first_child; c; c = c->next_sibling) leaves_rec(c, fn);
}

void Trie::dump(std::ostream& os, const SymbolTable& syms) const {
    for (const TrieNode* c = root_.first_child; c; c = c->next_sibling)
        dump_rec(os, c, syms, 0);
}

}  // namespace retrotab
