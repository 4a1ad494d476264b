#ifndef RETROTAB_TRIE_HPP
#define RETROTAB_TRIE_HPP

#include <cstdint>
#include <deque>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "retrotab/term.hpp"

namespace retrotab {

struct TrieStructureError : std::runtime_error {
    explicit TrieStructureError(const std::string& msg) : std::runtime_error(msg) {}
};

// One symbol of a linearized term, packed into 64 bits.
// Linearization is left-to-right preorder with the functor symbol
// emitted before its arguments; decoding the token stream reproduces
// the original tuple.
class TrieSymbol {
public:
    enum class Kind : uint8_t { Var = 0, Atom = 1, Int = 2, Functor = 3 };

    static TrieSymbol var(uint32_t index) {
        return TrieSymbol((uint64_t{index} << 2) | 0);
    }
    static TrieSymbol atom(uint32_t sym) {
        return TrieSymbol((uint64_t{sym} << 2) | 1);
    }
    static TrieSymbol integer(int64_t v);
    static TrieSymbol functor(uint32_t sym, uint32_t arity) {
        return TrieSymbol((uint64_t{sym} << 18) | (uint64_t{arity} << 2) | 3);
    }

    Kind kind() const { return static_cast<Kind>(bits_ & 3); }
    uint32_t var_index() const { return static_cast<uint32_t>(bits_ >> 2); }
    uint32_t atom_symbol() const { return static_cast<uint32_t>(bits_ >> 2); }
    int64_t int_value() const { return static_cast<int64_t>(bits_) >> 2; }
    uint32_t functor_symbol() const { return static_cast<uint32_t>(bits_ >> 18); }
    uint32_t functor_arity() const { return static_cast<uint32_t>((bits_ >> 2) & 0xFFFF); }
    // Number of further subterms this token opens (functor arity, else 0).
    uint32_t opens() const {
        return kind() == Kind::Functor ? functor_arity() : 0;
    }

    uint64_t raw() const { return bits_; }
    bool operator==(const TrieSymbol& o) const { return bits_ == o.bits_; }

private:
    explicit TrieSymbol(uint64_t bits) : bits_(bits) {}
    uint64_t bits_;
};

using TokenSeq = std::vector<TrieSymbol>;

TokenSeq encode_tuple(std::span<const TermPtr> ts);
TermTuple decode_tokens(std::span<const TrieSymbol> tokens);

struct TrieNode;

// Lookup index for nodes whose fan-out outgrew linear search. Variable
// children are mirrored in a side list so that a ground lookup can still
// reach them. Index structures are bookkeeping, not trie nodes: they are
// excluded from node counts.
struct TrieChildIndex {
    std::unordered_map<uint64_t, TrieNode*> by_symbol;
    std::vector<TrieNode*> var_children;
};

struct TrieNode {
    TrieSymbol symbol;
    uint64_t ts = 0;
    TrieNode* parent = nullptr;
    TrieNode* first_child = nullptr;
    TrieNode* last_child = nullptr;
    TrieNode* next_sibling = nullptr;  // insertion order
    TrieChildIndex* index = nullptr;
    uint32_t child_count = 0;
    bool is_leaf = false;

    explicit TrieNode(TrieSymbol s) : symbol(s) {}
};

using AnswerLeaf = TrieNode*;

// A time-stamped trie over canonical term tuples.
//
// The root carries the predicate timestamp: the number of distinct
// tuples ever inserted. Each insertion of a new tuple bumps it and
// stamps every node on the new tuple's path, so that any interior
// node's timestamp equals the maximum timestamp among the leaves below
// it, and leaves are numbered 1..N in insertion order. Repeated
// insertions change nothing.
class Trie {
public:
    explicit Trie(uint32_t tuple_arity, uint32_t hash_threshold = 8);

    // Returns the leaf for the tuple and whether it was newly added.
    std::pair<AnswerLeaf, bool> check_insert(std::span<const TrieSymbol> tokens);
    std::pair<AnswerLeaf, bool> check_insert_tuple(std::span<const TermPtr> tuple) {
        return check_insert(encode_tuple(tuple));
    }

    // Leaves with timestamp > after_ts whose tuple unifies with the
    // template, in ascending timestamp order. The walk prunes any
    // subtree whose root timestamp is <= after_ts.
    std::vector<AnswerLeaf> collect_relevant(std::span<const TermPtr> tmpl,
                                             uint64_t after_ts) const;

    TermTuple decode(const TrieNode* leaf) const;

    uint64_t predicate_ts() const { return root_.ts; }
    uint32_t tuple_arity() const { return tuple_arity_; }
    // Nodes excluding the root and any index scaffolding.
    size_t node_count() const { return node_count_; }
    size_t leaf_count() const { return leaf_count_; }

    const TrieNode* root() const { return &root_; }

    void for_each_leaf(const std::function<void(const TrieNode*)>& fn) const;

    // One line per node, indented by depth: 'symbol @ts'.
    void dump(std::ostream& os, const SymbolTable& syms) const;

private:
    TrieNode* child_for(TrieNode* parent, TrieSymbol sym, bool& created);
    void maybe_index(TrieNode* parent);

    uint32_t tuple_arity_;
    uint32_t hash_threshold_;
    TrieNode root_;
    std::deque<TrieNode> nodes_;
    std::deque<TrieChildIndex> indexes_;
    size_t node_count_ = 0;
    size_t leaf_count_ = 0;
};

// Hashable key for canonical tuples (used for exact-call lookup tables
// and set-based oracles).
struct TupleKey {
    std::vector<uint64_t> words;

    bool operator==(const TupleKey& o) const { return words == o.words; }
    static TupleKey of(std::span<const TermPtr> tuple) {
        TokenSeq toks = encode_tuple(tuple);
        TupleKey k;
        k.words.reserve(toks.size());
        for (const auto& t : toks) k.words.push_back(t.raw());
        return k;
    }
};

struct TupleKeyHash {
    size_t operator()(const TupleKey& k) const {
        uint64_t h = 1469598103934665603ull;
        for (uint64_t w : k.words) {
            h ^= w;
            h *= 1099511628211ull;
        }
        return static_cast<size_t>(h);
    }
};

}  // namespace retrotab

#endif
