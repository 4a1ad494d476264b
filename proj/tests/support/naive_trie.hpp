#ifndef RETROTAB_TESTS_NAIVE_TRIE_HPP
#define RETROTAB_TESTS_NAIVE_TRIE_HPP

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "retrotab/term.hpp"

namespace testsup {

using namespace retrotab;

// Independent trie reconstruction for node-count oracles: a plain
// map-of-maps over its own string tokenization (preorder, functor
// symbol before arguments). Shares nothing with the real trie.
class NaiveTrie {
public:
    explicit NaiveTrie(const SymbolTable& syms) : syms_(syms) {}

    bool insert(std::span<const TermPtr> tuple) {
        std::vector<std::string> tokens;
        for (const auto& t : tuple) tokenize(t, tokens);
        Node* node = &root_;
        bool created = false;
        for (const auto& tok : tokens) {
            auto [it, fresh] = node->children.try_emplace(tok);
            created |= fresh;
            node = &it->second;
        }
        bool was_leaf = node->leaf;
        node->leaf = true;
        return created || !was_leaf;
    }

    size_t node_count() const { return count(root_) - 1; }  // root excluded
    size_t leaf_count() const { return leaves(root_); }

private:
    struct Node {
        std::map<std::string, Node> children;
        bool leaf = false;
    };

    void tokenize(const TermPtr& t, std::vector<std::string>& out) const {
        switch (t->kind()) {
            case TermKind::Var:
                out.push_back("_" + std::to_string(t->var_index()));
                break;
            case TermKind::Int:
                out.push_back("i" + std::to_string(t->int_value()));
                break;
            case TermKind::Atom:
                out.push_back("a" + syms_.name(t->symbol()));
                break;
            case TermKind::Compound:
                out.push_back("c" + syms_.name(t->symbol()) + "/" +
                              std::to_string(t->arity()));
                for (const auto& a : t->args()) tokenize(a, out);
                break;
        }
    }

    static size_t count(const Node& n) {
        size_t total = 1;
        for (const auto& [k, c] : n.children) total += count(c);
        return total;
    }
    static size_t leaves(const Node& n) {
        size_t total = n.leaf ? 1 : 0;
        for (const auto& [k, c] : n.children) total += leaves(c);
        return total;
    }

    const SymbolTable& syms_;
    Node root_;
};

}  // namespace testsup

#endif
