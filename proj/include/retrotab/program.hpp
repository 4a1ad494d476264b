#ifndef RETROTAB_PROGRAM_HPP
#define RETROTAB_PROGRAM_HPP

#include <cstdint>
#include <memory>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "retrotab/term.hpp"

namespace retrotab {

// How calls to a tabled predicate are matched against stored subgoals.
enum class EvalMode : uint8_t { Variant, Subsumptive, Retroactive };

const char* eval_mode_name(EvalMode m);

inline uint64_t pred_key(uint32_t sym, uint32_t arity) {
    return (static_cast<uint64_t>(sym) << 16) | arity;
}

struct Clause {
    TermPtr head;
    TermTuple body;
    // Variables are numbered 0..nvars-1 across head and body.
    uint32_t nvars = 0;
};

// A pure Horn program plus tabling declarations. Clause order is
// preserved; it drives resolution order in the engine.
struct Program {
    std::shared_ptr<SymbolTable> syms = std::make_shared<SymbolTable>();
    std::vector<Clause> clauses;
    std::unordered_map<uint64_t, EvalMode> tabled;
    // Predicates that appear as a clause head or a tabling declaration.
    std::unordered_set<uint64_t> defined;

    void add_clause(const TermPtr& head, TermTuple body);
    void declare_tabled(uint32_t sym, uint32_t arity, EvalMode mode);

    bool is_tabled(uint32_t sym, uint32_t arity) const {
        return tabled.count(pred_key(sym, arity)) != 0;
    }
    bool is_defined(uint32_t sym, uint32_t arity) const {
        return defined.count(pred_key(sym, arity)) != 0;
    }
};

}  // namespace retrotab

#endif
