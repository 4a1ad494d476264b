#ifndef RETROTAB_TERM_HPP
#define RETROTAB_TERM_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace retrotab {

// Interned names for atoms and functors. Ids are dense and stable, so
// symbol comparison anywhere else in the system is a single integer compare.
class SymbolTable {
public:
    uint32_t intern(std::string_view name);
    // -1 when the name was never interned.
    int find(std::string_view name) const;
    const std::string& name(uint32_t id) const { return names_.at(id); }
    size_t size() const { return names_.size(); }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, uint32_t> ids_;
};

enum class TermKind : uint8_t { Var, Int, Atom, Compound };

class Term;
using TermPtr = std::shared_ptr<const Term>;
using TermTuple = std::vector<TermPtr>;

// Immutable first-order term: variable, integer, atom or compound.
// Lists are ordinary '.'/2 compounds terminated by the atom '[]'.
// Terms are shared freely; nothing ever mutates one after construction.
class Term {
public:
    static TermPtr var(uint32_t index);
    static TermPtr integer(int64_t value);
    static TermPtr atom(uint32_t sym);
    static TermPtr compound(uint32_t sym, TermTuple args);

    TermKind kind() const { return kind_; }
    bool is_var() const { return kind_ == TermKind::Var; }
    bool is_int() const { return kind_ == TermKind::Int; }
    bool is_atom() const { return kind_ == TermKind::Atom; }
    bool is_compound() const { return kind_ == TermKind::Compound; }

    uint32_t var_index() const { return sym_; }
    int64_t int_value() const { return int_; }
    uint32_t symbol() const { return sym_; }  // atom or functor id
    const TermTuple& args() const { return args_; }
    uint32_t arity() const { return static_cast<uint32_t>(args_.size()); }

    bool ground() const { return var_ceiling_ == 0; }
    // One past the largest variable index occurring anywhere in the term;
    // 0 for ground terms. Used to rename terms apart cheaply.
    uint32_t var_ceiling() const { return var_ceiling_; }

    Term(TermKind k, uint32_t sym, int64_t i, TermTuple args, uint32_t ceiling)
        : kind_(k), sym_(sym), var_ceiling_(ceiling), int_(i), args_(std::move(args)) {}

private:
    TermKind kind_;
    uint32_t sym_ = 0;
    uint32_t var_ceiling_ = 0;
    int64_t int_ = 0;
    TermTuple args_;
};

uint32_t tuple_var_ceiling(std::span<const TermPtr> ts);
uint32_t term_depth(const TermPtr& t);

bool equal(const TermPtr& a, const TermPtr& b);
bool equal_tuple(std::span<const TermPtr> a, std::span<const TermPtr> b);

// A finite, flat variable-to-term map. `apply` substitutes in a single
// pass: bound variables inside an inserted right-hand side are not
// chased again. unify() returns substitutions in fully dereferenced
// (idempotent) form; subsumes() returns a one-shot matcher whose
// right-hand sides live in the specific term's variable namespace.
class Subst {
public:
    void bind(uint32_t var, TermPtr t) { map_[var] = std::move(t); }
    const TermPtr* lookup(uint32_t var) const {
        auto it = map_.find(var);
        return it == map_.end() ? nullptr : &it->second;
    }
    bool empty() const { return map_.empty(); }
    size_t size() const { return map_.size(); }
    // Bindings sorted by variable index, for deterministic output.
    std::vector<std::pair<uint32_t, TermPtr>> items() const;

private:
    std::unordered_map<uint32_t, TermPtr> map_;
};

TermPtr apply_subst(const Subst& s, const TermPtr& t);
TermTuple apply_tuple(const Subst& s, std::span<const TermPtr> ts);

// Renumber variables 0,1,2,... by first occurrence in left-to-right
// preorder. Idempotent; ground terms are returned unchanged.
TermPtr canonicalize(const TermPtr& t);
TermTuple canonicalize_tuple(std::span<const TermPtr> ts);

bool is_variant(const TermPtr& a, const TermPtr& b);
bool is_variant_tuple(std::span<const TermPtr> a, std::span<const TermPtr> b);

// One-way matching: sigma with apply_subst(sigma, general) == specific,
// or nullopt. Variables of `specific` act as constants.
std::optional<Subst> subsumes(const TermPtr& general, const TermPtr& specific);
std::optional<Subst> subsumes_tuple(std::span<const TermPtr> general,
                                    std::span<const TermPtr> specific);

// Most general unifier, fully dereferenced. Occurs check is off by
// default; the checked mode exists for tests and oracles. Without the
// check, a unification that would build a cyclic binding throws.
struct CyclicBindingError : std::runtime_error {
    CyclicBindingError() : std::runtime_error("cyclic variable binding") {}
};
std::optional<Subst> unify(const TermPtr& a, const TermPtr& b, bool occurs_check = false);
std::optional<Subst> unify_tuple(std::span<const TermPtr> a, std::span<const TermPtr> b,
                                 bool occurs_check = false);

// Shift every variable index by `offset` (renaming apart).
TermPtr rename(const TermPtr& t, uint32_t offset);
TermTuple rename_tuple(std::span<const TermPtr> ts, uint32_t offset);

// Distinct variables of the term in first-occurrence preorder.
void collect_vars(const TermPtr& t, std::vector<uint32_t>& out);
std::vector<uint32_t> tuple_vars(std::span<const TermPtr> ts);

}  // namespace retrotab

#endif
