#include "retrotab/term.hpp"

#include <algorithm>

namespace retrotab {

uint32_t SymbolTable::intern(std::string_view name) {
    auto it = ids_.find(std::string(name));
    if (it != ids_.end()) return it->second;
    uint32_t id = static_cast<uint32_t>(names_.size());
    names_.emplace_back(name);
    ids_.emplace(names_.back(), id);
    return id;
}

int SymbolTable::find(std::string_view name) const {
    auto it = ids_.find(std::string(name));
    return it == ids_.end() ? -1 : static_cast<int>(it->second);
}

TermPtr Term::var(uint32_t index) {
    return std::make_shared<Term>(TermKind::Var, index, 0, TermTuple{}, index + 1);
}

TermPtr Term::integer(int64_t value) {
    return std::make_shared<Term>(TermKind::Int, 0, value, TermTuple{}, 0);
}

TermPtr Term::atom(uint32_t sym) {
    return std::make_shared<Term>(TermKind::Atom, sym, 0, TermTuple{}, 0);
}

TermPtr Term::compound(uint32_t sym, TermTuple args) {
    if (args.empty()) return atom(sym);
    uint32_t ceiling = 0;
    for (const auto& a : args) ceiling = std::max(ceiling, a->var_ceiling());
    return std::make_shared<Term>(TermKind::Compound, sym, 0, std::move(args), ceiling);
}

uint32_t tuple_var_ceiling(std::span<const TermPtr> ts) {
    uint32_t c = 0;
    for (const auto& t : ts) c = std::max(c, t->var_ceiling());
    return c;
}

uint32_t term_depth(const TermPtr& t) {
    if (!t->is_compound()) return 1;
    uint32_t d = 0;
    for (const auto& a : t->args()) d = std::max(d, term_depth(a));
    return d + 1;
}

bool equal(const TermPtr& a, const TermPtr& b) {
    if (a.get() == b.get()) return true;
    if (a->kind() != b->kind()) return false;
    switch (a->kind()) {
        case TermKind::Var: return a->var_index() == b->var_index();
        case TermKind::Int: return a->int_value() == b->int_value();
        case TermKind::Atom: return a->symbol() == b->symbol();
        case TermKind::Compound:
            if (a->symbol() != b->symbol() || a->arity() != b->arity()) return false;
            for (uint32_t i = 0; i < a->arity(); ++i)
                if (!equal(a->args()[i], b->args()[i])) return false;
            return true;
    }
    return false;
}

bool equal_tuple(std::span<const TermPtr> a, std::span<const TermPtr> b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (!equal(a[i], b[i])) return false;
    return true;
}

std::vector<std::pair<uint32_t, TermPtr>> Subst::items() const {
    std::vector<std::pair<uint32_t, TermPtr>> out(map_.begin(), map_.end());
    std::sort(out.begin(), out.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });
    return out;
}

TermPtr apply_subst(const Subst& s, const TermPtr& t) {
    if (t->ground() || s.empty()) return t;
    switch (t->kind()) {
        case TermKind::Var: {
            const TermPtr* b = s.lookup(t->var_index());
            return b ? *b : t;
        }
        case TermKind::Compound: {
            TermTuple args;
            args.reserve(t->arity());
            bool changed = false;
            for (const auto& a : t->args()) {
                TermPtr na = apply_subst(s, a);
                changed |= na.get() != a.get();
                args.push_back(std::move(na));
            }
            if (!changed) return t;
            return Term::compound(t->symbol(), std::move(args));
        }
        default:
            return t;
    }
}

TermTuple apply_tuple(const Subst& s, std::span<const TermPtr> ts) {
    TermTuple out;
    out.reserve(ts.size());
    for (const auto& t : ts) out.push_back(apply_subst(s, t));
    return out;
}

namespace {

TermPtr canonicalize_rec(const TermPtr& t, std::unordered_map<uint32_t, uint32_t>& numbering) {
    switch (t->kind()) {
        case TermKind::Var: {
            auto it = numbering.find(t->var_index());
            uint32_t idx;
            if (it == numbering.end()) {
                idx = static_cast<uint32_t>(numbering.size());
                numbering.emplace(t->var_index(), idx);
            } else {
                idx = it->second;
            }
            if (idx == t->var_index()) return t;
            return Term::var(idx);
        }
        case TermKind::Compound: {
            TermTuple args;
            args.reserve(t->arity());
            bool changed = false;
            for (const auto& a : t->args()) {
                TermPtr na = canonicalize_rec(a, numbering);
                changed |= na.get() != a.get();
                args.push_back(std::move(na));
            }
            if (!changed) return t;
            return Term::compound(t->symbol(), std::move(args));
        }
        default:
            return t;
    }
}

}  // namespace

TermPtr canonicalize(const TermPtr& t) {
    if (t->ground()) return t;
    std::unordered_map<uint32_t, uint32_t> numbering;
    return canonicalize_rec(t, numbering);
}

TermTuple canonicalize_tuple(std::span<const TermPtr> ts) {
    std::unordered_map<uint32_t, uint32_t> numbering;
    TermTuple out;
    out.reserve(ts.size());
    for (const auto& t : ts)
        out.push_back(t->ground() ? t : canonicalize_rec(t, numbering));
    return out;
}

bool is_variant(const TermPtr& a, const TermPtr& b) {
    return equal(canonicalize(a), canonicalize(b));
}

bool is_variant_tuple(std::span<const TermPtr> a, std::span<const TermPtr> b) {
    if (a.size() != b.size()) return false;
    return equal_tuple(canonicalize_tuple(a), canonicalize_tuple(b));
}

namespace {

bool match_rec(const TermPtr& general, const TermPtr& specific, Subst& s) {
    switch (general->kind()) {
        case TermKind::Var: {
            const TermPtr* bound = s.lookup(general->var_index());
            if (bound) return equal(*bound, specific);
            s.bind(general->var_index(), specific);
            return true;
        }
        case TermKind::Int:
            return specific->is_int() && specific->int_value() == general->int_value();
        case TermKind::Atom:
            return specific->is_atom() && specific->symbol() == general->symbol();
        case TermKind::Compound: {
            if (!specific->is_compound() || specific->symbol() != general->symbol() ||
                specific->arity() != general->arity())
                return false;
            for (uint32_t i = 0; i < general->arity(); ++i)
                if (!match_rec(general->args()[i], specific->args()[i], s)) return false;
            return true;
        }
    }
    return false;
}

}  // namespace

std::optional<Subst> subsumes(const TermPtr& general, const TermPtr& specific) {
    Subst s;
    if (!match_rec(general, specific, s)) return std::nullopt;
    return s;
}

std::optional<Subst> subsumes_tuple(std::span<const TermPtr> general,
                                    std::span<const TermPtr> specific) {
    if (general.size() != specific.size()) return std::nullopt;
    Subst s;
    for (size_t i = 0; i < general.size(); ++i)
        if (!match_rec(general[i], specific[i], s)) return std::nullopt;
    return s;
}

namespace {

// Triangular bindings used internally by unification: a variable may be
// bound to a term that itself contains bound variables.
struct Bindings {
    std::unordered_map<uint32_t, TermPtr> map;
    uint32_t depth = 0;

    // Unchecked unification over an already-cyclic binding set would
    // recurse forever; cap the descent and report the cycle instead.
    static constexpr uint32_t kMaxDepth = 10000;

    const TermPtr& deref(const TermPtr& t) const {
        const TermPtr* cur = &t;
        while ((*cur)->is_var()) {
            auto it = map.find((*cur)->var_index());
            if (it == map.end()) break;
            cur = &it->second;
        }
        return *cur;
    }

    bool occurs(uint32_t var, const TermPtr& t) const {
        const TermPtr& d = deref(t);
        if (d->is_var()) return d->var_index() == var;
        if (!d->is_compound()) return false;
        for (const auto& a : d->args())
            if (occurs(var, a)) return true;
        return false;
    }

    bool unify_pair(const TermPtr& a, const TermPtr& b, bool occurs_check) {
        const TermPtr da = deref(a);
        const TermPtr db = deref(b);
        if (da.get() == db.get()) return true;
        if (++depth > kMaxDepth) throw CyclicBindingError{};
        struct Guard {
            uint32_t& d;
            ~Guard() { --d; }
        } guard{depth};
        if (da->is_var()) {
            if (db->is_var() && db->var_index() == da->var_index()) return true;
            if (occurs_check && occurs(da->var_index(), db)) return false;
            map.emplace(da->var_index(), db);
            return true;
        }
        if (db->is_var()) {
            if (occurs_check && occurs(db->var_index(), da)) return false;
            map.emplace(db->var_index(), da);
            return true;
        }
        if (da->kind() != db->kind()) return false;
        if (da->is_int()) return da->int_value() == db->int_value();
        if (da->is_atom()) return da->symbol() == db->symbol();
        if (da->symbol() != db->symbol() || da->arity() != db->arity()) return false;
        for (uint32_t i = 0; i < da->arity(); ++i)
            if (!unify_pair(da->args()[i], db->args()[i], occurs_check)) return false;
        return true;
    }
};

// Flatten triangular bindings into an idempotent substitution. Cycles
// (possible only without the occurs check) surface as an error rather
// than an infinite structure.
Subst flatten(const Bindings& b) {
    Subst out;
    for (const auto& [var, rhs] : b.map) {
        // Depth-guarded resolution: a cycle would exceed the total number
        // of bindings in chain length through compounds.
        struct Resolver {
            const Bindings& b;
            size_t budget;
            TermPtr run(const TermPtr& t) {
                const TermPtr& d = b.deref(t);
                if (d->is_var() || !d->is_compound()) return d;
                if (budget-- == 0) throw CyclicBindingError{};
                TermTuple args;
                args.reserve(d->arity());
                for (const auto& a : d->args()) args.push_back(run(a));
                ++budget;
                return Term::compound(d->symbol(), std::move(args));
            }
        };
        // A non-cyclic resolved term can nest at most |map| bindings deep
        // times the structural depth of each right-hand side; use a
        // generous budget derived from the binding count.
        Resolver r{b, (b.map.size() + 1) * 64};
        (void)var;
        out.bind(var, r.run(rhs));
    }
    return out;
}

}  // namespace

std::optional<Subst> unify(const TermPtr& a, const TermPtr& b, bool occurs_check) {
    Bindings bind;
    if (!bind.unify_pair(a, b, occurs_check)) return std::nullopt;
    return flatten(bind);
}

std::optional<Subst> unify_tuple(std::span<const TermPtr> a, std::span<const TermPtr> b,
                                 bool occurs_check) {
    if (a.size() != b.size()) return std::nullopt;
    Bindings bind;
    for (size_t i = 0; i < a.size(); ++i)
        if (!bind.unify_pair(a[i], b[i], occurs_check)) return std::nullopt;
    return flatten(bind);
}

TermPtr rename(const TermPtr& t, uint32_t offset) {
    if (t->ground() || offset == 0) return t;
    switch (t->kind()) {
        case TermKind::Var:
            return Term::var(t->var_index() + offset);
        case TermKind::Compound: {
            TermTuple args;
            args.reserve(t->arity());
            for (const auto& a : t->args()) args.push_back(rename(a, offset));
            return Term::compound(t->symbol(), std::move(args));
        }
        default:
            return t;
    }
}

TermTuple rename_tuple(std::span<const TermPtr> ts, uint32_t offset) {
    TermTuple out;
    out.reserve(ts.size());
    for (const auto& t : ts) out.push_back(rename(t, offset));
    return out;
}

void collect_vars(const TermPtr& t, std::vector<uint32_t>& out) {
    switch (t->kind()) {
        case TermKind::Var:
            if (std::find(out.begin(), out.end(), t->var_index()) == out.end())
                out.push_back(t->var_index());
            break;
        case TermKind::Compound:
            for (const auto& a : t->args()) collect_vars(a, out);
            break;
        default:
            break;
    }
}

std::vector<uint32_t> tuple_vars(std::span<const TermPtr> ts) {
    std::vector<uint32_t> out;
    for (const auto& t : ts) collect_vars(t, out);
    return out;
}

}  // namespace retrotab
