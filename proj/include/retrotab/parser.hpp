#ifndef RETROTAB_PARSER_HPP
#define RETROTAB_PARSER_HPP

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "retrotab/program.hpp"
#include "retrotab/term.hpp"

namespace retrotab {

// Prolog-like surface syntax: atoms lowercase, variables uppercase or
// '_', integers, compounds f(...), lists [a,b|T], '%' comments.
// Clauses end with '.', bodies are comma conjunctions. Tabling is
// declared with ':- table name/arity as variant|subsumptive|retroactive.'
// (':- use_retrosubsumptive_tabling name/arity.' is accepted as an alias
// for the retroactive mode).

struct ParseError : std::runtime_error {
    ParseError(std::string msg, int line, int column)
        : std::runtime_error("line " + std::to_string(line) + ", column " +
                             std::to_string(column) + ": " + msg),
          line(line),
          column(column) {}
    int line;
    int column;
};

Program parse_program(std::string_view text);

// A single term; named variables are numbered by first occurrence.
struct ParsedGoals {
    TermTuple goals;
    std::vector<std::string> var_names;  // index i names variable i
};
TermPtr parse_term(std::string_view text, SymbolTable& syms);
// A comma-separated conjunction, e.g. a query "p(X,1), q(X,Y)".
ParsedGoals parse_goals(std::string_view text, SymbolTable& syms);

// Canonical textual form; inverse of parse_term for variable-free names.
// Variables print as _0, _1, ... by index; lists use bracket sugar.
std::string write_term(const TermPtr& t, const SymbolTable& syms);
std::string write_tuple(std::span<const TermPtr> ts, const SymbolTable& syms);

}  // namespace retrotab

#endif
