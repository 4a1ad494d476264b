#include "retrotab/parser.hpp"

#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <sstream>

namespace retrotab {

const char* eval_mode_name(EvalMode m) {
    switch (m) {
        case EvalMode::Variant: return "variant";
        case EvalMode::Subsumptive: return "subsumptive";
        case EvalMode::Retroactive: return "retroactive";
    }
    return "?";
}

void Program::add_clause(const TermPtr& head, TermTuple body) {
    if (!head->is_atom() && !head->is_compound())
        throw std::invalid_argument("clause head must be an atom or compound");
    TermTuple all;
    all.reserve(body.size() + 1);
    all.push_back(head);
    for (auto& g : body) all.push_back(std::move(g));
    TermTuple canon = canonicalize_tuple(all);
    Clause c;
    c.head = canon.front();
    c.body.assign(canon.begin() + 1, canon.end());
    c.nvars = tuple_var_ceiling(canon);
    defined.insert(pred_key(c.head->symbol(), c.head->arity()));
    clauses.push_back(std::move(c));
}

void Program::declare_tabled(uint32_t sym, uint32_t arity, EvalMode mode) {
    tabled[pred_key(sym, arity)] = mode;
    defined.insert(pred_key(sym, arity));
}

namespace {

// Integers are later packed into 61-bit trie symbols; reject anything
// that would not round-trip.
constexpr int64_t kMaxInt = (int64_t{1} << 60) - 1;

struct Token {
    enum Kind {
        Atom, Var, Int, LParen, RParen, LBracket, RBracket, Comma, Bar,
        Slash, Dot, Neck,  // ':-'
        End
    } kind;
    std::string text;
    int64_t value = 0;
    int line = 1;
    int col = 1;
};

class Lexer {
public:
    explicit Lexer(std::string_view text) : text_(text) { advance(); }

    const Token& peek() const { return tok_; }
    Token take() {
        Token t = tok_;
        advance();
        return t;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(msg, tok_.line, tok_.col);
    }

private:
    void advance() {
        skip_space();
        tok_.line = line_;
        tok_.col = col_;
        if (pos_ >= text_.size()) {
            tok_.kind = Token::End;
            tok_.text.clear();
            return;
        }
        char c = text_[pos_];
        switch (c) {
            case '(': single(Token::LParen); return;
            case ')': single(Token::RParen); return;
            case '[': single(Token::LBracket); return;
            case ']': single(Token::RBracket); return;
            case ',': single(Token::Comma); return;
            case '|': single(Token::Bar); return;
            case '/': single(Token::Slash); return;
            case '.': single(Token::Dot); return;
            default: break;
        }
        if (c == ':' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '-') {
            tok_.kind = Token::Neck;
            tok_.text = ":-";
            bump();
            bump();
            return;
        }
        if (c == '-' || std::isdigit(static_cast<unsigned char>(c))) {
            lex_int();
            return;
        }
        if (c == '_' || std::isupper(static_cast<unsigned char>(c))) {
            lex_name(Token::Var);
            return;
        }
        if (std::islower(static_cast<unsigned char>(c))) {
            lex_name(Token::Atom);
            return;
        }
        throw ParseError(std::string("unexpected character '") + c + "'", line_, col_);
    }

    void single(Token::Kind k) {
        tok_.kind = k;
        tok_.text = text_[pos_];
        bump();
    }

    void lex_int() {
        size_t start = pos_;
        int line = line_, col = col_;
        if (text_[pos_] == '-') {
            bump();
            if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_])))
                throw ParseError("expected digits after '-'", line, col);
        }
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) bump();
        tok_.kind = Token::Int;
        tok_.text = std::string(text_.substr(start, pos_ - start));
        errno = 0;
        char* end = nullptr;
        long long v = std::strtoll(tok_.text.c_str(), &end, 10);
        if (errno != 0 || v > kMaxInt || v < -kMaxInt)
            throw ParseError("integer out of range: " + tok_.text, line, col);
        tok_.value = v;
    }

    void lex_name(Token::Kind k) {
        size_t start = pos_;
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (c == '_' || std::isalnum(static_cast<unsigned char>(c)))
                bump();
            else
                break;
        }
        tok_.kind = k;
        tok_.text = std::string(text_.substr(start, pos_ - start));
    }

    void skip_space() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (c == '%') {
                while (pos_ < text_.size() && text_[pos_] != '\n') bump();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                bump();
            } else {
                break;
            }
        }
    }

    void bump() {
        if (text_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    std::string_view text_;
    size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
    Token tok_;
};

class TermReader {
public:
    TermReader(Lexer& lex, SymbolTable& syms) : lex_(lex), syms_(syms) {}

    TermPtr term() {
        const Token& t = lex_.peek();
        switch (t.kind) {
            case Token::Int: {
                Token tk = lex_.take();
                return Term::integer(tk.value);
            }
            case Token::Var: {
                Token tk = lex_.take();
                return variable(tk.text);
            }
            case Token::Atom: {
                Token tk = lex_.take();
                uint32_t sym = syms_.intern(tk.text);
                if (lex_.peek().kind == Token::LParen) {
                    lex_.take();
                    TermTuple args;
                    args.push_back(term());
                    while (lex_.peek().kind == Token::Comma) {
                        lex_.take();
                        args.push_back(term());
                    }
                    expect(Token::RParen, "')'");
                    return Term::compound(sym, std::move(args));
                }
                return Term::atom(sym);
            }
            case Token::LBracket:
                return list();
            default:
                lex_.fail("expected a term, found '" + t.text + "'");
        }
    }

    // Variables are numbered by first occurrence within a clause or goal;
    // '_' is always fresh.
    TermPtr variable(const std::string& name) {
        if (name == "_") {
            uint32_t idx = next_var_++;
            var_names_.push_back("_");
            return Term::var(idx);
        }
        auto it = var_ids_.find(name);
        if (it != var_ids_.end()) return Term::var(it->second);
        uint32_t idx = next_var_++;
        var_ids_.emplace(name, idx);
        var_names_.push_back(name);
        return Term::var(idx);
    }

    TermPtr list() {
        expect(Token::LBracket, "'['");
        uint32_t nil = syms_.intern("[]");
        uint32_t cons = syms_.intern(".");
        if (lex_.peek().kind == Token::RBracket) {
            lex_.take();
            return Term::atom(nil);
        }
        TermTuple items;
        items.push_back(term());
        while (lex_.peek().kind == Token::Comma) {
            lex_.take();
            items.push_back(term());
        }
        TermPtr tail;
        if (lex_.peek().kind == Token::Bar) {
            lex_.take();
            tail = term();
        } else {
            tail = Term::atom(nil);
        }
        expect(Token::RBracket, "']'");
        for (auto it = items.rbegin(); it != items.rend(); ++it)
            tail = Term::compound(cons, {*it, tail});
        return tail;
    }

    void expect(Token::Kind k, const char* what) {
        if (lex_.peek().kind != k)
            lex_.fail(std::string("expected ") + what + ", found '" + lex_.peek().text + "'");
        lex_.take();
    }

    void reset_vars() {
        var_ids_.clear();
        var_names_.clear();
        next_var_ = 0;
    }

    const std::vector<std::string>& var_names() const { return var_names_; }

    Lexer& lex_;
    SymbolTable& syms_;
    std::unordered_map<std::string, uint32_t> var_ids_;
    std::vector<std::string> var_names_;
    uint32_t next_var_ = 0;
};

EvalMode mode_from_name(const std::string& name, Lexer& lex) {
    if (name == "variant") return EvalMode::Variant;
    if (name == "subsumptive") return EvalMode::Subsumptive;
    if (name == "retroactive") return EvalMode::Retroactive;
    lex.fail("unknown tabling mode '" + name + "'");
}

// ':- table name/arity as <mode>.'
// ':- use_retrosubsumptive_tabling name/arity.'   (retroactive)
void read_directive(Lexer& lex, TermReader& reader, Program& prog) {
    lex.take();  // ':-'
    if (lex.peek().kind != Token::Atom) lex.fail("expected a directive name");
    Token name = lex.take();
    bool is_table = name.text == "table";
    bool is_retro_alias = name.text == "use_retrosubsumptive_tabling";
    if (!is_table && !is_retro_alias) lex.fail("unknown directive '" + name.text + "'");

    if (lex.peek().kind != Token::Atom) lex.fail("expected predicate name");
    Token pred = lex.take();
    reader.expect(Token::Slash, "'/'");
    if (lex.peek().kind != Token::Int) lex.fail("expected arity");
    Token ar = lex.take();
    if (ar.value < 0 || ar.value > 255)
        throw ParseError("arity out of range: " + ar.text, ar.line, ar.col);

    EvalMode mode = EvalMode::Retroactive;
    if (is_table) {
        if (lex.peek().kind != Token::Atom || lex.peek().text != "as")
            lex.fail("expected 'as <mode>' in table directive");
        lex.take();
        if (lex.peek().kind != Token::Atom) lex.fail("expected tabling mode");
        Token m = lex.take();
        mode = mode_from_name(m.text, lex);
    }
    reader.expect(Token::Dot, "'.' at end of directive");
    prog.declare_tabled(prog.syms->intern(pred.text), static_cast<uint32_t>(ar.value), mode);
}

}  // namespace

TermPtr parse_term(std::string_view text, SymbolTable& syms) {
    Lexer lex(text);
    TermReader reader(lex, syms);
    TermPtr t = reader.term();
    if (lex.peek().kind == Token::Dot) lex.take();
    if (lex.peek().kind != Token::End) lex.fail("trailing input after term");
    return t;
}

ParsedGoals parse_goals(std::string_view text, SymbolTable& syms) {
    Lexer lex(text);
    TermReader reader(lex, syms);
    ParsedGoals out;
    out.goals.push_back(reader.term());
    while (lex.peek().kind == Token::Comma) {
        lex.take();
        out.goals.push_back(reader.term());
    }
    if (lex.peek().kind == Token::Dot) lex.take();
    if (lex.peek().kind != Token::End) lex.fail("trailing input after goal");
    out.var_names = reader.var_names();
    return out;
}

Program parse_program(std::string_view text) {
    Program prog;
    Lexer lex(text);
    TermReader reader(lex, *prog.syms);
    while (lex.peek().kind != Token::End) {
        reader.reset_vars();
        if (lex.peek().kind == Token::Neck) {
            read_directive(lex, reader, prog);
            continue;
        }
        int head_line = lex.peek().line;
        int head_col = lex.peek().col;
        TermPtr head = reader.term();
        if (!head->is_atom() && !head->is_compound())
            throw ParseError("clause head must be an atom or a compound term", head_line,
                             head_col);
        TermTuple body;
        if (lex.peek().kind == Token::Neck) {
            lex.take();
            body.push_back(reader.term());
            while (lex.peek().kind == Token::Comma) {
                lex.take();
                body.push_back(reader.term());
            }
        }
        reader.expect(Token::Dot, "'.' at end of clause");
        prog.add_clause(head, std::move(body));
    }
    return prog;
}

namespace {

void write_rec(std::ostringstream& os, const TermPtr& t, const SymbolTable& syms,
               int nil, int cons) {
    switch (t->kind()) {
        case TermKind::Var:
            os << '_' << t->var_index();
            return;
        case TermKind::Int:
            os << t->int_value();
            return;
        case TermKind::Atom:
            os << syms.name(t->symbol());
            return;
        case TermKind::Compound: {
            if (static_cast<int>(t->symbol()) == cons && t->arity() == 2) {
                os << '[';
                write_rec(os, t->args()[0], syms, nil, cons);
                TermPtr tail = t->args()[1];
                while (tail->is_compound() && static_cast<int>(tail->symbol()) == cons &&
                       tail->arity() == 2) {
                    os << ',';
                    write_rec(os, tail->args()[0], syms, nil, cons);
                    tail = tail->args()[1];
                }
                if (!(tail->is_atom() && static_cast<int>(tail->symbol()) == nil)) {
                    os << '|';
                    write_rec(os, tail, syms, nil, cons);
                }
                os << ']';
                return;
            }
            os << syms.name(t->symbol()) << '(';
            for (uint32_t i = 0; i < t->arity(); ++i) {
                if (i) os << ',';
                write_rec(os, t->args()[i], syms, nil, cons);
            }
            os << ')';
            return;
        }
    }
}

}  // namespace

std::string write_term(const TermPtr& t, const SymbolTable& syms) {
    std::ostringstream os;
    write_rec(os, t, syms, syms.find("[]"), syms.find("."));
    return os.str();
}

std::string write_tuple(std::span<const TermPtr> ts, const SymbolTable& syms) {
    std::ostringstream os;
    int nil = syms.find("[]");
    int cons = syms.find(".");
    os << '<';
    for (size_t i = 0; i < ts.size(); ++i) {
        if (i) os << ',';
        write_rec(os, ts[i], syms, nil, cons);
    }
    os << '>';
    return os.str();
}

}  // namespace retrotab
