#pragma once

#include <cctype>
#include <sstream>
#include <stdexcept>

#include "sizedcost/term.hpp"

namespace sizedcost {

struct ParseError : std::runtime_error {
  int line, col;
  ParseError(int l, int c, const std::string& msg)
      : std::runtime_error("line " + std::to_string(l) + ", column " +
                           std::to_string(c) + ": " + msg),
        line(l),
        col(c) {}
};

namespace detail {

struct Token {
  enum class K { Atom, Var, Int, Punct, ClauseEnd, End };
  K k;
  std::string text;
  long long num = 0;
  int line = 1, col = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) { advance(); }

  const Token& peek() const { return tok_; }
  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  static bool symch(char c) {
    return std::string("+-*/\\^<>=~:.?@#&$").find(c) != std::string::npos;
  }

  void advance() {
    skip_layout();
    tok_.line = line_;
    tok_.col = col_;
    if (pos_ >= src_.size()) {
      tok_.k = Token::K::End;
      tok_.text = "<eof>";
      return;
    }
    char c = src_[pos_];
    if (std::isdigit((unsigned char)c)) {
      size_t start = pos_;
      while (pos_ < src_.size() && std::isdigit((unsigned char)src_[pos_])) bump();
      tok_.k = Token::K::Int;
      tok_.text = src_.substr(start, pos_ - start);
      tok_.num = std::stoll(tok_.text);
      return;
    }
    if (std::isupper((unsigned char)c) || c == '_') {
      size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum((unsigned char)src_[pos_]) || src_[pos_] == '_'))
        bump();
      tok_.k = Token::K::Var;
      tok_.text = src_.substr(start, pos_ - start);
      return;
    }
    if (std::islower((unsigned char)c)) {
      size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum((unsigned char)src_[pos_]) || src_[pos_] == '_'))
        bump();
      tok_.k = Token::K::Atom;
      tok_.text = src_.substr(start, pos_ - start);
      return;
    }
    if (c == '\'') {
      bump();
      size_t start = pos_;
      while (pos_ < src_.size() && src_[pos_] != '\'') bump();
      if (pos_ >= src_.size())
        throw ParseError(line_, col_, "unterminated quoted atom");
      tok_.k = Token::K::Atom;
      tok_.text = src_.substr(start, pos_ - start);
      bump();
      return;
    }
    if (std::string("()[],|!;").find(c) != std::string::npos) {
      tok_.k = Token::K::Punct;
      tok_.text = std::string(1, c);
      bump();
      return;
    }
    if (symch(c)) {
      // '.' followed by layout or EOF ends a clause
      if (c == '.' &&
          (pos_ + 1 >= src_.size() ||
           std::isspace((unsigned char)src_[pos_ + 1]) || src_[pos_ + 1] == '%')) {
        tok_.k = Token::K::ClauseEnd;
        tok_.text = ".";
        bump();
        return;
      }
      size_t start = pos_;
      while (pos_ < src_.size() && symch(src_[pos_])) {
        if (src_[pos_] == '.' &&
            (pos_ + 1 >= src_.size() ||
             std::isspace((unsigned char)src_[pos_ + 1])))
          break;
        bump();
      }
      tok_.k = Token::K::Atom;
      tok_.text = src_.substr(start, pos_ - start);
      return;
    }
    throw ParseError(line_, col_, std::string("unexpected character '") + c + "'");
  }

  void skip_layout() {
    for (;;) {
      while (pos_ < src_.size() && std::isspace((unsigned char)src_[pos_])) bump();
      if (pos_ < src_.size() && src_[pos_] == '%') {
        while (pos_ < src_.size() && src_[pos_] != '\n') bump();
        continue;
      }
      break;
    }
  }

  void bump() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  const std::string& src_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  Token tok_;
};

class Parser {
 public:
  explicit Parser(const std::string& src) : lex_(src) {}

  // Parses the whole source into the program; directives are dispatched
  // into assertions/type rules/resources.
  Program parse_program() {
    Program p;
    p.resources.push_back(steps_resource());
    int clause_counter = 0;
    while (lex_.peek().k != Token::K::End) {
      const Token& t = lex_.peek();
      if (t.k == Token::K::Atom && t.text == ":-") {
        lex_.take();
        Term d = parse_term(1200);
        expect_clause_end();
        handle_directive(p, d, t.line, t.col);
        continue;
      }
      int line = t.line;
      Term head = parse_term(1200);
      std::vector<Term> body;
      if (lex_.peek().k == Token::K::Atom && lex_.peek().text == ":-") {
        lex_.take();
        body = parse_conjunction();
      }
      expect_clause_end();
      if (!head.is_comp())
        throw ParseError(line, 1, "clause head must be an atom or compound");
      Clause c;
      c.head = head;
      c.body = body;
      c.clause_id = clause_counter++;
      c.line = line;
      rename_apart(c);
      std::string key = c.head.functor_key();
      if (!p.predicates.count(key)) p.pred_order.push_back(key);
      p.predicates[key].push_back(std::move(c));
    }
    return p;
  }

  std::vector<ResourceDef> parse_resource_defs() {
    Program p = parse_program();
    // drop the implicit steps resource unless the file redefined it
    std::vector<ResourceDef> out(p.resources.begin() + 1, p.resources.end());
    return out;
  }

 private:
  std::vector<Term> parse_conjunction() {
    std::vector<Term> goals;
    for (;;) {
      Term g = parse_term(999);
      check_supported_goal(g);
      goals.push_back(std::move(g));
      if (lex_.peek().k == Token::K::Punct && lex_.peek().text == ",") {
        lex_.take();
        continue;
      }
      break;
    }
    return goals;
  }

  void check_supported_goal(const Term& g) {
    if (g.is_atom("!"))
      throw ParseError(lex_.peek().line, lex_.peek().col,
                       "unsupported construct: cut");
    if (g.is_comp() && (g.name == ";" || g.name == "->" || g.name == "\\+"))
      throw ParseError(lex_.peek().line, lex_.peek().col,
                       "unsupported construct: " + g.name);
    if (!g.is_comp())
      throw ParseError(lex_.peek().line, lex_.peek().col,
                       "body literal must be a compound or atom");
  }

  struct OpInfo {
    int prec;
    bool left_assoc;
  };

  static const OpInfo* infix_op(const std::string& a) {
    static const std::map<std::string, OpInfo> ops = {
        {"is", {700, false}},  {"<", {700, false}},   {">", {700, false}},
        {"=<", {700, false}},  {">=", {700, false}},  {"=:=", {700, false}},
        {"=\\=", {700, false}}, {"=", {700, false}},
        {"+", {500, true}},    {"-", {500, true}},
        {"*", {400, true}},    {"//", {400, true}},   {"/", {400, true}},
        {"mod", {400, true}},
    };
    auto it = ops.find(a);
    return it == ops.end() ? nullptr : &it->second;
  }

  Term parse_term(int max_prec) {
    Term left = parse_primary();
    for (;;) {
      const Token& t = lex_.peek();
      if (t.k != Token::K::Atom) break;
      const OpInfo* op = infix_op(t.text);
      if (!op || op->prec > max_prec) break;
      std::string name = t.text;
      lex_.take();
      Term right = parse_term(op->left_assoc ? op->prec - 1 : op->prec - 1);
      left = mk_comp(name, {std::move(left), std::move(right)});
    }
    return left;
  }

  Term parse_primary() {
    Token t = lex_.take();
    switch (t.k) {
      case Token::K::Int:
        return mk_num(t.num);
      case Token::K::Var:
        return mk_var(t.text);
      case Token::K::Punct:
        if (t.text == "(") {
          Term inner = parse_term(1200);
          expect_punct(")");
          return inner;
        }
        if (t.text == "[") return parse_list();
        if (t.text == "!")
          throw ParseError(t.line, t.col, "unsupported construct: cut");
        if (t.text == ";")
          throw ParseError(t.line, t.col, "unsupported construct: disjunction");
        throw ParseError(t.line, t.col, "unexpected '" + t.text + "'");
      case Token::K::Atom: {
        if (t.text == "-" &&
            (lex_.peek().k == Token::K::Int)) {  // negative literal
          Token n = lex_.take();
          return mk_num(-n.num);
        }
        if (lex_.peek().k == Token::K::Punct && lex_.peek().text == "(") {
          lex_.take();
          std::vector<Term> args;
          for (;;) {
            args.push_back(parse_term(999));
            if (lex_.peek().k == Token::K::Punct && lex_.peek().text == ",") {
              lex_.take();
              continue;
            }
            break;
          }
          expect_punct(")");
          return mk_comp(t.text, std::move(args));
        }
        return mk_atom(t.text);
      }
      case Token::K::ClauseEnd:
      case Token::K::End:
        throw ParseError(t.line, t.col, "unexpected end of clause; expected a term");
    }
    throw ParseError(t.line, t.col, "unexpected token");
  }

  Term parse_list() {
    if (lex_.peek().k == Token::K::Punct && lex_.peek().text == "]") {
      lex_.take();
      return mk_nil();
    }
    std::vector<Term> items;
    Term tail = mk_nil();
    for (;;) {
      items.push_back(parse_term(999));
      if (lex_.peek().k == Token::K::Punct && lex_.peek().text == ",") {
        lex_.take();
        continue;
      }
      if (lex_.peek().k == Token::K::Punct && lex_.peek().text == "|") {
        lex_.take();
        tail = parse_term(999);
      }
      break;
    }
    expect_punct("]");
    Term t = tail;
    for (auto it = items.rbegin(); it != items.rend(); ++it)
      t = mk_cons(*it, t);
    return t;
  }

  void expect_punct(const std::string& s) {
    Token t = lex_.take();
    if (t.k != Token::K::Punct || t.text != s)
      throw ParseError(t.line, t.col, "expected '" + s + "', found '" + t.text + "'");
  }

  void expect_clause_end() {
    Token t = lex_.take();
    if (t.k != Token::K::ClauseEnd)
      throw ParseError(t.line, t.col, "expected '.' at end of clause, found '" +
                                          t.text + "'");
  }

  // Each clause's variables get program-unique names; '_' occurrences are
  // all distinct.
  void rename_apart(Clause& c) {
    std::map<std::string, std::string> seen;
    int anon = 0;
    auto rename = [&](Term& t, auto&& self) -> void {
      if (t.is_var()) {
        if (t.name == "_") {
          t.name = "_G" + std::to_string(c.clause_id) + "_" + std::to_string(anon++);
          return;
        }
        auto it = seen.find(t.name);
        if (it == seen.end()) {
          // strip any prior clause suffix so renaming is idempotent
          std::string base = t.name;
          size_t cut = base.rfind("_c");
          if (cut != std::string::npos && cut + 2 < base.size() &&
              base.find_first_not_of("0123456789", cut + 2) == std::string::npos)
            base = base.substr(0, cut);
          std::string fresh = base + "_c" + std::to_string(c.clause_id);
          seen.emplace(t.name, fresh);
          t.name = fresh;
        } else {
          t.name = it->second;
        }
        return;
      }
      for (auto& a : t.args) self(a, self);
    };
    rename(c.head, rename);
    for (auto& g : c.body) rename(g, rename);
  }

  // ---- directives ----

  void handle_directive(Program& p, const Term& d, int line, int col) {
    if (!d.is_comp()) throw ParseError(line, col, "malformed directive");
    const std::string& f = d.name;
    if (f == "entry" && d.args.size() == 2) {
      p.entries.push_back(parse_entry(d, line, col, p));
      return;
    }
    if (f == "type" && d.args.size() == 2) {
      if (!d.args[0].is_atom())
        throw ParseError(line, col, "type symbol must be an atom");
      p.type_rules[d.args[0].name].push_back(d.args[1]);
      return;
    }
    if (f == "trust_nf" && d.args.size() == 2) {
      p.trust_nf[pred_spec(d.args[0], line, col)] =
          expect_flag(d.args[1], "not_fails", "fails", line, col);
      return;
    }
    if (f == "trust_det" && d.args.size() == 2) {
      p.trust_det[pred_spec(d.args[0], line, col)] =
          expect_flag(d.args[1], "is_det", "non_det", line, col);
      return;
    }
    if (f == "resource" && d.args.size() == 1) {
      ResourceDef r;
      r.name = atom_name(d.args[0], line, col);
      r.upper_agg = Agg::Sum;
      r.lower_agg = Agg::Min;
      p.resources.push_back(std::move(r));
      return;
    }
    if ((f == "head_cost" || f == "literal_cost") && d.args.size() == 3) {
      ResourceDef& r = find_resource(p, atom_name(d.args[0], line, col), line, col);
      ResourceDef::CostEntry e;
      if (!d.args[1].is_var()) e.pred = pred_spec(d.args[1], line, col);
      e.cost = rational_of(d.args[2], line, col);
      if (e.cost.sign() < 0)
        throw ParseError(line, col, "negative cost literal");
      (f == "head_cost" ? r.head_costs : r.literal_costs).push_back(std::move(e));
      return;
    }
    if (f == "aggregation" && d.args.size() == 3) {
      ResourceDef& r = find_resource(p, atom_name(d.args[0], line, col), line, col);
      r.upper_agg = agg_of(d.args[1], line, col);
      r.lower_agg = agg_of(d.args[2], line, col);
      return;
    }
    if (f == "default" && d.args.size() == 3) {
      ResourceDef& r = find_resource(p, atom_name(d.args[0], line, col), line, col);
      r.default_lower = rational_of(d.args[1], line, col);
      r.default_upper = rational_of(d.args[2], line, col);
      if (r.default_upper < r.default_lower)
        throw ParseError(line, col, "lower default exceeds upper");
      return;
    }
    throw ParseError(line, col, "unknown directive: " + d.functor_key());
  }

  EntryAssertion parse_entry(const Term& d, int line, int col, Program& p) {
    EntryAssertion e;
    e.pred = pred_spec(d.args[0], line, col);
    e.line = line;
    const Term* spec = &d.args[1];
    while (spec->is_cons()) {
      const Term& a = spec->args[0];
      if (!a.is_comp() || a.args.size() != 1 ||
          (a.name != "in" && a.name != "out"))
        throw ParseError(line, col, "entry argument spec must be in(T) or out(T)");
      EntryArgSpec s;
      s.mode = a.name == "in" ? ArgMode::Input : ArgMode::Output;
      s.type_name = atom_name(a.args[0], line, col);
      e.args.push_back(std::move(s));
      spec = &spec->args[1];
    }
    if (!spec->is_nil())
      throw ParseError(line, col, "entry argument specs must form a proper list");
    size_t arity = std::stoul(e.pred.substr(e.pred.find('/') + 1));
    if (e.args.size() != arity)
      throw ParseError(line, col, "entry assertion covers " +
                                      std::to_string(e.args.size()) + " of " +
                                      std::to_string(arity) + " arguments");
    return e;
  }

  static std::string atom_name(const Term& t, int line, int col) {
    if (!t.is_atom()) throw ParseError(line, col, "expected an atom");
    return t.name;
  }

  static std::string pred_spec(const Term& t, int line, int col) {
    if (t.is_comp() && t.name == "/" && t.args.size() == 2 &&
        t.args[0].is_atom() && t.args[1].is_num())
      return t.args[0].name + "/" + std::to_string(t.args[1].num);
    throw ParseError(line, col, "expected name/arity");
  }

  static bool expect_flag(const Term& t, const std::string& yes,
                          const std::string& no, int line, int col) {
    if (t.is_atom(yes)) return true;
    if (t.is_atom(no)) return false;
    throw ParseError(line, col, "expected " + yes + " or " + no);
  }

  static Rat rational_of(const Term& t, int line, int col) {
    if (t.is_num()) return Rat(t.num);
    if (t.is_atom("inf")) return Rat::inf();
    if (t.is_comp() && t.name == "/" && t.args.size() == 2 && t.args[0].is_num() &&
        t.args[1].is_num())
      return Rat(t.args[0].num, t.args[1].num);
    throw ParseError(line, col, "expected a rational or inf");
  }

  static Agg agg_of(const Term& t, int line, int col) {
    if (t.is_atom("sum")) return Agg::Sum;
    if (t.is_atom("min")) return Agg::Min;
    if (t.is_atom("max")) return Agg::Max;
    throw ParseError(line, col, "unknown aggregation name: " + term_to_string(t));
  }

  static ResourceDef& find_resource(Program& p, const std::string& name, int line,
                                    int col) {
    for (auto& r : p.resources)
      if (r.name == name) return r;
    throw ParseError(line, col, "resource not declared: " + name);
  }

  Lexer lex_;
};

}  // namespace detail

inline Program parse_program(const std::string& text) {
  detail::Parser p(text);
  return p.parse_program();
}

inline std::vector<ResourceDef> parse_resource_defs(const std::string& text) {
  detail::Parser p(text);
  return p.parse_resource_defs();
}

// Empty result means the program is closed: every called predicate is
// defined, builtin, or trusted, and entry assertions are well-formed.
inline std::vector<std::string> validate_program(const Program& p) {
  std::vector<std::string> diags;
  for (auto& key : p.pred_order) {
    for (auto& c : p.predicates.at(key)) {
      for (auto& g : c.body) {
        std::string gk = g.functor_key();
        if (p.predicates.count(gk) || is_builtin(gk)) continue;
        if (p.trust_nf.count(gk) || p.trust_det.count(gk)) continue;
        diags.push_back("undefined predicate " + gk + " called from " + key +
                        " (line " + std::to_string(c.line) + ")");
      }
    }
  }
  for (auto& e : p.entries) {
    for (auto& a : e.args) {
      if (a.type_name == "num") continue;
      if (!p.type_rules.count(a.type_name))
        diags.push_back("undefined type symbol " + a.type_name +
                        " in entry assertion for " + e.pred);
    }
    if (!p.predicates.count(e.pred))
      diags.push_back("entry assertion for undefined predicate " + e.pred);
  }
  return diags;
}

}  // namespace sizedcost
