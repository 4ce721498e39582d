#include <angerona/ast.hpp>

#include <cctype>
#include <sstream>

namespace angerona {

std::optional<Rat> parse_rational(const std::string& text) {
  if (text.empty()) return std::nullopt;
  auto slash = text.find('/');
  try {
    if (slash != std::string::npos) {
      BigInt num(text.substr(0, slash));
      BigInt den(text.substr(slash + 1));
      if (den == 0) return std::nullopt;
      return Rat(num, den);
    }
    auto dot = text.find('.');
    if (dot == std::string::npos) return Rat(BigInt(text));
    std::string digits = text.substr(0, dot) + text.substr(dot + 1);
    size_t frac_len = text.size() - dot - 1;
    if (digits.empty() || frac_len == 0) return std::nullopt;
    BigInt num(digits);
    BigInt den = 1;
    for (size_t i = 0; i < frac_len; ++i) den *= 10;
    return Rat(num, den);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::string rat_to_string(const Rat& r) {
  if (denominator(r) == 1) return numerator(r).str();
  return numerator(r).str() + "/" + denominator(r).str();
}

std::string rat_to_decimal_string(const Rat& r) {
  BigInt den = denominator(r);
  int twos = 0, fives = 0;
  while (den % 2 == 0) { den /= 2; ++twos; }
  while (den % 5 == 0) { den /= 5; ++fives; }
  if (den != 1) return rat_to_string(r);
  int shift = std::max(twos, fives);
  BigInt scaled = numerator(r);
  for (int i = 0; i < shift - twos; ++i) scaled *= 2;
  for (int i = 0; i < shift - fives; ++i) scaled *= 5;
  bool neg = scaled < 0;
  if (neg) scaled = -scaled;
  std::string s = scaled.str();
  std::string out;
  if (shift == 0) {
    out = s;
  } else {
    while ((int)s.size() <= shift) s.insert(s.begin(), '0');
    out = s.substr(0, s.size() - shift) + "." + s.substr(s.size() - shift);
  }
  return neg ? "-" + out : out;
}

double rat_to_double(const Rat& r) { return r.convert_to<double>(); }

Term mk_var(std::string name) { return Term{Term::Kind::Variable, std::move(name)}; }
Term mk_const(std::string name) { return Term{Term::Kind::Constant, std::move(name)}; }

bool Atom::ground() const {
  for (const auto& t : args)
    if (t.is_var()) return false;
  return true;
}

std::string to_string(const Atom& a) {
  if (a.args.empty()) return a.pred;
  std::string s = a.pred + "(";
  for (size_t i = 0; i < a.args.size(); ++i) {
    if (i) s += ",";
    s += a.args[i].name;
  }
  return s + ")";
}

std::string to_string(const GroundAtom& a) {
  if (a.args.empty()) return a.pred;
  std::string s = a.pred + "(";
  for (size_t i = 0; i < a.args.size(); ++i) {
    if (i) s += ",";
    s += a.args[i];
  }
  return s + ")";
}

GroundAtom to_ground(const Atom& a) {
  GroundAtom g;
  g.pred = a.pred;
  g.args.reserve(a.args.size());
  for (const auto& t : a.args) g.args.push_back(t.name);
  return g;
}

Atom to_atom(const GroundAtom& a) {
  Atom out;
  out.pred = a.pred;
  out.args.reserve(a.args.size());
  for (const auto& v : a.args) out.args.push_back(mk_const(v));
  return out;
}

std::set<std::string> vars_of(const Atom& a) {
  std::set<std::string> out;
  for (const auto& t : a.args)
    if (t.is_var()) out.insert(t.name);
  return out;
}

std::set<std::string> vars_of(const Rule& r) {
  std::set<std::string> out = vars_of(r.head);
  for (const auto& l : r.body)
    for (const auto& t : l.atom.args)
      if (t.is_var()) out.insert(t.name);
  for (const auto& c : r.cstr) {
    if (c.lhs.is_var()) out.insert(c.lhs.name);
    if (c.rhs.is_var()) out.insert(c.rhs.name);
  }
  return out;
}

namespace {

struct Token {
  enum class Kind { Ident, Var, Int, Decimal, Str, Punct, End };
  Kind kind;
  std::string text;
  int line;
  int col;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) { next(); }

  const Token& peek() const { return tok_; }

  Token take() {
    Token t = tok_;
    next();
    return t;
  }

 private:
  void next() {
    skip_ws();
    tok_.line = line_;
    tok_.col = col_;
    if (pos_ >= src_.size()) {
      tok_ = {Token::Kind::End, "", line_, col_};
      return;
    }
    char c = src_[pos_];
    if (std::isdigit((unsigned char)c)) {
      std::string num;
      bool dec = false;
      while (pos_ < src_.size() &&
             (std::isdigit((unsigned char)src_[pos_]) ||
              (!dec && src_[pos_] == '.' && pos_ + 1 < src_.size() &&
               std::isdigit((unsigned char)src_[pos_ + 1])))) {
        if (src_[pos_] == '.') dec = true;
        num += advance();
      }
      tok_ = {dec ? Token::Kind::Decimal : Token::Kind::Int, num, tok_.line, tok_.col};
      return;
    }
    if (std::isalpha((unsigned char)c) || c == '_') {
      std::string id;
      while (pos_ < src_.size() &&
             (std::isalnum((unsigned char)src_[pos_]) || src_[pos_] == '_'))
        id += advance();
      bool var = std::isupper((unsigned char)id[0]) || id[0] == '_';
      tok_ = {var ? Token::Kind::Var : Token::Kind::Ident, id, tok_.line, tok_.col};
      return;
    }
    if (c == '\'') {
      advance();
      std::string s;
      while (pos_ < src_.size() && src_[pos_] != '\'') s += advance();
      if (pos_ >= src_.size())
        throw ParseError("unterminated quoted constant", tok_.line, tok_.col);
      advance();
      tok_ = {Token::Kind::Str, s, tok_.line, tok_.col};
      return;
    }
    // Multi-char punctuation first.
    static const char* two[] = {"::", ":-", "\\+", "\\="};
    for (const char* p : two) {
      if (src_.compare(pos_, 2, p) == 0) {
        advance();
        advance();
        tok_ = {Token::Kind::Punct, p, tok_.line, tok_.col};
        return;
      }
    }
    advance();
    tok_ = {Token::Kind::Punct, std::string(1, c), tok_.line, tok_.col};
  }

  void skip_ws() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '%') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (std::isspace((unsigned char)c)) {
        advance();
      } else {
        break;
      }
    }
  }

  char advance() {
    char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  const std::string& src_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
  Token tok_;
};

void register_atom(Program& p, const Atom& a, int line) {
  auto [it, fresh] = p.arity.emplace(a.pred, (int)a.args.size());
  if (!fresh && it->second != (int)a.args.size())
    throw ParseError("arity mismatch for predicate " + a.pred + ": declared " +
                         std::to_string(it->second) + ", used with " +
                         std::to_string(a.args.size()),
                     line, 1);
  for (const auto& t : a.args)
    if (!t.is_var()) p.domain.insert(t.name);
}

void finalize(Program& p) {
  for (const auto& st : p.statements) {
    switch (st.kind) {
      case Statement::Kind::ProbAtom:
      case Statement::Kind::Evidence:
        register_atom(p, st.atom, st.line);
        break;
      case Statement::Kind::Disjunction:
        for (const auto& d : st.disjuncts) register_atom(p, d.atom, st.line);
        for (const auto& l : st.rule.body) register_atom(p, l.atom, st.line);
        break;
      case Statement::Kind::Rule:
        register_atom(p, st.rule.head, st.line);
        for (const auto& l : st.rule.body) register_atom(p, l.atom, st.line);
        break;
    }
    for (const auto& c : st.rule.cstr) {
      if (!c.lhs.is_var()) p.domain.insert(c.lhs.name);
      if (!c.rhs.is_var()) p.domain.insert(c.rhs.name);
    }
  }
}

class Parser {
 public:
  explicit Parser(const std::string& src) : lex_(src) {}

  Program parse() {
    Program p;
    while (lex_.peek().kind != Token::Kind::End) {
      p.statements.push_back(statement());
    }
    finalize(p);
    return p;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) {
    throw ParseError(msg, lex_.peek().line, lex_.peek().col);
  }

  void expect_punct(const std::string& s) {
    if (lex_.peek().kind != Token::Kind::Punct || lex_.peek().text != s)
      fail("expected '" + s + "'");
    lex_.take();
  }

  bool peek_punct(const std::string& s) {
    return lex_.peek().kind == Token::Kind::Punct && lex_.peek().text == s;
  }

  Statement statement() {
    Statement st;
    st.line = lex_.peek().line;
    if (lex_.peek().kind == Token::Kind::Ident && lex_.peek().text == "evidence") {
      lex_.take();
      expect_punct("(");
      st.kind = Statement::Kind::Evidence;
      st.atom = atom();
      expect_punct(",");
      Token v = lex_.take();
      if (v.kind != Token::Kind::Ident || (v.text != "true" && v.text != "false"))
        throw ParseError("evidence value must be true or false", v.line, v.col);
      st.evidence_value = v.text == "true";
      expect_punct(")");
      expect_punct(".");
      if (!st.atom.ground())
        throw ParseError("evidence atom must be ground", st.line, 1);
      return st;
    }
    // clause := annhead [":-" body]
    std::vector<Disjunct> heads;
    bool annotated = false;
    for (;;) {
      std::optional<Rat> prob;
      if (lex_.peek().kind == Token::Kind::Int || lex_.peek().kind == Token::Kind::Decimal) {
        prob = probability();
        expect_punct("::");
        annotated = true;
      }
      Atom a = atom();
      heads.push_back({prob.value_or(Rat(1)), a});
      if (peek_punct(";")) {
        lex_.take();
        if (!annotated && heads.size() == 1)
          fail("disjunction heads must be annotated");
        continue;
      }
      break;
    }
    Rule r;
    if (peek_punct(":-")) {
      lex_.take();
      body_into(r);
    }
    expect_punct(".");

    if (heads.size() > 1) {
      Rat sum = 0;
      for (const auto& d : heads) sum += d.prob;
      if (sum > 1)
        throw ParseError("annotated disjunction coefficients sum to more than 1",
                         st.line, 1);
      st.kind = Statement::Kind::Disjunction;
      st.disjuncts = heads;
      st.rule = r;  // body + constraints (may be empty)
      if (r.body.empty() && r.cstr.empty()) {
        for (const auto& d : heads)
          if (!d.atom.ground())
            throw ParseError("annotated disjunction over non-ground atoms requires a body",
                             st.line, 1);
      }
      check_head_vars(heads, r, st.line);
      return st;
    }
    if (r.body.empty() && r.cstr.empty()) {
      if (!heads[0].atom.ground())
        throw ParseError("fact must be ground: " + to_string(heads[0].atom), st.line, 1);
      st.kind = Statement::Kind::ProbAtom;
      st.prob = heads[0].prob;
      st.atom = heads[0].atom;
      return st;
    }
    st.kind = Statement::Kind::Rule;
    st.rule = r;
    st.rule.head = heads[0].atom;
    if (annotated) st.rule.annotation = heads[0].prob;
    check_head_vars(heads, r, st.line);
    return st;
  }

  void check_head_vars(const std::vector<Disjunct>& heads, const Rule& r, int line) {
    std::set<std::string> bound;
    for (const auto& l : r.body)
      if (l.positive)
        for (const auto& t : l.atom.args)
          if (t.is_var()) bound.insert(t.name);
    for (const auto& c : r.cstr)
      if (c.eq && c.lhs.is_var() && !c.rhs.is_var()) bound.insert(c.lhs.name);
    for (const auto& d : heads)
      for (const auto& t : d.atom.args)
        if (t.is_var() && !bound.count(t.name))
          throw ParseError("head variable " + t.name +
                               " not bound by a positive body literal",
                           line, 1);
  }

  void body_into(Rule& r) {
    for (;;) {
      if (peek_punct("\\+")) {
        lex_.take();
        r.body.push_back({false, atom()});
      } else if (lex_.peek().kind == Token::Kind::Var ||
                 lex_.peek().kind == Token::Kind::Int ||
                 lex_.peek().kind == Token::Kind::Str) {
        constraint_into(r);
      } else {
        // IDENT: atom, unless followed by =/\= (0-ary constants can be
        // constrained too).
        Atom a = atom();
        if (a.args.empty() && (peek_punct("=") || peek_punct("\\="))) {
          bool eq = lex_.take().text == "=";
          Term rhs = term();
          r.cstr.push_back({normalize_const(a.pred), eq, rhs});
          normalize_constraint(r.cstr.back());
        } else {
          r.body.push_back({true, a});
        }
      }
      if (peek_punct(",")) {
        lex_.take();
        continue;
      }
      break;
    }
  }

  Term normalize_const(const std::string& name) { return mk_const(name); }

  void constraint_into(Rule& r) {
    Term lhs = term();
    bool eq;
    if (peek_punct("=")) {
      lex_.take();
      eq = true;
    } else if (peek_punct("\\=")) {
      lex_.take();
      eq = false;
    } else {
      fail("expected '=' or '\\=' in constraint");
    }
    Term rhs = term();
    r.cstr.push_back({lhs, eq, rhs});
    normalize_constraint(r.cstr.back());
  }

  // Equality between a variable and a constant is kept variable-on-left.
  void normalize_constraint(Constraint& c) {
    if (c.eq && !c.lhs.is_var() && c.rhs.is_var()) std::swap(c.lhs, c.rhs);
  }

  Atom atom() {
    Token t = lex_.take();
    if (t.kind != Token::Kind::Ident)
      throw ParseError("expected predicate identifier, got '" + t.text + "'",
                       t.line, t.col);
    Atom a;
    a.pred = t.text;
    if (peek_punct("(")) {
      lex_.take();
      for (;;) {
        a.args.push_back(term());
        if (peek_punct(",")) {
          lex_.take();
          continue;
        }
        break;
      }
      expect_punct(")");
    }
    return a;
  }

  Term term() {
    Token t = lex_.take();
    switch (t.kind) {
      case Token::Kind::Var:
        return mk_var(t.text);
      case Token::Kind::Ident:
      case Token::Kind::Int:
      case Token::Kind::Str:
        return mk_const(t.text);
      default:
        throw ParseError("expected term, got '" + t.text + "'", t.line, t.col);
    }
  }

  Rat probability() {
    Token t = lex_.take();
    std::string text = t.text;
    if (t.kind == Token::Kind::Int && peek_punct("/")) {
      lex_.take();
      Token den = lex_.take();
      if (den.kind != Token::Kind::Int)
        throw ParseError("expected integer denominator", den.line, den.col);
      text += "/" + den.text;
    }
    auto r = parse_rational(text);
    if (!r) throw ParseError("malformed probability '" + text + "'", t.line, t.col);
    if (*r < 0 || *r > 1)
      throw ParseError("probability " + text + " outside [0,1]", t.line, t.col);
    return *r;
  }

  Lexer lex_;
};

}  // namespace

Program parse_program(const std::string& text) {
  Parser parser(text);
  return parser.parse();
}

namespace {

std::string print_term(const Term& t) { return t.name; }

std::string print_atom(const Atom& a) {
  std::string s = a.pred;
  if (!a.args.empty()) {
    s += "(";
    for (size_t i = 0; i < a.args.size(); ++i) {
      if (i) s += ",";
      s += print_term(a.args[i]);
    }
    s += ")";
  }
  return s;
}

std::string print_body(const Rule& r) {
  std::string s;
  bool first = true;
  for (const auto& l : r.body) {
    if (!first) s += ", ";
    first = false;
    if (!l.positive) s += "\\+ ";
    s += print_atom(l.atom);
  }
  for (const auto& c : r.cstr) {
    if (!first) s += ", ";
    first = false;
    s += print_term(c.lhs) + (c.eq ? " = " : " \\= ") + print_term(c.rhs);
  }
  return s;
}

}  // namespace

std::string print_rule(const Rule& r) {
  std::string s;
  if (r.annotation) s += rat_to_string(*r.annotation) + "::";
  s += print_atom(r.head);
  if (!r.body.empty() || !r.cstr.empty()) s += " :- " + print_body(r);
  return s;
}

std::string print_program(const Program& p) {
  std::ostringstream out;
  for (const auto& st : p.statements) {
    switch (st.kind) {
      case Statement::Kind::ProbAtom:
        if (st.prob == 1)
          out << print_atom(st.atom);
        else
          out << rat_to_string(st.prob) << "::" << print_atom(st.atom);
        break;
      case Statement::Kind::Evidence:
        out << "evidence(" << print_atom(st.atom) << ", "
            << (st.evidence_value ? "true" : "false") << ")";
        break;
      case Statement::Kind::Disjunction: {
        bool first = true;
        for (const auto& d : st.disjuncts) {
          if (!first) out << "; ";
          first = false;
          out << rat_to_string(d.prob) << "::" << print_atom(d.atom);
        }
        if (!st.rule.body.empty() || !st.rule.cstr.empty())
          out << " :- " << print_body(st.rule);
        break;
      }
      case Statement::Kind::Rule:
        out << print_rule(st.rule);
        break;
    }
    out << ".\n";
  }
  return out.str();
}

}  // namespace angerona
