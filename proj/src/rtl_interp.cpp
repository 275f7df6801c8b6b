#include "luna/rtl_interp.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <functional>
#include <unordered_map>

#include "luna/error.hpp"
#include "luna/rng.hpp"

namespace luna {

namespace {

// ---- lexer ----

enum class Tok { ident, number, symbol, end };

struct Token {
  Tok kind = Tok::end;
  std::string text;
  int line = 0;
  // sized literals
  int width = 32;
  bool is_signed = true;
  std::uint64_t value = 0;
};

std::uint64_t parse_digits(const std::string& digits, int base, int line) {
  std::uint64_t v = 0;
  for (char c : digits) {
    if (c == '_') continue;
    int d;
    if (c >= '0' && c <= '9')
      d = c - '0';
    else if (c >= 'a' && c <= 'f')
      d = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F')
      d = c - 'A' + 10;
    else
      throw ParseError(line, "bad digit '" + std::string(1, c) + "' in literal");
    if (d >= base) throw ParseError(line, "digit out of range for base");
    if (v > (~std::uint64_t{0} - static_cast<std::uint64_t>(d)) / static_cast<std::uint64_t>(base))
      throw ParseError(line, "literal exceeds 64 bits");
    v = v * static_cast<std::uint64_t>(base) + static_cast<std::uint64_t>(d);
  }
  return v;
}

std::vector<Token> lex(const std::string& src) {
  std::vector<Token> out;
  int line = 1;
  std::size_t i = 0;
  const std::size_t n = src.size();
  auto is_ident_char = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$'; };
  while (i < n) {
    const char c = src[i];
    if (c == '\n') {
      ++line;
      ++i;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '/' && i + 1 < n && src[i + 1] == '/') {
      while (i < n && src[i] != '\n') ++i;
      continue;
    }
    if (c == '/' && i + 1 < n && src[i + 1] == '*') {
      i += 2;
      while (i + 1 < n && !(src[i] == '*' && src[i + 1] == '/')) {
        if (src[i] == '\n') ++line;
        ++i;
      }
      if (i + 1 >= n) throw ParseError(line, "unterminated comment");
      i += 2;
      continue;
    }
    Token t;
    t.line = line;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$') {
      std::size_t j = i;
      while (j < n && is_ident_char(src[j])) ++j;
      t.kind = Tok::ident;
      t.text = src.substr(i, j - i);
      i = j;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < n && (std::isdigit(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      const std::string head = src.substr(i, j - i);
      t.kind = Tok::number;
      if (j < n && src[j] == '\'') {
        t.width = static_cast<int>(parse_digits(head, 10, line));
        if (t.width < 1 || t.width > 64) throw ParseError(line, "literal width must be 1..64");
        ++j;
        t.is_signed = false;
        if (j < n && (src[j] == 's' || src[j] == 'S')) {
          t.is_signed = true;
          ++j;
        }
        if (j >= n) throw ParseError(line, "truncated literal");
        int base;
        switch (std::tolower(static_cast<unsigned char>(src[j]))) {
          case 'b': base = 2; break;
          case 'o': base = 8; break;
          case 'd': base = 10; break;
          case 'h': base = 16; break;
          default: throw ParseError(line, "unknown literal base");
        }
        ++j;
        std::size_t k = j;
        while (k < n && (std::isxdigit(static_cast<unsigned char>(src[k])) || src[k] == '_')) ++k;
        if (k == j) throw ParseError(line, "empty literal");
        t.value = parse_digits(src.substr(j, k - j), base, line);
        if (t.width < 64 && (t.value >> t.width) != 0) throw ParseError(line, "literal does not fit its width");
        t.text = src.substr(i, k - i);
        j = k;
      } else {
        t.value = parse_digits(head, 10, line);
        t.text = head;
      }
      i = j;
    } else {
      t.kind = Tok::symbol;
      if (src.compare(i, 3, ">>>") == 0) {
        t.text = ">>>";
        i += 3;
      } else if (src.compare(i, 2, "<=") == 0) {
        t.text = "<=";
        i += 2;
      } else if (std::string_view("()[]{},;:=@+.").find(c) != std::string_view::npos) {
        t.text = std::string(1, c);
        ++i;
      } else {
        throw ParseError(line, "unexpected character '" + std::string(1, c) + "'");
      }
    }
    out.push_back(std::move(t));
  }
  Token e;
  e.line = line;
  out.push_back(e);
  return out;
}

// ---- syntax tree ----

struct Ast {
  enum Kind { ident, number, bitsel, partsel, concat, add, sshr, sign, call } kind = ident;
  std::string name;
  int line = 0;
  int width = 32;
  bool is_signed = true;
  std::uint64_t value = 0;
  int msb = 0, lsb = 0;
  std::vector<Ast> kids;
};

struct Decl {
  std::string name;
  int width = 1;
  bool is_signed = false;
  bool is_reg = false;
  enum Dir { none, input, output } dir = none;
  int line = 0;
};

struct Assign {
  std::string target;
  Ast expr;
  int line = 0;
};

struct Function {
  std::string name;
  int out_width = 1;
  int in_width = 1;
  std::vector<std::uint64_t> entries;
};

struct Instance {
  std::string module;
  std::string name;
  std::vector<std::pair<std::string, Ast>> connections;
  int line = 0;
};

struct Module {
  std::string name;
  std::vector<Decl> decls;  // ports first, in order
  std::size_t port_count = 0;
  std::vector<Assign> continuous;
  std::vector<Assign> clocked;
  std::map<std::string, std::shared_ptr<const Function>> functions;
  std::vector<Instance> instances;
  int line = 0;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : t_(std::move(toks)) {}

  std::vector<Module> modules() {
    std::vector<Module> out;
    while (peek().kind != Tok::end) out.push_back(module());
    return out;
  }

 private:
  std::vector<Token> t_;
  std::size_t p_ = 0;

  const Token& peek(std::size_t k = 0) const { return t_[std::min(p_ + k, t_.size() - 1)]; }
  const Token& next() {
    const Token& t = t_[p_];
    if (p_ + 1 < t_.size()) ++p_;
    return t;
  }
  bool is(const char* text) const { return peek().kind != Tok::end && peek().text == text; }
  bool accept(const char* text) {
    if (!is(text)) return false;
    next();
    return true;
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(peek().line, what + (peek().kind == Tok::end ? " at end of input" : " near '" + peek().text + "'"));
  }
  void expect(const char* text) {
    if (!accept(text)) fail(std::string("expected '") + text + "'");
  }
  std::string identifier() {
    if (peek().kind != Tok::ident) fail("expected identifier");
    return next().text;
  }
  std::uint64_t constant() {
    if (peek().kind != Tok::number) fail("expected constant");
    return next().value;
  }

  int range_width() {
    if (!accept("[")) return 1;
    const auto msb = constant();
    expect(":");
    const auto lsb = constant();
    expect("]");
    if (lsb != 0) fail("ranges must end at bit 0");
    if (msb >= 64) fail("widths above 64 bits are outside the dialect");
    return static_cast<int>(msb) + 1;
  }

  Decl decl_head(Decl::Dir dir) {
    Decl d;
    d.dir = dir;
    d.line = peek().line;
    if (accept("reg"))
      d.is_reg = true;
    else
      accept("wire");
    d.is_signed = accept("signed");
    d.width = range_width();
    return d;
  }

  Module module() {
    Module m;
    m.line = peek().line;
    expect("module");
    m.name = identifier();
    expect("(");
    if (!is(")")) {
      do {
        Decl::Dir dir;
        if (accept("input"))
          dir = Decl::input;
        else if (accept("output"))
          dir = Decl::output;
        else
          fail("expected ANSI port declaration");
        Decl d = decl_head(dir);
        d.name = identifier();
        if (dir == Decl::input && d.is_reg) fail("input ports cannot be reg");
        m.decls.push_back(d);
      } while (accept(","));
    }
    expect(")");
    expect(";");
    m.port_count = m.decls.size();
    while (!accept("endmodule")) {
      if (peek().kind == Tok::end) fail("missing endmodule");
      item(m);
    }
    return m;
  }

  void item(Module& m) {
    if (is("wire") || is("reg")) {
      Decl head = decl_head(Decl::none);
      do {
        Decl d = head;
        d.line = peek().line;
        d.name = identifier();
        m.decls.push_back(d);
        if (accept("=")) {
          if (d.is_reg) fail("reg declarations cannot have an initializer");
          m.continuous.push_back({d.name, expr(), d.line});
        }
      } while (accept(","));
      expect(";");
    } else if (accept("assign")) {
      const int line = peek().line;
      auto target = identifier();
      expect("=");
      m.continuous.push_back({target, expr(), line});
      expect(";");
    } else if (accept("always")) {
      expect("@");
      expect("(");
      expect("posedge");
      identifier();
      expect(")");
      statement(m);
    } else if (accept("function")) {
      function(m);
    } else if (peek().kind == Tok::ident && peek(1).kind == Tok::ident) {
      Instance inst;
      inst.line = peek().line;
      inst.module = identifier();
      inst.name = identifier();
      expect("(");
      if (!is(")")) {
        do {
          expect(".");
          auto port = identifier();
          expect("(");
          inst.connections.emplace_back(port, expr());
          expect(")");
        } while (accept(","));
      }
      expect(")");
      expect(";");
      m.instances.push_back(std::move(inst));
    } else {
      fail("unsupported module item");
    }
  }

  void statement(Module& m) {
    if (accept("begin")) {
      while (!accept("end")) {
        if (peek().kind == Tok::end) fail("missing end");
        statement(m);
      }
      return;
    }
    const int line = peek().line;
    auto target = identifier();
    if (!accept("<=")) fail("only nonblocking assignments are allowed in always blocks");
    m.clocked.push_back({target, expr(), line});
    expect(";");
  }

  void function(Module& m) {
    auto f = std::make_shared<Function>();
    f->out_width = range_width();
    f->name = identifier();
    expect(";");
    expect("input");
    f->in_width = range_width();
    if (f->in_width > 20) fail("function inputs are limited to 20 bits");
    const auto arg = identifier();
    expect(";");
    const bool block = accept("begin");
    expect("case");
    expect("(");
    if (identifier() != arg) fail("case must select on the function input");
    expect(")");
    const std::size_t entries = std::size_t{1} << f->in_width;
    f->entries.assign(entries, 0);
    std::vector<bool> seen(entries, false);
    std::size_t count = 0;
    while (!accept("endcase")) {
      if (is("default")) fail("default is outside the dialect; tables must be exhaustive");
      const auto label = constant();
      expect(":");
      if (identifier() != f->name) fail("case arm must assign the function result");
      expect("=");
      const auto value = constant();
      expect(";");
      if (label >= entries) fail("case label out of range");
      if (seen[label]) fail("duplicate case label");
      if (f->out_width < 64 && (value >> f->out_width) != 0) fail("table value wider than the function");
      seen[label] = true;
      f->entries[label] = value;
      ++count;
    }
    if (block) expect("end");
    expect("endfunction");
    if (count != entries)
      throw ParseError(peek().line, "function " + f->name + " is not exhaustive: " + std::to_string(count) + " of " +
                                        std::to_string(entries) + " entries");
    if (!m.functions.emplace(f->name, f).second) fail("duplicate function " + f->name);
  }

  // expr := shift ; shift := sum ('>>>' constant)* ; sum := primary ('+' primary)*
  Ast expr() {
    Ast left = sum();
    while (is(">>>")) {
      Ast a;
      a.kind = Ast::sshr;
      a.line = next().line;
      a.value = constant();
      if (a.value > 63) fail("shift amount too large");
      a.kids.push_back(std::move(left));
      left = std::move(a);
    }
    return left;
  }

  Ast sum() {
    Ast left = primary();
    while (is("+")) {
      Ast a;
      a.kind = Ast::add;
      a.line = next().line;
      a.kids.push_back(std::move(left));
      a.kids.push_back(primary());
      left = std::move(a);
    }
    return left;
  }

  Ast primary() {
    Ast a;
    a.line = peek().line;
    if (peek().kind == Tok::number) {
      const Token& t = next();
      a.kind = Ast::number;
      a.width = t.width;
      a.is_signed = t.is_signed;
      a.value = t.value;
      return a;
    }
    if (accept("(")) {
      a = expr();
      expect(")");
      return a;
    }
    if (accept("{")) {
      a.kind = Ast::concat;
      do a.kids.push_back(expr());
      while (accept(","));
      expect("}");
      return a;
    }
    if (accept("$signed")) {
      a.kind = Ast::sign;
      expect("(");
      a.kids.push_back(expr());
      expect(")");
      return a;
    }
    a.name = identifier();
    if (a.name[0] == '$') fail("unsupported system function");
    if (accept("(")) {
      a.kind = Ast::call;
      a.kids.push_back(expr());
      expect(")");
      return a;
    }
    if (accept("[")) {
      const auto msb = constant();
      if (accept(":")) {
        a.kind = Ast::partsel;
        a.msb = static_cast<int>(msb);
        a.lsb = static_cast<int>(constant());
        if (a.lsb > a.msb) fail("part select must be [msb:lsb]");
      } else {
        a.kind = Ast::bitsel;
        a.msb = a.lsb = static_cast<int>(msb);
      }
      expect("]");
      return a;
    }
    a.kind = Ast::ident;
    return a;
  }
};

// ---- elaborated form ----

struct Val {
  std::int64_t v = 0;
  int width = 1;
  bool is_signed = false;
};

std::uint64_t mask(int width) { return width >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << width) - 1; }

std::int64_t normalize(std::int64_t v, int width, bool is_signed) {
  std::uint64_t raw = static_cast<std::uint64_t>(v) & mask(width);
  if (is_signed && width < 64 && ((raw >> (width - 1)) & 1)) raw |= ~mask(width);
  return static_cast<std::int64_t>(raw);
}

std::uint64_t raw_bits(const Val& x) { return static_cast<std::uint64_t>(x.v) & mask(x.width); }

struct Node {
  Ast::Kind kind = Ast::number;
  int signal = -1;
  int width = 1;
  bool is_signed = false;
  std::int64_t value = 0;
  int msb = 0, lsb = 0;
  std::vector<int> kids;
  const Function* fn = nullptr;
};

struct SignalInfo {
  std::string name;
  int width = 1;
  bool is_signed = false;
  bool is_reg = false;
  int driver = -1;  // index into comb
};

struct Driver {
  int target = -1;
  int node = -1;
};

}  // namespace

struct Netlist::Impl {
  std::vector<SignalInfo> signals;
  std::vector<Node> nodes;
  std::vector<Driver> comb;     // topologically ordered
  std::vector<Driver> clocked;
  std::vector<Port> ports;
  std::vector<std::shared_ptr<const Function>> functions;

  Val eval(int id, const std::vector<std::int64_t>& vals) const {
    const Node& n = nodes[static_cast<std::size_t>(id)];
    switch (n.kind) {
      case Ast::ident: return {vals[static_cast<std::size_t>(n.signal)], n.width, n.is_signed};
      case Ast::number: return {n.value, n.width, n.is_signed};
      case Ast::bitsel:
      case Ast::partsel: {
        const Val base = eval(n.kids[0], vals);
        const int w = n.msb - n.lsb + 1;
        return {static_cast<std::int64_t>((raw_bits(base) >> n.lsb) & mask(w)), w, false};
      }
      case Ast::concat: {
        std::uint64_t acc = 0;
        for (int k : n.kids) {
          const Val x = eval(k, vals);
          acc = (x.width >= 64 ? 0 : acc << x.width) | raw_bits(x);
        }
        return {static_cast<std::int64_t>(acc), n.width, false};
      }
      case Ast::add: {
        const Val a = eval(n.kids[0], vals);
        const Val b = eval(n.kids[1], vals);
        if (n.is_signed) return {normalize(a.v + b.v, n.width, true), n.width, true};
        return {normalize(static_cast<std::int64_t>(raw_bits(a) + raw_bits(b)), n.width, false), n.width, false};
      }
      case Ast::sshr: {
        const Val a = eval(n.kids[0], vals);
        if (a.is_signed) return {a.v >> n.value, a.width, true};
        return {static_cast<std::int64_t>(raw_bits(a) >> n.value), a.width, false};
      }
      case Ast::sign: {
        const Val a = eval(n.kids[0], vals);
        return {normalize(a.v, a.width, true), a.width, true};
      }
      case Ast::call: {
        const Val a = eval(n.kids[0], vals);
        const auto idx = raw_bits(a) & mask(n.fn->in_width);
        return {static_cast<std::int64_t>(n.fn->entries[idx]), n.fn->out_width, false};
      }
    }
    return {};
  }
};

namespace {

class Elaborator {
 public:
  Elaborator(const std::vector<Module>& mods, Netlist::Impl& out) : out_(out) {
    for (const auto& m : mods)
      if (!by_name_.emplace(m.name, &m).second) throw ParseError(m.line, "duplicate module " + m.name);
  }

  void top(const std::string& name) {
    const auto it = by_name_.find(name);
    if (it == by_name_.end()) throw ParseError(0, "top module " + name + " not found");
    const auto scope = instantiate(*it->second, "", 0);
    const Module& m = *it->second;
    for (std::size_t k = 0; k < m.port_count; ++k) {
      const Decl& d = m.decls[k];
      out_.ports.push_back({d.name, d.width, d.is_signed, d.dir == Decl::input, scope.at(d.name)});
    }
    order();
  }

 private:
  Netlist::Impl& out_;
  std::map<std::string, const Module*> by_name_;

  using Scope = std::unordered_map<std::string, int>;

  int add_signal(const std::string& name, const Decl& d) {
    out_.signals.push_back({name, d.width, d.is_signed, d.is_reg, -1});
    return static_cast<int>(out_.signals.size() - 1);
  }

  void drive(int target, int node, int line) {
    auto& s = out_.signals[static_cast<std::size_t>(target)];
    if (s.is_reg) throw ParseError(line, "continuous assignment to reg " + s.name);
    if (s.driver >= 0) throw ParseError(line, "multiple drivers for " + s.name);
    s.driver = static_cast<int>(out_.comb.size());
    out_.comb.push_back({target, node});
  }

  int compile(const Ast& a, const Scope& scope, const Module& m) {
    Node n;
    n.kind = a.kind;
    auto lookup = [&](const std::string& name) {
      const auto it = scope.find(name);
      if (it == scope.end()) throw ParseError(a.line, "undeclared signal " + name);
      return it->second;
    };
    switch (a.kind) {
      case Ast::ident: {
        n.signal = lookup(a.name);
        const auto& s = out_.signals[static_cast<std::size_t>(n.signal)];
        n.width = s.width;
        n.is_signed = s.is_signed;
        break;
      }
      case Ast::number:
        n.width = a.width;
        n.is_signed = a.is_signed;
        n.value = normalize(static_cast<std::int64_t>(a.value), a.width, a.is_signed);
        break;
      case Ast::bitsel:
      case Ast::partsel: {
        Ast base;
        base.kind = Ast::ident;
        base.name = a.name;
        base.line = a.line;
        const int b = compile(base, scope, m);
        const int w = out_.nodes[static_cast<std::size_t>(b)].width;
        if (a.msb >= w) throw ParseError(a.line, "select out of range on " + a.name);
        n.kids = {b};
        n.msb = a.msb;
        n.lsb = a.lsb;
        n.width = a.msb - a.lsb + 1;
        break;
      }
      case Ast::concat: {
        n.width = 0;
        for (const auto& k : a.kids) {
          n.kids.push_back(compile(k, scope, m));
          n.width += out_.nodes[static_cast<std::size_t>(n.kids.back())].width;
        }
        if (n.width > 64) throw ParseError(a.line, "concatenation wider than 64 bits");
        break;
      }
      case Ast::add: {
        const int l = compile(a.kids[0], scope, m);
        const int r = compile(a.kids[1], scope, m);
        const auto& ln = out_.nodes[static_cast<std::size_t>(l)];
        const auto& rn = out_.nodes[static_cast<std::size_t>(r)];
        n.width = std::max(ln.width, rn.width) + 1;
        if (n.width > 64) throw ParseError(a.line, "sum wider than 64 bits");
        n.is_signed = ln.is_signed && rn.is_signed;
        n.kids = {l, r};
        break;
      }
      case Ast::sshr:
      case Ast::sign: {
        const int k = compile(a.kids[0], scope, m);
        n.kids = {k};
        n.width = out_.nodes[static_cast<std::size_t>(k)].width;
        n.is_signed = a.kind == Ast::sign || out_.nodes[static_cast<std::size_t>(k)].is_signed;
        n.value = static_cast<std::int64_t>(a.value);
        break;
      }
      case Ast::call: {
        const auto it = m.functions.find(a.name);
        if (it == m.functions.end()) throw ParseError(a.line, "unknown function " + a.name);
        n.fn = it->second.get();
        out_.functions.push_back(it->second);
        n.kids = {compile(a.kids[0], scope, m)};
        n.width = n.fn->out_width;
        break;
      }
    }
    out_.nodes.push_back(std::move(n));
    return static_cast<int>(out_.nodes.size() - 1);
  }

  Scope instantiate(const Module& m, const std::string& prefix, int depth) {
    if (depth > 16) throw ParseError(m.line, "instance hierarchy too deep");
    Scope scope;
    for (const auto& d : m.decls) {
      if (scope.count(d.name)) throw ParseError(d.line, "duplicate declaration of " + d.name);
      scope[d.name] = add_signal(prefix + d.name, d);
    }
    for (const auto& a : m.continuous) {
      const auto it = scope.find(a.target);
      if (it == scope.end()) throw ParseError(a.line, "undeclared signal " + a.target);
      drive(it->second, compile(a.expr, scope, m), a.line);
    }
    for (const auto& a : m.clocked) {
      const auto it = scope.find(a.target);
      if (it == scope.end()) throw ParseError(a.line, "undeclared signal " + a.target);
      if (!out_.signals[static_cast<std::size_t>(it->second)].is_reg)
        throw ParseError(a.line, "nonblocking assignment to non-reg " + a.target);
      out_.clocked.push_back({it->second, compile(a.expr, scope, m)});
    }
    for (const auto& inst : m.instances) {
      const auto mit = by_name_.find(inst.module);
      if (mit == by_name_.end()) throw ParseError(inst.line, "unknown module " + inst.module);
      const Module& child = *mit->second;
      const auto inner = instantiate(child, prefix + inst.name + ".", depth + 1);
      std::map<std::string, bool> connected;
      for (const auto& [port, expr] : inst.connections) {
        const Decl* pd = nullptr;
        for (std::size_t k = 0; k < child.port_count; ++k)
          if (child.decls[k].name == port) pd = &child.decls[k];
        if (!pd) throw ParseError(inst.line, inst.module + " has no port " + port);
        if (connected[port]) throw ParseError(inst.line, "port " + port + " connected twice");
        connected[port] = true;
        if (pd->dir == Decl::input) {
          drive(inner.at(port), compile(expr, scope, m), inst.line);
        } else {
          if (expr.kind != Ast::ident) throw ParseError(inst.line, "output port " + port + " must drive a net");
          const auto target = scope.find(expr.name);
          if (target == scope.end()) throw ParseError(inst.line, "undeclared signal " + expr.name);
          Ast src;
          src.kind = Ast::ident;
          src.name = port;
          src.line = inst.line;
          drive(target->second, compile(src, inner, child), inst.line);
        }
      }
      for (std::size_t k = 0; k < child.port_count; ++k)
        if (child.decls[k].dir == Decl::input && !connected[child.decls[k].name])
          throw ParseError(inst.line, "input port " + child.decls[k].name + " of " + inst.name + " is unconnected");
    }
    return scope;
  }

  void deps(int node, std::vector<int>& out) const {
    const Node& n = out_.nodes[static_cast<std::size_t>(node)];
    if (n.kind == Ast::ident) out.push_back(n.signal);
    for (int k : n.kids) deps(k, out);
  }

  void order() {
    // Depth-first over signal drivers; registers and inputs are sources.
    std::vector<Driver> sorted;
    std::vector<int> state(out_.comb.size(), 0);
    std::function<void(std::size_t)> visit = [&](std::size_t d) {
      if (state[d] == 2) return;
      if (state[d] == 1)
        throw ParseError(0, "combinational loop through " +
                                out_.signals[static_cast<std::size_t>(out_.comb[d].target)].name);
      state[d] = 1;
      std::vector<int> reads;
      deps(out_.comb[d].node, reads);
      for (int s : reads) {
        const int drv = out_.signals[static_cast<std::size_t>(s)].driver;
        if (drv >= 0) visit(static_cast<std::size_t>(drv));
      }
      state[d] = 2;
      sorted.push_back(out_.comb[d]);
    };
    for (std::size_t d = 0; d < out_.comb.size(); ++d) visit(d);
    out_.comb = std::move(sorted);
  }
};

}  // namespace

Netlist Netlist::parse(std::span<const std::string> sources, const std::string& top) {
  std::vector<Module> mods;
  for (const auto& src : sources) {
    auto part = Parser(lex(src)).modules();
    for (auto& m : part) mods.push_back(std::move(m));
  }
  auto impl = std::make_shared<Impl>();
  Elaborator(mods, *impl).top(top);
  Netlist nl;
  nl.impl_ = std::move(impl);
  return nl;
}

const std::vector<Netlist::Port>& Netlist::ports() const { return impl_->ports; }

const Netlist::Port& Netlist::port(const std::string& name) const {
  for (const auto& p : impl_->ports)
    if (p.name == name) return p;
  throw InterfaceError("no port named " + name);
}

Simulator::Simulator(const Netlist& nl) : nl_(&nl) { reset(); }

void Simulator::reset() {
  values_.assign(nl_->impl().signals.size(), 0);
  settle();
}

void Simulator::set(const std::string& input, std::int64_t value) {
  const auto& p = nl_->port(input);
  if (!p.is_input) throw InterfaceError(input + " is not an input");
  values_[static_cast<std::size_t>(p.signal)] = normalize(value, p.width, p.is_signed);
}

std::int64_t Simulator::get(const std::string& port) const {
  return values_[static_cast<std::size_t>(nl_->port(port).signal)];
}

void Simulator::settle() {
  const auto& impl = nl_->impl();
  for (const auto& d : impl.comb) {
    const auto& s = impl.signals[static_cast<std::size_t>(d.target)];
    values_[static_cast<std::size_t>(d.target)] = normalize(impl.eval(d.node, values_).v, s.width, s.is_signed);
  }
}

void Simulator::tick() {
  const auto& impl = nl_->impl();
  std::vector<std::int64_t> next(impl.clocked.size());
  for (std::size_t k = 0; k < impl.clocked.size(); ++k) {
    const auto& d = impl.clocked[k];
    const auto& s = impl.signals[static_cast<std::size_t>(d.target)];
    next[k] = normalize(impl.eval(d.node, values_).v, s.width, s.is_signed);
  }
  for (std::size_t k = 0; k < impl.clocked.size(); ++k)
    values_[static_cast<std::size_t>(impl.clocked[k].target)] = next[k];
  settle();
}

SimResult interpret(const Netlist& nl, const TraceRecord& trace, int max_cycles) {
  struct Sample {
    std::string port;
    const std::vector<std::int16_t>* channel;
    std::size_t index;
  };
  std::vector<Sample> samples;
  bool has_clk = false, has_valid_in = false, has_class = false, has_valid_out = false;
  for (const auto& p : nl.ports()) {
    if (p.name == "clk") {
      has_clk = true;
    } else if (p.name == "valid_in") {
      has_valid_in = true;
    } else if (p.name == "class_out") {
      has_class = true;
    } else if (p.name == "valid_out") {
      has_valid_out = true;
    } else if (p.is_input && p.name.size() > 4 && p.name[0] == 's' && p.name[1] == '_' &&
               (p.name[2] == 'i' || p.name[2] == 'q') && p.name[3] == '_') {
      std::size_t idx = 0;
      const auto* first = p.name.data() + 4;
      const auto* last = p.name.data() + p.name.size();
      const auto [ptr, ec] = std::from_chars(first, last, idx);
      if (ec != std::errc{} || ptr != last) throw InterfaceError("bad sample port name " + p.name);
      const auto* ch = p.name[2] == 'i' ? &trace.i_samples : &trace.q_samples;
      if (idx >= ch->size()) throw InterfaceError("port " + p.name + " is past the end of the trace");
      samples.push_back({p.name, ch, idx});
    } else {
      throw InterfaceError("unexpected port " + p.name);
    }
  }
  if (!(has_clk && has_valid_in && has_class && has_valid_out))
    throw InterfaceError("top module must have clk, valid_in, class_out and valid_out");

  Simulator sim(nl);
  for (const auto& s : samples) sim.set(s.port, (*s.channel)[s.index]);
  sim.set("valid_in", 1);
  sim.settle();
  SimResult r;
  while (sim.get("valid_out") == 0) {
    if (r.cycles >= max_cycles) throw InterfaceError("valid_out did not rise within the cycle budget");
    sim.tick();
    ++r.cycles;
    if (r.cycles == 1) {
      for (const auto& s : samples) sim.set(s.port, 0);
      sim.set("valid_in", 0);
      sim.settle();
    }
  }
  r.class_bit = static_cast<int>(sim.get("class_out") & 1);
  return r;
}

SimResult interpret(const HdlDesign& hdl, const TraceRecord& trace) {
  const auto src = hdl.sources();
  return interpret(Netlist::parse(src, hdl.top), trace);
}

EquivalenceReport check_equivalence(const HdlDesign& hdl, const TruthTableNet& ttn, const IntegratorConfig& cfg,
                                    std::span<const TraceRecord> traces) {
  const auto src = hdl.sources();
  const auto nl = Netlist::parse(src, hdl.top);
  EquivalenceReport rep;
  for (const auto& trace : traces) {
    FeatureVector fv;
    try {
      fv = integrate(trace, cfg);
    } catch (const FeatureOverflow&) {
      ++rep.skipped_overflow;
      continue;
    }
    const auto sim = interpret(nl, trace);
    ++rep.checked;
    if (sim.class_bit != infer(ttn, fv)) ++rep.class_mismatches;
    if (sim.cycles != hdl.latency) ++rep.cycle_mismatches;
  }
  return rep;
}

std::vector<TraceRecord> probe_traces(const Dataset& ds, std::size_t n, int jitter, std::uint64_t seed) {
  if (ds.records.empty()) throw ConfigError("probe traces need a non-empty dataset");
  if (jitter < 0) throw ConfigError("jitter must be non-negative");
  Rng rng(seed);
  std::vector<TraceRecord> out;
  out.reserve(n);
  const auto span = static_cast<std::uint64_t>(2 * jitter + 1);
  auto perturb = [&](std::int16_t s) {
    const auto d = static_cast<int>(rng.below(span)) - jitter;
    return static_cast<std::int16_t>(std::clamp(s + d, kSampleMin, kSampleMax));
  };
  for (std::size_t k = 0; k < n; ++k) {
    TraceRecord t = ds.records[rng.below(ds.records.size())];
    for (auto& s : t.i_samples) s = perturb(s);
    for (auto& s : t.q_samples) s = perturb(s);
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace luna
