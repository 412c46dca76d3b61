#include "treecomment/parser.hpp"

#include <cctype>
#include <set>
#include <vector>

#include "treecomment/error.hpp"

namespace treecomment {

namespace {

enum class Tok { Ident, Int, Float, Str, Char, Punct, End };

struct Token {
  Tok type = Tok::End;
  std::string text;
  int line = 1;
  int col = 1;
};

const std::set<std::string> kPrimitiveTypes = {"int",    "long", "short",   "byte", "float",
                                               "double", "boolean", "char", "void"};
const std::set<std::string> kModifiers = {"public", "private",      "protected", "static",
                                          "final",  "synchronized", "abstract",  "native"};

class Lexer {
 public:
  explicit Lexer(const std::string& text) : s_(text) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space_and_comments();
      Token t = next();
      out.push_back(t);
      if (t.type == Tok::End) break;
    }
    return out;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) {
    throw UserError(std::to_string(line_) + ":" + std::to_string(col_) + ": " + msg);
  }

  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < s_.size() ? s_[pos_ + ahead] : '\0';
  }

  char advance() {
    char c = s_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void skip_space_and_comments() {
    for (;;) {
      while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(peek()))) advance();
      if (peek() == '/' && peek(1) == '/') {
        while (pos_ < s_.size() && peek() != '\n') advance();
      } else if (peek() == '/' && peek(1) == '*') {
        advance();
        advance();
        while (pos_ < s_.size() && !(peek() == '*' && peek(1) == '/')) advance();
        if (pos_ >= s_.size()) fail("unterminated block comment");
        advance();
        advance();
      } else {
        return;
      }
    }
  }

  Token next() {
    Token t;
    t.line = line_;
    t.col = col_;
    if (pos_ >= s_.size()) return t;
    char c = peek();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$') {
      while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '$')
        t.text += advance();
      t.type = Tok::Ident;
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      bool is_float = false;
      while (std::isdigit(static_cast<unsigned char>(peek()))) t.text += advance();
      if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
        is_float = true;
        t.text += advance();
        while (std::isdigit(static_cast<unsigned char>(peek()))) t.text += advance();
      }
      if (peek() == 'f' || peek() == 'F' || peek() == 'd' || peek() == 'D') {
        is_float = true;
        t.text += advance();
      } else if (peek() == 'l' || peek() == 'L') {
        t.text += advance();
      }
      t.type = is_float ? Tok::Float : Tok::Int;
      return t;
    }
    // Quotes stay in the token text so literal kinds are recoverable downstream.
    if (c == '"') {
      t.text += advance();
      while (pos_ < s_.size() && peek() != '"') {
        if (peek() == '\\') t.text += advance();
        if (pos_ >= s_.size()) break;
        t.text += advance();
      }
      if (pos_ >= s_.size()) fail("unterminated string literal");
      t.text += advance();
      t.type = Tok::Str;
      return t;
    }
    if (c == '\'') {
      t.text += advance();
      while (pos_ < s_.size() && peek() != '\'') {
        if (peek() == '\\') t.text += advance();
        if (pos_ >= s_.size()) break;
        t.text += advance();
      }
      if (pos_ >= s_.size()) fail("unterminated char literal");
      t.text += advance();
      t.type = Tok::Char;
      return t;
    }
    // Multi-char operators first, longest match.
    static const char* two_char[] = {"==", "!=", "<=", ">=", "&&", "||", "++", "--"};
    for (const char* op : two_char) {
      if (c == op[0] && peek(1) == op[1]) {
        t.text = op;
        advance();
        advance();
        t.type = Tok::Punct;
        return t;
      }
    }
    static const std::string one_char = "+-*/%<>=!&|^~(){}[];,.?:";
    if (one_char.find(c) != std::string::npos) {
      t.text = advance();
      t.type = Tok::Punct;
      return t;
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  const std::string& s_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  ParseNode run() {
    skip_method_header();
    ParseNode block;
    if (check("{")) {
      block = parse_block();
    } else {
      block = make_node("Block");
      while (!at_end()) {
        if (eat(";")) continue;  // stray empty statement
        block.children.push_back(parse_statement());
      }
    }
    if (!at_end()) fail("expected end of input");
    return block;
  }

 private:
  const Token& cur() const { return toks_[pos_]; }
  const Token& peek(std::size_t ahead = 1) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  bool at_end() const { return cur().type == Tok::End; }

  bool check(const std::string& punct) const {
    return cur().type == Tok::Punct && cur().text == punct;
  }
  bool check_word(const std::string& word) const {
    return cur().type == Tok::Ident && cur().text == word;
  }

  Token take() { return toks_[pos_++]; }

  bool eat(const std::string& punct) {
    if (!check(punct)) return false;
    ++pos_;
    return true;
  }

  void expect(const std::string& punct) {
    if (!eat(punct)) fail("expected '" + punct + "'");
  }

  [[noreturn]] void fail(const std::string& what) const {
    const Token& t = cur();
    std::string got = t.type == Tok::End ? "end of input" : "'" + t.text + "'";
    throw UserError(std::to_string(t.line) + ":" + std::to_string(t.col) + ": " + what + ", got " +
                    got);
  }

  bool is_punct(std::size_t idx, const std::string& text) const {
    return idx < toks_.size() && toks_[idx].type == Tok::Punct && toks_[idx].text == text;
  }

  // If the input starts with a method declaration, consume everything up to
  // (but not including) the body brace, so only the body becomes the tree.
  void skip_method_header() {
    std::size_t p = pos_;
    while (p < toks_.size() && toks_[p].type == Tok::Ident && kModifiers.count(toks_[p].text)) ++p;
    // Type: identifier or primitive, optional "[]" pairs.
    if (p >= toks_.size() || toks_[p].type != Tok::Ident) return;
    std::size_t after_type = p + 1;
    while (is_punct(after_type, "[") && is_punct(after_type + 1, "]")) after_type += 2;
    // Name, then parameter list.
    if (after_type >= toks_.size() || toks_[after_type].type != Tok::Ident) return;
    std::size_t lparen = after_type + 1;
    if (!is_punct(lparen, "(")) return;
    // Find the matching ")" and require "{" right after; otherwise this is
    // not a method header (e.g. a bare call statement like "f(x);").
    int depth = 0;
    std::size_t q = lparen;
    while (q < toks_.size() && toks_[q].type != Tok::End) {
      if (is_punct(q, "(")) ++depth;
      if (is_punct(q, ")") && --depth == 0) break;
      ++q;
    }
    if (!is_punct(q, ")")) return;
    if (!is_punct(q + 1, "{")) return;
    pos_ = q + 1;
  }

  ParseNode parse_block() {
    expect("{");
    ParseNode block = make_node("Block");
    while (!check("}")) {
      if (at_end()) fail("expected '}'");
      if (eat(";")) continue;  // stray empty statement
      block.children.push_back(parse_statement());
    }
    expect("}");
    return block;
  }

  bool looks_like_var_decl() const {
    if (cur().type != Tok::Ident) return false;
    std::size_t p = pos_;
    bool primitive = kPrimitiveTypes.count(toks_[p].text) > 0;
    ++p;
    while (is_punct(p, "[") && is_punct(p + 1, "]")) p += 2;
    if (p >= toks_.size() || toks_[p].type != Tok::Ident) return false;
    return primitive || is_punct(p + 1, "=") || is_punct(p + 1, ";");
  }

  ParseNode parse_statement() {
    if (check("{")) return parse_block();
    if (check_word("if")) return parse_if();
    if (check_word("while")) return parse_while();
    if (check_word("for")) return parse_for();
    if (check_word("return")) return parse_return();
    if (check_word("break")) {
      take();
      expect(";");
      return make_node("BreakStatement");
    }
    if (check_word("throw")) {
      take();
      ParseNode n = make_node("ThrowStatement", {parse_expression()});
      expect(";");
      return n;
    }
    if (looks_like_var_decl()) {
      ParseNode n = parse_var_decl();
      expect(";");
      return n;
    }
    ParseNode n = make_node("ExprStatement", {parse_expression()});
    expect(";");
    return n;
  }

  ParseNode parse_if() {
    take();  // if
    expect("(");
    ParseNode cond = parse_expression();
    expect(")");
    ParseNode then_branch = parse_statement();
    ParseNode n = make_node("IfStatement", {std::move(cond), std::move(then_branch)});
    if (check_word("else")) {
      take();
      n.children.push_back(parse_statement());
    }
    return n;
  }

  ParseNode parse_while() {
    take();  // while
    expect("(");
    ParseNode cond = parse_expression();
    expect(")");
    ParseNode body = parse_statement();
    return make_node("WhileStatement", {std::move(cond), std::move(body)});
  }

  ParseNode parse_for() {
    take();  // for
    expect("(");
    ParseNode n = make_node("ForStatement");
    if (!check(";")) {
      if (looks_like_var_decl())
        n.children.push_back(parse_var_decl());
      else
        n.children.push_back(parse_expression());
    }
    expect(";");
    if (!check(";")) n.children.push_back(parse_expression());
    expect(";");
    if (!check(")")) n.children.push_back(parse_expression());
    expect(")");
    n.children.push_back(parse_statement());
    return n;
  }

  ParseNode parse_return() {
    take();  // return
    ParseNode n = make_node("ReturnStatement");
    if (!check(";")) n.children.push_back(parse_expression());
    expect(";");
    return n;
  }

  // Type and name become Identifier leaves; "[]" pairs are dropped.
  ParseNode parse_var_decl() {
    if (cur().type != Tok::Ident) fail("expected a type name");
    ParseNode type = make_leaf("Identifier", take().text);
    while (check("[")) {
      take();
      expect("]");
    }
    if (cur().type != Tok::Ident) fail("expected a variable name");
    ParseNode name = make_leaf("Identifier", take().text);
    ParseNode n = make_node("VarDecl", {std::move(type), std::move(name)});
    if (eat("=")) n.children.push_back(parse_expression());
    return n;
  }

  ParseNode parse_expression() { return parse_assignment(); }

  ParseNode parse_assignment() {
    ParseNode lhs = parse_binary(0);
    if (check("=")) {
      take();
      ParseNode rhs = parse_assignment();  // right-associative
      return make_node("Assign", {std::move(lhs), std::move(rhs)});
    }
    return lhs;
  }

  // Precedence-climbing over left-associative binary operators.
  static int binary_level(const Token& t) {
    if (t.type != Tok::Punct) return -1;
    const std::string& op = t.text;
    if (op == "||") return 0;
    if (op == "&&") return 1;
    if (op == "|") return 2;
    if (op == "^") return 3;
    if (op == "&") return 4;
    if (op == "==" || op == "!=") return 5;
    if (op == "<" || op == ">" || op == "<=" || op == ">=") return 6;
    if (op == "+" || op == "-") return 7;
    if (op == "*" || op == "/" || op == "%") return 8;
    return -1;
  }

  ParseNode parse_binary(int min_level) {
    ParseNode lhs = parse_unary();
    for (;;) {
      int level = binary_level(cur());
      if (level < min_level) return lhs;
      take();
      ParseNode rhs = parse_binary(level + 1);
      lhs = make_node("BinaryExpr", {std::move(lhs), std::move(rhs)});
    }
  }

  ParseNode parse_unary() {
    if (check("!") || check("-") || check("+") || check("++") || check("--")) {
      take();
      return make_node("UnaryExpr", {parse_unary()});
    }
    return parse_postfix();
  }

  ParseNode parse_postfix() {
    ParseNode e = parse_primary();
    for (;;) {
      if (check(".")) {
        take();
        if (cur().type != Tok::Ident) fail("expected a member name after '.'");
        ParseNode member = make_leaf("Identifier", take().text);
        if (check("(")) {
          ParseNode call = make_node("MethodCall", {std::move(e), std::move(member)});
          parse_arguments(call);
          e = std::move(call);
        } else {
          e = make_node("FieldAccess", {std::move(e), std::move(member)});
        }
      } else if (check("(")) {
        if (e.kind != "Identifier") fail("expected a method name before '('");
        ParseNode call = make_node("MethodCall", {std::move(e)});
        parse_arguments(call);
        e = std::move(call);
      } else if (check("[")) {
        take();
        ParseNode index = parse_expression();
        expect("]");
        e = make_node("ArrayAccess", {std::move(e), std::move(index)});
      } else if (check("++") || check("--")) {
        take();
        e = make_node("UnaryExpr", {std::move(e)});
      } else {
        return e;
      }
    }
  }

  void parse_arguments(ParseNode& call) {
    expect("(");
    if (!check(")")) {
      call.children.push_back(parse_expression());
      while (eat(",")) call.children.push_back(parse_expression());
    }
    expect(")");
  }

  ParseNode parse_primary() {
    if (check("(")) {
      take();
      ParseNode e = parse_expression();
      expect(")");
      return e;
    }
    if (check_word("new")) {
      take();
      if (cur().type != Tok::Ident) fail("expected a type name after 'new'");
      ParseNode n = make_node("ObjectCreation", {make_leaf("Identifier", take().text)});
      if (check("[")) {
        take();
        n.children.push_back(parse_expression());
        expect("]");
        return n;
      }
      parse_arguments(n);
      return n;
    }
    if (cur().type == Tok::Ident) {
      const std::string& w = cur().text;
      if (w == "true" || w == "false" || w == "null") return make_leaf("Literal", take().text);
      return make_leaf("Identifier", take().text);
    }
    if (cur().type == Tok::Int || cur().type == Tok::Float || cur().type == Tok::Str ||
        cur().type == Tok::Char) {
      return make_leaf("Literal", take().text);
    }
    fail("expected an expression");
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace

ParseNode parse_source(const std::string& text) {
  Lexer lexer(text);
  Parser parser(lexer.run());
  return parser.run();
}

}  // namespace treecomment
