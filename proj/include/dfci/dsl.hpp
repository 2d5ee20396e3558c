#pragma once

// Textual chart syntax (.msc files).
//
//   protocol investigation {
//     actors Prosecutor, DFExpert: "DF Expert";
//     objective evidence_set_obtained: eventually(10);
//     custody 5 .. 10;
//     loop (1..*) {
//       msg 1 Prosecutor -> Suspect: "interrogation question";
//     }
//     msg 6 DFExpert -> Suspect: "show seals" [opt phase=Collection];
//   }
//
// `#` starts a comment. Strings are double quoted with \" and \\ escapes.
// serialize() emits the canonical layout: one item per line, two spaces of
// indent per nesting level, attributes sorted.

#include <cstddef>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dfci/error.hpp"
#include "dfci/msc.hpp"

namespace dfci {

struct SourceSpan {
  std::size_t line = 1;
  std::size_t column = 1;
  std::size_t length = 1;

  bool operator==(const SourceSpan&) const = default;
};

class ParseError : public Error {
 public:
  ParseError(SourceSpan span, std::vector<std::string> expected, std::string found,
             const std::string& message)
      : Error(ErrorKind::Parse, std::to_string(span.line) + ":" + std::to_string(span.column) +
                                    ": " + message),
        span_(span),
        expected_(std::move(expected)),
        found_(std::move(found)),
        message_(message) {}

  const SourceSpan& span() const noexcept { return span_; }
  const std::vector<std::string>& expected() const noexcept { return expected_; }
  const std::string& found() const noexcept { return found_; }
  const std::string& message() const noexcept { return message_; }

 private:
  SourceSpan span_;
  std::vector<std::string> expected_;
  std::string found_;
  std::string message_;
};

namespace dsl {

enum class Tok {
  Ident,
  Number,
  MsgId,
  String,
  LBrace,
  RBrace,
  LParen,
  RParen,
  LBracket,
  RBracket,
  Comma,
  Semi,
  Colon,
  Arrow,
  DotDot,
  Star,
  Equals,
  End,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;  // decoded value for strings, raw lexeme otherwise
  std::string lexeme;
  SourceSpan span;
};

inline std::string describe(const Token& t) {
  return t.kind == Tok::End ? std::string("end of input") : "'" + t.lexeme + "'";
}

class Lexer {
 public:
  explicit Lexer(std::string_view source) {
    src_.reserve(source.size());
    for (std::size_t i = 0; i < source.size(); ++i) {
      if (source[i] == '\r' && i + 1 < source.size() && source[i + 1] == '\n') continue;
      src_.push_back(source[i]);
    }
  }

  std::vector<Token> tokenize() {
    std::vector<Token> out;
    for (;;) {
      skip_blank();
      if (at_end()) {
        out.push_back({Tok::End, "", "", {line_, col_, 1}});
        return out;
      }
      out.push_back(next());
    }
  }

 private:
  std::string src_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;

  bool at_end() const { return pos_ >= src_.size(); }
  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
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
  static bool alpha(char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z'); }
  static bool digit(char c) { return c >= '0' && c <= '9'; }

  void skip_blank() {
    while (!at_end()) {
      char c = peek();
      if (c == ' ' || c == '\t' || c == '\n') {
        advance();
      } else if (c == '#') {
        while (!at_end() && peek() != '\n') advance();
      } else {
        break;
      }
    }
  }

  [[noreturn]] void fail(SourceSpan span, std::string found, const std::string& why) {
    throw ParseError(span, {}, found, why + " '" + found + "'");
  }

  Token next() {
    const SourceSpan start{line_, col_, 1};
    const std::size_t begin = pos_;
    auto finish = [&](Tok kind, std::string text) {
      Token t{kind, std::move(text), src_.substr(begin, pos_ - begin), start};
      t.span.length = std::max<std::size_t>(1, pos_ - begin);
      return t;
    };
    auto single = [&](Tok kind) {
      advance();
      return finish(kind, src_.substr(begin, 1));
    };

    const char c = peek();
    if (alpha(c)) {
      while (alpha(peek()) || digit(peek()) || peek() == '_') advance();
      if (peek() == '.' && digit(peek(1))) {
        advance();
        while (digit(peek())) advance();
        while (alpha(peek())) advance();
        return finish(Tok::MsgId, src_.substr(begin, pos_ - begin));
      }
      return finish(Tok::Ident, src_.substr(begin, pos_ - begin));
    }
    if (digit(c)) {
      while (digit(peek())) advance();
      bool suffixed = false;
      while (alpha(peek())) {
        advance();
        suffixed = true;
      }
      return finish(suffixed ? Tok::MsgId : Tok::Number, src_.substr(begin, pos_ - begin));
    }
    switch (c) {
      case '"': return string_literal(start, begin);
      case '{': return single(Tok::LBrace);
      case '}': return single(Tok::RBrace);
      case '(': return single(Tok::LParen);
      case ')': return single(Tok::RParen);
      case '[': return single(Tok::LBracket);
      case ']': return single(Tok::RBracket);
      case ',': return single(Tok::Comma);
      case ';': return single(Tok::Semi);
      case ':': return single(Tok::Colon);
      case '*': return single(Tok::Star);
      case '=': return single(Tok::Equals);
      case '-':
        if (peek(1) == '>') {
          advance();
          advance();
          return finish(Tok::Arrow, "->");
        }
        break;
      case '.':
        if (peek(1) == '.') {
          advance();
          advance();
          return finish(Tok::DotDot, "..");
        }
        break;
      default:
        break;
    }
    // Consume one UTF-8 code point for the report.
    std::size_t len = 1;
    const auto lead = static_cast<unsigned char>(c);
    if (lead >= 0xF0) len = 4;
    else if (lead >= 0xE0) len = 3;
    else if (lead >= 0xC0) len = 2;
    fail(start, src_.substr(begin, std::min(len, src_.size() - begin)), "unexpected character");
  }

  Token string_literal(SourceSpan start, std::size_t begin) {
    advance();  // opening quote
    std::string value;
    for (;;) {
      if (at_end() || peek() == '\n') {
        SourceSpan span = start;
        span.length = pos_ - begin;
        throw ParseError(span, {"closing '\"'"}, src_.substr(begin, pos_ - begin),
                         "unterminated string '" + src_.substr(begin, pos_ - begin) + "'");
      }
      char ch = advance();
      if (ch == '"') break;
      if (ch == '\\') {
        const SourceSpan esc{line_, col_ - 1, 2};
        char e = at_end() ? '\0' : advance();
        if (e == '"' || e == '\\') {
          value.push_back(e);
        } else {
          fail(esc, std::string("\\") + e, "invalid escape");
        }
        continue;
      }
      value.push_back(ch);
    }
    Token t{Tok::String, std::move(value), src_.substr(begin, pos_ - begin), start};
    t.span.length = pos_ - begin;
    return t;
  }
};

class Parser {
 public:
  explicit Parser(std::string_view source) : toks_(Lexer(source).tokenize()) {}

  MscDocument parse_document() {
    expect_keyword("protocol");
    const Token& name = expect(Tok::Ident, "protocol name");
    doc_.name = name.text;
    name_span_ = name.span;
    expect(Tok::LBrace, "'{'");

    expect_keyword("actors");
    parse_lifeline();
    while (accept(Tok::Comma)) parse_lifeline();
    expect(Tok::Semi, "';'");

    while (at_keyword("alias")) parse_alias();
    while (at_keyword("objective")) parse_objective();
    if (at_keyword("custody")) parse_custody();

    doc_.body = parse_items(/*nested=*/false);
    expect(Tok::RBrace, "'}'");
    expect(Tok::End, "end of input");

    resolve_deferred();
    annotate_scenes(doc_);
    const auto issues = validate_document(doc_);
    if (!issues.empty()) {
      throw ParseError(name_span_, {}, doc_.name,
                       "invalid protocol '" + doc_.name + "': " + issues.front().location +
                           ": " + issues.front().message);
    }
    return std::move(doc_);
  }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  MscDocument doc_;
  SourceSpan name_span_;
  std::set<std::string> names_;
  std::set<std::string> msg_ids_;
  std::vector<std::string> msg_order_;

  struct Reference {
    std::string msg_id;
    Token token;
    std::string what;
  };
  std::vector<Reference> refs_;
  std::optional<std::pair<Token, Token>> custody_tokens_;

  const Token& peek() const { return toks_[pos_]; }
  const Token& take() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

  [[noreturn]] static void fail_at(const Token& t, std::vector<std::string> expected,
                                   const std::string& message) {
    throw ParseError(t.span, std::move(expected), t.kind == Tok::End ? "<eof>" : t.lexeme,
                     message);
  }

  [[noreturn]] void unexpected(std::vector<std::string> expected) const {
    std::string list;
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (i) list += i + 1 == expected.size() ? " or " : ", ";
      list += expected[i];
    }
    fail_at(peek(), expected, "expected " + list + ", found " + describe(peek()));
  }

  bool at_keyword(std::string_view kw) const {
    return peek().kind == Tok::Ident && peek().text == kw;
  }
  void expect_keyword(std::string_view kw) {
    if (!at_keyword(kw)) unexpected({"'" + std::string(kw) + "'"});
    take();
  }
  bool accept(Tok kind) {
    if (peek().kind != kind) return false;
    take();
    return true;
  }
  const Token& expect(Tok kind, const std::string& what) {
    if (peek().kind != kind) unexpected({what});
    return take();
  }
  const Token& expect_msg_id() {
    if (peek().kind != Tok::Number && peek().kind != Tok::MsgId) unexpected({"message id"});
    return take();
  }

  void parse_lifeline() {
    const Token& id = expect(Tok::Ident, "lifeline id");
    if (!names_.insert(id.text).second) {
      fail_at(id, {}, "lifeline '" + id.text + "' is declared twice");
    }
    Lifeline l{id.text, id.text, ""};
    if (accept(Tok::Colon)) l.display_name = expect(Tok::String, "display name").text;
    if (at_keyword("role")) {
      take();
      l.role = expect(Tok::String, "role").text;
    }
    doc_.lifelines.push_back(std::move(l));
  }

  void parse_alias() {
    take();
    const Token& name = expect(Tok::Ident, "alias name");
    if (!names_.insert(name.text).second) {
      fail_at(name, {}, "alias '" + name.text + "' collides with another name");
    }
    expect(Tok::Equals, "'='");
    const Token& target = expect(Tok::Ident, "lifeline id");
    if (!find_lifeline(doc_, target.text)) {
      fail_at(target, {"lifeline id"}, "'" + target.text + "' is not a declared lifeline");
    }
    expect(Tok::Semi, "';'");
    doc_.aliases.push_back({name.text, target.text});
  }

  void parse_objective() {
    take();
    const Token& id = expect(Tok::Ident, "objective id");
    for (const auto& o : doc_.objectives) {
      if (o.id == id.text) fail_at(id, {}, "objective '" + id.text + "' is declared twice");
    }
    ObjectiveSpec obj{id.text, "", {}};
    if (peek().kind == Tok::String) obj.description = take().text;
    expect(Tok::Colon, "':'");
    obj.predicate = parse_or();
    expect(Tok::Semi, "';'");
    doc_.objectives.push_back(std::move(obj));
  }

  Predicate parse_or() {
    Predicate lhs = parse_and();
    while (at_keyword("or")) {
      take();
      lhs = Predicate::either(std::move(lhs), parse_and());
    }
    return lhs;
  }

  Predicate parse_and() {
    Predicate lhs = parse_atom();
    while (at_keyword("and")) {
      take();
      lhs = Predicate::both(std::move(lhs), parse_atom());
    }
    return lhs;
  }

  Predicate parse_atom() {
    if (accept(Tok::LParen)) {
      Predicate inner = parse_or();
      expect(Tok::RParen, "')'");
      return inner;
    }
    if (at_keyword("eventually")) {
      take();
      expect(Tok::LParen, "'('");
      const Token& m = expect_msg_id();
      refs_.push_back({m.text, m, "objective"});
      expect(Tok::RParen, "')'");
      return Predicate::eventually(m.text);
    }
    if (at_keyword("responds")) {
      take();
      expect(Tok::LParen, "'('");
      const Token& q = expect_msg_id();
      refs_.push_back({q.text, q, "objective"});
      expect(Tok::Comma, "','");
      const Token& a = expect_msg_id();
      refs_.push_back({a.text, a, "objective"});
      expect(Tok::RParen, "')'");
      return Predicate::responds(q.text, a.text);
    }
    if (at_keyword("conformant")) {
      take();
      return Predicate::conformant();
    }
    unexpected({"'eventually'", "'responds'", "'conformant'", "'('"});
  }

  void parse_custody() {
    take();
    const Token start = expect_msg_id();
    expect(Tok::DotDot, "'..'");
    const Token end = expect_msg_id();
    expect(Tok::Semi, "';'");
    doc_.custody_span = CustodySpan{start.text, end.text};
    custody_tokens_ = {start, end};
  }

  std::vector<Item> parse_items(bool nested) {
    std::vector<Item> items;
    for (;;) {
      if (at_keyword("msg")) {
        items.push_back(Item{parse_message()});
      } else if (at_keyword("loop") || at_keyword("opt")) {
        items.push_back(parse_fragment());
      } else if (at_keyword("scene")) {
        take();
        const Token& s = expect(Tok::String, "scene name");
        if (s.text.empty()) fail_at(s, {"non-empty scene name"}, "empty scene name '\"\"'");
        expect(Tok::Semi, "';'");
        items.push_back(Item{Scene{s.text}});
      } else if (at_keyword("note")) {
        take();
        const Token& s = expect(Tok::String, "note text");
        expect(Tok::Semi, "';'");
        items.push_back(Item{Note{s.text}});
      } else if (peek().kind == Tok::RBrace) {
        return items;
      } else {
        std::vector<std::string> expected{"'msg'", "'loop'", "'opt'", "'scene'", "'note'", "'}'"};
        if (!nested && items.empty()) {
          expected.insert(expected.begin(), {"'alias'", "'objective'", "'custody'"});
        }
        unexpected(expected);
      }
    }
  }

  MessageSpec parse_message() {
    take();
    const Token& id = expect_msg_id();
    if (!msg_ids_.insert(id.text).second) {
      fail_at(id, {}, "message id '" + id.text + "' is declared twice");
    }
    msg_order_.push_back(id.text);
    const Token& from = expect(Tok::Ident, "sender lifeline");
    const std::string from_id = resolve_lifeline(doc_, from.text);
    if (from_id.empty()) {
      fail_at(from, {"lifeline id"}, "'" + from.text + "' is not a declared lifeline");
    }
    expect(Tok::Arrow, "'->'");
    const Token& to = expect(Tok::Ident, "receiver lifeline");
    const std::string to_id = resolve_lifeline(doc_, to.text);
    if (to_id.empty()) {
      fail_at(to, {"lifeline id"}, "'" + to.text + "' is not a declared lifeline");
    }
    if (to_id == from_id) {
      fail_at(to, {"lifeline other than the sender"},
              "self-message: '" + to.text + "' cannot receive its own message");
    }
    expect(Tok::Colon, "':'");
    MessageSpec m;
    m.msg_id = id.text;
    m.from = from.text;
    m.to = to.text;
    m.label = expect(Tok::String, "message label").text;
    if (accept(Tok::LBracket)) {
      bool seen_opt = false;
      bool seen_phase = false;
      while (!accept(Tok::RBracket)) {
        if (at_keyword("opt")) {
          if (seen_opt) fail_at(peek(), {}, "attribute 'opt' repeated");
          take();
          seen_opt = true;
          m.modality = Modality::optional;
        } else if (at_keyword("phase")) {
          if (seen_phase) fail_at(peek(), {}, "attribute 'phase' repeated");
          take();
          seen_phase = true;
          expect(Tok::Equals, "'='");
          const Token& p = expect(Tok::Ident, "phase name");
          auto phase = phase_from_string(p.text);
          if (!phase) fail_at(p, {"phase name"}, "unknown phase '" + p.text + "'");
          m.phase = phase;
        } else {
          unexpected({"'opt'", "'phase'", "']'"});
        }
      }
    }
    expect(Tok::Semi, "';'");
    return m;
  }

  Item parse_fragment() {
    const Token kw = take();
    Fragment f;
    if (kw.text == "loop") {
      f.kind = FragmentKind::loop;
      f.min_iter = 1;
      f.max_iter = kUnbounded;
      if (accept(Tok::LParen)) {
        const Token& lo = expect(Tok::Number, "iteration count");
        f.min_iter = std::stoull(lo.text);
        expect(Tok::DotDot, "'..'");
        if (accept(Tok::Star)) {
          f.max_iter = kUnbounded;
        } else {
          const Token& hi = expect(Tok::Number, "iteration count or '*'");
          f.max_iter = std::stoull(hi.text);
          if (f.max_iter == 0 || f.min_iter > f.max_iter) {
            fail_at(hi, {}, "loop bounds " + lo.text + ".." + hi.text + " are invalid at '" +
                                hi.lexeme + "'");
          }
        }
        expect(Tok::RParen, "')'");
      }
    } else {
      f.kind = FragmentKind::opt;
    }
    expect(Tok::LBrace, "'{'");
    const std::size_t before = msg_order_.size();
    f.body = parse_items(/*nested=*/true);
    if (msg_order_.size() == before) {
      fail_at(peek(), {"'msg'"}, "fragment body has no messages before '}'");
    }
    expect(Tok::RBrace, "'}'");
    return Item{std::move(f)};
  }

  void resolve_deferred() {
    for (const auto& r : refs_) {
      if (!msg_ids_.count(r.msg_id)) {
        fail_at(r.token, {"declared message id"},
                r.what + " references unknown message '" + r.msg_id + "'");
      }
    }
    if (custody_tokens_) {
      const auto& [start, end] = *custody_tokens_;
      auto pos = [&](const std::string& id) {
        return std::find(msg_order_.begin(), msg_order_.end(), id) - msg_order_.begin();
      };
      if (!msg_ids_.count(start.text)) {
        fail_at(start, {"declared message id"},
                "custody start references unknown message '" + start.text + "'");
      }
      if (!msg_ids_.count(end.text)) {
        fail_at(end, {"declared message id"},
                "custody end references unknown message '" + end.text + "'");
      }
      if (pos(start.text) >= pos(end.text)) {
        fail_at(end, {}, "custody end '" + end.text + "' does not follow its start");
      }
    }
  }
};

inline void write_string(std::ostream& os, std::string_view s) {
  os << '"';
  for (char c : s) {
    if (c == '"' || c == '\\') os << '\\';
    os << c;
  }
  os << '"';
}

inline void write_predicate(std::ostream& os, const Predicate& p, int parent_prec,
                            bool right_operand) {
  using K = Predicate::Kind;
  switch (p.kind) {
    case K::eventually:
      os << "eventually(" << p.msg_id << ")";
      return;
    case K::responds:
      os << "responds(" << p.msg_id << ", " << p.reply_id << ")";
      return;
    case K::conformant:
      os << "conformant";
      return;
    case K::all_of:
    case K::any_of: {
      const int prec = p.kind == K::all_of ? 2 : 1;
      // Binary nodes parse left-associatively; parenthesize where needed.
      const bool parens = prec < parent_prec || (prec == parent_prec && right_operand);
      if (parens) os << '(';
      write_predicate(os, p.operands.at(0), prec, false);
      os << (p.kind == K::all_of ? " and " : " or ");
      write_predicate(os, p.operands.at(1), prec, true);
      if (parens) os << ')';
      return;
    }
  }
}

inline void write_items(std::ostream& os, const std::vector<Item>& items, int depth) {
  const std::string indent(2 * depth, ' ');
  for (const auto& item : items) {
    if (const auto* m = std::get_if<MessageSpec>(&item.node)) {
      os << indent << "msg " << m->msg_id << ' ' << m->from << " -> " << m->to << ": ";
      write_string(os, m->label);
      std::vector<std::string> attrs;
      if (m->is_optional()) attrs.emplace_back("opt");
      if (m->phase) attrs.push_back("phase=" + std::string(to_string(*m->phase)));
      std::sort(attrs.begin(), attrs.end());
      if (!attrs.empty()) {
        os << " [";
        for (std::size_t i = 0; i < attrs.size(); ++i) os << (i ? " " : "") << attrs[i];
        os << ']';
      }
      os << ";\n";
    } else if (const auto* f = std::get_if<Fragment>(&item.node)) {
      if (f->kind == FragmentKind::loop) {
        os << indent << "loop (" << f->min_iter << "..";
        if (f->max_iter == kUnbounded) os << '*';
        else os << f->max_iter;
        os << ") {\n";
      } else {
        os << indent << "opt {\n";
      }
      write_items(os, f->body, depth + 1);
      os << indent << "}\n";
    } else if (const auto* s = std::get_if<Scene>(&item.node)) {
      os << indent << "scene ";
      write_string(os, s->name);
      os << ";\n";
    } else if (const auto* n = std::get_if<Note>(&item.node)) {
      os << indent << "note ";
      write_string(os, n->text);
      os << ";\n";
    }
  }
}

}  // namespace dsl

// Parses one chart. Throws ParseError for the first syntax error or broken
// document invariant, located at the offending token.
inline MscDocument parse(std::string_view source) {
  return dsl::Parser(source).parse_document();
}

inline std::string serialize(const MscDocument& doc) {
  std::ostringstream os;
  os << "protocol " << doc.name << " {\n";
  os << "  actors ";
  for (std::size_t i = 0; i < doc.lifelines.size(); ++i) {
    const auto& l = doc.lifelines[i];
    if (i) os << ", ";
    os << l.id;
    if (!l.display_name.empty() && l.display_name != l.id) {
      os << ": ";
      dsl::write_string(os, l.display_name);
    }
    if (!l.role.empty()) {
      os << " role ";
      dsl::write_string(os, l.role);
    }
  }
  os << ";\n";
  for (const auto& a : doc.aliases) {
    os << "  alias " << a.name << " = " << a.lifeline << ";\n";
  }
  for (const auto& o : doc.objectives) {
    os << "  objective " << o.id;
    if (!o.description.empty()) {
      os << ' ';
      dsl::write_string(os, o.description);
    }
    os << ": ";
    dsl::write_predicate(os, o.predicate, 0, false);
    os << ";\n";
  }
  if (doc.custody_span) {
    os << "  custody " << doc.custody_span->start << " .. " << doc.custody_span->end << ";\n";
  }
  dsl::write_items(os, doc.body, 1);
  os << "}\n";
  return os.str();
}

}  // namespace dfci
