#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "rdfviews/error.hpp"
#include "rdfviews/rational.hpp"
#include "rdfviews/rdf_store.hpp"

namespace rdfviews {

/// A query term: either a variable (by name) or a dictionary constant.
class QTerm {
 public:
  QTerm() : value_(kInvalidTermId) {}

  static QTerm var(std::string name) {
    QTerm t;
    t.value_ = std::move(name);
    return t;
  }
  static QTerm constant(TermId id) {
    QTerm t;
    t.value_ = id;
    return t;
  }

  [[nodiscard]] bool is_var() const { return std::holds_alternative<std::string>(value_); }
  [[nodiscard]] bool is_const() const { return !is_var(); }
  [[nodiscard]] const std::string& name() const { return std::get<std::string>(value_); }
  [[nodiscard]] TermId id() const { return std::get<TermId>(value_); }

  friend bool operator==(const QTerm&, const QTerm&) = default;
  friend auto operator<=>(const QTerm&, const QTerm&) = default;

 private:
  std::variant<TermId, std::string> value_;
};

enum class Position : std::uint8_t { subject = 0, property = 1, object = 2 };

inline std::string_view to_string(Position p) {
  switch (p) {
    case Position::subject: return "s";
    case Position::property: return "p";
    case Position::object: return "o";
  }
  return "?";
}

inline constexpr std::array<Position, 3> kPositions{Position::subject, Position::property, Position::object};

struct TriplePattern {
  QTerm s;
  QTerm p;
  QTerm o;

  [[nodiscard]] const QTerm& at(Position pos) const {
    return pos == Position::subject ? s : pos == Position::property ? p : o;
  }
  QTerm& at(Position pos) { return pos == Position::subject ? s : pos == Position::property ? p : o; }

  friend bool operator==(const TriplePattern&, const TriplePattern&) = default;
  friend auto operator<=>(const TriplePattern&, const TriplePattern&) = default;
};

using Body = std::vector<TriplePattern>;

struct ConjunctiveQuery {
  std::string name;
  std::vector<std::string> head;
  Body body;
  Rational weight = 1;
};

/// Variables in order of first appearance (s, p, o of each atom in turn).
inline std::vector<std::string> variables_of(const Body& body) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& atom : body)
    for (auto pos : kPositions)
      if (const auto& t = atom.at(pos); t.is_var() && seen.insert(t.name()).second) out.push_back(t.name());
  return out;
}

/// Removes repeated atoms, keeping first occurrences.
inline Body dedup_body(Body body) {
  Body out;
  std::set<TriplePattern> seen;
  for (auto& atom : body)
    if (seen.insert(atom).second) out.push_back(std::move(atom));
  return out;
}

/// Connected components of the join graph (atoms are nodes, shared variables
/// are edges). Variables in `ignored` do not create edges. Components are
/// returned as ascending atom-index lists, ordered by their smallest index.
inline std::vector<std::vector<std::size_t>> join_components(const Body& body, const std::string* ignored = nullptr) {
  std::vector<std::size_t> parent(body.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::map<std::string, std::size_t> first_atom;
  for (std::size_t i = 0; i < body.size(); ++i) {
    for (auto pos : kPositions) {
      const auto& t = body[i].at(pos);
      if (!t.is_var() || (ignored && t.name() == *ignored)) continue;
      auto [it, inserted] = first_atom.emplace(t.name(), i);
      if (!inserted) parent[find(i)] = find(it->second);
    }
  }
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < body.size(); ++i) groups[find(i)].push_back(i);
  std::vector<std::vector<std::size_t>> out;
  for (auto& [root, members] : groups) out.push_back(std::move(members));
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return out;
}

inline bool is_connected(const Body& body) { return join_components(body).size() <= 1; }

inline bool is_valid_variable_name(std::string_view name) {
  if (name.empty()) return false;
  auto first = static_cast<unsigned char>(name[0]);
  if (!(std::isalpha(first) || name[0] == '_')) return false;
  return std::all_of(name.begin() + 1, name.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

/// Checks the safe-head, non-empty, connected and constant-property rules.
inline void validate_query(const ConjunctiveQuery& q) {
  if (q.body.empty()) throw Error(ErrorCode::empty_body, "query '" + q.name + "' has an empty body");
  if (q.head.empty()) throw Error(ErrorCode::empty_head, "query '" + q.name + "' projects no variables");
  for (const auto& atom : q.body)
    if (atom.p.is_var())
      throw Error(ErrorCode::unsupported_feature, "query '" + q.name + "' uses variable property ?" + atom.p.name());
  auto vars = variables_of(q.body);
  std::set<std::string> body_vars(vars.begin(), vars.end());
  std::set<std::string> head_seen;
  for (const auto& h : q.head) {
    if (!body_vars.contains(h))
      throw Error(ErrorCode::unsafe_head, "head variable ?" + h + " of '" + q.name + "' does not occur in the body");
    if (!head_seen.insert(h).second)
      throw Error(ErrorCode::syntax, "head variable ?" + h + " of '" + q.name + "' is repeated");
  }
  if (!is_connected(q.body))
    throw Error(ErrorCode::disconnected_body, "body of '" + q.name + "' is not connected");
  if (q.weight <= 0) throw Error(ErrorCode::invalid_config, "weight of '" + q.name + "' must be positive");
}

namespace detail {

inline bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::toupper(static_cast<unsigned char>(x)) == std::toupper(static_cast<unsigned char>(y));
         });
}

inline std::string read_word(Lexer& lex) {
  std::string w;
  while (!lex.at_end() && (std::isalnum(static_cast<unsigned char>(lex.peek())) || lex.peek() == '_')) w += lex.get();
  return w;
}

inline std::string read_variable(Lexer& lex) {
  lex.get();  // '?' or '$'
  std::string name = read_word(lex);
  if (!is_valid_variable_name(name)) lex.fail("invalid variable name '" + name + "'");
  return name;
}

inline bool is_unsupported_keyword(std::string_view w) {
  for (std::string_view k : {"OPTIONAL", "FILTER", "UNION", "GRAPH", "MINUS", "BIND", "VALUES", "SERVICE", "ORDER",
                             "LIMIT", "OFFSET", "GROUP", "HAVING", "DISTINCT", "REDUCED"})
    if (iequals(w, k)) return true;
  return false;
}

}  // namespace detail

/// Parses `SELECT ?v1 ... ?vk WHERE { tp1 . tp2 . ... }`. Constants are
/// interned into `dict`, so constants absent from the data get fresh ids.
inline ConjunctiveQuery parse_sparql(std::string_view text, const Rational& weight, Dictionary& dict,
                                     std::string name = "q") {
  detail::Lexer lex(text);
  auto unsupported = [&](const std::string& what) -> void {
    throw Error(ErrorCode::unsupported_feature, "line " + std::to_string(lex.line()) + ": " + what);
  };

  ConjunctiveQuery q;
  q.name = std::move(name);
  q.weight = weight;

  lex.skip_space();
  if (auto w = detail::read_word(lex); !detail::iequals(w, "SELECT")) lex.fail("expected SELECT");
  while (true) {
    lex.skip_space();
    char c = lex.peek();
    if (c == '?' || c == '$') {
      q.head.push_back(detail::read_variable(lex));
    } else if (c == '*') {
      unsupported("SELECT * is not supported; list the projected variables");
    } else if (c == '(') {
      unsupported("projection expressions are not supported");
    } else {
      auto w = detail::read_word(lex);
      if (detail::iequals(w, "WHERE")) break;
      if (detail::is_unsupported_keyword(w)) unsupported(w + " is not supported");
      lex.fail(w.empty() ? "expected variable or WHERE" : "unexpected '" + w + "'");
    }
  }
  if (q.head.empty()) throw Error(ErrorCode::empty_head, "SELECT lists no variables");
  lex.skip_space();
  if (lex.peek() != '{') lex.fail("expected '{'");
  lex.get();

  auto read_term = [&](Position pos) -> QTerm {
    lex.skip_space();
    char c = lex.peek();
    if (c == '?' || c == '$') {
      auto v = detail::read_variable(lex);
      if (pos == Position::property) unsupported("variable property ?" + v + " is not supported");
      return QTerm::var(v);
    }
    if (c == '<') {
      auto iri = lex.read_iri();
      if (pos == Position::property) {
        char n = lex.peek();
        if (n == '/' || n == '|' || n == '*' || n == '+' || n == '?')
          unsupported("property paths are not supported");
      }
      return QTerm::constant(dict.intern(Term::iri(iri)));
    }
    if (c == '"') {
      if (pos == Position::property) lex.fail("literal in property position");
      return QTerm::constant(dict.intern(Term::literal(lex.read_literal())));
    }
    if (pos == Position::property && (c == '^' || c == '!' || c == '('))
      unsupported("property paths are not supported");
    if (c == '_') unsupported("blank nodes are not supported");
    if (c == '{') unsupported("nested groups are not supported");
    auto w = detail::read_word(lex);
    if (detail::is_unsupported_keyword(w)) unsupported(w + " is not supported");
    lex.fail(w.empty() ? std::string("unexpected character '") + c + "'" : "unexpected '" + w + "'");
  };

  while (true) {
    lex.skip_space();
    if (lex.at_end()) lex.fail("unterminated group pattern");
    if (lex.peek() == '}') {
      lex.get();
      break;
    }
    TriplePattern tp;
    tp.s = read_term(Position::subject);
    tp.p = read_term(Position::property);
    tp.o = read_term(Position::object);
    q.body.push_back(std::move(tp));
    lex.skip_space();
    if (lex.peek() == '.') {
      lex.get();
    } else if (lex.peek() == ';' || lex.peek() == ',') {
      unsupported("predicate-object lists are not supported");
    } else if (lex.peek() != '}') {
      lex.fail("expected '.' or '}'");
    }
  }
  lex.skip_space();
  if (!lex.at_end()) {
    auto w = detail::read_word(lex);
    if (detail::is_unsupported_keyword(w)) unsupported(w + " is not supported");
    lex.fail("trailing content after '}'");
  }
  q.body = dedup_body(std::move(q.body));
  validate_query(q);
  return q;
}

inline std::string to_sparql(const QTerm& t, const Dictionary& dict) {
  return t.is_var() ? "?" + t.name() : to_ntriples(dict.term(t.id()));
}

inline std::string to_sparql(const Body& body, const Dictionary& dict) {
  std::string out;
  for (const auto& atom : body)
    out += to_sparql(atom.s, dict) + " " + to_sparql(atom.p, dict) + " " + to_sparql(atom.o, dict) + " . ";
  return out;
}

inline std::string to_sparql(const ConjunctiveQuery& q, const Dictionary& dict) {
  std::string out = "SELECT";
  for (const auto& h : q.head) out += " ?" + h;
  return out + " WHERE { " + to_sparql(q.body, dict) + "}";
}

/// Workload document: a JSON array of {"name", "weight" (optional, default 1), "sparql"}.
inline std::vector<ConjunctiveQuery> parse_workload(std::string_view text, Dictionary& dict) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::syntax, std::string("workload document: ") + e.what());
  }
  if (!doc.is_array()) throw Error(ErrorCode::syntax, "workload document must be an array");
  std::vector<ConjunctiveQuery> out;
  std::set<std::string> names;
  for (const auto& entry : doc) {
    if (!entry.is_object() || !entry.contains("name") || !entry.contains("sparql") || !entry["name"].is_string() ||
        !entry["sparql"].is_string())
      throw Error(ErrorCode::syntax, "workload entries need string fields \"name\" and \"sparql\"");
    auto name = entry["name"].get<std::string>();
    Rational weight = 1;
    if (entry.contains("weight")) {
      if (!entry["weight"].is_number()) throw Error(ErrorCode::syntax, "weight of '" + name + "' must be a number");
      weight = rational_from_double(entry["weight"].get<double>());
      if (weight <= 0) throw Error(ErrorCode::invalid_config, "weight of '" + name + "' must be positive");
    }
    if (!names.insert(name).second) throw Error(ErrorCode::duplicate_query, "query name '" + name + "' repeated");
    out.push_back(parse_sparql(entry["sparql"].get<std::string>(), weight, dict, name));
  }
  return out;
}

}  // namespace rdfviews
