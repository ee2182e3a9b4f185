#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "rdfviews/error.hpp"

namespace rdfviews {

using TermId = std::uint32_t;

/// Id 0 is never handed out; it marks "unset" in debugging output.
inline constexpr TermId kInvalidTermId = 0;

enum class TermKind : std::uint8_t { iri, literal };

struct Term {
  TermKind kind = TermKind::iri;
  std::string lexical;

  static Term iri(std::string text) { return {TermKind::iri, std::move(text)}; }
  static Term literal(std::string text) { return {TermKind::literal, std::move(text)}; }

  friend bool operator==(const Term&, const Term&) = default;
  friend auto operator<=>(const Term&, const Term&) = default;
};

struct TermHash {
  std::size_t operator()(const Term& t) const noexcept {
    return std::hash<std::string>{}(t.lexical) * 31u + static_cast<std::size_t>(t.kind);
  }
};

using TermTriple = std::array<Term, 3>;

/// N-Triples style rendering: `<iri>` or `"literal"` with escapes.
inline std::string to_ntriples(const Term& t) {
  if (t.kind == TermKind::iri) return "<" + t.lexical + ">";
  std::string out = "\"";
  for (char c : t.lexical) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

class Dictionary {
 public:
  /// Returns the existing id or assigns the next dense id.
  TermId intern(const Term& term) {
    if (auto it = forward_.find(term); it != forward_.end()) return it->second;
    reverse_.push_back(term);
    auto id = static_cast<TermId>(reverse_.size());
    forward_.emplace(term, id);
    return id;
  }

  [[nodiscard]] std::optional<TermId> find(const Term& term) const {
    if (auto it = forward_.find(term); it != forward_.end()) return it->second;
    return std::nullopt;
  }

  [[nodiscard]] const Term& term(TermId id) const {
    if (id == kInvalidTermId || id > reverse_.size())
      throw Error(ErrorCode::unknown_id, "term id " + std::to_string(id) + " is not in the dictionary");
    return reverse_[id - 1];
  }

  [[nodiscard]] bool contains(TermId id) const { return id != kInvalidTermId && id <= reverse_.size(); }
  [[nodiscard]] std::size_t size() const { return reverse_.size(); }

  /// `id<TAB>kind<TAB>lexical` per line, ids ascending.
  [[nodiscard]] std::string dump_tsv() const {
    std::string out;
    for (std::size_t i = 0; i < reverse_.size(); ++i) {
      const auto& t = reverse_[i];
      out += std::to_string(i + 1);
      out += t.kind == TermKind::iri ? "\tiri\t" : "\tliteral\t";
      for (char c : t.lexical) {
        if (c == '\t') out += "\\t";
        else if (c == '\n') out += "\\n";
        else if (c == '\\') out += "\\\\";
        else out += c;
      }
      out += '\n';
    }
    return out;
  }

 private:
  std::unordered_map<Term, TermId, TermHash> forward_;
  std::vector<Term> reverse_;
};

struct Triple {
  TermId s = kInvalidTermId;
  TermId p = kInvalidTermId;
  TermId o = kInvalidTermId;

  friend bool operator==(const Triple&, const Triple&) = default;
  friend auto operator<=>(const Triple&, const Triple&) = default;
};

struct TripleHash {
  std::size_t operator()(const Triple& t) const noexcept {
    std::uint64_t h = t.s;
    h = h * 0x9E3779B97F4A7C15ull + t.p;
    h = h * 0x9E3779B97F4A7C15ull + t.o;
    return static_cast<std::size_t>(h ^ (h >> 29));
  }
};

/// Lookup pattern; std::nullopt is a wildcard.
using AtomPattern = std::array<std::optional<TermId>, 3>;

namespace detail {
struct PairHash {
  std::size_t operator()(const std::pair<TermId, TermId>& k) const noexcept {
    return (static_cast<std::size_t>(k.first) << 32) ^ k.second;
  }
};
}  // namespace detail

/// Deduplicated triple sequence with property-first indexes. Immutable once built.
class TripleTable {
 public:
  TripleTable() = default;

  explicit TripleTable(std::vector<Triple> triples) {
    triples_.reserve(triples.size());
    for (const auto& t : triples) {
      if (!set_.insert(t).second) continue;
      auto pos = triples_.size();
      triples_.push_back(t);
      by_p_[t.p].push_back(pos);
      by_ps_[{t.p, t.s}].push_back(pos);
      by_po_[{t.p, t.o}].push_back(pos);
    }
  }

  [[nodiscard]] std::span<const Triple> triples() const { return triples_; }
  [[nodiscard]] std::size_t size() const { return triples_.size(); }
  [[nodiscard]] bool empty() const { return triples_.empty(); }
  [[nodiscard]] bool contains(const Triple& t) const { return set_.contains(t); }

  /// Calls `fn` for every triple matching the bound positions, in table order.
  template <typename Fn>
  void for_each_match(const AtomPattern& pattern, Fn&& fn) const {
    const auto& [s, p, o] = pattern;
    auto emit_positions = [&](const std::vector<std::size_t>& positions) {
      for (auto pos : positions) {
        const auto& t = triples_[pos];
        if ((!s || t.s == *s) && (!o || t.o == *o)) fn(t);
      }
    };
    if (p) {
      if (s) {
        if (auto it = by_ps_.find({*p, *s}); it != by_ps_.end()) emit_positions(it->second);
      } else if (o) {
        if (auto it = by_po_.find({*p, *o}); it != by_po_.end()) emit_positions(it->second);
      } else if (auto it = by_p_.find(*p); it != by_p_.end()) {
        emit_positions(it->second);
      }
      return;
    }
    for (const auto& t : triples_)
      if ((!s || t.s == *s) && (!o || t.o == *o)) fn(t);
  }

  /// Number of triples with property `p` (0 when absent).
  [[nodiscard]] std::size_t count_property(TermId p) const {
    auto it = by_p_.find(p);
    return it == by_p_.end() ? 0 : it->second.size();
  }

 private:
  std::vector<Triple> triples_;
  std::unordered_set<Triple, TripleHash> set_;
  std::unordered_map<TermId, std::vector<std::size_t>> by_p_;
  std::unordered_map<std::pair<TermId, TermId>, std::vector<std::size_t>, detail::PairHash> by_ps_;
  std::unordered_map<std::pair<TermId, TermId>, std::vector<std::size_t>, detail::PairHash> by_po_;
};

inline std::vector<Triple> lookup_atom(const TripleTable& table, const AtomPattern& pattern) {
  std::vector<Triple> out;
  table.for_each_match(pattern, [&](const Triple& t) { out.push_back(t); });
  return out;
}

struct PropertyStatistics {
  std::uint64_t count = 0;              // n_p
  std::uint64_t distinct_subjects = 0;  // ds_p
  std::uint64_t distinct_objects = 0;   // do_p

  friend bool operator==(const PropertyStatistics&, const PropertyStatistics&) = default;
};

struct DataStatistics {
  std::uint64_t total = 0;
  std::map<TermId, PropertyStatistics> properties;
  std::uint64_t distinct_properties = 0;
  std::uint64_t distinct_subjects = 0;
  std::uint64_t distinct_objects = 0;

  [[nodiscard]] PropertyStatistics property(TermId p) const {
    auto it = properties.find(p);
    return it == properties.end() ? PropertyStatistics{} : it->second;
  }

  friend bool operator==(const DataStatistics&, const DataStatistics&) = default;
};

/// Maintains statistics while triples are appended (duplicates must be filtered by the caller).
class StatisticsBuilder {
 public:
  void add(const Triple& t) {
    ++total_;
    auto& ps = per_property_[t.p];
    ++ps.count;
    if (ps.subjects.insert(t.s).second) ++ps.distinct_subjects;
    if (ps.objects.insert(t.o).second) ++ps.distinct_objects;
    subjects_.insert(t.s);
    objects_.insert(t.o);
  }

  [[nodiscard]] DataStatistics build() const {
    DataStatistics out;
    out.total = total_;
    for (const auto& [p, ps] : per_property_)
      out.properties[p] = {ps.count, ps.distinct_subjects, ps.distinct_objects};
    out.distinct_properties = per_property_.size();
    out.distinct_subjects = subjects_.size();
    out.distinct_objects = objects_.size();
    return out;
  }

 private:
  struct Running {
    std::uint64_t count = 0;
    std::uint64_t distinct_subjects = 0;
    std::uint64_t distinct_objects = 0;
    std::unordered_set<TermId> subjects;
    std::unordered_set<TermId> objects;
  };
  std::uint64_t total_ = 0;
  std::map<TermId, Running> per_property_;
  std::unordered_set<TermId> subjects_;
  std::unordered_set<TermId> objects_;
};

/// From-scratch recomputation, used to cross-check the incremental builder.
inline DataStatistics compute_statistics(const TripleTable& table) {
  DataStatistics out;
  out.total = table.size();
  std::map<TermId, std::set<TermId>> subj, obj;
  std::set<TermId> all_s, all_o;
  for (const auto& t : table.triples()) {
    ++out.properties[t.p].count;
    subj[t.p].insert(t.s);
    obj[t.p].insert(t.o);
    all_s.insert(t.s);
    all_o.insert(t.o);
  }
  for (auto& [p, ps] : out.properties) {
    ps.distinct_subjects = subj[p].size();
    ps.distinct_objects = obj[p].size();
  }
  out.distinct_properties = out.properties.size();
  out.distinct_subjects = all_s.size();
  out.distinct_objects = all_o.size();
  return out;
}

struct Dataset {
  Dictionary dictionary;
  TripleTable table;
  DataStatistics stats;
};

/// Ids are assigned in first-seen order scanning s, p, o of each triple.
inline Dataset load_dataset(std::span<const TermTriple> terms, Dictionary dictionary = {}) {
  std::vector<Triple> encoded;
  encoded.reserve(terms.size());
  for (const auto& [s, p, o] : terms) {
    Triple t;
    t.s = dictionary.intern(s);
    t.p = dictionary.intern(p);
    t.o = dictionary.intern(o);
    encoded.push_back(t);
  }
  TripleTable table(std::move(encoded));
  StatisticsBuilder builder;
  for (const auto& t : table.triples()) builder.add(t);
  return {std::move(dictionary), std::move(table), builder.build()};
}

inline std::vector<Term> decode_row(const Dictionary& dict, std::span<const TermId> row) {
  std::vector<Term> out;
  out.reserve(row.size());
  for (auto id : row) out.push_back(dict.term(id));
  return out;
}

namespace detail {

/// Shared lexer for the N-Triples subset and the SPARQL subset.
class Lexer {
 public:
  explicit Lexer(std::string_view text, std::size_t line = 1) : text_(text), line_(line) {}

  [[nodiscard]] std::size_t line() const { return line_; }
  [[nodiscard]] bool at_end() const { return pos_ >= text_.size(); }
  [[nodiscard]] char peek() const { return at_end() ? '\0' : text_[pos_]; }
  [[nodiscard]] std::string_view rest() const { return text_.substr(std::min(pos_, text_.size())); }
  char get() {
    char c = text_[pos_++];
    if (c == '\n') ++line_;
    return c;
  }

  void skip_space(bool allow_comments = true) {
    while (!at_end()) {
      char c = peek();
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        get();
      } else if (allow_comments && c == '#') {
        while (!at_end() && peek() != '\n') get();
      } else {
        break;
      }
    }
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::syntax, "line " + std::to_string(line_) + ": " + what);
  }

  std::string read_iri() {
    if (peek() != '<') fail("expected '<'");
    get();
    std::string out;
    while (!at_end() && peek() != '>') {
      char c = get();
      if (c == ' ' || c == '\n' || c == '\t' || c == '<' || c == '"') fail("invalid character in IRI");
      out += c;
    }
    if (at_end()) fail("unterminated IRI");
    get();
    if (out.empty()) fail("empty IRI");
    return out;
  }

  std::string read_literal() {
    if (peek() != '"') fail("expected '\"'");
    get();
    std::string out;
    while (true) {
      if (at_end() || peek() == '\n') fail("unterminated literal");
      char c = get();
      if (c == '"') break;
      if (c != '\\') {
        out += c;
        continue;
      }
      if (at_end()) fail("dangling escape");
      char e = get();
      switch (e) {
        case 't': out += '\t'; break;
        case 'n': out += '\n'; break;
        case 'r': out += '\r'; break;
        case 'b': out += '\b'; break;
        case 'f': out += '\f'; break;
        case '"': out += '"'; break;
        case '\'': out += '\''; break;
        case '\\': out += '\\'; break;
        case 'u':
        case 'U': append_codepoint(out, e == 'u' ? 4 : 8); break;
        default: fail(std::string("unknown escape \\") + e);
      }
    }
    if (peek() == '@' || peek() == '^') fail("typed or language-tagged literals are not supported");
    return out;
  }

 private:
  void append_codepoint(std::string& out, int digits) {
    std::uint32_t cp = 0;
    for (int i = 0; i < digits; ++i) {
      if (at_end()) fail("truncated unicode escape");
      char h = get();
      cp <<= 4;
      if (h >= '0' && h <= '9') cp |= static_cast<std::uint32_t>(h - '0');
      else if (h >= 'a' && h <= 'f') cp |= static_cast<std::uint32_t>(h - 'a' + 10);
      else if (h >= 'A' && h <= 'F') cp |= static_cast<std::uint32_t>(h - 'A' + 10);
      else fail("bad hex digit in unicode escape");
    }
    if (cp < 0x80) {
      out += static_cast<char>(cp);
    } else if (cp < 0x800) {
      out += static_cast<char>(0xC0 | (cp >> 6));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
      out += static_cast<char>(0xE0 | (cp >> 12));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x110000) {
      out += static_cast<char>(0xF0 | (cp >> 18));
      out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
      fail("code point out of range");
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_;
};

}  // namespace detail

/// Parses the supported N-Triples subset: `<iri> <iri> (<iri>|"literal") .`
/// one statement per line, `#` comments and blank lines allowed.
inline std::vector<TermTriple> parse_ntriples(std::string_view text) {
  std::vector<TermTriple> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    detail::Lexer lex(text.substr(start, end - start), line_no);
    start = end + 1;

    lex.skip_space();
    if (lex.at_end()) {
      if (end == text.size()) break;
      continue;
    }
    auto read_term = [&](bool object_position) -> Term {
      lex.skip_space(false);
      char c = lex.peek();
      if (c == '_')
        throw Error(ErrorCode::blank_node, "line " + std::to_string(line_no) + ": blank nodes are not supported");
      if (c == '<') return Term::iri(lex.read_iri());
      if (c == '"' && object_position) return Term::literal(lex.read_literal());
      lex.fail(object_position ? "expected IRI or literal" : "expected IRI");
    };
    TermTriple triple{read_term(false), read_term(false), read_term(true)};
    lex.skip_space(false);
    if (lex.peek() != '.') lex.fail("expected '.' at end of statement");
    lex.get();
    lex.skip_space();
    if (!lex.at_end()) lex.fail("trailing content after '.'");
    out.push_back(std::move(triple));
    if (end == text.size()) break;
  }
  return out;
}

}  // namespace rdfviews
