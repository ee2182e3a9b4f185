#pragma once

#include <deque>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "rdfviews/canonical.hpp"
#include "rdfviews/query.hpp"
#include "rdfviews/rdf_store.hpp"

namespace rdfviews {

/// IRIs of the reserved vocabulary. Defaults are the W3C ones.
struct Vocabulary {
  std::string type = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
  std::string sub_class_of = "http://www.w3.org/2000/01/rdf-schema#subClassOf";
  std::string sub_property_of = "http://www.w3.org/2000/01/rdf-schema#subPropertyOf";
  std::string domain = "http://www.w3.org/2000/01/rdf-schema#domain";
  std::string range = "http://www.w3.org/2000/01/rdf-schema#range";
};

struct RDFSchema {
  TermId type = kInvalidTermId;
  TermId sub_class_of = kInvalidTermId;
  TermId sub_property_of = kInvalidTermId;
  TermId domain_property = kInvalidTermId;
  TermId range_property = kInvalidTermId;

  std::set<std::pair<TermId, TermId>> subclass;     // (sub, super)
  std::set<std::pair<TermId, TermId>> subproperty;  // (sub, super)
  std::map<TermId, TermId> domain;
  std::map<TermId, TermId> range;
  /// Input triples that were not schema statements.
  std::size_t ignored = 0;

  [[nodiscard]] bool empty() const {
    return subclass.empty() && subproperty.empty() && domain.empty() && range.empty();
  }
};

/// Binds the vocabulary ids in `dict` without any statements.
inline RDFSchema empty_schema(Dictionary& dict, const Vocabulary& vocab = {}) {
  RDFSchema s;
  s.type = dict.intern(Term::iri(vocab.type));
  s.sub_class_of = dict.intern(Term::iri(vocab.sub_class_of));
  s.sub_property_of = dict.intern(Term::iri(vocab.sub_property_of));
  s.domain_property = dict.intern(Term::iri(vocab.domain));
  s.range_property = dict.intern(Term::iri(vocab.range));
  return s;
}

inline RDFSchema parse_schema(std::span<const TermTriple> terms, Dictionary& dict, const Vocabulary& vocab = {}) {
  RDFSchema schema = empty_schema(dict, vocab);
  const std::set<TermId> reserved{schema.type, schema.sub_class_of, schema.sub_property_of, schema.domain_property,
                                  schema.range_property};
  for (const auto& [st, pt, ot] : terms) {
    auto s = dict.intern(st);
    auto p = dict.intern(pt);
    auto o = dict.intern(ot);
    bool is_schema = p == schema.sub_class_of || p == schema.sub_property_of || p == schema.domain_property ||
                     p == schema.range_property;
    if (!is_schema) {
      ++schema.ignored;
      continue;
    }
    if (reserved.contains(s) || reserved.contains(o))
      throw Error(ErrorCode::reserved_vocabulary,
                  "schema statement about reserved term " + to_ntriples(reserved.contains(s) ? st : ot));
    if (p == schema.sub_class_of) {
      schema.subclass.emplace(s, o);
    } else if (p == schema.sub_property_of) {
      schema.subproperty.emplace(s, o);
    } else {
      auto& target = p == schema.domain_property ? schema.domain : schema.range;
      auto [it, inserted] = target.emplace(s, o);
      if (!inserted && it->second != o)
        throw Error(ErrorCode::multi_valued_schema, std::string(p == schema.domain_property ? "domain" : "range") +
                                                        " of " + to_ntriples(st) + " is declared twice");
    }
  }
  return schema;
}

/// Reflexive-transitive closures of subClassOf and subPropertyOf.
struct SchemaClosure {
  std::map<TermId, std::set<TermId>> class_supers;    // c -> {c' | c ⊑* c'}
  std::map<TermId, std::set<TermId>> class_subs;      // c -> {c' | c' ⊑* c}
  std::map<TermId, std::set<TermId>> property_supers;
  std::map<TermId, std::set<TermId>> property_subs;

  /// {c' | c' ⊑* c}; a class not mentioned in the schema only has itself.
  [[nodiscard]] std::set<TermId> subclasses_of(TermId c) const { return lookup(class_subs, c); }
  [[nodiscard]] std::set<TermId> superclasses_of(TermId c) const { return lookup(class_supers, c); }
  [[nodiscard]] std::set<TermId> subproperties_of(TermId p) const { return lookup(property_subs, p); }
  [[nodiscard]] std::set<TermId> superproperties_of(TermId p) const { return lookup(property_supers, p); }

  [[nodiscard]] std::set<std::pair<TermId, TermId>> subclass_pairs() const { return pairs(class_supers); }
  [[nodiscard]] std::set<std::pair<TermId, TermId>> subproperty_pairs() const { return pairs(property_supers); }

 private:
  static std::set<TermId> lookup(const std::map<TermId, std::set<TermId>>& m, TermId x) {
    auto it = m.find(x);
    return it == m.end() ? std::set<TermId>{x} : it->second;
  }
  static std::set<std::pair<TermId, TermId>> pairs(const std::map<TermId, std::set<TermId>>& supers) {
    std::set<std::pair<TermId, TermId>> out;
    for (const auto& [sub, sups] : supers)
      for (auto sup : sups) out.emplace(sub, sup);
    return out;
  }
};

namespace detail {

inline void close_relation(const std::set<std::pair<TermId, TermId>>& base, const std::set<TermId>& mentioned,
                           std::map<TermId, std::set<TermId>>& supers, std::map<TermId, std::set<TermId>>& subs) {
  std::map<TermId, std::vector<TermId>> up;
  for (const auto& [a, b] : base) up[a].push_back(b);
  for (auto start : mentioned) {
    auto& reach = supers[start];
    std::deque<TermId> work{start};
    reach.insert(start);
    while (!work.empty()) {
      auto x = work.front();
      work.pop_front();
      if (auto it = up.find(x); it != up.end())
        for (auto y : it->second)
          if (reach.insert(y).second) work.push_back(y);
    }
  }
  for (const auto& [a, sups] : supers)
    for (auto b : sups) subs[b].insert(a);
}

}  // namespace detail

inline SchemaClosure compute_closure(const RDFSchema& schema) {
  std::set<TermId> classes, properties;
  for (const auto& [a, b] : schema.subclass) classes.insert({a, b});
  for (const auto& [a, b] : schema.subproperty) properties.insert({a, b});
  for (const auto& [p, c] : schema.domain) {
    properties.insert(p);
    classes.insert(c);
  }
  for (const auto& [p, c] : schema.range) {
    properties.insert(p);
    classes.insert(c);
  }
  SchemaClosure out;
  detail::close_relation(schema.subclass, classes, out.class_supers, out.class_subs);
  detail::close_relation(schema.subproperty, properties, out.property_supers, out.property_subs);
  return out;
}

/// A workload query compiled into a union of conjunctive branches.
struct UnionQuery {
  std::string name;
  std::vector<std::string> head;
  std::vector<ConjunctiveQuery> branches;
  Rational weight = 1;
};

inline UnionQuery identity_union(const ConjunctiveQuery& q) {
  ConjunctiveQuery branch = q;
  branch.body = dedup_body(branch.body);
  return {q.name, q.head, {branch}, q.weight};
}

inline constexpr std::size_t kDefaultBranchCap = 1024;

namespace detail {

/// Placeholder for a fresh variable in expansion templates; '#' cannot occur
/// in a parsed variable name.
inline const std::string kFreshPlaceholder = "#fresh";

inline std::vector<TriplePattern> expand_atom(const TriplePattern& atom, const SchemaClosure& closure,
                                              const RDFSchema& schema) {
  std::vector<TriplePattern> out;
  auto push = [&](TriplePattern tp) {
    if (std::find(out.begin(), out.end(), tp) == out.end()) out.push_back(std::move(tp));
  };
  auto ordered = [](TermId first, std::set<TermId> rest) {
    std::vector<TermId> v{first};
    rest.erase(first);
    v.insert(v.end(), rest.begin(), rest.end());
    return v;
  };
  if (atom.p.is_var()) {
    push(atom);
    return out;
  }
  if (atom.p.id() == schema.type) {
    if (atom.o.is_var()) {
      if (!schema.subclass.empty() || !schema.domain.empty() || !schema.range.empty())
        throw Error(ErrorCode::unsupported_feature,
                    "rdf:type atom with variable class ?" + atom.o.name() + " cannot be reformulated");
      push(atom);
      return out;
    }
    auto cls = atom.o.id();
    auto subs = closure.subclasses_of(cls);
    for (auto c : ordered(cls, subs)) push({atom.s, atom.p, QTerm::constant(c)});
    auto fresh = QTerm::var(kFreshPlaceholder);
    for (const auto& [p, c] : schema.domain)
      if (subs.contains(c))
        for (auto p0 : ordered(p, closure.subproperties_of(p))) push({atom.s, QTerm::constant(p0), fresh});
    for (const auto& [p, c] : schema.range)
      if (subs.contains(c))
        for (auto p0 : ordered(p, closure.subproperties_of(p))) push({fresh, QTerm::constant(p0), atom.s});
    return out;
  }
  auto p = atom.p.id();
  for (auto p0 : ordered(p, closure.subproperties_of(p))) push({atom.s, QTerm::constant(p0), atom.o});
  return out;
}

}  // namespace detail

/// Compiles subclass, subproperty, domain and range knowledge into `q`: every
/// atom is replaced by one member of its expansion set, and the result is the
/// cross product of the choices, deduplicated up to variable renaming.
inline UnionQuery reformulate_query(const ConjunctiveQuery& q, const SchemaClosure& closure, const RDFSchema& schema,
                                    std::size_t cap = kDefaultBranchCap) {
  std::vector<std::vector<TriplePattern>> choices;
  std::size_t product = 1;
  for (const auto& atom : dedup_body(q.body)) {
    choices.push_back(detail::expand_atom(atom, closure, schema));
    auto n = choices.back().size();
    product = product > std::numeric_limits<std::size_t>::max() / n ? std::numeric_limits<std::size_t>::max()
                                                                     : product * n;
  }
  if (product > cap)
    throw Error(ErrorCode::branch_cap_exceeded, "query '" + q.name + "' needs " + std::to_string(product) +
                                                    " branches, cap is " + std::to_string(cap));

  auto used = variables_of(q.body);
  std::set<std::string> taken(used.begin(), used.end());

  UnionQuery out{q.name, q.head, {}, q.weight};
  std::set<std::string> keys;
  std::vector<std::size_t> pick(choices.size(), 0);
  while (true) {
    ConjunctiveQuery branch;
    branch.name = q.name;
    branch.head = q.head;
    branch.weight = q.weight;
    int fresh_counter = 0;
    for (std::size_t i = 0; i < choices.size(); ++i) {
      auto atom = choices[i][pick[i]];
      for (auto pos : kPositions) {
        auto& t = atom.at(pos);
        if (t.is_var() && t.name() == detail::kFreshPlaceholder) {
          std::string name;
          do name = "_f" + std::to_string(++fresh_counter);
          while (taken.contains(name));
          t = QTerm::var(name);
        }
      }
      branch.body.push_back(std::move(atom));
    }
    branch.body = dedup_body(std::move(branch.body));
    if (keys.insert(canonical_form(branch.body, branch.head)).second) out.branches.push_back(std::move(branch));

    bool advanced = false;
    for (std::size_t i = choices.size(); i-- > 0;) {
      if (++pick[i] < choices[i].size()) {
        advanced = true;
        break;
      }
      pick[i] = 0;
    }
    if (!advanced) break;
  }
  for (std::size_t i = 0; i < out.branches.size(); ++i)
    if (out.branches.size() > 1) out.branches[i].name = q.name + "#" + std::to_string(i + 1);
  return out;
}

/// Least fixpoint of the instance-level rules, applied naively with the
/// direct (unclosed) schema edges. Kept independent of compute_closure and
/// reformulate_query so it can serve as their oracle.
inline TripleTable saturate(const TripleTable& table, const RDFSchema& schema) {
  std::vector<Triple> all(table.triples().begin(), table.triples().end());
  std::unordered_set<Triple, TripleHash> seen(all.begin(), all.end());
  std::map<TermId, std::vector<TermId>> sub_prop, sub_class;
  for (const auto& [a, b] : schema.subproperty) sub_prop[a].push_back(b);
  for (const auto& [a, b] : schema.subclass) sub_class[a].push_back(b);

  auto add = [&](Triple t) {
    if (seen.insert(t).second) all.push_back(t);
  };
  bool changed = true;
  while (changed) {
    changed = false;
    auto before = all.size();
    for (std::size_t i = 0; i < all.size(); ++i) {
      auto t = all[i];
      if (auto it = sub_prop.find(t.p); it != sub_prop.end())
        for (auto sup : it->second) add({t.s, sup, t.o});
      if (auto it = schema.domain.find(t.p); it != schema.domain.end()) add({t.s, schema.type, it->second});
      if (auto it = schema.range.find(t.p); it != schema.range.end()) add({t.o, schema.type, it->second});
      if (t.p == schema.type)
        if (auto it = sub_class.find(t.o); it != sub_class.end())
          for (auto sup : it->second) add({t.s, schema.type, sup});
    }
    changed = all.size() != before;
  }
  return TripleTable(std::move(all));
}

}  // namespace rdfviews
