#pragma once

#include <algorithm>
#include <cctype>
#include <chrono>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "rdfviews/rdfs.hpp"
#include "rdfviews/view_state.hpp"

namespace rdfviews {

using Row = std::vector<TermId>;

/// A set of rows over named columns; rows are kept sorted and unique.
struct Relation {
  std::vector<std::string> columns;
  std::vector<Row> rows;

  void normalize() {
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  }

  [[nodiscard]] std::size_t column_index(const std::string& name) const {
    auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw Error(ErrorCode::unknown_view, "relation has no column " + name);
    return static_cast<std::size_t>(it - columns.begin());
  }

  friend bool operator==(const Relation&, const Relation&) = default;
};

using MaterializedSet = std::map<ViewId, Relation>;

namespace detail {

class BodyEvaluator {
 public:
  BodyEvaluator(const Body& body, const std::vector<std::string>& head, const TripleTable& table)
      : table_(table) {
    body_ = dedup_body(body);
    auto vars = variables_of(body_);
    for (std::size_t i = 0; i < vars.size(); ++i) var_index_[vars[i]] = i;
    binding_.assign(vars.size(), kInvalidTermId);
    for (const auto& h : head) head_.push_back(var_index_.at(h));
    order_atoms();
  }

  std::vector<Row> run() {
    if (!body_.empty()) descend(0);
    std::sort(out_.begin(), out_.end());
    out_.erase(std::unique(out_.begin(), out_.end()), out_.end());
    return std::move(out_);
  }

 private:
  AtomPattern pattern_of(const TriplePattern& atom) const {
    AtomPattern pat;
    for (auto pos : kPositions) {
      const auto& t = atom.at(pos);
      auto k = static_cast<std::size_t>(pos);
      if (t.is_const()) pat[k] = t.id();
      else if (auto b = binding_[var_index_.at(t.name())]; b != kInvalidTermId) pat[k] = b;
    }
    return pat;
  }

  std::size_t estimated_matches(const TriplePattern& atom, const std::vector<bool>& bound) const {
    std::size_t n = atom.p.is_const() ? table_.count_property(atom.p.id()) : table_.size();
    auto is_bound = [&](const QTerm& t) { return t.is_const() || bound[var_index_.at(t.name())]; };
    if (is_bound(atom.s)) n = n / 16 + 1;
    if (is_bound(atom.o)) n = n / 16 + 1;
    return n;
  }

  /// Greedy: cheapest atom first, then prefer atoms sharing a bound variable.
  void order_atoms() {
    std::vector<bool> used(body_.size(), false), bound(var_index_.size(), false);
    for (std::size_t step = 0; step < body_.size(); ++step) {
      std::size_t pick = body_.size();
      std::pair<int, std::size_t> best{2, 0};
      for (std::size_t a = 0; a < body_.size(); ++a) {
        if (used[a]) continue;
        bool connected = step == 0;
        for (auto pos : kPositions)
          if (body_[a].at(pos).is_var() && bound[var_index_.at(body_[a].at(pos).name())]) connected = true;
        std::pair<int, std::size_t> score{connected ? 0 : 1, estimated_matches(body_[a], bound)};
        if (pick == body_.size() || score < best) {
          best = score;
          pick = a;
        }
      }
      used[pick] = true;
      order_.push_back(pick);
      for (auto pos : kPositions)
        if (body_[pick].at(pos).is_var()) bound[var_index_.at(body_[pick].at(pos).name())] = true;
    }
  }

  void descend(std::size_t depth) {
    if (depth == order_.size()) {
      Row row;
      row.reserve(head_.size());
      for (auto h : head_) row.push_back(binding_[h]);
      out_.push_back(std::move(row));
      return;
    }
    const auto& atom = body_[order_[depth]];
    auto pat = pattern_of(atom);
    table_.for_each_match(pat, [&](const Triple& t) {
      std::array<TermId, 3> values{t.s, t.p, t.o};
      std::vector<std::size_t> newly;
      bool ok = true;
      for (auto pos : kPositions) {
        const auto& term = atom.at(pos);
        if (!term.is_var()) continue;
        auto vi = var_index_.at(term.name());
        auto value = values[static_cast<std::size_t>(pos)];
        if (binding_[vi] == kInvalidTermId) {
          binding_[vi] = value;
          newly.push_back(vi);
        } else if (binding_[vi] != value) {
          ok = false;
          break;
        }
      }
      if (ok) descend(depth + 1);
      for (auto vi : newly) binding_[vi] = kInvalidTermId;
    });
  }

  const TripleTable& table_;
  Body body_;
  std::map<std::string, std::size_t> var_index_;
  std::vector<TermId> binding_;
  std::vector<std::size_t> head_;
  std::vector<std::size_t> order_;
  std::vector<Row> out_;
};

}  // namespace detail

/// Set of head bindings of `body` over `table`, using index nested-loop joins.
inline Relation evaluate_cq(const Body& body, const std::vector<std::string>& head, const TripleTable& table) {
  return {head, detail::BodyEvaluator(body, head, table).run()};
}

inline Relation evaluate_cq(const ConjunctiveQuery& q, const TripleTable& table) {
  return evaluate_cq(q.body, q.head, table);
}

/// Baseline answer of a reformulated query: the union of its branches.
inline Relation evaluate_union(const UnionQuery& uq, const TripleTable& table) {
  Relation out{uq.head, {}};
  for (const auto& b : uq.branches) {
    auto r = evaluate_cq(b.body, uq.head, table);
    out.rows.insert(out.rows.end(), r.rows.begin(), r.rows.end());
  }
  out.normalize();
  return out;
}

inline MaterializedSet materialize_state(const State& state, const TripleTable& table) {
  MaterializedSet out;
  for (const auto& [id, v] : state.views) out.emplace(id, evaluate_cq(v.body, v.head, table));
  return out;
}

inline Relation evaluate_plan(const Plan& plan, const MaterializedSet& mats) {
  return std::visit(
      [&](const auto& op) -> Relation {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, ScanOp>) {
          auto it = mats.find(op.view);
          if (it == mats.end()) throw Error(ErrorCode::missing_view, view_name(op.view) + " is not materialized");
          return {op.columns, it->second.rows};
        } else if constexpr (std::is_same_v<T, SelectOp>) {
          auto in = evaluate_plan(op.child, mats);
          auto c = in.column_index(op.column);
          Relation out{in.columns, {}};
          for (auto& row : in.rows)
            if (row[c] == op.value) out.rows.push_back(std::move(row));
          return out;
        } else if constexpr (std::is_same_v<T, ProjectOp>) {
          auto in = evaluate_plan(op.child, mats);
          std::vector<std::size_t> idx;
          for (const auto& c : op.columns) idx.push_back(in.column_index(c));
          Relation out{op.columns, {}};
          out.rows.reserve(in.rows.size());
          for (const auto& row : in.rows) {
            Row r;
            r.reserve(idx.size());
            for (auto i : idx) r.push_back(row[i]);
            out.rows.push_back(std::move(r));
          }
          out.normalize();
          return out;
        } else if constexpr (std::is_same_v<T, JoinOp>) {
          auto left = evaluate_plan(op.left, mats);
          auto right = evaluate_plan(op.right, mats);
          std::vector<std::size_t> lk, rk;
          for (const auto& [l, r] : op.on) {
            lk.push_back(left.column_index(l));
            rk.push_back(right.column_index(r));
          }
          auto key_of = [](const Row& row, const std::vector<std::size_t>& idx) {
            Row k;
            for (auto i : idx) k.push_back(row[i]);
            return k;
          };
          std::map<Row, std::vector<const Row*>> build;
          for (const auto& row : right.rows) build[key_of(row, rk)].push_back(&row);
          Relation out{left.columns, {}};
          out.columns.insert(out.columns.end(), right.columns.begin(), right.columns.end());
          for (const auto& row : left.rows) {
            auto it = build.find(key_of(row, lk));
            if (it == build.end()) continue;
            for (const auto* match : it->second) {
              Row r = row;
              r.insert(r.end(), match->begin(), match->end());
              out.rows.push_back(std::move(r));
            }
          }
          out.normalize();
          return out;
        } else {
          Relation out{plan->columns, {}};
          for (const auto& child : op.children) {
            auto r = evaluate_plan(child, mats);
            out.rows.insert(out.rows.end(), r.rows.begin(), r.rows.end());
          }
          out.normalize();
          return out;
        }
      },
      plan->op);
}

struct QueryAnswer {
  std::vector<std::string> columns;
  std::vector<std::vector<Term>> rows;
  std::chrono::nanoseconds elapsed{0};
};

inline QueryAnswer decode_relation(const Relation& r, const Dictionary& dict) {
  QueryAnswer out;
  out.columns = r.columns;
  for (const auto& row : r.rows) out.rows.push_back(decode_row(dict, row));
  return out;
}

/// Answers a workload query from the materialized views through its stored rewriting.
inline QueryAnswer answer_query(const std::string& name, const State& state, const MaterializedSet& mats,
                                const Dictionary& dict) {
  auto it = state.rewritings.find(name);
  if (it == state.rewritings.end()) throw Error(ErrorCode::unknown_query, "no query named '" + name + "'");
  auto start = std::chrono::steady_clock::now();
  auto rel = evaluate_plan(it->second, mats);
  auto elapsed = std::chrono::steady_clock::now() - start;
  auto out = decode_relation(rel, dict);
  out.elapsed = std::chrono::duration_cast<std::chrono::nanoseconds>(elapsed);
  return out;
}

namespace detail {

inline std::string sql_identifier(const std::string& name) {
  static const std::set<std::string> reserved{"ALL",    "AND",   "AS",    "BY",     "CREATE", "DISTINCT", "FROM",
                                              "GROUP",  "HAVING", "IN",   "IS",     "JOIN",   "NOT",      "NULL",
                                              "ON",     "OR",    "ORDER", "SELECT", "TABLE",  "UNION",    "WHERE",
                                              "INSERT", "UPDATE", "DELETE", "VALUES", "USER", "CHECK",    "KEY"};
  std::string upper;
  for (char c : name) upper += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  bool plain = !name.empty() && std::isalpha(static_cast<unsigned char>(name[0])) &&
               std::all_of(name.begin(), name.end(),
                           [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
  if (plain && !reserved.contains(upper)) return name;
  std::string quoted = "\"";
  for (char c : name) quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
  return quoted + "\"";
}

}  // namespace detail

/// `CREATE TABLE <view> AS SELECT ... FROM tt t0, tt t1, ... WHERE ...;`
/// per view over the integer triple table tt(s, p, o). Aliases follow the
/// canonical atom order.
inline std::string view_sql(const View& v) {
  auto labeling = canonical_labeling(v.body, {});
  std::map<std::string, std::string> first_column;
  std::vector<std::string> conditions;
  std::string from;
  for (std::size_t k = 0; k < labeling.atom_order.size(); ++k) {
    const auto& atom = v.body[labeling.atom_order[k]];
    std::string alias = "t" + std::to_string(k);
    from += (k ? ", tt " : "tt ") + alias;
    for (auto pos : kPositions) {
      auto col = alias + "." + std::string(to_string(pos));
      const auto& t = atom.at(pos);
      if (t.is_const()) {
        conditions.push_back(col + " = " + std::to_string(t.id()));
      } else if (auto [it, inserted] = first_column.emplace(t.name(), col); !inserted) {
        conditions.push_back(it->second + " = " + col);
      }
    }
  }
  std::string sql = "CREATE TABLE " + v.name() + " AS SELECT ";
  for (std::size_t i = 0; i < v.head.size(); ++i)
    sql += (i ? ", " : "") + first_column.at(v.head[i]) + " AS " + detail::sql_identifier(v.head[i]);
  sql += " FROM " + from;
  for (std::size_t i = 0; i < conditions.size(); ++i) sql += (i ? " AND " : " WHERE ") + conditions[i];
  return sql + ";";
}

inline std::string export_views_sql(const State& state) {
  std::string out;
  for (const auto& [id, v] : state.views) out += view_sql(v) + "\n";
  return out;
}

}  // namespace rdfviews
