#pragma once

#include <bit>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rdfviews/rational.hpp"
#include "rdfviews/view_state.hpp"

namespace rdfviews {

struct QualityWeights {
  Rational eval = 1;
  Rational maintenance = 1;
  Rational space = 1;

  void validate() const {
    if (eval < 0 || maintenance < 0 || space < 0)
      throw Error(ErrorCode::invalid_config, "quality weights must be non-negative");
    if (eval == 0 && maintenance == 0 && space == 0)
      throw Error(ErrorCode::invalid_config, "at least one quality weight must be positive");
  }
};

struct ViewCost {
  Rational cardinality;
  Rational space;
  Rational maintenance;
};

struct CostReport {
  Rational eval;
  Rational maintenance;
  Rational space;
  Rational total;
  std::map<ViewId, ViewCost> per_view;
  /// Unweighted plan cost of each rewriting.
  std::map<std::string, Rational> per_query;
};

// Cardinality estimation under independence: every atom contributes its
// matching-triple count scaled by constant selectivities, and every variable
// occurring k times contributes the product of its k reciprocal distinct
// counts times the smallest of them, i.e. 1/max(d1,d2) for a two-way join.

/// Distinct-value count for a term position of `atom`, never below 1.
inline std::uint64_t distinct_count(const TriplePattern& atom, Position pos, const DataStatistics& stats) {
  std::uint64_t d = 0;
  if (pos == Position::property) {
    d = stats.distinct_properties;
  } else if (atom.p.is_const()) {
    auto ps = stats.property(atom.p.id());
    d = pos == Position::subject ? ps.distinct_subjects : ps.distinct_objects;
  } else {
    d = pos == Position::subject ? stats.distinct_subjects : stats.distinct_objects;
  }
  return d == 0 ? 1 : d;
}

inline Rational atom_base(const TriplePattern& atom, const DataStatistics& stats) {
  Rational base = atom.p.is_const() ? Rational(stats.property(atom.p.id()).count) : Rational(stats.total);
  if (atom.s.is_const()) base /= distinct_count(atom, Position::subject, stats);
  if (atom.o.is_const()) base /= distinct_count(atom, Position::object, stats);
  return base;
}

/// Per variable: min(d) / Π d over its occurrences.
inline Rational join_factor(const Body& body, const DataStatistics& stats) {
  std::map<std::string, std::vector<std::uint64_t>> occurrences;
  for (const auto& atom : body)
    for (auto pos : kPositions)
      if (atom.at(pos).is_var()) occurrences[atom.at(pos).name()].push_back(distinct_count(atom, pos, stats));
  Rational factor = 1;
  for (const auto& [var, ds] : occurrences) {
    std::uint64_t lo = ds.front();
    for (auto d : ds) {
      factor /= d;
      lo = std::min(lo, d);
    }
    factor *= lo;
  }
  return factor;
}

inline Rational estimate_cardinality(const Body& body, const DataStatistics& stats) {
  Rational card = 1;
  for (const auto& atom : dedup_body(body)) card *= atom_base(atom, stats);
  if (card == 0) return 0;
  return card * join_factor(dedup_body(body), stats);
}

/// Sum over atoms of the estimated result of one inserted triple matching
/// that atom, joined with the rest of the body.
inline Rational maintenance_cost(const Body& raw_body, const DataStatistics& stats) {
  auto body = dedup_body(raw_body);
  auto factor = join_factor(body, stats);
  Rational total = 0;
  for (std::size_t a = 0; a < body.size(); ++a) {
    Rational term = factor;
    for (std::size_t b = 0; b < body.size(); ++b)
      if (b != a) term *= atom_base(body[b], stats);
    total += term;
  }
  return total;
}

inline Rational maintenance_cost(const View& v, const DataStatistics& stats) { return maintenance_cost(v.body, stats); }

/// Smallest distinct count over the occurrences of each view variable.
inline std::map<std::string, std::uint64_t> column_distinct_counts(const View& v, const DataStatistics& stats) {
  std::map<std::string, std::uint64_t> out;
  for (const auto& atom : v.body)
    for (auto pos : kPositions)
      if (atom.at(pos).is_var()) {
        auto d = distinct_count(atom, pos, stats);
        auto [it, inserted] = out.emplace(atom.at(pos).name(), d);
        if (!inserted) it->second = std::min(it->second, d);
      }
  return out;
}

struct PlanEstimate {
  Rational cost;
  Rational cardinality;
  std::map<std::string, std::uint64_t> distinct;
};

/// cost(Scan)=card(view); Select keeps the child cost and scales the
/// cardinality by 1/d(column); Join adds both child costs and its output,
/// whose size uses 1/max(d_left, d_right) per equality; Project and Union
/// sum child costs.
inline PlanEstimate plan_cost(const Plan& plan, const DataStatistics& stats, const State& state) {
  return std::visit(
      [&](const auto& op) -> PlanEstimate {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, ScanOp>) {
          const View& v = state.view(op.view);
          PlanEstimate e;
          e.cardinality = estimate_cardinality(v.body, stats);
          e.cost = e.cardinality;
          auto d = column_distinct_counts(v, stats);
          for (std::size_t i = 0; i < v.head.size(); ++i) e.distinct[op.columns[i]] = d.at(v.head[i]);
          return e;
        } else if constexpr (std::is_same_v<T, SelectOp>) {
          auto e = plan_cost(op.child, stats, state);
          e.cardinality /= e.distinct.at(op.column);
          e.distinct[op.column] = 1;
          return e;
        } else if constexpr (std::is_same_v<T, JoinOp>) {
          auto l = plan_cost(op.left, stats, state);
          auto r = plan_cost(op.right, stats, state);
          PlanEstimate e;
          e.cardinality = l.cardinality * r.cardinality;
          e.distinct = l.distinct;
          e.distinct.insert(r.distinct.begin(), r.distinct.end());
          for (const auto& [lc, rc] : op.on) {
            auto dl = e.distinct.at(lc);
            auto dr = e.distinct.at(rc);
            e.cardinality /= std::max(dl, dr);
            e.distinct[lc] = e.distinct[rc] = std::min(dl, dr);
          }
          e.cost = l.cost + r.cost + e.cardinality;
          return e;
        } else if constexpr (std::is_same_v<T, ProjectOp>) {
          auto c = plan_cost(op.child, stats, state);
          PlanEstimate e{c.cost, c.cardinality, {}};
          for (const auto& col : op.columns) e.distinct[col] = c.distinct.at(col);
          return e;
        } else {
          PlanEstimate e{0, 0, {}};
          for (const auto& child : op.children) {
            auto c = plan_cost(child, stats, state);
            e.cost += c.cost;
            e.cardinality += c.cardinality;
            for (const auto& [col, d] : c.distinct) e.distinct[col] = std::max(e.distinct[col], d);
          }
          return e;
        }
      },
      plan->op);
}

namespace detail {

struct PlanLeaf {
  Plan plan;
  std::set<std::string> columns;
};

inline void flatten_branch(const Plan& plan, std::vector<PlanLeaf>& leaves,
                           std::vector<std::pair<std::string, std::string>>& equalities) {
  std::visit(
      [&](const auto& op) {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, ScanOp>) {
          leaves.push_back({plan, {op.columns.begin(), op.columns.end()}});
        } else if constexpr (std::is_same_v<T, SelectOp>) {
          flatten_branch(op.child, leaves, equalities);
          for (auto& leaf : leaves)
            if (leaf.columns.contains(op.column)) leaf.plan = make_select(leaf.plan, op.column, op.value);
        } else if constexpr (std::is_same_v<T, ProjectOp>) {
          flatten_branch(op.child, leaves, equalities);
        } else if constexpr (std::is_same_v<T, JoinOp>) {
          flatten_branch(op.left, leaves, equalities);
          flatten_branch(op.right, leaves, equalities);
          equalities.insert(equalities.end(), op.on.begin(), op.on.end());
        } else {
          throw Error(ErrorCode::unsupported_feature, "union below the root of a rewriting");
        }
      },
      plan->op);
}

inline constexpr std::size_t kMaxReorderedLeaves = 12;

}  // namespace detail

/// Re-plans a rewriting: selections move onto the scans they filter and the
/// scans are joined in the cheapest left-deep order. The result depends only
/// on the scanned views, not on the transitions that produced the plan.
inline Plan optimize_rewriting(const Plan& plan, const DataStatistics& stats, const State& state) {
  if (const auto* u = std::get_if<UnionOp>(&plan->op)) {
    std::vector<Plan> children;
    for (const auto& c : u->children) children.push_back(optimize_rewriting(c, stats, state));
    return make_union(std::move(children));
  }
  std::vector<detail::PlanLeaf> leaves;
  std::vector<std::pair<std::string, std::string>> equalities;
  detail::flatten_branch(plan, leaves, equalities);
  const auto n = leaves.size();

  auto join_onto = [&](const Plan& left, const std::set<std::string>& left_cols, std::size_t leaf) {
    std::vector<std::pair<std::string, std::string>> on;
    for (const auto& [a, b] : equalities) {
      if (left_cols.contains(a) && leaves[leaf].columns.contains(b)) on.emplace_back(a, b);
      else if (left_cols.contains(b) && leaves[leaf].columns.contains(a)) on.emplace_back(b, a);
    }
    return make_join(left, leaves[leaf].plan, std::move(on));
  };

  Plan body;
  if (n > detail::kMaxReorderedLeaves) {
    body = leaves[0].plan;
    std::set<std::string> cols = leaves[0].columns;
    for (std::size_t i = 1; i < n; ++i) {
      body = join_onto(body, cols, i);
      cols.insert(leaves[i].columns.begin(), leaves[i].columns.end());
    }
  } else {
    struct Entry {
      Plan plan;
      Rational cost;
      std::set<std::string> columns;
    };
    std::vector<std::optional<Entry>> best(std::size_t{1} << n);
    for (std::size_t i = 0; i < n; ++i)
      best[std::size_t{1} << i] = Entry{leaves[i].plan, plan_cost(leaves[i].plan, stats, state).cost, leaves[i].columns};
    for (std::size_t set = 1; set < best.size(); ++set) {
      if (std::popcount(set) < 2) continue;
      for (std::size_t i = 0; i < n; ++i) {
        std::size_t rest = set & ~(std::size_t{1} << i);
        if (!(set >> i & 1) || !best[rest]) continue;
        auto candidate = join_onto(best[rest]->plan, best[rest]->columns, i);
        auto cost = plan_cost(candidate, stats, state).cost;
        if (!best[set] || cost < best[set]->cost) {
          auto cols = best[rest]->columns;
          cols.insert(leaves[i].columns.begin(), leaves[i].columns.end());
          best[set] = Entry{candidate, cost, std::move(cols)};
        }
      }
    }
    body = best.back()->plan;
  }
  return make_project(body, plan->columns);
}

inline State optimize_rewritings(State state, const DataStatistics& stats) {
  for (auto& [name, plan] : state.rewritings) plan = optimize_rewriting(plan, stats, state);
  return state;
}

inline CostReport state_quality(const State& state, const DataStatistics& stats, const QualityWeights& weights,
                                const std::map<std::string, Rational>& query_weights) {
  CostReport r;
  for (const auto& [name, plan] : state.rewritings) {
    auto cost = plan_cost(plan, stats, state).cost;
    r.per_query[name] = cost;
    auto w = query_weights.find(name);
    r.eval += (w == query_weights.end() ? Rational(1) : w->second) * cost;
  }
  for (const auto& [id, v] : state.views) {
    ViewCost vc;
    vc.cardinality = estimate_cardinality(v.body, stats);
    vc.space = vc.cardinality * static_cast<std::uint64_t>(v.head.size());
    vc.maintenance = maintenance_cost(v, stats);
    r.maintenance += vc.maintenance;
    r.space += vc.space;
    r.per_view[id] = vc;
  }
  r.total = weights.eval * r.eval + weights.maintenance * r.maintenance + weights.space * r.space;
  return r;
}

inline std::map<std::string, Rational> workload_weights(const std::vector<UnionQuery>& workload) {
  std::map<std::string, Rational> out;
  for (const auto& q : workload) out[q.name] = q.weight;
  return out;
}

}  // namespace rdfviews
