#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "rdfviews/canonical.hpp"
#include "rdfviews/rdfs.hpp"

namespace rdfviews {

using ViewId = std::uint32_t;

inline std::string view_name(ViewId id) { return "v" + std::to_string(id); }

/// A candidate view. Views expose every body variable (full head), in order
/// of first appearance.
struct View {
  ViewId id = 0;
  Body body;
  std::vector<std::string> head;
  /// Canonical form of the body; isomorphic views share it.
  std::string key;

  static View make(ViewId id, Body body) {
    View v;
    v.id = id;
    v.body = dedup_body(std::move(body));
    v.head = variables_of(v.body);
    v.key = canonical_form(v.body, {});
    return v;
  }

  [[nodiscard]] std::string name() const { return view_name(id); }
};

// ---------------------------------------------------------------------------
// Rewriting plans

struct PlanNode;
using Plan = std::shared_ptr<const PlanNode>;

struct ScanOp {
  ViewId view = 0;
  /// Output names, positionally matching the view head.
  std::vector<std::string> columns;
};
struct SelectOp {
  Plan child;
  std::string column;
  TermId value = kInvalidTermId;
};
struct JoinOp {
  Plan left;
  Plan right;
  std::vector<std::pair<std::string, std::string>> on;
};
struct ProjectOp {
  Plan child;
  std::vector<std::string> columns;
};
struct UnionOp {
  std::vector<Plan> children;
};

struct PlanNode {
  std::variant<ScanOp, SelectOp, JoinOp, ProjectOp, UnionOp> op;
  std::vector<std::string> columns;
};

inline Plan make_scan(ViewId view, std::vector<std::string> columns) {
  auto cols = columns;
  return std::make_shared<PlanNode>(PlanNode{ScanOp{view, std::move(columns)}, std::move(cols)});
}
inline Plan make_select(Plan child, std::string column, TermId value) {
  auto cols = child->columns;
  return std::make_shared<PlanNode>(PlanNode{SelectOp{std::move(child), std::move(column), value}, std::move(cols)});
}
inline Plan make_join(Plan left, Plan right, std::vector<std::pair<std::string, std::string>> on) {
  auto cols = left->columns;
  cols.insert(cols.end(), right->columns.begin(), right->columns.end());
  return std::make_shared<PlanNode>(PlanNode{JoinOp{std::move(left), std::move(right), std::move(on)}, std::move(cols)});
}
inline Plan make_project(Plan child, std::vector<std::string> columns) {
  auto cols = columns;
  return std::make_shared<PlanNode>(PlanNode{ProjectOp{std::move(child), std::move(columns)}, std::move(cols)});
}
inline Plan make_union(std::vector<Plan> children) {
  auto cols = children.empty() ? std::vector<std::string>{} : children.front()->columns;
  return std::make_shared<PlanNode>(PlanNode{UnionOp{std::move(children)}, std::move(cols)});
}

template <typename Fn>
void visit_plan(const Plan& plan, Fn&& fn) {
  fn(*plan);
  std::visit(
      [&](const auto& op) {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, SelectOp> || std::is_same_v<T, ProjectOp>) {
          visit_plan(op.child, fn);
        } else if constexpr (std::is_same_v<T, JoinOp>) {
          visit_plan(op.left, fn);
          visit_plan(op.right, fn);
        } else if constexpr (std::is_same_v<T, UnionOp>) {
          for (const auto& c : op.children) visit_plan(c, fn);
        }
      },
      plan->op);
}

inline std::set<ViewId> referenced_views(const Plan& plan) {
  std::set<ViewId> out;
  visit_plan(plan, [&](const PlanNode& n) {
    if (auto* scan = std::get_if<ScanOp>(&n.op)) out.insert(scan->view);
  });
  return out;
}

inline std::set<std::string> plan_column_names(const Plan& plan) {
  std::set<std::string> out;
  visit_plan(plan, [&](const PlanNode& n) { out.insert(n.columns.begin(), n.columns.end()); });
  return out;
}

/// Rebuilds `plan` with every Scan of `view` replaced by `fn(scan)`;
/// untouched subtrees are shared.
inline Plan replace_scans(const Plan& plan, ViewId view, const std::function<Plan(const ScanOp&)>& fn) {
  return std::visit(
      [&](const auto& op) -> Plan {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, ScanOp>) {
          return op.view == view ? fn(op) : plan;
        } else if constexpr (std::is_same_v<T, SelectOp>) {
          auto c = replace_scans(op.child, view, fn);
          return c == op.child ? plan : make_select(c, op.column, op.value);
        } else if constexpr (std::is_same_v<T, ProjectOp>) {
          auto c = replace_scans(op.child, view, fn);
          return c == op.child ? plan : make_project(c, op.columns);
        } else if constexpr (std::is_same_v<T, JoinOp>) {
          auto l = replace_scans(op.left, view, fn);
          auto r = replace_scans(op.right, view, fn);
          return (l == op.left && r == op.right) ? plan : make_join(l, r, op.on);
        } else {
          std::vector<Plan> children;
          bool changed = false;
          for (const auto& c : op.children) {
            children.push_back(replace_scans(c, view, fn));
            changed |= children.back() != c;
          }
          return changed ? make_union(std::move(children)) : plan;
        }
      },
      plan->op);
}

inline std::string to_string(const Plan& plan, const Dictionary* dict = nullptr) {
  auto join_names = [](const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
    return s;
  };
  return std::visit(
      [&](const auto& op) -> std::string {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, ScanOp>) {
          return "Scan(" + view_name(op.view) + "[" + join_names(op.columns) + "])";
        } else if constexpr (std::is_same_v<T, SelectOp>) {
          auto value = dict ? to_ntriples(dict->term(op.value)) : "#" + std::to_string(op.value);
          return "Select[" + op.column + "=" + value + "](" + to_string(op.child, dict) + ")";
        } else if constexpr (std::is_same_v<T, ProjectOp>) {
          return "Project[" + join_names(op.columns) + "](" + to_string(op.child, dict) + ")";
        } else if constexpr (std::is_same_v<T, JoinOp>) {
          std::string on;
          for (std::size_t i = 0; i < op.on.size(); ++i) on += (i ? "," : "") + op.on[i].first + "=" + op.on[i].second;
          return "Join[" + on + "](" + to_string(op.left, dict) + ", " + to_string(op.right, dict) + ")";
        } else {
          std::string s = "Union(";
          for (std::size_t i = 0; i < op.children.size(); ++i) s += (i ? ", " : "") + to_string(op.children[i], dict);
          return s + ")";
        }
      },
      plan->op);
}

// ---------------------------------------------------------------------------
// States

struct State {
  std::map<ViewId, View> views;
  std::map<std::string, Plan> rewritings;
  ViewId next_id = 1;

  [[nodiscard]] const View& view(ViewId id) const {
    auto it = views.find(id);
    if (it == views.end()) throw Error(ErrorCode::unknown_view, "no view " + view_name(id) + " in state");
    return it->second;
  }
};

/// Column names for scanning `view` so that they line up with the variable
/// names of `body`, an isomorphic copy of the view body.
inline std::vector<std::string> aligned_columns(const View& view, const Body& body) {
  auto lv = canonical_labeling(view.body, {});
  auto lb = canonical_labeling(body, {});
  std::map<std::string, std::string> to_body;
  for (std::size_t i = 0; i < lv.variables.size(); ++i) to_body[lv.variables[i]] = lb.variables[i];
  std::vector<std::string> cols;
  for (const auto& h : view.head) cols.push_back(to_body.at(h));
  return cols;
}

/// One view per distinct (up to renaming) branch; each query is answered by
/// projecting its branch views onto the head, unioned over the branches.
inline State initial_state(const std::vector<UnionQuery>& workload) {
  if (workload.empty()) throw Error(ErrorCode::empty_workload, "the workload has no queries");
  State st;
  std::map<std::string, ViewId> by_key;
  for (const auto& uq : workload) {
    if (uq.branches.empty()) throw Error(ErrorCode::empty_workload, "query '" + uq.name + "' has no branches");
    std::vector<Plan> branches;
    for (const auto& b : uq.branches) {
      auto body = dedup_body(b.body);
      auto key = canonical_form(body, {});
      auto [it, inserted] = by_key.emplace(key, st.next_id);
      if (inserted) {
        st.views.emplace(st.next_id, View::make(st.next_id, body));
        ++st.next_id;
      }
      const auto& view = st.views.at(it->second);
      branches.push_back(make_project(make_scan(view.id, aligned_columns(view, body)), uq.head));
    }
    st.rewritings[uq.name] = branches.size() == 1 ? branches.front() : make_union(std::move(branches));
  }
  return st;
}

enum class TransitionKind : std::uint8_t { selection_cut, join_cut, view_fusion };

inline std::string_view to_string(TransitionKind k) {
  switch (k) {
    case TransitionKind::selection_cut: return "selection-cut";
    case TransitionKind::join_cut: return "join-cut";
    case TransitionKind::view_fusion: return "view-fusion";
  }
  return "?";
}

struct TransitionDescriptor {
  TransitionKind kind = TransitionKind::selection_cut;
  ViewId view = 0;
  /// Selection cut: the constant occurrence.
  std::size_t atom = 0;
  Position position = Position::subject;
  /// Join cut: the variable.
  std::string variable;
  /// View fusion: the view folded into `view`.
  ViewId other = 0;

  friend bool operator==(const TransitionDescriptor&, const TransitionDescriptor&) = default;
};

inline std::string to_string(const TransitionDescriptor& t) {
  switch (t.kind) {
    case TransitionKind::selection_cut:
      return "SC(" + view_name(t.view) + "," + std::to_string(t.atom) + "," + std::string(to_string(t.position)) + ")";
    case TransitionKind::join_cut: return "JC(" + view_name(t.view) + ",?" + t.variable + ")";
    case TransitionKind::view_fusion: return "VF(" + view_name(t.view) + "," + view_name(t.other) + ")";
  }
  return "?";
}

struct TransitionOptions {
  bool allow_property_cuts = false;
};

namespace detail {

inline std::string fresh_name(const std::string& base, const std::set<std::string>& taken) {
  for (int k = 1;; ++k) {
    auto name = base + "_" + std::to_string(k);
    if (!taken.contains(name)) return name;
  }
}

inline State patch_rewritings(const State& in, ViewId replaced,
                              const std::function<Plan(const ScanOp&, std::set<std::string>&)>& patch) {
  State out = in;
  for (auto& [name, plan] : out.rewritings) {
    auto taken = plan_column_names(plan);
    plan = replace_scans(plan, replaced, [&](const ScanOp& scan) { return patch(scan, taken); });
  }
  out.views.erase(replaced);
  return out;
}

}  // namespace detail

/// Replaces one constant of a view by a fresh variable, compensating with a
/// selection in every rewriting that scans the view.
inline State selection_cut(const State& state, ViewId view_id, std::size_t atom, Position position,
                           const TransitionOptions& options = {}) {
  auto it = state.views.find(view_id);
  if (it == state.views.end()) throw Error(ErrorCode::invalid_site, "no view " + view_name(view_id));
  const View& v = it->second;
  if (atom >= v.body.size()) throw Error(ErrorCode::invalid_site, "atom index out of range");
  const auto& term = v.body[atom].at(position);
  if (term.is_var()) throw Error(ErrorCode::invalid_site, "position holds variable ?" + term.name());
  if (position == Position::property && !options.allow_property_cuts)
    throw Error(ErrorCode::property_cut_disabled, "property-position selection cuts are disabled");

  std::set<std::string> vars(v.head.begin(), v.head.end());
  std::string fresh = vars.contains("f") ? detail::fresh_name("f", vars) : "f";
  Body body = v.body;
  body[atom].at(position) = QTerm::var(fresh);
  TermId value = term.id();

  State out = state;
  ViewId new_id = out.next_id++;
  View nv = View::make(new_id, std::move(body));
  auto fresh_pos = std::find(nv.head.begin(), nv.head.end(), fresh) - nv.head.begin();

  out = detail::patch_rewritings(out, view_id, [&](const ScanOp& scan, std::set<std::string>& taken) {
    // nv.head is v.head with `fresh` inserted at its first-appearance position.
    std::string col = taken.contains(fresh) ? detail::fresh_name(fresh, taken) : fresh;
    taken.insert(col);
    std::vector<std::string> cols;
    std::size_t j = 0;
    for (std::size_t i = 0; i < nv.head.size(); ++i)
      cols.push_back(static_cast<std::ptrdiff_t>(i) == fresh_pos ? col : scan.columns[j++]);
    return make_project(make_select(make_scan(new_id, std::move(cols)), col, value), scan.columns);
  });
  out.views.emplace(new_id, std::move(nv));
  return out;
}

/// Splits a view at a join variable into the components that remain after
/// deleting it, re-joined on renamed copies of the variable in rewritings.
inline State join_cut(const State& state, ViewId view_id, const std::string& variable) {
  auto it = state.views.find(view_id);
  if (it == state.views.end()) throw Error(ErrorCode::invalid_site, "no view " + view_name(view_id));
  const View& v = it->second;
  std::size_t atoms_with_var = 0;
  for (const auto& a : v.body)
    if (std::any_of(kPositions.begin(), kPositions.end(),
                    [&](Position p) { return a.at(p).is_var() && a.at(p).name() == variable; }))
      ++atoms_with_var;
  if (atoms_with_var < 2)
    throw Error(ErrorCode::not_applicable, "?" + variable + " occurs in fewer than two atoms of " + v.name());
  auto components = join_components(v.body, &variable);
  if (components.size() < 2)
    throw Error(ErrorCode::not_applicable, "cutting ?" + variable + " leaves " + v.name() + " connected");

  State out = state;
  std::set<std::string> vars(v.head.begin(), v.head.end());
  std::vector<View> parts;
  std::vector<std::string> renamed;
  for (std::size_t c = 0; c < components.size(); ++c) {
    std::string local = variable + "_" + std::to_string(c + 1);
    while (vars.contains(local)) local += "_";
    vars.insert(local);
    renamed.push_back(local);
    Body body;
    for (auto idx : components[c]) {
      auto a = v.body[idx];
      for (auto pos : kPositions)
        if (a.at(pos).is_var() && a.at(pos).name() == variable) a.at(pos) = QTerm::var(local);
      body.push_back(std::move(a));
    }
    parts.push_back(View::make(out.next_id++, std::move(body)));
  }

  out = detail::patch_rewritings(out, view_id, [&](const ScanOp& scan, std::set<std::string>& taken) {
    std::map<std::string, std::string> column_of;
    for (std::size_t i = 0; i < v.head.size(); ++i) column_of[v.head[i]] = scan.columns[i];
    const std::string& join_col = column_of.at(variable);
    Plan acc;
    for (std::size_t c = 0; c < parts.size(); ++c) {
      std::string local_col = join_col;
      if (c > 0) {
        local_col = detail::fresh_name(join_col, taken);
        taken.insert(local_col);
      }
      std::vector<std::string> cols;
      for (const auto& h : parts[c].head) cols.push_back(h == renamed[c] ? local_col : column_of.at(h));
      auto scan_part = make_scan(parts[c].id, std::move(cols));
      acc = c == 0 ? scan_part : make_join(acc, scan_part, {{join_col, local_col}});
    }
    return make_project(acc, scan.columns);
  });
  for (auto& p : parts) out.views.emplace(p.id, std::move(p));
  return out;
}

/// Folds `removed` into `kept` (isomorphic views), renaming scan columns
/// through the isomorphism.
inline State view_fusion(const State& state, ViewId kept, ViewId removed) {
  if (kept == removed) throw Error(ErrorCode::invalid_site, "cannot fuse " + view_name(kept) + " with itself");
  auto ik = state.views.find(kept);
  auto ir = state.views.find(removed);
  if (ik == state.views.end() || ir == state.views.end())
    throw Error(ErrorCode::invalid_site, "fusion names a view that is not in the state");
  const View& a = ik->second;
  const View& b = ir->second;
  if (a.key != b.key) throw Error(ErrorCode::not_isomorphic, a.name() + " and " + b.name() + " are not isomorphic");
  auto cols_in_b = aligned_columns(a, b.body);  // for each a.head[j], the matching variable of b
  std::map<std::string, std::size_t> b_pos;
  for (std::size_t i = 0; i < b.head.size(); ++i) b_pos[b.head[i]] = i;
  return detail::patch_rewritings(state, removed, [&](const ScanOp& scan, std::set<std::string>&) {
    std::vector<std::string> cols;
    for (const auto& bv : cols_in_b) cols.push_back(scan.columns[b_pos.at(bv)]);
    return make_scan(kept, std::move(cols));
  });
}

inline State apply_transition(const State& state, const TransitionDescriptor& t, const TransitionOptions& options = {}) {
  switch (t.kind) {
    case TransitionKind::selection_cut: return selection_cut(state, t.view, t.atom, t.position, options);
    case TransitionKind::join_cut: return join_cut(state, t.view, t.variable);
    case TransitionKind::view_fusion: return view_fusion(state, t.view, t.other);
  }
  throw Error(ErrorCode::invalid_site, "unknown transition");
}

inline bool join_cut_applies(const View& v, const std::string& var) {
  std::size_t n = 0;
  for (const auto& a : v.body)
    if (std::any_of(kPositions.begin(), kPositions.end(),
                    [&](Position p) { return a.at(p).is_var() && a.at(p).name() == var; }))
      ++n;
  return n >= 2 && join_components(v.body, &var).size() >= 2;
}

/// All applicable transitions: selection cuts, then join cuts, then fusions,
/// each in view-id and body order.
inline std::vector<TransitionDescriptor> enumerate_transitions(const State& state, const TransitionOptions& options = {}) {
  std::vector<TransitionDescriptor> out;
  for (const auto& [id, v] : state.views)
    for (std::size_t a = 0; a < v.body.size(); ++a)
      for (auto pos : kPositions) {
        if (pos == Position::property && !options.allow_property_cuts) continue;
        if (v.body[a].at(pos).is_const())
          out.push_back({TransitionKind::selection_cut, id, a, pos, {}, 0});
      }
  for (const auto& [id, v] : state.views)
    for (const auto& var : v.head)
      if (join_cut_applies(v, var)) out.push_back({TransitionKind::join_cut, id, 0, Position::subject, var, 0});
  for (auto i = state.views.begin(); i != state.views.end(); ++i)
    for (auto j = std::next(i); j != state.views.end(); ++j)
      if (i->second.key == j->second.key)
        out.push_back({TransitionKind::view_fusion, i->first, 0, Position::subject, {}, j->first});
  return out;
}

/// Identity of a state: the sorted multiset of its view canonical forms.
inline std::string state_signature(const State& state) {
  std::vector<std::string> keys;
  for (const auto& [id, v] : state.views) keys.push_back(v.key);
  std::sort(keys.begin(), keys.end());
  std::string out;
  for (const auto& k : keys) out += "[" + k + "]";
  return out;
}

/// Stop condition: nothing applies, or every view is a lone
/// (variable, constant property, variable) atom and no two are isomorphic.
inline bool is_terminal(const State& state, const TransitionOptions& options = {}) {
  if (enumerate_transitions(state, options).empty()) return true;
  std::set<std::string> keys;
  for (const auto& [id, v] : state.views) {
    if (v.body.size() != 1) return false;
    const auto& a = v.body.front();
    if (!a.s.is_var() || !a.p.is_const() || !a.o.is_var()) return false;
    if (!keys.insert(v.key).second) return false;
  }
  return true;
}

/// Structural checks: rewritings reference existing views with matching
/// arity, projections and joins only use available columns, union children
/// agree, and no view is orphaned. Returns a description of the first
/// violation, or an empty string.
inline std::string check_state(const State& state) {
  std::set<ViewId> used;
  std::string problem;
  auto check = [&](const auto& self, const Plan& plan) -> void {
    if (!problem.empty()) return;
    std::visit(
        [&](const auto& op) {
          using T = std::decay_t<decltype(op)>;
          auto has = [](const Plan& p, const std::string& c) {
            return std::find(p->columns.begin(), p->columns.end(), c) != p->columns.end();
          };
          if constexpr (std::is_same_v<T, ScanOp>) {
            auto it = state.views.find(op.view);
            if (it == state.views.end()) problem = "dangling scan of " + view_name(op.view);
            else if (it->second.head.size() != op.columns.size()) problem = "arity mismatch on " + view_name(op.view);
            used.insert(op.view);
          } else if constexpr (std::is_same_v<T, SelectOp>) {
            if (!has(op.child, op.column)) problem = "select on missing column " + op.column;
            self(self, op.child);
          } else if constexpr (std::is_same_v<T, ProjectOp>) {
            for (const auto& c : op.columns)
              if (!has(op.child, c)) problem = "project on missing column " + c;
            self(self, op.child);
          } else if constexpr (std::is_same_v<T, JoinOp>) {
            for (const auto& [l, r] : op.on)
              if (!has(op.left, l) || !has(op.right, r)) problem = "join on missing column";
            self(self, op.left);
            self(self, op.right);
          } else {
            for (const auto& c : op.children) {
              if (c->columns != op.children.front()->columns) problem = "union children disagree on columns";
              self(self, c);
            }
          }
        },
        plan->op);
  };
  for (const auto& [name, plan] : state.rewritings) check(check, plan);
  if (!problem.empty()) return problem;
  for (const auto& [id, v] : state.views)
    if (!used.contains(id)) return "orphan view " + v.name();
  return {};
}

}  // namespace rdfviews
