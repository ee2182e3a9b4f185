#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "rdfviews/cost_model.hpp"
#include "rdfviews/search.hpp"
#include "rdfviews/view_state.hpp"

namespace rdfviews {

using Json = nlohmann::json;

inline Json to_json(const Rational& r) { return to_double(r); }

inline Json to_json(const CostReport& c, bool detailed = true) {
  Json j{{"eval", to_json(c.eval)},
         {"maintenance", to_json(c.maintenance)},
         {"space", to_json(c.space)},
         {"total", to_json(c.total)}};
  if (!detailed) return j;
  Json per_view = Json::object();
  for (const auto& [id, vc] : c.per_view)
    per_view[view_name(id)] = {{"cardinality", to_json(vc.cardinality)},
                               {"space", to_json(vc.space)},
                               {"maintenance", to_json(vc.maintenance)}};
  Json per_query = Json::object();
  for (const auto& [name, cost] : c.per_query) per_query[name] = to_json(cost);
  j["per_view"] = std::move(per_view);
  j["per_query"] = std::move(per_query);
  return j;
}

inline ViewId parse_view_name(const std::string& name) {
  if (name.size() < 2 || name[0] != 'v') throw Error(ErrorCode::syntax, "bad view name '" + name + "'");
  try {
    return static_cast<ViewId>(std::stoul(name.substr(1)));
  } catch (const std::exception&) {
    throw Error(ErrorCode::syntax, "bad view name '" + name + "'");
  }
}

inline Position parse_position(const std::string& s) {
  if (s == "s") return Position::subject;
  if (s == "p") return Position::property;
  if (s == "o") return Position::object;
  throw Error(ErrorCode::syntax, "bad position '" + s + "'");
}

inline Json to_json(const TransitionDescriptor& t) {
  Json j{{"kind", std::string(to_string(t.kind))}, {"view", view_name(t.view)}};
  switch (t.kind) {
    case TransitionKind::selection_cut:
      j["atom"] = t.atom;
      j["position"] = std::string(to_string(t.position));
      break;
    case TransitionKind::join_cut: j["variable"] = t.variable; break;
    case TransitionKind::view_fusion: j["other"] = view_name(t.other); break;
  }
  return j;
}

inline Json to_json(const Plan& plan) {
  return std::visit(
      [&](const auto& op) -> Json {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, ScanOp>) {
          return {{"op", "scan"}, {"view", view_name(op.view)}, {"columns", op.columns}};
        } else if constexpr (std::is_same_v<T, SelectOp>) {
          return {{"op", "select"}, {"column", op.column}, {"value", op.value}, {"child", to_json(op.child)}};
        } else if constexpr (std::is_same_v<T, ProjectOp>) {
          return {{"op", "project"}, {"columns", op.columns}, {"child", to_json(op.child)}};
        } else if constexpr (std::is_same_v<T, JoinOp>) {
          Json on = Json::array();
          for (const auto& [l, r] : op.on) on.push_back({l, r});
          return {{"op", "join"}, {"on", on}, {"left", to_json(op.left)}, {"right", to_json(op.right)}};
        } else {
          Json children = Json::array();
          for (const auto& c : op.children) children.push_back(to_json(c));
          return {{"op", "union"}, {"children", children}};
        }
      },
      plan->op);
}

inline Plan plan_from_json(const Json& j) {
  const auto op = j.at("op").get<std::string>();
  if (op == "scan") return make_scan(parse_view_name(j.at("view")), j.at("columns").get<std::vector<std::string>>());
  if (op == "select")
    return make_select(plan_from_json(j.at("child")), j.at("column").get<std::string>(), j.at("value").get<TermId>());
  if (op == "project")
    return make_project(plan_from_json(j.at("child")), j.at("columns").get<std::vector<std::string>>());
  if (op == "join") {
    std::vector<std::pair<std::string, std::string>> on;
    for (const auto& p : j.at("on")) on.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
    return make_join(plan_from_json(j.at("left")), plan_from_json(j.at("right")), std::move(on));
  }
  if (op == "union") {
    std::vector<Plan> children;
    for (const auto& c : j.at("children")) children.push_back(plan_from_json(c));
    return make_union(std::move(children));
  }
  throw Error(ErrorCode::syntax, "unknown plan operator '" + op + "'");
}

inline Json atom_to_json(const TriplePattern& atom) {
  Json a = Json::array();
  for (auto pos : kPositions) {
    const auto& t = atom.at(pos);
    if (t.is_var()) a.push_back("?" + t.name());
    else a.push_back(t.id());
  }
  return a;
}

inline TriplePattern atom_from_json(const Json& a) {
  TriplePattern tp;
  for (auto pos : kPositions) {
    const auto& t = a.at(static_cast<std::size_t>(pos));
    tp.at(pos) = t.is_string() ? QTerm::var(t.get<std::string>().substr(1)) : QTerm::constant(t.get<TermId>());
  }
  return tp;
}

/// State export: "views" (name, SPARQL-like body, head, structured atoms)
/// and "rewritings" (query name with its "plan" tree).
inline Json to_json(const State& state, const Dictionary* dict = nullptr) {
  Json views = Json::array();
  for (const auto& [id, v] : state.views) {
    Json atoms = Json::array();
    for (const auto& a : v.body) atoms.push_back(atom_to_json(a));
    Json jv{{"name", v.name()}, {"head", v.head}, {"atoms", atoms}};
    if (dict) jv["body"] = to_sparql(v.body, *dict);
    views.push_back(std::move(jv));
  }
  Json rewritings = Json::array();
  for (const auto& [name, plan] : state.rewritings) {
    Json r{{"query", name}, {"plan", to_json(plan)}};
    if (dict) r["text"] = to_string(plan, dict);
    rewritings.push_back(std::move(r));
  }
  return {{"views", views}, {"rewritings", rewritings}, {"next_id", state.next_id}};
}

inline State state_from_json(const Json& j) {
  State st;
  for (const auto& jv : j.at("views")) {
    Body body;
    for (const auto& a : jv.at("atoms")) body.push_back(atom_from_json(a));
    auto id = parse_view_name(jv.at("name"));
    st.views.emplace(id, View::make(id, std::move(body)));
  }
  for (const auto& r : j.at("rewritings")) st.rewritings[r.at("query")] = plan_from_json(r.at("plan"));
  st.next_id = j.at("next_id").get<ViewId>();
  return st;
}

inline Json to_json(const SearchConfig& c) {
  Json j{{"strategy", std::string(to_string(c.strategy))},
         {"w_eval", to_json(c.weights.eval)},
         {"w_maint", to_json(c.weights.maintenance)},
         {"w_space", to_json(c.weights.space)},
         {"budget", c.space_budget ? to_json(*c.space_budget) : Json(nullptr)},
         {"max_states", c.max_states},
         {"timeout_ms", c.timeout.count()},
         {"allow_property_cuts", c.allow_property_cuts},
         {"branch_cap", c.branch_cap},
         {"seed", c.seed}};
  return j;
}

/// Missing fields keep their defaults.
inline SearchConfig search_config_from_json(const Json& j) {
  SearchConfig c;
  if (!j.is_object()) throw Error(ErrorCode::invalid_config, "search configuration must be an object");
  auto number = [&](const char* key) {
    if (!j.at(key).is_number()) throw Error(ErrorCode::invalid_config, std::string(key) + " must be a number");
    return j.at(key).get<double>();
  };
  auto count = [&](const char* key) -> std::size_t {
    auto v = number(key);
    if (v < 0 || v != std::floor(v)) throw Error(ErrorCode::invalid_config, std::string(key) + " must be a whole number");
    return static_cast<std::size_t>(v);
  };
  try {
    if (j.contains("strategy")) c.strategy = parse_strategy(j.at("strategy").get<std::string>());
    if (j.contains("w_eval")) c.weights.eval = rational_from_double(number("w_eval"));
    if (j.contains("w_maint")) c.weights.maintenance = rational_from_double(number("w_maint"));
    if (j.contains("w_space")) c.weights.space = rational_from_double(number("w_space"));
    if (j.contains("budget") && !j.at("budget").is_null()) c.space_budget = rational_from_double(number("budget"));
    if (j.contains("max_states")) c.max_states = count("max_states");
    if (j.contains("timeout_ms")) c.timeout = std::chrono::milliseconds(count("timeout_ms"));
    if (j.contains("allow_property_cuts")) c.allow_property_cuts = j.at("allow_property_cuts").get<bool>();
    if (j.contains("branch_cap")) c.branch_cap = count("branch_cap");
    if (j.contains("seed")) c.seed = count("seed");
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::invalid_config, e.what());
  }
  c.validate();
  return c;
}

inline Json to_json(const TraceNode& n, const SearchTrace& trace) {
  return {{"sig", n.signature},
          {"parent", n.parent ? Json(trace.nodes[*n.parent].signature) : Json(nullptr)},
          {"transition", n.transition ? to_json(*n.transition) : Json(nullptr)},
          {"cost", to_json(n.cost, false)},
          {"order", n.order},
          {"pruned", n.pruned_by_budget},
          {"terminal", n.terminal}};
}

inline Json to_json(const SearchCounters& c) {
  return {{"explored", c.explored},
          {"pruned_by_budget", c.pruned_by_budget},
          {"pruned_by_memo", c.pruned_by_memo},
          {"stop_condition_hits", c.stop_condition_hits}};
}

/// Trace export: flat node list plus the counters block.
inline Json to_json(const SearchTrace& trace) {
  Json nodes = Json::array();
  for (const auto& n : trace.nodes) nodes.push_back(to_json(n, trace));
  return {{"nodes", nodes}, {"counters", to_json(trace.counters)}};
}

inline Json result_summary(const SearchResult& r, const Dictionary* dict = nullptr) {
  Json j{{"terminated_by", std::string(to_string(r.terminated_by))},
         {"feasible", r.feasible()},
         {"outcome", r.feasible() ? "best-state" : "no-feasible-state"},
         {"counters", to_json(r.trace.counters)}};
  if (r.feasible()) {
    j["best_sig"] = r.trace.nodes[*r.best_node].signature;
    j["best_cost"] = to_json(*r.best_cost);
    j["best_state"] = to_json(*r.best, dict);
  }
  return j;
}

}  // namespace rdfviews
