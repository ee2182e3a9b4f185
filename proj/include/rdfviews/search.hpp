#pragma once

#include <chrono>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rdfviews/cost_model.hpp"
#include "rdfviews/view_state.hpp"

namespace rdfviews {

enum class Strategy : std::uint8_t { exhaustive_bfs, exhaustive_dfs, greedy, stratified_greedy };

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::exhaustive_bfs: return "exhaustive-bfs";
    case Strategy::exhaustive_dfs: return "exhaustive-dfs";
    case Strategy::greedy: return "greedy";
    case Strategy::stratified_greedy: return "stratified-greedy";
  }
  return "?";
}

inline Strategy parse_strategy(std::string_view s) {
  if (s == "exhaustive-bfs" || s == "optimal") return Strategy::exhaustive_bfs;
  if (s == "exhaustive-dfs") return Strategy::exhaustive_dfs;
  if (s == "greedy") return Strategy::greedy;
  if (s == "stratified-greedy" || s == "quick") return Strategy::stratified_greedy;
  throw Error(ErrorCode::invalid_config, "unknown strategy '" + std::string(s) + "'");
}

struct SearchConfig {
  Strategy strategy = Strategy::stratified_greedy;
  QualityWeights weights;
  std::optional<Rational> space_budget;
  std::size_t max_states = 10000;
  std::chrono::milliseconds timeout{60000};
  bool allow_property_cuts = false;
  std::size_t branch_cap = kDefaultBranchCap;
  /// Recorded with the run; every strategy here is deterministic, ties are
  /// broken on state signatures.
  std::uint64_t seed = 0;

  void validate() const {
    weights.validate();
    if (max_states < 1) throw Error(ErrorCode::invalid_config, "max_states must be at least 1");
    if (branch_cap < 1) throw Error(ErrorCode::invalid_config, "branch_cap must be at least 1");
    if (timeout.count() <= 0) throw Error(ErrorCode::invalid_config, "timeout must be positive");
    if (space_budget && *space_budget < 0) throw Error(ErrorCode::invalid_config, "space budget must be non-negative");
  }

  [[nodiscard]] TransitionOptions transition_options() const { return {allow_property_cuts}; }
};

struct TraceNode {
  std::string signature;
  std::optional<std::size_t> parent;
  std::optional<TransitionDescriptor> transition;
  CostReport cost;
  std::size_t order = 0;
  bool pruned_by_budget = false;
  bool terminal = false;
};

struct SearchCounters {
  std::size_t explored = 0;
  std::size_t pruned_by_budget = 0;
  std::size_t pruned_by_memo = 0;
  std::size_t stop_condition_hits = 0;
};

struct SearchTrace {
  std::vector<TraceNode> nodes;
  SearchCounters counters;
};

enum class Termination : std::uint8_t { exhausted, max_states, timeout };

inline std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::exhausted: return "exhausted";
    case Termination::max_states: return "max-states";
    case Termination::timeout: return "timeout";
  }
  return "?";
}

struct SearchResult {
  /// Empty when no explored state fits the space budget.
  std::optional<State> best;
  std::optional<CostReport> best_cost;
  std::optional<std::size_t> best_node;
  SearchTrace trace;
  Termination terminated_by = Termination::exhausted;

  [[nodiscard]] bool feasible() const { return best.has_value(); }
};

/// Invoked after every newly recorded node with the running best total.
using ProgressCallback = std::function<void(const TraceNode&, const std::optional<Rational>&)>;

namespace detail {

class Navigator {
 public:
  Navigator(const DataStatistics& stats, const std::map<std::string, Rational>& query_weights,
            const SearchConfig& config, ProgressCallback progress)
      : stats_(stats),
        query_weights_(query_weights),
        config_(config),
        options_(config.transition_options()),
        progress_(std::move(progress)),
        deadline_(std::chrono::steady_clock::now() + config.timeout) {}

  SearchResult run(const State& initial) {
    auto root = discover(initial, std::nullopt, std::nullopt);
    if (root) {
      switch (config_.strategy) {
        case Strategy::exhaustive_bfs: breadth_first(*root); break;
        case Strategy::exhaustive_dfs: depth_first(*root); break;
        case Strategy::greedy: hill_climb(*root, false); break;
        case Strategy::stratified_greedy: hill_climb(*root, true); break;
      }
    }
    SearchResult out;
    out.trace.nodes = std::move(nodes_);
    out.trace.counters = counters_;
    out.terminated_by = termination_;
    if (best_) {
      out.best = states_[*best_];
      out.best_cost = out.trace.nodes[*best_].cost;
      out.best_node = best_;
    }
    return out;
  }

 private:
  bool stopped() {
    if (termination_ != Termination::exhausted) return true;
    if (std::chrono::steady_clock::now() >= deadline_) {
      termination_ = Termination::timeout;
      return true;
    }
    return false;
  }

  /// Records a state unless its signature is known or a limit is hit.
  std::optional<std::size_t> discover(State state, std::optional<std::size_t> parent,
                                      std::optional<TransitionDescriptor> transition) {
    auto sig = state_signature(state);
    if (memo_.contains(sig)) {
      ++counters_.pruned_by_memo;
      return std::nullopt;
    }
    if (nodes_.size() >= config_.max_states) {
      termination_ = Termination::max_states;
      return std::nullopt;
    }
    state = optimize_rewritings(std::move(state), stats_);
    TraceNode node;
    node.signature = sig;
    node.parent = parent;
    node.transition = std::move(transition);
    node.cost = state_quality(state, stats_, config_.weights, query_weights_);
    node.order = nodes_.size();
    node.pruned_by_budget = config_.space_budget && node.cost.space > *config_.space_budget;
    node.terminal = is_terminal(state, options_);
    ++counters_.explored;
    if (node.pruned_by_budget) ++counters_.pruned_by_budget;
    if (node.terminal) ++counters_.stop_condition_hits;

    auto idx = nodes_.size();
    memo_.emplace(sig, idx);
    if (!node.pruned_by_budget && (!best_ || better(node, nodes_[*best_]))) best_ = idx;
    nodes_.push_back(std::move(node));
    states_.push_back(std::move(state));
    if (progress_) {
      std::optional<Rational> best_total;
      if (best_) best_total = nodes_[*best_].cost.total;
      progress_(nodes_.back(), best_total);
    }
    return idx;
  }

  static bool better(const TraceNode& a, const TraceNode& b) {
    if (a.cost.total != b.cost.total) return a.cost.total < b.cost.total;
    return a.signature < b.signature;
  }

  /// The root is always expanded, even when it exceeds the budget.
  bool expandable(std::size_t idx) const {
    const auto& n = nodes_[idx];
    return !n.terminal && (!n.pruned_by_budget || idx == 0);
  }

  std::optional<std::size_t> step(std::size_t from, const TransitionDescriptor& t) {
    return discover(apply_transition(states_[from], t, options_), from, t);
  }

  void breadth_first(std::size_t root) {
    std::deque<std::size_t> queue{root};
    while (!queue.empty() && !stopped()) {
      auto idx = queue.front();
      queue.pop_front();
      if (!expandable(idx)) continue;
      for (const auto& t : enumerate_transitions(states_[idx], options_)) {
        if (stopped()) return;
        if (auto child = step(idx, t); child && expandable(*child)) queue.push_back(*child);
      }
    }
  }

  void depth_first(std::size_t root) {
    struct Frame {
      std::size_t node;
      std::vector<TransitionDescriptor> pending;
      std::size_t next = 0;
    };
    std::vector<Frame> stack;
    if (expandable(root)) stack.push_back({root, enumerate_transitions(states_[root], options_)});
    while (!stack.empty() && !stopped()) {
      auto& top = stack.back();
      if (top.next >= top.pending.size()) {
        stack.pop_back();
        continue;
      }
      auto t = top.pending[top.next++];
      auto child = step(top.node, t);
      if (child && expandable(*child)) stack.push_back({*child, enumerate_transitions(states_[*child], options_)});
    }
  }

  /// Moves to the best strictly improving neighbour until none exists. The
  /// stratified variant tries fusions, then selection cuts, then join cuts,
  /// and commits to the first stratum that improves.
  void hill_climb(std::size_t root, bool stratified) {
    std::size_t current = root;
    while (!stopped() && expandable(current)) {
      auto transitions = enumerate_transitions(states_[current], options_);
      std::vector<std::vector<TransitionDescriptor>> strata;
      if (stratified) {
        for (auto kind : {TransitionKind::view_fusion, TransitionKind::selection_cut, TransitionKind::join_cut}) {
          strata.emplace_back();
          for (const auto& t : transitions)
            if (t.kind == kind) strata.back().push_back(t);
        }
      } else {
        strata.push_back(std::move(transitions));
      }
      std::optional<std::size_t> next;
      for (const auto& stratum : strata) {
        for (const auto& t : stratum) {
          if (stopped()) return;
          auto child = step(current, t);
          if (!child || nodes_[*child].pruned_by_budget) continue;
          bool improves = nodes_[current].pruned_by_budget || nodes_[*child].cost.total < nodes_[current].cost.total;
          if (improves && (!next || better(nodes_[*child], nodes_[*next]))) next = child;
        }
        if (next) break;
      }
      if (!next) return;
      current = *next;
    }
  }

  const DataStatistics& stats_;
  const std::map<std::string, Rational>& query_weights_;
  const SearchConfig& config_;
  TransitionOptions options_;
  ProgressCallback progress_;
  std::chrono::steady_clock::time_point deadline_;

  std::vector<TraceNode> nodes_;
  std::vector<State> states_;
  std::map<std::string, std::size_t> memo_;
  SearchCounters counters_;
  std::optional<std::size_t> best_;
  Termination termination_ = Termination::exhausted;
};

}  // namespace detail

inline SearchResult run_search(const State& initial, const DataStatistics& stats,
                               const std::map<std::string, Rational>& query_weights, const SearchConfig& config,
                               ProgressCallback progress = {}) {
  config.validate();
  return detail::Navigator(stats, query_weights, config, std::move(progress)).run(initial);
}

}  // namespace rdfviews
