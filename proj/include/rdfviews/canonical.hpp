#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rdfviews/query.hpp"

namespace rdfviews {

/// Result of canonical labeling: a key equal for two (body, head) pairs iff
/// they are identical up to variable renaming, plus the labeling that
/// produced it.
struct CanonicalLabeling {
  std::string key;
  /// Variable names ordered by canonical label.
  std::vector<std::string> variables;
  /// Indices into the (deduplicated) body in canonical atom order.
  std::vector<std::size_t> atom_order;
};

namespace detail {

class Canonicalizer {
 public:
  Canonicalizer(const Body& body, const std::vector<std::string>& head) : body_(body) {
    vars_ = variables_of(body_);
    for (std::size_t i = 0; i < vars_.size(); ++i) index_[vars_[i]] = static_cast<int>(i);
    for (const auto& atom : body_) {
      std::array<Slot, 3> enc{};
      for (auto pos : kPositions) {
        const auto& t = atom.at(pos);
        auto k = static_cast<std::size_t>(pos);
        enc[k] = t.is_var() ? Slot{true, index_.at(t.name())} : Slot{false, static_cast<std::int64_t>(t.id())};
      }
      atoms_.push_back(enc);
    }
    for (const auto& h : head) {
      auto it = index_.find(h);
      head_.push_back(it == index_.end() ? -1 : it->second);
    }
    occurrences_.assign(vars_.size(), {});
    for (std::size_t a = 0; a < atoms_.size(); ++a)
      for (std::size_t k = 0; k < 3; ++k)
        if (atoms_[a][k].is_var) occurrences_[static_cast<std::size_t>(atoms_[a][k].value)].push_back({a, k});
  }

  CanonicalLabeling run() {
    std::vector<std::vector<std::int64_t>> initial(vars_.size());
    for (std::size_t v = 0; v < vars_.size(); ++v) initial[v] = {1, 0};
    for (std::size_t i = 0; i < head_.size(); ++i)
      if (head_[i] >= 0) initial[static_cast<std::size_t>(head_[i])] = {0, static_cast<std::int64_t>(i)};
    search(refine(rank(initial)));

    CanonicalLabeling out;
    out.variables.resize(vars_.size());
    for (std::size_t v = 0; v < vars_.size(); ++v) out.variables[static_cast<std::size_t>(best_labels_[v])] = vars_[v];
    out.atom_order = best_atom_order_;
    out.key = render();
    return out;
  }

 private:
  struct Slot {
    bool is_var = false;
    std::int64_t value = 0;
  };
  struct Occurrence {
    std::size_t atom;
    std::size_t slot;
  };
  using Colors = std::vector<std::int64_t>;

  static Colors rank(const std::vector<std::vector<std::int64_t>>& keys) {
    auto sorted = keys;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    Colors out(keys.size());
    for (std::size_t i = 0; i < keys.size(); ++i)
      out[i] = std::lower_bound(sorted.begin(), sorted.end(), keys[i]) - sorted.begin();
    return out;
  }

  static std::size_t distinct(const Colors& c) {
    auto s = c;
    std::sort(s.begin(), s.end());
    return static_cast<std::size_t>(std::unique(s.begin(), s.end()) - s.begin());
  }

  /// Equitable refinement: split color classes by the multiset of colored
  /// atom contexts each variable occurs in, until stable.
  Colors refine(Colors colors) const {
    while (true) {
      std::vector<std::vector<std::int64_t>> sigs(vars_.size());
      for (std::size_t v = 0; v < vars_.size(); ++v) {
        std::vector<std::vector<std::int64_t>> occ;
        for (const auto& o : occurrences_[v]) {
          std::vector<std::int64_t> d{static_cast<std::int64_t>(o.slot)};
          for (const auto& slot : atoms_[o.atom]) {
            if (slot.is_var) {
              d.insert(d.end(), {0, colors[static_cast<std::size_t>(slot.value)],
                                 slot.value == static_cast<std::int64_t>(v) ? 1 : 0});
            } else {
              d.insert(d.end(), {1, slot.value, 0});
            }
          }
          occ.push_back(std::move(d));
        }
        std::sort(occ.begin(), occ.end());
        auto& sig = sigs[v];
        sig = {colors[v], static_cast<std::int64_t>(occ.size())};
        for (auto& d : occ) sig.insert(sig.end(), d.begin(), d.end());
      }
      auto next = rank(sigs);
      if (distinct(next) == distinct(colors)) return next;
      colors = std::move(next);
    }
  }

  void search(const Colors& colors) {
    std::map<std::int64_t, std::vector<std::size_t>> cells;
    for (std::size_t v = 0; v < colors.size(); ++v) cells[colors[v]].push_back(v);
    for (const auto& [color, members] : cells) {
      if (members.size() < 2) continue;
      for (auto chosen : members) {
        std::vector<std::vector<std::int64_t>> keys(colors.size());
        for (std::size_t v = 0; v < colors.size(); ++v)
          keys[v] = {colors[v], (colors[v] == color && v != chosen) ? 1 : 0};
        search(refine(rank(keys)));
      }
      return;
    }
    consider_leaf(colors);
  }

  void consider_leaf(const Colors& labels) {
    std::vector<std::array<std::int64_t, 6>> enc(atoms_.size());
    for (std::size_t a = 0; a < atoms_.size(); ++a)
      for (std::size_t k = 0; k < 3; ++k) {
        const auto& s = atoms_[a][k];
        enc[a][2 * k] = s.is_var ? 0 : 1;
        enc[a][2 * k + 1] = s.is_var ? labels[static_cast<std::size_t>(s.value)] : s.value;
      }
    std::vector<std::size_t> order(atoms_.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto x, auto y) { return enc[x] < enc[y]; });

    std::vector<std::int64_t> code;
    for (auto h : head_) code.push_back(h < 0 ? -1 : labels[static_cast<std::size_t>(h)]);
    code.push_back(-2);
    for (auto a : order) code.insert(code.end(), enc[a].begin(), enc[a].end());

    if (!have_best_ || code < best_code_) {
      have_best_ = true;
      best_code_ = std::move(code);
      best_labels_ = labels;
      best_atom_order_ = std::move(order);
    }
  }

  std::string render() const {
    std::string out = "h";
    for (auto h : head_) out += h < 0 ? ":!" : ":" + std::to_string(best_labels_[static_cast<std::size_t>(h)]);
    out += "|";
    bool first = true;
    for (auto a : best_atom_order_) {
      if (!first) out += ";";
      first = false;
      for (std::size_t k = 0; k < 3; ++k) {
        const auto& s = atoms_[a][k];
        if (k) out += ' ';
        out += s.is_var ? "?" + std::to_string(best_labels_[static_cast<std::size_t>(s.value)])
                        : "#" + std::to_string(s.value);
      }
    }
    return out;
  }

  const Body& body_;
  std::vector<std::string> vars_;
  std::map<std::string, int> index_;
  std::vector<std::array<Slot, 3>> atoms_;
  std::vector<int> head_;
  std::vector<std::vector<Occurrence>> occurrences_;

  bool have_best_ = false;
  std::vector<std::int64_t> best_code_;
  Colors best_labels_;
  std::vector<std::size_t> best_atom_order_;
};

}  // namespace detail

/// Canonical labeling by color refinement with individualization on ties.
/// The head is treated as an ordered list of distinguished variables. The
/// body is deduplicated first; `atom_order` indexes the deduplicated body.
inline CanonicalLabeling canonical_labeling(const Body& body, const std::vector<std::string>& head) {
  Body deduped = dedup_body(body);
  return detail::Canonicalizer(deduped, head).run();
}

inline std::string canonical_form(const Body& body, const std::vector<std::string>& head) {
  return canonical_labeling(body, head).key;
}

}  // namespace rdfviews
