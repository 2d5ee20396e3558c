#pragma once

// Partial-order semantics of a chart. Every message contributes a send event
// on its sender and a receive event on its receiver; the order is generated by
// send-before-receive plus document order along each lifeline (no weak
// sequencing across lifelines, delivery is asynchronous).
//
// compile() records loop/opt bodies once, tagged with their choice context.
// A FragmentExpansion fixes every choice (opt taken or skipped, loop count)
// and yields the expanded graph that linearizations() enumerates.

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dfci/error.hpp"
#include "dfci/msc.hpp"

namespace dfci {

enum class EventKind { send, recv };

inline std::string_view to_string(EventKind kind) {
  return kind == EventKind::send ? "send" : "recv";
}

enum class ChoiceKind { opt, loop, optional_message };

// A place in the chart where an expansion must decide something: every
// fragment and every message with optional modality, numbered in preorder.
struct ChoicePoint {
  std::size_t index = 0;
  ChoiceKind kind = ChoiceKind::opt;
  const Fragment* fragment = nullptr;    // opt / loop
  const MessageSpec* message = nullptr;  // optional_message
  std::size_t depth = 0;
};

struct ChoiceContext {
  ChoiceKind kind;
  std::size_t point;

  bool operator==(const ChoiceContext&) const = default;
};

struct Event {
  std::string msg_id;
  EventKind kind = EventKind::send;
  std::string lifeline;      // canonical lifeline id (aliases resolved)
  std::size_t instance = 0;  // message instance index in expanded document order

  bool operator==(const Event&) const = default;
};

// Decision for one choice point. For opt fragments and optional messages
// count is 0 or 1; for loops it is the iteration count. iterations[i] holds
// the decisions for the choice points nested directly in the body during
// iteration i, in body order.
struct Choice {
  std::size_t count = 0;
  std::vector<std::vector<Choice>> iterations;

  static Choice skip() { return {}; }
  static Choice take(std::vector<Choice> inner = {}) {
    Choice c;
    c.count = 1;
    c.iterations.push_back(std::move(inner));
    return c;
  }
  static Choice repeat(std::vector<std::vector<Choice>> per_iteration) {
    Choice c;
    c.count = per_iteration.size();
    c.iterations = std::move(per_iteration);
    return c;
  }

  bool operator==(const Choice&) const = default;
};

// Decisions for the choice points directly in the document body, in order.
using FragmentExpansion = std::vector<Choice>;

struct MessageInstance {
  const MessageSpec* spec = nullptr;
  std::string from;  // canonical lifeline ids
  std::string to;
  std::vector<ChoiceContext> context;  // outermost first
};

struct EventGraph {
  std::vector<Event> events;
  // Generating pairs (a, b): a happens before b. The strict partial order is
  // their transitive closure, available through precedes().
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::vector<std::vector<ChoiceContext>> context;  // per event
  std::shared_ptr<const MscDocument> source;

  bool precedes(std::size_t a, std::size_t b) const { return closure_[a][b] != 0; }

  std::size_t find(std::string_view msg_id, EventKind kind, std::size_t nth = 0) const {
    for (std::size_t i = 0; i < events.size(); ++i) {
      if (events[i].msg_id == msg_id && events[i].kind == kind && nth-- == 0) return i;
    }
    return events.size();
  }

  // Kahn's algorithm, smallest index first among ready events.
  std::vector<std::size_t> topological_order() const {
    std::vector<std::size_t> indegree(events.size(), 0);
    std::vector<std::vector<std::size_t>> succ(events.size());
    for (auto [a, b] : edges) {
      succ[a].push_back(b);
      ++indegree[b];
    }
    std::vector<std::size_t> ready;
    for (std::size_t i = events.size(); i-- > 0;) {
      if (indegree[i] == 0) ready.push_back(i);
    }
    std::vector<std::size_t> order;
    while (!ready.empty()) {
      std::size_t e = ready.back();
      ready.pop_back();
      order.push_back(e);
      for (std::size_t s : succ[e]) {
        if (--indegree[s] == 0) {
          ready.push_back(s);
          std::sort(ready.begin(), ready.end(), std::greater<>());
        }
      }
    }
    if (order.size() != events.size()) {
      throw Error(ErrorKind::CyclicOrder, "event order contains a cycle");
    }
    return order;
  }

  void close() {
    const auto order = topological_order();
    closure_.assign(events.size(), std::vector<char>(events.size(), 0));
    std::vector<std::vector<std::size_t>> pred(events.size());
    for (auto [a, b] : edges) pred[b].push_back(a);
    for (std::size_t e : order) {
      for (std::size_t p : pred[e]) {
        closure_[p][e] = 1;
        for (std::size_t q = 0; q < events.size(); ++q) {
          if (closure_[q][p]) closure_[q][e] = 1;
        }
      }
    }
  }

 private:
  std::vector<std::vector<char>> closure_;
};

// ---------------------------------------------------------------------------

inline std::vector<ChoicePoint> choice_points(const MscDocument& doc) {
  std::vector<ChoicePoint> out;
  std::function<void(const std::vector<Item>&, std::size_t)> walk =
      [&](const std::vector<Item>& items, std::size_t depth) {
        for (const auto& item : items) {
          if (const auto* msg = std::get_if<MessageSpec>(&item.node)) {
            if (msg->is_optional()) {
              out.push_back({out.size(), ChoiceKind::optional_message, nullptr, msg, depth});
            }
          } else if (const auto* frag = std::get_if<Fragment>(&item.node)) {
            out.push_back({out.size(),
                           frag->kind == FragmentKind::loop ? ChoiceKind::loop : ChoiceKind::opt,
                           frag, nullptr, depth});
            walk(frag->body, depth + 1);
          }
        }
      };
  walk(doc.body, 0);
  return out;
}

namespace detail {

struct ChoiceIndex {
  std::map<const void*, std::size_t> by_node;

  explicit ChoiceIndex(const MscDocument& doc) {
    for (const auto& cp : choice_points(doc)) {
      by_node[cp.fragment ? static_cast<const void*>(cp.fragment)
                          : static_cast<const void*>(cp.message)] = cp.index;
    }
  }
  std::size_t operator()(const void* node) const { return by_node.at(node); }
};

inline void expand_items(const MscDocument& doc, const ChoiceIndex& index,
                         const std::vector<Item>& items, const std::vector<Choice>& choices,
                         std::vector<ChoiceContext>& context,
                         std::vector<MessageInstance>& out) {
  std::size_t next = 0;
  auto take_choice = [&]() -> const Choice& {
    if (next >= choices.size()) {
      throw Error(ErrorKind::ExpansionOutOfBounds, "expansion has too few decisions");
    }
    return choices[next++];
  };
  auto emit = [&](const MessageSpec& m) {
    out.push_back({&m, resolve_lifeline(doc, m.from), resolve_lifeline(doc, m.to), context});
  };

  for (const auto& item : items) {
    if (const auto* msg = std::get_if<MessageSpec>(&item.node)) {
      if (!msg->is_optional()) {
        emit(*msg);
        continue;
      }
      const Choice& c = take_choice();
      if (c.count > 1) {
        throw Error(ErrorKind::ExpansionOutOfBounds,
                    "optional message " + msg->msg_id + " taken more than once");
      }
      if (c.count == 1) {
        context.push_back({ChoiceKind::optional_message, index(msg)});
        emit(*msg);
        context.pop_back();
      }
    } else if (const auto* frag = std::get_if<Fragment>(&item.node)) {
      const Choice& c = take_choice();
      const bool loop = frag->kind == FragmentKind::loop;
      if (loop ? (c.count < frag->min_iter || c.count > frag->max_iter) : c.count > 1) {
        throw Error(ErrorKind::ExpansionOutOfBounds,
                    "decision count " + std::to_string(c.count) + " outside fragment bounds");
      }
      if (c.iterations.size() != c.count) {
        throw Error(ErrorKind::ExpansionOutOfBounds,
                    "decision has mismatched per-iteration entries");
      }
      context.push_back({loop ? ChoiceKind::loop : ChoiceKind::opt, index(frag)});
      for (const auto& inner : c.iterations) {
        expand_items(doc, index, frag->body, inner, context, out);
      }
      context.pop_back();
    }
  }
  if (next != choices.size()) {
    throw Error(ErrorKind::ExpansionOutOfBounds, "expansion has too many decisions");
  }
}

inline void unexpanded_items(const MscDocument& doc, const ChoiceIndex& index,
                             const std::vector<Item>& items,
                             std::vector<ChoiceContext>& context,
                             std::vector<MessageInstance>& out) {
  for (const auto& item : items) {
    if (const auto* msg = std::get_if<MessageSpec>(&item.node)) {
      if (msg->is_optional()) context.push_back({ChoiceKind::optional_message, index(msg)});
      out.push_back({msg, resolve_lifeline(doc, msg->from), resolve_lifeline(doc, msg->to),
                     context});
      if (msg->is_optional()) context.pop_back();
    } else if (const auto* frag = std::get_if<Fragment>(&item.node)) {
      context.push_back(
          {frag->kind == FragmentKind::loop ? ChoiceKind::loop : ChoiceKind::opt, index(frag)});
      unexpanded_items(doc, index, frag->body, context, out);
      context.pop_back();
    }
  }
}

inline EventGraph build_graph(std::shared_ptr<const MscDocument> doc,
                              const std::vector<MessageInstance>& instances) {
  EventGraph g;
  g.source = std::move(doc);
  std::map<std::string, std::size_t> last_on_lane;
  auto place = [&](std::size_t ev) {
    auto [it, fresh] = last_on_lane.try_emplace(g.events[ev].lifeline, ev);
    if (!fresh) {
      g.edges.emplace_back(it->second, ev);
      it->second = ev;
    }
  };
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& inst = instances[i];
    if (inst.from.empty() || inst.to.empty()) {
      throw Error(ErrorKind::UnresolvedReference,
                  "message " + inst.spec->msg_id + " references an undeclared lifeline");
    }
    const std::size_t send = g.events.size();
    g.events.push_back({inst.spec->msg_id, EventKind::send, inst.from, i});
    g.context.push_back(inst.context);
    place(send);
    const std::size_t recv = g.events.size();
    g.events.push_back({inst.spec->msg_id, EventKind::recv, inst.to, i});
    g.context.push_back(inst.context);
    g.edges.emplace_back(send, recv);
    place(recv);
  }
  g.close();
  return g;
}

inline void require_valid(const MscDocument& doc) {
  const auto issues = validate_document(doc);
  if (issues.empty()) return;
  const auto& first = issues.front();
  throw Error(first.kind == IssueKind::UnresolvedReference ? ErrorKind::UnresolvedReference
                                                           : ErrorKind::InvalidDocument,
              first.location + ": " + first.message);
}

}  // namespace detail

// Message instances of an expansion, in expanded document order.
inline std::vector<MessageInstance> expand(const MscDocument& doc,
                                           const FragmentExpansion& expansion) {
  detail::ChoiceIndex index(doc);
  std::vector<ChoiceContext> context;
  std::vector<MessageInstance> out;
  detail::expand_items(doc, index, doc.body, expansion, context, out);
  return out;
}

inline EventGraph compile(const MscDocument& doc) {
  detail::require_valid(doc);
  auto shared = std::make_shared<const MscDocument>(doc);
  detail::ChoiceIndex index(*shared);
  std::vector<ChoiceContext> context;
  std::vector<MessageInstance> instances;
  detail::unexpanded_items(*shared, index, shared->body, context, instances);
  return detail::build_graph(shared, instances);
}

// Expanded graph for the given decisions; its events carry no choice context
// other than the instance they came from.
inline EventGraph expand_graph(const EventGraph& graph, const FragmentExpansion& expansion) {
  const auto instances = expand(*graph.source, expansion);
  return detail::build_graph(graph.source, instances);
}

// Expansion taking every opt (or skipping, if take_opts is false) and running
// every loop `loop_count` times, clamped into the loop's bounds.
inline FragmentExpansion uniform_expansion(const std::vector<Item>& items, bool take_opts,
                                           std::size_t loop_count) {
  FragmentExpansion out;
  for (const auto& item : items) {
    if (const auto* msg = std::get_if<MessageSpec>(&item.node)) {
      if (msg->is_optional()) out.push_back(take_opts ? Choice::take() : Choice::skip());
    } else if (const auto* frag = std::get_if<Fragment>(&item.node)) {
      if (frag->kind == FragmentKind::opt) {
        out.push_back(take_opts ? Choice::take(uniform_expansion(frag->body, take_opts, loop_count))
                                : Choice::skip());
      } else {
        const std::size_t n = std::clamp(loop_count, frag->min_iter, frag->max_iter);
        std::vector<std::vector<Choice>> iters;
        for (std::size_t i = 0; i < n; ++i) {
          iters.push_back(uniform_expansion(frag->body, take_opts, loop_count));
        }
        out.push_back(Choice::repeat(std::move(iters)));
      }
    }
  }
  return out;
}

inline FragmentExpansion uniform_expansion(const MscDocument& doc, bool take_opts,
                                           std::size_t loop_count) {
  return uniform_expansion(doc.body, take_opts, loop_count);
}

namespace detail {

inline std::vector<std::vector<Choice>> all_expansions(const std::vector<Item>& items,
                                                       std::size_t loop_cap);

// All decisions for one choice point.
inline std::vector<Choice> choice_options(const Item& item, std::size_t loop_cap) {
  std::vector<Choice> options;
  if (const auto* msg = std::get_if<MessageSpec>(&item.node)) {
    if (msg->is_optional()) options = {Choice::skip(), Choice::take()};
    return options;
  }
  const auto& frag = std::get<Fragment>(item.node);
  const auto bodies = all_expansions(frag.body, loop_cap);
  if (frag.kind == FragmentKind::opt) {
    options.push_back(Choice::skip());
    for (const auto& b : bodies) options.push_back(Choice::take(b));
    return options;
  }
  const std::size_t hi = std::min(frag.max_iter, std::max(frag.min_iter, loop_cap));
  for (std::size_t n = frag.min_iter; n <= hi; ++n) {
    // Cartesian power bodies^n.
    std::vector<std::vector<std::vector<Choice>>> partial{{}};
    for (std::size_t k = 0; k < n; ++k) {
      std::vector<std::vector<std::vector<Choice>>> grown;
      for (const auto& p : partial) {
        for (const auto& b : bodies) {
          auto q = p;
          q.push_back(b);
          grown.push_back(std::move(q));
        }
      }
      partial = std::move(grown);
    }
    for (auto& p : partial) options.push_back(Choice::repeat(std::move(p)));
  }
  return options;
}

inline std::vector<std::vector<Choice>> all_expansions(const std::vector<Item>& items,
                                                       std::size_t loop_cap) {
  std::vector<std::vector<Choice>> acc{{}};
  for (const auto& item : items) {
    const bool is_point =
        std::holds_alternative<Fragment>(item.node) ||
        (std::holds_alternative<MessageSpec>(item.node) &&
         std::get<MessageSpec>(item.node).is_optional());
    if (!is_point) continue;
    const auto options = choice_options(item, loop_cap);
    std::vector<std::vector<Choice>> grown;
    for (const auto& prefix : acc) {
      for (const auto& opt : options) {
        auto next = prefix;
        next.push_back(opt);
        grown.push_back(std::move(next));
      }
    }
    acc = std::move(grown);
  }
  return acc;
}

}  // namespace detail

// Every expansion of the document with loop counts limited to
// [min, min(max, max(min, loop_cap))].
inline std::vector<FragmentExpansion> enumerate_expansions(const MscDocument& doc,
                                                           std::size_t loop_cap) {
  return detail::all_expansions(doc.body, loop_cap);
}

// Depth-first enumeration of the total orders extending the graph's order.
// `admit` may prune a prefix (return false); `visit` receives each complete
// order and may stop the enumeration (return false). Throws CapExceeded when
// more than `node_cap` search nodes would be expanded.
inline void for_each_linearization(
    const EventGraph& graph,
    const std::function<bool(std::span<const std::size_t>)>& admit,
    const std::function<bool(std::span<const std::size_t>)>& visit, std::size_t node_cap) {
  const std::size_t n = graph.events.size();
  std::vector<std::size_t> indegree(n, 0);
  std::vector<std::vector<std::size_t>> succ(n);
  for (auto [a, b] : graph.edges) {
    succ[a].push_back(b);
    ++indegree[b];
  }
  std::vector<std::size_t> prefix;
  std::vector<char> used(n, 0);
  std::size_t nodes = 0;
  bool stop = false;

  std::function<void()> dfs = [&]() {
    if (stop) return;
    if (++nodes > node_cap) {
      throw Error(ErrorKind::CapExceeded,
                  "linearization search exceeded " + std::to_string(node_cap) + " nodes");
    }
    if (prefix.size() == n) {
      if (!visit(prefix)) stop = true;
      return;
    }
    for (std::size_t e = 0; e < n && !stop; ++e) {
      if (used[e] || indegree[e] != 0) continue;
      prefix.push_back(e);
      if (admit(prefix)) {
        used[e] = 1;
        for (std::size_t s : succ[e]) --indegree[s];
        dfs();
        for (std::size_t s : succ[e]) ++indegree[s];
        used[e] = 0;
      }
      prefix.pop_back();
    }
  };
  dfs();
}

inline constexpr std::size_t kMaxOracleEvents = 24;

// All total orders of the expanded graph. Throws ExpansionOutOfBounds for an
// inadmissible expansion or more than 24 events, CapExceeded when the result
// would hold more than `cap` sequences.
inline std::vector<std::vector<Event>> linearizations(const EventGraph& graph,
                                                      const FragmentExpansion& expansion,
                                                      std::size_t cap) {
  const EventGraph expanded = expand_graph(graph, expansion);
  if (expanded.events.size() > kMaxOracleEvents) {
    throw Error(ErrorKind::ExpansionOutOfBounds,
                "expanded chart has " + std::to_string(expanded.events.size()) +
                    " events; at most 24 can be enumerated");
  }
  std::vector<std::vector<Event>> out;
  for_each_linearization(
      expanded, [](std::span<const std::size_t>) { return true; },
      [&](std::span<const std::size_t> order) {
        if (out.size() == cap) {
          throw Error(ErrorKind::CapExceeded,
                      "more than " + std::to_string(cap) + " linearizations");
        }
        std::vector<Event> seq;
        seq.reserve(order.size());
        for (std::size_t e : order) seq.push_back(expanded.events[e]);
        out.push_back(std::move(seq));
        return true;
      },
      std::numeric_limits<std::size_t>::max());
  return out;
}

}  // namespace dfci
