#pragma once

// Trace conformance against a chart.
//
// check_trace() makes one left-to-right pass over the trace. It keeps the
// message instances unfolded so far (with their send/receive status) and a
// continuation stack over the chart; an event is matched against an enabled
// instance, and the chart is unfolded lazily only when a send names a message
// with no pending instance. Opt/loop decisions are taken during unfolding and
// are the only backtracking points. Failed (position, state) pairs are
// memoized.
//
// oracle_check() is the brute-force reference: it enumerates expansions and
// their linearizations directly from the event graph.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "json.hpp"

#include "dfci/error.hpp"
#include "dfci/event_graph.hpp"
#include "dfci/msc.hpp"
#include "dfci/trace.hpp"

namespace dfci {

enum class Verdict { conformant, nonconformant };

inline std::string_view to_string(Verdict v) {
  return v == Verdict::conformant ? "conformant" : "nonconformant";
}

enum class ViolationKind {
  MissingMessage,
  OrderViolation,
  UnknownMessage,
  LifelineMismatch,
  RecvBeforeSend,
  LoopBoundExceeded,
};

inline constexpr std::array<std::string_view, 6> kViolationNames = {
    "MissingMessage", "OrderViolation", "UnknownMessage",
    "LifelineMismatch", "RecvBeforeSend", "LoopBoundExceeded"};

inline std::string_view to_string(ViolationKind k) {
  return kViolationNames[static_cast<std::size_t>(k)];
}

inline std::optional<ViolationKind> violation_kind_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kViolationNames.size(); ++i) {
    if (kViolationNames[i] == s) return static_cast<ViolationKind>(i);
  }
  return std::nullopt;
}

struct Violation {
  ViolationKind kind;
  std::string msg_id;
  std::optional<std::uint64_t> seq;  // nullopt: at end of trace
  std::string explanation;

  bool operator==(const Violation&) const = default;
};

struct ConformanceReport {
  std::string protocol;
  Verdict verdict = Verdict::conformant;
  std::vector<Violation> violations;

  bool operator==(const ConformanceReport&) const = default;
};

struct CheckOptions {
  // Accept traces that are a prefix of some conformant run.
  bool prefix = false;
};

namespace detail {

inline void require_protocol(const MscDocument& doc, const Trace& trace) {
  for (const auto& e : trace) {
    if (e.protocol != doc.name) {
      throw Error(ErrorKind::ProtocolMismatch, "trace event seq " + std::to_string(e.seq) +
                                                   " names protocol '" + e.protocol +
                                                   "', expected '" + doc.name + "'");
    }
  }
}

// Static facts about a chart used by the checker.
struct ChartIndex {
  std::map<std::string, const MessageSpec*, std::less<>> by_id;
  std::map<const MessageSpec*, std::pair<std::string, std::string>> lanes;
  // Upper bound on instances per message (product of enclosing loop maxima);
  // absent for messages outside any loop.
  std::map<const MessageSpec*, std::size_t> loop_bound;
  // Messages that occur in every expansion.
  std::vector<const MessageSpec*> always_required;
  std::size_t message_count = 0;
  std::size_t min_instances = 0;

  explicit ChartIndex(const MscDocument& doc) {
    walk(doc, doc.body, 1, false, true);
    min_instances = minimum(doc.body);
  }

  static std::size_t saturating_mul(std::size_t a, std::size_t b) {
    if (a == kUnbounded || b == kUnbounded) return kUnbounded;
    if (a != 0 && b > kUnbounded / a) return kUnbounded;
    return a * b;
  }

  void walk(const MscDocument& doc, const std::vector<Item>& items, std::size_t bound,
            bool in_loop, bool required) {
    for (const auto& item : items) {
      if (const auto* m = std::get_if<MessageSpec>(&item.node)) {
        ++message_count;
        by_id.emplace(m->msg_id, m);
        lanes[m] = {resolve_lifeline(doc, m->from), resolve_lifeline(doc, m->to)};
        if (in_loop) loop_bound[m] = bound;
        if (required && !m->is_optional()) always_required.push_back(m);
      } else if (const auto* f = std::get_if<Fragment>(&item.node)) {
        if (f->kind == FragmentKind::loop) {
          walk(doc, f->body, saturating_mul(bound, f->max_iter), true,
               required && f->min_iter >= 1);
        } else {
          walk(doc, f->body, bound, in_loop, false);
        }
      }
    }
  }

  static std::size_t minimum(const std::vector<Item>& items) {
    std::size_t total = 0;
    for (const auto& item : items) {
      if (const auto* m = std::get_if<MessageSpec>(&item.node)) {
        if (!m->is_optional()) ++total;
      } else if (const auto* f = std::get_if<Fragment>(&item.node)) {
        if (f->kind == FragmentKind::loop) total += f->min_iter * minimum(f->body);
      }
    }
    return total;
  }
};

struct Slot {
  const MessageSpec* spec;
  const std::string* from;
  const std::string* to;
  bool sent = false;
  bool received = false;
};

struct Frame {
  const std::vector<Item>* items;
  std::size_t next = 0;
  const Fragment* loop = nullptr;
  std::size_t iteration = 0;
  std::size_t slots_at_start = 0;
};

struct MatchState {
  std::vector<Frame> stack;
  std::vector<Slot> slots;
  std::size_t outstanding = 0;  // events still owed by unfolded instances
  std::size_t untouched = 0;    // unfolded instances not yet sent
};

inline bool nullable(const std::vector<Item>& items, std::size_t from = 0) {
  for (std::size_t i = from; i < items.size(); ++i) {
    const auto& node = items[i].node;
    if (const auto* m = std::get_if<MessageSpec>(&node)) {
      if (!m->is_optional()) return false;
    } else if (const auto* f = std::get_if<Fragment>(&node)) {
      if (f->kind == FragmentKind::loop && f->min_iter > 0 && !nullable(f->body)) return false;
    }
  }
  return true;
}

inline void required_messages(const std::vector<Item>& items, std::size_t from,
                              std::vector<std::string>& out) {
  for (std::size_t i = from; i < items.size(); ++i) {
    const auto& node = items[i].node;
    if (const auto* m = std::get_if<MessageSpec>(&node)) {
      if (!m->is_optional()) out.push_back(m->msg_id);
    } else if (const auto* f = std::get_if<Fragment>(&node)) {
      if (f->kind == FragmentKind::loop && f->min_iter > 0) required_messages(f->body, 0, out);
    }
  }
}

class Matcher {
 public:
  Matcher(const MscDocument& doc, const ChartIndex& index, const Trace& trace, bool prefix)
      : doc_(doc), index_(index), trace_(trace), prefix_(prefix) {}

  bool run() {
    MatchState s;
    s.stack.push_back(Frame{&doc_.body, 0, nullptr, 0, 0});
    return match(std::move(s), 0);
  }

  std::size_t furthest() const { return best_pos_; }
  const MatchState& furthest_state() const { return *best_; }

  // Messages the furthest state still owed when the trace ran out.
  std::vector<std::string> owed_at_end() const {
    std::vector<std::string> out;
    for (const auto& slot : best_->slots) {
      if (!slot.received) out.push_back(slot.spec->msg_id);
    }
    for (auto it = best_->stack.rbegin(); it != best_->stack.rend(); ++it) {
      required_messages(*it->items, it->next, out);
      if (it->loop && it->iteration < it->loop->min_iter) required_messages(*it->items, 0, out);
    }
    return out;
  }

  // Why the event at the furthest position could not be matched.
  std::string blocking_reason() const {
    const auto& ev = trace_[best_pos_];
    const auto& s = *best_;
    for (std::size_t i = 0; i < s.slots.size(); ++i) {
      const auto& slot = s.slots[i];
      if (slot.spec->msg_id != ev.msg_id) continue;
      if (ev.kind == EventKind::send ? slot.sent : slot.received) continue;
      if (ev.kind == EventKind::recv && !slot.sent) {
        return "recv of " + ev.msg_id + " has no matching pending send";
      }
      const std::string& lane = ev.kind == EventKind::send ? *slot.from : *slot.to;
      for (std::size_t j = 0; j < i; ++j) {
        const auto& prior = s.slots[j];
        if (*prior.from == lane && !prior.sent) {
          return std::string(to_string(ev.kind)) + " of " + ev.msg_id + " on " + lane +
                 " precedes the pending send of " + prior.spec->msg_id;
        }
        if (*prior.to == lane && !prior.received) {
          return std::string(to_string(ev.kind)) + " of " + ev.msg_id + " on " + lane +
                 " precedes the pending recv of " + prior.spec->msg_id;
        }
      }
    }
    if (ev.kind == EventKind::recv) {
      return "recv of " + ev.msg_id + " has no matching pending send";
    }
    return "send of " + ev.msg_id + " is not enabled in any admissible expansion";
  }

 private:
  const MscDocument& doc_;
  const ChartIndex& index_;
  const Trace& trace_;
  bool prefix_;
  std::size_t best_pos_ = 0;
  std::optional<MatchState> best_;
  std::unordered_set<std::string> failed_;

  bool send_enabled(const MatchState& s, std::size_t i) const {
    const std::string& lane = *s.slots[i].from;
    for (std::size_t j = 0; j < i; ++j) {
      const auto& p = s.slots[j];
      if ((*p.from == lane && !p.sent) || (*p.to == lane && !p.received)) return false;
    }
    return true;
  }

  bool recv_enabled(const MatchState& s, std::size_t i) const {
    if (!s.slots[i].sent) return false;
    const std::string& lane = *s.slots[i].to;
    for (std::size_t j = 0; j < i; ++j) {
      const auto& p = s.slots[j];
      if ((*p.from == lane && !p.sent) || (*p.to == lane && !p.received)) return false;
    }
    return true;
  }

  bool rest_nullable(const MatchState& s) const {
    for (const auto& f : s.stack) {
      if (!nullable(*f.items, f.next)) return false;
      if (f.loop && f.iteration < f.loop->min_iter && !nullable(*f.items)) return false;
    }
    return true;
  }

  std::string memo_key(const MatchState& s, std::size_t pos) const {
    std::ostringstream os;
    os << pos << '|';
    for (const auto& f : s.stack) {
      os << static_cast<const void*>(f.items) << ':' << f.next << ':' << f.iteration << ':'
         << (s.slots.size() > f.slots_at_start) << ';';
    }
    os << '|';
    for (const auto& slot : s.slots) {
      if (!slot.received) os << static_cast<const void*>(slot.spec) << (slot.sent ? 's' : 'u');
    }
    return os.str();
  }

  bool pruned(const MatchState& s, std::size_t pos) const {
    const std::size_t remaining = trace_.size() - pos;
    if (!prefix_) return s.outstanding > remaining;
    return s.untouched > (remaining + 1) * (index_.min_instances + index_.message_count);
  }

  bool match(MatchState s, std::size_t pos) {
    if (!best_ || pos > best_pos_) {
      best_pos_ = pos;
      best_ = s;
    }
    if (pos == trace_.size()) {
      return prefix_ || (s.outstanding == 0 && rest_nullable(s));
    }
    std::string key = memo_key(s, pos);
    if (failed_.count(key)) return false;
    const bool ok = step(std::move(s), pos);
    if (!ok) failed_.insert(std::move(key));
    return ok;
  }

  bool step(MatchState s, std::size_t pos) {
    const TraceEvent& ev = trace_[pos];
    auto it = index_.by_id.find(ev.msg_id);
    if (it == index_.by_id.end()) return false;
    const MessageSpec* spec = it->second;
    const auto& lanes = index_.lanes.at(spec);
    if (resolve_lifeline(doc_, ev.from) != lanes.first ||
        resolve_lifeline(doc_, ev.to) != lanes.second) {
      return false;
    }

    for (std::size_t i = 0; i < s.slots.size(); ++i) {
      auto& slot = s.slots[i];
      if (slot.spec != spec) continue;
      if (ev.kind == EventKind::recv) {
        if (slot.received) continue;
        if (!recv_enabled(s, i)) return false;
        slot.received = true;
        --s.outstanding;
        return match(std::move(s), pos + 1);
      }
      if (slot.sent) continue;
      if (!send_enabled(s, i)) return false;
      slot.sent = true;
      --s.outstanding;
      --s.untouched;
      return match(std::move(s), pos + 1);
    }
    if (ev.kind == EventKind::recv) return false;
    return unfold(std::move(s), spec, pos);
  }

  void append(MatchState& s, const MessageSpec& m) const {
    const auto& lanes = index_.lanes.at(&m);
    s.slots.push_back(Slot{&m, &lanes.first, &lanes.second});
    s.outstanding += 2;
    s.untouched += 1;
  }

  bool consume_appended(MatchState s, std::size_t pos) {
    const std::size_t i = s.slots.size() - 1;
    if (!send_enabled(s, i)) return false;
    s.slots[i].sent = true;
    --s.outstanding;
    --s.untouched;
    return match(std::move(s), pos + 1);
  }

  // Unfolds the chart until the next instance of `target`, branching at each
  // opt/loop decision on the way.
  bool unfold(MatchState s, const MessageSpec* target, std::size_t pos) {
    for (;;) {
      if (pruned(s, pos) || s.stack.empty()) return false;
      Frame& f = s.stack.back();
      if (f.next == f.items->size()) {
        if (!f.loop) {
          s.stack.pop_back();
          continue;
        }
        const bool progressed = s.slots.size() > f.slots_at_start;
        const bool can_repeat = f.iteration < f.loop->max_iter &&
                                (f.iteration < f.loop->min_iter || progressed);
        const bool can_exit = f.iteration >= f.loop->min_iter;
        if (can_repeat && can_exit) {
          MatchState again = s;
          restart(again.stack.back(), again.slots.size());
          if (unfold(std::move(again), target, pos)) return true;
          s.stack.pop_back();
        } else if (can_repeat) {
          restart(f, s.slots.size());
        } else if (can_exit) {
          s.stack.pop_back();
        } else {
          return false;
        }
        continue;
      }

      const Item& item = (*f.items)[f.next++];
      if (const auto* m = std::get_if<MessageSpec>(&item.node)) {
        if (m->is_optional()) {
          MatchState taken = s;
          append(taken, *m);
          if (m == target ? consume_appended(std::move(taken), pos)
                          : unfold(std::move(taken), target, pos)) {
            return true;
          }
          continue;
        }
        append(s, *m);
        if (m == target) return consume_appended(std::move(s), pos);
      } else if (const auto* frag = std::get_if<Fragment>(&item.node)) {
        if (frag->kind == FragmentKind::opt) {
          MatchState entered = s;
          entered.stack.push_back(Frame{&frag->body, 0, nullptr, 0, 0});
          if (unfold(std::move(entered), target, pos)) return true;
          continue;
        }
        MatchState entered = s;
        entered.stack.push_back(Frame{&frag->body, 0, frag, 1, entered.slots.size()});
        if (frag->min_iter == 0) {
          if (unfold(std::move(entered), target, pos)) return true;
          continue;
        }
        s = std::move(entered);
      }
    }
  }

  static void restart(Frame& f, std::size_t slots) {
    f.next = 0;
    ++f.iteration;
    f.slots_at_start = slots;
  }
};

}  // namespace detail

inline ConformanceReport check_trace(const MscDocument& doc, const Trace& trace,
                                     CheckOptions options = {}) {
  detail::require_valid(doc);
  detail::require_protocol(doc, trace);
  const detail::ChartIndex index(doc);

  ConformanceReport report;
  report.protocol = doc.name;
  detail::Matcher matcher(doc, index, trace, options.prefix);
  if (matcher.run()) return report;
  report.verdict = Verdict::nonconformant;

  std::map<ViolationKind, Violation> first;
  auto note = [&](Violation v) { first.try_emplace(v.kind, std::move(v)); };

  std::map<std::string, std::size_t> sends, recvs;
  for (const auto& ev : trace) {
    auto it = index.by_id.find(ev.msg_id);
    if (it == index.by_id.end()) {
      note({ViolationKind::UnknownMessage, ev.msg_id, ev.seq,
            "message '" + ev.msg_id + "' is not part of protocol " + doc.name});
      continue;
    }
    const MessageSpec* spec = it->second;
    const auto& lanes = index.lanes.at(spec);
    if (resolve_lifeline(doc, ev.from) != lanes.first ||
        resolve_lifeline(doc, ev.to) != lanes.second) {
      note({ViolationKind::LifelineMismatch, ev.msg_id, ev.seq,
            "observed " + ev.from + " -> " + ev.to + ", charted " + spec->from + " -> " +
                spec->to});
    }
    if (ev.kind == EventKind::send) {
      const std::size_t n = ++sends[ev.msg_id];
      auto bound = index.loop_bound.find(spec);
      if (bound != index.loop_bound.end() && n > bound->second) {
        note({ViolationKind::LoopBoundExceeded, ev.msg_id, ev.seq,
              "send #" + std::to_string(n) + " of " + ev.msg_id + " exceeds the loop bound of " +
                  std::to_string(bound->second)});
      }
    } else if (++recvs[ev.msg_id] > sends[ev.msg_id]) {
      note({ViolationKind::RecvBeforeSend, ev.msg_id, ev.seq,
            "recv of " + ev.msg_id + " without an outstanding send"});
    }
  }

  std::set<std::string> missing;
  if (!options.prefix) {
    for (const auto* m : index.always_required) {
      if (!sends.count(m->msg_id) || !recvs.count(m->msg_id)) missing.insert(m->msg_id);
    }
  }
  if (matcher.furthest() < trace.size()) {
    const auto& ev = trace[matcher.furthest()];
    const bool explained = (first.count(ViolationKind::UnknownMessage) &&
                            first.at(ViolationKind::UnknownMessage).seq == ev.seq) ||
                           (first.count(ViolationKind::LifelineMismatch) &&
                            first.at(ViolationKind::LifelineMismatch).seq == ev.seq);
    if (!explained) {
      note({ViolationKind::OrderViolation, ev.msg_id, ev.seq, matcher.blocking_reason()});
    }
  } else if (!options.prefix) {
    for (auto& id : matcher.owed_at_end()) missing.insert(std::move(id));
  }
  if (!missing.empty()) {
    // Report the earliest in document order, list the rest after it.
    std::vector<std::string> ordered(missing.begin(), missing.end());
    std::stable_sort(ordered.begin(), ordered.end(), [&](const auto& a, const auto& b) {
      return message_position(doc, a) < message_position(doc, b);
    });
    std::string list;
    for (const auto& id : ordered) list += (list.empty() ? "" : ", ") + id;
    note({ViolationKind::MissingMessage, ordered.front(), std::nullopt,
          "mandatory message never completed (missing: " + list + ")"});
  }
  if (first.empty()) {
    note({ViolationKind::OrderViolation, "", std::nullopt,
          "trace is not a linearization of any admissible expansion"});
  }
  for (auto& [_, v] : first) report.violations.push_back(std::move(v));
  return report;
}

// ---------------------------------------------------------------------------
// Objectives.

struct ObjectiveResult {
  std::string id;
  bool satisfied = false;
  std::optional<std::uint64_t> witness;
  std::vector<std::string> missing;

  bool operator==(const ObjectiveResult&) const = default;
};

struct ObjectiveReport {
  std::string protocol;
  std::vector<ObjectiveResult> results;

  bool all_satisfied() const {
    return std::all_of(results.begin(), results.end(),
                       [](const ObjectiveResult& r) { return r.satisfied; });
  }
  const ObjectiveResult* find(std::string_view id) const {
    for (const auto& r : results) {
      if (r.id == id) return &r;
    }
    return nullptr;
  }

  bool operator==(const ObjectiveReport&) const = default;
};

namespace detail {

struct PredicateValue {
  bool satisfied = false;
  std::optional<std::uint64_t> witness;
  std::vector<std::string> missing;
};

inline PredicateValue evaluate(const MscDocument& doc, const Predicate& p, const Trace& trace) {
  using K = Predicate::Kind;
  PredicateValue out;
  switch (p.kind) {
    case K::eventually: {
      for (const auto& e : trace) {
        if (e.kind == EventKind::recv && e.msg_id == p.msg_id &&
            (!out.witness || e.seq < *out.witness)) {
          out.witness = e.seq;
        }
      }
      out.satisfied = out.witness.has_value();
      if (!out.satisfied) out.missing.push_back(p.msg_id);
      return out;
    }
    case K::responds: {
      std::size_t requests = 0;
      std::vector<std::uint64_t> replies;
      for (const auto& e : trace) {
        if (e.kind == EventKind::send && e.msg_id == p.msg_id) ++requests;
        if (e.kind == EventKind::recv && e.msg_id == p.reply_id) replies.push_back(e.seq);
      }
      std::sort(replies.begin(), replies.end());
      out.satisfied = replies.size() >= requests;
      if (out.satisfied && requests > 0) out.witness = replies[requests - 1];
      if (!out.satisfied) out.missing.push_back(p.reply_id);
      return out;
    }
    case K::conformant:
      out.satisfied = check_trace(doc, trace).verdict == Verdict::conformant;
      return out;
    case K::all_of:
    case K::any_of: {
      const auto lhs = evaluate(doc, p.operands.at(0), trace);
      const auto rhs = evaluate(doc, p.operands.at(1), trace);
      if (p.kind == K::all_of) {
        out.satisfied = lhs.satisfied && rhs.satisfied;
        if (out.satisfied && lhs.witness && rhs.witness) {
          out.witness = std::max(*lhs.witness, *rhs.witness);
        } else if (out.satisfied) {
          out.witness = lhs.witness ? lhs.witness : rhs.witness;
        }
      } else {
        out.satisfied = lhs.satisfied || rhs.satisfied;
        for (const auto* side : {&lhs, &rhs}) {
          if (side->satisfied && side->witness &&
              (!out.witness || *side->witness < *out.witness)) {
            out.witness = side->witness;
          }
        }
      }
      if (!out.satisfied) {
        out.missing = lhs.missing;
        for (const auto& m : rhs.missing) {
          if (std::find(out.missing.begin(), out.missing.end(), m) == out.missing.end()) {
            out.missing.push_back(m);
          }
        }
      }
      return out;
    }
  }
  return out;
}

}  // namespace detail

inline ObjectiveReport check_objectives(const MscDocument& doc, const Trace& trace) {
  detail::require_valid(doc);
  detail::require_protocol(doc, trace);
  ObjectiveReport report;
  report.protocol = doc.name;
  for (const auto& obj : doc.objectives) {
    auto v = detail::evaluate(doc, obj.predicate, trace);
    report.results.push_back({obj.id, v.satisfied, v.witness, std::move(v.missing)});
  }
  return report;
}

// ---------------------------------------------------------------------------
// Reference oracle.

struct OracleLimits {
  std::size_t loop_cap = 3;          // iterations explored for unbounded loops
  std::size_t node_cap = 5'000'000;  // search nodes per expansion
};

// Conformant iff the trace's (msg_id, kind) sequence is a linearization of
// some expansion. Loops are explored up to OracleLimits::loop_cap iterations.
inline Verdict oracle_check(const MscDocument& doc, const Trace& trace,
                            OracleLimits limits = {}) {
  const EventGraph graph = compile(doc);
  detail::require_protocol(doc, trace);
  for (const auto& expansion : enumerate_expansions(doc, limits.loop_cap)) {
    const EventGraph expanded = expand_graph(graph, expansion);
    if (expanded.events.size() != trace.size()) continue;
    if (expanded.events.size() > kMaxOracleEvents) {
      throw Error(ErrorKind::ExpansionOutOfBounds,
                  "oracle expansion exceeds 24 events");
    }
    bool found = false;
    for_each_linearization(
        expanded,
        [&](std::span<const std::size_t> prefix) {
          const auto& ev = expanded.events[prefix.back()];
          const auto& obs = trace[prefix.size() - 1];
          return ev.msg_id == obs.msg_id && ev.kind == obs.kind;
        },
        [&](std::span<const std::size_t>) {
          found = true;
          return false;
        },
        limits.node_cap);
    if (found) return Verdict::conformant;
  }
  return Verdict::nonconformant;
}

// ---------------------------------------------------------------------------
// Report serialization.

inline nlohmann::ordered_json to_json(const ConformanceReport& r) {
  nlohmann::ordered_json j;
  j["protocol"] = r.protocol;
  j["verdict"] = std::string(to_string(r.verdict));
  j["violations"] = nlohmann::ordered_json::array();
  for (const auto& v : r.violations) {
    nlohmann::ordered_json jv;
    jv["kind"] = std::string(to_string(v.kind));
    jv["msg_id"] = v.msg_id;
    if (v.seq) jv["seq"] = *v.seq;
    else jv["seq"] = "end";
    jv["explanation"] = v.explanation;
    j["violations"].push_back(std::move(jv));
  }
  return j;
}

inline ConformanceReport conformance_report_from_json(const nlohmann::json& j) {
  ConformanceReport r;
  r.protocol = j.at("protocol").get<std::string>();
  const auto verdict = j.at("verdict").get<std::string>();
  if (verdict != "conformant" && verdict != "nonconformant") {
    throw Error(ErrorKind::Format, "unknown verdict '" + verdict + "'");
  }
  r.verdict = verdict == "conformant" ? Verdict::conformant : Verdict::nonconformant;
  for (const auto& jv : j.at("violations")) {
    const auto kind = violation_kind_from_string(jv.at("kind").get<std::string>());
    if (!kind) throw Error(ErrorKind::Format, "unknown violation kind");
    Violation v{*kind, jv.at("msg_id").get<std::string>(), std::nullopt,
                jv.at("explanation").get<std::string>()};
    if (jv.at("seq").is_number()) v.seq = jv.at("seq").get<std::uint64_t>();
    r.violations.push_back(std::move(v));
  }
  return r;
}

inline nlohmann::ordered_json to_json(const ObjectiveReport& r) {
  nlohmann::ordered_json j;
  j["protocol"] = r.protocol;
  j["objectives"] = nlohmann::ordered_json::array();
  for (const auto& o : r.results) {
    nlohmann::ordered_json jo;
    jo["id"] = o.id;
    jo["status"] = o.satisfied ? "satisfied" : "violated";
    if (o.witness) jo["witness"] = *o.witness;
    else jo["witness"] = nullptr;
    jo["missing"] = o.missing;
    j["objectives"].push_back(std::move(jo));
  }
  return j;
}

inline ObjectiveReport objective_report_from_json(const nlohmann::json& j) {
  ObjectiveReport r;
  r.protocol = j.at("protocol").get<std::string>();
  for (const auto& jo : j.at("objectives")) {
    ObjectiveResult o;
    o.id = jo.at("id").get<std::string>();
    o.satisfied = jo.at("status").get<std::string>() == "satisfied";
    if (!jo.at("witness").is_null()) o.witness = jo.at("witness").get<std::uint64_t>();
    o.missing = jo.at("missing").get<std::vector<std::string>>();
    r.results.push_back(std::move(o));
  }
  return r;
}

}  // namespace dfci
