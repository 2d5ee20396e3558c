#pragma once

// Object model for message sequence charts: lifelines, messages, loop/opt
// fragments, scene markers, objectives and the custody span. Documents are
// plain values; validate_document() reports every broken invariant as data.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dfci/error.hpp"

namespace dfci {

enum class Modality { mandatory, optional };

enum class Phase : std::uint8_t {
  Identification,
  Preservation,
  Collection,
  Examination,
  Analysis,
  Presentation,
  Decision,
};

inline constexpr std::array<std::string_view, 7> kPhaseNames = {
    "Identification", "Preservation", "Collection", "Examination",
    "Analysis",       "Presentation", "Decision"};

inline std::string_view to_string(Phase phase) {
  return kPhaseNames[static_cast<std::size_t>(phase)];
}

inline std::optional<Phase> phase_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kPhaseNames.size(); ++i) {
    if (kPhaseNames[i] == name) return static_cast<Phase>(i);
  }
  return std::nullopt;
}

struct Lifeline {
  std::string id;
  std::string display_name;
  std::string role;

  bool operator==(const Lifeline&) const = default;
};

// A second name for an existing lifeline (e.g. a Suspect who later appears
// as the Defendant). Events on the alias are events on the lifeline.
struct Alias {
  std::string name;
  std::string lifeline;

  bool operator==(const Alias&) const = default;
};

struct MessageSpec {
  std::string msg_id;
  std::string from;
  std::string to;
  std::string label;
  Modality modality = Modality::mandatory;
  std::optional<Phase> phase;
  // Derived from the closest preceding scene marker; see annotate_scenes().
  std::optional<std::string> scene;

  bool is_optional() const { return modality == Modality::optional; }
  bool operator==(const MessageSpec&) const = default;
};

struct Scene {
  std::string name;
  bool operator==(const Scene&) const = default;
};

struct Note {
  std::string text;
  bool operator==(const Note&) const = default;
};

enum class FragmentKind { loop, opt };

inline constexpr std::size_t kUnbounded = std::numeric_limits<std::size_t>::max();

struct Item;

struct Fragment {
  FragmentKind kind = FragmentKind::opt;
  std::vector<Item> body;
  // Loop bounds. Both stay 0 for opt fragments.
  std::size_t min_iter = 0;
  std::size_t max_iter = 0;

  bool operator==(const Fragment&) const;
};

struct Item {
  std::variant<MessageSpec, Fragment, Scene, Note> node;

  bool operator==(const Item&) const = default;
};

inline bool Fragment::operator==(const Fragment&) const = default;

inline Item make_loop(std::vector<Item> body, std::size_t min_iter = 1,
                      std::size_t max_iter = kUnbounded) {
  return Item{Fragment{FragmentKind::loop, std::move(body), min_iter, max_iter}};
}

inline Item make_opt(std::vector<Item> body) {
  return Item{Fragment{FragmentKind::opt, std::move(body), 0, 0}};
}

// Objective predicates: eventually(m) atoms combined with and/or, plus two
// atoms used for procedural objectives: responds(q, a) holds when every send
// of q is matched by a delivered a, and `conformant` holds when the whole
// trace conforms to the chart.
struct Predicate {
  enum class Kind { eventually, responds, conformant, all_of, any_of };

  Kind kind = Kind::eventually;
  std::string msg_id;
  std::string reply_id;
  std::vector<Predicate> operands;

  static Predicate eventually(std::string msg) {
    return Predicate{Kind::eventually, std::move(msg), {}, {}};
  }
  static Predicate responds(std::string request, std::string reply) {
    return Predicate{Kind::responds, std::move(request), std::move(reply), {}};
  }
  static Predicate conformant() { return Predicate{Kind::conformant, {}, {}, {}}; }
  static Predicate both(Predicate lhs, Predicate rhs) {
    Predicate p{Kind::all_of, {}, {}, {}};
    p.operands.push_back(std::move(lhs));
    p.operands.push_back(std::move(rhs));
    return p;
  }
  static Predicate either(Predicate lhs, Predicate rhs) {
    Predicate p{Kind::any_of, {}, {}, {}};
    p.operands.push_back(std::move(lhs));
    p.operands.push_back(std::move(rhs));
    return p;
  }

  bool operator==(const Predicate&) const = default;
};

// Every message id referenced by the predicate, in left-to-right order.
inline void collect_references(const Predicate& pred, std::vector<std::string>& out) {
  switch (pred.kind) {
    case Predicate::Kind::eventually:
      out.push_back(pred.msg_id);
      break;
    case Predicate::Kind::responds:
      out.push_back(pred.msg_id);
      out.push_back(pred.reply_id);
      break;
    case Predicate::Kind::conformant:
      break;
    case Predicate::Kind::all_of:
    case Predicate::Kind::any_of:
      for (const auto& op : pred.operands) collect_references(op, out);
      break;
  }
}

struct ObjectiveSpec {
  std::string id;
  std::string description;
  Predicate predicate;

  bool operator==(const ObjectiveSpec&) const = default;
};

struct CustodySpan {
  std::string start;
  std::string end;

  bool operator==(const CustodySpan&) const = default;
};

struct MscDocument {
  std::string name;
  std::vector<Lifeline> lifelines;
  std::vector<Alias> aliases;
  std::vector<Item> body;
  std::vector<ObjectiveSpec> objectives;
  std::optional<CustodySpan> custody_span;

  bool operator==(const MscDocument&) const = default;
};

// ---------------------------------------------------------------------------
// Lexical helpers shared by validation and the textual syntax.

inline bool is_token(std::string_view s) {
  if (s.empty()) return false;
  auto alpha = [](char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z'); };
  auto digit = [](char c) { return c >= '0' && c <= '9'; };
  if (!alpha(s.front())) return false;
  return std::all_of(s.begin() + 1, s.end(),
                     [&](char c) { return alpha(c) || digit(c) || c == '_'; });
}

// Message ids: digits with an optional letter suffix ("6", "2a"), optionally
// qualified by a protocol token ("trial.9b").
inline bool is_msg_id(std::string_view s) {
  auto dot = s.rfind('.');
  if (dot != std::string_view::npos) {
    if (!is_token(s.substr(0, dot))) return false;
    s = s.substr(dot + 1);
  }
  std::size_t i = 0;
  while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i;
  if (i == 0) return false;
  for (; i < s.size(); ++i) {
    char c = s[i];
    if (!((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'))) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Traversal.

template <typename Fn>
void for_each_message(const std::vector<Item>& items, Fn&& fn) {
  for (const auto& item : items) {
    if (const auto* msg = std::get_if<MessageSpec>(&item.node)) {
      fn(*msg);
    } else if (const auto* frag = std::get_if<Fragment>(&item.node)) {
      for_each_message(frag->body, fn);
    }
  }
}

inline std::vector<const MessageSpec*> messages(const MscDocument& doc) {
  std::vector<const MessageSpec*> out;
  for_each_message(doc.body, [&](const MessageSpec& m) { out.push_back(&m); });
  return out;
}

inline const MessageSpec* find_message(const MscDocument& doc, std::string_view msg_id) {
  const MessageSpec* found = nullptr;
  for_each_message(doc.body, [&](const MessageSpec& m) {
    if (!found && m.msg_id == msg_id) found = &m;
  });
  return found;
}

inline std::optional<std::size_t> message_position(const MscDocument& doc,
                                                   std::string_view msg_id) {
  auto all = messages(doc);
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all[i]->msg_id == msg_id) return i;
  }
  return std::nullopt;
}

inline const Lifeline* find_lifeline(const MscDocument& doc, std::string_view id) {
  for (const auto& l : doc.lifelines) {
    if (l.id == id) return &l;
  }
  return nullptr;
}

// Canonical lifeline id for a lifeline id or alias; empty if neither.
inline std::string resolve_lifeline(const MscDocument& doc, std::string_view name) {
  if (find_lifeline(doc, name)) return std::string(name);
  for (const auto& a : doc.aliases) {
    if (a.name == name && find_lifeline(doc, a.lifeline)) return a.lifeline;
  }
  return {};
}

// Sets each message's scene from the closest preceding scene marker in
// document order (markers inside fragments carry over past the fragment).
inline void annotate_scenes(MscDocument& doc) {
  std::optional<std::string> current;
  std::function<void(std::vector<Item>&)> walk = [&](std::vector<Item>& items) {
    for (auto& item : items) {
      if (auto* msg = std::get_if<MessageSpec>(&item.node)) {
        msg->scene = current;
      } else if (auto* scene = std::get_if<Scene>(&item.node)) {
        current = scene->name;
      } else if (auto* frag = std::get_if<Fragment>(&item.node)) {
        walk(frag->body);
      }
    }
  };
  walk(doc.body);
}

// ---------------------------------------------------------------------------
// Validation.

enum class IssueKind {
  InvalidName,
  DuplicateLifeline,
  DuplicateAlias,
  SelfMessage,
  UnresolvedReference,
  DuplicateMessageId,
  EmptyFragment,
  InvalidBounds,
  EmptyScene,
  DuplicateObjective,
  MalformedPredicate,
  CustodyOrder,
};

inline std::string_view to_string(IssueKind kind) {
  switch (kind) {
    case IssueKind::InvalidName: return "InvalidName";
    case IssueKind::DuplicateLifeline: return "DuplicateLifeline";
    case IssueKind::DuplicateAlias: return "DuplicateAlias";
    case IssueKind::SelfMessage: return "SelfMessage";
    case IssueKind::UnresolvedReference: return "UnresolvedReference";
    case IssueKind::DuplicateMessageId: return "DuplicateMessageId";
    case IssueKind::EmptyFragment: return "EmptyFragment";
    case IssueKind::InvalidBounds: return "InvalidBounds";
    case IssueKind::EmptyScene: return "EmptyScene";
    case IssueKind::DuplicateObjective: return "DuplicateObjective";
    case IssueKind::MalformedPredicate: return "MalformedPredicate";
    case IssueKind::CustodyOrder: return "CustodyOrder";
  }
  return "Unknown";
}

struct Issue {
  IssueKind kind;
  std::string location;  // e.g. "msg 5", "objective fair_process", "custody"
  std::string message;

  bool operator==(const Issue&) const = default;
};

namespace detail {

inline void validate_predicate(const MscDocument& doc, const Predicate& pred,
                               const std::string& where, std::vector<Issue>& issues) {
  using K = Predicate::Kind;
  if ((pred.kind == K::all_of || pred.kind == K::any_of) && pred.operands.size() != 2) {
    issues.push_back({IssueKind::MalformedPredicate, where,
                      "and/or nodes take exactly two operands"});
  }
  if ((pred.kind != K::all_of && pred.kind != K::any_of) && !pred.operands.empty()) {
    issues.push_back({IssueKind::MalformedPredicate, where, "atoms take no operands"});
  }
  if (pred.kind == K::eventually || pred.kind == K::responds) {
    std::vector<std::string> refs;
    collect_references(pred, refs);
    for (const auto& id : refs) {
      if (!find_message(doc, id)) {
        issues.push_back({IssueKind::UnresolvedReference, where,
                          "predicate references unknown message '" + id + "'"});
      }
    }
  }
  for (const auto& op : pred.operands) validate_predicate(doc, op, where, issues);
}

inline void validate_items(const MscDocument& doc, const std::vector<Item>& items,
                           std::set<std::string>& seen_ids, std::size_t& fragment_no,
                           std::vector<Issue>& issues) {
  for (const auto& item : items) {
    if (const auto* msg = std::get_if<MessageSpec>(&item.node)) {
      const std::string where = "msg " + msg->msg_id;
      if (!is_msg_id(msg->msg_id)) {
        issues.push_back({IssueKind::InvalidName, where,
                          "'" + msg->msg_id + "' is not a valid message id"});
      }
      if (!seen_ids.insert(msg->msg_id).second) {
        issues.push_back({IssueKind::DuplicateMessageId, where,
                          "message id '" + msg->msg_id + "' is declared twice"});
      }
      const auto from = resolve_lifeline(doc, msg->from);
      const auto to = resolve_lifeline(doc, msg->to);
      if (from.empty()) {
        issues.push_back({IssueKind::UnresolvedReference, where,
                          "sender '" + msg->from + "' is not a declared lifeline"});
      }
      if (to.empty()) {
        issues.push_back({IssueKind::UnresolvedReference, where,
                          "receiver '" + msg->to + "' is not a declared lifeline"});
      }
      if (!from.empty() && from == to) {
        issues.push_back({IssueKind::SelfMessage, where,
                          "'" + msg->from + "' sends message to itself"});
      }
    } else if (const auto* frag = std::get_if<Fragment>(&item.node)) {
      const std::string where = "fragment #" + std::to_string(++fragment_no);
      if (frag->body.empty()) {
        issues.push_back({IssueKind::EmptyFragment, where, "fragment body is empty"});
      } else {
        bool has_message = false;
        for_each_message(frag->body, [&](const MessageSpec&) { has_message = true; });
        if (!has_message) {
          issues.push_back({IssueKind::EmptyFragment, where,
                            "fragment body contains no messages"});
        }
      }
      if (frag->kind == FragmentKind::opt) {
        if (frag->min_iter != 0 || frag->max_iter != 0) {
          issues.push_back({IssueKind::InvalidBounds, where, "opt fragments take no bounds"});
        }
      } else if (frag->max_iter == 0 || frag->min_iter > frag->max_iter) {
        issues.push_back({IssueKind::InvalidBounds, where,
                          "loop bounds must satisfy min <= max and max >= 1"});
      }
      validate_items(doc, frag->body, seen_ids, fragment_no, issues);
    } else if (const auto* scene = std::get_if<Scene>(&item.node)) {
      if (scene->name.empty()) {
        issues.push_back({IssueKind::EmptyScene, "scene", "scene name is empty"});
      }
    }
  }
}

}  // namespace detail

// Returns every invariant violation; an empty result means the document is
// well formed.
inline std::vector<Issue> validate_document(const MscDocument& doc) {
  std::vector<Issue> issues;
  if (!is_token(doc.name)) {
    issues.push_back({IssueKind::InvalidName, "protocol",
                      "'" + doc.name + "' is not a valid protocol name"});
  }
  std::set<std::string> names;
  for (const auto& l : doc.lifelines) {
    if (!is_token(l.id)) {
      issues.push_back({IssueKind::InvalidName, "lifeline " + l.id,
                        "'" + l.id + "' is not a valid lifeline id"});
    }
    if (!names.insert(l.id).second) {
      issues.push_back({IssueKind::DuplicateLifeline, "lifeline " + l.id,
                        "lifeline '" + l.id + "' is declared twice"});
    }
  }
  for (const auto& a : doc.aliases) {
    if (!is_token(a.name)) {
      issues.push_back({IssueKind::InvalidName, "alias " + a.name,
                        "'" + a.name + "' is not a valid alias"});
    }
    if (!names.insert(a.name).second) {
      issues.push_back({IssueKind::DuplicateAlias, "alias " + a.name,
                        "alias '" + a.name + "' collides with another name"});
    }
    if (!find_lifeline(doc, a.lifeline)) {
      issues.push_back({IssueKind::UnresolvedReference, "alias " + a.name,
                        "alias target '" + a.lifeline + "' is not a declared lifeline"});
    }
  }

  std::set<std::string> seen_ids;
  std::size_t fragment_no = 0;
  detail::validate_items(doc, doc.body, seen_ids, fragment_no, issues);

  std::set<std::string> objective_ids;
  for (const auto& obj : doc.objectives) {
    const std::string where = "objective " + obj.id;
    if (!is_token(obj.id)) {
      issues.push_back({IssueKind::InvalidName, where,
                        "'" + obj.id + "' is not a valid objective id"});
    }
    if (!objective_ids.insert(obj.id).second) {
      issues.push_back({IssueKind::DuplicateObjective, where,
                        "objective '" + obj.id + "' is declared twice"});
    }
    detail::validate_predicate(doc, obj.predicate, where, issues);
  }

  if (doc.custody_span) {
    const auto start = message_position(doc, doc.custody_span->start);
    const auto end = message_position(doc, doc.custody_span->end);
    if (!start) {
      issues.push_back({IssueKind::UnresolvedReference, "custody",
                        "custody start '" + doc.custody_span->start + "' is not a message"});
    }
    if (!end) {
      issues.push_back({IssueKind::UnresolvedReference, "custody",
                        "custody end '" + doc.custody_span->end + "' is not a message"});
    }
    if (start && end && *start >= *end) {
      issues.push_back({IssueKind::CustodyOrder, "custody",
                        "custody start must precede custody end"});
    }
  }
  return issues;
}

}  // namespace dfci
