#pragma once

// Hash-chained chain-of-custody ledger.
//
// entry_hash = SHA-256 of the seven fields index, ts, actor, action,
// evidence_id, payload_digest, prev_hash joined by '\n' (no trailing newline),
// lowercase hex. The genesis entry links to 64 zeros.

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dfci/error.hpp"
#include "dfci/msc.hpp"
#include "dfci/sha256.hpp"
#include "dfci/timestamp.hpp"
#include "dfci/trace.hpp"

namespace dfci {

enum class CustodyAction { seize, seal, transfer, examine, present };

inline constexpr std::array<std::string_view, 5> kCustodyActionNames = {
    "seize", "seal", "transfer", "examine", "present"};

inline std::string_view to_string(CustodyAction a) {
  return kCustodyActionNames[static_cast<std::size_t>(a)];
}

inline std::optional<CustodyAction> custody_action_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kCustodyActionNames.size(); ++i) {
    if (kCustodyActionNames[i] == s) return static_cast<CustodyAction>(i);
  }
  return std::nullopt;
}

inline const std::string kGenesisHash(64, '0');

// Entry fields supplied by the caller; index and hashes are filled in.
struct EntryFields {
  std::string ts;
  std::string actor;
  CustodyAction action = CustodyAction::seize;
  std::string evidence_id;
  std::string payload_digest;
};

struct CustodyEntry {
  std::uint64_t index = 0;
  std::string ts;
  std::string actor;
  CustodyAction action = CustodyAction::seize;
  std::string evidence_id;
  std::string payload_digest;
  std::string prev_hash;
  std::string entry_hash;

  bool operator==(const CustodyEntry&) const = default;
};

struct CustodyChain {
  std::string case_id;
  std::vector<CustodyEntry> entries;

  bool operator==(const CustodyChain&) const = default;
};

inline std::string canonical_string(const CustodyEntry& e) {
  std::string s = std::to_string(e.index);
  for (std::string_view part : {std::string_view(e.ts), std::string_view(e.actor),
                                to_string(e.action), std::string_view(e.evidence_id),
                                std::string_view(e.payload_digest),
                                std::string_view(e.prev_hash)}) {
    s.push_back('\n');
    s.append(part);
  }
  return s;
}

inline std::string compute_entry_hash(const CustodyEntry& e) {
  return sha256_hex(canonical_string(e));
}

enum class ChainCheck { IndexMismatch, MalformedField, GenesisPrevHash, PrevHashMismatch,
                        EntryHashMismatch };

inline std::string_view to_string(ChainCheck c) {
  switch (c) {
    case ChainCheck::IndexMismatch: return "IndexMismatch";
    case ChainCheck::MalformedField: return "MalformedField";
    case ChainCheck::GenesisPrevHash: return "GenesisPrevHash";
    case ChainCheck::PrevHashMismatch: return "PrevHashMismatch";
    case ChainCheck::EntryHashMismatch: return "EntryHashMismatch";
  }
  return "?";
}

struct VerifyResult {
  bool valid = true;
  std::optional<std::size_t> failing_index;
  std::optional<ChainCheck> check;
  std::string detail;
};

namespace detail {

inline bool is_evidence_id(std::string_view s) {
  if (s.empty() || !std::isalnum(static_cast<unsigned char>(s[0]))) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-';
  });
}

inline std::optional<std::string> malformed(const CustodyEntry& e) {
  if (!parse_timestamp(e.ts)) return "ts '" + e.ts + "' is not an ISO-8601 UTC timestamp";
  if (!is_token(e.actor)) return "actor '" + e.actor + "' is not a lifeline id";
  if (!is_evidence_id(e.evidence_id)) return "evidence_id '" + e.evidence_id + "' is malformed";
  if (!is_hex64(e.payload_digest)) return "payload_digest is not 64 lowercase hex digits";
  if (!is_hex64(e.prev_hash)) return "prev_hash is not 64 lowercase hex digits";
  if (!is_hex64(e.entry_hash)) return "entry_hash is not 64 lowercase hex digits";
  return std::nullopt;
}

inline CustodyEntry make_entry(std::uint64_t index, const EntryFields& f, std::string prev) {
  CustodyEntry e{index, f.ts, f.actor, f.action, f.evidence_id, f.payload_digest, std::move(prev),
                 {}};
  e.entry_hash = compute_entry_hash(e);
  return e;
}

}  // namespace detail

// Checks entries in order and stops at the first failure.
inline VerifyResult verify_chain(const CustodyChain& chain) {
  for (std::size_t i = 0; i < chain.entries.size(); ++i) {
    const auto& e = chain.entries[i];
    auto fail = [&](ChainCheck c, std::string detail) {
      return VerifyResult{false, i, c, std::move(detail)};
    };
    if (e.index != i) {
      return fail(ChainCheck::IndexMismatch,
                  "entry at position " + std::to_string(i) + " has index " +
                      std::to_string(e.index));
    }
    if (auto why = detail::malformed(e)) return fail(ChainCheck::MalformedField, *why);
    if (i == 0 && e.prev_hash != kGenesisHash) {
      return fail(ChainCheck::GenesisPrevHash, "genesis prev_hash must be 64 zeros");
    }
    if (i > 0 && e.prev_hash != chain.entries[i - 1].entry_hash) {
      return fail(ChainCheck::PrevHashMismatch,
                  "prev_hash does not match entry " + std::to_string(i - 1));
    }
    if (compute_entry_hash(e) != e.entry_hash) {
      return fail(ChainCheck::EntryHashMismatch, "entry_hash does not match entry contents");
    }
  }
  return {};
}

inline CustodyChain open_chain(std::string case_id, const EntryFields& first) {
  if (first.action != CustodyAction::seize) {
    throw Error(ErrorKind::InvalidFirstAction,
                "custody must start with seize, got " + std::string(to_string(first.action)));
  }
  CustodyChain chain{std::move(case_id), {}};
  chain.entries.push_back(detail::make_entry(0, first, kGenesisHash));
  return chain;
}

inline CustodyChain append_entry(CustodyChain chain, const EntryFields& next) {
  if (const auto v = verify_chain(chain); !v.valid) {
    throw Error(ErrorKind::BrokenChain, "cannot append to a chain that fails verification at "
                                        "index " + std::to_string(*v.failing_index) + ": " +
                                            v.detail);
  }
  const std::string prev =
      chain.entries.empty() ? kGenesisHash : chain.entries.back().entry_hash;
  chain.entries.push_back(detail::make_entry(chain.entries.size(), next, prev));
  return chain;
}

// ---------------------------------------------------------------------------
// Coverage of a trace's custody span.

enum class GapKind { StartUncovered, EndUncovered, ExamineOutsideSpan, SpanMessageMissing };

inline std::string_view to_string(GapKind g) {
  switch (g) {
    case GapKind::StartUncovered: return "StartUncovered";
    case GapKind::EndUncovered: return "EndUncovered";
    case GapKind::ExamineOutsideSpan: return "ExamineOutsideSpan";
    case GapKind::SpanMessageMissing: return "SpanMessageMissing";
  }
  return "?";
}

struct CoverageGap {
  GapKind kind;
  std::string msg_id;                  // span endpoint involved, if any
  std::optional<std::size_t> entry;    // ledger entry involved, if any
  std::string detail;
};

struct CoverageReport {
  bool covered = true;
  std::vector<CoverageGap> gaps;
};

namespace detail {

// Position on the trace time line: timestamp first, seq breaks ties.
struct Instant {
  TimePoint ts;
  std::uint64_t seq = 0;
  auto operator<=>(const Instant&) const = default;
};

inline TimePoint entry_time(const CustodyEntry& e) {
  const auto t = parse_timestamp(e.ts);
  if (!t) throw Error(ErrorKind::Format, "ledger entry " + std::to_string(e.index) + ": bad ts");
  return *t;
}

}  // namespace detail

inline CoverageReport check_custody_coverage(const MscDocument& doc, const Trace& trace,
                                             const CustodyChain& chain) {
  if (!doc.custody_span) {
    throw Error(ErrorKind::NoCustodySpan, "document '" + doc.name + "' declares no custody span");
  }
  if (const auto v = verify_chain(chain); !v.valid) {
    throw Error(ErrorKind::BrokenChain,
                "ledger fails verification at index " + std::to_string(*v.failing_index));
  }
  const auto& span = *doc.custody_span;
  CoverageReport report;
  auto gap = [&](CoverageGap g) {
    report.covered = false;
    report.gaps.push_back(std::move(g));
  };

  std::optional<detail::Instant> start, end;
  for (const auto& ev : trace) {
    const auto t = parse_timestamp(ev.ts);
    if (!t) throw Error(ErrorKind::Format, "trace seq " + std::to_string(ev.seq) + ": bad ts");
    const detail::Instant at{*t, ev.seq};
    if (ev.msg_id == span.start && !start) start = at;
    if (ev.msg_id == span.end) end = at;
  }
  if (!start) {
    gap({GapKind::SpanMessageMissing, span.start, std::nullopt,
         "span start message " + span.start + " does not occur in the trace"});
  }
  if (!end) {
    gap({GapKind::SpanMessageMissing, span.end, std::nullopt,
         "span end message " + span.end + " does not occur in the trace"});
  }

  // Entries carry no seq; at equal timestamps they count as simultaneous
  // with the event, which satisfies both (a) and (b).
  std::optional<TimePoint> seized, closed;
  std::optional<std::size_t> seize_at;
  for (std::size_t i = 0; i < chain.entries.size(); ++i) {
    const auto& e = chain.entries[i];
    const auto t = detail::entry_time(e);
    if (e.action == CustodyAction::seize && (!seized || t < *seized)) {
      seized = t;
      seize_at = i;
    }
    const bool last = i + 1 == chain.entries.size();
    if ((e.action == CustodyAction::present || last) && (!closed || t > *closed)) closed = t;
  }

  if (start && (!seized || *seized > start->ts)) {
    gap({GapKind::StartUncovered, span.start, seize_at,
         seized ? "first seize is later than span start message " + span.start
                : "ledger has no seize entry"});
  }
  if (end && (!closed || *closed < end->ts)) {
    gap({GapKind::EndUncovered, span.end,
         chain.entries.empty() ? std::nullopt : std::optional<std::size_t>(chain.entries.size() - 1),
         "custody ends before span end message " + span.end});
  }
  for (std::size_t i = 0; i < chain.entries.size(); ++i) {
    const auto& e = chain.entries[i];
    if (e.action != CustodyAction::examine) continue;
    const auto t = detail::entry_time(e);
    if ((seized && t < *seized) || (closed && t > *closed) || !seized) {
      gap({GapKind::ExamineOutsideSpan, "", i,
           "examine entry " + std::to_string(i) + " lies outside the custody interval"});
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Ledger file: JSON array of entries in index order.

inline nlohmann::ordered_json to_json(const CustodyEntry& e) {
  nlohmann::ordered_json j;
  j["index"] = e.index;
  j["ts"] = e.ts;
  j["actor"] = e.actor;
  j["action"] = std::string(to_string(e.action));
  j["evidence_id"] = e.evidence_id;
  j["payload_digest"] = e.payload_digest;
  j["prev_hash"] = e.prev_hash;
  j["entry_hash"] = e.entry_hash;
  return j;
}

inline nlohmann::ordered_json to_json(const CustodyChain& chain) {
  auto j = nlohmann::ordered_json::array();
  for (const auto& e : chain.entries) j.push_back(to_json(e));
  return j;
}

inline std::string ledger_text(const CustodyChain& chain) { return to_json(chain).dump(2) + "\n"; }

inline CustodyChain chain_from_json(const nlohmann::json& j, std::string case_id) {
  if (!j.is_array()) throw Error(ErrorKind::Format, "ledger must be a JSON array");
  CustodyChain chain{std::move(case_id), {}};
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& je = j[i];
    const std::string where = "ledger entry " + std::to_string(i);
    try {
      CustodyEntry e;
      e.index = je.at("index").get<std::uint64_t>();
      e.ts = je.at("ts").get<std::string>();
      e.actor = je.at("actor").get<std::string>();
      const auto action = custody_action_from_string(je.at("action").get<std::string>());
      if (!action) throw Error(ErrorKind::Format, where + ": unknown action");
      e.action = *action;
      e.evidence_id = je.at("evidence_id").get<std::string>();
      e.payload_digest = je.at("payload_digest").get<std::string>();
      e.prev_hash = je.at("prev_hash").get<std::string>();
      e.entry_hash = je.at("entry_hash").get<std::string>();
      chain.entries.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorKind::Format, where + ": " + ex.what());
    }
  }
  return chain;
}

inline CustodyChain parse_ledger(const std::string& text, std::string case_id) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& ex) {
    throw Error(ErrorKind::Format, std::string("ledger: ") + ex.what());
  }
  return chain_from_json(j, std::move(case_id));
}

// case_id is taken from the file name ("case.custody.json" -> "case").
inline CustodyChain load_ledger(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Format, "cannot open ledger " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  std::string stem = path.filename().string();
  if (auto dot = stem.find('.'); dot != std::string::npos) stem.resize(dot);
  return parse_ledger(text.str(), stem);
}

// ---------------------------------------------------------------------------
// Which messages produce custody entries.

struct CustodyTrigger {
  std::string msg_id;
  CustodyAction action;
  bool final = false;  // closes the span; recorded at delivery
};

// Within the custody span: the start message seizes; optional Collection
// messages seal, other Collection messages transfer; the first Examination
// message examines; the first Presentation message from the custodian
// presents; the end message is a final transfer.
inline std::vector<CustodyTrigger> custody_triggers(const MscDocument& doc) {
  std::vector<CustodyTrigger> out;
  if (!doc.custody_span) return out;
  const auto all = messages(doc);
  const auto& span = *doc.custody_span;
  bool inside = false, examined = false, presented = false;
  std::string custodian;
  for (const auto* m : all) {
    if (m->msg_id == span.start) {
      inside = true;
      custodian = resolve_lifeline(doc, m->from);
      out.push_back({m->msg_id, CustodyAction::seize});
      continue;
    }
    if (!inside) continue;
    if (m->msg_id == span.end) {
      out.push_back({m->msg_id, CustodyAction::transfer, true});
      break;
    }
    if (m->phase == Phase::Collection) {
      out.push_back({m->msg_id, m->is_optional() ? CustodyAction::seal : CustodyAction::transfer});
    } else if (m->phase == Phase::Examination && !examined) {
      examined = true;
      out.push_back({m->msg_id, CustodyAction::examine});
    } else if (m->phase == Phase::Presentation && !presented &&
               resolve_lifeline(doc, m->from) == custodian) {
      presented = true;
      out.push_back({m->msg_id, CustodyAction::present});
    }
  }
  return out;
}

struct DigestMismatch {
  std::uint64_t seq;
  std::string msg_id;
  std::string detail;
};

// Receives whose digest differs from their send, and events of the first
// instance of a custody-relevant message whose digest the ledger never
// recorded.
inline std::vector<DigestMismatch> digest_cross_check(const MscDocument& doc, const Trace& trace,
                                                      const std::optional<CustodyChain>& chain) {
  std::vector<DigestMismatch> out;
  std::map<std::string, std::vector<std::string>> sent;
  std::map<std::string, std::size_t> delivered;
  for (const auto& ev : trace) {
    if (ev.kind == EventKind::send) {
      sent[ev.msg_id].push_back(ev.payload_digest);
      continue;
    }
    const std::size_t k = delivered[ev.msg_id]++;
    const auto& sends = sent[ev.msg_id];
    if (k < sends.size() && sends[k] != ev.payload_digest) {
      out.push_back({ev.seq, ev.msg_id, "recv digest differs from the sent digest"});
    }
  }
  if (chain) {
    std::set<std::string> recorded;
    for (const auto& e : chain->entries) recorded.insert(e.payload_digest);
    std::set<std::string> triggers;
    for (const auto& t : custody_triggers(doc)) triggers.insert(t.msg_id);
    std::map<std::string, std::size_t> seen;
    for (const auto& ev : trace) {
      if (!triggers.count(ev.msg_id)) continue;
      if (ev.kind == EventKind::send && seen[ev.msg_id]++ > 0) continue;
      if (ev.kind == EventKind::recv && seen[ev.msg_id] > 1) continue;
      if (!recorded.count(ev.payload_digest)) {
        out.push_back({ev.seq, ev.msg_id, "digest not recorded in the custody ledger"});
      }
    }
  }
  return out;
}

}  // namespace dfci
