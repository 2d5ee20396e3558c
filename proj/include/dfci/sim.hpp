#pragma once

// Deterministic simulation of a chart, with post-hoc fault injection.
//
// The chart is expanded once (loop counts and opt decisions from the config),
// then its events are scheduled one at a time: among enabled events the one
// with the lowest message-instance position wins. Randomness comes only from
// std::mt19937_64 seeded with SimConfig::seed, and is drawn in a fixed order:
// `random` opt decisions during expansion (one draw per decision, low bit),
// then one draw per targeted message instance per fault rule.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <iomanip>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dfci/conformance.hpp"
#include "dfci/custody.hpp"
#include "dfci/error.hpp"
#include "dfci/event_graph.hpp"
#include "dfci/msc.hpp"
#include "dfci/sha256.hpp"
#include "dfci/timestamp.hpp"
#include "dfci/trace.hpp"

namespace dfci {

enum class OptPolicy { take, skip, random };

inline std::optional<OptPolicy> opt_policy_from_string(std::string_view s) {
  if (s == "take") return OptPolicy::take;
  if (s == "skip") return OptPolicy::skip;
  if (s == "random") return OptPolicy::random;
  return std::nullopt;
}

// ledger_tamper corrupts the custody entry recorded for the target instead of
// the trace.
enum class FaultKind { drop, tamper, duplicate, delay, ledger_tamper };

inline constexpr std::array<std::string_view, 5> kFaultKindNames = {
    "drop", "tamper", "duplicate", "delay", "ledger_tamper"};

inline std::string_view to_string(FaultKind k) {
  return kFaultKindNames[static_cast<std::size_t>(k)];
}

inline std::optional<FaultKind> fault_kind_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kFaultKindNames.size(); ++i) {
    if (kFaultKindNames[i] == s) return static_cast<FaultKind>(i);
  }
  return std::nullopt;
}

struct Rational {
  std::uint64_t num = 0;
  std::uint64_t den = 1;

  bool valid() const { return den != 0 && num <= den; }
  bool operator==(const Rational&) const = default;
};

// Accepts "n", "n/d" and decimals such as "0.25".
inline std::optional<Rational> parse_rational(std::string_view s) {
  auto number = [](std::string_view t) -> std::optional<std::uint64_t> {
    std::uint64_t v = 0;
    if (t.empty()) return std::nullopt;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size()) return std::nullopt;
    return v;
  };
  if (auto slash = s.find('/'); slash != std::string_view::npos) {
    auto n = number(s.substr(0, slash));
    auto d = number(s.substr(slash + 1));
    if (!n || !d || *d == 0) return std::nullopt;
    return Rational{*n, *d};
  }
  if (auto dot = s.find('.'); dot != std::string_view::npos) {
    const auto frac = s.substr(dot + 1);
    if (frac.size() > 18) return std::nullopt;
    auto whole = number(s.substr(0, dot));
    auto digits = number(frac);
    if (!whole || !digits) return std::nullopt;
    std::uint64_t den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
    if (*whole > 1) return std::nullopt;
    return Rational{*whole * den + *digits, den};
  }
  auto n = number(s);
  if (!n) return std::nullopt;
  return Rational{*n, 1};
}

inline std::string to_string(const Rational& r) {
  if (r.den == 1) return std::to_string(r.num);
  return std::to_string(r.num) + "/" + std::to_string(r.den);
}

struct FaultRule {
  std::string target;
  FaultKind kind = FaultKind::drop;
  Rational probability{1, 1};

  bool operator==(const FaultRule&) const = default;
};

// "kind:msg=ID,p=RAT" (p defaults to 1).
inline FaultRule parse_fault(std::string_view spec) {
  auto bad = [&](const std::string& why) {
    return Error(ErrorKind::ConfigOutOfBounds,
                 "fault '" + std::string(spec) + "': " + why);
  };
  const auto colon = spec.find(':');
  if (colon == std::string_view::npos) throw bad("expected kind:msg=ID[,p=RAT]");
  const auto kind = fault_kind_from_string(spec.substr(0, colon));
  if (!kind) throw bad("unknown fault kind");
  FaultRule rule;
  rule.kind = *kind;
  std::string_view rest = spec.substr(colon + 1);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const auto part = rest.substr(0, comma);
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    const auto eq = part.find('=');
    if (eq == std::string_view::npos) throw bad("expected key=value");
    const auto key = part.substr(0, eq);
    const auto value = part.substr(eq + 1);
    if (key == "msg") {
      rule.target = std::string(value);
    } else if (key == "p") {
      const auto p = parse_rational(value);
      if (!p || !p->valid()) throw bad("probability must be a rational in [0,1]");
      rule.probability = *p;
    } else {
      throw bad("unknown key '" + std::string(key) + "'");
    }
  }
  if (rule.target.empty()) throw bad("missing msg=ID");
  return rule;
}

inline std::string to_string(const FaultRule& f) {
  return std::string(to_string(f.kind)) + ":msg=" + f.target + ",p=" + to_string(f.probability);
}

inline constexpr std::size_t kMaxSimLoopIterations = 3;

struct SimConfig {
  std::uint64_t seed = 0;
  // Keyed by choice-point index (see choice_points()).
  std::map<std::size_t, std::size_t> loop_iterations;
  std::map<std::size_t, OptPolicy> opt_policy;
  std::optional<std::size_t> default_loop_iterations;  // otherwise max(min, 1)
  OptPolicy default_opt_policy = OptPolicy::take;
  std::vector<FaultRule> faults;
};

struct SimResult {
  Trace trace;
  std::optional<CustodyChain> chain;
};

inline const std::string kSimEpoch = "2025-01-01T00:00:00Z";

namespace detail {

inline void require_config(const MscDocument& doc, const SimConfig& config) {
  auto bad = [](const std::string& why) { return Error(ErrorKind::ConfigOutOfBounds, why); };
  const auto points = choice_points(doc);
  for (const auto& [index, count] : config.loop_iterations) {
    if (index >= points.size() || points[index].kind != ChoiceKind::loop) {
      throw bad("loop_iterations: choice point " + std::to_string(index) + " is not a loop");
    }
    const auto* f = points[index].fragment;
    if (count < f->min_iter || count > f->max_iter || count > kMaxSimLoopIterations) {
      throw bad("loop_iterations: " + std::to_string(count) + " outside the bounds of loop " +
                std::to_string(index));
    }
  }
  for (const auto& [index, policy] : config.opt_policy) {
    if (index >= points.size() || points[index].kind == ChoiceKind::loop) {
      throw bad("opt_policy: choice point " + std::to_string(index) + " is not optional");
    }
  }
  if (config.default_loop_iterations) {
    const std::size_t n = *config.default_loop_iterations;
    if (n > kMaxSimLoopIterations) {
      throw bad("loop count " + std::to_string(n) + " exceeds the cap of 3");
    }
    for (const auto& cp : points) {
      if (cp.kind == ChoiceKind::loop && !config.loop_iterations.count(cp.index) &&
          (n < cp.fragment->min_iter || n > cp.fragment->max_iter)) {
        throw bad("loop count " + std::to_string(n) + " outside the bounds of loop " +
                  std::to_string(cp.index));
      }
    }
  }
  for (const auto& f : config.faults) {
    if (!f.probability.valid()) throw bad("fault probability outside [0,1]");
    if (!find_message(doc, f.target)) {
      throw bad("fault target '" + f.target + "' is not a message of " + doc.name);
    }
  }
}

class Expander {
 public:
  Expander(const MscDocument& doc, const SimConfig& config, std::mt19937_64& rng)
      : index_(doc), config_(config), rng_(rng) {}

  FragmentExpansion run(const std::vector<Item>& items) {
    FragmentExpansion out;
    for (const auto& item : items) {
      if (const auto* m = std::get_if<MessageSpec>(&item.node)) {
        if (m->is_optional()) out.push_back(take(index_(m)) ? Choice::take() : Choice::skip());
      } else if (const auto* f = std::get_if<Fragment>(&item.node)) {
        const std::size_t cp = index_(f);
        if (f->kind == FragmentKind::opt) {
          out.push_back(take(cp) ? Choice::take(run(f->body)) : Choice::skip());
          continue;
        }
        std::size_t n = std::max<std::size_t>(f->min_iter, 1);
        if (config_.default_loop_iterations) n = *config_.default_loop_iterations;
        if (auto it = config_.loop_iterations.find(cp); it != config_.loop_iterations.end()) {
          n = it->second;
        }
        std::vector<std::vector<Choice>> iterations;
        for (std::size_t i = 0; i < n; ++i) iterations.push_back(run(f->body));
        out.push_back(Choice::repeat(std::move(iterations)));
      }
    }
    return out;
  }

 private:
  ChoiceIndex index_;
  const SimConfig& config_;
  std::mt19937_64& rng_;

  bool take(std::size_t cp) {
    OptPolicy policy = config_.default_opt_policy;
    if (auto it = config_.opt_policy.find(cp); it != config_.opt_policy.end()) policy = it->second;
    if (policy == OptPolicy::random) return (rng_() & 1U) != 0;
    return policy == OptPolicy::take;
  }
};

inline std::string event_ts(std::uint64_t seq) {
  return format_timestamp(std::chrono::sys_seconds(std::chrono::seconds(1735689600 + seq)));
}

struct SimEvent {
  TraceEvent event;
  std::size_t instance;
};

inline bool draw(std::mt19937_64& rng, const Rational& p) {
  const std::uint64_t r = rng();
  return r % p.den < p.num;
}

}  // namespace detail

inline SimResult simulate(const MscDocument& doc, const SimConfig& config) {
  detail::require_valid(doc);
  detail::require_config(doc, config);
  std::mt19937_64 rng(config.seed);

  const FragmentExpansion expansion = detail::Expander(doc, config, rng).run(doc.body);
  const EventGraph graph = expand_graph(compile(doc), expansion);
  const auto instances = expand(*graph.source, expansion);

  // Schedule: repeatedly emit the ready event of the lowest instance.
  const std::size_t n = graph.events.size();
  std::vector<std::size_t> indegree(n, 0);
  std::vector<std::vector<std::size_t>> succ(n);
  for (auto [a, b] : graph.edges) {
    succ[a].push_back(b);
    ++indegree[b];
  }
  std::map<std::string, std::size_t> occurrences;
  std::vector<std::size_t> occurrence_of(instances.size(), 0);
  std::vector<std::string> digest_of(instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& spec = *instances[i].spec;
    occurrence_of[i] = occurrences[spec.msg_id]++;
    digest_of[i] = sha256_hex(doc.name + "\n" + spec.msg_id + "\n" +
                              std::to_string(occurrence_of[i]) + "\n" + spec.label);
  }

  std::vector<detail::SimEvent> events;
  std::vector<char> done(n, 0);
  std::vector<std::uint64_t> seq_of_event(n, 0);
  for (std::size_t step = 0; step < n; ++step) {
    std::optional<std::size_t> pick;
    for (std::size_t e = 0; e < n; ++e) {
      if (done[e] || indegree[e] != 0) continue;
      const auto& ev = graph.events[e];
      if (!pick) {
        pick = e;
        continue;
      }
      const auto& best = graph.events[*pick];
      if (std::tie(ev.instance, ev.msg_id) < std::tie(best.instance, best.msg_id)) pick = e;
    }
    const std::size_t e = *pick;
    done[e] = 1;
    for (std::size_t s : succ[e]) --indegree[s];
    seq_of_event[e] = step;

    const auto& ge = graph.events[e];
    const auto& inst = instances[ge.instance];
    TraceEvent ev;
    ev.seq = step;
    ev.ts = detail::event_ts(step);
    ev.protocol = doc.name;
    ev.msg_id = ge.msg_id;
    ev.kind = ge.kind;
    ev.from = inst.spec->from;
    ev.to = inst.spec->to;
    ev.payload_digest = digest_of[ge.instance];
    ev.meta["label"] = inst.spec->label;
    if (inst.spec->phase) ev.meta["phase"] = std::string(to_string(*inst.spec->phase));
    if (inst.spec->scene) ev.meta["scene"] = *inst.spec->scene;
    events.push_back({std::move(ev), ge.instance});
  }

  SimResult result;

  // Custody entries for the first instance of each trigger message.
  if (doc.custody_span) {
    const auto triggers = custody_triggers(doc);
    std::string custodian;
    struct Pending {
      std::size_t at;
      EntryFields fields;
    };
    std::vector<Pending> pending;
    for (const auto& t : triggers) {
      std::optional<std::size_t> inst;
      for (std::size_t i = 0; i < instances.size(); ++i) {
        if (instances[i].spec->msg_id == t.msg_id) {
          inst = i;
          break;
        }
      }
      if (!inst) continue;
      const auto& spec = *instances[*inst].spec;
      if (t.action == CustodyAction::seize) custodian = instances[*inst].from;
      const std::size_t at =
          seq_of_event[graph.find(spec.msg_id, t.final ? EventKind::recv : EventKind::send,
                                  occurrence_of[*inst])];
      const bool report = spec.phase == Phase::Analysis || spec.phase == Phase::Presentation ||
                          spec.phase == Phase::Decision;
      pending.push_back({at,
                         {detail::event_ts(at), t.final ? instances[*inst].from : custodian,
                          t.action, report ? "report-01" : "devices-01", digest_of[*inst]}});
    }
    std::stable_sort(pending.begin(), pending.end(),
                     [](const Pending& a, const Pending& b) { return a.at < b.at; });
    if (!pending.empty() && pending.front().fields.action == CustodyAction::seize) {
      CustodyChain chain = open_chain(doc.name, pending.front().fields);
      for (std::size_t i = 1; i < pending.size(); ++i) {
        chain = append_entry(std::move(chain), pending[i].fields);
      }
      result.chain = std::move(chain);
    }
  }

  // Faults: trace surgery on the generated run.
  for (const auto& rule : config.faults) {
    std::vector<std::size_t> targets;
    for (std::size_t i = 0; i < instances.size(); ++i) {
      if (instances[i].spec->msg_id == rule.target) targets.push_back(i);
    }
    for (std::size_t inst : targets) {
      if (!detail::draw(rng, rule.probability)) continue;
      auto is_recv = [&](const detail::SimEvent& s) {
        return s.instance == inst && s.event.kind == EventKind::recv;
      };
      switch (rule.kind) {
        case FaultKind::drop:
          std::erase_if(events, [&](const detail::SimEvent& s) { return s.instance == inst; });
          break;
        case FaultKind::tamper:
          for (auto& s : events) {
            if (is_recv(s)) s.event.payload_digest = sha256_hex("tampered\n" + digest_of[inst]);
          }
          break;
        case FaultKind::duplicate: {
          auto it = std::find_if(events.begin(), events.end(), is_recv);
          if (it != events.end()) {
            detail::SimEvent copy = *it;
            events.insert(std::next(it), std::move(copy));
          }
          break;
        }
        case FaultKind::delay: {
          const std::size_t k = 1 + rng() % 3;
          auto it = std::find_if(events.begin(), events.end(), is_recv);
          if (it == events.end()) break;
          const std::size_t from = static_cast<std::size_t>(it - events.begin());
          const std::size_t to = std::min(from + k, events.size() - 1);
          std::rotate(events.begin() + static_cast<std::ptrdiff_t>(from),
                      events.begin() + static_cast<std::ptrdiff_t>(from) + 1,
                      events.begin() + static_cast<std::ptrdiff_t>(to) + 1);
          break;
        }
        case FaultKind::ledger_tamper:
          if (result.chain) {
            for (auto& entry : result.chain->entries) {
              if (entry.payload_digest == digest_of[inst]) {
                entry.payload_digest[0] = entry.payload_digest[0] == '0' ? '1' : '0';
                break;
              }
            }
          }
          break;
      }
    }
  }

  for (std::size_t i = 0; i < events.size(); ++i) {
    events[i].event.seq = i;
    result.trace.push_back(std::move(events[i].event));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Adversary matrix.

struct DetectionRow {
  std::string msg_id;
  bool mandatory = false;
  FaultKind kind = FaultKind::drop;
  std::uint64_t seed = 0;
  bool conformance = false;
  bool objective = false;
  bool custody = false;
  bool digest = false;

  bool detected() const { return conformance || objective || custody || digest; }
  std::vector<std::string> detectors() const {
    std::vector<std::string> out;
    if (conformance) out.emplace_back("conformance");
    if (objective) out.emplace_back("objective");
    if (custody) out.emplace_back("custody");
    if (digest) out.emplace_back("digest");
    return out;
  }
};

struct DetectionReport {
  std::string protocol;
  std::vector<DetectionRow> rows;
};

// Runs every detector against one simulated (possibly faulty) run.
inline DetectionRow detect(const MscDocument& doc, const SimResult& run) {
  DetectionRow row;
  row.conformance = check_trace(doc, run.trace).verdict == Verdict::nonconformant;
  row.objective = !check_objectives(doc, run.trace).all_satisfied();
  if (doc.custody_span) {
    if (!run.chain) {
      row.custody = true;
    } else if (!verify_chain(*run.chain).valid) {
      row.custody = true;
    } else {
      row.custody = !check_custody_coverage(doc, run.trace, *run.chain).covered;
    }
  }
  row.digest = !digest_cross_check(doc, run.trace, run.chain).empty();
  return row;
}

inline DetectionReport adversary_matrix(const MscDocument& doc, const std::vector<FaultKind>& kinds,
                                        const std::vector<std::uint64_t>& seeds,
                                        const SimConfig& base = {}) {
  detail::require_valid(doc);
  const detail::ChartIndex index(doc);
  std::set<std::string> mandatory;
  for (const auto* m : index.always_required) mandatory.insert(m->msg_id);

  DetectionReport report;
  report.protocol = doc.name;
  for (const auto* m : messages(doc)) {
    for (FaultKind kind : kinds) {
      for (std::uint64_t seed : seeds) {
        SimConfig config = base;
        config.seed = seed;
        config.faults = {FaultRule{m->msg_id, kind, {1, 1}}};
        DetectionRow row = detect(doc, simulate(doc, config));
        row.msg_id = m->msg_id;
        row.mandatory = mandatory.count(m->msg_id) > 0;
        row.kind = kind;
        row.seed = seed;
        report.rows.push_back(std::move(row));
      }
    }
  }
  return report;
}

inline std::string format_table(const DetectionReport& report) {
  const std::vector<std::string> head = {"msg", "mandatory", "kind", "seed",
                                         "conformance", "objective", "custody", "digest"};
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : report.rows) {
    auto mark = [](bool b) { return std::string(b ? "x" : "-"); };
    cells.push_back({r.msg_id, r.mandatory ? "yes" : "no", std::string(to_string(r.kind)),
                     std::to_string(r.seed), mark(r.conformance), mark(r.objective),
                     mark(r.custody), mark(r.digest)});
  }
  std::vector<std::size_t> width(head.size());
  for (std::size_t c = 0; c < head.size(); ++c) {
    width[c] = head[c].size();
    for (const auto& row : cells) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream os;
  auto line = [&](const std::vector<std::string>& row) {
    std::string text;
    for (std::size_t c = 0; c < row.size(); ++c) {
      text += row[c];
      if (c + 1 < row.size()) text += std::string(width[c] - row[c].size() + 2, ' ');
    }
    os << text << '\n';
  };
  line(head);
  for (const auto& row : cells) line(row);
  return os.str();
}

inline nlohmann::ordered_json to_json(const DetectionReport& report) {
  nlohmann::ordered_json j;
  j["protocol"] = report.protocol;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : report.rows) {
    nlohmann::ordered_json jr;
    jr["msg_id"] = r.msg_id;
    jr["mandatory"] = r.mandatory;
    jr["kind"] = std::string(to_string(r.kind));
    jr["seed"] = r.seed;
    jr["detectors"] = r.detectors();
    j["rows"].push_back(std::move(jr));
  }
  return j;
}

}  // namespace dfci
