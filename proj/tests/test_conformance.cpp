#include <gtest/gtest.h>

#include <algorithm>

#include "dfci/dfci.hpp"
#include "gen.hpp"

using namespace dfci;

namespace {

constexpr EventKind S = EventKind::send;
constexpr EventKind R = EventKind::recv;

Trace make(const MscDocument& doc, std::vector<std::pair<std::string, EventKind>> steps) {
  Trace t;
  for (const auto& [id, kind] : steps) {
    t.push_back(gen::event(doc, *find_message(doc, id), kind, t.size()));
  }
  return t;
}

Trace sequential(const MscDocument& doc, std::vector<std::string> ids) {
  std::vector<std::pair<std::string, EventKind>> steps;
  for (auto& id : ids) {
    steps.emplace_back(id, S);
    steps.emplace_back(id, R);
  }
  return make(doc, steps);
}

Trace canonical_investigation(const MscDocument& doc) {
  return sequential(doc, {"1", "2", "3", "4", "5", "6", "7", "8", "9", "10"});
}

MscDocument independent2() {
  return parse(R"(protocol two {
  actors A, B, C, D;
  msg 1 A -> B: "x";
  msg 2 C -> D: "y";
})");
}

const Violation* find_kind(const ConformanceReport& r, ViolationKind k) {
  for (const auto& v : r.violations) {
    if (v.kind == k) return &v;
  }
  return nullptr;
}

}  // namespace

TEST(CheckTrace, CanonicalInvestigationConforms) {
  const auto doc = protocol_investigation();
  const auto r = check_trace(doc, canonical_investigation(doc));
  EXPECT_EQ(r.verdict, Verdict::conformant);
  EXPECT_TRUE(r.violations.empty());
}

TEST(CheckTrace, OptionalMessageMayBeOmitted) {
  const auto doc = protocol_investigation();
  const auto t = sequential(doc, {"1", "2", "3", "4", "5", "7", "8", "9", "10"});
  EXPECT_EQ(check_trace(doc, t).verdict, Verdict::conformant);
}

TEST(CheckTrace, EmptyTraceMissesFirstMessage) {
  const auto r = check_trace(protocol_investigation(), {});
  ASSERT_EQ(r.verdict, Verdict::nonconformant);
  ASSERT_EQ(r.violations.size(), 1u);
  EXPECT_EQ(r.violations[0].kind, ViolationKind::MissingMessage);
  EXPECT_EQ(r.violations[0].msg_id, "1");
  EXPECT_FALSE(r.violations[0].seq.has_value());
}

TEST(CheckTrace, RecvTenBeforeSendEight) {
  const auto doc = protocol_investigation();
  auto t = make(doc, {{"1", S}, {"1", R}, {"2", S}, {"2", R}, {"3", S}, {"3", R}, {"4", S},
                      {"4", R}, {"5", S}, {"5", R}, {"7", S}, {"7", R}, {"10", R}, {"8", S},
                      {"8", R}, {"9", S}, {"9", R}, {"10", S}});
  const auto r = check_trace(doc, t);
  ASSERT_EQ(r.verdict, Verdict::nonconformant);
  const auto* v = find_kind(r, ViolationKind::OrderViolation);
  ASSERT_NE(v, nullptr);
  EXPECT_EQ(v->msg_id, "10");
  EXPECT_EQ(v->seq, 12u);
  EXPECT_NE(find_kind(r, ViolationKind::RecvBeforeSend), nullptr);
  EXPECT_EQ(oracle_check(doc, t), Verdict::nonconformant);
}

TEST(CheckTrace, DroppedMessageIsMissing) {
  const auto doc = protocol_investigation();
  const auto t = sequential(doc, {"1", "2", "3", "4", "5", "6", "7", "8", "9"});
  const auto r = check_trace(doc, t);
  ASSERT_EQ(r.violations.size(), 1u);
  EXPECT_EQ(r.violations[0].kind, ViolationKind::MissingMessage);
  EXPECT_EQ(r.violations[0].msg_id, "10");
}

TEST(CheckTrace, MissingMiddleMessageAlsoLocalizesOrder) {
  const auto doc = protocol_investigation();
  const auto t = sequential(doc, {"1", "2", "3", "5", "6", "7", "8", "9", "10"});
  const auto r = check_trace(doc, t);
  const auto* missing = find_kind(r, ViolationKind::MissingMessage);
  ASSERT_NE(missing, nullptr);
  EXPECT_EQ(missing->msg_id, "4");
  const auto* order = find_kind(r, ViolationKind::OrderViolation);
  ASSERT_NE(order, nullptr);
  EXPECT_EQ(order->msg_id, "5");
  EXPECT_EQ(order->seq, 6u);
}

TEST(CheckTrace, UnknownMessageAndLifelineMismatch) {
  const auto doc = protocol_investigation();
  auto t = canonical_investigation(doc);
  t[4].msg_id = "42";
  t[8].to = "Judge";
  const auto r = check_trace(doc, t);
  ASSERT_NE(find_kind(r, ViolationKind::UnknownMessage), nullptr);
  EXPECT_EQ(find_kind(r, ViolationKind::UnknownMessage)->seq, 4u);
  ASSERT_NE(find_kind(r, ViolationKind::LifelineMismatch), nullptr);
  EXPECT_EQ(find_kind(r, ViolationKind::LifelineMismatch)->seq, 8u);
  // The matcher stopped at the unknown message, so no separate order report.
  EXPECT_EQ(find_kind(r, ViolationKind::OrderViolation), nullptr);
  // Violations are sorted by kind.
  EXPECT_TRUE(std::is_sorted(r.violations.begin(), r.violations.end(),
                             [](const Violation& a, const Violation& b) { return a.kind < b.kind; }));
}

TEST(CheckTrace, LoopBoundExceeded) {
  const auto doc = parse(R"(protocol lb {
  actors A, B;
  loop (1..2) {
    msg 1 A -> B: "x";
  }
})");
  EXPECT_EQ(check_trace(doc, sequential(doc, {"1", "1"})).verdict, Verdict::conformant);
  const auto r = check_trace(doc, sequential(doc, {"1", "1", "1"}));
  const auto* v = find_kind(r, ViolationKind::LoopBoundExceeded);
  ASSERT_NE(v, nullptr);
  EXPECT_EQ(v->seq, 4u);
}

TEST(CheckTrace, LoopCountAmbiguityNeedsBacktracking) {
  // After the first "1" the checker cannot know whether the loop repeats or
  // whether the opt fragment of the first iteration is taken.
  const auto doc = parse(R"(protocol amb {
  actors A, B, C;
  loop (1..3) {
    msg 1 A -> B: "x";
    opt {
      msg 2 B -> C: "y";
    }
  }
  msg 3 A -> C: "z";
})");
  const std::vector<Trace> good = {
      make(doc, {{"1", S}, {"1", R}, {"1", S}, {"2", S}, {"1", R}, {"2", R}, {"3", S}, {"3", R}}),
      make(doc, {{"1", S}, {"1", R}, {"2", S}, {"1", S}, {"1", R}, {"2", R}, {"3", S}, {"3", R}}),
      make(doc, {{"1", S}, {"1", S}, {"1", R}, {"1", R}, {"2", S}, {"3", S}, {"2", R}, {"3", R}}),
  };
  for (const auto& t : good) {
    EXPECT_EQ(check_trace(doc, t).verdict, Verdict::conformant) << to_jsonl(t);
    EXPECT_EQ(oracle_check(doc, t), Verdict::conformant);
  }
  // B cannot answer before it has received.
  const auto bad = make(doc, {{"1", S}, {"2", S}, {"1", R}, {"2", R}, {"3", S}, {"3", R}});
  EXPECT_EQ(check_trace(doc, bad).verdict, Verdict::nonconformant);
  EXPECT_EQ(oracle_check(doc, bad), Verdict::nonconformant);
}

TEST(CheckTrace, PrefixMode) {
  const auto doc = protocol_investigation();
  auto t = canonical_investigation(doc);
  t.resize(9);
  EXPECT_EQ(check_trace(doc, t).verdict, Verdict::nonconformant);
  EXPECT_EQ(check_trace(doc, t, {true}).verdict, Verdict::conformant);
  EXPECT_EQ(check_trace(doc, {}, {true}).verdict, Verdict::conformant);
  std::swap(t[3], t[4]);
  EXPECT_EQ(check_trace(doc, t, {true}).verdict, Verdict::nonconformant);
}

TEST(CheckTrace, AliasNamesAreAccepted) {
  const auto c = compose_case();
  SimConfig config;
  config.seed = 3;
  auto run = simulate(c.composition, config);
  for (auto& e : run.trace) {
    if (e.from == "Defendant") e.from = "Suspect";
  }
  EXPECT_EQ(check_trace(c.composition, run.trace).verdict, Verdict::conformant);
}

TEST(CheckTrace, ProtocolMismatch) {
  const auto doc = protocol_investigation();
  auto t = canonical_investigation(doc);
  t[3].protocol = "trial";
  try {
    check_trace(doc, t);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ProtocolMismatch);
  }
}

TEST(Oracle, Examples) {
  const auto one = parse("protocol one { actors A, B; msg 1 A -> B: \"x\"; }");
  EXPECT_EQ(oracle_check(one, make(one, {{"1", S}, {"1", R}})), Verdict::conformant);
  const auto two = independent2();
  EXPECT_EQ(oracle_check(two, make(two, {{"1", S}, {"2", S}, {"2", R}, {"1", R}})),
            Verdict::conformant);
  EXPECT_EQ(oracle_check(two, make(two, {{"1", R}, {"1", S}, {"2", S}, {"2", R}})),
            Verdict::nonconformant);
}

TEST(Objectives, EventuallyWitnessIsFirstRecv) {
  const auto doc = protocol_init();
  const auto t = sequential(doc, {"0", "1", "6", "7", "8"});
  const auto r = check_objectives(doc, t);
  ASSERT_EQ(r.results.size(), 1u);
  EXPECT_TRUE(r.results[0].satisfied);
  EXPECT_EQ(r.results[0].witness, 9u);
}

TEST(Objectives, EmptyTraceViolatesEveryEventually) {
  for (const auto& name : builtin_names()) {
    const auto doc = builtin(name);
    for (const auto& res : check_objectives(doc, {}).results) {
      if (res.id == "fair_process") continue;  // not an eventually objective
      EXPECT_FALSE(res.satisfied) << name << " " << res.id;
      EXPECT_EQ(res.missing.size(), 1u);
    }
  }
}

TEST(Objectives, SentenceDelivered) {
  const auto doc = protocol_trial();
  const auto t = sequential(doc, {"1", "2a", "2b", "9a", "9b"});
  const auto r = check_objectives(doc, t);
  EXPECT_TRUE(r.all_satisfied());
  EXPECT_EQ(r.find("sentence_delivered")->witness, 9u);
}

TEST(Objectives, FairProcessNeedsAnswers) {
  const auto doc = protocol_trial();
  const auto answered = sequential(doc, {"1", "2a", "2b", "3", "4", "9a", "9b"});
  EXPECT_TRUE(check_objectives(doc, answered).find("fair_process")->satisfied);
  auto unanswered = make(doc, {{"1", S}, {"1", R}, {"2a", S}, {"2a", R}, {"2b", S}, {"2b", R},
                               {"3", S}, {"3", R}, {"9a", S}, {"9a", R}, {"9b", S}, {"9b", R}});
  const auto* fair = check_objectives(doc, unanswered).find("fair_process");
  EXPECT_FALSE(fair->satisfied);
  EXPECT_EQ(fair->missing, std::vector<std::string>{"4"});
}

TEST(Objectives, AndOrCombineWitnesses) {
  const auto doc = parse(R"(protocol ao {
  actors A, B;
  objective both: eventually(1) and eventually(2);
  objective either: eventually(2) or eventually(3);
  objective neither: eventually(3) or eventually(3);
  msg 1 A -> B: "x";
  msg 2 A -> B: "y";
  msg 3 A -> B: "z" [opt];
})");
  const auto r = check_objectives(doc, sequential(doc, {"1", "2"}));
  EXPECT_EQ(r.find("both")->witness, 3u);
  EXPECT_EQ(r.find("either")->witness, 3u);
  EXPECT_FALSE(r.find("neither")->satisfied);
  EXPECT_EQ(r.find("neither")->missing, std::vector<std::string>{"3"});
}

TEST(Reports, JsonRoundTrip) {
  const auto doc = protocol_investigation();
  auto t = canonical_investigation(doc);
  t.erase(t.begin() + 6, t.begin() + 8);
  const auto conf = check_trace(doc, t);
  ASSERT_FALSE(conf.violations.empty());
  const auto j = nlohmann::json::parse(to_json(conf).dump());
  EXPECT_EQ(conformance_report_from_json(j), conf);
  const auto obj = check_objectives(doc, t);
  EXPECT_EQ(objective_report_from_json(nlohmann::json::parse(to_json(obj).dump())), obj);
}

// Property: check_trace and the brute-force oracle agree.
TEST(Property, OracleEquivalence) {
  gen::Rng rng(2024);
  std::size_t conformant = 0, total = 0;
  for (int i = 0; i < 2000; ++i) {
    const auto doc = gen::document(rng);
    const auto t = gen::trace(rng, doc);
    const auto fast = check_trace(doc, t).verdict;
    const auto slow = oracle_check(doc, t);
    ASSERT_EQ(fast, slow) << serialize(doc) << to_jsonl(t);
    if (fast == Verdict::conformant) {
      ASSERT_EQ(check_trace(doc, t, {true}).verdict, Verdict::conformant);
    }
    conformant += fast == Verdict::conformant;
    ++total;
  }
  EXPECT_GT(conformant, total / 5);
  EXPECT_LT(conformant, total * 4 / 5);
}

// Property: a conformant prefix check accepts every prefix of a conformant
// trace.
TEST(Property, PrefixesOfConformantTraces) {
  gen::Rng rng(77);
  for (int i = 0; i < 300; ++i) {
    const auto doc = gen::document(rng);
    auto t = gen::valid_trace(rng, doc);
    while (!t.empty()) {
      ASSERT_EQ(check_trace(doc, t, {true}).verdict, Verdict::conformant) << serialize(doc);
      t.pop_back();
    }
  }
}

namespace {

// Lowest-instance-first linearization: every earlier instance completes
// before a later one starts.
Trace sequential_linearization(const MscDocument& doc, const FragmentExpansion& exp) {
  const auto instances = expand(doc, exp);
  Trace t;
  for (const auto& inst : instances) {
    t.push_back(gen::event(doc, *inst.spec, S, t.size()));
    t.push_back(gen::event(doc, *inst.spec, R, t.size()));
  }
  return t;
}

}  // namespace

// Property: filling in a skipped opt fragment at its charted position keeps
// a conformant trace conformant.
TEST(Property, OptionalMonotonicity) {
  gen::Rng rng(5);
  int checked = 0;
  for (int i = 0; i < 400; ++i) {
    const auto doc = gen::document(rng);
    const auto expansions = enumerate_expansions(doc, 2);
    const auto base = expansions[gen::below(rng, expansions.size())];
    for (std::size_t j = 0; j < base.size(); ++j) {
      // Top-level decisions are in item order; find opt fragments skipped here.
      std::size_t point = 0;
      const Fragment* frag = nullptr;
      for (const auto& item : doc.body) {
        const auto* f = std::get_if<Fragment>(&item.node);
        const auto* m = std::get_if<MessageSpec>(&item.node);
        if (!f && !(m && m->is_optional())) continue;
        if (point++ == j) frag = f;
      }
      if (!frag || frag->kind != FragmentKind::opt || base[j].count != 0) continue;
      const auto t = sequential_linearization(doc, base);
      ASSERT_EQ(check_trace(doc, t).verdict, Verdict::conformant);
      auto filled = base;
      filled[j] = Choice::take(uniform_expansion(frag->body, true, 1));
      const auto u = sequential_linearization(doc, filled);
      ASSERT_GT(u.size(), t.size());
      EXPECT_EQ(check_trace(doc, u).verdict, Verdict::conformant) << serialize(doc);
      ++checked;
    }
  }
  EXPECT_GT(checked, 20);
}

// Property: eventually/responds objectives ignore event order.
TEST(Property, ObjectivesArePermutationInvariant) {
  gen::Rng rng(99);
  gen::DocShape shape;
  shape.objectives = true;
  int checked = 0;
  for (int i = 0; i < 400; ++i) {
    auto doc = gen::document(rng, shape);
    std::erase_if(doc.objectives, [](const ObjectiveSpec& o) {
      return o.predicate.kind == Predicate::Kind::conformant;
    });
    const auto t = gen::trace(rng, doc);
    const auto before = check_objectives(doc, t);
    auto shuffled = t;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    EXPECT_EQ(check_objectives(doc, shuffled), before) << serialize(doc);
    ++checked;
  }
  EXPECT_EQ(checked, 400);
}

TEST(Property, ReportsAreDeterministic) {
  gen::Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    const auto doc = gen::document(rng);
    const auto t = gen::trace(rng, doc);
    EXPECT_EQ(to_json(check_trace(doc, t)).dump(), to_json(check_trace(doc, t)).dump());
  }
}
