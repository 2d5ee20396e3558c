#include <gtest/gtest.h>

#include "dfci/dfci.hpp"
#include "gen.hpp"

using namespace dfci;

namespace {

SimConfig with_fault(std::uint64_t seed, const std::string& spec) {
  SimConfig c;
  c.seed = seed;
  c.faults = {parse_fault(spec)};
  return c;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::Format;
}

// Random but in-bounds choices for every choice point of doc.
SimConfig random_config(gen::Rng& rng, const MscDocument& doc) {
  SimConfig c;
  c.seed = rng();
  for (const auto& cp : choice_points(doc)) {
    if (cp.kind == ChoiceKind::loop) {
      const std::size_t lo = cp.fragment->min_iter;
      const std::size_t hi = std::min(cp.fragment->max_iter, kMaxSimLoopIterations);
      c.loop_iterations[cp.index] = lo + gen::below(rng, hi - lo + 1);
    } else {
      c.opt_policy[cp.index] = static_cast<OptPolicy>(gen::below(rng, 3));
    }
  }
  return c;
}

}  // namespace

TEST(Rational, Parsing) {
  EXPECT_EQ(parse_rational("1/2"), (Rational{1, 2}));
  EXPECT_EQ(parse_rational("0.25"), (Rational{25, 100}));
  EXPECT_EQ(parse_rational("1"), (Rational{1, 1}));
  EXPECT_FALSE(parse_rational("2/0"));
  EXPECT_FALSE(parse_rational("x"));
  EXPECT_FALSE(parse_rational("1.5")->valid());
  EXPECT_FALSE(parse_rational("2.5"));
}

TEST(Fault, Parsing) {
  const auto f = parse_fault("delay:msg=9b,p=1/3");
  EXPECT_EQ(f.kind, FaultKind::delay);
  EXPECT_EQ(f.target, "9b");
  EXPECT_EQ(f.probability, (Rational{1, 3}));
  EXPECT_EQ(parse_fault("drop:msg=4").probability, (Rational{1, 1}));
  EXPECT_EQ(kind_of([] { parse_fault("smash:msg=4"); }), ErrorKind::ConfigOutOfBounds);
  EXPECT_EQ(kind_of([] { parse_fault("drop:p=1"); }), ErrorKind::ConfigOutOfBounds);
  EXPECT_EQ(kind_of([] { parse_fault("drop:msg=4,p=3/2"); }), ErrorKind::ConfigOutOfBounds);
}

TEST(Config, OutOfBoundsIsRejected) {
  const auto inv = protocol_investigation();
  SimConfig c;
  c.loop_iterations[0] = 4;
  EXPECT_EQ(kind_of([&] { simulate(inv, c); }), ErrorKind::ConfigOutOfBounds);
  c = {};
  c.loop_iterations[1] = 1;  // choice point 1 is optional message 6
  EXPECT_EQ(kind_of([&] { simulate(inv, c); }), ErrorKind::ConfigOutOfBounds);
  c = {};
  c.opt_policy[0] = OptPolicy::skip;
  EXPECT_EQ(kind_of([&] { simulate(inv, c); }), ErrorKind::ConfigOutOfBounds);
  c = {};
  c.default_loop_iterations = 0;
  EXPECT_EQ(kind_of([&] { simulate(inv, c); }), ErrorKind::ConfigOutOfBounds);
  EXPECT_EQ(kind_of([&] { simulate(inv, with_fault(1, "drop:msg=11")); }),
            ErrorKind::ConfigOutOfBounds);
}

TEST(Simulate, SchedulingAndTimestamps) {
  const auto run = simulate(protocol_init(), SimConfig{});
  ASSERT_EQ(run.trace.size(), 10u);
  EXPECT_FALSE(run.chain.has_value());
  for (std::size_t i = 0; i < run.trace.size(); ++i) {
    EXPECT_EQ(run.trace[i].seq, i);
    EXPECT_EQ(run.trace[i].ts, detail::event_ts(i));
  }
  EXPECT_EQ(run.trace[0].ts, "2025-01-01T00:00:00Z");
  EXPECT_EQ(run.trace[0].msg_id, "0");
  EXPECT_EQ(run.trace[0].payload_digest, sha256_hex("init\n0\n0\nnotitia criminis"));
  EXPECT_EQ(run.trace[0].payload_digest, run.trace[1].payload_digest);
}

TEST(Simulate, LoopCountsAndOptPolicy) {
  const auto inv = protocol_investigation();
  SimConfig c;
  c.loop_iterations[0] = 3;
  c.opt_policy[1] = OptPolicy::skip;
  const auto run = simulate(inv, c);
  EXPECT_EQ(run.trace.size(), 2u * 13);
  EXPECT_EQ(check_trace(inv, run.trace).verdict, Verdict::conformant);
  ASSERT_TRUE(run.chain.has_value());
  EXPECT_EQ(run.chain->entries.size(), 4u);  // no seal without message 6
}

TEST(Simulate, InvestigationLedger) {
  const auto run = simulate(protocol_investigation(), SimConfig{});
  ASSERT_TRUE(run.chain.has_value());
  std::vector<CustodyAction> actions;
  for (const auto& e : run.chain->entries) actions.push_back(e.action);
  using A = CustodyAction;
  EXPECT_EQ(actions, (std::vector<A>{A::seize, A::seal, A::transfer, A::examine, A::transfer}));
  EXPECT_EQ(run.chain->entries.back().evidence_id, "report-01");
  EXPECT_EQ(run.chain->entries.front().evidence_id, "devices-01");
  EXPECT_TRUE(verify_chain(*run.chain).valid);
}

TEST(Fault, DropTen) {
  const auto inv = protocol_investigation();
  const auto run = simulate(inv, with_fault(7, "drop:msg=10"));
  EXPECT_EQ(run.trace.size(), 18u);
  const auto report = check_trace(inv, run.trace);
  ASSERT_FALSE(report.violations.empty());
  EXPECT_EQ(report.violations[0].kind, ViolationKind::MissingMessage);
  EXPECT_EQ(report.violations[0].msg_id, "10");
  EXPECT_FALSE(check_objectives(inv, run.trace).all_satisfied());
}

TEST(Fault, TamperTenKeepsChainButFailsDigest) {
  const auto inv = protocol_investigation();
  const auto run = simulate(inv, with_fault(7, "tamper:msg=10"));
  EXPECT_EQ(check_trace(inv, run.trace).verdict, Verdict::conformant);
  ASSERT_TRUE(run.chain.has_value());
  EXPECT_TRUE(verify_chain(*run.chain).valid);
  const auto findings = digest_cross_check(inv, run.trace, run.chain);
  ASSERT_FALSE(findings.empty());
  EXPECT_EQ(findings[0].msg_id, "10");
}

TEST(Fault, DuplicateAndDelay) {
  const auto inv = protocol_investigation();
  const auto dup = simulate(inv, with_fault(7, "duplicate:msg=3"));
  EXPECT_EQ(dup.trace.size(), 21u);
  EXPECT_EQ(check_trace(inv, dup.trace).verdict, Verdict::nonconformant);
  const auto late = simulate(inv, with_fault(7, "delay:msg=3"));
  EXPECT_EQ(late.trace.size(), 20u);
  EXPECT_EQ(check_trace(inv, late.trace).verdict, Verdict::nonconformant);
}

TEST(Fault, LedgerTamperBreaksChain) {
  const auto run = simulate(protocol_investigation(), with_fault(7, "ledger_tamper:msg=7"));
  ASSERT_TRUE(run.chain.has_value());
  const auto v = verify_chain(*run.chain);
  EXPECT_FALSE(v.valid);
  EXPECT_EQ(v.failing_index, 2u);
}

TEST(Fault, ZeroProbabilityIsANoOp) {
  const auto inv = protocol_investigation();
  SimConfig c = with_fault(3, "drop:msg=5,p=0");
  SimConfig clean;
  clean.seed = 3;
  EXPECT_EQ(to_jsonl(simulate(inv, c).trace), to_jsonl(simulate(inv, clean).trace));
}

TEST(Adversary, MatrixShape) {
  const auto report = adversary_matrix(protocol_trial(), {FaultKind::drop, FaultKind::tamper}, {1, 2});
  EXPECT_EQ(report.rows.size(), 11u * 2 * 2);
  for (const auto& r : report.rows) {
    if (r.kind == FaultKind::tamper) {
      EXPECT_TRUE(r.digest) << r.msg_id;
    }
  }
  EXPECT_NE(format_table(report).find("conformance"), std::string::npos);
}

// Property: identical (doc, config) gives byte-identical output.
TEST(Property, Determinism) {
  gen::Rng rng(5);
  for (const auto& name : builtin_names()) {
    const auto doc = builtin(name);
    for (int i = 0; i < 10; ++i) {
      SimConfig c = random_config(rng, doc);
      c.faults = {FaultRule{messages(doc)[gen::below(rng, messages(doc).size())]->msg_id,
                            static_cast<FaultKind>(gen::below(rng, 5)), {1, 2}}};
      const auto a = simulate(doc, c), b = simulate(doc, c);
      ASSERT_EQ(to_jsonl(a.trace), to_jsonl(b.trace));
      ASSERT_EQ(a.chain.has_value(), b.chain.has_value());
      if (a.chain) {
        ASSERT_EQ(ledger_text(*a.chain), ledger_text(*b.chain));
      }
    }
  }
}

// Property: a fault-free run always conforms, and its ledger verifies and
// covers the custody span.
TEST(Property, ZeroFaultSoundness) {
  gen::Rng rng(17);
  for (const auto& name : builtin_names()) {
    const auto doc = builtin(name);
    for (int i = 0; i < 100; ++i) {
      const auto run = simulate(doc, random_config(rng, doc));
      ASSERT_EQ(check_trace(doc, run.trace).verdict, Verdict::conformant) << name;
      ASSERT_TRUE(digest_cross_check(doc, run.trace, run.chain).empty()) << name;
      if (doc.custody_span) {
        ASSERT_TRUE(run.chain.has_value());
        ASSERT_TRUE(verify_chain(*run.chain).valid);
        ASSERT_TRUE(check_custody_coverage(doc, run.trace, *run.chain).covered) << name;
      }
    }
  }
  gen::DocShape shape;
  shape.objectives = true;
  for (int i = 0; i < 300; ++i) {
    const auto doc = gen::document(rng, shape);
    const auto run = simulate(doc, random_config(rng, doc));
    ASSERT_EQ(check_trace(doc, run.trace).verdict, Verdict::conformant) << serialize(doc);
    if (run.trace.size() <= 12) {
      ASSERT_EQ(oracle_check(doc, run.trace), Verdict::conformant) << serialize(doc);
    }
  }
}

// Property: dropping any message that every run must contain is caught by
// the conformance checker.
TEST(Property, DropDetectability) {
  for (const auto& name : builtin_names()) {
    const auto doc = builtin(name);
    const detail::ChartIndex index(doc);
    for (const auto* m : index.always_required) {
      for (std::uint64_t seed : {1, 2, 3}) {
        const auto run = simulate(doc, with_fault(seed, "drop:msg=" + m->msg_id));
        ASSERT_EQ(check_trace(doc, run.trace).verdict, Verdict::nonconformant)
            << name << " " << m->msg_id;
      }
    }
  }
}
