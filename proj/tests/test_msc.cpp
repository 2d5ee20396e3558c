#include <gtest/gtest.h>

#include <set>

#include "dfci/dfci.hpp"
#include "gen.hpp"

using namespace dfci;

namespace {

MscDocument independent(std::size_t k) {
  MscDocument doc;
  doc.name = "indep";
  for (std::size_t i = 0; i < 2 * k; ++i) {
    const std::string id = "L" + std::to_string(i);
    doc.lifelines.push_back({id, id, ""});
  }
  for (std::size_t i = 0; i < k; ++i) {
    doc.body.push_back({MessageSpec{std::to_string(i + 1), "L" + std::to_string(2 * i),
                                    "L" + std::to_string(2 * i + 1), "m", Modality::mandatory,
                                    std::nullopt, std::nullopt}});
  }
  return doc;
}

MscDocument two_party() {
  return parse(R"(protocol pp {
  actors A, B;
  msg 1 A -> B: "ping";
  msg 2 B -> A: "pong";
})");
}

std::size_t factorial(std::size_t n) { return n <= 1 ? 1 : n * factorial(n - 1); }

}  // namespace

TEST(Validate, BuiltinsHaveNoIssues) {
  for (const auto& name : builtin_names()) {
    EXPECT_TRUE(validate_document(builtin(name)).empty()) << name;
  }
}

TEST(Validate, ReportsEveryBrokenInvariant) {
  MscDocument doc;
  doc.name = "bad";
  doc.lifelines = {{"A", "A", ""}, {"A", "A", ""}, {"B", "B", ""}};
  doc.aliases = {{"C", "Nobody"}};
  doc.body = {
      {MessageSpec{"1", "A", "A", "self", Modality::mandatory, {}, {}}},
      {MessageSpec{"1", "A", "B", "dup", Modality::mandatory, {}, {}}},
      {MessageSpec{"2", "A", "Z", "ghost", Modality::mandatory, {}, {}}},
      make_loop({}, 1, 1),
      make_loop({{MessageSpec{"3", "A", "B", "x", Modality::mandatory, {}, {}}}}, 3, 2),
      {Scene{""}},
  };
  doc.objectives = {{"o", "", Predicate::eventually("99")}};
  doc.custody_span = CustodySpan{"3", "1"};
  std::set<IssueKind> kinds;
  for (const auto& i : validate_document(doc)) kinds.insert(i.kind);
  for (auto k : {IssueKind::DuplicateLifeline, IssueKind::UnresolvedReference, IssueKind::SelfMessage,
                 IssueKind::DuplicateMessageId, IssueKind::EmptyFragment, IssueKind::InvalidBounds,
                 IssueKind::EmptyScene, IssueKind::CustodyOrder}) {
    EXPECT_TRUE(kinds.count(k)) << to_string(k);
  }
}

TEST(Validate, SelfMessageThroughAlias) {
  MscDocument doc = two_party();
  doc.aliases = {{"Alpha", "A"}};
  std::get<MessageSpec>(doc.body[0].node).to = "Alpha";
  const auto issues = validate_document(doc);
  ASSERT_EQ(issues.size(), 1u);
  EXPECT_EQ(issues[0].kind, IssueKind::SelfMessage);
}

TEST(Compile, PingPongChainsLifelines) {
  const auto g = compile(two_party());
  ASSERT_EQ(g.events.size(), 4u);
  const auto s1 = g.find("1", EventKind::send), r1 = g.find("1", EventKind::recv);
  const auto s2 = g.find("2", EventKind::send), r2 = g.find("2", EventKind::recv);
  EXPECT_TRUE(g.precedes(s1, r1));
  EXPECT_TRUE(g.precedes(r1, s2));  // B receives before answering
  EXPECT_TRUE(g.precedes(s1, r2));  // transitively
  EXPECT_FALSE(g.precedes(r2, s1));
}

TEST(Compile, InvalidDocumentThrows) {
  MscDocument doc = two_party();
  std::get<MessageSpec>(doc.body[0].node).to = "Nobody";
  EXPECT_THROW(compile(doc), Error);
}

TEST(Compile, ContextTagsChoicePoints) {
  const auto g = compile(protocol_trial());
  const auto e = g.find("3", EventKind::send);
  ASSERT_EQ(g.context[e].size(), 2u);
  EXPECT_EQ(g.context[e][0].kind, ChoiceKind::loop);
  EXPECT_EQ(g.context[e][1].kind, ChoiceKind::opt);
  EXPECT_TRUE(g.context[g.find("1", EventKind::send)].empty());
}

TEST(Compile, AliasesResolveToCanonicalLifeline) {
  const auto g = compile(compose_case().composition);
  EXPECT_EQ(g.events[g.find("trial.2b", EventKind::send)].lifeline, "Suspect");
  // The suspect's investigation events precede the defendant's trial events.
  EXPECT_TRUE(g.precedes(g.find("investigation.7", EventKind::send),
                         g.find("trial.2b", EventKind::send)));
}

TEST(Expand, OutOfBoundsDecisionsThrow) {
  const auto doc = protocol_investigation();
  // loop(1..*) with zero iterations
  EXPECT_THROW(expand(doc, {Choice::repeat({}), Choice::take()}), Error);
  // missing decision for optional message 6
  EXPECT_THROW(expand(doc, {Choice::repeat({{}})}), Error);
  EXPECT_EQ(expand(doc, {Choice::repeat({{}, {}}), Choice::skip()}).size(), 11u);
}

TEST(Expand, UniformExpansionClampsToBounds) {
  const auto doc = parse(R"(protocol u {
  actors A, B;
  loop (2..3) {
    msg 1 A -> B: "x";
  }
})");
  EXPECT_EQ(expand(doc, uniform_expansion(doc, true, 1)).size(), 2u);
  EXPECT_EQ(expand(doc, uniform_expansion(doc, true, 9)).size(), 3u);
}

TEST(Linearize, IndependentMessagesMatchClosedForm) {
  // (2k)! / 2^k, confirmed by enumeration.
  for (std::size_t k = 1; k <= 4; ++k) {
    const auto doc = independent(k);
    const auto all = linearizations(compile(doc), {}, 1'000'000);
    EXPECT_EQ(all.size(), factorial(2 * k) >> k) << "k=" << k;
    std::set<std::vector<std::pair<std::string, EventKind>>> distinct;
    for (const auto& order : all) {
      std::vector<std::pair<std::string, EventKind>> labels;
      for (const auto& e : order) labels.emplace_back(e.msg_id, e.kind);
      distinct.insert(labels);
    }
    EXPECT_EQ(distinct.size(), all.size());
  }
}

TEST(Linearize, PingPongHasOneOrder) {
  EXPECT_EQ(linearizations(compile(two_party()), {}, 10).size(), 1u);
}

TEST(Linearize, CapAndSizeLimits) {
  EXPECT_THROW(linearizations(compile(independent(3)), {}, 89), Error);
  MscDocument big = independent(13);  // 26 events
  try {
    linearizations(compile(big), {}, 10);
    FAIL() << "expected ExpansionOutOfBounds";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ExpansionOutOfBounds);
  }
}

TEST(ChoicePoints, PreorderNumbering) {
  const auto points = choice_points(protocol_trial());
  ASSERT_EQ(points.size(), 4u);
  EXPECT_EQ(points[0].kind, ChoiceKind::loop);
  EXPECT_EQ(points[1].kind, ChoiceKind::opt);
  EXPECT_EQ(points[1].depth, 1u);
  const auto inv = choice_points(protocol_investigation());
  ASSERT_EQ(inv.size(), 2u);
  EXPECT_EQ(inv[1].kind, ChoiceKind::optional_message);
  EXPECT_EQ(inv[1].message->msg_id, "6");
}

TEST(Scenes, AnnotatedFromClosestPrecedingMarker) {
  const auto doc = protocol_investigation();
  EXPECT_FALSE(find_message(doc, "7")->scene.has_value());
  EXPECT_EQ(find_message(doc, "8")->scene, "Digital Forensics Laboratory");
  EXPECT_EQ(find_message(protocol_trial(), "9b")->scene, "court");
}

// Property: every compiled graph is acyclic and orders each send before its
// receive.
TEST(Property, GraphsAreAcyclicWithSendBeforeRecv) {
  gen::Rng rng(101);
  for (int i = 0; i < 300; ++i) {
    const auto doc = gen::document(rng);
    for (const auto& exp : enumerate_expansions(doc, 2)) {
      const auto g = expand_graph(compile(doc), exp);
      EXPECT_EQ(g.topological_order().size(), g.events.size());
      for (std::size_t a = 0; a < g.events.size(); ++a) {
        EXPECT_FALSE(g.precedes(a, a));
        for (std::size_t b = 0; b < g.events.size(); ++b) {
          if (g.events[a].instance == g.events[b].instance && g.events[a].kind == EventKind::send &&
              g.events[b].kind == EventKind::recv) {
            EXPECT_TRUE(g.precedes(a, b));
          }
        }
      }
      for (auto [a, b] : g.edges) EXPECT_TRUE(g.precedes(a, b));
    }
  }
}
