#include <gtest/gtest.h>

#include "test_support.hpp"

namespace rdfviews {
namespace {

using testing::iri3;

class SchemaTest : public ::testing::Test {
 protected:
  SchemaTest() : ds_(load_dataset(testing::d1_terms())) {}
  RDFSchema schema(const std::vector<TermTriple>& terms) {
    return parse_schema(terms, ds_.dictionary, testing::short_vocabulary());
  }
  TermId id(const std::string& iri) { return ds_.dictionary.intern(Term::iri(iri)); }
  Dataset ds_;
};

TEST_F(SchemaTest, ParsesS1) {
  auto s = schema(testing::s1_terms());
  EXPECT_EQ(s.subclass.size(), 2u);
  EXPECT_EQ(s.subproperty.size(), 0u);
  EXPECT_EQ(s.domain.size(), 1u);
  EXPECT_EQ(s.range.size(), 1u);
  EXPECT_EQ(s.domain.at(4), 3u);
  EXPECT_EQ(s.range.at(4), 6u);
  EXPECT_EQ(s.type, 2u);
}

TEST_F(SchemaTest, EmptyAndIgnored) {
  EXPECT_TRUE(schema({}).empty());
  auto s = schema({iri3("a", "likes", "b"), iri3("Student", "subClassOf", "Person")});
  EXPECT_EQ(s.ignored, 1u);
  EXPECT_EQ(s.subclass.size(), 1u);
}

TEST_F(SchemaTest, MultiValuedDomainRejected) {
  auto terms = testing::s1_terms();
  terms.push_back(iri3("advisor", "domain", "Person"));
  try {
    schema(terms);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::multi_valued_schema);
    EXPECT_NE(std::string(e.what()).find("advisor"), std::string::npos);
  }
  auto repeated = testing::s1_terms();
  repeated.push_back(iri3("advisor", "domain", "Student"));
  EXPECT_NO_THROW(schema(repeated));
}

TEST_F(SchemaTest, ReservedVocabularyRejected) {
  try {
    schema({iri3("type", "subPropertyOf", "advisor")});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::reserved_vocabulary);
  }
}

TEST_F(SchemaTest, ClosureOfS1) {
  auto cl = compute_closure(schema(testing::s1_terms()));
  auto student = id("Student"), professor = id("Professor"), person = id("Person");
  std::set<std::pair<TermId, TermId>> expected{{student, student},     {professor, professor}, {person, person},
                                               {student, person},      {professor, person}};
  EXPECT_EQ(cl.subclass_pairs(), expected);
  EXPECT_TRUE(cl.subproperty_pairs().contains({4, 4}));
}

TEST_F(SchemaTest, ClosureChainAndCycle) {
  auto chain = compute_closure(schema({iri3("A", "subClassOf", "B"), iri3("B", "subClassOf", "C")}));
  EXPECT_TRUE(chain.subclass_pairs().contains({id("A"), id("C")}));
  auto cycle = compute_closure(schema({iri3("A", "subClassOf", "B"), iri3("B", "subClassOf", "A")}));
  EXPECT_TRUE(cycle.subclass_pairs().contains({id("A"), id("B")}));
  EXPECT_TRUE(cycle.subclass_pairs().contains({id("B"), id("A")}));
  auto props = compute_closure(schema({iri3("p", "subPropertyOf", "q"), iri3("q", "subPropertyOf", "r")}));
  EXPECT_TRUE(props.subproperty_pairs().contains({id("p"), id("r")}));
}

TEST_F(SchemaTest, ClosureAgreesWithWarshall) {
  std::mt19937_64 rng(23);
  for (int round = 0; round < 30; ++round) {
    std::vector<TermTriple> terms;
    std::vector<std::string> classes{"K0", "K1", "K2", "K3", "K4", "K5"};
    for (std::size_t i = testing::uniform(rng, 0, 10); i > 0; --i)
      terms.push_back(iri3(testing::pick(rng, classes), "subClassOf", testing::pick(rng, classes)));
    auto s = schema(terms);
    auto cl = compute_closure(s);
    std::set<TermId> mentioned;
    for (auto [a, b] : s.subclass) mentioned.insert({a, b});
    std::set<std::pair<TermId, TermId>> rel = s.subclass;
    for (auto m : mentioned) rel.insert({m, m});
    for (auto k : mentioned)
      for (auto i : mentioned)
        for (auto j : mentioned)
          if (rel.contains({i, k}) && rel.contains({k, j})) rel.insert({i, j});
    EXPECT_EQ(cl.subclass_pairs(), rel);
  }
}

class ReformulationTest : public SchemaTest {
 protected:
  UnionQuery reformulate(const std::string& text, const std::vector<TermTriple>& schema_terms,
                         std::size_t cap = kDefaultBranchCap) {
    auto s = schema(schema_terms);
    auto q = parse_sparql(text, 1, ds_.dictionary, "q");
    return reformulate_query(q, compute_closure(s), s, cap);
  }
};

TEST_F(ReformulationTest, PersonQueryHasFiveBranches) {
  auto u = reformulate("SELECT ?x WHERE { ?x <type> <Person> . }", testing::s1_terms());
  ASSERT_EQ(u.branches.size(), 5u);
  std::vector<std::string> texts;
  for (const auto& b : u.branches) texts.push_back(to_sparql(b.body, ds_.dictionary));
  EXPECT_EQ(texts, (std::vector<std::string>{"?x <type> <Person> . ", "?x <type> <Student> . ",
                                             "?x <type> <Professor> . ", "?x <advisor> ?_f1 . ",
                                             "?_f1 <advisor> ?x . "}));
  for (const auto& b : u.branches) EXPECT_EQ(b.head, (std::vector<std::string>{"x"}));
  EXPECT_EQ(u.branches[0].name, "q#1");
}

TEST_F(ReformulationTest, EmptySchemaIsIdentity) {
  auto u = reformulate(testing::kQ1, {});
  ASSERT_EQ(u.branches.size(), 1u);
  auto q = parse_sparql(testing::kQ1, 1, ds_.dictionary);
  EXPECT_EQ(canonical_form(u.branches[0].body, u.branches[0].head), canonical_form(q.body, q.head));
  EXPECT_EQ(u.branches[0].name, "q");
}

TEST_F(ReformulationTest, Q1UnderS1HasTwoBranches) {
  auto u = reformulate(testing::kQ1, testing::s1_terms());
  ASSERT_EQ(u.branches.size(), 2u);
  EXPECT_EQ(to_sparql(u.branches[0].body, ds_.dictionary), "?x <advisor> ?y . ?y <type> <Professor> . ");
  EXPECT_EQ(to_sparql(u.branches[1].body, ds_.dictionary), "?x <advisor> ?y . ?_f1 <advisor> ?y . ");
}

TEST_F(ReformulationTest, BranchCap) {
  try {
    reformulate("SELECT ?x WHERE { ?x <type> <Person> . ?x <type> <Person> . ?x <advisor> ?y . ?y <type> <Person> . }",
                testing::s1_terms(), 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::branch_cap_exceeded);
    EXPECT_NE(std::string(e.what()).find("25"), std::string::npos) << e.what();
  }
}

TEST_F(ReformulationTest, SubpropertyExpansion) {
  auto u = reformulate("SELECT ?x ?y WHERE { ?x <knows> ?y . }",
                       {iri3("advisor", "subPropertyOf", "knows"), iri3("mentor", "subPropertyOf", "advisor")});
  EXPECT_EQ(u.branches.size(), 3u);
}

TEST_F(ReformulationTest, BranchCountBoundedByProduct) {
  std::mt19937_64 rng(29);
  auto uni = testing::make_universe(6, 4, 3);
  for (int i = 0; i < 100; ++i) {
    auto schema_terms = testing::random_schema(rng, uni, testing::uniform(rng, 0, 10));
    auto s = schema(schema_terms);
    auto cl = compute_closure(s);
    auto q = parse_sparql(testing::random_sparql(rng, uni, 4), 1, ds_.dictionary, "q");
    std::size_t product = 1;
    for (const auto& a : q.body) product *= detail::expand_atom(a, cl, s).size();
    auto u = reformulate_query(q, cl, s, 1u << 20);
    EXPECT_LE(u.branches.size(), product);
    std::set<std::string> keys;
    for (const auto& b : u.branches) {
      EXPECT_TRUE(keys.insert(canonical_form(b.body, b.head)).second);
      EXPECT_EQ(b.head, q.head);
      EXPECT_NO_THROW(validate_query(b));
    }
  }
}

TEST_F(SchemaTest, SaturateD1S1) {
  auto s = schema(testing::s1_terms());
  auto sat = saturate(ds_.table, s);
  EXPECT_EQ(sat.size(), 10u);
  auto type = s.type;
  for (auto t : {Triple{id("a"), type, id("Person")}, Triple{id("b"), type, id("Person")},
                 Triple{id("c"), type, id("Student")}, Triple{id("c"), type, id("Person")}})
    EXPECT_TRUE(sat.contains(t));
}

TEST_F(SchemaTest, SaturateSingleTriple) {
  auto s = schema(testing::s1_terms());
  TripleTable one({Triple{id("a"), 4, id("b")}});
  auto sat = saturate(one, s);
  EXPECT_EQ(sat.size(), 5u);
  for (auto t : {Triple{id("a"), s.type, id("Student")}, Triple{id("b"), s.type, id("Professor")},
                 Triple{id("a"), s.type, id("Person")}, Triple{id("b"), s.type, id("Person")}})
    EXPECT_TRUE(sat.contains(t));
}

TEST_F(SchemaTest, SaturateEmptySchemaAndIdempotent) {
  auto empty = schema({});
  auto same = saturate(ds_.table, empty);
  EXPECT_TRUE(std::ranges::equal(same.triples(), ds_.table.triples()));
  std::mt19937_64 rng(31);
  auto uni = testing::make_universe(10, 4, 3);
  for (int i = 0; i < 30; ++i) {
    auto data = load_dataset(testing::random_data(rng, uni, 100), ds_.dictionary);
    auto s = parse_schema(testing::random_schema(rng, uni, 10), data.dictionary, testing::short_vocabulary());
    auto once = saturate(data.table, s);
    auto twice = saturate(once, s);
    EXPECT_EQ(once.size(), twice.size());
  }
}

TEST_F(ReformulationTest, EquivalentToSaturation) {
  std::mt19937_64 rng(37);
  auto uni = testing::make_universe(8, 4, 3);
  for (int i = 0; i < 60; ++i) {
    auto data = load_dataset(testing::random_data(rng, uni, testing::uniform(rng, 0, 120)));
    auto s = parse_schema(testing::random_schema(rng, uni, testing::uniform(rng, 0, 10)), data.dictionary,
                          testing::short_vocabulary());
    auto q = parse_sparql(testing::random_sparql(rng, uni, 3), 1, data.dictionary, "q");
    auto u = reformulate_query(q, compute_closure(s), s, 1u << 20);
    auto sat = saturate(data.table, s);
    EXPECT_EQ(testing::as_set(evaluate_union(u, data.table)), testing::naive_evaluate(q.body, q.head, sat))
        << to_sparql(q, data.dictionary);
  }
}

// view-state

class StateTest : public ::testing::Test {
 protected:
  testing::Fixture fx_ = testing::q1q2_fixture();
  State s0_ = fx_.initial();
};

TEST_F(StateTest, InitialStateSingleQuery) {
  auto f = testing::d1_fixture({{"q1", testing::kQ1, 1}});
  auto s = f.initial();
  ASSERT_EQ(s.views.size(), 1u);
  EXPECT_EQ(to_string(s.rewritings.at("q1")), "Project[x,y](Scan(v1[x,y]))");
  EXPECT_EQ(check_state(s), "");
}

TEST_F(StateTest, InitialStatePersonUnion) {
  auto f = testing::d1_fixture({{"qp", "SELECT ?x WHERE { ?x <type> <Person> . }", 1}}, true);
  auto s = f.initial();
  // {?x advisor ?_f1} and {?_f1 advisor ?x} are the same full-head view
  EXPECT_EQ(s.views.size(), 4u);
  const auto* u = std::get_if<UnionOp>(&s.rewritings.at("qp")->op);
  ASSERT_NE(u, nullptr);
  EXPECT_EQ(u->children.size(), 5u);
}

TEST_F(StateTest, InitialStateSharesIsomorphicBodies) {
  auto f = testing::d1_fixture({{"a", testing::kQ1, 1}, {"b", "SELECT ?u WHERE { ?v <type> <Professor> . ?u <advisor> ?v . }", 1}});
  auto s = f.initial();
  EXPECT_EQ(s.views.size(), 1u);
  EXPECT_EQ(s.rewritings.size(), 2u);
  EXPECT_EQ(to_string(s.rewritings.at("b")), "Project[u](Scan(v1[u,v]))");
  EXPECT_THROW(initial_state({}), Error);
}

TEST_F(StateTest, SelectionCut) {
  // v2 = {?x advisor b}
  auto s = selection_cut(s0_, 2, 0, Position::object);
  EXPECT_EQ(s.views.size(), 2u);
  EXPECT_FALSE(s.views.contains(2));
  const auto& nv = s.views.at(3);
  EXPECT_EQ(to_sparql(nv.body, fx_.data.dictionary), "?x <advisor> ?f . ");
  EXPECT_EQ(nv.head, (std::vector<std::string>{"x", "f"}));
  EXPECT_EQ(to_string(s.rewritings.at("q2"), &fx_.data.dictionary),
            "Project[x](Project[x](Select[f=<b>](Scan(v3[x,f]))))");
  EXPECT_EQ(check_state(s), "");
}

TEST_F(StateTest, SelectionCutErrors) {
  auto code = [&](auto fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::io;
  };
  EXPECT_EQ(code([&] { selection_cut(s0_, 2, 0, Position::subject); }), ErrorCode::invalid_site);
  EXPECT_EQ(code([&] { selection_cut(s0_, 2, 0, Position::property); }), ErrorCode::property_cut_disabled);
  EXPECT_EQ(code([&] { selection_cut(s0_, 9, 0, Position::object); }), ErrorCode::invalid_site);
  EXPECT_EQ(code([&] { selection_cut(s0_, 2, 3, Position::object); }), ErrorCode::invalid_site);
  auto s = selection_cut(s0_, 2, 0, Position::property, {true});
  EXPECT_EQ(to_sparql(s.views.at(3).body, fx_.data.dictionary), "?x ?f <b> . ");
}

TEST_F(StateTest, SelectionCutPatchesEveryRewriting) {
  auto f = testing::d1_fixture({{"a", testing::kQ2, 1}, {"b", "SELECT ?z WHERE { ?z <advisor> <b> . }", 1}});
  auto s = f.initial();
  ASSERT_EQ(s.views.size(), 1u);
  auto cut = selection_cut(s, 1, 0, Position::object);
  EXPECT_EQ(to_string(cut.rewritings.at("a")), "Project[x](Project[x](Select[f=#5](Scan(v2[x,f]))))");
  EXPECT_EQ(to_string(cut.rewritings.at("b")), "Project[z](Project[z](Select[f=#5](Scan(v2[z,f]))))");
}

TEST_F(StateTest, JoinCut) {
  auto s = join_cut(s0_, 1, "y");
  EXPECT_EQ(s.views.size(), 3u);
  EXPECT_EQ(to_sparql(s.views.at(3).body, fx_.data.dictionary), "?x <advisor> ?y_1 . ");
  EXPECT_EQ(s.views.at(3).head, (std::vector<std::string>{"x", "y_1"}));
  EXPECT_EQ(to_sparql(s.views.at(4).body, fx_.data.dictionary), "?y_2 <type> <Professor> . ");
  EXPECT_EQ(to_string(s.rewritings.at("q1")),
            "Project[x,y](Project[x,y](Join[y=y_1](Scan(v3[x,y]), Scan(v4[y_1]))))");
  EXPECT_EQ(check_state(s), "");
}

TEST_F(StateTest, JoinCutNotApplicable) {
  auto code = [&](const State& s, ViewId v, const std::string& var) {
    try {
      join_cut(s, v, var);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::io;
  };
  EXPECT_EQ(code(s0_, 1, "x"), ErrorCode::not_applicable);
  auto tri = testing::d1_fixture(
      {{"t", "SELECT ?x WHERE { ?x <advisor> ?y . ?y <advisor> ?z . ?z <advisor> ?x . ?x <name> ?y . ?y <name> ?z . ?z <name> ?x . }", 1}});
  auto s = tri.initial();
  for (const auto& var : {"x", "y", "z"}) EXPECT_EQ(code(s, 1, var), ErrorCode::not_applicable);
}

TEST_F(StateTest, JoinCutThreeWay) {
  auto f = testing::d1_fixture(
      {{"star", "SELECT ?x WHERE { ?x <advisor> ?a . ?x <name> ?n . ?x <type> <Student> . }", 1}});
  auto s = join_cut(f.initial(), 1, "x");
  EXPECT_EQ(s.views.size(), 3u);
  EXPECT_EQ(to_string(s.rewritings.at("star")),
            "Project[x](Project[x,a,n](Join[x=x_2](Join[x=x_1](Scan(v2[x,a]), Scan(v3[x_1,n])), Scan(v4[x_2]))))");
  EXPECT_EQ(check_state(s), "");
}

TEST_F(StateTest, ViewFusion) {
  auto s = selection_cut(s0_, 2, 0, Position::object);  // v3 = {?x advisor ?f}
  s = join_cut(s, 1, "y");                              // v4 = {?x advisor ?y_1}, v5 = {?y_2 type Professor}
  ASSERT_EQ(s.views.at(3).key, s.views.at(4).key);
  auto fused = view_fusion(s, 3, 4);
  EXPECT_EQ(fused.views.size(), s.views.size() - 1);
  EXPECT_EQ(referenced_views(fused.rewritings.at("q1")), (std::set<ViewId>{3, 5}));
  EXPECT_EQ(referenced_views(fused.rewritings.at("q2")), (std::set<ViewId>{3}));
  EXPECT_EQ(check_state(fused), "");
  EXPECT_THROW(view_fusion(s, 3, 3), Error);
  try {
    view_fusion(s, 3, 5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::not_isomorphic);
  }
}

TEST_F(StateTest, EnumerateTransitions) {
  auto f = testing::d1_fixture({{"q1", testing::kQ1, 1}});
  auto ts = enumerate_transitions(f.initial());
  ASSERT_EQ(ts.size(), 2u);
  EXPECT_EQ(ts[0].kind, TransitionKind::selection_cut);
  EXPECT_EQ(ts[0].atom, 1u);
  EXPECT_EQ(ts[0].position, Position::object);
  EXPECT_EQ(ts[1].kind, TransitionKind::join_cut);
  EXPECT_EQ(ts[1].variable, "y");

  auto free = testing::d1_fixture({{"a", "SELECT ?x WHERE { ?x <advisor> ?y . }", 1},
                                   {"b", "SELECT ?x WHERE { ?x <name> ?y . }", 1}});
  EXPECT_TRUE(enumerate_transitions(free.initial()).empty());

  auto s = join_cut(selection_cut(s0_, 2, 0, Position::object), 1, "y");
  auto vf = enumerate_transitions(s);
  EXPECT_EQ(std::count_if(vf.begin(), vf.end(), [](const auto& t) { return t.kind == TransitionKind::view_fusion; }),
            1);
}

TEST_F(StateTest, SignatureCommutes) {
  auto a = join_cut(selection_cut(s0_, 2, 0, Position::object), 1, "y");
  auto b = selection_cut(join_cut(s0_, 1, "y"), 2, 0, Position::object);
  EXPECT_EQ(state_signature(a), state_signature(b));
  auto renamed = testing::d1_fixture({{"q1", "SELECT ?u ?w WHERE { ?u <advisor> ?w . ?w <type> <Professor> . }", 1},
                                      {"q2", "SELECT ?z WHERE { ?z <advisor> <b> . }", 2}});
  EXPECT_EQ(state_signature(renamed.initial()), state_signature(s0_));
  auto other = testing::d1_fixture({{"q1", testing::kQ1, 1}, {"q2", "SELECT ?x WHERE { ?x <advisor> <c> . }", 2}});
  EXPECT_NE(state_signature(other.initial()), state_signature(s0_));
}

TEST_F(StateTest, TerminalStates) {
  auto free = testing::d1_fixture({{"a", "SELECT ?x WHERE { ?x <advisor> ?y . }", 1},
                                   {"b", "SELECT ?u WHERE { ?u <type> ?v . }", 1}});
  EXPECT_TRUE(is_terminal(free.initial()));
  auto q1 = testing::d1_fixture({{"q1", testing::kQ1, 1}});
  EXPECT_FALSE(is_terminal(q1.initial()));
  auto s = join_cut(selection_cut(s0_, 2, 0, Position::object), 1, "y");
  s = selection_cut(s, 5, 0, Position::object);
  // three views, two of them isomorphic (?x advisor ?f / ?x advisor ?y_1)
  EXPECT_FALSE(is_terminal(s));
}

TEST_F(StateTest, TransitionsPreserveStructure) {
  std::vector<State> frontier{s0_};
  std::set<std::string> seen;
  for (std::size_t i = 0; i < frontier.size(); ++i) {
    const State s = frontier[i];
    ASSERT_EQ(check_state(s), "");
    for (const auto& t : enumerate_transitions(s)) {
      auto next = apply_transition(s, t);
      if (t.kind == TransitionKind::view_fusion) EXPECT_EQ(next.views.size() + 1, s.views.size());
      if (seen.insert(state_signature(next)).second) frontier.push_back(next);
    }
  }
  EXPECT_GT(frontier.size(), 5u);
}

}  // namespace
}  // namespace rdfviews
