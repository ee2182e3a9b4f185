#include <gtest/gtest.h>

#include "test_support.hpp"

namespace rdfviews {
namespace {

using testing::d1_terms;
using testing::iri3;

TEST(ParseNTriples, EmptyInput) { EXPECT_TRUE(parse_ntriples("").empty()); }

TEST(ParseNTriples, SingleTriple) {
  auto t = parse_ntriples("<a> <type> <Student> .");
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0], iri3("a", "type", "Student"));
}

TEST(ParseNTriples, MalformedLineReportsLine) {
  try {
    parse_ntriples("<a> <name> \"alice\" .\nx y");
    FAIL() << "expected a syntax error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::syntax);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(ParseNTriples, BlankNodeRejectedWithLine) {
  try {
    parse_ntriples("# header\n\n_:b1 <p> <o> .\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::blank_node);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(ParseNTriples, CommentsEscapesAndLiterals) {
  auto t = parse_ntriples("# c\n<s> <p> \"a \\\"q\\\"\\n\" . # trailing\n<s> <p> \"\" .\n");
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t[0][2], Term::literal("a \"q\"\n"));
  EXPECT_EQ(t[1][2], Term::literal(""));
  EXPECT_THROW(parse_ntriples("<s> <p> \"x\"@en ."), Error);
  EXPECT_THROW(parse_ntriples("<s> \"p\" <o> ."), Error);
  EXPECT_THROW(parse_ntriples("<s> <p> <o>"), Error);
}

TEST(ParseNTriples, PrintedTermsReparse) {
  auto terms = d1_terms();
  terms.push_back({Term::iri("s"), Term::iri("p"), Term::literal("tab\there \"quoted\" back\\slash")});
  std::string text;
  for (const auto& [s, p, o] : terms) text += to_ntriples(s) + " " + to_ntriples(p) + " " + to_ntriples(o) + " .\n";
  EXPECT_EQ(parse_ntriples(text), terms);
}

TEST(LoadDataset, DictionaryIdsFirstSeen) {
  auto terms = d1_terms();
  auto ds = load_dataset(terms);
  const std::vector<Term> expected{Term::iri("a"),     Term::iri("type"),         Term::iri("Student"),
                                   Term::iri("advisor"), Term::iri("b"),          Term::iri("Professor"),
                                   Term::iri("name"),  Term::literal("alice"),    Term::literal("bob"),
                                   Term::iri("c")};
  ASSERT_EQ(ds.dictionary.size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_EQ(ds.dictionary.find(expected[i]), TermId(i + 1));
    EXPECT_EQ(ds.dictionary.term(TermId(i + 1)), expected[i]);
  }
}

TEST(LoadDataset, Statistics) {
  auto terms = d1_terms();
  auto ds = load_dataset(terms);
  EXPECT_EQ(ds.stats.total, 6u);
  auto adv = ds.stats.property(4);
  EXPECT_EQ(adv.count, 2u);
  EXPECT_EQ(adv.distinct_subjects, 2u);
  EXPECT_EQ(adv.distinct_objects, 1u);
  auto type = ds.stats.property(2);
  EXPECT_EQ(type.count, 2u);
  EXPECT_EQ(type.distinct_subjects, 2u);
  EXPECT_EQ(type.distinct_objects, 2u);
}

TEST(LoadDataset, DuplicatesCollapse) {
  auto once = d1_terms();
  auto twice = once;
  twice.insert(twice.end(), once.begin(), once.end());
  auto a = load_dataset(once);
  auto b = load_dataset(twice);
  EXPECT_EQ(b.table.size(), 6u);
  EXPECT_TRUE(std::equal(a.table.triples().begin(), a.table.triples().end(), b.table.triples().begin(),
                         b.table.triples().end()));
  EXPECT_EQ(a.stats, b.stats);
}

TEST(LoadDataset, EmptyInput) {
  auto ds = load_dataset(std::vector<TermTriple>{});
  EXPECT_EQ(ds.stats.total, 0u);
  EXPECT_TRUE(ds.table.empty());
}

TEST(LookupAtom, Examples) {
  auto terms = d1_terms();
  auto ds = load_dataset(terms);
  EXPECT_EQ(lookup_atom(ds.table, {std::nullopt, 4, std::nullopt}).size(), 2u);
  auto r = lookup_atom(ds.table, {std::nullopt, 4, 5});
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0], (Triple{1, 4, 5}));
  EXPECT_EQ(r[1], (Triple{10, 4, 5}));
  EXPECT_TRUE(lookup_atom(ds.table, {10, 7, std::nullopt}).empty());
  EXPECT_TRUE(lookup_atom(ds.table, {std::nullopt, 99, std::nullopt}).empty());
  EXPECT_EQ(lookup_atom(ds.table, {std::nullopt, std::nullopt, std::nullopt}).size(), ds.stats.total);
}

TEST(LookupAtom, AgreesWithFilteredScan) {
  std::mt19937_64 rng(7);
  auto u = testing::make_universe(8, 2, 3);
  auto terms = testing::random_data(rng, u, 120);
  auto ds = load_dataset(terms);
  for (TermId s = 0; s <= ds.dictionary.size(); s += 3)
    for (TermId p = 0; p <= ds.dictionary.size(); ++p)
      for (TermId o = 0; o <= ds.dictionary.size(); o += 2) {
        AtomPattern pat{s ? std::optional<TermId>(s) : std::nullopt, p ? std::optional<TermId>(p) : std::nullopt,
                        o ? std::optional<TermId>(o) : std::nullopt};
        std::vector<Triple> expected;
        for (const auto& t : ds.table.triples())
          if ((!pat[0] || *pat[0] == t.s) && (!pat[1] || *pat[1] == t.p) && (!pat[2] || *pat[2] == t.o))
            expected.push_back(t);
        ASSERT_EQ(lookup_atom(ds.table, pat), expected);
      }
}

TEST(DecodeRow, Examples) {
  auto terms = d1_terms();
  auto ds = load_dataset(terms);
  EXPECT_TRUE(decode_row(ds.dictionary, std::vector<TermId>{}).empty());
  EXPECT_EQ(decode_row(ds.dictionary, std::vector<TermId>{1, 5}),
            (std::vector<Term>{Term::iri("a"), Term::iri("b")}));
  try {
    decode_row(ds.dictionary, std::vector<TermId>{99});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::unknown_id);
    EXPECT_NE(std::string(e.what()).find("99"), std::string::npos);
  }
}

TEST(Dictionary, RoundTripAndDump) {
  std::mt19937_64 rng(3);
  auto u = testing::make_universe(20, 3, 4);
  auto terms = testing::random_data(rng, u, 200);
  auto ds = load_dataset(terms);
  for (const auto& triple : terms)
    for (const auto& t : triple) EXPECT_EQ(ds.dictionary.term(*ds.dictionary.find(t)), t);
  auto dump = load_dataset(d1_terms()).dictionary.dump_tsv();
  EXPECT_EQ(dump.substr(0, 12), "1\tiri\ta\n2\tir");
  EXPECT_NE(dump.find("8\tliteral\talice\n"), std::string::npos);
}

TEST(Statistics, IncrementalMatchesRecomputation) {
  std::mt19937_64 rng(11);
  for (int round = 0; round < 20; ++round) {
    auto u = testing::make_universe(testing::uniform(rng, 2, 30), 3, testing::uniform(rng, 1, 5));
    auto terms = testing::random_data(rng, u, testing::uniform(rng, 0, 300));
    auto ds = load_dataset(terms);
    EXPECT_EQ(ds.stats, compute_statistics(ds.table));
    std::uint64_t sum = 0;
    for (const auto& [p, ps] : ds.stats.properties) {
      sum += ps.count;
      EXPECT_GE(ps.distinct_subjects, 1u);
      EXPECT_LE(ps.distinct_subjects, ps.count);
      EXPECT_GE(ps.distinct_objects, 1u);
      EXPECT_LE(ps.distinct_objects, ps.count);
    }
    EXPECT_EQ(sum, ds.stats.total);
  }
}

// query-model

class QueryTest : public ::testing::Test {
 protected:
  QueryTest() : ds_(load_dataset(d1_terms())) {}
  ConjunctiveQuery parse(const std::string& text, Rational w = 1) { return parse_sparql(text, w, ds_.dictionary); }
  Dataset ds_;
};

TEST_F(QueryTest, ParsesQ1) {
  auto q = parse(testing::kQ1);
  EXPECT_EQ(q.head, (std::vector<std::string>{"x", "y"}));
  ASSERT_EQ(q.body.size(), 2u);
  EXPECT_EQ(q.body[0].p.id(), 4u);
  EXPECT_EQ(q.body[1].o.id(), 6u);
  EXPECT_EQ(q.weight, 1);
}

TEST_F(QueryTest, ParsesQ2WithWeight) {
  auto q = parse(testing::kQ2, 2);
  EXPECT_EQ(q.head, (std::vector<std::string>{"x"}));
  ASSERT_EQ(q.body.size(), 1u);
  EXPECT_EQ(q.body[0].o.id(), 5u);
  EXPECT_EQ(q.weight, 2);
}

TEST_F(QueryTest, UnknownConstantsMintIds) {
  auto before = ds_.dictionary.size();
  auto q = parse("SELECT ?x WHERE { ?x <advisor> <nobody> . }");
  EXPECT_EQ(ds_.dictionary.size(), before + 1);
  EXPECT_EQ(q.body[0].o.id(), before + 1);
}

TEST_F(QueryTest, RejectsUnsupported) {
  auto code = [&](const std::string& text) {
    try {
      parse(text);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::io;
  };
  EXPECT_EQ(code("SELECT ?x WHERE { ?x ?p ?y . }"), ErrorCode::unsupported_feature);
  EXPECT_EQ(code("SELECT ?x WHERE { ?x <a> ?y . OPTIONAL { ?x <b> ?z } }"), ErrorCode::unsupported_feature);
  EXPECT_EQ(code("SELECT ?x WHERE { ?x <a> ?y . FILTER(?y) }"), ErrorCode::unsupported_feature);
  EXPECT_EQ(code("SELECT ?x WHERE { ?x <a>/<b> ?y . }"), ErrorCode::unsupported_feature);
  EXPECT_EQ(code("SELECT * WHERE { ?x <a> ?y . }"), ErrorCode::unsupported_feature);
  EXPECT_EQ(code("SELECT ?x WHERE { ?x <a> _:b . }"), ErrorCode::unsupported_feature);
  EXPECT_EQ(code("SELECT WHERE { ?x <a> ?y . }"), ErrorCode::empty_head);
  EXPECT_EQ(code("SELECT ?z WHERE { ?x <a> ?y . }"), ErrorCode::unsafe_head);
  EXPECT_EQ(code("SELECT ?x WHERE { ?x <a> ?y . ?u <b> ?v . }"), ErrorCode::disconnected_body);
  EXPECT_EQ(code("SELECT ?x WHERE { }"), ErrorCode::empty_body);
  EXPECT_EQ(code("SELECT ?x WHERE { ?x <a> ?y "), ErrorCode::syntax);
  EXPECT_EQ(code("SELEC ?x WHERE { ?x <a> ?y . }"), ErrorCode::syntax);
}

TEST_F(QueryTest, CaseInsensitiveKeywordsAndLastDot) {
  auto q = parse("select ?x where { ?x <advisor> ?y . ?y <type> <Professor> }");
  EXPECT_EQ(q.body.size(), 2u);
}

TEST_F(QueryTest, ValidateQueryExamples) {
  auto q1 = parse(testing::kQ1);
  EXPECT_NO_THROW(validate_query(q1));
  ConjunctiveQuery unsafe{"u", {"z"}, {{QTerm::var("x"), QTerm::constant(4), QTerm::var("y")}}, 1};
  try {
    validate_query(unsafe);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::unsafe_head);
  }
  ConjunctiveQuery split{"d",
                         {"x"},
                         {{QTerm::var("x"), QTerm::constant(4), QTerm::var("y")},
                          {QTerm::var("u"), QTerm::constant(7), QTerm::var("v")}},
                         1};
  try {
    validate_query(split);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::disconnected_body);
  }
  EXPECT_EQ(join_components(split.body).size(), 2u);
}

TEST_F(QueryTest, PrintParseFixpoint) {
  std::mt19937_64 rng(5);
  auto u = testing::make_universe(6, 2, 3);
  for (int i = 0; i < 200; ++i) {
    auto text = testing::random_sparql(rng, u, 4);
    auto q = parse(text);
    auto printed = to_sparql(q, ds_.dictionary);
    auto again = parse(printed);
    EXPECT_EQ(again.head, q.head);
    EXPECT_EQ(again.body, q.body);
    EXPECT_EQ(to_sparql(again, ds_.dictionary), printed);
  }
}

TEST_F(QueryTest, WorkloadDocument) {
  auto w = parse_workload(R"([{"name":"q1","sparql":"SELECT ?x ?y WHERE {\n ?x <advisor> ?y .\n ?y <type> <Professor> . }"},
                              {"name":"q2","weight":2,"sparql":"SELECT ?x WHERE { ?x <advisor> <b> . }"}])",
                          ds_.dictionary);
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(w[0].name, "q1");
  EXPECT_EQ(w[0].weight, 1);
  EXPECT_EQ(w[1].weight, 2);
  EXPECT_THROW(parse_workload(R"([{"name":"a","sparql":"SELECT ?x WHERE { ?x <p> ?y . }"},
                                  {"name":"a","sparql":"SELECT ?x WHERE { ?x <p> ?y . }"}])",
                              ds_.dictionary),
               Error);
  EXPECT_THROW(parse_workload(R"({"name":"a"})", ds_.dictionary), Error);
  EXPECT_THROW(parse_workload(R"([{"name":"a","weight":0,"sparql":"SELECT ?x WHERE { ?x <p> ?y . }"}])",
                              ds_.dictionary),
               Error);
}

// canonical forms

TriplePattern tp(QTerm s, TermId p, QTerm o) { return {std::move(s), QTerm::constant(p), std::move(o)}; }
QTerm v(const char* n) { return QTerm::var(n); }
QTerm c(TermId id) { return QTerm::constant(id); }

TEST(CanonicalForm, Examples) {
  EXPECT_EQ(canonical_form({tp(v("x"), 4, v("y"))}, {"x", "y"}), canonical_form({tp(v("u"), 4, v("v"))}, {"u", "v"}));
  EXPECT_NE(canonical_form({tp(v("x"), 4, v("y"))}, {}), canonical_form({tp(v("x"), 4, c(5))}, {}));
  Body a{tp(v("x"), 4, v("y")), tp(v("y"), 2, c(6))};
  Body b{tp(v("y"), 2, c(6)), tp(v("x"), 4, v("y"))};
  EXPECT_EQ(canonical_form(a, {"x", "y"}), canonical_form(b, {"x", "y"}));
  EXPECT_NE(canonical_form(a, {"x", "y"}), canonical_form(a, {"y", "x"}));
  EXPECT_EQ(canonical_form(a, {}), canonical_form(b, {}));
}

TEST(CanonicalForm, HardSymmetricCases) {
  // Two 3-cycles vs one 6-cycle share color-refinement colors.
  auto cycle = [](std::vector<std::pair<const char*, const char*>> edges) {
    Body body;
    for (auto [a, b] : edges) body.push_back(tp(v(a), 1, v(b)));
    return body;
  };
  Body two_triangles = cycle({{"a", "b"}, {"b", "c"}, {"c", "a"}, {"d", "e"}, {"e", "f"}, {"f", "d"}});
  Body hexagon = cycle({{"a", "b"}, {"b", "c"}, {"c", "d"}, {"d", "e"}, {"e", "f"}, {"f", "a"}});
  EXPECT_NE(canonical_form(two_triangles, {}), canonical_form(hexagon, {}));
  Body hexagon_renamed = cycle({{"q", "r"}, {"r", "s"}, {"s", "t"}, {"t", "u"}, {"u", "w"}, {"w", "q"}});
  std::reverse(hexagon_renamed.begin(), hexagon_renamed.end());
  EXPECT_EQ(canonical_form(hexagon, {}), canonical_form(hexagon_renamed, {}));
}

/// Every body of up to three atoms over properties {1,2}, one constant, and
/// variables introduced in order.
std::vector<Body> all_small_bodies() {
  std::vector<Body> out;
  auto options = [](std::size_t vars) {
    std::vector<QTerm> o;
    for (std::size_t i = 0; i < vars; ++i) o.push_back(QTerm::var("v" + std::to_string(i)));
    o.push_back(QTerm::var("v" + std::to_string(vars)));
    o.push_back(QTerm::constant(9));
    return o;
  };
  auto rec = [&](const auto& self, Body body, std::size_t vars, std::size_t atoms) -> void {
    if (!body.empty()) out.push_back(body);
    if (atoms == 3) return;
    for (TermId p : {1u, 2u})
      for (const auto& s : options(vars)) {
        std::size_t after_s = vars + (s.is_var() && s.name() == "v" + std::to_string(vars));
        for (const auto& o : options(after_s)) {
          std::size_t after_o = after_s + (o.is_var() && o.name() == "v" + std::to_string(after_s));
          Body next = body;
          next.push_back({s, QTerm::constant(p), o});
          self(self, next, after_o, atoms + 1);
        }
      }
  };
  rec(rec, {}, 0, 0);
  return out;
}

TEST(CanonicalForm, ExhaustiveAgainstBruteForceIsomorphism) {
  auto bodies = all_small_bodies();
  ASSERT_GT(bodies.size(), 1000u);
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < bodies.size(); ++i) groups[canonical_form(bodies[i], {})].push_back(i);
  for (const auto& [key, members] : groups)
    for (auto m : members) ASSERT_TRUE(testing::brute_force_isomorphic(bodies[members.front()], bodies[m])) << key;
  // Representatives must be pairwise non-isomorphic; only bodies with equal
  // cheap invariants can be isomorphic, so compare within those buckets.
  std::map<std::string, std::vector<const Body*>> buckets;
  for (const auto& [key, members] : groups) {
    const Body& rep = bodies[members.front()];
    auto deduped = dedup_body(rep);
    std::vector<std::string> shape;
    for (const auto& a : deduped)
      shape.push_back(std::to_string(a.p.id()) + (a.s.is_const() ? "c" : "v") + (a.o.is_const() ? "c" : "v") +
                      (a.s.is_var() && a.o.is_var() && a.s.name() == a.o.name() ? "=" : ""));
    std::sort(shape.begin(), shape.end());
    std::string inv = std::to_string(variables_of(deduped).size());
    for (const auto& x : shape) inv += "|" + x;
    buckets[inv].push_back(&rep);
  }
  for (const auto& [inv, reps] : buckets)
    for (std::size_t i = 0; i < reps.size(); ++i)
      for (std::size_t j = i + 1; j < reps.size(); ++j)
        ASSERT_FALSE(testing::brute_force_isomorphic(*reps[i], *reps[j]))
            << canonical_form(*reps[i], {}) << " vs " << canonical_form(*reps[j], {});
}

TEST(CanonicalForm, InvariantUnderRenamingAndReordering) {
  std::mt19937_64 rng(17);
  for (const auto& body : all_small_bodies()) {
    auto vars = variables_of(body);
    auto shuffled_vars = vars;
    std::shuffle(shuffled_vars.begin(), shuffled_vars.end(), rng);
    std::map<std::string, std::string> rename;
    for (std::size_t i = 0; i < vars.size(); ++i) rename[vars[i]] = "w" + shuffled_vars[i];
    Body other = body;
    for (auto& a : other)
      for (auto pos : kPositions)
        if (a.at(pos).is_var()) a.at(pos) = QTerm::var(rename.at(a.at(pos).name()));
    std::shuffle(other.begin(), other.end(), rng);
    std::vector<std::string> head, other_head;
    for (std::size_t i = 0; i < vars.size(); i += 2) {
      head.push_back(vars[i]);
      other_head.push_back(rename.at(vars[i]));
    }
    ASSERT_EQ(canonical_form(body, head), canonical_form(other, other_head));
    auto l = canonical_labeling(body, {});
    ASSERT_EQ(l.variables.size(), vars.size());
  }
}

}  // namespace
}  // namespace rdfviews
