#include "oracles.hpp"

#include <geoball/error.hpp>
#include <geoball/io.hpp>
#include <geoball/ontology.hpp>

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace geoball;

namespace {

Ontology poodle() { return parse_ontology(read_text_file(GEOBALL_FIXTURES "/poodle.json")); }

Ontology chain_abc()
{
    return parse_ontology(R"({"concepts":["A","B","C"],"subclass":[["A","B"],["B","C"]]})");
}

bool has_kind(const std::vector<Diagnostic>& ds, Diagnostic::Kind k)
{
    return std::any_of(ds.begin(), ds.end(), [&](const Diagnostic& d) { return d.kind == k; });
}

}  // namespace

TEST_SUITE("ontology")
{
    TEST_CASE("minimal document")
    {
        const auto o = parse_ontology(R"({"concepts":["A","B"],"subclass":[["A","B"]],"disjoint":[]})");
        CHECK(o.size() == 2);
        CHECK(o.subclass_axioms().size() == 1);
        CHECK(o.name(0) == "A");
        CHECK(o.name(1) == "B");
        CHECK(o.leaves() == std::vector<ConceptId>{0});
    }

    TEST_CASE("self subsumption is a cycle")
    {
        CHECK_THROWS_AS(parse_ontology(R"({"concepts":["A"],"subclass":[["A","A"]],"disjoint":[]})"), OntologyError);
    }

    TEST_CASE("poodle fixture counts")
    {
        const auto o = poodle();
        CHECK(o.size() == 6);
        CHECK(o.subclass_axioms().size() == 5);
        CHECK(o.disjoint_axioms().size() == 1);
        CHECK(o.leaves().size() == 3);
    }

    TEST_CASE("syntax errors carry a position")
    {
        try {
            parse_ontology("{\n  \"concepts\": [\"A\",\n  ]\n}");
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            CHECK(e.line() == 3);
        }
        CHECK_THROWS_AS(parse_ontology(R"({"subclass":[]})"), ParseError);
        CHECK_THROWS_AS(parse_ontology(R"({"concepts":["A"],"subclass":[["A"]]})"), ParseError);
    }

    TEST_CASE("unknown identifiers are rejected")
    {
        CHECK_THROWS_AS(parse_ontology(R"({"concepts":["A"],"subclass":[["A","B"]]})"), OntologyError);
        CHECK_THROWS_AS(parse_ontology(R"({"concepts":["A","B"],"disjoint":[["A","Z"]]})"), OntologyError);
        CHECK_THROWS_AS(parse_ontology(R"({"concepts":["A"],"leaves":["Z"]})"), OntologyError);
    }

    TEST_CASE("duplicate axioms are dropped with a warning")
    {
        std::vector<std::string> warnings;
        const auto o = parse_ontology(
            R"({"concepts":["A","B","C"],"subclass":[["A","B"],["A","B"]],"disjoint":[["A","C"],["C","A"]]})",
            &warnings);
        CHECK(o.subclass_axioms().size() == 1);
        CHECK(o.disjoint_axioms().size() == 1);
        CHECK(warnings.size() == 2);
    }

    TEST_CASE("identifiers are trimmed and must be unique")
    {
        const auto o = parse_ontology(R"({"concepts":[" A ","B"],"subclass":[["A","  B"]]})");
        CHECK(o.name(0) == "A");
        CHECK(o.subclass_axioms().size() == 1);
        CHECK_THROWS_AS(parse_ontology(R"({"concepts":["A"," A"]})"), OntologyError);
        CHECK(parse_ontology(R"({"concepts":["a","A"]})").size() == 2);
    }

    TEST_CASE("validate")
    {
        CHECK(validate(poodle()).empty());

        Ontology::Builder cyc;
        const auto a = cyc.add_concept("A"), b = cyc.add_concept("B");
        cyc.add_subclass(a, b);
        cyc.add_subclass(b, a);
        const auto ds = validate(std::move(cyc).build());
        REQUIRE(has_kind(ds, Diagnostic::Kind::Cycle));
        const auto& cycle = *std::find_if(ds.begin(), ds.end(), [](auto& d) { return d.kind == Diagnostic::Kind::Cycle; });
        CHECK(std::count(cycle.concepts.begin(), cycle.concepts.end(), "A") >= 1);
        CHECK(std::count(cycle.concepts.begin(), cycle.concepts.end(), "B") >= 1);

        Ontology::Builder uns;
        const auto A = uns.add_concept("A"), B = uns.add_concept("B"), C = uns.add_concept("C");
        uns.add_subclass(C, A);
        uns.add_subclass(C, B);
        uns.add_disjoint(A, B);
        const auto us = validate(std::move(uns).build());
        REQUIRE(has_kind(us, Diagnostic::Kind::Unsatisfiable));
        const auto& u = *std::find_if(us.begin(), us.end(), [](auto& d) { return d.kind == Diagnostic::Kind::Unsatisfiable; });
        CHECK(std::find(u.concepts.begin(), u.concepts.end(), "C") != u.concepts.end());

        Ontology::Builder sub;
        const auto x = sub.add_concept("X"), y = sub.add_concept("Y");
        sub.add_subclass(x, y);
        sub.add_disjoint(x, y);
        CHECK(has_kind(validate(std::move(sub).build()), Diagnostic::Kind::DisjointSubsumed));

        Ontology::Builder leaf;
        const auto p = leaf.add_concept("P"), q = leaf.add_concept("Q");
        leaf.add_subclass(p, q);
        leaf.declare_leaves();
        leaf.mark_leaf(q);
        CHECK(has_kind(validate(std::move(leaf).build()), Diagnostic::Kind::LeafHasChildren));
    }

    TEST_CASE("closure of a chain")
    {
        const auto o = chain_abc();
        const auto ich = compute_ich(o);
        CHECK(oracle::named_pairs(o, ich) == oracle::Pairs{{"A", "B"}, {"B", "C"}, {"A", "C"}});
        CHECK(compute_ich(parse_ontology(R"({"concepts":["A","B"]})")).empty());
    }

    TEST_CASE("poodle closure matches reachability")
    {
        const auto o = poodle();
        oracle::Dag d{o.concepts(), {}};
        for (const auto& s : o.subclass_axioms()) d.edges.emplace_back(s.child, s.parent);
        const auto ich = compute_ich(o);
        CHECK(oracle::named_pairs(o, ich) == oracle::dfs_reachability(d));
        CHECK(ich.size() == 10);
        CHECK(ich.contains(o.id("poodle"), o.id("entity")));
        CHECK_FALSE(ich.contains(o.id("entity"), o.id("poodle")));
        CHECK(ich.direct_parents(o.id("poodle")) == std::vector<ConceptId>{o.id("dog")});
    }

    TEST_CASE("closure equals DFS reachability on random DAGs")
    {
        std::mt19937_64 rng(20240611);
        for (int trial = 0; trial < 200; ++trial) {
            const std::size_t n = 1 + rng() % 40;
            const double p = std::uniform_real_distribution<>(0.0, 0.3)(rng);
            const auto d = oracle::random_dag(n, p, rng);
            const auto o = oracle::build(d);
            const auto ich = compute_ich(o);
            REQUIRE(oracle::named_pairs(o, ich) == oracle::dfs_reachability(d));

            for (const auto& s : o.subclass_axioms()) CHECK(ich.contains(s.child, s.parent));

            // Closing the closure again changes nothing.
            Ontology::Builder b;
            for (const auto& name : o.concepts()) b.add_concept(name);
            for (const auto& pr : ich.pairs()) b.add_subclass(pr.child, pr.parent);
            CHECK(compute_ich(std::move(b).build()).pairs() == ich.pairs());
        }
    }

    TEST_CASE("direct parents recomputed from the closure")
    {
        std::mt19937_64 rng(7);
        for (int trial = 0; trial < 50; ++trial) {
            const auto d = oracle::random_dag(2 + rng() % 20, 0.25, rng);
            const auto o = oracle::build(d);
            const auto ich = compute_ich(o);
            for (ConceptId c = 0; c < o.size(); ++c) {
                std::vector<ConceptId> expected;
                for (auto q : ich.ancestors(c)) {
                    bool between = false;
                    for (auto r : ich.ancestors(c)) between |= ich.contains(r, q);
                    if (!between) expected.push_back(q);
                }
                auto got = ich.direct_parents(c);
                std::sort(got.begin(), got.end());
                std::sort(expected.begin(), expected.end());
                CHECK(got == expected);
            }
        }
    }

    TEST_CASE("levels")
    {
        {
            const auto o = parse_ontology(R"({"concepts":["root"]})");
            const auto s = compute_stats(o, compute_ich(o));
            CHECK(s.total_levels == 1);
            CHECK(s.level[0] == 1);
            CHECK(s.occurrences[0] == 0);
        }
        {
            const auto o = chain_abc();
            const auto s = compute_stats(o, compute_ich(o));
            CHECK(s.level[o.id("C")] == 1);
            CHECK(s.level[o.id("B")] == 2);
            CHECK(s.level[o.id("A")] == 3);
            CHECK(s.total_levels == 3);
        }
        {
            // D sits under both a level-1 and a level-3 concept; the longer path wins.
            const auto o = parse_ontology(
                R"({"concepts":["A","B","C","D"],"subclass":[["B","A"],["C","B"],["D","C"],["D","A"]]})");
            const auto s = compute_stats(o, compute_ich(o));
            CHECK(s.level[o.id("D")] == 4);
        }
    }

    TEST_CASE("poodle occurrence counts")
    {
        const auto o = poodle();
        const auto ich = compute_ich(o);
        const auto s = compute_stats(o, ich);
        auto count = [&](const std::string& name) {
            const auto id = o.id(name);
            int n = 0;
            for (const auto& p : ich.pairs()) n += p.child == id || p.parent == id;
            for (const auto& d : o.disjoint_axioms()) n += d.mentions(id);
            return n;
        };
        CHECK(s.occurrences[o.id("dog")] == count("dog"));
        CHECK(s.occurrences[o.id("dog")] == 4);
        CHECK(s.occurrences[o.id("poodle")] == 4);
        CHECK(s.occurrences[o.id("street_sign")] == 1);
        CHECK(s.total_levels == 4);

        const auto told = compute_stats(o, ich, OccurrenceCount::ToldAndDisjoint);
        CHECK(told.occurrences[o.id("dog")] == 3);
        CHECK(told.occurrences[o.id("poodle")] == 2);
    }

    TEST_CASE("stats invariants on random DAGs")
    {
        std::mt19937_64 rng(99);
        for (int trial = 0; trial < 100; ++trial) {
            const auto d = oracle::random_dag(1 + rng() % 30, 0.2, rng);
            const auto o = oracle::build(d);
            const auto ich = compute_ich(o);
            const auto s = compute_stats(o, ich);
            CHECK(*std::min_element(s.level.begin(), s.level.end()) == 1);
            CHECK(*std::max_element(s.level.begin(), s.level.end()) == s.total_levels);
            for (const auto& ax : o.subclass_axioms()) CHECK(s.level[ax.child] > s.level[ax.parent]);
            for (ConceptId c = 0; c < o.size(); ++c) {
                int n = 0;
                for (const auto& p : ich.pairs()) n += p.child == c || p.parent == c;
                CHECK(s.occurrences[c] == n);
            }
            const auto again = compute_stats(o, ich);
            CHECK(again.level == s.level);
            CHECK(again.occurrences == s.occurrences);
        }
    }

    TEST_CASE("cyclic input is reported with the cycle")
    {
        Ontology::Builder b;
        const auto a = b.add_concept("A"), bb = b.add_concept("B"), c = b.add_concept("C");
        b.add_subclass(a, bb);
        b.add_subclass(bb, c);
        b.add_subclass(c, a);
        const auto o = std::move(b).build();
        try {
            compute_ich(o);
            FAIL("expected a cycle error");
        } catch (const OntologyError& e) {
            const std::string msg = e.what();
            CHECK(msg.find("cycle") != std::string::npos);
            CHECK(msg.find('A') != std::string::npos);
        }
    }

    TEST_CASE("ingest a chain")
    {
        const std::vector<std::string> leaves = {"poodle"};
        const auto o = ingest_hypernym_edges("poodle\tdog\ndog\tanimal\nanimal\tentity\n", leaves);
        CHECK(o.size() == 4);
        CHECK(o.subclass_axioms().size() == 3);
        CHECK(o.disjoint_axioms().empty());
        CHECK(compute_ich(o).size() == 6);
        CHECK(o.leaves() == std::vector<ConceptId>{o.id("poodle")});
    }

    TEST_CASE("ingest merges shared chains and drops unrelated nodes")
    {
        const auto text = read_text_file(GEOBALL_FIXTURES "/hypernyms.tsv");
        const auto leaves = parse_label_list(read_text_file(GEOBALL_FIXTURES "/leaves.txt"));
        CHECK(leaves == std::vector<std::string>{"poodle", "retriever", "street_sign"});
        const auto o = ingest_hypernym_edges(text, leaves);
        CHECK(o.size() == 7);
        CHECK_FALSE(o.find("cat"));
        CHECK(std::count(o.concepts().begin(), o.concepts().end(), "dog") == 1);
        CHECK(o.disjoint_axioms().empty());

        const auto sib = ingest_hypernym_edges(text, leaves, {true});
        REQUIRE(sib.disjoint_axioms().size() == 1);
        CHECK(sib.disjoint_axioms()[0] == DisjointPair::make(sib.id("poodle"), sib.id("retriever")));
    }

    TEST_CASE("ingest a hundred leaves")
    {
        std::string edges;
        std::vector<std::string> leaves;
        for (int g = 0; g < 10; ++g) {
            edges += "group" + std::to_string(g) + "\troot\n";
            for (int i = 0; i < 10; ++i) {
                leaves.push_back("leaf" + std::to_string(g * 10 + i));
                edges += leaves.back() + "\tgroup" + std::to_string(g) + "\n";
            }
        }
        const auto o = ingest_hypernym_edges(edges, leaves);
        CHECK(o.leaves().size() == 100);
        CHECK(o.size() == 111);
    }

    TEST_CASE("ingest errors")
    {
        const std::vector<std::string> missing = {"unicorn"};
        CHECK_THROWS_AS(ingest_hypernym_edges("poodle\tdog\n", missing), OntologyError);
        const std::vector<std::string> p = {"a"};
        CHECK_THROWS_AS(ingest_hypernym_edges("a\tb\nb\tc\nc\tb\n", p), OntologyError);
        CHECK_THROWS_AS(ingest_hypernym_edges("a b\n", p), ParseError);
    }

    TEST_CASE("balanced hierarchy")
    {
        const std::vector<std::size_t> br = {2, 2, 5};
        const auto o = make_balanced_ontology(br);
        CHECK(o.size() == 27);
        CHECK(o.leaves().size() == 20);
        const auto ich = compute_ich(o);
        CHECK(compute_stats(o, ich).total_levels == 4);
        CHECK(validate(o).empty());
        // Siblings are disjoint at every level: 1 + 2 + 4 * 10.
        CHECK(o.disjoint_axioms().size() == 43);
        CHECK(make_balanced_ontology(br, SiblingDisjointness::Leaves).disjoint_axioms().size() == 40);
        CHECK(make_balanced_ontology(br, SiblingDisjointness::None).disjoint_axioms().empty());
    }

    TEST_CASE("json round trip")
    {
        const auto o = poodle();
        const auto again = parse_ontology(to_json_text(o));
        CHECK(again.concepts() == o.concepts());
        CHECK(again.subclass_axioms() == o.subclass_axioms());
        CHECK(again.disjoint_axioms() == o.disjoint_axioms());
        CHECK(again.leaves() == o.leaves());
        CHECK(to_json_text(again) == to_json_text(o));
    }
}
