#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace geoball {

using ConceptId = std::uint32_t;

/// Told or inferred axiom `child ⊑ parent`.
struct Subsumption {
    ConceptId child;
    ConceptId parent;
    auto operator<=>(const Subsumption&) const = default;
};

/// Unordered disjointness axiom, stored with `first <= second`.
struct DisjointPair {
    ConceptId first;
    ConceptId second;
    auto operator<=>(const DisjointPair&) const = default;

    static DisjointPair make(ConceptId a, ConceptId b) { return a <= b ? DisjointPair{a, b} : DisjointPair{b, a}; }
    bool mentions(ConceptId c) const { return first == c || second == c; }
};

/// Named concepts with told subsumption and disjointness axioms.
///
/// Construction goes through Ontology::Builder, which performs no semantic
/// checks; use validate() (or parse_ontology(), which calls it) to enforce
/// acyclicity, satisfiability and leaf constraints.
class Ontology {
public:
    class Builder {
    public:
        /// Interns a concept (whitespace-trimmed). Returns the existing id if already known.
        ConceptId intern(std::string_view name);
        /// Like intern() but throws OntologyError if the concept already exists.
        ConceptId add_concept(std::string_view name);
        std::optional<ConceptId> find(std::string_view name) const;

        /// Returns false if the axiom was already present.
        bool add_subclass(ConceptId child, ConceptId parent);
        bool add_disjoint(ConceptId a, ConceptId b);
        void mark_leaf(ConceptId c);
        /// When never called, build() treats every concept without told children as a leaf.
        void declare_leaves() { leaves_declared_ = true; }

        Ontology build() &&;

    private:
        std::vector<std::string> names_;
        std::unordered_map<std::string, ConceptId> index_;
        std::vector<Subsumption> subclass_;
        std::vector<DisjointPair> disjoint_;
        std::set<Subsumption> subclass_seen_;
        std::set<DisjointPair> disjoint_seen_;
        std::vector<ConceptId> leaves_;
        bool leaves_declared_ = false;
    };

    Ontology() = default;

    std::size_t size() const noexcept { return names_.size(); }
    const std::vector<std::string>& concepts() const noexcept { return names_; }
    const std::string& name(ConceptId c) const { return names_.at(c); }
    std::optional<ConceptId> find(std::string_view name) const;
    /// Throws OntologyError for an unknown name.
    ConceptId id(std::string_view name) const;

    const std::vector<Subsumption>& subclass_axioms() const noexcept { return subclass_; }
    const std::vector<DisjointPair>& disjoint_axioms() const noexcept { return disjoint_; }
    const std::vector<ConceptId>& leaves() const noexcept { return leaves_; }
    bool is_leaf(ConceptId c) const { return is_leaf_.at(c) != 0; }

    const std::vector<ConceptId>& told_parents(ConceptId c) const { return parents_.at(c); }
    const std::vector<ConceptId>& told_children(ConceptId c) const { return children_.at(c); }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, ConceptId> index_;
    std::vector<Subsumption> subclass_;
    std::vector<DisjointPair> disjoint_;
    std::vector<ConceptId> leaves_;
    std::vector<char> is_leaf_;
    std::vector<std::vector<ConceptId>> parents_;
    std::vector<std::vector<ConceptId>> children_;
};

struct Diagnostic {
    enum class Kind { Cycle, DisjointSubsumed, Unsatisfiable, LeafHasChildren };
    Kind kind;
    std::string message;
    /// Concepts involved; for Cycle this is the witness cycle in order.
    std::vector<std::string> concepts;
};

std::string_view to_string(Diagnostic::Kind kind);

/// Reports every violated Ontology invariant. Empty iff the ontology is well formed.
std::vector<Diagnostic> validate(const Ontology& ontology);

/// Parses the ontology JSON document
/// `{"concepts":[...], "subclass":[[child,parent],...], "disjoint":[[a,b],...], "leaves":[...]}`
/// and validates it. Duplicate axioms are dropped and reported through `warnings`.
/// Throws ParseError on malformed input and OntologyError on invariant violations.
Ontology parse_ontology(std::string_view document, std::vector<std::string>* warnings = nullptr);

/// Serializes back to the ontology JSON document.
std::string to_json_text(const Ontology& ontology);

/// Inferred class hierarchy: irreflexive transitive closure of the told subsumptions.
class Ich {
public:
    Ich() = default;
    /// Builds from an explicit pair list. The pairs are sorted and deduplicated but not closed.
    Ich(std::size_t num_concepts, std::vector<Subsumption> pairs);

    std::size_t num_concepts() const noexcept { return n_; }
    std::size_t size() const noexcept { return pairs_.size(); }
    bool empty() const noexcept { return pairs_.empty(); }
    /// Sorted by (child, parent).
    const std::vector<Subsumption>& pairs() const noexcept { return pairs_; }
    bool contains(ConceptId child, ConceptId parent) const;
    std::span<const ConceptId> ancestors(ConceptId c) const;
    /// Ancestors Q of c with no R such that c ⊑ R ⊑ Q in the hierarchy.
    std::vector<ConceptId> direct_parents(ConceptId c) const;
    /// Length of the longest ancestor chain above c, plus one.
    std::size_t depth(ConceptId c) const;

private:
    std::size_t n_ = 0;
    std::vector<Subsumption> pairs_;
    std::vector<std::size_t> offsets_;  // ancestors of c are pairs_[offsets_[c], offsets_[c+1])
    std::vector<ConceptId> parents_flat_;
    std::vector<std::size_t> depth_;
};

/// Throws OntologyError naming a cycle if the told hierarchy is cyclic.
Ich compute_ich(const Ontology& ontology);

struct HierarchyStats {
    int total_levels = 0;            ///< N_h
    std::vector<int> level;          ///< L(P), 1 for roots
    std::vector<int> occurrences;    ///< N(P)
};

enum class OccurrenceCount {
    InferredAndDisjoint,  ///< ICH pairs plus disjointness pairs (default)
    ToldAndDisjoint,      ///< told subsumptions plus disjointness pairs
};

/// Levels follow the longest told path to a root.
HierarchyStats compute_stats(const Ontology& ontology, const Ich& ich,
                             OccurrenceCount mode = OccurrenceCount::InferredAndDisjoint);

struct IngestOptions {
    /// Declare leaves sharing a direct parent pairwise disjoint.
    bool sibling_disjoint = false;
};

/// Builds an ontology from `child<TAB>parent` hypernym edges, keeping only the
/// ancestor chains of the given leaf labels.
Ontology ingest_hypernym_edges(std::string_view edges_tsv, std::span<const std::string> leaf_labels,
                               const IngestOptions& options = {});

/// Reads one label per line, skipping blank lines and `#` comments.
std::vector<std::string> parse_label_list(std::string_view text);

enum class SiblingDisjointness { None, Leaves, AllLevels };

/// Balanced synthetic hierarchy: a single root and `branching[i]` children per
/// node at depth i+1. Concept names encode their path (`root`, `root.0`, `root.0.3`, ...).
Ontology make_balanced_ontology(std::span<const std::size_t> branching,
                                SiblingDisjointness disjointness = SiblingDisjointness::AllLevels);

}  // namespace geoball
