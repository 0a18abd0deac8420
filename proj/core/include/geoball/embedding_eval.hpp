#pragma once

#include "geoball/nball.hpp"
#include "geoball/ontology.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace geoball {

/// True iff ball P lies inside ball Q: |c_P - c_Q| <= r_Q - r_P.
bool containment_holds(const BallRef& p, const BallRef& q);

struct PrfScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t true_positives = 0;
    std::size_t false_positives = 0;
    std::size_t false_negatives = 0;
    /// The candidate pair universe was empty; all scores are 0.
    bool empty_universe = false;
};

/// Containment prediction over all ordered concept pairs (P, Q), P != Q.
PrfScore f1_all(const BallSpace& space, const Ich& ich);

/// Restricted to pairs with P a leaf and Q a leaf or a direct parent of some leaf.
PrfScore f1_leaf(const BallSpace& space, const Ich& ich, std::span<const ConceptId> leaves);

/// Number of unordered leaf pairs with |c_P - c_Q| >= r_P + r_Q.
/// Throws std::invalid_argument with fewer than two leaves.
std::size_t s_d(const BallSpace& space, std::span<const ConceptId> leaves);

struct Scores {
    double f1_all = 0.0;
    double f1_leaf = 0.0;
    std::size_t s_d = 0;
    double s_d_fraction = 0.0;
};

Scores score_embedding(const BallSpace& space, const Ich& ich, std::span<const ConceptId> leaves);

struct GridSpec {
    std::vector<double> gammas;
    std::vector<double> psis;
    std::vector<double> phis;
    /// Minimum s_d_fraction a grid point needs to be considered.
    double s_d_threshold = 0.95;

    void validate() const;
};

struct GridRow {
    double gamma = 0.0;
    double psi = 0.0;
    double phi = 0.0;
    Scores scores;
    LossBreakdown final_loss;
    bool passes_threshold = false;
};

struct GridResult {
    std::vector<GridRow> rows;  ///< gamma-major, then psi, then phi
    std::size_t best = 0;       ///< index into rows
    EmbedConfig best_config;
    /// No row met the threshold; `best` is chosen among all rows.
    bool below_threshold = false;
};

/// Trains one embedding per grid point, all with base_config's seed. `threads`
/// bounds parallel training jobs; results do not depend on it.
GridResult grid_search(const Ontology& ontology, const Ich& ich, const HierarchyStats& stats, const GridSpec& grid,
                       const EmbedConfig& base_config, unsigned threads = 1);

}  // namespace geoball
