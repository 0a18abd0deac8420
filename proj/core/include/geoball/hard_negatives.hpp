#pragma once

#include "geoball/linalg.hpp"
#include "geoball/nball.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace geoball {

struct KMeansResult {
    std::vector<std::size_t> assignment;  ///< cluster index per point
    std::vector<Vec> centroids;
    double sse = 0.0;                     ///< within-cluster sum of squared distances
    int iterations = 0;                   ///< Lloyd iterations of the winning restart
};

struct KMeansOptions {
    int max_iters = 100;
    /// Independent k-means++ restarts; the lowest-SSE result wins.
    int restarts = 16;
};

/// Lloyd's algorithm from k-means++ seeding. An emptied cluster takes the point
/// farthest from its centroid within the largest cluster. Deterministic in `seed`.
/// Throws std::invalid_argument unless 1 <= k <= points.size().
KMeansResult kmeans(std::span<const Vec> points, std::size_t k, std::uint64_t seed, const KMeansOptions& options = {});

/// Hard-negative classes C^(-) per leaf class.
struct NegativeSets {
    std::vector<std::vector<std::string>> clusters;
    std::map<std::string, std::vector<std::string>> negatives;

    const std::vector<std::string>& of(const std::string& label) const;
};

/// ceil(sqrt(n_leaves))
std::size_t default_cluster_count(std::size_t n_leaves);

/// Clusters leaf centres; each leaf's negatives are the other members of its
/// cluster, or its single nearest other leaf when the cluster is a singleton.
NegativeSets build_negative_sets(const BallSpace& space, std::span<const std::string> leaves, std::size_t k,
                                 std::uint64_t seed, const KMeansOptions& options = {});

/// Keeps only negatives inside `candidates`. A class left without negatives gets the
/// nearest other candidate by centre distance.
NegativeSets restrict_negatives(const NegativeSets& sets, const BallSpace& space,
                                std::span<const std::string> candidates);

}  // namespace geoball
