#include "oracles.hpp"

#include <geoball/fewshot.hpp>

#include <doctest.h>

#include <random>
#include <set>

using namespace geoball;
using doctest::Approx;

namespace {

FeatureDataset blobs(std::size_t classes, std::size_t per_class, std::size_t dim, double sigma, std::uint64_t seed,
                     std::vector<Vec>* centres = nullptr)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<> n(0, 1);
    FeatureDataset d{dim, Split::Novel, {}};
    std::vector<Vec> cs(classes, Vec(dim));
    for (auto& c : cs)
        for (auto& x : c) x = 2 * n(rng);
    for (std::size_t c = 0; c < classes; ++c)
        for (std::size_t i = 0; i < per_class; ++i) {
            Vec f = cs[c];
            for (auto& x : f) x += sigma * n(rng);
            d.examples.push_back({"k" + std::to_string(c), f});
        }
    if (centres) *centres = cs;
    return d;
}

Mlp identity(std::size_t dim)
{
    Mlp m({dim, dim});
    for (std::size_t i = 0; i < dim; ++i) m.weights(0)[i * dim + i] = 1.0;
    return m;
}

BallSpace space_for(const std::vector<Vec>& centres, double r)
{
    std::vector<std::string> names;
    for (std::size_t c = 0; c < centres.size(); ++c) names.push_back("k" + std::to_string(c));
    BallSpace s(centres.front().size(), names);
    for (std::size_t c = 0; c < centres.size(); ++c) {
        std::copy(centres[c].begin(), centres[c].end(), s.centre(c).begin());
        s.radius(c) = r;
    }
    return s;
}

NegativeSets everyone(const BallSpace& s)
{
    NegativeSets n;
    n.clusters.push_back(s.concepts());
    for (const auto& a : s.concepts())
        for (const auto& b : s.concepts())
            if (a != b) n.negatives[a].push_back(b);
    return n;
}

ProjectorConfig frozen()
{
    ProjectorConfig c;
    c.epochs_fsl = 0;
    return c;
}

}  // namespace

TEST_SUITE("fewshot")
{
    TEST_CASE("episode sampling")
    {
        const auto d = blobs(6, 10, 3, 0.5, 1);
        const auto ep = sample_episode(d, 4, 3, 7, 11);
        CHECK(ep.classes.size() == 4);
        CHECK(std::set<std::string>(ep.classes.begin(), ep.classes.end()).size() == 4);
        CHECK(ep.support.size() == 12);
        CHECK(ep.query.size() == 28);
        // Support and query never share an example.
        std::set<Vec> seen;
        for (const auto& ex : ep.support.examples) seen.insert(ex.f);
        for (const auto& ex : ep.query.examples) CHECK_FALSE(seen.count(ex.f));
        for (const auto& ex : ep.query.examples)
            CHECK(std::find(ep.classes.begin(), ep.classes.end(), ex.label) != ep.classes.end());

        const auto again = sample_episode(d, 4, 3, 7, 11);
        CHECK(again.classes == ep.classes);
        CHECK(to_feature_csv(again.query) == to_feature_csv(ep.query));

        const auto all = sample_episode(d, 6, 4, 6, 2);
        CHECK(all.support.size() + all.query.size() == d.size());

        const auto many = sample_episodes(d, 2, 1, 1, 5, 100);
        REQUIRE(many.size() == 5);
        CHECK(many[3].classes == sample_episode(d, 2, 1, 1, 103).classes);

        CHECK_THROWS_AS(sample_episode(d, 7, 1, 1, 1), std::invalid_argument);
        CHECK_THROWS_AS(sample_episode(d, 2, 6, 5, 1), std::invalid_argument);
        CHECK_THROWS_AS(sample_episode(d, 0, 1, 1, 1), std::invalid_argument);
    }

    TEST_CASE("episode accuracy matches a direct count")
    {
        std::vector<Vec> centres;
        const auto d = blobs(8, 12, 3, 1.2, 2, &centres);
        const auto space = space_for(centres, 0.8);
        const auto mlp = identity(3);
        const auto episodes = sample_episodes(d, 5, 2, 8, 20, 5);
        const auto r = evaluate_episodes(space, Ich(space.size(), {}), mlp, episodes, frozen(), everyone(space));
        REQUIRE(r.episode_accuracy.size() == 20);
        std::size_t wrong = 0, inside = 0;
        double sum = 0;
        for (std::size_t e = 0; e < episodes.size(); ++e) {
            std::vector<oracle::Ball> balls;
            for (const auto& c : episodes[e].classes) balls.push_back(oracle::ball_of(space, space.index(c)));
            std::size_t correct = 0;
            for (const auto& ex : episodes[e].query.examples) {
                const auto choice = oracle::classify(ex.f, balls);
                inside += choice.inside;
                if (episodes[e].classes[choice.index] == ex.label) ++correct;
                else ++wrong;
            }
            const double acc = double(correct) / double(episodes[e].query.size());
            CHECK(r.episode_accuracy[e] == Approx(acc));
            sum += acc;
        }
        CHECK(r.accuracy == Approx(sum / 20));
        CHECK(r.wrong == wrong);
        CHECK(r.inside_predictions == inside);
        CHECK(r.queries == 20 * 40);
        CHECK(wrong > 0);
        CHECK(r.semantic_error_fraction == 0.0);
    }

    TEST_CASE("thread count does not change the result")
    {
        std::vector<Vec> centres;
        const auto d = blobs(6, 10, 4, 0.8, 3, &centres);
        const auto space = space_for(centres, 0.6);
        auto c = ProjectorConfig{};
        c.epochs_fsl = 5;
        const auto episodes = sample_episodes(d, 3, 2, 4, 6, 1);
        const auto one = evaluate_episodes(space, Ich(space.size(), {}), identity(4), episodes, c, everyone(space), 1);
        const auto three = evaluate_episodes(space, Ich(space.size(), {}), identity(4), episodes, c, everyone(space), 3);
        CHECK(one.episode_accuracy == three.episode_accuracy);
        CHECK(one.wrong == three.wrong);
    }

    TEST_CASE("one-way episodes are always right")
    {
        std::vector<Vec> centres;
        const auto d = blobs(4, 6, 2, 3.0, 4, &centres);
        const auto space = space_for(centres, 0.1);
        const auto r = evaluate_episodes(space, Ich(space.size(), {}), identity(2), sample_episodes(d, 1, 2, 4, 10, 0),
                                         frozen(), everyone(space));
        CHECK(r.accuracy == 1.0);
        CHECK(r.ci95_half_width == 0.0);
    }

    TEST_CASE("noise-free queries at their centres are always right")
    {
        std::vector<Vec> centres;
        const auto d = blobs(6, 8, 3, 0.0, 5, &centres);
        const auto space = space_for(centres, 0.2);
        const auto r = evaluate_episodes(space, Ich(space.size(), {}), identity(3), sample_episodes(d, 5, 3, 5, 10, 0),
                                         frozen(), everyone(space));
        CHECK(r.accuracy == 1.0);
        CHECK(r.inside_predictions == r.queries);
    }

    TEST_CASE("misses inside a direct parent's ball count as semantic errors")
    {
        BallSpace space(2, {"a", "b", "p"});
        space.centre(0)[0] = -1;
        space.centre(1)[0] = 1;
        space.radius(0) = space.radius(1) = 0.3;
        space.radius(2) = 2.0;
        const Ich ich(3, {{0, 2}, {1, 2}});
        Episode ep{{"a", "b"}, {2, Split::Novel, {}}, {2, Split::Novel, {}}};
        ep.support.examples = {{"a", {-1, 0}}, {"b", {1, 0}}};
        ep.query.examples = {{"a", {0.5, 0}}, {"a", {5, 0}}, {"b", {1, 0}}};
        const auto r = evaluate_episodes(space, ich, identity(2), {ep}, frozen(), everyone(space));
        CHECK(r.wrong == 2);
        CHECK(r.semantic_errors == 1);
        CHECK(r.semantic_error_fraction == Approx(0.5));
        CHECK(r.accuracy == Approx(1.0 / 3));
    }

    TEST_CASE("confidence interval")
    {
        EvalReport r;
        r.episode_accuracy = {0.5, 0.7, 0.9};
        summarize(r);
        CHECK(r.accuracy == Approx(0.7));
        CHECK(r.ci95_half_width == Approx(1.96 * 0.2 / std::sqrt(3.0)));

        std::mt19937_64 rng(6);
        std::uniform_real_distribution<> u(0.6, 1.0);
        auto half_width = [&](std::size_t n) {
            EvalReport e;
            for (std::size_t i = 0; i < n; ++i) e.episode_accuracy.push_back(u(rng));
            summarize(e);
            return e.ci95_half_width;
        };
        const double ratio = half_width(200) / half_width(3200);
        CHECK(ratio == Approx(4.0).epsilon(0.2));
    }

    TEST_CASE("nearest-centroid baseline")
    {
        std::mt19937_64 rng(9);
        const auto d = blobs(7, 10, 4, 1.5, 7);
        const auto episodes = sample_episodes(d, 5, 3, 5, 30, 0);
        const auto acc = nearest_centroid_accuracy(episodes);
        REQUIRE(acc.size() == 30);
        for (std::size_t e = 0; e < episodes.size(); ++e) {
            const auto& ep = episodes[e];
            std::vector<Vec> mean(ep.classes.size(), Vec(4, 0.0));
            for (std::size_t c = 0; c < ep.classes.size(); ++c) {
                int n = 0;
                for (const auto& ex : ep.support.examples)
                    if (ex.label == ep.classes[c]) {
                        for (std::size_t k = 0; k < 4; ++k) mean[c][k] += ex.f[k];
                        ++n;
                    }
                for (auto& x : mean[c]) x /= n;
            }
            int correct = 0;
            for (const auto& ex : ep.query.examples) {
                std::size_t best = 0;
                for (std::size_t c = 1; c < mean.size(); ++c)
                    if (oracle::dist(ex.f, mean[c]) < oracle::dist(ex.f, mean[best])) best = c;
                correct += ep.classes[best] == ex.label;
            }
            CHECK(acc[e] == Approx(correct / double(ep.query.size())));
        }
    }

    TEST_CASE("projection accuracy")
    {
        std::vector<Vec> centres;
        const auto d = blobs(3, 5, 2, 0.0, 8, &centres);
        const auto space = space_for(centres, 0.1);
        CHECK(projection_accuracy(identity(2), d, space, space.concepts()) == 1.0);
        CHECK(projection_accuracy(identity(2), FeatureDataset{2, Split::Base, {}}, space, space.concepts()) == 0.0);
    }
}
