#include "gradcheck.hpp"
#include "oracles.hpp"

#include <geoball/error.hpp>
#include <geoball/io.hpp>
#include <geoball/nball.hpp>

#include <doctest.h>

#include <cmath>
#include <random>

using namespace geoball;
using doctest::Approx;

namespace {

Ontology poodle() { return parse_ontology(read_text_file(GEOBALL_FIXTURES "/poodle.json")); }

using gradcheck::Problem;
using gradcheck::make_problem;
using gradcheck::randomize;
using gradcheck::away_from_kinks;
using gradcheck::worst_fd_error;

}  // namespace

TEST_SUITE("nball")
{
    TEST_CASE("subsumption hinge")
    {
        const Vec o = {0, 0}, x = {1, 0};
        CHECK(subsumption_hinge(o, o, 0.3, 1.0, 0.0) == 0.0);
        CHECK(subsumption_hinge(x, o, 0.5, 0.5, 0.0) == Approx(1.0));
        CHECK(subsumption_hinge(x, o, 0.5, 0.5, -0.2) == Approx(1.2));
        CHECK_THROWS_AS(subsumption_hinge(Vec{0, 0, 0}, o, 1, 1, 0), std::invalid_argument);
    }

    TEST_CASE("disjointness hinge")
    {
        CHECK(disjointness_hinge(Vec{0, 0}, Vec{3, 0}, 1, 1, 0) == 0.0);
        CHECK(disjointness_hinge(Vec{0, 0}, Vec{1, 0}, 0.6, 0.6, 0) == Approx(0.2));
        CHECK(disjointness_hinge(Vec{0.5, 0.5}, Vec{0.5, 0.5}, 1, 1, 0) == Approx(2.0));
        CHECK_THROWS_AS(disjointness_hinge(Vec{0}, Vec{0, 0}, 1, 1, 0), std::invalid_argument);
    }

    TEST_CASE("radius floor")
    {
        CHECK(radius_floor_penalty(0.0, 4, 4, 0.1) == 0.0);
        CHECK(radius_floor_penalty(0.3, 4, 4, 0.1) == 0.0);
        CHECK(radius_floor_penalty(0.1, 4, 1, 0.1) == Approx(0.1 * std::sqrt(3.0) - 0.1).epsilon(1e-12));
        CHECK(radius_floor_penalty(0.1, 4, 1, 0.1) == Approx(0.07321).epsilon(1e-4));
        CHECK(radius_floor_penalty(0.5, 4, 1, 0.1) == 0.0);
        CHECK(radius_floor(4, 2, 0.2) == Approx(0.2 * std::sqrt(2.0)));
        CHECK_THROWS_AS(radius_floor_penalty(0.1, 4, 0, 0.1), std::out_of_range);
        CHECK_THROWS_AS(radius_floor_penalty(0.1, 4, 5, 0.1), std::out_of_range);
    }

    TEST_CASE("centre norm penalty")
    {
        CHECK(center_norm_penalty(Vec{0.6, 0.8}, 5, 1.0) == Approx(0.0));
        CHECK(center_norm_penalty(Vec{1.2, 0.0}, 3, 1.0) == Approx(0.6));
        CHECK(center_norm_penalty(Vec{7.0, 3.0}, 0, 1.0) == 0.0);
    }

    TEST_CASE("term equivalence with the original two-ball loss")
    {
        std::mt19937_64 rng(3);
        std::normal_distribution<> n(0, 1);
        for (int t = 0; t < 100; ++t) {
            Vec p(5), q(5);
            for (auto& v : p) v = n(rng);
            for (auto& v : q) v = n(rng);
            const double rp = std::abs(n(rng)), rq = std::abs(n(rng)), g = 0.2 * n(rng);
            auto norm = [](const Vec& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + v[3] * v[3] + v[4] * v[4]); };
            double dpq = 0;
            for (int i = 0; i < 5; ++i) dpq += (p[i] - q[i]) * (p[i] - q[i]);
            const double direct = std::max(0.0, std::sqrt(dpq) + rp - rq - g) + std::abs(norm(p) - 1) + std::abs(norm(q) - 1);
            const double composed = subsumption_hinge(p, q, rp, rq, g) + center_norm_penalty(p, 1, 1.0) + center_norm_penalty(q, 1, 1.0);
            CHECK(composed == Approx(direct).epsilon(1e-12));
        }
    }

    TEST_CASE("total loss")
    {
        SUBCASE("zero on a nested, separated configuration")
        {
            const auto p = make_problem(parse_ontology(
                R"({"concepts":["A","B","C"],"subclass":[["B","A"],["C","A"]],"disjoint":[["B","C"]]})"));
            BallSpace s(2, p.o.concepts());
            EmbedConfig c;
            c.dim = 2;
            c.phi = 1.0;
            c.psi = 0.1;
            auto put = [&](const char* n, double x, double y, double r) {
                const auto i = s.index(n);
                s.centre(i)[0] = x;
                s.centre(i)[1] = y;
                s.radius(i) = r;
            };
            put("A", 1.0, 0.0, 1.0);
            put("B", 0.8, 0.6, 0.2);
            put("C", 0.8, -0.6, 0.2);
            const auto l = total_loss(s, p.view(), c);
            CHECK(l.total() == 0.0);
            const auto g = loss_gradients(s, p.view(), c);
            for (double v : g.centres) CHECK(v == 0.0);
            for (double v : g.radii) CHECK(v == 0.0);
        }

        SUBCASE("poodle at a hand-placed configuration equals the term oracles")
        {
            const auto p = make_problem(poodle());
            BallSpace s(3, p.o.concepts());
            std::mt19937_64 rng(11);
            randomize(s, rng);
            EmbedConfig c;
            c.dim = 3;
            c.gamma = -0.05;
            c.psi = 0.2;
            c.phi = 1.3;
            double sub = 0, dis = 0, fl = 0, cn = 0;
            for (const auto& pr : p.ich.pairs()) sub += oracle::sub_hinge(oracle::ball_of(s, pr.child), oracle::ball_of(s, pr.parent), c.gamma);
            for (const auto& d : p.o.disjoint_axioms()) dis += oracle::dis_hinge(oracle::ball_of(s, d.first), oracle::ball_of(s, d.second), c.gamma);
            for (std::size_t i = 0; i < s.size(); ++i) {
                fl += oracle::floor_pen(s.radius(i), p.stats.total_levels, p.stats.level[i], c.psi);
                cn += oracle::norm_pen(oracle::ball_of(s, i).c, p.stats.occurrences[i], c.phi);
            }
            const auto l = total_loss(s, p.view(), c);
            CHECK(l.subsumption == Approx(sub).epsilon(1e-12));
            CHECK(l.disjointness == Approx(dis).epsilon(1e-12));
            CHECK(l.radius_floor == Approx(fl).epsilon(1e-12));
            CHECK(l.centre_norm == Approx(cn).epsilon(1e-12));
            CHECK(l.total() == Approx(sub + dis + fl + cn).epsilon(1e-12));
        }

        SUBCASE("a lone concept has only per-concept terms")
        {
            const auto p = make_problem(parse_ontology(R"({"concepts":["X"]})"));
            BallSpace s(2, p.o.concepts());
            s.centre(0)[0] = 2.0;
            s.radius(0) = 0.5;
            const auto l = total_loss(s, p.view(), EmbedConfig{});
            CHECK(l.hinge() == 0.0);
            CHECK(l.radius_floor == 0.0);
            CHECK(l.centre_norm == 0.0);  // no axioms mention X, so N(X) = 0
        }

        SUBCASE("a ball missing from the space is an error")
        {
            const auto p = make_problem(poodle());
            BallSpace small(2, {"entity", "animal"});
            CHECK_THROWS(total_loss(small, p.view(), EmbedConfig{}));
        }
    }

    TEST_CASE("active subsumption hinge gradient on radii")
    {
        const auto p = make_problem(parse_ontology(R"({"concepts":["A","B"],"subclass":[["A","B"]]})"));
        BallSpace s(2, p.o.concepts());
        EmbedConfig c;
        c.psi = 0.1;
        c.phi = 1.0;
        s.centre(0)[0] = 1.0;
        s.centre(1)[1] = 1.0;
        s.radius(0) = 0.6;
        s.radius(1) = 0.5;
        const auto g = loss_gradients(s, p.view(), c);
        CHECK(g.radii[0] == Approx(1.0));
        CHECK(g.radii[1] == Approx(-1.0));
    }

    TEST_CASE("gradients agree with central differences")
    {
        std::mt19937_64 rng(2024);
        int checked = 0;
        for (int attempt = 0; checked < 40 && attempt < 1000; ++attempt) {
            auto p = gradcheck::random_problem(2 + rng() % 7, rng);
            if (p.ich.empty()) continue;
            EmbedConfig c;
            c.dim = 2 + rng() % 4;
            c.gamma = std::uniform_real_distribution<>(-0.2, 0.2)(rng);
            c.psi = std::uniform_real_distribution<>(0.05, 0.5)(rng);
            c.phi = std::uniform_real_distribution<>(0.5, 2.0)(rng);
            BallSpace s(c.dim, p.o.concepts());
            randomize(s, rng);
            if (!away_from_kinks(s, p, c, 1e-3)) continue;
            CHECK(worst_fd_error(s, p, c) < 1e-4);
            ++checked;
        }
        CHECK(checked == 40);
    }

    TEST_CASE("hinge terms are translation invariant")
    {
        const auto p = make_problem(poodle());
        BallSpace s(4, p.o.concepts());
        std::mt19937_64 rng(5);
        randomize(s, rng);
        EmbedConfig c;
        c.dim = 4;
        c.gamma = -0.1;
        const auto before = total_loss(s, p.view(), c);
        const Vec shift = {0.3, -1.2, 2.5, 0.01};
        for (std::size_t i = 0; i < s.size(); ++i)
            for (std::size_t k = 0; k < 4; ++k) s.centre(i)[k] += shift[k];
        const auto after = total_loss(s, p.view(), c);
        CHECK(after.subsumption == Approx(before.subsumption).epsilon(1e-12));
        CHECK(after.disjointness == Approx(before.disjointness).epsilon(1e-12));
    }

    TEST_CASE("initial space")
    {
        const auto p = make_problem(poodle());
        EmbedConfig c;
        c.dim = 10;
        c.phi = 1.7;
        c.psi = 0.2;
        const auto a = init_space(p.o.concepts(), p.stats, c);
        const auto b = init_space(p.o.concepts(), p.stats, c);
        CHECK(a == b);
        CHECK(ball_space_to_json(a) == ball_space_to_json(b));
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(std::abs(norm(a.centre(i)) - 1.7) < 1e-9);
            CHECK(a.radius(i) >= radius_floor(p.stats.total_levels, p.stats.level[i], c.psi));
        }
        c.seed = 43;
        CHECK_FALSE(init_space(p.o.concepts(), p.stats, c) == a);
    }

    TEST_CASE("config validation")
    {
        auto bad = [](auto mutate) {
            EmbedConfig c;
            mutate(c);
            return c;
        };
        CHECK_THROWS_AS(bad([](EmbedConfig& c) { c.psi = 0; }).validate(), std::invalid_argument);
        CHECK_THROWS_AS(bad([](EmbedConfig& c) { c.phi = -1; }).validate(), std::invalid_argument);
        CHECK_THROWS_AS(bad([](EmbedConfig& c) { c.dim = 1; }).validate(), std::invalid_argument);
        CHECK_THROWS_AS(bad([](EmbedConfig& c) { c.radius_clamp_min = 0; }).validate(), std::invalid_argument);
        CHECK_NOTHROW(EmbedConfig{}.validate());
    }

    TEST_CASE("training the poodle fixture")
    {
        const auto p = make_problem(poodle());
        EmbedConfig c;
        c.dim = 10;
        c.gamma = -0.05;
        const auto t = train_embeddings(p.o, p.ich, p.stats, c);
        CHECK(t.history.epochs.size() == static_cast<std::size_t>(c.epochs));
        const auto final_loss = total_loss(t.space, p.view(), c);
        CHECK(final_loss.hinge() < 1e-3);
        for (const auto& pr : p.ich.pairs()) {
            CHECK(oracle::inside(oracle::ball_of(t.space, pr.child), oracle::ball_of(t.space, pr.parent)));
        }
        for (double r : t.space.radii()) CHECK(r >= c.radius_clamp_min);
        for (double x : t.space.centres()) CHECK(std::isfinite(x));

        const auto again = train_embeddings(p.o, p.ich, p.stats, c);
        CHECK(again.space == t.space);
    }

    TEST_CASE("zero hinge loss implies strict nesting and separation")
    {
        const std::vector<std::size_t> br = {2, 2, 3};
        const auto p = make_problem(make_balanced_ontology(br));
        for (double gamma : {-0.05, 0.0}) {
            EmbedConfig c;
            c.dim = 12;
            c.gamma = gamma;
            c.seed = 5;
            const auto t = train_embeddings(p.o, p.ich, p.stats, c);
            const auto l = total_loss(t.space, p.view(), c);
            if (l.subsumption == 0.0) {
                for (const auto& pr : p.ich.pairs()) {
                    const auto a = oracle::ball_of(t.space, pr.child), b = oracle::ball_of(t.space, pr.parent);
                    CHECK(oracle::dist(a.c, b.c) + a.r <= b.r + gamma + 1e-12);
                }
            }
            if (l.disjointness == 0.0 && gamma >= 0.0) {
                for (const auto& d : p.o.disjoint_axioms()) {
                    const auto a = oracle::ball_of(t.space, d.first), b = oracle::ball_of(t.space, d.second);
                    CHECK(oracle::dist(a.c, b.c) >= a.r + b.r - 1e-12);
                }
            }
            CHECK(l.hinge() == 0.0);
        }
    }

    TEST_CASE("zero epochs returns the initial space")
    {
        const auto p = make_problem(poodle());
        EmbedConfig c;
        c.dim = 6;
        c.epochs = 0;
        const auto t = train_embeddings(p.o, p.ich, p.stats, c);
        CHECK(t.space == init_space(p.o.concepts(), p.stats, c));
        CHECK(t.history.epochs.empty());
    }

    TEST_CASE("monotone mode never records a loss increase")
    {
        const auto p = make_problem(poodle());
        EmbedConfig c;
        c.dim = 10;
        c.gamma = -0.05;
        c.monotone = true;
        const auto t = train_embeddings(p.o, p.ich, p.stats, c);
        double prev = total_loss(init_space(p.o.concepts(), p.stats, c), p.view(), c).total();
        for (const auto& e : t.history.epochs) {
            CHECK(e.loss.total() <= prev + 1e-6);
            prev = e.loss.total();
        }
    }

    TEST_CASE("default schedule on the poodle fixture")
    {
        const auto p = make_problem(poodle());
        EmbedConfig c;
        c.dim = 10;
        c.gamma = -0.05;
        const auto t = train_embeddings(p.o, p.ich, p.stats, c);
        // The first epoch is the highest and the final loss is the smallest seen.
        double lowest = t.history.epochs.front().loss.total();
        for (const auto& e : t.history.epochs) lowest = std::min(lowest, e.loss.total());
        CHECK(t.history.epochs.back().loss.total() <= lowest + 1e-6);
        int increases = 0;
        for (std::size_t i = 1; i < t.history.epochs.size(); ++i)
            increases += t.history.epochs[i].loss.total() > t.history.epochs[i - 1].loss.total() + 1e-6;
        MESSAGE("epochs with a loss increase: " << increases);
    }

    TEST_CASE("non-finite losses abort training")
    {
        const auto p = make_problem(poodle());
        EmbedConfig c;
        c.dim = 4;
        c.learning_rate = 1e300;
        c.lr_decay = 0.0;
        CHECK_THROWS_AS(train_embeddings(p.o, p.ich, p.stats, c), TrainingError);
    }

    TEST_CASE("epoch callback sees every epoch")
    {
        const auto p = make_problem(poodle());
        EmbedConfig c;
        c.dim = 4;
        c.epochs = 17;
        int seen = 0;
        train_embeddings(p.o, p.ich, p.stats, c, [&](const EpochRecord& r) { CHECK(r.epoch == ++seen); });
        CHECK(seen == 17);
    }

    TEST_CASE("adam reaches a perfect embedding too")
    {
        const auto p = make_problem(poodle());
        EmbedConfig c;
        c.dim = 10;
        c.gamma = -0.05;
        c.optimizer = Optimizer::Adam;
        c.learning_rate = 0.01;
        const auto t = train_embeddings(p.o, p.ich, p.stats, c);
        CHECK(total_loss(t.space, p.view(), c).hinge() < 1e-3);
    }
}
