#include <geoball/error.hpp>
#include <geoball/io.hpp>

#include <doctest.h>

#include <filesystem>
#include <random>

using namespace geoball;
namespace fs = std::filesystem;

TEST_SUITE("io")
{
    TEST_CASE("ball space round trip is exact")
    {
        std::mt19937_64 rng(1);
        std::normal_distribution<> n(0, 1);
        BallSpace s(3, {"x", "y", "z"});
        for (auto& c : s.centres()) c = n(rng) / 3.0;
        for (auto& r : s.radii()) r = std::abs(n(rng)) * 1e-7;
        const auto text = ball_space_to_json(s);
        CHECK(text.back() == '\n');
        const auto back = ball_space_from_json(text);
        CHECK(back == s);
        CHECK(ball_space_to_json(back) == text);
    }

    TEST_CASE("ball space parse errors")
    {
        CHECK_THROWS_AS(ball_space_from_json("{"), ParseError);
        CHECK_THROWS_AS(ball_space_from_json(R"({"dim":2})"), ParseError);
        CHECK_THROWS_AS(ball_space_from_json(R"({"dim":2,"balls":{"a":{"c":[1],"r":1}}})"), ParseError);
        CHECK_THROWS_AS(ball_space_from_json(R"({"dim":1,"balls":{"a":{"c":[1]}}})"), ParseError);
    }

    TEST_CASE("ICH document lists named pairs")
    {
        const auto o = parse_ontology(R"({"concepts":["a","b","c"],"subclass":[["a","b"],["b","c"]]})");
        const auto text = ich_to_json(o, compute_ich(o));
        CHECK(text.find(R"("a",)") != std::string::npos);
        const auto j = text.find("\"pairs\"");
        CHECK(j != std::string::npos);
        int pairs = 0;
        for (std::size_t p = text.find('['); p != std::string::npos; p = text.find('[', p + 1)) ++pairs;
        CHECK(pairs == 4);  // outer list plus three pairs
    }

    TEST_CASE("negatives round trip")
    {
        NegativeSets n;
        n.negatives["a"] = {"b", "c"};
        n.negatives["b"] = {"a"};
        const auto back = negatives_from_json(negatives_to_json(n));
        CHECK(back.negatives == n.negatives);
        CHECK_THROWS_AS(negatives_from_json(R"({"a":"b"})"), ParseError);
        CHECK_THROWS_AS(negatives_from_json("[]"), ParseError);
    }

    TEST_CASE("MLP round trip")
    {
        auto m = Mlp::initialized({4, 6, 3}, 7);
        m.base_labels = {"p", "q"};
        const auto text = mlp_to_json(m);
        const auto back = mlp_from_json(text);
        CHECK(back == m);
        CHECK(mlp_to_json(back) == text);
        CHECK_THROWS_AS(mlp_from_json(R"({"layers":[2,2],"weights":[],"biases":[]})"), ParseError);
        CHECK_THROWS_AS(mlp_from_json(R"({"layers":[2,2],"weights":[[1,2,3]],"biases":[[0,0]]})"), ParseError);
    }

    TEST_CASE("files")
    {
        const auto dir = fs::temp_directory_path() / "geoball_io_test";
        fs::remove_all(dir);
        const auto path = dir / "sub" / "out.txt";
        write_text_file(path, "hello\n");
        CHECK(read_text_file(path) == "hello\n");
        write_text_file(path, "again\n");
        CHECK(read_text_file(path) == "again\n");
        std::size_t entries = 0;
        for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir / "sub")) ++entries;
        CHECK(entries == 1);
        CHECK_THROWS_AS(read_text_file(dir / "missing"), Error);
        fs::remove_all(dir);
    }

    TEST_CASE("evaluation report")
    {
        EvalReport r;
        r.episode_accuracy = {1.0, 0.5};
        summarize(r);
        const auto text = eval_report_to_json(r, 0.6, 5, 5, 15);
        CHECK(text.find("\"accuracy\": 0.75") != std::string::npos);
        CHECK(text.find("\"nearest_centroid_baseline\": 0.6") != std::string::npos);
    }
}
