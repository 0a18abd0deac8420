#pragma once

#include "geoball/embedding_eval.hpp"
#include "geoball/fewshot.hpp"
#include "geoball/hard_negatives.hpp"
#include "geoball/nball.hpp"
#include "geoball/ontology.hpp"
#include "geoball/projector.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace geoball {

std::string read_text_file(const std::filesystem::path& path);
/// Writes through a temporary sibling file and renames it into place.
void write_text_file(const std::filesystem::path& path, std::string_view content);

// All writers emit two-space indented JSON with a trailing newline; output is a
// deterministic function of the input.

/// `{"dim":n, "balls":{"concept":{"c":[...], "r":x}, ...}}`, balls in concept order.
std::string ball_space_to_json(const BallSpace& space);
BallSpace ball_space_from_json(std::string_view text);

/// `{"pairs":[["child","parent"], ...]}`
std::string ich_to_json(const Ontology& ontology, const Ich& ich);

/// `{"class":["negative", ...], ...}`
std::string negatives_to_json(const NegativeSets& sets);
NegativeSets negatives_from_json(std::string_view text);

/// `{"layers":[...], "weights":[[...], ...], "biases":[[...], ...], "base_labels":[...]}`, weights row-major.
std::string mlp_to_json(const Mlp& mlp);
Mlp mlp_from_json(std::string_view text);

std::string grid_report_to_json(const GridResult& result);
std::string eval_report_to_json(const EvalReport& report, double baseline_accuracy, std::size_t w, std::size_t s,
                                std::size_t q);

}  // namespace geoball
