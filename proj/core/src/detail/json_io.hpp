#pragma once

#include "geoball/embedding_eval.hpp"
#include "geoball/fewshot.hpp"

#include <json.hpp>

namespace geoball::detail {

nlohmann::ordered_json grid_report_json(const GridResult& result);
nlohmann::ordered_json eval_report_json(const EvalReport& report, double baseline_accuracy, std::size_t w,
                                        std::size_t s, std::size_t q);

}  // namespace geoball::detail
