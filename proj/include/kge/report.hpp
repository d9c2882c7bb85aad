#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "kge/evaluation.hpp"

namespace kge {

// {"n_facts", "wall_time_s"?, "head"|"tail"|"combined": {"mr_raw", "mr_filt",
// "mrr_raw", "mrr_filt", "hits_raw.<k>", "hits_filt.<k>"}}
nlohmann::json metrics_to_json(const LPMetrics& m, std::optional<double> wall_time_s = std::nullopt);

// {"mode", "repeats", "mean_time_s", "facts_per_s", "run_times_s", "speedup"?}
nlohmann::json bench_to_json(const BenchReport& r, std::optional<double> speedup = std::nullopt);

// 64-bit FNV-1a digest of a file, as 16 hex digits.
std::string file_digest(const std::string& path);

}  // namespace kge
