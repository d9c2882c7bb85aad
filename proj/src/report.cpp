#include "kge/report.hpp"

#include <fstream>

#include <fmt/format.h>

namespace kge {

namespace {

nlohmann::json side_to_json(const RankSummary& s) {
  nlohmann::json j;
  j["n_tests"] = s.n_tests;
  j["mr_raw"] = s.mr_raw;
  j["mr_filt"] = s.mr_filt;
  j["mrr_raw"] = s.mrr_raw;
  j["mrr_filt"] = s.mrr_filt;
  for (const auto& [k, v] : s.hits_raw) j["hits_raw." + std::to_string(k)] = v;
  for (const auto& [k, v] : s.hits_filt) j["hits_filt." + std::to_string(k)] = v;
  return j;
}

}  // namespace

nlohmann::json metrics_to_json(const LPMetrics& m, std::optional<double> wall_time_s) {
  nlohmann::json j;
  j["n_facts"] = m.n_facts;
  j["head"] = side_to_json(m.head);
  j["tail"] = side_to_json(m.tail);
  j["combined"] = side_to_json(m.combined);
  if (wall_time_s) j["wall_time_s"] = *wall_time_s;
  return j;
}

nlohmann::json bench_to_json(const BenchReport& r, std::optional<double> speedup) {
  nlohmann::json j;
  j["mode"] = std::string(to_string(r.mode));
  j["repeats"] = r.repeats;
  j["mean_time_s"] = r.mean_time_s;
  j["facts_per_s"] = r.facts_per_s;
  j["run_times_s"] = r.run_times_s;
  if (speedup) j["speedup"] = *speedup;
  return j;
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return fmt::format("{:016x}", h);
}

}  // namespace kge
