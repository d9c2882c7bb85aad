#pragma once

#include <span>

#include "kge/model.hpp"

namespace kge::tiles {

// Raw sums of lp_score_all (before the final sqrt or sign flip), one variant
// per instruction set. Every variant produces bitwise identical results.
namespace generic {
void score_candidates(const Model& model, const PreparedCandidates& pc, std::span<double> out);
}
#ifdef KGE_HAVE_AVX2_TILES
namespace avx2 {
void score_candidates(const Model& model, const PreparedCandidates& pc, std::span<double> out);
}
#endif

inline void score_candidates(const Model& model, const PreparedCandidates& pc,
                             std::span<double> out) {
#ifdef KGE_HAVE_AVX2_TILES
  static const bool has_avx2 = __builtin_cpu_supports("avx2");
  if (has_avx2) return avx2::score_candidates(model, pc, out);
#endif
  generic::score_candidates(model, pc, out);
}

}  // namespace kge::tiles
