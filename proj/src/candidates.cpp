#include <algorithm>
#include <cmath>

#include "kernels.hpp"
#include "tile_scoring.hpp"
#include "kge/model.hpp"

namespace kge {

namespace {

bool uses_projection(ModelKind kind, Side side) {
  switch (kind) {
    case ModelKind::TransH:
    case ModelKind::TransR:
    case ModelKind::TransD:
      return true;
    case ModelKind::RESCAL:
      return side == Side::Tail;
    default:
      return false;
  }
}

// Projection of one entity under one relation, written to out.
void project_entity(const Model& m, Index e, Index r, std::span<double> out) {
  const auto& P = m.params;
  switch (m.kind) {
    case ModelKind::TransH:
      kernels::project_hyperplane(P[0].row(e), P[2].row(r), out);
      break;
    case ModelKind::TransR:
      kernels::mat_vec(P[2].row(r), P[0].row(e), out);
      break;
    case ModelKind::TransD:
      kernels::project_transd(P[0].row(e), P[1].row(e), P[3].row(r), out);
      break;
    case ModelKind::RESCAL:
      kernels::mat_vec(P[1].row(r), P[0].row(e), out);
      break;
    default:
      break;
  }
}

std::span<const double> relation_vector(const Model& m, Index r) {
  return m.kind == ModelKind::TransD ? m.params[2].row(r) : m.params[1].row(r);
}

}  // namespace

PreparedCandidates lp_prep_cands(const Model& model, std::span<const Triple> batch, Side side) {
  if (batch.empty()) throw Error("candidate preparation needs a nonempty batch");
  for (const auto& t : batch)
    if (t.head >= model.n_ent || t.tail >= model.n_ent || t.relation >= model.n_rel)
      throw Error("batch triple is outside the model");

  PreparedCandidates pc;
  pc.side = side;
  pc.batch.assign(batch.begin(), batch.end());
  const std::size_t n = batch.size(), d = model.dim, dr = model.rel_dim;
  const auto& P = model.params;

  if (uses_projection(model.kind, side)) {
    pc.width = model.kind == ModelKind::RESCAL ? d : dr;
    pc.slot.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Index r = batch[i].relation;
      auto it = std::find(pc.relations.begin(), pc.relations.end(), r);
      if (it != pc.relations.end()) {
        pc.slot[i] = static_cast<std::size_t>(it - pc.relations.begin());
        continue;
      }
      pc.slot[i] = pc.relations.size();
      pc.relations.push_back(r);
      auto& table = pc.projected.emplace_back(model.n_ent * pc.width);
      for (std::size_t e = 0; e < model.n_ent; ++e)
        project_entity(model, static_cast<Index>(e), r,
                       std::span(table.data() + e * pc.width, pc.width));
    }
  } else {
    pc.width = d;
  }

  // Per-fact vectors for the side that stays fixed.
  auto fill = [&](std::size_t width, auto&& fn) {
    pc.query_width = width;
    pc.queries.assign(n * width, 0.0);
    for (std::size_t i = 0; i < n; ++i) fn(batch[i], std::span(pc.queries.data() + i * width, width));
  };
  switch (model.kind) {
    case ModelKind::TransE:
      if (side == Side::Tail) {
        fill(d, [&](const Triple& t, std::span<double> q) {
          auto h = P[0].row(t.head), r = P[1].row(t.relation);
          for (std::size_t k = 0; k < d; ++k) q[k] = h[k] + r[k];
        });
      } else {
        fill(2 * d, [&](const Triple& t, std::span<double> q) {
          std::ranges::copy(P[1].row(t.relation), q.begin());
          std::ranges::copy(P[0].row(t.tail), q.begin() + d);
        });
      }
      break;
    case ModelKind::DistMult:
      if (side == Side::Tail) {
        fill(d, [&](const Triple& t, std::span<double> q) {
          auto h = P[0].row(t.head), r = P[1].row(t.relation);
          for (std::size_t k = 0; k < d; ++k) q[k] = h[k] * r[k];
        });
      } else {
        fill(2 * d, [&](const Triple& t, std::span<double> q) {
          std::ranges::copy(P[1].row(t.relation), q.begin());
          std::ranges::copy(P[0].row(t.tail), q.begin() + d);
        });
      }
      break;
    case ModelKind::ComplEx:
      if (side == Side::Tail) {
        fill(2 * d, [&](const Triple& t, std::span<double> q) {
          auto a = P[0].row(t.head), b = P[1].row(t.head);
          auto c = P[2].row(t.relation), dd = P[3].row(t.relation);
          for (std::size_t k = 0; k < d; ++k) {
            q[k] = kernels::cmul_re(a[k], b[k], c[k], dd[k]);
            q[d + k] = kernels::cmul_im(a[k], b[k], c[k], dd[k]);
          }
        });
      } else {
        fill(4 * d, [&](const Triple& t, std::span<double> q) {
          std::ranges::copy(P[2].row(t.relation), q.begin());
          std::ranges::copy(P[3].row(t.relation), q.begin() + d);
          std::ranges::copy(P[0].row(t.tail), q.begin() + 2 * d);
          std::ranges::copy(P[1].row(t.tail), q.begin() + 3 * d);
        });
      }
      break;
    case ModelKind::RESCAL:
      if (side == Side::Tail) {
        fill(d, [&](const Triple& t, std::span<double> q) { std::ranges::copy(P[0].row(t.head), q.begin()); });
      } else {
        fill(d, [&](const Triple& t, std::span<double> q) {
          kernels::mat_vec(P[1].row(t.relation), P[0].row(t.tail), q);
        });
      }
      break;
    case ModelKind::TransH:
    case ModelKind::TransR:
    case ModelKind::TransD:
      if (side == Side::Tail) {
        fill(dr, [&](const Triple& t, std::span<double> q) {
          std::vector<double> ph(dr);
          project_entity(model, t.head, t.relation, ph);
          auto r = relation_vector(model, t.relation);
          for (std::size_t k = 0; k < dr; ++k) q[k] = ph[k] + r[k];
        });
      } else {
        fill(2 * dr, [&](const Triple& t, std::span<double> q) {
          std::ranges::copy(relation_vector(model, t.relation), q.begin());
          project_entity(model, t.tail, t.relation, q.subspan(dr, dr));
        });
      }
      break;
  }
  return pc;
}

void lp_score_all(const Model& model, const PreparedCandidates& pc, Side side,
                  std::span<double> out) {
  if (pc.side != side)
    throw Error("candidates were prepared for " + std::string(to_string(pc.side)) +
                " tests, not " + std::string(to_string(side)));
  if (out.size() != pc.batch.size() * model.n_ent) throw Error("score matrix has the wrong size");
  tiles::score_candidates(model, pc, out);

  if (model.kind == ModelKind::TransE) {
    for (double& v : out) v = -std::sqrt(v);
  } else if (is_translational(model.kind)) {
    for (double& v : out) v = -v;
  }
}

std::vector<double> lp_score_all(const Model& model, const PreparedCandidates& prepared,
                                 Side side) {
  std::vector<double> out(prepared.batch.size() * model.n_ent);
  lp_score_all(model, prepared, side, out);
  return out;
}

}  // namespace kge
