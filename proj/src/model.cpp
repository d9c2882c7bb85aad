#include "kge/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "kernels.hpp"
#include "kge/random.hpp"

namespace kge {

namespace {

constexpr std::string_view kKindNames[] = {"TransE", "TransH",   "TransR", "TransD",
                                           "RESCAL", "DistMult", "ComplEx"};

void check_triples(const Model& m, std::span<const Triple> triples) {
  for (const auto& t : triples) {
    if (t.head >= m.n_ent || t.tail >= m.n_ent || t.relation >= m.n_rel)
      throw Error("triple (" + std::to_string(t.head) + ", " + std::to_string(t.relation) + ", " +
                  std::to_string(t.tail) + ") is outside the model (" + std::to_string(m.n_ent) +
                  " entities, " + std::to_string(m.n_rel) + " relations)");
  }
}

void normalize_row(std::span<double> x) {
  double sq = 0.0;
  for (double v : x) sq += v * v;
  const double norm = std::sqrt(sq);
  if (norm == 0.0 || std::abs(norm - 1.0) <= 1e-12) return;
  for (double& v : x) v /= norm;
}

void normalize_table(ParamTable& t) {
  for (std::size_t i = 0; i < t.rows; ++i) normalize_row(t.row(i));
}

void add_scaled(SparseRows& g, Index row, std::span<const double> v, double scale) {
  auto dst = g.row(row);
  for (std::size_t k = 0; k < v.size(); ++k) dst[k] += scale * v[k];
}

}  // namespace

std::string_view to_string(ModelKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

ModelKind parse_model_kind(std::string_view name) {
  for (std::size_t i = 0; i < std::size(kKindNames); ++i) {
    if (std::equal(name.begin(), name.end(), kKindNames[i].begin(), kKindNames[i].end(),
                   [](char a, char b) { return std::tolower(a) == std::tolower(b); }))
      return static_cast<ModelKind>(i);
  }
  throw Error("unknown model '" + std::string(name) + "'");
}

bool is_translational(ModelKind kind) {
  return kind == ModelKind::TransE || kind == ModelKind::TransH || kind == ModelKind::TransR ||
         kind == ModelKind::TransD;
}

std::string_view to_string(Side side) { return side == Side::Head ? "head" : "tail"; }

ParamTable& Model::table(std::string_view name) {
  for (auto& p : params)
    if (p.name == name) return p;
  throw Error("model has no table '" + std::string(name) + "'");
}

const ParamTable& Model::table(std::string_view name) const {
  return const_cast<Model*>(this)->table(name);
}

Model make_model(ModelKind kind, std::size_t n_ent, std::size_t n_rel, std::size_t dim,
                 std::size_t rel_dim) {
  if (n_ent == 0 || n_rel == 0) throw Error("model needs at least one entity and one relation");
  if (dim == 0 || rel_dim == 0) throw Error("model dimensions must be positive");
  if (kind != ModelKind::TransR && kind != ModelKind::TransD) rel_dim = dim;

  Model m{kind, n_ent, n_rel, dim, rel_dim, {}};
  auto add = [&](std::string name, std::size_t rows, std::size_t cols) {
    m.params.push_back({std::move(name), rows, cols, std::vector<double>(rows * cols, 0.0)});
  };
  switch (kind) {
    case ModelKind::TransE:
    case ModelKind::DistMult:
      add("ent", n_ent, dim);
      add("rel", n_rel, dim);
      break;
    case ModelKind::TransH:
      add("ent", n_ent, dim);
      add("rel", n_rel, dim);
      add("normal", n_rel, dim);
      break;
    case ModelKind::TransR:
      add("ent", n_ent, dim);
      add("rel", n_rel, rel_dim);
      add("proj", n_rel, rel_dim * dim);
      break;
    case ModelKind::TransD:
      add("ent", n_ent, dim);
      add("ent_proj", n_ent, dim);
      add("rel", n_rel, rel_dim);
      add("rel_proj", n_rel, rel_dim);
      break;
    case ModelKind::RESCAL:
      add("ent", n_ent, dim);
      add("rel_mat", n_rel, dim * dim);
      break;
    case ModelKind::ComplEx:
      add("ent_re", n_ent, dim);
      add("ent_im", n_ent, dim);
      add("rel_re", n_rel, dim);
      add("rel_im", n_rel, dim);
      break;
  }
  return m;
}

Model init_model(ModelKind kind, std::size_t n_ent, std::size_t n_rel, std::size_t dim,
                 std::size_t rel_dim, std::uint64_t seed) {
  Model m = make_model(kind, n_ent, n_rel, dim, rel_dim);
  const double bound = 6.0 / std::sqrt(static_cast<double>(dim));
  Rng rng(seed);
  for (auto& p : m.params)
    for (double& v : p.data) v = rng.uniform(-bound, bound);
  normalize_parameters(m);
  return m;
}

void normalize_parameters(Model& model) {
  if (!is_translational(model.kind)) return;
  normalize_table(model.table("ent"));
  if (model.kind == ModelKind::TransH) normalize_table(model.table("normal"));
}

std::vector<double> score_batch(const Model& model, std::span<const Triple> triples) {
  std::vector<double> out(triples.size());
  score_batch_into(model, triples, out);
  return out;
}

void score_batch_into(const Model& model, std::span<const Triple> triples, std::span<double> out) {
  check_triples(model, triples);
  if (out.size() != triples.size()) throw Error("score output size does not match the batch");
  const auto& P = model.params;
  const std::size_t dr = model.rel_dim;
  std::vector<double> ph(dr), pt(dr);

  for (std::size_t i = 0; i < triples.size(); ++i) {
    const Triple& tr = triples[i];
    double acc = 0.0;
    switch (model.kind) {
      case ModelKind::TransE: {
        auto h = P[0].row(tr.head), r = P[1].row(tr.relation), t = P[0].row(tr.tail);
        for (std::size_t k = 0; k < h.size(); ++k) {
          const double x = (h[k] + r[k]) - t[k];
          acc += x * x;
        }
        out[i] = -std::sqrt(acc);
        continue;
      }
      case ModelKind::TransH:
        kernels::project_hyperplane(P[0].row(tr.head), P[2].row(tr.relation), ph);
        kernels::project_hyperplane(P[0].row(tr.tail), P[2].row(tr.relation), pt);
        break;
      case ModelKind::TransR:
        kernels::mat_vec(P[2].row(tr.relation), P[0].row(tr.head), ph);
        kernels::mat_vec(P[2].row(tr.relation), P[0].row(tr.tail), pt);
        break;
      case ModelKind::TransD:
        kernels::project_transd(P[0].row(tr.head), P[1].row(tr.head), P[3].row(tr.relation), ph);
        kernels::project_transd(P[0].row(tr.tail), P[1].row(tr.tail), P[3].row(tr.relation), pt);
        break;
      case ModelKind::RESCAL: {
        kernels::mat_vec(P[1].row(tr.relation), P[0].row(tr.tail), pt);
        out[i] = kernels::dot(P[0].row(tr.head), pt);
        continue;
      }
      case ModelKind::DistMult: {
        auto h = P[0].row(tr.head), r = P[1].row(tr.relation), t = P[0].row(tr.tail);
        for (std::size_t k = 0; k < h.size(); ++k) acc += (h[k] * r[k]) * t[k];
        out[i] = acc;
        continue;
      }
      case ModelKind::ComplEx: {
        auto a = P[0].row(tr.head), b = P[1].row(tr.head);
        auto c = P[2].row(tr.relation), d = P[3].row(tr.relation);
        auto e = P[0].row(tr.tail), f = P[1].row(tr.tail);
        for (std::size_t k = 0; k < a.size(); ++k) {
          const double re = kernels::cmul_re(a[k], b[k], c[k], d[k]);
          const double im = kernels::cmul_im(a[k], b[k], c[k], d[k]);
          acc += re * e[k] + im * f[k];
        }
        out[i] = acc;
        continue;
      }
    }
    // Projected translation models: -||proj(h) + r - proj(t)||^2.
    auto r = model.kind == ModelKind::TransD ? P[2].row(tr.relation) : P[1].row(tr.relation);
    for (std::size_t k = 0; k < dr; ++k) {
      const double x = (ph[k] + r[k]) - pt[k];
      acc += x * x;
    }
    out[i] = -acc;
  }
}

std::span<double> SparseRows::row(Index r) {
  if (r >= n_rows_) throw Error("gradient row out of range");
  auto [it, inserted] = slot_.try_emplace(r, rows_.size());
  if (inserted) {
    rows_.push_back(r);
    values_.resize(values_.size() + cols_, 0.0);
  }
  return {values_.data() + it->second * cols_, cols_};
}

Gradients zero_gradients(const Model& model) {
  Gradients g;
  for (const auto& p : model.params) g.tables.emplace_back(p.rows, p.cols);
  return g;
}

Gradients grad_batch(const Model& model, std::span<const Triple> triples,
                     std::span<const double> upstream) {
  Gradients g = zero_gradients(model);
  accumulate_gradients(model, triples, upstream, g);
  return g;
}

void accumulate_gradients(const Model& model, std::span<const Triple> triples,
                          std::span<const double> upstream, Gradients& grads) {
  check_triples(model, triples);
  if (upstream.size() != triples.size()) throw Error("upstream length does not match the batch");
  if (grads.tables.size() != model.params.size()) throw Error("gradient layout does not match");

  const auto& P = model.params;
  auto& G = grads.tables;
  const std::size_t d = model.dim, dr = model.rel_dim;
  std::vector<double> ph(dr), pt(dr), x(dr), gx(dr), tmp(std::max(d, dr * d));

  for (std::size_t i = 0; i < triples.size(); ++i) {
    const Triple& tr = triples[i];
    const double up = upstream[i];
    switch (model.kind) {
      case ModelKind::TransE: {
        auto h = P[0].row(tr.head), r = P[1].row(tr.relation), t = P[0].row(tr.tail);
        double sq = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
          x[k] = (h[k] + r[k]) - t[k];
          sq += x[k] * x[k];
        }
        const double norm = std::sqrt(sq);
        // Zero residual: the subgradient zero is used.
        const double c = norm > 0.0 ? -up / norm : 0.0;
        add_scaled(G[0], tr.head, x, c);
        add_scaled(G[1], tr.relation, x, c);
        add_scaled(G[0], tr.tail, x, -c);
        break;
      }
      case ModelKind::TransH: {
        auto h = P[0].row(tr.head), t = P[0].row(tr.tail);
        auto r = P[1].row(tr.relation), w = P[2].row(tr.relation);
        kernels::project_hyperplane(h, w, ph);
        kernels::project_hyperplane(t, w, pt);
        for (std::size_t k = 0; k < d; ++k) gx[k] = -2.0 * up * ((ph[k] + r[k]) - pt[k]);
        const double wg = kernels::dot(w, gx);
        for (std::size_t k = 0; k < d; ++k) tmp[k] = gx[k] - wg * w[k];
        add_scaled(G[0], tr.head, std::span(tmp.data(), d), 1.0);
        add_scaled(G[0], tr.tail, std::span(tmp.data(), d), -1.0);
        add_scaled(G[1], tr.relation, gx, 1.0);
        double w_tmh = 0.0;
        for (std::size_t k = 0; k < d; ++k) w_tmh += w[k] * (t[k] - h[k]);
        for (std::size_t k = 0; k < d; ++k) tmp[k] = w_tmh * gx[k] + wg * (t[k] - h[k]);
        add_scaled(G[2], tr.relation, std::span(tmp.data(), d), 1.0);
        break;
      }
      case ModelKind::TransR: {
        auto h = P[0].row(tr.head), t = P[0].row(tr.tail);
        auto r = P[1].row(tr.relation), m = P[2].row(tr.relation);
        kernels::mat_vec(m, h, ph);
        kernels::mat_vec(m, t, pt);
        for (std::size_t k = 0; k < dr; ++k) gx[k] = -2.0 * up * ((ph[k] + r[k]) - pt[k]);
        // M^T g
        std::fill(tmp.begin(), tmp.begin() + d, 0.0);
        for (std::size_t k = 0; k < dr; ++k)
          for (std::size_t j = 0; j < d; ++j) tmp[j] += m[k * d + j] * gx[k];
        add_scaled(G[0], tr.head, std::span(tmp.data(), d), 1.0);
        add_scaled(G[0], tr.tail, std::span(tmp.data(), d), -1.0);
        add_scaled(G[1], tr.relation, gx, 1.0);
        for (std::size_t k = 0; k < dr; ++k)
          for (std::size_t j = 0; j < d; ++j) tmp[k * d + j] = gx[k] * (h[j] - t[j]);
        add_scaled(G[2], tr.relation, std::span(tmp.data(), dr * d), 1.0);
        break;
      }
      case ModelKind::TransD: {
        auto h = P[0].row(tr.head), hp = P[1].row(tr.head);
        auto t = P[0].row(tr.tail), tp = P[1].row(tr.tail);
        auto r = P[2].row(tr.relation), rp = P[3].row(tr.relation);
        kernels::project_transd(h, hp, rp, ph);
        kernels::project_transd(t, tp, rp, pt);
        for (std::size_t k = 0; k < dr; ++k) gx[k] = -2.0 * up * ((ph[k] + r[k]) - pt[k]);
        const double grp = kernels::dot(gx, rp);
        const double sh = kernels::dot(hp, h), st = kernels::dot(tp, t);
        const std::size_t shared = std::min(d, dr);
        for (std::size_t j = 0; j < d; ++j) tmp[j] = grp * hp[j] + (j < shared ? gx[j] : 0.0);
        add_scaled(G[0], tr.head, std::span(tmp.data(), d), 1.0);
        for (std::size_t j = 0; j < d; ++j) tmp[j] = grp * tp[j] + (j < shared ? gx[j] : 0.0);
        add_scaled(G[0], tr.tail, std::span(tmp.data(), d), -1.0);
        add_scaled(G[1], tr.head, h, grp);
        add_scaled(G[1], tr.tail, t, -grp);
        add_scaled(G[2], tr.relation, gx, 1.0);
        add_scaled(G[3], tr.relation, gx, sh - st);
        break;
      }
      case ModelKind::RESCAL: {
        auto h = P[0].row(tr.head), t = P[0].row(tr.tail), m = P[1].row(tr.relation);
        kernels::mat_vec(m, t, pt);
        add_scaled(G[0], tr.head, pt, up);
        std::fill(tmp.begin(), tmp.begin() + d, 0.0);
        for (std::size_t a = 0; a < d; ++a)
          for (std::size_t b = 0; b < d; ++b) tmp[b] += h[a] * m[a * d + b];
        add_scaled(G[0], tr.tail, std::span(tmp.data(), d), up);
        auto gm = G[1].row(tr.relation);
        for (std::size_t a = 0; a < d; ++a)
          for (std::size_t b = 0; b < d; ++b) gm[a * d + b] += up * h[a] * t[b];
        break;
      }
      case ModelKind::DistMult: {
        auto h = P[0].row(tr.head), r = P[1].row(tr.relation), t = P[0].row(tr.tail);
        for (std::size_t k = 0; k < d; ++k) tmp[k] = r[k] * t[k];
        add_scaled(G[0], tr.head, std::span(tmp.data(), d), up);
        for (std::size_t k = 0; k < d; ++k) tmp[k] = h[k] * t[k];
        add_scaled(G[1], tr.relation, std::span(tmp.data(), d), up);
        for (std::size_t k = 0; k < d; ++k) tmp[k] = h[k] * r[k];
        add_scaled(G[0], tr.tail, std::span(tmp.data(), d), up);
        break;
      }
      case ModelKind::ComplEx: {
        auto a = P[0].row(tr.head), b = P[1].row(tr.head);
        auto c = P[2].row(tr.relation), dd = P[3].row(tr.relation);
        auto e = P[0].row(tr.tail), f = P[1].row(tr.tail);
        std::vector<double> v(d);
        auto emit = [&](SparseRows& g, Index row, auto&& fn) {
          for (std::size_t k = 0; k < d; ++k) v[k] = fn(k);
          add_scaled(g, row, v, up);
        };
        emit(G[0], tr.head, [&](std::size_t k) { return c[k] * e[k] + dd[k] * f[k]; });
        emit(G[1], tr.head, [&](std::size_t k) { return c[k] * f[k] - dd[k] * e[k]; });
        emit(G[2], tr.relation, [&](std::size_t k) { return a[k] * e[k] + b[k] * f[k]; });
        emit(G[3], tr.relation, [&](std::size_t k) { return a[k] * f[k] - b[k] * e[k]; });
        emit(G[0], tr.tail, [&](std::size_t k) { return kernels::cmul_re(a[k], b[k], c[k], dd[k]); });
        emit(G[1], tr.tail, [&](std::size_t k) { return kernels::cmul_im(a[k], b[k], c[k], dd[k]); });
        break;
      }
    }
  }
}

}  // namespace kge
