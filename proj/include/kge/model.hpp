#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kge/graph.hpp"

namespace kge {

enum class ModelKind : std::uint32_t {
  TransE = 0,
  TransH = 1,
  TransR = 2,
  TransD = 3,
  RESCAL = 4,
  DistMult = 5,
  ComplEx = 6,
};

inline constexpr ModelKind kAllModelKinds[] = {ModelKind::TransE, ModelKind::TransH,
                                               ModelKind::TransR, ModelKind::TransD,
                                               ModelKind::RESCAL, ModelKind::DistMult,
                                               ModelKind::ComplEx};

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

// Translation models constrain entity norms and use a distance score.
bool is_translational(ModelKind kind);

enum class Side { Head, Tail };

std::string_view to_string(Side side);

// Dense row-major table: one row per entity or relation.
struct ParamTable {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }

  friend bool operator==(const ParamTable&, const ParamTable&) = default;
};

// Parameter tables per kind, in declaration (and checkpoint) order:
//   TransE    ent[n_ent,d]  rel[n_rel,d]
//   TransH    ent[n_ent,d]  rel[n_rel,d]  normal[n_rel,d]
//   TransR    ent[n_ent,d]  rel[n_rel,d_r]  proj[n_rel,d_r*d]
//   TransD    ent[n_ent,d]  ent_proj[n_ent,d]  rel[n_rel,d_r]  rel_proj[n_rel,d_r]
//   RESCAL    ent[n_ent,d]  rel_mat[n_rel,d*d]
//   DistMult  ent[n_ent,d]  rel[n_rel,d]
//   ComplEx   ent_re[n_ent,d]  ent_im[n_ent,d]  rel_re[n_rel,d]  rel_im[n_rel,d]
struct Model {
  ModelKind kind = ModelKind::TransE;
  std::size_t n_ent = 0;
  std::size_t n_rel = 0;
  std::size_t dim = 0;      // entity embedding dimension d
  std::size_t rel_dim = 0;  // relation space dimension d_r (== d except TransR/TransD)
  std::vector<ParamTable> params;

  ParamTable& table(std::string_view name);
  const ParamTable& table(std::string_view name) const;

  friend bool operator==(const Model&, const Model&) = default;
};

// Empty model with zero-filled tables of the right shapes.
Model make_model(ModelKind kind, std::size_t n_ent, std::size_t n_rel, std::size_t dim,
                 std::size_t rel_dim);

// Uniform entries in [-6/sqrt(d), 6/sqrt(d)], then normalize_parameters.
Model init_model(ModelKind kind, std::size_t n_ent, std::size_t n_rel, std::size_t dim,
                 std::size_t rel_dim, std::uint64_t seed);

// Higher is more plausible. Throws Error on an index outside the model.
std::vector<double> score_batch(const Model& model, std::span<const Triple> triples);
void score_batch_into(const Model& model, std::span<const Triple> triples, std::span<double> out);

// Unit L2 norm for entity rows of translation models and for TransH normals.
// Rows already within 1e-12 of unit norm are left untouched, which makes the
// operation bitwise idempotent. Zero rows stay zero.
void normalize_parameters(Model& model);

// Per-batch cache for lp_score_all. Projection models hold one projected copy
// of the entity table per distinct relation of the batch; projection-free
// models read the raw tables directly.
struct PreparedCandidates {
  Side side = Side::Tail;
  std::vector<Triple> batch;
  std::size_t width = 0;

  // Distinct relations of the batch and their projected entity tables
  // (n_ent x width each). Empty for projection-free models.
  std::vector<Index> relations;
  std::vector<std::vector<double>> projected;
  std::vector<std::size_t> slot;  // fact -> index into projected

  // Per-fact vector for the fixed side of each fact (batch x query_width),
  // e.g. proj(h) + r for a tail test under TransH.
  std::size_t query_width = 0;
  std::vector<double> queries;

  std::span<const double> query(std::size_t i) const {
    return {queries.data() + i * query_width, query_width};
  }
};

PreparedCandidates lp_prep_cands(const Model& model, std::span<const Triple> batch, Side side);

// batch x n_ent row-major matrix. Entry (i, e) is the score of (e, r_i, t_i)
// for head tests and of (h_i, r_i, e) for tail tests, bitwise equal to
// score_batch on the materialized triple.
void lp_score_all(const Model& model, const PreparedCandidates& prepared, Side side,
                  std::span<double> out);
std::vector<double> lp_score_all(const Model& model, const PreparedCandidates& prepared,
                                 Side side);

// Sparse gradient of one parameter table: only touched rows are stored.
class SparseRows {
 public:
  SparseRows() = default;
  SparseRows(std::size_t n_rows, std::size_t cols) : n_rows_(n_rows), cols_(cols) {}

  // Zero-initialized on first touch.
  std::span<double> row(Index r);
  std::span<const double> row_at(std::size_t slot) const {
    return {values_.data() + slot * cols_, cols_};
  }
  bool has(Index r) const { return slot_.contains(r); }
  std::span<const Index> rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t n_rows() const { return n_rows_; }

 private:
  std::size_t n_rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Index> rows_;
  std::vector<double> values_;
  std::unordered_map<Index, std::size_t> slot_;
};

struct Gradients {
  std::vector<SparseRows> tables;  // parallel to Model::params
};

Gradients zero_gradients(const Model& model);

// d(sum_i upstream_i * score_i)/d(theta) for every parameter row the batch
// touches, accumulated into grads.
void accumulate_gradients(const Model& model, std::span<const Triple> triples,
                          std::span<const double> upstream, Gradients& grads);
Gradients grad_batch(const Model& model, std::span<const Triple> triples,
                     std::span<const double> upstream);

}  // namespace kge
