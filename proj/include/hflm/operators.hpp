#pragma once

#include "hflm/core.hpp"

#include <iosfwd>

namespace hflm {

/// Regression system for the Whittaker-basis historical model.
///
/// Row r corresponds to global time u = r + D - 1 (the first D-1 global
/// times lack a full lag window and are dropped). Its D nonzeros sit at
/// columns flat_index(s, u mod T) with values x(u - s), so lag windows near
/// the start of a replicate read the tail of the previous replicate.
struct DesignSystem {
  PanelSpec spec;
  SparseOperator Z;
  Vector Y;
  IndexVector row_day;
  IndexVector row_global;

  Index rows() const { return Z.rows(); }
};

/// Half-open range of design rows, [begin, end).
struct RowRange {
  Index begin = 0;
  Index end = 0;
  Index size() const { return end - begin; }
};

DesignSystem build_design(const SeriesPanel& x, const SeriesPanel& y);

/// Periodic first differences along t: row flat_index(s,t) encodes
/// beta(s, (t+1) mod T) - beta(s, t).
SparseOperator build_horizontal_penalty(const PanelSpec& spec);

/// First differences along s with a zero top boundary: (D-1)*T rows
/// beta(s+1,t) - beta(s,t) ordered by t then s, followed by T rows holding
/// beta(D-1,t) alone.
SparseOperator build_vertical_penalty(const PanelSpec& spec);

/// Column-major symmetric matrix with only the lower triangle stored.
using LowerSymmetric = Eigen::SparseMatrix<double, Eigen::ColMajor>;

/// Normal-equation pieces restricted to a block of design rows. Z'Z is
/// block diagonal (row u only touches day u mod T), so it is accumulated
/// per day as dense D x D outer products.
struct GramSystem {
  PanelSpec spec;
  RowRange rows;
  LowerSymmetric ZtZ;
  Vector ZtY;
  double YtY = 0.0;
};

GramSystem build_gram(const DesignSystem& design, RowRange rows);
GramSystem build_gram(const DesignSystem& design);

/// Lower triangle of P'P for a penalty operator P.
LowerSymmetric penalty_gram(const SparseOperator& penalty);

/// Z'Z, D_H'D_H and D_V'D_V for one dataset, reused across weight and
/// threshold evaluations.
struct PenaltySet {
  SparseOperator D_H;
  SparseOperator D_V;
  LowerSymmetric HtH;
  LowerSymmetric VtV;
};

PenaltySet build_penalties(const PanelSpec& spec);

/// Z b restricted to a row range.
Vector predict(const DesignSystem& design, const Vector& b, RowRange rows);

/// Triplet CSV (row,col,value) of the stored entries, for debugging.
void write_triplets(std::ostream& out, const SparseOperator& op);

}  // namespace hflm
