#include "hflm/operators.hpp"

#include <Eigen/Dense>

#include <ostream>
#include <vector>

namespace hflm {

namespace {

using Triplet = Eigen::Triplet<double>;

void require_anomaly(const SeriesPanel& panel, const char* name) {
  if (panel.kind != SeriesKind::anomaly) {
    throw DomainError(std::string(name) + " panel must be a seasonal anomaly");
  }
  if (panel.values.size() != panel.spec.observation_count()) {
    throw DomainError(std::string(name) + " panel length does not match its spec");
  }
}

}  // namespace

DesignSystem build_design(const SeriesPanel& x, const SeriesPanel& y) {
  if (!(x.spec == y.spec)) throw DomainError("driver and response panels have different specs");
  require_anomaly(x, "driver");
  require_anomaly(y, "response");

  const auto& spec = x.spec;
  const Index T = spec.period_length();
  const Index D = spec.max_lag_count();
  const Index rows = spec.usable_rows();

  DesignSystem sys{spec, SparseOperator(rows, spec.coefficient_count()), Vector(rows),
                   IndexVector(rows), IndexVector(rows)};
  sys.Z.reserve(Eigen::VectorXi::Constant(rows, static_cast<int>(D)));
  for (Index r = 0; r < rows; ++r) {
    const Index u = r + D - 1;
    const Index t = u % T;
    for (Index s = 0; s < D; ++s) sys.Z.insert(r, t * D + s) = x.values[u - s];
    sys.Y[r] = y.values[u];
    sys.row_day[r] = t;
    sys.row_global[r] = u;
  }
  sys.Z.makeCompressed();
  return sys;
}

SparseOperator build_horizontal_penalty(const PanelSpec& spec) {
  const Index T = spec.period_length();
  const Index D = spec.max_lag_count();
  const Index K = spec.coefficient_count();
  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(2 * K));
  if (T > 1) {
    for (Index t = 0; t < T; ++t) {
      for (Index s = 0; s < D; ++s) {
        const Index row = flat_index(s, t, spec);
        entries.emplace_back(row, row, -1.0);
        entries.emplace_back(row, flat_index(s, (t + 1) % T, spec), 1.0);
      }
    }
  }
  SparseOperator op(K, K);
  op.setFromTriplets(entries.begin(), entries.end());
  return op;
}

SparseOperator build_vertical_penalty(const PanelSpec& spec) {
  const Index T = spec.period_length();
  const Index D = spec.max_lag_count();
  const Index K = spec.coefficient_count();
  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(2 * K));
  Index row = 0;
  for (Index t = 0; t < T; ++t) {
    for (Index s = 0; s + 1 < D; ++s, ++row) {
      entries.emplace_back(row, flat_index(s, t, spec), -1.0);
      entries.emplace_back(row, flat_index(s + 1, t, spec), 1.0);
    }
  }
  for (Index t = 0; t < T; ++t, ++row) entries.emplace_back(row, flat_index(D - 1, t, spec), 1.0);
  SparseOperator op(K, K);
  op.setFromTriplets(entries.begin(), entries.end());
  return op;
}

GramSystem build_gram(const DesignSystem& design, RowRange rows) {
  const auto& spec = design.spec;
  const Index T = spec.period_length();
  const Index D = spec.max_lag_count();
  if (rows.begin < 0 || rows.end > design.rows() || rows.begin > rows.end) {
    throw IndexError("row range outside the design");
  }

  std::vector<Eigen::MatrixXd> blocks(static_cast<std::size_t>(T), Eigen::MatrixXd::Zero(D, D));
  Vector ZtY = Vector::Zero(spec.coefficient_count());
  double YtY = 0.0;
  Vector window(D);
  for (Index r = rows.begin; r < rows.end; ++r) {
    const Index t = design.row_day[r];
    Index s = 0;
    for (SparseOperator::InnerIterator it(design.Z, r); it; ++it, ++s) window[s] = it.value();
    blocks[static_cast<std::size_t>(t)].selfadjointView<Eigen::Lower>().rankUpdate(window);
    ZtY.segment(t * D, D) += design.Y[r] * window;
    YtY += design.Y[r] * design.Y[r];
  }

  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(T * D * (D + 1) / 2));
  for (Index t = 0; t < T; ++t) {
    const auto& block = blocks[static_cast<std::size_t>(t)];
    for (Index j = 0; j < D; ++j) {
      for (Index i = j; i < D; ++i) entries.emplace_back(t * D + i, t * D + j, block(i, j));
    }
  }
  LowerSymmetric ZtZ(spec.coefficient_count(), spec.coefficient_count());
  ZtZ.setFromTriplets(entries.begin(), entries.end());
  return {spec, rows, std::move(ZtZ), std::move(ZtY), YtY};
}

GramSystem build_gram(const DesignSystem& design) {
  return build_gram(design, RowRange{0, design.rows()});
}

LowerSymmetric penalty_gram(const SparseOperator& penalty) {
  LowerSymmetric full = LowerSymmetric(penalty.transpose()) * penalty;
  LowerSymmetric lower = full.triangularView<Eigen::Lower>();
  lower.prune(0.0);
  return lower;
}

PenaltySet build_penalties(const PanelSpec& spec) {
  PenaltySet set{build_horizontal_penalty(spec), build_vertical_penalty(spec), {}, {}};
  set.HtH = penalty_gram(set.D_H);
  set.VtV = penalty_gram(set.D_V);
  return set;
}

Vector predict(const DesignSystem& design, const Vector& b, RowRange rows) {
  return design.Z.middleRows(rows.begin, rows.size()) * b;
}

void write_triplets(std::ostream& out, const SparseOperator& op) {
  out << "row,col,value\n";
  for (Index r = 0; r < op.outerSize(); ++r) {
    for (SparseOperator::InnerIterator it(op, r); it; ++it) {
      out << it.row() << ',' << it.col() << ',' << it.value() << '\n';
    }
  }
}

}  // namespace hflm
