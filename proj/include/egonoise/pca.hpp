#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "egonoise/error.hpp"
#include "egonoise/scm.hpp"

namespace egonoise {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ReducedVector {
  Eigen::VectorXd values;
};

// Affine orthogonal projection v -> basis * (v - mean).
struct PcaModel {
  Eigen::VectorXd mean;            // P
  RowMatrix basis;                 // I x P, orthonormal rows
  Eigen::VectorXd explained_variance;  // I, non-increasing, population convention

  std::size_t component_count() const noexcept { return static_cast<std::size_t>(basis.rows()); }
  std::size_t dimension() const noexcept { return static_cast<std::size_t>(mean.size()); }

  bool operator==(const PcaModel& o) const {
    return mean.size() == o.mean.size() && basis.rows() == o.basis.rows() &&
           basis.cols() == o.basis.cols() && mean == o.mean && basis == o.basis &&
           explained_variance == o.explained_variance;
  }
};

namespace detail {

// Flips a row so its largest-magnitude coordinate (first on ties) is positive.
inline void fix_sign(Eigen::Ref<Eigen::RowVectorXd> row) {
  Eigen::Index best = 0;
  double best_abs = -1.0;
  for (Eigen::Index p = 0; p < row.size(); ++p) {
    const double a = std::abs(row[p]);
    if (a > best_abs) {
      best_abs = a;
      best = p;
    }
  }
  if (row[best] < 0.0) row = -row;
}

// Removes the components of `row` along rows [0, upto) of `basis`; returns the
// remaining norm.
inline double orthogonalize(RowMatrix& basis, Eigen::Index upto, Eigen::Ref<Eigen::RowVectorXd> row) {
  for (int pass = 0; pass < 2; ++pass)
    for (Eigen::Index r = 0; r < upto; ++r) row -= row.dot(basis.row(r)) * basis.row(r);
  return row.norm();
}

}  // namespace detail

// Trains on the rows of `data` (J x P). The J x J Gram matrix of the centered
// rows is diagonalized instead of the P x P covariance. Components whose
// variance is numerically zero are completed with an orthonormal set from
// the canonical basis so the rows stay orthonormal. On return `data` holds
// the centered rows.
inline PcaModel train_in_place(RowMatrix& data, std::size_t component_count) {
  const Eigen::Index J = data.rows();
  const Eigen::Index P = data.cols();
  if (J < 2) throw InvalidArgument("PCA needs at least 2 vectors, got " + std::to_string(J));
  const auto I = static_cast<Eigen::Index>(component_count);
  if (I < 1 || I > std::min<Eigen::Index>(J - 1, P))
    throw InvalidArgument("PCA component count " + std::to_string(component_count) +
                          " must be in [1, min(J - 1, P)] = [1, " +
                          std::to_string(std::min<Eigen::Index>(J - 1, P)) + "]");

  PcaModel model;
  model.mean = data.colwise().mean().transpose();
  data.rowwise() -= model.mean.transpose();

  const Eigen::MatrixXd gram = data * data.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  if (eig.info() != Eigen::Success) throw Error("Gram matrix eigendecomposition failed");
  const Eigen::VectorXd& mu = eig.eigenvalues();  // ascending
  const double mu_max = std::max(mu[J - 1], 0.0);
  const double tol = 1e-10 * mu_max;

  model.basis.resize(I, P);
  model.explained_variance.resize(I);
  Eigen::Index canonical = 0;
  for (Eigen::Index i = 0; i < I; ++i) {
    const Eigen::Index src = J - 1 - i;
    const double m = mu[src];
    Eigen::RowVectorXd row;
    double norm = 0.0;
    if (m > tol && mu_max > 0.0) {
      row = (data.transpose() * eig.eigenvectors().col(src)).transpose() / std::sqrt(m);
      norm = detail::orthogonalize(model.basis, i, row);
      model.explained_variance[i] = m / static_cast<double>(J);
    }
    if (norm < 0.5) {
      model.explained_variance[i] = 0.0;
      while (norm < 0.5) {
        if (canonical >= P) throw Error("could not complete an orthonormal PCA basis");
        row = Eigen::RowVectorXd::Unit(P, canonical++);
        norm = detail::orthogonalize(model.basis, i, row);
      }
    }
    row /= norm;
    detail::fix_sign(row);
    model.basis.row(i) = row;
  }
  return model;
}

inline PcaModel train(RowMatrix data, std::size_t component_count) {
  return train_in_place(data, component_count);
}

inline PcaModel train(std::span<const Supervector> vectors, std::size_t component_count) {
  if (vectors.size() < 2)
    throw InvalidArgument("PCA needs at least 2 vectors, got " + std::to_string(vectors.size()));
  const Eigen::Index P = vectors.front().values.size();
  RowMatrix data(static_cast<Eigen::Index>(vectors.size()), P);
  for (std::size_t j = 0; j < vectors.size(); ++j) {
    if (vectors[j].values.size() != P) throw ShapeError("supervectors differ in length");
    data.row(static_cast<Eigen::Index>(j)) = vectors[j].values.transpose();
  }
  return train(std::move(data), component_count);
}

inline ReducedVector project(const PcaModel& model, const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (v.size() != model.mean.size())
    throw ShapeError("vector length " + std::to_string(v.size()) + " does not match PCA input " +
                     std::to_string(model.mean.size()));
  return {model.basis * (v - model.mean)};
}

inline ReducedVector project(const PcaModel& model, const Supervector& v) {
  return project(model, v.values);
}

inline Eigen::VectorXd reconstruct(const PcaModel& model, const ReducedVector& r) {
  return model.mean + model.basis.transpose() * r.values;
}

}  // namespace egonoise
