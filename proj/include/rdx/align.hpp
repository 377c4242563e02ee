#pragma once

#include "rdx/core.hpp"

namespace rdx {

inline Matrix center_columns(const Matrix& x) { return x.rowwise() - x.colwise().mean(); }

/// Linear CKA: ||Y^T X||_F^2 / (||X^T X||_F ||Y^T Y||_F) on column-centered
/// inputs.
inline double linear_cka(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows()) {
    throw ValidationError("CKA inputs differ in rows: " + std::to_string(x.rows()) + " vs " +
                          std::to_string(y.rows()));
  }
  if (x.rows() < 2) throw ValidationError("CKA needs at least 2 rows");
  if (!x.allFinite() || !y.allFinite()) throw ValidationError("CKA input has non-finite entries");
  const Matrix xc = center_columns(x);
  const Matrix yc = center_columns(y);
  const double xx = (xc.transpose() * xc).norm();
  const double yy = (yc.transpose() * yc).norm();
  if (!(xx > 0.0) || !(yy > 0.0)) {
    throw DegenerateInputError("CKA of a zero-variance representation");
  }
  const double xy = (yc.transpose() * xc).squaredNorm();
  return xy / (xx * yy);
}

struct CkaLossGradient {
  double loss = 0.0;  // 1 - CKA(a M, b)
  Matrix gradient;    // d loss / d M
};

/// Loss 1 - CKA(a M, b) and its analytic gradient with respect to M.
///
/// With X = Hc a M, Y = Hc b, f = ||Y^T X||^2, g = ||X^T X||, h = ||Y^T Y||:
///   dCKA/dX = (2 Y (Y^T X) / g - 2 f X (X^T X) / g^3) / h
/// and the gradient flows back through X = (Hc a) M.
inline CkaLossGradient cka_loss_gradient(const Matrix& a, const Matrix& m, const Matrix& b) {
  const Matrix ac = center_columns(a);
  const Matrix yc = center_columns(b);
  const Matrix x = ac * m;
  const Matrix xtx = x.transpose() * x;
  const Matrix ytx = yc.transpose() * x;
  const double g = xtx.norm();
  const double h = (yc.transpose() * yc).norm();
  if (!(g > 0.0) || !(h > 0.0)) {
    throw DegenerateInputError("CKA of a zero-variance representation");
  }
  const double f = ytx.squaredNorm();
  const Matrix dx = (2.0 / (g * h)) * (yc * ytx) - (2.0 * f / (g * g * g * h)) * (x * xtx);
  return {1.0 - f / (g * h), -(ac.transpose() * dx)};
}

struct AlignmentStep {
  int step = 0;
  double train_loss = 0.0;
  double val_cka = 0.0;

  bool operator==(const AlignmentStep&) const = default;
};

/// Linear map M (d_A x d_A) taking representation A toward B.
struct AlignmentMap {
  Matrix matrix;
  double best_val_cka = 0.0;
  int best_step = 0;
  std::vector<AlignmentStep> train_trace;
  std::uint64_t split_seed = 0;
};

struct AlignmentOptions {
  int steps = 100;
  double lr = 0.001;
  double train_frac = 0.7;
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
};

/// Minimizes 1 - CKA(A_train M, B_train) with full-batch Adam from M = I and
/// keeps the M with the best validation CKA (step 0 included).
inline AlignmentMap fit_alignment(const EmbeddingMatrix& a, const EmbeddingMatrix& b,
                                  const AlignmentOptions& opts = {}) {
  a.validate();
  b.validate();
  if (a.items != b.items) throw ValidationError("alignment inputs cover different item lists");
  const Index n = a.size();
  if (n < 10) throw ValidationError("alignment needs n >= 10, got " + std::to_string(n));
  if (opts.steps < 0) throw ValidationError("steps must be >= 0");
  if (!(opts.train_frac > 0.0 && opts.train_frac < 1.0)) {
    throw ValidationError("train_frac must lie in (0, 1)");
  }
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  Rng rng(opts.seed);
  rng.shuffle(perm.begin(), perm.end());
  auto n_train = static_cast<Index>(std::llround(opts.train_frac * static_cast<double>(n)));
  n_train = std::clamp<Index>(n_train, 2, n - 2);
  std::vector<Index> train_idx(perm.begin(), perm.begin() + n_train);
  std::vector<Index> val_idx(perm.begin() + n_train, perm.end());
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(val_idx.begin(), val_idx.end());
  const Matrix a_train = a.data(train_idx, Eigen::all);
  const Matrix b_train = b.data(train_idx, Eigen::all);
  const Matrix a_val = a.data(val_idx, Eigen::all);
  const Matrix b_val = b.data(val_idx, Eigen::all);

  const Index d = a.dim();
  Matrix m = Matrix::Identity(d, d);
  Matrix first = Matrix::Zero(d, d);
  Matrix second = Matrix::Zero(d, d);

  AlignmentMap out;
  out.split_seed = opts.seed;
  auto grad = cka_loss_gradient(a_train, m, b_train);
  double val = linear_cka(a_val * m, b_val);
  out.train_trace.push_back({0, grad.loss, val});
  out.matrix = m;
  out.best_val_cka = val;
  out.best_step = 0;

  for (int step = 1; step <= opts.steps; ++step) {
    if (!grad.gradient.allFinite()) {
      throw ConvergenceError("non-finite CKA gradient at step " + std::to_string(step));
    }
    first = opts.adam_beta1 * first + (1.0 - opts.adam_beta1) * grad.gradient;
    second = opts.adam_beta2 * second +
             (1.0 - opts.adam_beta2) * grad.gradient.cwiseProduct(grad.gradient);
    const double c1 = 1.0 - std::pow(opts.adam_beta1, step);
    const double c2 = 1.0 - std::pow(opts.adam_beta2, step);
    m.array() -= opts.lr * (first.array() / c1) /
                 ((second.array() / c2).sqrt() + opts.adam_eps);
    grad = cka_loss_gradient(a_train, m, b_train);
    val = linear_cka(a_val * m, b_val);
    out.train_trace.push_back({step, grad.loss, val});
    if (val > out.best_val_cka) {
      out.best_val_cka = val;
      out.best_step = step;
      out.matrix = m;
    }
  }
  return out;
}

/// A M, with the model id marked as aligned.
inline EmbeddingMatrix apply_alignment(const EmbeddingMatrix& a, const AlignmentMap& map) {
  if (map.matrix.rows() != a.dim() || map.matrix.cols() != a.dim()) {
    throw ValidationError("alignment map is " + std::to_string(map.matrix.rows()) + "x" +
                          std::to_string(map.matrix.cols()) + " but embedding has d=" +
                          std::to_string(a.dim()));
  }
  return {a.model_id + "′", a.items, a.data * map.matrix};
}

}  // namespace rdx
