#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "fadkit/error.hpp"
#include "fadkit/gaussian_stats.hpp"

namespace fadkit {

namespace {

// Applies the clamp rule to a symmetric eigen-spectrum in place.
void clamp_spectrum(Eigen::VectorXd& eigenvalues, unsigned& flags, const char* what) {
  const double scale = eigenvalues.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    double& v = eigenvalues[i];
    if (v >= 0) continue;
    if (v < -kEigenClampTolerance * scale) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "numerical breakdown: " << what << " has eigenvalue " << v
          << " below -" << kEigenClampTolerance << " * " << scale;
      throw Error(msg.str());
    }
    v = 0;
    flags |= kNegativeEigsClamped;
  }
}

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> decompose(const Eigen::MatrixXd& m,
                                                         int options, const char* what) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, options);
  if (es.info() != Eigen::Success)
    throw Error(std::string("eigendecomposition failed for ") + what);
  return es;
}

}  // namespace

std::vector<std::string> flag_names(unsigned flags) {
  std::vector<std::string> out;
  if (flags & kNegativeEigsClamped) out.emplace_back("negative-eigs-clamped");
  if (flags & kTraceClamped) out.emplace_back("trace-clamped");
  return out;
}

std::string FadScore::flag_string() const {
  std::string out;
  for (const auto& name : flag_names(flags)) {
    if (!out.empty()) out += '|';
    out += name;
  }
  return out;
}

double trace_sqrt_product(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                          unsigned& flags) {
  auto es_a = decompose(a, Eigen::ComputeEigenvectors, "reference covariance");
  Eigen::VectorXd lambda_a = es_a.eigenvalues();
  clamp_spectrum(lambda_a, flags, "reference covariance");
  const Eigen::MatrixXd& v = es_a.eigenvectors();
  const Eigen::MatrixXd sqrt_a = v * lambda_a.cwiseSqrt().asDiagonal() * v.transpose();

  Eigen::MatrixXd inner = sqrt_a * b * sqrt_a;
  inner = 0.5 * (inner + inner.transpose()).eval();
  auto es_inner = decompose(inner, Eigen::EigenvaluesOnly, "sqrt(ref) * test * sqrt(ref)");
  Eigen::VectorXd lambda = es_inner.eigenvalues();
  clamp_spectrum(lambda, flags, "sqrt(ref) * test * sqrt(ref)");
  return lambda.cwiseSqrt().sum();
}

FadScore frechet_distance(const GaussianFit& ref, const GaussianFit& test) {
  ref.validate();
  test.validate();
  if (ref.dim() != test.dim())
    throw Error("dimension mismatch: reference dim " + std::to_string(ref.dim()) +
                ", test dim " + std::to_string(test.dim()));

  FadScore score;
  score.mean_term = (ref.mean - test.mean).squaredNorm();
  const double tr_sqrt = trace_sqrt_product(ref.cov, test.cov, score.flags);
  score.trace_term = ref.cov.trace() + test.cov.trace() - 2.0 * tr_sqrt;
  const double total = score.mean_term + score.trace_term;
  if (total < 0) {
    score.value = 0;
    score.flags |= kTraceClamped;
  } else {
    score.value = total;
  }
  return score;
}

FadScore frechet_distance(const GaussianStats& ref, const GaussianStats& test) {
  return frechet_distance(ref.fit(), test.fit());
}

}  // namespace fadkit
