#include <doctest.h>

#include "divkit/entropy.hpp"
#include "helpers.hpp"

using namespace divkit;
using testing::kind_of;

namespace {

Matrix random_points(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  Rng rng(RunSeed{seed, 0});
  Matrix x(n, d);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  return x;
}

Vector random_simplex(Eigen::Index n, std::uint64_t seed, double offset = 0.05) {
  Rng rng(RunSeed{seed, 1});
  Vector q(n);
  for (Eigen::Index i = 0; i < n; ++i) q(i) = offset + rng.uniform();
  return q / q.sum();
}

}  // namespace

TEST_CASE("von Neumann entropy closed forms") {
  for (int n : {1, 3, 10}) {
    const Matrix a = Matrix::Identity(n, n) / n;
    CHECK(von_neumann_entropy(a) == doctest::Approx(std::log(n)).epsilon(1e-12));
  }
  Vector v(4);
  v << 1, 2, -1, 0.5;
  v.normalize();
  CHECK(von_neumann_entropy(Matrix(v * v.transpose())) == doctest::Approx(0.0).epsilon(1e-12));
  Vector s(3);
  s << 0.5, 0.25, 0.25;
  CHECK(von_neumann_entropy(Matrix(s.asDiagonal())) == doctest::Approx(1.0397207708).epsilon(1e-10));

  CHECK(kind_of([] { von_neumann_entropy(Matrix(Matrix::Identity(3, 3))); }) == ErrorKind::NotUnitTrace);
  Matrix neg = Matrix::Zero(2, 2);
  neg(0, 0) = 1.5;
  neg(1, 1) = -0.5;
  CHECK(kind_of([&] { von_neumann_entropy(neg); }) == ErrorKind::NotPSD);
  const SpectrumReport rep = spectrum(Matrix(s.asDiagonal()));
  CHECK(rep.eigenvalues(0) == doctest::Approx(0.5));
  CHECK(rep.trace == doctest::Approx(1.0));
}

TEST_CASE("vendi and rke on exact structures") {
  const Eigen::Index n = 9;
  const GramMatrix id = GramMatrix::from_values(Matrix::Identity(n, n));
  CHECK(vendi(id).vendi == doctest::Approx(n).epsilon(1e-12));
  CHECK(rke(id) == doctest::Approx(n).epsilon(1e-12));
  const GramMatrix ones = GramMatrix::from_values(Matrix::Ones(n, n));
  CHECK(vendi(ones).vendi == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rke(ones) == doctest::Approx(1.0).epsilon(1e-12));

  // r tight clusters far apart: K is block-diagonal with all-ones blocks, so
  // K/n has r eigenvalues 1/r.
  for (int r : {2, 3, 5}) {
    const int m = 6;
    Matrix x(r * m, 2);
    for (int c = 0; c < r; ++c)
      for (int i = 0; i < m; ++i) x.row(c * m + i) = Eigen::RowVector2d(50.0 * c, 1e-9 * i);
    const DiversityScore s = vendi(EmbeddingSet(x), KernelSpec::gaussian(1.0));
    CHECK(std::abs(s.vendi - r) < 1e-6);
    CHECK(std::abs(s.rke - r) < 1e-6);
    CHECK(s.log_vendi == doctest::Approx(std::log(s.vendi)));
  }

  EntropyOptions small;
  small.size_cap = 5;
  CHECK(kind_of([&] { vendi(id, small); }) == ErrorKind::SizeCapExceeded);
}

TEST_CASE("vendi agrees with an eigen oracle and is bounded") {
  const Matrix x = random_points(40, 3, 5);
  const GramMatrix k = gram(x, KernelSpec::gaussian(0.8));
  const DiversityScore s = vendi(k);
  CHECK(s.log_vendi == doctest::Approx(testing::entropy_oracle(k.values() / 40.0)).epsilon(1e-10));
  CHECK(s.vendi >= 1.0);
  CHECK(s.vendi <= 40.0);
  CHECK(s.rke <= s.vendi + 1e-9);  // order-2 Renyi entropy never exceeds Shannon
  CHECK(s.rke == doctest::Approx(1600.0 / k.values().squaredNorm()));
}

TEST_CASE("weighted gram") {
  const Matrix x = random_points(8, 2, 6);
  const GramMatrix k = gram(x, KernelSpec::gaussian(1.0));
  CHECK((weighted_gram(k, WeightVector::uniform(8)) - k.values() / 8.0).cwiseAbs().maxCoeff() < 1e-15);
  const Matrix pm = weighted_gram(k, WeightVector::point_mass(8, 3));
  CHECK(pm.trace() == doctest::Approx(1.0));
  CHECK(pm(3, 3) == 1.0);
  CHECK(pm.cwiseAbs().sum() == doctest::Approx(1.0));
  const Vector q = random_simplex(8, 6);
  const GramMatrix id = GramMatrix::from_values(Matrix::Identity(8, 8));
  CHECK((weighted_gram(id, WeightVector(q)) - Matrix(q.asDiagonal())).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(WeightVector(Vector::Constant(4, 3.0))[2] == doctest::Approx(0.25));
}

TEST_CASE("vne_weighted") {
  const Eigen::Index n = 20;
  const GramMatrix id = GramMatrix::from_values(Matrix::Identity(n, n));
  CHECK(vne_weighted(id, WeightVector::uniform(n)) == doctest::Approx(std::log(20.0)).epsilon(1e-12));
  const GramMatrix k = gram(random_points(n, 4, 7), KernelSpec::gaussian(1.5));
  CHECK(std::abs(vne_weighted(k, WeightVector::point_mass(n, 4))) < 1e-12);

  // Feature oracle: K = Phi Phi^T with Phi = U sqrt(Lambda); the weighted
  // covariance Phi^T diag(q) Phi shares its nonzero spectrum with A(q).
  Eigen::SelfAdjointEigenSolver<Matrix> es(k.values());
  const Matrix phi = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  CHECK((phi * phi.transpose() - k.values()).cwiseAbs().maxCoeff() < 1e-10);
  const Vector q = random_simplex(n, 7);
  const Matrix cov = phi.transpose() * q.asDiagonal() * phi;
  CHECK(vne_weighted(k, WeightVector(q)) == doctest::Approx(testing::entropy_oracle(cov)).epsilon(1e-9));
}

TEST_CASE("vne gradient") {
  const Eigen::Index n = 15;
  const GramMatrix id = GramMatrix::from_values(Matrix::Identity(n, n));
  const Vector q = random_simplex(n, 8);
  const Vector g = vne_gradient(id, WeightVector(q));
  for (Eigen::Index i = 0; i < n; ++i) CHECK(g(i) == doctest::Approx(-(std::log(q(i)) + 1.0)).epsilon(1e-10));

  const Vector gs = vne_gradient(GramMatrix::from_values(Matrix::Ones(n, n)), WeightVector::uniform(n));
  CHECK(gs.maxCoeff() - gs.minCoeff() < 1e-10);

  // Central differences with step 1e-6 along the simplex tangent e_i - 1/n.
  const GramMatrix k = gram(random_points(n, 3, 8), KernelSpec::gaussian(1.2));
  const Vector grad = vne_gradient(k, WeightVector(q));
  auto h_of = [&](const Vector& w) {
    const Vector s = w.cwiseSqrt();
    return testing::entropy_oracle(s.asDiagonal() * k.values() * s.asDiagonal());
  };
  double worst = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    Vector dir = Vector::Constant(n, -1.0 / n);
    dir(i) += 1.0;
    const double step = 1e-6;
    const double fd = (h_of(q + step * dir) - h_of(q - step * dir)) / (2 * step);
    const double an = grad.dot(dir);
    worst = std::max(worst, std::abs(fd - an) / std::max(1.0, std::abs(fd)));
  }
  CHECK(worst <= 1e-5);

  const VneEvaluation ev = vne_evaluate(k, WeightVector(q));
  CHECK(ev.entropy == doctest::Approx(vne_weighted(k, WeightVector(q))));
  CHECK(ev.gradient.isApprox(grad));
}

TEST_CASE("vne gradient on a zero weight") {
  const Eigen::Index n = 6;
  const GramMatrix k = gram(random_points(n, 2, 9), KernelSpec::gaussian(1.0));
  Vector q = random_simplex(n, 9);
  q(2) = 0.0;
  q /= q.sum();
  const Vector g = vne_gradient(k, WeightVector(q));
  CHECK(g.allFinite());
  // The one-sided directional derivative into the empty coordinate is large
  // and positive: adding mass where there is none raises entropy steeply.
  const Vector pos = g.cwiseProduct((q.array() > 0).cast<double>().matrix());
  CHECK(g(2) > pos.maxCoeff());
}

TEST_CASE("inverse rke weighted") {
  const Eigen::Index n = 7;
  const GramMatrix k = gram(random_points(n, 2, 10), KernelSpec::gaussian(1.0));
  const GramMatrix k2 = hadamard_square(k);
  CHECK(inverse_rke_weighted(k2, WeightVector::point_mass(n, 1)) == doctest::Approx(1.0));
  const GramMatrix id = GramMatrix::from_values(Matrix::Identity(n, n));
  CHECK(inverse_rke_weighted(hadamard_square(id), WeightVector::uniform(n)) == doctest::Approx(1.0 / n));
  CHECK(inverse_rke_weighted(k2, WeightVector::uniform(n)) == doctest::Approx(1.0 / rke(k)).epsilon(1e-12));
}
