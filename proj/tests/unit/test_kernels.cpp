#include <doctest.h>

#include "divkit/kernels.hpp"
#include "helpers.hpp"

using namespace divkit;
using testing::kind_of;

TEST_CASE("gaussian kernel") {
  const Eigen::Vector2d x(0.3, -0.2);
  CHECK(gaussian_kernel(x, x, 0.7) == 1.0);
  const double bw = 0.8;
  const Eigen::Vector2d y = x + Eigen::Vector2d(bw * std::sqrt(2.0), 0.0);
  CHECK(gaussian_kernel(x, y, bw) == doctest::Approx(0.3678794412).epsilon(1e-10));
  CHECK(gaussian_kernel(Eigen::Vector2d(0, 0), Eigen::Vector2d(3, 4), 5.0) ==
        doctest::Approx(0.6065306597).epsilon(1e-10));
  CHECK(kind_of([&] { gaussian_kernel(x, y, 0.0); }) == ErrorKind::NonPositiveBandwidth);
  CHECK(kind_of([] { KernelSpec::gaussian(-1.0).validate(); }) == ErrorKind::NonPositiveBandwidth);
}

TEST_CASE("cosine kernel") {
  const Eigen::Vector2d x(2.0, 1.0);
  CHECK(cosine_kernel(x, x) == doctest::Approx(1.0));
  CHECK(cosine_kernel(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 3)) == 0.0);
  CHECK(cosine_kernel(Eigen::Vector2d(1, 0), Eigen::Vector2d(-1, 0)) == -1.0);
  CHECK(kind_of([&] { cosine_kernel(x, Eigen::Vector2d::Zero()); }) == ErrorKind::ZeroVector);
}

TEST_CASE("kernel spec json") {
  for (const KernelSpec s : {KernelSpec::gaussian(0.25), KernelSpec::cosine()})
    CHECK(KernelSpec::from_json(s.to_json()) == s);
}

TEST_CASE("gram") {
  Matrix same(5, 3);
  same.rowwise() = Eigen::RowVector3d(1, 2, 3);
  CHECK(gram(same, KernelSpec::gaussian(0.1)).values() == Matrix::Ones(5, 5));

  const Matrix basis = 10.0 * Matrix::Identity(6, 6);
  const Matrix k = gram(basis, KernelSpec::gaussian(1.0)).values();
  CHECK((k - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-12);

  Rng rng(RunSeed{11, 0});
  Matrix x(50, 8);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  for (const KernelSpec s : {KernelSpec::gaussian(2.0), KernelSpec::cosine()}) {
    const GramMatrix g = gram(x, s);
    CHECK(g.values() == g.values().transpose());
    CHECK(g.values().diagonal() == Vector::Ones(50));
    CHECK(testing::min_eig(g.values()) >= -1e-10 * 50);
    CHECK(min_eigenvalue(g.values()) == doctest::Approx(testing::min_eig(g.values())));
    CHECK(g.values()(3, 17) == doctest::Approx(kernel(s, x.row(3).transpose(), x.row(17).transpose())));
  }
  const Matrix c = cross_gram(x.topRows(4), x.bottomRows(3), KernelSpec::gaussian(2.0));
  CHECK(c.rows() == 4);
  CHECK(c.cols() == 3);
  CHECK(c(1, 2) == doctest::Approx(gaussian_kernel(x.row(1).transpose(), x.row(49).transpose(), 2.0)));
}

TEST_CASE("hadamard square") {
  const GramMatrix id = GramMatrix::from_values(Matrix::Identity(4, 4));
  CHECK(hadamard_square(id).values() == Matrix::Identity(4, 4));
  CHECK(hadamard_square(id).power() == 2);
  CHECK(hadamard_square(GramMatrix::from_values(Matrix::Ones(4, 4))).values() == Matrix::Ones(4, 4));

  Rng rng(RunSeed{12, 0});
  Matrix x(30, 5);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  const GramMatrix k = gram(x, KernelSpec::cosine());
  const GramMatrix k2 = hadamard_square(k);
  CHECK(testing::min_eig(k2.values()) >= -1e-10 * 30);
  CHECK(k2.values()(2, 7) == doctest::Approx(k.values()(2, 7) * k.values()(2, 7)));
}

TEST_CASE("gram validation and files") {
  Matrix bad = Matrix::Identity(3, 3);
  bad(1, 1) = 0.9;
  CHECK(kind_of([&] { GramMatrix::from_values(bad); }) == ErrorKind::BadArguments);
  Matrix big = Matrix::Identity(2, 2);
  big(0, 1) = big(1, 0) = 1.5;
  CHECK(kind_of([&] { GramMatrix::from_values(big); }) == ErrorKind::BadArguments);
  CHECK(kind_of([&] { GramMatrix::from_values(Matrix::Identity(2, 3)); }) == ErrorKind::DimensionMismatch);

  testing::TempDir dir;
  Rng rng(RunSeed{13, 0});
  Matrix x(9, 2);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  const GramMatrix k = gram(x, KernelSpec::gaussian(1.0));
  save_gram(k, dir / "k.gram");
  CHECK(load_gram(dir / "k.gram").values() == k.values());
}
