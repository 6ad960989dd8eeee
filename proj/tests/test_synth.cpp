#include "test_util.hpp"

#include "sparsemeter/metrics.hpp"
#include "sparsemeter/synth.hpp"

#include <Eigen/Eigenvalues>
#include <doctest.h>

#include <cmath>

namespace sm = sparsemeter;

namespace {

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double stderr_of_mean(const std::vector<double>& v) {
  const double mu = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

}  // namespace

TEST_SUITE("synth") {

TEST_CASE("config validation") {
  sm::SynthConfig cfg;
  CHECK(cfg.feature_count() == 256);
  cfg.a = 300;
  CHECK_THROWS_AS(cfg.validate(), sm::InvalidArgument);
  cfg.a = 0;
  CHECK_THROWS_AS(cfg.validate(), sm::InvalidArgument);
  cfg.a = 4;
  cfg.sigma = -1;
  CHECK_THROWS_AS(cfg.validate(), sm::InvalidArgument);
}

TEST_CASE("sparse linear: deterministic, noiseless data lies on the shifted span") {
  const sm::SynthConfig cfg{8, 0, 1.0, 0.0, 500, 42};
  const auto a = sm::gen_sparse_linear(cfg);
  const auto b = sm::gen_sparse_linear(cfg);
  CHECK((a.activations.data() - b.activations.data()).norm() == 0.0);
  CHECK(a.truth.features.m() == 32);
  CHECK(a.truth.true_weighted_sparsity == 0.5);

  sm::RowMatrix proto = sm::reconstruct(a.truth.features, a.truth.coefficients);
  proto.rowwise() -= a.truth.proto_mean.transpose();
  CHECK((a.activations.data() - proto).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(a.activations.data().colwise().mean().cwiseAbs().maxCoeff() < 1e-12);

  auto other = cfg;
  other.seed = 43;
  CHECK((sm::gen_sparse_linear(other).activations.data() - a.activations.data()).norm() > 0.0);
}

TEST_CASE("sparse linear: support size and weighted sparsity match expectations") {
  const sm::SynthConfig cfg{256, 1024, 8.0, 0.1, 16384, 7};
  const auto data = sm::gen_sparse_linear(cfg);
  std::vector<double> support(cfg.n, 0.0), weight(cfg.n, 0.0);
  for (sm::Index j = 0; j < cfg.n; ++j)
    for (const auto& e : data.truth.coefficients.column(j)) {
      support[j] += 1.0;
      weight[j] += e.value;
      REQUIRE(e.value > 0.0);
      REQUIRE(e.value < 1.0);
    }
  // Bin(1024, 8/1024): variance 8 (1 - 8/1024)
  const double se_support = std::sqrt(8.0 * (1.0 - 8.0 / 1024.0) / cfg.n);
  CHECK(std::abs(mean(support) - 8.0) < 3.0 * se_support);
  CHECK(std::abs(mean(weight) - 4.0) < 3.0 * stderr_of_mean(weight));
  for (sm::Index i = 0; i < data.truth.features.m(); ++i)
    REQUIRE(data.truth.features.feature(i).norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("sparse linear: S1 of the true coefficients exceeds a/2 at small a") {
  // K ~ Bin(m, a/m): E[max of K uniforms] = E[K/(K+1)] = 1 - (1 - (1 - a/m)^(m+1)) / ((m+1) a/m).
  for (double a : {4.0, 16.0}) {
    const sm::SynthConfig cfg{64, 0, a, 0.1, 16384, 21};
    const auto data = sm::gen_sparse_linear(cfg);
    const double m = 256.0, p = a / m;
    const double mean_max = 1.0 - (1.0 - std::pow(1.0 - p, m + 1.0)) / ((m + 1.0) * p);
    const double expect = (a / 2.0) / mean_max;
    CHECK(*sm::metric_avg_coeff_norm(data.truth.coefficients) == doctest::Approx(expect).epsilon(0.03));
  }
}

TEST_CASE("sparse linear: noise energy is a sigma^2") {
  const sm::SynthConfig cfg{32, 0, 6.0, 0.2, 8000, 3};
  const auto data = sm::gen_sparse_linear(cfg);
  sm::RowMatrix proto = sm::reconstruct(data.truth.features, data.truth.coefficients);
  proto.rowwise() -= data.truth.proto_mean.transpose();
  const sm::RowMatrix noise = data.activations.data() - proto;
  std::vector<double> energy(cfg.n);
  for (sm::Index j = 0; j < cfg.n; ++j) energy[j] = noise.row(j).squaredNorm();
  CHECK(std::abs(mean(energy) - 6.0 * 0.04) < 3.0 * stderr_of_mean(energy));
}

TEST_CASE("gaussian control") {
  const auto x = sm::gen_gaussian(4, 16384, 11);
  CHECK((x.data() - sm::gen_gaussian(4, 16384, 11).data()).norm() == 0.0);
  const double n = 16384.0;
  for (sm::Index k = 0; k < 4; ++k) {
    const auto col = x.data().col(k);
    const double mu = col.mean();
    const double var = (col.array() - mu).square().sum() / (n - 1);
    CHECK(std::abs(mu) < 3.0 / std::sqrt(n));
    CHECK(std::abs(var - 1.0) < 3.0 * std::sqrt(2.0 / (n - 1)));
  }
}

TEST_CASE("heavy tailed control: isotropic before whitening, identity covariance after") {
  const auto raw = sm::gen_heavy_tailed_raw(3, 20000, 5);
  // A fixed direction's mean absolute cosine with the rows matches the uniform sphere value 1/2 in 3-d.
  std::vector<double> cosines;
  for (sm::Index j = 0; j < raw.n(); ++j) {
    const double nrm = raw.data().row(j).norm();
    if (nrm > 0.0) cosines.push_back(std::abs(raw.data()(j, 0)) / nrm);
  }
  CHECK(std::abs(mean(cosines) - 0.5) < 4.0 * stderr_of_mean(cosines));

  const auto w = sm::gen_heavy_tailed(16, 64 * 16, 6);
  const sm::RowMatrix c = w.data().rowwise() - w.data().colwise().mean();
  const sm::Matrix cov = (c.transpose() * c) / static_cast<double>(w.n() - 1);
  Eigen::SelfAdjointEigenSolver<sm::Matrix> es(cov);
  CHECK(es.eigenvalues().minCoeff() >= 0.9);
  CHECK(es.eigenvalues().maxCoeff() <= 1.1);
  CHECK((w.data() - sm::gen_heavy_tailed(16, 64 * 16, 6).data()).norm() == 0.0);
}

TEST_CASE("rademacher control") {
  const auto x = sm::gen_rademacher(8, 4096, 9);
  CHECK((x.data().array().abs() == 1.0).all());
  CHECK(std::abs(x.data().mean()) < 3.0 / std::sqrt(8.0 * 4096.0));
  CHECK((x.data() - sm::gen_rademacher(8, 4096, 9).data()).norm() == 0.0);
}

TEST_CASE("normalize_for_loss") {
  const auto out = sm::normalize_for_loss(testutil::rows_to_set({{2, 0}, {0, 2}}));
  const double r = 1.0 / std::sqrt(2.0);
  CHECK(out.data()(0, 0) == doctest::Approx(r));
  CHECK(out.data()(0, 1) == doctest::Approx(-r));
  CHECK(out.data()(1, 0) == doctest::Approx(-r));
  CHECK(out.data()(1, 1) == doctest::Approx(r));
  CHECK(sm::mean_row_norm(out) == doctest::Approx(1.0));

  const auto g = sm::normalize_for_loss(sm::gen_gaussian(5, 300, 2).scaled(17.0));
  const auto again = sm::normalize_for_loss(g);
  CHECK((g.data() - again.data()).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(sm::normalize_for_loss(testutil::rows_to_set({{3, 4}})), sm::NumericalError);
}

}  // TEST_SUITE
