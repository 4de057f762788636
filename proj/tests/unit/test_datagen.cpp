#include <cmath>

#include "doctest.h"
#include "prada/datagen.hpp"
#include "prada/error.hpp"

using namespace prada;

namespace {

// 20-point Gauss-Legendre rule on [-1, 1], built by Newton iteration.
struct Quadrature {
  std::vector<double> nodes, weights;
};

Quadrature gauss_legendre(int n) {
  Quadrature q;
  for (int i = 1; i <= n; ++i) {
    double x = std::cos(M_PI * (i - 0.25) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double step = p1 / dp;
      x -= step;
      if (std::abs(step) < 1e-16) break;
    }
    q.nodes.push_back(x);
    q.weights.push_back(2.0 / ((1.0 - x * x) * dp * dp));
  }
  return q;
}

double correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::ArrayXd x = a.array() - a.mean();
  const Eigen::ArrayXd y = b.array() - b.mean();
  return (x * y).sum() / std::sqrt(x.square().sum() * y.square().sum());
}

}  // namespace

TEST_SUITE("datagen") {
  TEST_CASE("Legendre polynomial values") {
    CHECK(legendre_polynomial(1, 0.5) == 0.5);
    CHECK(legendre_polynomial(2, 0.5) == doctest::Approx(-0.125));
    CHECK(legendre_polynomial(3, 0.5) == doctest::Approx(-0.4375));
    CHECK(legendre_polynomial(4, 0.5) == doctest::Approx(-0.2890625));
    for (int k = 1; k <= 4; ++k) {
      CHECK(legendre_polynomial(k, 1.0) == doctest::Approx(1.0));
      const double h = 1e-6;
      for (double x : {-0.9, -0.3, 0.2, 0.7}) {
        const double fd = (legendre_polynomial(k, x + h) - legendre_polynomial(k, x - h)) / (2 * h);
        CHECK(legendre_derivative(k, x) == doctest::Approx(fd).epsilon(1e-7));
      }
    }
    CHECK_THROWS_AS(legendre_polynomial(5, 0.0), UsageError);
  }

  TEST_CASE("Legendre polynomials are orthogonal") {
    const Quadrature q = gauss_legendre(20);
    for (int j = 1; j <= 4; ++j) {
      for (int k = 1; k <= 4; ++k) {
        double integral = 0.0;
        for (std::size_t i = 0; i < q.nodes.size(); ++i) {
          integral += q.weights[i] * legendre_polynomial(j, q.nodes[i]) * legendre_polynomial(k, q.nodes[i]);
        }
        const double expected = j == k ? 2.0 / (2.0 * k + 1.0) : 0.0;
        CHECK(std::abs(integral - expected) < 1e-10);
      }
    }
  }

  TEST_CASE("true importance matches numeric integration") {
    const int n = 2000000;
    for (int k = 1; k <= 4; ++k) {
      double total = 0.0;
      for (int i = 0; i < n; ++i) {
        const double x = -1.0 + (i + 0.5) * 2.0 / n;
        total += std::abs(legendre_derivative(k, x));
      }
      CHECK(legendre_true_importance(k) == doctest::Approx(total / n).epsilon(1e-6));
    }
    CHECK(legendre_true_importance(1) == doctest::Approx(1.0));
    CHECK(legendre_true_importance(2) == doctest::Approx(1.5));
  }

  TEST_CASE("Legendre response variance") {
    const GeneratedData g = generate_legendre_dataset(200000, 5, 0.0, 1);
    const double mean = g.raw_y.mean();
    const double var = (g.raw_y.array() - mean).square().sum() / (g.raw_y.size() - 1.0);
    CHECK(var == doctest::Approx(1.0 / 3 + 1.0 / 5 + 1.0 / 7 + 1.0 / 9).epsilon(0.01));
    CHECK(std::abs(correlation(g.raw_y, g.raw_X.col(4))) < 0.1);
    CHECK(g.true_supports.size() == 4);
    CHECK(g.true_supports[3] == std::vector<Index>{3});
  }

  TEST_CASE("generation is deterministic") {
    const GeneratedData a = generate_legendre_dataset(100, 5, 0.1, 9);
    const GeneratedData b = generate_legendre_dataset(100, 5, 0.1, 9);
    const GeneratedData c = generate_legendre_dataset(100, 5, 0.1, 10);
    CHECK(a.raw_X == b.raw_X);
    CHECK(a.raw_y == b.raw_y);
    CHECK(a.data.X == b.data.X);
    CHECK(a.raw_X != c.raw_X);
    CHECK(a.raw_X.cwiseAbs().maxCoeff() <= 1.0);
    CHECK_THROWS_AS(generate_legendre_dataset(100, 3, 0.1, 0), UsageError);
  }

  TEST_CASE("noise level does not change the covariates") {
    const GeneratedData a = generate_legendre_dataset(50, 5, 0.0, 3);
    const GeneratedData b = generate_legendre_dataset(50, 5, 0.5, 3);
    CHECK(a.raw_X == b.raw_X);
  }

  TEST_CASE("standardization") {
    Eigen::MatrixXd X(4, 2);
    X << 1, 10, 2, 20, 3, 30, 4, 50;
    Eigen::VectorXd y(4);
    y << 0, 1, 0, 1;
    const Dataset d = standardize(X, y, {"a", "b"}, "resp");
    CHECK(d.stats.x_mean[0] == 2.5);
    CHECK(d.stats.x_sd[0] == doctest::Approx(std::sqrt(5.0 / 3.0)));
    CHECK(d.stats.y_mean == 0.5);
    CHECK(d.response_name == "resp");
    for (Index c = 0; c < 2; ++c) {
      CHECK(std::abs(d.X.col(c).mean()) < 1e-15);
      CHECK(std::sqrt(d.X.col(c).squaredNorm() / 3.0) == doctest::Approx(1.0));
    }
    // Round trip back to raw units.
    for (Index r = 0; r < 4; ++r) {
      CHECK(d.X(r, 1) * d.stats.x_sd[1] + d.stats.x_mean[1] == doctest::Approx(X(r, 1)));
      CHECK(d.response_to_raw(d.y[r]) == doctest::Approx(y[r]));
      CHECK(d.response_from_raw(y[r]) == doctest::Approx(d.y[r]));
    }
    // Standardizing twice changes nothing.
    const Dataset again = standardize(d.X, d.y);
    CHECK((again.X - d.X).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((again.y - d.y).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(again.stats.x_sd[0] == doctest::Approx(1.0));
  }

  TEST_CASE("standardization errors") {
    Eigen::MatrixXd X(3, 2);
    X << 1, 5, 2, 5, 3, 5;
    Eigen::VectorXd y(3);
    y << 1, 2, 3;
    try {
      standardize(X, y, {"g", "h"});
      FAIL("expected a DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()) == "constant column: h");
    }
    X(1, 1) = NAN;
    CHECK_THROWS_AS(standardize(X, y), DataError);
    CHECK_THROWS_AS(standardize(X.topRows(1), y.head(1)), DataError);
    X(1, 1) = 6.0;
    CHECK_THROWS_AS(standardize(X, Eigen::VectorXd::Ones(3)), DataError);
  }

  TEST_CASE("correlation factor") {
    Eigen::MatrixXd c(2, 2);
    c << 1.0, 0.5, 0.5, 1.0;
    const Eigen::MatrixXd f = correlation_factor(c);
    CHECK((f * f.transpose() - c).cwiseAbs().maxCoeff() < 1e-14);

    Eigen::MatrixXd bad(3, 3);
    bad << 1.0, 0.9, -0.9, 0.9, 1.0, 0.9, -0.9, 0.9, 1.0;
    CHECK_THROWS_AS(correlation_factor(bad), DataError);

    // Rank-deficient but valid: perfectly correlated pair.
    Eigen::MatrixXd singular(2, 2);
    singular << 1.0, 1.0, 1.0, 1.0;
    const Eigen::MatrixXd g = correlation_factor(singular);
    CHECK((g * g.transpose() - singular).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("Gaussian covariates follow the correlation") {
    GeneratorSpec spec;
    spec.n_samples = 10000;
    spec.n_covariates = 3;
    spec.law = CovariateLaw::gaussian;
    spec.components = {{"x1", {0}, [](std::span<const double> x) { return x[0]; }}};
    spec.noise_sd = 1.0;
    const GeneratedData a = generate_additive_dataset(spec, 4);
    CHECK(std::abs(correlation(a.raw_X.col(0), a.raw_X.col(1))) < 0.05);
    CHECK(std::abs(correlation(a.raw_X.col(1), a.raw_X.col(2))) < 0.05);

    spec.correlation = Eigen::MatrixXd::Identity(3, 3);
    spec.correlation(0, 2) = spec.correlation(2, 0) = 0.6;
    const GeneratedData b = generate_additive_dataset(spec, 4);
    CHECK(correlation(b.raw_X.col(0), b.raw_X.col(2)) == doctest::Approx(0.6).epsilon(0.05));
  }

  TEST_CASE("six-component design") {
    const GeneratorSpec spec = six_component_spec(500, 0.1);
    CHECK(spec.n_covariates == 7);
    CHECK(spec.components.size() == 6);
    const GeneratedData g = generate_additive_dataset(spec, 1);
    CHECK(g.true_supports.size() == 6);
    CHECK(g.true_supports[4] == std::vector<Index>{4, 5});
    for (const auto& s : g.true_supports) {
      for (Index d : s) CHECK(d != 6);
    }
  }

  TEST_CASE("generator validation") {
    GeneratorSpec spec;
    spec.n_samples = 10;
    spec.n_covariates = 2;
    spec.components = {{"bad", {3}, [](std::span<const double>) { return 0.0; }}};
    CHECK_THROWS_AS(generate_additive_dataset(spec, 0), UsageError);
    spec.components = {{"empty", {}, [](std::span<const double>) { return 0.0; }}};
    CHECK_THROWS_AS(generate_additive_dataset(spec, 0), UsageError);
    spec.components.clear();
    spec.noise_sd = -1.0;
    CHECK_THROWS_AS(generate_additive_dataset(spec, 0), UsageError);
    spec.noise_sd = 0.1;
    spec.law = CovariateLaw::gaussian;
    spec.correlation = Eigen::MatrixXd::Identity(2, 2);
    spec.correlation(0, 1) = 0.5;
    CHECK_THROWS_AS(generate_additive_dataset(spec, 0), DataError);
  }
}
