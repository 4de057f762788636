#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "helpers.hpp"
#include "prada/error.hpp"
#include "prada/extraction.hpp"

using namespace prada;

namespace {

// Nodes 0 and 3 use x1 only, node 1 uses x1 and x2, node 2 has no inputs and
// x3 is disconnected.
NetworkParams handcrafted() {
  NetworkParams p(4, 3);
  auto W = p.input_weights();
  W(0, 0) = 1.0;
  W(1, 0) = 0.5;
  W(1, 1) = -1.0;
  W(3, 0) = 0.7;
  p.output_weights() << 2.0, 1.0, 0.5, -1.0;
  p.input_biases() << 0.1, 0.0, 0.3, -0.2;
  p.output_bias() = 0.25;
  return p;
}

Dataset uniform_data(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Dataset d = test::random_dataset(rows, cols, seed);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) d.X(r, c) = u(rng);
  }
  return d;
}

double partition_error(const NetworkParams& original, const std::vector<AdditiveComponent>& comps,
                       const NetworkParams& params, double bias, const Eigen::MatrixXd& X) {
  Eigen::VectorXd total = Eigen::VectorXd::Constant(X.rows(), bias);
  for (const auto& c : comps) total += evaluate_component(c, params, X);
  return (total - predict(original, X)).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_SUITE("extraction") {
  TEST_CASE("nodes are grouped by support") {
    const auto comps = group_nodes(handcrafted());
    REQUIRE(comps.size() == 2);
    CHECK(comps[0].support == std::vector<Index>{0});
    CHECK(comps[0].nodes == std::vector<Index>{0, 3});
    CHECK(comps[1].support == std::vector<Index>{0, 1});
    CHECK(comps[1].nodes == std::vector<Index>{1});
    CHECK(comps[0].complexity() == 2);
  }

  TEST_CASE("nodes with a zero output weight are not grouped") {
    NetworkParams p = handcrafted();
    p.output_weights()[1] = 0.0;
    CHECK(group_nodes(p).size() == 1);
  }

  TEST_CASE("grouping ignores the order of hidden nodes") {
    const NetworkParams p = handcrafted();
    const std::vector<Index> order{2, 0, 3, 1};
    NetworkParams q(4, 3);
    for (Index k = 0; k < 4; ++k) {
      const Index h = order[static_cast<std::size_t>(k)];
      q.input_weights().row(k) = p.input_weights().row(h);
      q.output_weights()[k] = p.output_weights()[h];
      q.input_biases()[k] = p.input_biases()[h];
    }
    const auto a = group_nodes(p);
    const auto b = group_nodes(q);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].support == b[i].support);
      CHECK(a[i].nodes.size() == b[i].nodes.size());
      // Same node set once mapped back through the permutation.
      std::vector<Index> mapped;
      for (Index k : b[i].nodes) mapped.push_back(order[static_cast<std::size_t>(k)]);
      std::sort(mapped.begin(), mapped.end());
      CHECK(mapped == a[i].nodes);
    }
  }

  TEST_CASE("supports only contain connected inputs") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      NetworkParams r = test::random_network(10, 5, seed);
      std::mt19937_64 rng(seed);
      std::bernoulli_distribution drop(0.6);
      for (Index i = 0; i < r.penalized_size(); ++i) {
        if (drop(rng)) r.values()[i] = 0.0;
      }
      r.input_weights().col(seed % 5).setZero();
      for (const auto& c : group_nodes(r)) {
        for (Index d : c.support) CHECK(d != static_cast<Index>(seed % 5));
        CHECK_FALSE(c.nodes.empty());
      }
    }
  }

  TEST_CASE("constant offset collects input-less nodes") {
    const NetworkParams p = handcrafted();
    CHECK(constant_offset(p) == doctest::Approx(0.25 + 0.5 * std::tanh(0.3)).epsilon(1e-15));
  }

  TEST_CASE("components partition the network exactly") {
    const NetworkParams p = handcrafted();
    const Dataset d = uniform_data(300, 3, 1);
    CHECK(partition_error(p, group_nodes(p), p, constant_offset(p), d.X) < 1e-12);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      NetworkParams r = test::random_network(8, 4, seed);
      std::mt19937_64 rng(seed);
      std::bernoulli_distribution drop(0.5);
      for (Index i = 0; i < r.penalized_size(); ++i) {
        if (drop(rng)) r.values()[i] = 0.0;
      }
      const Dataset d4 = uniform_data(100, 4, seed);
      CHECK(partition_error(r, group_nodes(r), r, constant_offset(r), d4.X) < 1e-10);
    }
  }

  TEST_CASE("point and batch component evaluation agree") {
    const NetworkParams p = handcrafted();
    const auto comps = group_nodes(p);
    const Dataset d = uniform_data(20, 3, 2);
    const Eigen::VectorXd batch = evaluate_component(comps[1], p, d.X);
    for (Index r = 0; r < d.rows(); ++r) {
      const double point[] = {d.X(r, 0), d.X(r, 1)};
      CHECK(evaluate_component(comps[1], p, point) == doctest::Approx(batch[r]).epsilon(1e-14));
    }
    const double wrong[] = {0.0};
    CHECK_THROWS_AS(evaluate_component(comps[1], p, wrong), UsageError);
  }

  TEST_CASE("a near-linear node becomes a linear term") {
    NetworkParams p(2, 2);
    p.input_weights()(0, 0) = 1e-3;
    p.output_weights()[0] = 1000.0;
    p.input_weights()(1, 1) = 3.0;
    p.output_weights()[1] = 1.0;
    const Dataset d = uniform_data(500, 2, 3);
    const LinearSplit split = split_linear_terms(group_nodes(p), p, d);
    REQUIRE(split.components.size() == 2);
    const AdditiveComponent& lin = split.components[0];
    CHECK(lin.support == std::vector<Index>{0});
    CHECK(lin.nodes.empty());
    REQUIRE(lin.linear_terms.count(0) == 1);
    CHECK(lin.linear_terms.at(0) == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(split.params.input_weights()(0, 0) == 0.0);
    CHECK(split.components[1].nodes == std::vector<Index>{1});
    CHECK(partition_error(p, split.components, split.params, split.output_bias, d.X) < 1e-6);
  }

  TEST_CASE("strongly curved inputs are left alone") {
    NetworkParams p(1, 1);
    p.input_weights()(0, 0) = 3.0;
    p.output_weights()[0] = 1.0;
    const Dataset d = uniform_data(200, 1, 4);
    const LinearSplit split = split_linear_terms(group_nodes(p), p, d);
    REQUIRE(split.components.size() == 1);
    CHECK(split.components[0].linear_terms.empty());
    CHECK(split.params == p);
    CHECK(partition_error(p, split.components, split.params, split.output_bias, d.X) < 1e-12);
  }

  TEST_CASE("a linear input of a pair component is split off") {
    // x1 barely moves the node, so its partial derivative is nearly flat.
    NetworkParams p(1, 2);
    p.input_weights()(0, 0) = 1e-4;
    p.input_weights()(0, 1) = 2.0;
    p.output_weights()[0] = 1.0;
    const Dataset d = uniform_data(300, 2, 5);
    const LinearSplit split = split_linear_terms(group_nodes(p), p, d);
    REQUIRE(split.components.size() == 2);
    CHECK(split.components[0].support == std::vector<Index>{0});
    CHECK(split.components[0].linear_terms.count(0) == 1);
    CHECK(split.components[1].support == std::vector<Index>{1});
  }

  TEST_CASE("linear split preconditions") {
    const NetworkParams p = handcrafted();
    CHECK_THROWS_AS(split_linear_terms(group_nodes(p), p, uniform_data(10, 2, 1)), UsageError);
    CHECK_THROWS_AS(split_linear_terms(group_nodes(p), p, uniform_data(1, 3, 1)), DataError);
  }

  TEST_CASE("importance matches finite differences") {
    const NetworkParams p = handcrafted();
    const Dataset d = uniform_data(200, 3, 6);
    const Eigen::VectorXd imp = variable_importance(p, d);
    const double h = 1e-6;
    for (Index c = 0; c < 3; ++c) {
      double total = 0.0;
      for (Index r = 0; r < d.rows(); ++r) {
        Eigen::RowVectorXd a = d.X.row(r), b = d.X.row(r);
        a[c] += h;
        b[c] -= h;
        const std::vector<double> va(a.data(), a.data() + a.size());
        const std::vector<double> vb(b.data(), b.data() + b.size());
        total += std::abs((forward(p, va) - forward(p, vb)) / (2.0 * h));
      }
      CHECK(imp[c] == doctest::Approx(total / static_cast<double>(d.rows())).epsilon(1e-6));
    }
    CHECK(imp[2] == 0.0);
    CHECK_THROWS_AS(variable_importance(p, d.subset(std::vector<Index>{})), DataError);
  }

  TEST_CASE("partial dependence curves are mean-centred") {
    const NetworkParams p = handcrafted();
    const auto comps = group_nodes(p);
    const Dataset d = uniform_data(100, 3, 7);
    GridSpec spec;
    spec.points = 51;
    const auto main = partial_dependence_grid(comps[0], 0, p, 0, spec, &d);
    REQUIRE(main.size() == 1);
    CHECK(main[0].mode == "main");
    CHECK(main[0].x.size() == 51);
    CHECK(main[0].x.front() == d.X.col(0).minCoeff());
    CHECK(main[0].x.back() == d.X.col(0).maxCoeff());
    CHECK(std::abs(std::accumulate(main[0].value.begin(), main[0].value.end(), 0.0)) < 1e-12);

    const auto fixed = partial_dependence_grid(comps[1], 1, p, 1, spec, &d);
    REQUIRE(fixed.size() == 2);
    CHECK(fixed[0].mode == "fixed=1");
    CHECK(fixed[1].mode == "fixed=-1");
    CHECK(fixed[1].fixed_value == -1.0);
    for (const auto& g : fixed) {
      CHECK(std::abs(std::accumulate(g.value.begin(), g.value.end(), 0.0)) < 1e-12);
      const auto again = recompute_grid(g, comps[1], p);
      for (std::size_t i = 0; i < g.value.size(); ++i) CHECK(again[i] == doctest::Approx(g.value[i]).epsilon(1e-12));
    }

    spec.marginal = true;
    const auto marginal = partial_dependence_grid(comps[1], 1, p, 1, spec, &d);
    REQUIRE(marginal.size() == 1);
    CHECK(marginal[0].mode == "marginal");
    CHECK_THROWS_AS(recompute_grid(marginal[0], comps[1], p), UsageError);
  }

  TEST_CASE("partial dependence of a single tanh node") {
    NetworkParams p(1, 1);
    p.input_weights()(0, 0) = 2.0;
    p.output_weights()[0] = 1.5;
    const auto comps = group_nodes(p);
    GridSpec spec;
    spec.points = 5;
    spec.range = std::make_pair(-1.0, 1.0);
    const auto g = partial_dependence_grid(comps[0], 0, p, 0, spec);
    // The curve is odd on a symmetric grid, so its mean is already zero.
    for (std::size_t i = 0; i < 5; ++i) {
      CHECK(g[0].value[i] == doctest::Approx(1.5 * std::tanh(2.0 * g[0].x[i])).epsilon(1e-14));
    }
  }

  TEST_CASE("partial dependence errors") {
    const NetworkParams p = handcrafted();
    const auto comps = group_nodes(p);
    GridSpec spec;
    CHECK_THROWS_AS(partial_dependence_grid(comps[0], 0, p, 1, spec), UsageError);
    CHECK_THROWS_AS(partial_dependence_grid(comps[0], 0, p, 0, spec), UsageError);
    spec.range = std::make_pair(1.0, 1.0);
    CHECK_THROWS_AS(partial_dependence_grid(comps[0], 0, p, 0, spec), UsageError);
    spec.range = std::make_pair(-1.0, 1.0);
    spec.points = 1;
    CHECK_THROWS_AS(partial_dependence_grid(comps[0], 0, p, 0, spec), UsageError);
    spec.points = 10;
    spec.marginal = true;
    CHECK_THROWS_AS(partial_dependence_grid(comps[1], 1, p, 0, spec), UsageError);
    spec.marginal = false;
    spec.fixed_values.clear();
    CHECK_THROWS_AS(partial_dependence_grid(comps[1], 1, p, 0, spec), UsageError);
  }

  TEST_CASE("extract without the split keeps the raw partition") {
    const NetworkParams p = handcrafted();
    const Dataset d = uniform_data(150, 3, 8);
    ExtractOptions o;
    o.split_linear = false;
    const ExtractionReport r = extract(p, d, o);
    CHECK(r.components.size() == 2);
    CHECK(r.grids.size() == 2);
    CHECK((r.evaluate(d.X) - predict(p, d.X)).cwiseAbs().maxCoeff() < 1e-12);
    const double x[] = {0.3, -0.4, 0.9};
    CHECK(r.evaluate(x) == doctest::Approx(forward(p, x)).epsilon(1e-14));
    CHECK(r.importance[2] == 0.0);
    CHECK(r.column_names == d.column_names);
  }

  TEST_CASE("extract with the split stays mean-preserving") {
    const NetworkParams p = handcrafted();
    const Dataset d = uniform_data(150, 3, 9);
    const ExtractionReport r = extract(p, d);
    CHECK(std::abs((r.evaluate(d.X) - predict(p, d.X)).mean()) < 1e-12);
  }

  TEST_CASE("labels") {
    const std::vector<Index> s{0, 2};
    CHECK(support_label(s) == "f(x1,x3)");
    CHECK(support_label(s, {"a", "b", "c"}) == "f(a,c)");
    CHECK(support_label(std::vector<Index>{}) == "f()");
  }
}
