#include "doctest.h"

#include <cmath>

#include "dsl/numkit.hpp"

using namespace dsl;
using numkit::Vector;

TEST_CASE("lse basics") {
  Eigen::ArrayXd one(1);
  one << 4.2;
  CHECK(numkit::lse(one) == doctest::Approx(4.2).epsilon(1e-15));

  CHECK(numkit::lse(0.0, 0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(numkit::lse(1000.0, 1000.0) ==
        doctest::Approx(1000.0 + std::log(2.0)).epsilon(1e-15));

  Eigen::ArrayXd empty(0);
  CHECK_THROWS_AS(numkit::lse(empty), std::invalid_argument);
}

TEST_CASE("lse shift invariance and bounds") {
  Eigen::ArrayXd t(3);
  t << -1.0, 0.5, 2.0;
  const double base = numkit::lse(t);
  CHECK(base >= t.maxCoeff());
  CHECK(base <= t.maxCoeff() + std::log(3.0));
  const double shifted = numkit::lse(Eigen::ArrayXd(t + 123.0));
  CHECK(shifted == doctest::Approx(base + 123.0).epsilon(1e-14));
}

TEST_CASE("huber piecewise values") {
  const double d = 0.37;
  CHECK(numkit::huber(0.0, d) == 0.0);
  CHECK(numkit::huber(d, d) == doctest::Approx(d * d / 2).epsilon(1e-15));
  CHECK(numkit::huber(2 * d, d) ==
        doctest::Approx(1.5 * d * d).epsilon(1e-15));
  // continuity of value and slope at the threshold
  const double eps = 1e-9;
  CHECK(numkit::huber(d + eps, d) ==
        doctest::Approx(numkit::huber(d - eps, d)).epsilon(1e-6));
  CHECK(numkit::huber_grad(d - eps, d) ==
        doctest::Approx(numkit::huber_grad(d + eps, d)).epsilon(1e-6));
}

namespace {

numkit::ObjectiveGrad quadratic_at(double c) {
  return [c](const Vector& x, Vector* g) {
    if (g) {
      g->resize(1);
      (*g)[0] = 2 * (x[0] - c);
    }
    return (x[0] - c) * (x[0] - c);
  };
}

double rosenbrock(const Vector& v, Vector* g) {
  const double x = v[0], y = v[1];
  if (g) {
    g->resize(2);
    (*g)[0] = -2 * (1 - x) - 400 * x * (y - x * x);
    (*g)[1] = 200 * (y - x * x);
  }
  return (1 - x) * (1 - x) + 100 * (y - x * x) * (y - x * x);
}

}  // namespace

TEST_CASE("minimize_bounded quadratic") {
  Vector s0(1), s1(1);
  s0 << 0.0;
  s1 << 10.0;
  const auto r = numkit::minimize_bounded(quadratic_at(3.0), {s0, s1},
                                          numkit::Bounds::uniform(1, 0, 10));
  CHECK(r.converged);
  CHECK(r.argmin[0] == doctest::Approx(3.0).epsilon(1e-8));
}

TEST_CASE("minimize_bounded respects active bound") {
  Vector s0(1), s1(1);
  s0 << 0.0;
  s1 << 5.0;
  const auto r = numkit::minimize_bounded(quadratic_at(12.0), {s0, s1},
                                          numkit::Bounds::uniform(1, 0, 10));
  CHECK(r.argmin[0] == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("minimize_bounded rosenbrock from four starts") {
  std::vector<Vector> starts;
  for (auto [a, b] : {std::pair{-1.5, -1.0}, std::pair{2.0, 2.0},
                      std::pair{0.0, 0.0}, std::pair{-1.0, 2.0}}) {
    Vector v(2);
    v << a, b;
    starts.push_back(v);
  }
  const auto bounds = numkit::Bounds::uniform(2, -5, 5);
  const auto r = numkit::minimize_bounded(rosenbrock, starts, bounds);
  CHECK(r.argmin[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.argmin[1] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(bounds.contains(r.argmin, 0.0));

  // dominance: the multi-start winner beats every single start
  for (const auto& s : starts) {
    const auto single = numkit::minimize_bounded(rosenbrock, {s}, bounds);
    CHECK(r.value <= single.value + 1e-12);
  }
}

TEST_CASE("minimize_bounded rejects out-of-bounds starts") {
  Vector bad(1);
  bad << 42.0;
  CHECK_THROWS_AS(numkit::minimize_bounded(quadratic_at(0.0), {bad},
                                           numkit::Bounds::uniform(1, 0, 10)),
                  std::invalid_argument);
}

TEST_CASE("minimize_bounded propagates whole-domain errors") {
  const numkit::ObjectiveGrad bad = [](const Vector&, Vector*) -> double {
    throw std::domain_error("nope");
  };
  Vector s(1);
  s << 1.0;
  CHECK_THROWS_AS(
      numkit::minimize_bounded(bad, {s}, numkit::Bounds::uniform(1, 0, 10)),
      std::domain_error);
}

TEST_CASE("numeric gradient matches analytic on a smooth objective") {
  const auto analytic = [](const Vector& v, Vector* g) {
    const double x = v[0], y = v[1], z = v[2];
    if (g) {
      g->resize(3);
      (*g)[0] = std::cos(x) * std::exp(y / 7) + 2 * x * z;
      (*g)[1] = std::sin(x) * std::exp(y / 7) / 7;
      (*g)[2] = x * x;
    }
    return std::sin(x) * std::exp(y / 7) + x * x * z;
  };
  const auto numeric = numkit::with_numeric_gradient(
      [&](const Vector& v) { return analytic(v, nullptr); }, 1e-6);

  numkit::Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    Vector x(3);
    for (int j = 0; j < 3; ++j) x[j] = rng.uniform(-2.0, 2.0);
    Vector ga(3), gn(3);
    analytic(x, &ga);
    numeric(x, &gn);
    for (int j = 0; j < 3; ++j) {
      const double scale = std::max(1.0, std::abs(ga[j]));
      CHECK(std::abs(ga[j] - gn[j]) / scale < 1e-5);
    }
  }
}

TEST_CASE("minimize_constrained symmetric quadratic") {
  // min x^2 + y^2 subject to x + y = 2 (normalized constraint)
  const numkit::ObjectiveGrad f = [](const Vector& v, Vector* g) {
    if (g) {
      g->resize(2);
      (*g)[0] = 2 * v[0];
      (*g)[1] = 2 * v[1];
    }
    return v[0] * v[0] + v[1] * v[1];
  };
  const numkit::ObjectiveGrad c = [](const Vector& v, Vector* g) {
    if (g) {
      g->resize(2);
      (*g)[0] = 0.5;
      (*g)[1] = 0.5;
    }
    return (v[0] + v[1]) / 2.0 - 1.0;
  };
  Vector s0(2), s1(2);
  s0 << 0.0, 0.0;
  s1 << 3.0, -2.0;
  const auto r = numkit::minimize_constrained(
      f, c, {s0, s1}, numkit::Bounds::uniform(2, -10, 10));
  CHECK(r.argmin[0] == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(r.argmin[1] == doctest::Approx(1.0).epsilon(1e-5));
  Vector probe = r.argmin;
  CHECK(std::abs(c(probe, nullptr)) <= 1e-6);
}

TEST_CASE("minimize_constrained hits the box corner") {
  // min x subject to x*y = 4, x and y in [1, 10]: the best feasible point
  // is (1, 4) because x cannot go below 1
  const numkit::ObjectiveGrad f = [](const Vector& v, Vector* g) {
    if (g) {
      g->resize(2);
      (*g)[0] = 1.0;
      (*g)[1] = 0.0;
    }
    return v[0];
  };
  const numkit::ObjectiveGrad c = [](const Vector& v, Vector* g) {
    if (g) {
      g->resize(2);
      (*g)[0] = v[1] / 4.0;
      (*g)[1] = v[0] / 4.0;
    }
    return v[0] * v[1] / 4.0 - 1.0;
  };
  Vector s(2);
  s << 2.0, 2.0;
  const auto r = numkit::minimize_constrained(
      f, c, {s}, numkit::Bounds::uniform(2, 1, 10));
  CHECK(r.argmin[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(r.argmin[1] == doctest::Approx(4.0).epsilon(1e-4));
}

TEST_CASE("minimize_constrained reports infeasibility") {
  const numkit::ObjectiveGrad f = [](const Vector& v, Vector*) {
    return v[0];
  };
  // x + y = 40 cannot be met inside [0, 10]^2
  const numkit::ObjectiveGrad c = [](const Vector& v, Vector* g) {
    if (g) {
      g->resize(2);
      (*g)[0] = 1.0;
      (*g)[1] = 1.0;
    }
    return v[0] + v[1] - 40.0;
  };
  Vector s(2);
  s << 5.0, 5.0;
  CHECK_THROWS_AS(numkit::minimize_constrained(
                      f, c, {s}, numkit::Bounds::uniform(2, 0, 10)),
                  numkit::InfeasibleError);
}

TEST_CASE("bootstrap constant statistic collapses") {
  const auto stat = [](const std::vector<std::size_t>&) {
    Eigen::ArrayXd v(1);
    v << 5.0;
    return v;
  };
  const auto r = numkit::bootstrap(20, 64, stat, 0.9, 1);
  CHECK(r.lower[0] == 5.0);
  CHECK(r.upper[0] == 5.0);
  CHECK_FALSE(r.degenerate);
}

TEST_CASE("bootstrap of the mean matches the normal approximation") {
  std::vector<double> data(100);
  for (int i = 0; i < 100; ++i) data[static_cast<std::size_t>(i)] = i + 1.0;
  const auto stat = [&](const std::vector<std::size_t>& idx) {
    double sum = 0;
    for (auto i : idx) sum += data[i];
    Eigen::ArrayXd v(1);
    v << sum / static_cast<double>(idx.size());
    return v;
  };
  const auto r = numkit::bootstrap(data.size(), 4096, stat, 0.9, 42);
  CHECK(r.lower[0] < 50.5);
  CHECK(r.upper[0] > 50.5);
  // population sigma of 1..100 is sqrt((100^2 - 1) / 12); compare widths
  const double sigma = std::sqrt((100.0 * 100.0 - 1.0) / 12.0);
  const double expected_width = 2 * 1.645 * sigma / 10.0;
  CHECK(r.upper[0] - r.lower[0] ==
        doctest::Approx(expected_width).epsilon(0.08));
}

TEST_CASE("bootstrap determinism and seed sensitivity") {
  std::vector<double> data = {1, 4, 2, 8, 5, 7, 1, 9, 3, 6};
  const auto stat = [&](const std::vector<std::size_t>& idx) {
    double sum = 0;
    for (auto i : idx) sum += data[i];
    Eigen::ArrayXd v(1);
    v << sum;
    return v;
  };
  const auto a = numkit::bootstrap(data.size(), 128, stat, 0.9, 7);
  const auto b = numkit::bootstrap(data.size(), 128, stat, 0.9, 7);
  CHECK(a.samples == b.samples);  // bit-identical per seed
  const auto c = numkit::bootstrap(data.size(), 128, stat, 0.9, 8);
  CHECK(a.samples != c.samples);
}

TEST_CASE("bootstrap coverage over synthetic trials") {
  // 200 trials of the mean of 40 standard normals at level 0.9
  int covered = 0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    numkit::Rng rng(1000 + static_cast<std::uint64_t>(t));
    std::vector<double> data(40);
    for (auto& v : data) v = rng.normal();
    const auto stat = [&](const std::vector<std::size_t>& idx) {
      double sum = 0;
      for (auto i : idx) sum += data[i];
      Eigen::ArrayXd v(1);
      v << sum / static_cast<double>(idx.size());
      return v;
    };
    const auto r = numkit::bootstrap(data.size(), 256, stat, 0.9,
                                     77 + static_cast<std::uint64_t>(t));
    if (r.lower[0] <= 0.0 && 0.0 <= r.upper[0]) ++covered;
  }
  const double coverage = static_cast<double>(covered) / trials;
  CHECK(coverage >= 0.85);
  CHECK(coverage <= 0.95);
}

TEST_CASE("bootstrap degenerate single record") {
  const auto stat = [](const std::vector<std::size_t>& idx) {
    Eigen::ArrayXd v(1);
    v << static_cast<double>(idx.size());
    return v;
  };
  const auto r = numkit::bootstrap(1, 16, stat, 0.9, 3);
  CHECK(r.degenerate);
  CHECK(r.lower[0] == r.upper[0]);
}

TEST_CASE("rng substreams are independent of parent draws") {
  numkit::Rng a(99);
  numkit::Rng s1 = a.substream(4);
  a.uniform();
  a.uniform();
  numkit::Rng s2 = a.substream(4);
  CHECK(s1.next_u64() == s2.next_u64());
}

TEST_CASE("minimize_scalar finds interior and boundary minima") {
  const auto m = numkit::minimize_scalar(
      [](double x) { return (x - 2.5) * (x - 2.5); }, 0.0, 10.0);
  CHECK(m.x == doctest::Approx(2.5).epsilon(1e-9));
  CHECK_FALSE(m.on_boundary);

  const auto b =
      numkit::minimize_scalar([](double x) { return -x; }, 0.0, 1.0);
  CHECK(b.x == doctest::Approx(1.0));
  CHECK(b.on_boundary);
}
