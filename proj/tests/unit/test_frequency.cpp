#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fixtures.hpp"
#include "trajsim/errors.hpp"
#include "trajsim/frequency_model.hpp"

using namespace trajsim;

TEST_CASE("lossy counter basics") {
  LossyCounter c(0.1);
  CHECK(c.bucket_width() == 10);
  for (int i = 0; i < 9; ++i) c.observe("a");
  c.observe("b");
  // boundary after the 10th item: b has count 1, max_error 0, bucket 1 -> kept
  CHECK(c.current_bucket() == 2);
  CHECK(c.estimate("a") == 9);
  CHECK(c.estimate("b") == 1);
  for (int i = 0; i < 10; ++i) c.observe("a");
  // b: 1 + 0 < 2 -> evicted at the second boundary
  CHECK(c.estimate("b") == 0);
  CHECK(c.estimate("a") == 19);
  CHECK(c.n_observed() == 20);
  CHECK_THROWS(LossyCounter(0.0));
  CHECK_THROWS(LossyCounter(1.5));
}

TEST_CASE("lossy counter bounds against exact counts") {
  Rng rng(3);
  for (double eps : {0.01, 0.05}) {
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<std::string> stream;
      for (int i = 0; i < 5000; ++i) {
        const auto k = rng.below(10) < 3 ? rng.below(5) : rng.below(400);
        stream.push_back("p" + std::to_string(k));
      }
      LossyCounter c(eps);
      for (const auto& s : stream) c.observe(s);
      const double slack = eps * static_cast<double>(stream.size());
      for (const auto& [id, truth] : fixtures::exact_counts(stream)) {
        const auto est = c.estimate(id);
        CHECK(est <= truth);
        CHECK(static_cast<double>(truth - est) <= slack);
        if (static_cast<double>(truth) >= slack) CHECK(est > 0);
      }
    }
  }
}

TEST_CASE("inverse ECDF indexing") {
  const CategoryEcdf e{"Cafe", {1, 1, 3}};
  CHECK(*inverse_ecdf(e, 0.5) == 1);
  CHECK(*inverse_ecdf(e, 0.9) == 3);
  CHECK(*inverse_ecdf(e, 1.0) == 3);
  CHECK(*inverse_ecdf(e, 2.0 / 3.0) == 1);
  CHECK_THROWS(inverse_ecdf(e, 0.0));
  CHECK_FALSE(inverse_ecdf(CategoryEcdf{}, 0.5).has_value());
  CHECK(*inverse_ecdf_at_rank(e, 2, 3) == 1);
  CHECK(*inverse_ecdf_at_rank(e, 3, 3) == 3);
}

TEST_CASE("rank normalization with ties") {
  // a:4, b:1, c:3, d:3 against target {10, 20, 30, 40}
  const CategoryEcdf target{"Cafe", {10, 20, 30, 40}};
  const std::vector<double> f = {4, 1, 3, 3};
  const auto z = rank_normalize(f, target);
  CHECK(z == std::vector<double>{40, 10, 30, 30});
  CHECK(rank_normalize(f, CategoryEcdf{}) == f);
}

TEST_CASE("ECDF table from check-ins") {
  std::istringstream in(
      "user_id,poi_id,timestamp,category\n"
      "u,a,2024-01-01T00:00:00Z,Cafe\nu,a,2024-01-01T01:00:00Z,Cafe\n"
      "u,b,2024-01-01T02:00:00Z,Cafe\nu,g,2024-01-01T03:00:00Z,Gym\n");
  const EcdfTable table(load_checkins(in));
  CHECK(table.get("Cafe").sorted_values == std::vector<double>{1, 2});
  CHECK(table.get("Gym").sorted_values == std::vector<double>{1});
  CHECK(table.get("Bar").empty());
}

TEST_CASE("distribution mapping") {
  const std::vector<double> z = {1, 3};
  const auto l = distribution_map(z, Psi::Log1p);
  CHECK(l[0] == doctest::Approx(0.6931).epsilon(1e-4));
  CHECK(l[1] == doctest::Approx(1.3863).epsilon(1e-4));
  CHECK(distribution_map(z, Psi::Identity) == z);
  const std::vector<double> bad = {-1};
  CHECK_THROWS_AS(distribution_map(bad, Psi::Identity), std::domain_error);
  CHECK(parse_psi("log1p") == Psi::Log1p);
}

TEST_CASE("frequency weights") {
  const std::vector<double> f = {3, 1};
  const auto w = frequency_weights(f, 0.2);
  CHECK(w[0] == doctest::Approx(0.7));
  CHECK(w[1] == doctest::Approx(0.3));
  const auto u = frequency_weights(f, 1.0);
  CHECK(u[0] == 0.5);
  CHECK(u[1] == 0.5);
  const std::vector<double> zero = {0, 0, 0, 0};
  for (double v : frequency_weights(zero, 0.1)) CHECK(v == doctest::Approx(0.25));
  CHECK_THROWS_AS(frequency_weights(std::vector<double>{}, 0.1), EmptyCandidateSet);
}

TEST_CASE("retained entries stay within the space bound") {
  Rng rng(8);
  for (double eps : {0.01, 0.05}) {
    LossyCounter c(eps);
    std::size_t peak = 0;
    for (int i = 0; i < 20000; ++i) {
      c.observe("p" + std::to_string(rng.below(5000)));
      if (c.n_observed() >= c.bucket_width()) peak = std::max(peak, c.entries().size());
    }
    const double n = static_cast<double>(c.n_observed());
    CHECK(static_cast<double>(peak) <= 2.0 / eps * std::max(1.0, std::log(eps * n)));
  }
}

TEST_CASE("frequency weights sum to one with the noise floor") {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> f(1 + rng.below(30));
    for (double& v : f) v = rng.below(4) == 0 ? 0.0 : 100.0 * rng.uniform();
    const double sigma = rng.uniform();
    const auto w = frequency_weights(f, sigma);
    double sum = 0.0;
    for (double v : w) {
      sum += v;
      CHECK(v >= sigma / static_cast<double>(f.size()) - 1e-12);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
  const std::vector<double> even = {2, 2};
  CHECK(frequency_weights(even, 0.0) == std::vector<double>{0.5, 0.5});
  CHECK(distribution_map(std::vector<double>{0.0}, Psi::Log1p)[0] == 0.0);
}
