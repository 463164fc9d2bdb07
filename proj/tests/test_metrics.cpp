#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "pcn/error.hpp"
#include "pcn/metrics.hpp"
#include "pcn/polsar.hpp"

using namespace pcn;

namespace {

ConfusionMatrix from_rows(const std::vector<std::vector<std::int64_t>>& rows) {
  ConfusionMatrix z(static_cast<int>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows.size(); ++j) z(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
  return z;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::InvalidInput;
}

}  // namespace

TEST_CASE("two-class reference matrix") {
  const ConfusionMatrix z = from_rows({{40, 10}, {20, 30}});
  CHECK(overall_accuracy(z) == 0.7);
  CHECK(average_accuracy(z) == 0.7);
  // (N * diag - sum row*col) / (N^2 - sum row*col) = (7000 - 5000) / (10000 - 5000)
  CHECK(kappa(z) == 0.4);
  const RunScores s = score(z);
  CHECK(s.per_class_recall == std::vector<double>{0.8, 0.6});
}

TEST_CASE("kappa is one on diagonal matrices") {
  CHECK(kappa(from_rows({{5, 0}, {0, 7}})) == 1.0);
  CHECK(kappa(from_rows({{1, 0, 0}, {0, 200, 0}, {0, 0, 33}})) == 1.0);
}

TEST_CASE("confusion tallies skip ignored and excluded pixels") {
  const std::vector<std::uint8_t> pred{0, 1, 1, 0, 2, 2};
  const std::vector<std::uint8_t> truth{0, 1, 0, kIgnoreLabel, 2, 1};
  const std::vector<std::uint8_t> exclude{0, 0, 0, 0, 1, 0};
  const ConfusionMatrix z = confusion(pred, truth, 3, exclude);
  CHECK(z.total() == 4);
  CHECK(z(0, 0) == 1);
  CHECK(z(1, 1) == 1);
  CHECK(z(0, 1) == 1);
  CHECK(z(1, 2) == 1);
  CHECK(z(2, 2) == 0);
  CHECK(z.row_sum(0) == 2);
  CHECK(z.column_sum(2) == 1);

  CHECK(code_of([&] { confusion(pred, std::vector<std::uint8_t>{0}, 3); }) == ErrorCode::ShapeError);
  CHECK(code_of([&] { confusion(std::vector<std::uint8_t>{3}, std::vector<std::uint8_t>{0}, 3); }) ==
        ErrorCode::InvalidLabel);
  CHECK(code_of([&] { confusion(std::vector<std::uint8_t>{0}, std::vector<std::uint8_t>{4}, 3); }) ==
        ErrorCode::InvalidLabel);
}

TEST_CASE("independent predictions give kappa near zero") {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> truth_dist(0, 3);
  std::discrete_distribution<int> pred_dist({0.4, 0.3, 0.2, 0.1});
  ConfusionMatrix z(4);
  for (int i = 0; i < 200000; ++i) ++z(truth_dist(rng), pred_dist(rng));
  CHECK(std::abs(kappa(z)) < 0.02);
}

TEST_CASE("degenerate inputs raise their own errors") {
  CHECK(code_of([] { overall_accuracy(ConfusionMatrix(2)); }) == ErrorCode::EmptyEvaluation);
  CHECK(code_of([] { kappa(from_rows({{10, 0}, {0, 0}})) ; }) == ErrorCode::DegenerateMarginals);
  CHECK(code_of([] { average_accuracy(from_rows({{3, 1}, {0, 0}})); }) == ErrorCode::EmptyClass);
  CHECK(average_accuracy(from_rows({{3, 1}, {0, 0}}), AbsentClassPolicy::Skip) == 0.75);
  const auto recall = per_class_recall(from_rows({{3, 1}, {0, 0}}));
  CHECK(recall[0] == 0.75);
  CHECK(std::isnan(recall[1]));
}

TEST_CASE("confusion matrices accumulate") {
  ConfusionMatrix a = from_rows({{1, 2}, {3, 4}});
  a += from_rows({{1, 1}, {1, 1}});
  CHECK(a == from_rows({{2, 3}, {4, 5}}));
  CHECK_THROWS_AS(a += ConfusionMatrix(3), Error);
}

TEST_CASE("t-test p-values match reference values") {
  const std::vector<double> a{0.91, 0.93, 0.95, 0.92, 0.96};
  const std::vector<double> b{0.90, 0.91, 0.92, 0.915, 0.93};
  // Reference values from an independent statistics package.
  CHECK(t_test(a, b, TTestKind::Paired) == doctest::Approx(0.02036404880599275).epsilon(1e-9));
  CHECK(t_test(a, b, TTestKind::Welch) == doctest::Approx(0.12022081873536124).epsilon(1e-9));
  CHECK(t_test(a, a) == 1.0);

  const std::vector<double> shifted{1.91, 1.93, 1.95, 1.92, 1.96};
  CHECK(t_test(shifted, a) < 1e-10);
  const std::vector<double> c{0.5, 0.25, 0.75};
  const std::vector<double> d{1.5, 1.25, 1.75};
  CHECK(t_test(d, c) == 0.0);
  CHECK_THROWS_AS(t_test(std::vector<double>{1.0}, std::vector<double>{2.0}), Error);
  CHECK_THROWS_AS(t_test(a, std::vector<double>{1.0, 2.0}, TTestKind::Paired), Error);
}

TEST_CASE("t-test false positive rate is calibrated") {
  std::mt19937_64 rng(1234);
  std::normal_distribution<double> n(0.9, 0.02);
  int rejections = 0;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    std::vector<double> a(10), b(10);
    for (auto& v : a) v = n(rng);
    for (auto& v : b) v = n(rng);
    if (t_test(a, b) < 0.05) ++rejections;
  }
  const double rate = static_cast<double>(rejections) / trials;
  CHECK(rate >= 0.03);
  CHECK(rate <= 0.07);
}

TEST_CASE("mean and sample standard deviation") {
  const std::vector<double> v{2, 4, 4, 4, 5, 5, 7, 9};
  const MeanStd m = mean_std(v);
  CHECK(m.mean == 5.0);
  CHECK(m.stddev == doctest::Approx(std::sqrt(32.0 / 7.0)));
  CHECK(mean_std(std::vector<double>{3.0}).stddev == 0.0);
}
