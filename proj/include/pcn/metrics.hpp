#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace pcn {

/// counts[truth * classes + predicted].
struct ConfusionMatrix {
  int classes = 0;
  std::vector<std::int64_t> counts;

  explicit ConfusionMatrix(int num_classes = 0);

  std::int64_t& operator()(int truth, int predicted) {
    return counts[static_cast<std::size_t>(truth) * static_cast<std::size_t>(classes) +
                  static_cast<std::size_t>(predicted)];
  }
  std::int64_t operator()(int truth, int predicted) const {
    return counts[static_cast<std::size_t>(truth) * static_cast<std::size_t>(classes) +
                  static_cast<std::size_t>(predicted)];
  }
  std::int64_t total() const;
  std::int64_t row_sum(int truth) const;
  std::int64_t column_sum(int predicted) const;

  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Tallies pixels whose truth is not kIgnoreLabel. Pixels whose `exclude`
/// entry is nonzero (e.g. training pixels) are skipped too.
ConfusionMatrix confusion(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> truth,
                          int num_classes, std::span<const std::uint8_t> exclude = {});

double overall_accuracy(const ConfusionMatrix& z);

enum class AbsentClassPolicy { Error, Skip };

/// Recall per class; NaN for classes without truth pixels.
std::vector<double> per_class_recall(const ConfusionMatrix& z);
double average_accuracy(const ConfusionMatrix& z, AbsentClassPolicy policy = AbsentClassPolicy::Error);

/// Cohen's kappa with chance agreement P = sum_i row_i * col_i / N^2.
double kappa(const ConfusionMatrix& z);

struct RunScores {
  double oa = 0.0;
  double aa = 0.0;
  double kappa = 0.0;
  std::vector<double> per_class_recall;
};

RunScores score(const ConfusionMatrix& z, AbsentClassPolicy policy = AbsentClassPolicy::Error);

enum class TTestKind { Paired, Welch };

/// Two-tailed p-value. Paired runs use the per-run differences. A zero
/// spread with a nonzero mean difference gives p = 0; zero spread and zero
/// mean difference give p = 1.
double t_test(std::span<const double> a, std::span<const double> b, TTestKind kind = TTestKind::Paired);

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation
};

MeanStd mean_std(std::span<const double> values);

}  // namespace pcn
