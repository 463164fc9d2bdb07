#include "pcn/metrics.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "pcn/error.hpp"
#include "pcn/polsar.hpp"

namespace pcn {

namespace {

using Wide = __int128;

Wide gcd_wide(Wide a, Wide b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    const Wide t = a % b;
    a = b;
    b = t;
  }
  return a;
}

// Exact sum of recall fractions; falls back to long double if the common
// denominator would overflow.
double mean_of_fractions(const std::vector<std::pair<std::int64_t, std::int64_t>>& fractions) {
  constexpr Wide kLimit = Wide(1) << 100;
  Wide num = 0;
  Wide den = 1;
  bool exact = true;
  for (const auto& [n, d] : fractions) {
    const Wide g = gcd_wide(den, d);
    const Wide scale = d / g;
    if (den > kLimit / scale) {
      exact = false;
      break;
    }
    num = num * scale + Wide(n) * (den / g);
    den *= scale;
    const Wide r = gcd_wide(num, den);
    if (r > 1) {
      num /= r;
      den /= r;
    }
  }
  const auto count = static_cast<Wide>(fractions.size());
  if (exact && den <= kLimit / count) {
    den *= count;
    const Wide r = gcd_wide(num, den);
    if (r > 1) {
      num /= r;
      den /= r;
    }
    if (num < (Wide(1) << 53) && den < (Wide(1) << 53)) {
      return static_cast<double>(static_cast<std::int64_t>(num)) / static_cast<double>(static_cast<std::int64_t>(den));
    }
  }
  long double sum = 0.0L;
  for (const auto& [n, d] : fractions) sum += static_cast<long double>(n) / static_cast<long double>(d);
  return static_cast<double>(sum / static_cast<long double>(fractions.size()));
}

void require_scored(const ConfusionMatrix& z) {
  if (z.classes <= 0 || z.total() <= 0) fail(ErrorCode::EmptyEvaluation, "confusion matrix holds no scored pixels");
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(int num_classes) : classes(num_classes) {
  if (num_classes < 0) fail(ErrorCode::InvalidInput, "negative class count");
  counts.assign(static_cast<std::size_t>(num_classes) * static_cast<std::size_t>(num_classes), 0);
}

std::int64_t ConfusionMatrix::total() const { return std::accumulate(counts.begin(), counts.end(), std::int64_t{0}); }

std::int64_t ConfusionMatrix::row_sum(int truth) const {
  std::int64_t s = 0;
  for (int p = 0; p < classes; ++p) s += (*this)(truth, p);
  return s;
}

std::int64_t ConfusionMatrix::column_sum(int predicted) const {
  std::int64_t s = 0;
  for (int t = 0; t < classes; ++t) s += (*this)(t, predicted);
  return s;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.classes != classes) fail(ErrorCode::ShapeError, "cannot add confusion matrices of different sizes");
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
  return *this;
}

ConfusionMatrix confusion(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> truth,
                          int num_classes, std::span<const std::uint8_t> exclude) {
  if (predicted.size() != truth.size()) {
    fail(ErrorCode::ShapeError, "prediction has " + std::to_string(predicted.size()) + " cells, truth " +
                                    std::to_string(truth.size()));
  }
  if (!exclude.empty() && exclude.size() != truth.size()) {
    fail(ErrorCode::ShapeError, "exclusion mask does not match the truth grid");
  }
  ConfusionMatrix z(num_classes);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == kIgnoreLabel || (!exclude.empty() && exclude[i] != 0)) continue;
    if (truth[i] >= num_classes) {
      fail(ErrorCode::InvalidLabel, "truth id " + std::to_string(truth[i]) + " >= class count " +
                                        std::to_string(num_classes));
    }
    if (predicted[i] >= num_classes) {
      fail(ErrorCode::InvalidLabel, "predicted id " + std::to_string(predicted[i]) + " >= class count " +
                                        std::to_string(num_classes));
    }
    ++z(truth[i], predicted[i]);
  }
  return z;
}

double overall_accuracy(const ConfusionMatrix& z) {
  require_scored(z);
  std::int64_t correct = 0;
  for (int i = 0; i < z.classes; ++i) correct += z(i, i);
  return static_cast<double>(correct) / static_cast<double>(z.total());
}

std::vector<double> per_class_recall(const ConfusionMatrix& z) {
  std::vector<double> recall(static_cast<std::size_t>(z.classes), std::numeric_limits<double>::quiet_NaN());
  for (int i = 0; i < z.classes; ++i) {
    const auto n = z.row_sum(i);
    if (n > 0) recall[static_cast<std::size_t>(i)] = static_cast<double>(z(i, i)) / static_cast<double>(n);
  }
  return recall;
}

double average_accuracy(const ConfusionMatrix& z, AbsentClassPolicy policy) {
  require_scored(z);
  std::vector<std::pair<std::int64_t, std::int64_t>> fractions;
  for (int i = 0; i < z.classes; ++i) {
    const auto n = z.row_sum(i);
    if (n == 0) {
      if (policy == AbsentClassPolicy::Error) {
        fail(ErrorCode::EmptyClass, "class " + std::to_string(i) + " has no truth pixels");
      }
      continue;
    }
    fractions.emplace_back(z(i, i), n);
  }
  return mean_of_fractions(fractions);
}

double kappa(const ConfusionMatrix& z) {
  require_scored(z);
  // (OA - P) / (1 - P) == (N * correct - sum r_i c_i) / (N^2 - sum r_i c_i).
  const Wide n = z.total();
  Wide correct = 0;
  Wide chance = 0;
  for (int i = 0; i < z.classes; ++i) {
    correct += z(i, i);
    chance += Wide(z.row_sum(i)) * Wide(z.column_sum(i));
  }
  const Wide denom = n * n - chance;
  if (denom == 0) fail(ErrorCode::DegenerateMarginals, "chance agreement is 1; kappa is undefined");
  const Wide numer = n * correct - chance;
  const Wide g = gcd_wide(numer, denom);
  const Wide rn = numer / g;
  const Wide rd = denom / g;
  constexpr Wide kExactDouble = Wide(1) << 53;
  if (rn < kExactDouble && rn > -kExactDouble && rd < kExactDouble && rd > -kExactDouble) {
    return static_cast<double>(static_cast<std::int64_t>(rn)) / static_cast<double>(static_cast<std::int64_t>(rd));
  }
  return static_cast<double>(static_cast<long double>(rn) / static_cast<long double>(rd));
}

RunScores score(const ConfusionMatrix& z, AbsentClassPolicy policy) {
  return {overall_accuracy(z), average_accuracy(z, policy), kappa(z), per_class_recall(z)};
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd out;
  if (values.empty()) return out;
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

double t_test(std::span<const double> a, std::span<const double> b, TTestKind kind) {
  if (a.size() < 2 || b.size() < 2) fail(ErrorCode::InvalidInput, "t-test needs at least two runs per side");

  double t = 0.0;
  double dof = 0.0;
  double spread = 0.0;
  double mean_diff = 0.0;
  if (kind == TTestKind::Paired) {
    if (a.size() != b.size()) fail(ErrorCode::InvalidInput, "paired t-test needs equally many runs");
    std::vector<double> diff(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
    const auto ms = mean_std(diff);
    mean_diff = ms.mean;
    spread = ms.stddev / std::sqrt(static_cast<double>(diff.size()));
    dof = static_cast<double>(diff.size() - 1);
  } else {
    const auto ma = mean_std(a);
    const auto mb = mean_std(b);
    const double va = ma.stddev * ma.stddev / static_cast<double>(a.size());
    const double vb = mb.stddev * mb.stddev / static_cast<double>(b.size());
    mean_diff = ma.mean - mb.mean;
    spread = std::sqrt(va + vb);
    if (spread > 0.0) {
      dof = (va + vb) * (va + vb) /
            (va * va / static_cast<double>(a.size() - 1) + vb * vb / static_cast<double>(b.size() - 1));
    }
  }
  if (spread == 0.0) return mean_diff == 0.0 ? 1.0 : 0.0;
  t = mean_diff / spread;
  const boost::math::students_t dist(dof);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

}  // namespace pcn
