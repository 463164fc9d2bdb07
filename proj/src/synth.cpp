#include "pcn/synth.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

#include "pcn/error.hpp"

namespace pcn {

namespace {

using Matrix3c = Eigen::Matrix3cd;

std::uint64_t splitmix(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Counter-based stream: value i of key k is a pure function of (k, i).
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(splitmix(key)) {}
  double uniform() { return static_cast<double>(splitmix(key_ ^ splitmix(counter_++)) >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Circular complex Gaussian with E|z|^2 = 1.
Complex complex_gaussian(CounterRng& rng) {
  const double u1 = 1.0 - rng.uniform();  // (0, 1]
  const double u2 = rng.uniform();
  const double r = std::sqrt(-std::log(u1));
  const double phi = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(phi), r * std::sin(phi)};
}

Matrix3c to_eigen(const HermitianMatrix3& h) {
  Matrix3c m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m(r, c) = h(r, c);
  return m;
}

Matrix3c square_root_factor(const HermitianMatrix3& model) {
  Eigen::SelfAdjointEigenSolver<Matrix3c> eig(to_eigen(model));
  Eigen::Vector3d roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * roots.asDiagonal();
}

template <typename T>
T number(const std::string& key, const std::string& text) {
  T out{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, out);
  if (ec != std::errc() || ptr != end) fail(ErrorCode::ConfigError, "bad value for " + key + ": '" + text + "'");
  return out;
}

std::vector<std::string> fields(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto a = item.find_first_not_of(" \t");
    const auto b = item.find_last_not_of(" \t");
    out.push_back(a == std::string::npos ? std::string() : item.substr(a, b - a + 1));
  }
  return out;
}

// "class.N.cov" / "rect.N" index.
int key_index(const std::string& key, std::size_t prefix, std::size_t suffix) {
  return number<int>(key, key.substr(prefix, key.size() - prefix - suffix));
}

}  // namespace

void SynthSpec::validate() const {
  if (height <= 0 || width <= 0) fail(ErrorCode::InvalidInput, "synthetic scene needs positive height and width");
  if (num_classes < 1 || num_classes > 254) fail(ErrorCode::InvalidInput, "num_classes must be in 1..254");
  if (static_cast<int>(covariances.size()) != num_classes) {
    fail(ErrorCode::InvalidInput, "expected " + std::to_string(num_classes) + " class covariance models, got " +
                                      std::to_string(covariances.size()));
  }
  for (std::size_t c = 0; c < covariances.size(); ++c) {
    const auto& m = covariances[c];
    bool finite = true;
    for (const auto& z : m.m) finite = finite && std::isfinite(z.real()) && std::isfinite(z.imag());
    if (!finite || !m.is_hermitian(1e-12)) {
      fail(ErrorCode::InvalidInput, "class " + std::to_string(c) + " covariance is not Hermitian");
    }
    if (!m.is_psd()) fail(ErrorCode::InvalidInput, "class " + std::to_string(c) + " covariance is not PSD");
  }
  if (looks < 1) fail(ErrorCode::InvalidInput, "looks must be at least 1");
  if ((voronoi_sites > 0) == !rects.empty()) {
    fail(ErrorCode::InvalidInput, "geometry needs either voronoi sites or rectangles");
  }
  for (const auto& r : rects) {
    if (r.class_id < 0 || r.class_id >= num_classes) fail(ErrorCode::InvalidInput, "rectangle class out of range");
    if (r.row0 < 0 || r.col0 < 0 || r.row1 > height || r.col1 > width || r.row0 > r.row1 || r.col0 > r.col1) {
      fail(ErrorCode::InvalidInput, "rectangle outside the scene");
    }
  }
}

SynthSpec synth_spec_from_key_values(const KeyValues& values) {
  SynthSpec spec;
  std::vector<std::pair<int, HermitianMatrix3>> models;
  std::vector<std::pair<int, SynthRect>> rects;
  for (const auto& [key, value] : values) {
    if (key == "height") {
      spec.height = number<int>(key, value);
    } else if (key == "width") {
      spec.width = number<int>(key, value);
    } else if (key == "num_classes") {
      spec.num_classes = number<int>(key, value);
    } else if (key == "seed") {
      spec.seed = number<std::uint64_t>(key, value);
    } else if (key == "looks") {
      spec.looks = number<int>(key, value);
    } else if (key == "geometry") {
      if (value.rfind("voronoi:", 0) != 0) fail(ErrorCode::ConfigError, "geometry must be voronoi:K");
      spec.voronoi_sites = number<int>(key, value.substr(8));
      if (spec.voronoi_sites <= 0) fail(ErrorCode::InvalidInput, "voronoi needs at least one site");
    } else if (key.rfind("class.", 0) == 0 && key.size() > 10 && key.ends_with(".cov")) {
      const auto f = fields(value);
      if (f.size() != 9) fail(ErrorCode::ConfigError, key + " expects 9 numbers");
      double v[9];
      for (int i = 0; i < 9; ++i) v[i] = number<double>(key, f[static_cast<std::size_t>(i)]);
      HermitianMatrix3 m;
      m(0, 0) = v[0];
      m(1, 1) = v[1];
      m(2, 2) = v[2];
      m(0, 2) = {v[3], v[4]};
      m(2, 0) = std::conj(m(0, 2));
      m(0, 1) = {v[5], v[6]};
      m(1, 0) = std::conj(m(0, 1));
      m(1, 2) = {v[7], v[8]};
      m(2, 1) = std::conj(m(1, 2));
      models.emplace_back(key_index(key, 6, 4), m);
    } else if (key.rfind("rect.", 0) == 0) {
      const auto f = fields(value);
      if (f.size() != 5) fail(ErrorCode::ConfigError, key + " expects class,row0,col0,row1,col1");
      SynthRect r{number<int>(key, f[0]), number<int>(key, f[1]), number<int>(key, f[2]), number<int>(key, f[3]),
                  number<int>(key, f[4])};
      rects.emplace_back(key_index(key, 5, 0), r);
    } else {
      fail(ErrorCode::ConfigError, "unknown synth key '" + key + "'");
    }
  }
  std::sort(models.begin(), models.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 0; i < models.size(); ++i) {
    if (models[i].first != static_cast<int>(i)) fail(ErrorCode::ConfigError, "class models must be numbered 0..C-1");
    spec.covariances.push_back(models[i].second);
  }
  std::stable_sort(rects.begin(), rects.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [_, r] : rects) spec.rects.push_back(r);
  spec.validate();
  return spec;
}

SynthSpec read_synth_spec(const std::filesystem::path& path) {
  return synth_spec_from_key_values(read_key_value_file(path));
}

std::vector<std::uint8_t> region_labels(const SynthSpec& spec) {
  spec.validate();
  const std::size_t n = static_cast<std::size_t>(spec.height) * static_cast<std::size_t>(spec.width);
  std::vector<std::uint8_t> labels(n, kIgnoreLabel);
  if (spec.voronoi_sites > 0) {
    std::vector<std::pair<double, double>> sites;
    CounterRng rng(spec.seed ^ 0x5EEDC0DE5EEDC0DEULL);
    for (int i = 0; i < spec.voronoi_sites; ++i) {
      const double r = rng.uniform() * spec.height;
      const double c = rng.uniform() * spec.width;
      sites.emplace_back(r, c);
    }
    for (int row = 0; row < spec.height; ++row) {
      for (int col = 0; col < spec.width; ++col) {
        double best = std::numeric_limits<double>::infinity();
        int owner = 0;
        for (int i = 0; i < spec.voronoi_sites; ++i) {
          const double dr = row + 0.5 - sites[static_cast<std::size_t>(i)].first;
          const double dc = col + 0.5 - sites[static_cast<std::size_t>(i)].second;
          const double d = dr * dr + dc * dc;
          if (d < best) {
            best = d;
            owner = i;
          }
        }
        labels[static_cast<std::size_t>(row) * static_cast<std::size_t>(spec.width) + static_cast<std::size_t>(col)] =
            static_cast<std::uint8_t>(owner % spec.num_classes);
      }
    }
  } else {
    for (const auto& r : spec.rects)
      for (int row = r.row0; row < r.row1; ++row)
        for (int col = r.col0; col < r.col1; ++col)
          labels[static_cast<std::size_t>(row) * static_cast<std::size_t>(spec.width) +
                 static_cast<std::size_t>(col)] = static_cast<std::uint8_t>(r.class_id);
    for (auto l : labels)
      if (l == kIgnoreLabel) fail(ErrorCode::InvalidInput, "rectangles do not cover the scene");
  }
  std::vector<std::size_t> area(static_cast<std::size_t>(spec.num_classes), 0);
  for (auto l : labels) ++area[l];
  for (std::size_t c = 0; c < area.size(); ++c)
    if (area[c] == 0) fail(ErrorCode::InvalidInput, "class " + std::to_string(c) + " has zero area");
  return labels;
}

SynthScene generate_synthetic_scene(const SynthSpec& spec) {
  SynthScene out;
  out.labels = region_labels(spec);
  std::vector<Matrix3c> factors;
  for (const auto& m : spec.covariances) factors.push_back(square_root_factor(m));

  auto& scene = out.scene;
  scene.height = spec.height;
  scene.width = spec.width;
  scene.pixels.resize(out.labels.size());
  const double look_scale = 1.0 / std::sqrt(static_cast<double>(spec.looks));
  // volatile: g++ 11 at -O3 folds the float round trip away when the result is a complex.
  const auto round32 = [](Complex z) {
    volatile float re = static_cast<float>(z.real());
    volatile float im = static_cast<float>(z.imag());
    return Complex(re, im);
  };
  for (std::size_t px = 0; px < scene.pixels.size(); ++px) {
    const Matrix3c& L = factors[out.labels[px]];
    Eigen::Vector3cd k = Eigen::Vector3cd::Zero();
    for (int look = 0; look < spec.looks; ++look) {
      CounterRng rng(splitmix(spec.seed) ^ splitmix((static_cast<std::uint64_t>(px) << 16) + static_cast<std::uint64_t>(look)));
      Eigen::Vector3cd g;
      for (int i = 0; i < 3; ++i) g(i) = complex_gaussian(rng);
      k += L * g;
    }
    k *= look_scale;
    auto& s = scene.pixels[px];
    s.hh = round32(k(0));
    s.hv = round32(k(1) / std::numbers::sqrt2);
    s.vh = s.hv;
    s.vv = round32(k(2));
  }
  return out;
}

std::vector<std::uint8_t> wishart_classify(const PolsarScene& scene, const std::vector<HermitianMatrix3>& models) {
  scene.validate();
  if (models.empty()) fail(ErrorCode::InvalidInput, "no class models");
  std::vector<Matrix3c> inverses;
  std::vector<double> log_dets;
  for (const auto& m : models) {
    const Matrix3c e = to_eigen(m);
    const double det = e.determinant().real();
    if (!(det > 0.0)) fail(ErrorCode::InvalidInput, "class model must be positive definite");
    inverses.push_back(e.inverse());
    log_dets.push_back(std::log(det));
  }
  std::vector<std::uint8_t> out(scene.size());
  for (std::size_t px = 0; px < scene.size(); ++px) {
    const auto kl = lexicographic_vector(scene.pixels[px]);
    Eigen::Vector3cd k(kl.v[0], kl.v[1], kl.v[2]);
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t c = 0; c < models.size(); ++c) {
      const double d = log_dets[c] + (k.adjoint() * inverses[c] * k)(0).real();
      if (d < best) {
        best = d;
        arg = c;
      }
    }
    out[px] = static_cast<std::uint8_t>(arg);
  }
  return out;
}

}  // namespace pcn
