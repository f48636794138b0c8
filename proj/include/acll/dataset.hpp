#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "acll/detail/random.hpp"
#include "acll/errors.hpp"

namespace acll {

enum class SplitTag { train, val, test };

/// One labeled 2-d point set. Inputs are row-major n x dim.
struct DatasetSplit {
  std::vector<double> inputs;
  std::vector<int> labels;
  int class_count = 0;
  int dim = 2;
  SplitTag tag = SplitTag::train;

  std::size_t size() const { return labels.size(); }
  const double* row(std::size_t i) const { return inputs.data() + i * dim; }
};

/// Train/val/test triple for one task.
struct TaskDataset {
  DatasetSplit train;
  DatasetSplit val;
  DatasetSplit test;
  int class_count = 0;
};

enum class DatasetKind { blobs, rings, spirals };

struct DatasetParams {
  int class_count = 2;
  int n_per_split = 512;
  double noise_std = 0.1;
};

namespace detail {

// Gaussian clusters at fixed grid centers; linearly separable at low noise.
inline void blob_center(int cls, int class_count, double& cx, double& cy) {
  int g = 1;
  while (g * g < class_count) ++g;
  const double span = 3.0;
  cx = (cls % g) * span - 0.5 * span * (g - 1);
  cy = (cls / g) * span - 0.5 * span * (g - 1);
}

inline DatasetSplit generate_split(DatasetKind kind, const DatasetParams& p,
                                   std::uint64_t seed, SplitTag tag) {
  DatasetSplit s;
  s.class_count = p.class_count;
  s.tag = tag;
  s.inputs.resize(static_cast<std::size_t>(p.n_per_split) * 2);
  s.labels.resize(p.n_per_split);
  Rng rng(seed);
  const double two_pi = 6.283185307179586476925287;
  for (int i = 0; i < p.n_per_split; ++i) {
    const int cls = i % p.class_count;  // balanced within +-1 by construction
    double x = 0.0, y = 0.0;
    switch (kind) {
      case DatasetKind::blobs: {
        double cx, cy;
        blob_center(cls, p.class_count, cx, cy);
        x = cx + p.noise_std * rng.gaussian();
        y = cy + p.noise_std * rng.gaussian();
        break;
      }
      case DatasetKind::rings: {
        const double radius = 1.0 + 1.0 * cls;
        const double angle = two_pi * rng.uniform();
        const double r = radius + p.noise_std * rng.gaussian();
        x = r * std::cos(angle);
        y = r * std::sin(angle);
        break;
      }
      case DatasetKind::spirals: {
        const double t = rng.uniform();
        const double revolutions = 1.25;
        const double angle = two_pi * (revolutions * t + double(cls) / p.class_count);
        const double radius = 0.4 + 2.6 * t;
        x = radius * std::cos(angle) + p.noise_std * rng.gaussian();
        y = radius * std::sin(angle) + p.noise_std * rng.gaussian();
        break;
      }
    }
    s.inputs[2 * i] = x;
    s.inputs[2 * i + 1] = y;
    s.labels[i] = cls;
  }
  return s;
}

}  // namespace detail

/// Generates a deterministic synthetic task. The three splits are drawn from
/// disjoint seed streams derived from `seed`.
inline TaskDataset generate_dataset(DatasetKind kind, const DatasetParams& p,
                                    std::uint64_t seed) {
  if (p.class_count < 2) throw InvalidSpecError("generate_dataset: class_count must be >= 2");
  if (p.noise_std < 0.0) throw InvalidSpecError("generate_dataset: noise_std must be >= 0");
  if (p.n_per_split < p.class_count)
    throw InvalidSpecError("generate_dataset: n_per_split must be >= class_count");
  TaskDataset d;
  d.class_count = p.class_count;
  d.train = detail::generate_split(kind, p, detail::derive_seed(seed, 1), SplitTag::train);
  d.val = detail::generate_split(kind, p, detail::derive_seed(seed, 2), SplitTag::val);
  d.test = detail::generate_split(kind, p, detail::derive_seed(seed, 3), SplitTag::test);
  return d;
}

inline DatasetKind dataset_kind_from_string(const std::string& s) {
  if (s == "blobs") return DatasetKind::blobs;
  if (s == "rings") return DatasetKind::rings;
  if (s == "spirals") return DatasetKind::spirals;
  throw InvalidSpecError("unknown dataset kind: " + s);
}

inline std::string to_string(DatasetKind k) {
  switch (k) {
    case DatasetKind::blobs: return "blobs";
    case DatasetKind::rings: return "rings";
    case DatasetKind::spirals: return "spirals";
  }
  return "?";
}

namespace detail {

/// Shortest round-trip decimal form of a double (also used for CSV output).
inline std::string format_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

/// Writes a split as CSV rows `x1,x2,label` with a header line.
inline void export_csv(const DatasetSplit& s, std::ostream& os) {
  os << "x1,x2,label\n";
  for (std::size_t i = 0; i < s.size(); ++i) {
    os << detail::format_double(s.inputs[2 * i]) << ','
       << detail::format_double(s.inputs[2 * i + 1]) << ',' << s.labels[i] << '\n';
  }
}

}  // namespace acll
