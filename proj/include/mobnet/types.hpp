#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace mobnet {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

/// Library-wide error type; carries file/line context where relevant.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Census-region identifier. Tract-level geoids are 11 decimal digits,
/// block-level 15; only digits are allowed.
struct RegionId {
  std::string geoid;

  RegionId() = default;
  explicit RegionId(std::string g) : geoid(std::move(g)) {}

  bool operator==(const RegionId& o) const { return geoid == o.geoid; }
  bool operator!=(const RegionId& o) const { return geoid != o.geoid; }
  bool operator<(const RegionId& o) const { return geoid < o.geoid; }
};

inline bool all_digits(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (c < '0' || c > '9') return false;
  return true;
}

}  // namespace mobnet

template <>
struct std::hash<mobnet::RegionId> {
  std::size_t operator()(const mobnet::RegionId& r) const noexcept {
    return std::hash<std::string>{}(r.geoid);
  }
};
