// include/mcbf/types.hpp
//
// Shared numeric aliases and the (group, user) index layout used by every
// module. Users are flattened group-major, user-minor: user k of group g has
// flat index offset(g) + k.

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <vector>

namespace mcbf {

using cdouble = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

class GroupLayout {
 public:
  GroupLayout() = default;
  explicit GroupLayout(std::vector<int> sizes);

  int num_groups() const { return static_cast<int>(sizes_.size()); }
  int size(int g) const { return sizes_[g]; }
  int offset(int g) const { return offsets_[g]; }
  int total() const { return total_; }
  int group_of(int user) const { return group_of_[user]; }
  int index(int g, int k) const { return offsets_[g] + k; }
  const std::vector<int>& sizes() const { return sizes_; }

  bool operator==(const GroupLayout& other) const { return sizes_ == other.sizes_; }

 private:
  std::vector<int> sizes_;
  std::vector<int> offsets_;
  std::vector<int> group_of_;
  int total_ = 0;
};

// Stacked complex weights (length K_tot), one segment per group.
inline auto group_segment(const CVec& a, const GroupLayout& layout, int g) {
  return a.segment(layout.offset(g), layout.size(g));
}
inline auto group_segment(CVec& a, const GroupLayout& layout, int g) {
  return a.segment(layout.offset(g), layout.size(g));
}

}  // namespace mcbf
