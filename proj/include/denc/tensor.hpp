#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace denc {

// Dense row-major tensor. Rank is unconstrained for storage (the checkpoint
// format is rank-generic) but the tape primitives operate on rank-2 values;
// scalars are 1x1, vectors 1xk.
template <typename Scalar>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<std::int64_t> shape) : shape_(std::move(shape)) {
    data_.assign(checked_numel(shape_), Scalar(0));
  }

  Tensor(std::vector<std::int64_t> shape, std::vector<Scalar> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (checked_numel(shape_) != static_cast<std::int64_t>(data_.size()))
      throw std::invalid_argument("tensor data length does not match shape");
  }

  static Tensor zeros(std::int64_t r, std::int64_t c) { return Tensor({r, c}); }

  static Tensor full(std::int64_t r, std::int64_t c, Scalar v) {
    Tensor t({r, c});
    t.data_.assign(t.data_.size(), v);
    return t;
  }

  static Tensor scalar(Scalar v) { return Tensor({1, 1}, {v}); }

  static Tensor row(std::vector<Scalar> values) {
    const std::int64_t n = static_cast<std::int64_t>(values.size());
    return Tensor({1, n}, std::move(values));
  }

  static Tensor matrix(std::int64_t r, std::int64_t c, std::vector<Scalar> values) {
    return Tensor({r, c}, std::move(values));
  }

  std::size_t rank() const { return shape_.size(); }
  const std::vector<std::int64_t>& shape() const { return shape_; }

  std::int64_t rows() const {
    require_rank2();
    return shape_[0];
  }
  std::int64_t cols() const {
    require_rank2();
    return shape_[1];
  }

  std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }

  Scalar& at(std::int64_t r, std::int64_t c) { return data_[r * cols() + c]; }
  Scalar at(std::int64_t r, std::int64_t c) const { return data_[r * cols() + c]; }

  Scalar& operator[](std::int64_t i) { return data_[i]; }
  Scalar operator[](std::int64_t i) const { return data_[i]; }

  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }
  const std::vector<Scalar>& values() const { return data_; }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  Tensor reshaped(std::vector<std::int64_t> new_shape) const {
    Tensor t;
    if (checked_numel(new_shape) != numel())
      throw std::invalid_argument("reshape changes element count");
    t.shape_ = std::move(new_shape);
    t.data_ = data_;
    return t;
  }

  bool all_finite() const {
    for (Scalar v : data_)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  template <typename Other>
  Tensor<Other> cast() const {
    std::vector<Other> d(data_.size());
    for (std::size_t i = 0; i < data_.size(); ++i) d[i] = static_cast<Other>(data_[i]);
    return Tensor<Other>(shape_, std::move(d));
  }

  std::string shape_str() const {
    std::ostringstream ss;
    ss << "[";
    for (std::size_t i = 0; i < shape_.size(); ++i) ss << (i ? "x" : "") << shape_[i];
    ss << "]";
    return ss.str();
  }

 private:
  static std::int64_t checked_numel(const std::vector<std::int64_t>& shape) {
    if (shape.empty()) throw std::invalid_argument("tensor rank must be >= 1");
    std::int64_t n = 1;
    for (std::int64_t e : shape) {
      if (e <= 0) throw std::invalid_argument("tensor extents must be positive");
      n *= e;
    }
    return n;
  }

  void require_rank2() const {
    if (shape_.size() != 2) throw std::invalid_argument("rank-2 tensor required");
  }

  std::vector<std::int64_t> shape_;
  std::vector<Scalar> data_;
};

using Tensor32 = Tensor<float>;
using Tensor64 = Tensor<double>;

template <typename Scalar>
using EigenRowMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
Eigen::Map<const EigenRowMat<Scalar>> emap(const Tensor<Scalar>& t) {
  return {t.data(), t.rows(), t.cols()};
}

template <typename Scalar>
Eigen::Map<EigenRowMat<Scalar>> emap_mut(Tensor<Scalar>& t) {
  return {t.data(), t.rows(), t.cols()};
}

}  // namespace denc
