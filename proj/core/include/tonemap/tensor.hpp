#pragma once

#include <cstddef>
#include <cstdint>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace tonemap {

// Rank-4 extent in (batch, channel, height, width) order.
struct Shape {
  int64_t n = 1;
  int64_t c = 1;
  int64_t h = 1;
  int64_t w = 1;

  int64_t numel() const { return n * c * h * w; }
  int64_t plane() const { return h * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

// Fixed 64-byte alignment so vectorised kernels split their loops the same
// way on every run (Eigen peels by runtime alignment).
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlignment{64};

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlignment)); }
  void deallocate(T* p, size_t) { ::operator delete(p, kAlignment); }

  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const { return true; }
};

template <typename T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

// Dense row-major (n, c, h, w) array. Plain value type: copies are deep.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0));
  Tensor(Shape shape, const std::vector<T>& data);
  Tensor(Shape shape, AlignedVector<T> data);

  static Tensor zeros(Shape shape) { return Tensor(shape); }
  static Tensor full(Shape shape, T v) { return Tensor(shape, v); }
  static Tensor scalar(T v) { return Tensor(Shape{1, 1, 1, 1}, v); }

  const Shape& shape() const { return shape_; }
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }
  int64_t n() const { return shape_.n; }
  int64_t c() const { return shape_.c; }
  int64_t h() const { return shape_.h; }
  int64_t w() const { return shape_.w; }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  T* plane(int64_t in, int64_t ic) { return data_.data() + (in * shape_.c + ic) * shape_.plane(); }
  const T* plane(int64_t in, int64_t ic) const {
    return data_.data() + (in * shape_.c + ic) * shape_.plane();
  }

  T& at(int64_t in, int64_t ic, int64_t y, int64_t x) {
    return data_[((in * shape_.c + ic) * shape_.h + y) * shape_.w + x];
  }
  T at(int64_t in, int64_t ic, int64_t y, int64_t x) const {
    return data_[((in * shape_.c + ic) * shape_.h + y) * shape_.w + x];
  }
  T& operator[](int64_t i) { return data_[i]; }
  T operator[](int64_t i) const { return data_[i]; }

  // Same data, new extent. Throws DimensionError when numel differs.
  Tensor reshaped(Shape shape) const;

  template <typename U>
  Tensor<U> cast() const {
    AlignedVector<U> out(data_.begin(), data_.end());
    return Tensor<U>(shape_, std::move(out));
  }

  bool all_finite() const;
  void fill(T v);
  // this += scale * other, shapes must match.
  void axpy(T scale, const Tensor& other);

 private:
  Shape shape_{0, 0, 0, 0};
  AlignedVector<T> data_;
};

using Tensorf = Tensor<float>;
using Tensord = Tensor<double>;

// Throws DimensionError with `what` when the shapes differ.
void require_same_shape(const Shape& a, const Shape& b, const char* what);

// Throws NumericError naming `what` when any value is NaN/Inf.
template <typename T>
void require_finite(const Tensor<T>& t, const std::string& what);

}  // namespace tonemap
