#include "tonemap/tensor.hpp"

#include <cmath>
#include <sstream>

#include "tonemap/errors.hpp"

namespace tonemap {

std::string Shape::str() const {
  std::ostringstream os;
  os << '(' << n << ',' << c << ',' << h << ',' << w << ')';
  return os.str();
}

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill) : shape_(shape) {
  if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0) {
    throw DimensionError("negative extent in shape " + shape.str());
  }
  data_.assign(static_cast<size_t>(shape.numel()), fill);
}

template <typename T>
Tensor<T>::Tensor(Shape shape, const std::vector<T>& data) : Tensor(shape, AlignedVector<T>(data.begin(), data.end())) {}

template <typename T>
Tensor<T>::Tensor(Shape shape, AlignedVector<T> data) : shape_(shape), data_(std::move(data)) {
  if (static_cast<int64_t>(data_.size()) != shape.numel()) {
    throw DimensionError("data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape.str());
  }
}

template <typename T>
Tensor<T> Tensor<T>::reshaped(Shape shape) const {
  if (shape.numel() != shape_.numel()) {
    throw DimensionError("cannot reshape " + shape_.str() + " to " + shape.str());
  }
  return Tensor(shape, data_);
}

template <typename T>
bool Tensor<T>::all_finite() const {
  for (T v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

template <typename T>
void Tensor<T>::fill(T v) {
  std::fill(data_.begin(), data_.end(), v);
}

template <typename T>
void Tensor<T>::axpy(T scale, const Tensor& other) {
  require_same_shape(shape_, other.shape_, "axpy");
  const T* src = other.data();
  T* dst = data_.data();
  const size_t count = data_.size();
  for (size_t i = 0; i < count; ++i) dst[i] += scale * src[i];
}

void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (!(a == b)) {
    throw DimensionError(std::string(what) + ": shape " + a.str() + " vs " + b.str());
  }
}

template <typename T>
void require_finite(const Tensor<T>& t, const std::string& what) {
  if (!t.all_finite()) throw NumericError(what + ": non-finite value");
}

template class Tensor<float>;
template class Tensor<double>;
template void require_finite(const Tensor<float>&, const std::string&);
template void require_finite(const Tensor<double>&, const std::string&);

}  // namespace tonemap
