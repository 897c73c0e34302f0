#include "handpose/autodiff/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace handpose::ad {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i != 0) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return filled(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::filled(Shape shape, double value, bool requires_grad) {
  const std::size_t n = shape_size(shape);
  return from_values(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::from_values(Shape shape, std::vector<double> values, bool requires_grad) {
  if (shape.empty()) throw std::invalid_argument("tensor shape must have rank >= 1");
  for (std::size_t extent : shape) {
    if (extent == 0) {
      throw std::invalid_argument("tensor extents must be positive, got " +
                                  shape_string(shape));
    }
  }
  if (shape_size(shape) != values.size()) {
    throw std::invalid_argument("tensor shape " + shape_string(shape) + " needs " +
                                std::to_string(shape_size(shape)) + " values, got " +
                                std::to_string(values.size()));
  }
  auto storage = std::make_shared<Storage>();
  storage->shape = std::move(shape);
  storage->values = std::move(values);
  storage->requires_grad = requires_grad;
  return Tensor(std::move(storage));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from_values({1}, {value}, requires_grad);
}

const Tensor::Storage& Tensor::storage() const {
  if (!storage_) throw std::logic_error("use of undefined tensor");
  return *storage_;
}

Tensor::Storage& Tensor::storage() {
  if (!storage_) throw std::logic_error("use of undefined tensor");
  return *storage_;
}

const Shape& Tensor::shape() const { return storage().shape; }

std::size_t Tensor::size() const { return storage().values.size(); }

std::size_t Tensor::rows() const {
  if (rank() != 2) throw std::invalid_argument("expected rank-2 tensor, got " + shape_string(shape()));
  return shape()[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw std::invalid_argument("expected rank-2 tensor, got " + shape_string(shape()));
  return shape()[1];
}

std::span<const double> Tensor::values() const { return storage().values; }

std::span<double> Tensor::mutable_values() { return storage().values; }

double Tensor::item() const {
  if (size() != 1) throw std::invalid_argument("item() on non-scalar tensor " + shape_string(shape()));
  return storage().values[0];
}

double Tensor::at(std::size_t row, std::size_t col) const {
  return storage().values[row * cols() + col];
}

bool Tensor::requires_grad() const { return storage().requires_grad; }

void Tensor::set_requires_grad(bool flag) { storage().requires_grad = flag; }

bool Tensor::has_grad() const { return !storage().grad.empty(); }

std::span<const double> Tensor::grad() const {
  if (!has_grad()) throw std::logic_error("tensor has no gradient");
  return storage().grad;
}

std::span<double> Tensor::mutable_grad() {
  Storage& s = storage();
  if (s.grad.empty()) s.grad.assign(s.values.size(), 0.0);
  return s.grad;
}

void Tensor::zero_grad() { storage().grad.clear(); }

Tensor Tensor::clone() const {
  auto copy = std::make_shared<Storage>(storage());
  return Tensor(std::move(copy));
}

Tensor Tensor::detach() const {
  return from_values(shape(), storage().values, false);
}

}  // namespace handpose::ad
