#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace handpose::ad {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array of doubles with an optional gradient buffer.
///
/// Tensor is a handle: copies share storage. Use clone() for a deep copy.
/// Values are 64-bit throughout; the gradient buffer is allocated lazily on
/// first accumulation and always matches the value shape.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor filled(Shape shape, double value, bool requires_grad = false);
  static Tensor from_values(Shape shape, std::vector<double> values,
                            bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return storage_ != nullptr; }

  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t size() const;
  /// Leading extent of a rank-2 tensor.
  std::size_t rows() const;
  /// Trailing extent of a rank-2 tensor.
  std::size_t cols() const;

  std::span<const double> values() const;
  std::span<double> mutable_values();
  double item() const;
  double at(std::size_t row, std::size_t col) const;

  bool requires_grad() const;
  void set_requires_grad(bool flag);

  bool has_grad() const;
  std::span<const double> grad() const;
  /// Gradient buffer, zero-allocated on first access.
  std::span<double> mutable_grad();
  void zero_grad();

  Tensor clone() const;
  /// Tensor sharing no storage and carrying no gradient requirement.
  Tensor detach() const;

  bool is_same(const Tensor& other) const { return storage_ == other.storage_; }

 private:
  struct Storage {
    Shape shape;
    std::vector<double> values;
    std::vector<double> grad;
    bool requires_grad = false;
  };

  explicit Tensor(std::shared_ptr<Storage> storage) : storage_(std::move(storage)) {}
  const Storage& storage() const;
  Storage& storage();

  std::shared_ptr<Storage> storage_;
};

}  // namespace handpose::ad
