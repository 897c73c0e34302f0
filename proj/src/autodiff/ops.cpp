#include "handpose/autodiff/ops.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace handpose::ad {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using Map = Eigen::Map<RowMatrix>;

ConstMap as_matrix(std::span<const double> data, std::size_t rows, std::size_t cols) {
  return ConstMap(data.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

Map as_matrix(std::span<double> data, std::size_t rows, std::size_t cols) {
  return Map(data.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

void require_rank2(const Tensor& t, const char* op) {
  require(t.rank() == 2, std::string(op) + ": expected rank-2 tensor, got " + shape_string(t.shape()));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  require(a.shape() == b.shape(), std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                                      " vs " + shape_string(b.shape()));
}

bool is_row_broadcast(const Tensor& a, const Tensor& b) {
  return a.rank() == 2 && b.rank() == 1 && b.size() == a.cols();
}

// Unary elementwise op whose derivative depends on input and output value.
template <typename Forward, typename Derivative>
Tensor unary(Tape& tape, const Tensor& a, Forward forward, Derivative derivative) {
  std::vector<double> out(a.size());
  const auto in = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = forward(in[i]);
  return tape.record(Tensor::from_values(a.shape(), std::move(out)), {a},
                     [derivative](const Tensor& y, std::vector<Tensor>& inputs) {
                       Tensor& x = inputs[0];
                       const auto dy = y.grad();
                       const auto xv = x.values();
                       const auto yv = y.values();
                       auto dx = x.mutable_grad();
                       for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i] * derivative(xv[i], yv[i]);
                     });
}

}  // namespace

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  require(a.cols() == b.rows(), "matmul: inner extents disagree, " + shape_string(a.shape()) +
                                    " * " + shape_string(b.shape()));
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out = Tensor::zeros({m, n});
  as_matrix(out.mutable_values(), m, n).noalias() = as_matrix(a.values(), m, k) * as_matrix(b.values(), k, n);
  return tape.record(std::move(out), {a, b}, [m, k, n](const Tensor& c, std::vector<Tensor>& in) {
    const auto dc = as_matrix(c.grad(), m, n);
    if (in[0].requires_grad()) {
      as_matrix(in[0].mutable_grad(), m, k).noalias() += dc * as_matrix(in[1].values(), k, n).transpose();
    }
    if (in[1].requires_grad()) {
      as_matrix(in[1].mutable_grad(), k, n).noalias() += as_matrix(in[0].values(), m, k).transpose() * dc;
    }
  });
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape()) {
    std::vector<double> out(a.values().begin(), a.values().end());
    const auto bv = b.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
    return tape.record(Tensor::from_values(a.shape(), std::move(out)), {a, b},
                       [](const Tensor& y, std::vector<Tensor>& in) {
                         const auto dy = y.grad();
                         for (Tensor& t : in) {
                           if (!t.requires_grad()) continue;
                           auto dt = t.mutable_grad();
                           for (std::size_t i = 0; i < dt.size(); ++i) dt[i] += dy[i];
                         }
                       });
  }
  require(is_row_broadcast(a, b), "add: incompatible shapes " + shape_string(a.shape()) + " and " +
                                      shape_string(b.shape()));
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(a.values().begin(), a.values().end());
  const auto bv = b.values();
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] += bv[c];
  return tape.record(Tensor::from_values(a.shape(), std::move(out)), {a, b},
                     [m, n](const Tensor& y, std::vector<Tensor>& in) {
                       const auto dy = y.grad();
                       if (in[0].requires_grad()) {
                         auto da = in[0].mutable_grad();
                         for (std::size_t i = 0; i < da.size(); ++i) da[i] += dy[i];
                       }
                       if (in[1].requires_grad()) {
                         auto db = in[1].mutable_grad();
                         for (std::size_t r = 0; r < m; ++r)
                           for (std::size_t c = 0; c < n; ++c) db[c] += dy[r * n + c];
                       }
                     });
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.values().begin(), a.values().end());
  const auto bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return tape.record(Tensor::from_values(a.shape(), std::move(out)), {a, b},
                     [](const Tensor& y, std::vector<Tensor>& in) {
                       const auto dy = y.grad();
                       if (in[0].requires_grad()) {
                         auto da = in[0].mutable_grad();
                         for (std::size_t i = 0; i < da.size(); ++i) da[i] += dy[i];
                       }
                       if (in[1].requires_grad()) {
                         auto db = in[1].mutable_grad();
                         for (std::size_t i = 0; i < db.size(); ++i) db[i] -= dy[i];
                       }
                     });
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.size());
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return tape.record(Tensor::from_values(a.shape(), std::move(out)), {a, b},
                     [](const Tensor& y, std::vector<Tensor>& in) {
                       const auto dy = y.grad();
                       // Read both value buffers before writing: a and b may alias.
                       const auto av = in[0].values();
                       const auto bv = in[1].values();
                       if (in[0].requires_grad()) {
                         auto da = in[0].mutable_grad();
                         for (std::size_t i = 0; i < da.size(); ++i) da[i] += dy[i] * bv[i];
                       }
                       if (in[1].requires_grad()) {
                         auto db = in[1].mutable_grad();
                         for (std::size_t i = 0; i < db.size(); ++i) db[i] += dy[i] * av[i];
                       }
                     });
}

Tensor scale(Tape& tape, const Tensor& a, double factor) {
  return unary(tape, a, [factor](double x) { return factor * x; },
               [factor](double, double) { return factor; });
}

Tensor add_scalar(Tape& tape, const Tensor& a, double offset) {
  return unary(tape, a, [offset](double x) { return x + offset; }, [](double, double) { return 1.0; });
}

Tensor relu(Tape& tape, const Tensor& a) {
  return unary(tape, a, [](double x) { return x > 0.0 ? x : 0.0; },
               [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor tanh(Tape& tape, const Tensor& a) {
  return unary(tape, a, [](double x) { return std::tanh(x); },
               [](double, double y) { return 1.0 - y * y; });
}

Tensor exp(Tape& tape, const Tensor& a) {
  return unary(tape, a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor abs(Tape& tape, const Tensor& a) {
  return unary(tape, a, [](double x) { return std::abs(x); },
               [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Tensor concat_cols(Tape& tape, const Tensor& a, const Tensor& b) {
  require_rank2(a, "concat_cols");
  require_rank2(b, "concat_cols");
  require(a.rows() == b.rows(), "concat_cols: row counts disagree, " + shape_string(a.shape()) +
                                    " and " + shape_string(b.shape()));
  const std::size_t m = a.rows(), na = a.cols(), nb = b.cols(), n = na + nb;
  std::vector<double> out(m * n);
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t r = 0; r < m; ++r) {
    std::copy_n(av.begin() + r * na, na, out.begin() + r * n);
    std::copy_n(bv.begin() + r * nb, nb, out.begin() + r * n + na);
  }
  return tape.record(Tensor::from_values({m, n}, std::move(out)), {a, b},
                     [m, na, nb, n](const Tensor& y, std::vector<Tensor>& in) {
                       const auto dy = y.grad();
                       if (in[0].requires_grad()) {
                         auto da = in[0].mutable_grad();
                         for (std::size_t r = 0; r < m; ++r)
                           for (std::size_t c = 0; c < na; ++c) da[r * na + c] += dy[r * n + c];
                       }
                       if (in[1].requires_grad()) {
                         auto db = in[1].mutable_grad();
                         for (std::size_t r = 0; r < m; ++r)
                           for (std::size_t c = 0; c < nb; ++c) db[r * nb + c] += dy[r * n + na + c];
                       }
                     });
}

Tensor slice_cols(Tape& tape, const Tensor& a, std::size_t begin, std::size_t end) {
  require_rank2(a, "slice_cols");
  require(begin < end && end <= a.cols(), "slice_cols: invalid column range [" + std::to_string(begin) +
                                              ", " + std::to_string(end) + ") for " +
                                              shape_string(a.shape()));
  const std::size_t m = a.rows(), n = a.cols(), w = end - begin;
  std::vector<double> out(m * w);
  const auto av = a.values();
  for (std::size_t r = 0; r < m; ++r) std::copy_n(av.begin() + r * n + begin, w, out.begin() + r * w);
  return tape.record(Tensor::from_values({m, w}, std::move(out)), {a},
                     [m, n, w, begin](const Tensor& y, std::vector<Tensor>& in) {
                       const auto dy = y.grad();
                       auto da = in[0].mutable_grad();
                       for (std::size_t r = 0; r < m; ++r)
                         for (std::size_t c = 0; c < w; ++c) da[r * n + begin + c] += dy[r * w + c];
                     });
}

Tensor reshape(Tape& tape, const Tensor& a, Shape shape) {
  require(shape_size(shape) == a.size(), "reshape: cannot view " + shape_string(a.shape()) + " as " +
                                             shape_string(shape));
  std::vector<double> out(a.values().begin(), a.values().end());
  return tape.record(Tensor::from_values(std::move(shape), std::move(out)), {a},
                     [](const Tensor& y, std::vector<Tensor>& in) {
                       const auto dy = y.grad();
                       auto da = in[0].mutable_grad();
                       for (std::size_t i = 0; i < da.size(); ++i) da[i] += dy[i];
                     });
}

Tensor sum(Tape& tape, const Tensor& a) {
  double total = 0.0;
  for (double v : a.values()) total += v;
  return tape.record(Tensor::scalar(total), {a}, [](const Tensor& y, std::vector<Tensor>& in) {
    const double dy = y.grad()[0];
    for (double& g : in[0].mutable_grad()) g += dy;
  });
}

Tensor mean(Tape& tape, const Tensor& a) {
  double total = 0.0;
  for (double v : a.values()) total += v;
  const double inv = 1.0 / static_cast<double>(a.size());
  return tape.record(Tensor::scalar(total * inv), {a}, [inv](const Tensor& y, std::vector<Tensor>& in) {
    const double dy = y.grad()[0] * inv;
    for (double& g : in[0].mutable_grad()) g += dy;
  });
}

Tensor l2norm_rows(Tape& tape, const Tensor& a, ZeroNormGrad policy) {
  require_rank2(a, "l2norm_rows");
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(m);
  const auto av = a.values();
  for (std::size_t r = 0; r < m; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < n; ++c) s += av[r * n + c] * av[r * n + c];
    out[r] = std::sqrt(s);
  }
  return tape.record(Tensor::from_values({m}, std::move(out)), {a},
                     [m, n, policy](const Tensor& y, std::vector<Tensor>& in) {
                       const auto dy = y.grad();
                       const auto norms = y.values();
                       const auto av = in[0].values();
                       auto da = in[0].mutable_grad();
                       for (std::size_t r = 0; r < m; ++r) {
                         if (norms[r] == 0.0) {
                           if (policy == ZeroNormGrad::kThrow) {
                             throw std::domain_error("l2norm_rows: gradient undefined at zero row " +
                                                     std::to_string(r));
                           }
                           continue;
                         }
                         const double k = dy[r] / norms[r];
                         for (std::size_t c = 0; c < n; ++c) da[r * n + c] += k * av[r * n + c];
                       }
                     });
}

Tensor div_rows(Tape& tape, const Tensor& a, const Tensor& s) {
  require_rank2(a, "div_rows");
  require(s.rank() == 1 && s.size() == a.rows(), "div_rows: divisor shape " + shape_string(s.shape()) +
                                                     " does not match rows of " + shape_string(a.shape()));
  const std::size_t m = a.rows(), n = a.cols();
  const auto av = a.values();
  const auto sv = s.values();
  std::vector<double> out(m * n);
  for (std::size_t r = 0; r < m; ++r) {
    if (sv[r] == 0.0) throw std::domain_error("div_rows: zero divisor at row " + std::to_string(r));
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] = av[r * n + c] / sv[r];
  }
  return tape.record(Tensor::from_values({m, n}, std::move(out)), {a, s},
                     [m, n](const Tensor& y, std::vector<Tensor>& in) {
                       const auto dy = y.grad();
                       const auto yv = y.values();
                       const auto sv = in[1].values();
                       if (in[0].requires_grad()) {
                         auto da = in[0].mutable_grad();
                         for (std::size_t r = 0; r < m; ++r)
                           for (std::size_t c = 0; c < n; ++c) da[r * n + c] += dy[r * n + c] / sv[r];
                       }
                       if (in[1].requires_grad()) {
                         auto ds = in[1].mutable_grad();
                         for (std::size_t r = 0; r < m; ++r) {
                           double acc = 0.0;
                           for (std::size_t c = 0; c < n; ++c) acc += dy[r * n + c] * yv[r * n + c];
                           ds[r] -= acc / sv[r];
                         }
                       }
                     });
}

Tensor block_apply(Tape& tape, const Tensor& m, const Tensor& x) {
  require_rank2(m, "block_apply");
  require_rank2(x, "block_apply");
  require(!m.requires_grad(), "block_apply: the block matrix must be a constant");
  const std::size_t p = m.rows(), q = m.cols(), d = x.cols();
  require(x.rows() % q == 0, "block_apply: " + std::to_string(x.rows()) + " rows is not a multiple of block size " +
                                 std::to_string(q));
  const std::size_t blocks = x.rows() / q;
  Tensor out = Tensor::zeros({blocks * p, d});
  const auto mm = as_matrix(m.values(), p, q);
  const auto xv = x.values();
  auto ov = out.mutable_values();
  for (std::size_t b = 0; b < blocks; ++b) {
    as_matrix(ov.subspan(b * p * d, p * d), p, d).noalias() = mm * as_matrix(xv.subspan(b * q * d, q * d), q, d);
  }
  return tape.record(std::move(out), {m, x}, [p, q, d, blocks](const Tensor& y, std::vector<Tensor>& in) {
    const auto mm = as_matrix(in[0].values(), p, q);
    const auto dy = y.grad();
    auto dx = in[1].mutable_grad();
    for (std::size_t b = 0; b < blocks; ++b) {
      as_matrix(dx.subspan(b * q * d, q * d), q, d).noalias() +=
          mm.transpose() * as_matrix(dy.subspan(b * p * d, p * d), p, d);
    }
  });
}

Tensor block_gram(Tape& tape, const Tensor& x, std::size_t block_rows) {
  require_rank2(x, "block_gram");
  require(block_rows > 0 && x.rows() % block_rows == 0,
          "block_gram: " + std::to_string(x.rows()) + " rows is not a multiple of block size " +
              std::to_string(block_rows));
  const std::size_t n = block_rows, d = x.cols(), blocks = x.rows() / n;
  Tensor out = Tensor::zeros({blocks, n * n});
  const auto xv = x.values();
  auto ov = out.mutable_values();
  for (std::size_t b = 0; b < blocks; ++b) {
    const auto xb = as_matrix(xv.subspan(b * n * d, n * d), n, d);
    as_matrix(ov.subspan(b * n * n, n * n), n, n).noalias() = xb * xb.transpose();
  }
  return tape.record(std::move(out), {x}, [n, d, blocks](const Tensor& y, std::vector<Tensor>& in) {
    const auto xv = in[0].values();
    const auto dy = y.grad();
    auto dx = in[0].mutable_grad();
    for (std::size_t b = 0; b < blocks; ++b) {
      const auto g = as_matrix(dy.subspan(b * n * n, n * n), n, n);
      const auto xb = as_matrix(xv.subspan(b * n * d, n * d), n, d);
      as_matrix(dx.subspan(b * n * d, n * d), n, d).noalias() += (g + g.transpose()) * xb;
    }
  });
}

Tensor layer_normalize(Tape& tape, const Tensor& x, const Tensor& gain, const Tensor& bias) {
  require_rank2(x, "layer_normalize");
  const std::size_t n = x.rows(), d = x.cols();
  require(d >= 2, "layer_normalize: feature dimension must be at least 2");
  require(gain.size() == d && bias.size() == d, "layer_normalize: gain/bias must have " + std::to_string(d) +
                                                    " entries");
  const auto xv = x.values();
  const auto gv = gain.values();
  const auto bv = bias.values();
  std::vector<double> normalized(n * d);
  std::vector<double> inv_std(n);
  std::vector<double> out(n * d);
  for (std::size_t r = 0; r < n; ++r) {
    double mu = 0.0;
    for (std::size_t c = 0; c < d; ++c) mu += xv[r * d + c];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t c = 0; c < d; ++c) var += (xv[r * d + c] - mu) * (xv[r * d + c] - mu);
    var /= static_cast<double>(d);
    inv_std[r] = 1.0 / std::sqrt(var + kLayerNormEpsilon);
    for (std::size_t c = 0; c < d; ++c) {
      normalized[r * d + c] = (xv[r * d + c] - mu) * inv_std[r];
      out[r * d + c] = gv[c] * normalized[r * d + c] + bv[c];
    }
  }
  return tape.record(
      Tensor::from_values({n, d}, std::move(out)), {x, gain, bias},
      [n, d, normalized = std::move(normalized), inv_std = std::move(inv_std)](const Tensor& y,
                                                                              std::vector<Tensor>& in) {
        const auto dy = y.grad();
        const auto gv = in[1].values();
        if (in[1].requires_grad()) {
          auto dg = in[1].mutable_grad();
          for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < d; ++c) dg[c] += dy[r * d + c] * normalized[r * d + c];
        }
        if (in[2].requires_grad()) {
          auto db = in[2].mutable_grad();
          for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < d; ++c) db[c] += dy[r * d + c];
        }
        if (in[0].requires_grad()) {
          auto dx = in[0].mutable_grad();
          const double inv_d = 1.0 / static_cast<double>(d);
          for (std::size_t r = 0; r < n; ++r) {
            double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
              const double dxhat = dy[r * d + c] * gv[c];
              mean_dxhat += dxhat;
              mean_dxhat_xhat += dxhat * normalized[r * d + c];
            }
            mean_dxhat *= inv_d;
            mean_dxhat_xhat *= inv_d;
            for (std::size_t c = 0; c < d; ++c) {
              const double dxhat = dy[r * d + c] * gv[c];
              dx[r * d + c] += inv_std[r] * (dxhat - mean_dxhat - normalized[r * d + c] * mean_dxhat_xhat);
            }
          }
        }
      });
}

}  // namespace handpose::ad
