#include "hill/diffcore/ops.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "hill/error.hpp"

namespace hill::ad {

namespace {

using Acc = double;

[[noreturn]] void shape_error(std::string_view op, const std::string& detail) {
    throw Error(ErrorCode::shape_mismatch, std::string(op) + ": " + detail);
}

enum class Broadcast { none, rows };

Broadcast check_binary(std::string_view op, const Shape& a, const Shape& b) {
    if (a == b) return Broadcast::none;
    if (a.size() >= 2 && b.size() + 1 == a.size() && std::equal(b.begin(), b.end(), a.begin() + 1)) {
        return Broadcast::rows;
    }
    shape_error(op, "incompatible shapes " + to_string(a) + " and " + to_string(b));
}

template <class T>
Node<T>& parent(Node<T>& self, std::size_t i) {
    return *self.parents[i];
}

// Accumulates a full-size gradient into a (possibly row-broadcast) operand.
template <class T>
void accumulate_into(Node<T>& target, const std::vector<Acc>& g, Broadcast bc) {
    if (!target.requires_grad) return;
    target.ensure_grad();
    if (bc == Broadcast::none) {
        for (std::size_t i = 0; i < g.size(); ++i) target.grad[i] += static_cast<T>(g[i]);
        return;
    }
    const std::size_t n = target.data.size();
    std::vector<Acc> folded(n, 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) folded[i % n] += g[i];
    for (std::size_t j = 0; j < n; ++j) target.grad[j] += static_cast<T>(folded[j]);
}

template <class T, class Fwd, class Da, class Db>
Tensor<T> binary(std::string_view op, const Tensor<T>& a, const Tensor<T>& b, Fwd fwd, Da da, Db db) {
    const Broadcast bc = check_binary(op, a.shape(), b.shape());
    const auto& av = a.data();
    const auto& bv = b.data();
    const std::size_t n = av.size();
    const std::size_t nb = bv.size();
    std::vector<T> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = fwd(av[i], bv[i % nb]);
    return make_op<T>(std::string(op), a.shape(), std::move(out), {a, b}, [bc, da, db](Node<T>& self) {
        Node<T>& pa = parent(self, 0);
        Node<T>& pb = parent(self, 1);
        const std::size_t n = pa.data.size();
        const std::size_t nb = pb.data.size();
        if (pa.requires_grad) {
            std::vector<Acc> g(n);
            for (std::size_t i = 0; i < n; ++i) g[i] = da(self.grad[i], pa.data[i], pb.data[i % nb]);
            accumulate_into(pa, g, Broadcast::none);
        }
        if (pb.requires_grad) {
            std::vector<Acc> g(n);
            for (std::size_t i = 0; i < n; ++i) g[i] = db(self.grad[i], pa.data[i], pb.data[i % nb]);
            accumulate_into(pb, g, bc);
        }
    });
}

template <class T, class Fwd, class Dx>
Tensor<T> unary(std::string_view op, const Tensor<T>& x, Fwd fwd, Dx dx) {
    const auto& xv = x.data();
    std::vector<T> out(xv.size());
    for (std::size_t i = 0; i < xv.size(); ++i) out[i] = fwd(xv[i]);
    return make_op<T>(std::string(op), x.shape(), std::move(out), {x}, [dx](Node<T>& self) {
        Node<T>& px = parent(self, 0);
        px.ensure_grad();
        for (std::size_t i = 0; i < px.data.size(); ++i) {
            px.grad[i] += static_cast<T>(dx(static_cast<Acc>(self.grad[i]), px.data[i], self.data[i]));
        }
    });
}

Shape drop_leading(const Shape& s) {
    if (s.size() <= 1) return {1};
    return Shape(s.begin() + 1, s.end());
}

}  // namespace

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    return binary<T>(
        "add", a, b, [](T x, T y) { return static_cast<T>(x + y); },
        [](T g, T, T) { return Acc(g); }, [](T g, T, T) { return Acc(g); });
}

template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
    return binary<T>(
        "sub", a, b, [](T x, T y) { return static_cast<T>(x - y); },
        [](T g, T, T) { return Acc(g); }, [](T g, T, T) { return -Acc(g); });
}

template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    return binary<T>(
        "mul", a, b, [](T x, T y) { return static_cast<T>(x * y); },
        [](T g, T, T y) { return Acc(g) * Acc(y); }, [](T g, T x, T) { return Acc(g) * Acc(x); });
}

template <class T>
Tensor<T> squared_difference(const Tensor<T>& a, const Tensor<T>& b) {
    return binary<T>(
        "squared_difference", a, b,
        [](T x, T y) {
            const Acc d = Acc(x) - Acc(y);
            return static_cast<T>(d * d);
        },
        [](T g, T x, T y) { return 2.0 * (Acc(x) - Acc(y)) * Acc(g); },
        [](T g, T x, T y) { return -2.0 * (Acc(x) - Acc(y)) * Acc(g); });
}

template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.shape().size() != 2 || b.shape().size() != 2 || a.dim(1) != b.dim(0)) {
        shape_error("matmul", "cannot multiply " + to_string(a.shape()) + " by " + to_string(b.shape()));
    }
    const std::size_t n = a.dim(0), k = a.dim(1), m = b.dim(1);
    const auto av = a.data();
    const auto bv = b.data();
    std::vector<T> out(n * m);
    std::vector<Acc> row(m);
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(row.begin(), row.end(), 0.0);
        for (std::size_t p = 0; p < k; ++p) {
            const Acc x = av[i * k + p];
            const T* brow = bv.data() + p * m;
            for (std::size_t j = 0; j < m; ++j) row[j] += x * Acc(brow[j]);
        }
        for (std::size_t j = 0; j < m; ++j) out[i * m + j] = static_cast<T>(row[j]);
    }
    return make_op<T>("matmul", {n, m}, std::move(out), {a, b}, [n, k, m](Node<T>& self) {
        Node<T>& pa = parent(self, 0);
        Node<T>& pb = parent(self, 1);
        const auto& g = self.grad;
        if (pa.requires_grad) {
            pa.ensure_grad();
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t p = 0; p < k; ++p) {
                    Acc s = 0.0;
                    for (std::size_t j = 0; j < m; ++j) s += Acc(g[i * m + j]) * Acc(pb.data[p * m + j]);
                    pa.grad[i * k + p] += static_cast<T>(s);
                }
            }
        }
        if (pb.requires_grad) {
            pb.ensure_grad();
            std::vector<Acc> acc(k * m, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t p = 0; p < k; ++p) {
                    const Acc x = pa.data[i * k + p];
                    for (std::size_t j = 0; j < m; ++j) acc[p * m + j] += x * Acc(g[i * m + j]);
                }
            }
            for (std::size_t q = 0; q < acc.size(); ++q) pb.grad[q] += static_cast<T>(acc[q]);
        }
    });
}

template <class T>
Tensor<T> relu(const Tensor<T>& x) {
    return unary<T>(
        "relu", x, [](T v) { return v > T{0} ? v : T{0}; },
        [](Acc g, T v, T) { return v > T{0} ? g : 0.0; });
}

template <class T>
Tensor<T> tanh(const Tensor<T>& x) {
    return unary<T>(
        "tanh", x, [](T v) { return static_cast<T>(std::tanh(Acc(v))); },
        [](Acc g, T, T y) { return g * (1.0 - Acc(y) * Acc(y)); });
}

template <class T>
Tensor<T> sqrt(const Tensor<T>& x) {
    return unary<T>(
        "sqrt", x, [](T v) { return static_cast<T>(std::sqrt(Acc(v))); },
        [](Acc g, T, T y) { return y > T{0} ? g / (2.0 * Acc(y)) : 0.0; });
}

template <class T>
Tensor<T> abs(const Tensor<T>& x) {
    return unary<T>(
        "abs", x, [](T v) { return static_cast<T>(std::fabs(Acc(v))); },
        [](Acc g, T v, T) { return v > T{0} ? g : (v < T{0} ? -g : 0.0); });
}

template <class T>
Tensor<T> scale(const Tensor<T>& x, double factor) {
    return unary<T>(
        "scale", x, [factor](T v) { return static_cast<T>(Acc(v) * factor); },
        [factor](Acc g, T, T) { return g * factor; });
}

template <class T>
Tensor<T> add_scalar(const Tensor<T>& x, double offset) {
    return unary<T>(
        "add_scalar", x, [offset](T v) { return static_cast<T>(Acc(v) + offset); },
        [](Acc g, T, T) { return g; });
}

namespace {

template <class T>
Tensor<T> reduce_all(std::string_view op, const Tensor<T>& x, double divisor) {
    Acc s = 0.0;
    for (T v : x.data()) s += Acc(v);
    std::vector<T> out{static_cast<T>(s / divisor)};
    return make_op<T>(std::string(op), {1}, std::move(out), {x}, [divisor](Node<T>& self) {
        Node<T>& px = parent(self, 0);
        px.ensure_grad();
        const Acc g = Acc(self.grad[0]) / divisor;
        for (auto& v : px.grad) v += static_cast<T>(g);
    });
}

template <class T>
Tensor<T> reduce_rows(std::string_view op, const Tensor<T>& x, bool average) {
    const std::size_t rows = x.dim(0);
    const std::size_t width = x.size() / rows;
    const Acc divisor = average ? Acc(rows) : 1.0;
    std::vector<Acc> acc(width, 0.0);
    const auto xv = x.data();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < width; ++j) acc[j] += Acc(xv[r * width + j]);
    }
    std::vector<T> out(width);
    for (std::size_t j = 0; j < width; ++j) out[j] = static_cast<T>(acc[j] / divisor);
    return make_op<T>(std::string(op), drop_leading(x.shape()), std::move(out), {x},
                      [rows, width, divisor](Node<T>& self) {
                          Node<T>& px = parent(self, 0);
                          px.ensure_grad();
                          for (std::size_t r = 0; r < rows; ++r) {
                              for (std::size_t j = 0; j < width; ++j) {
                                  px.grad[r * width + j] += static_cast<T>(Acc(self.grad[j]) / divisor);
                              }
                          }
                      });
}

}  // namespace

template <class T>
Tensor<T> sum(const Tensor<T>& x) {
    return reduce_all<T>("sum", x, 1.0);
}

template <class T>
Tensor<T> mean(const Tensor<T>& x) {
    return reduce_all<T>("mean", x, static_cast<double>(x.size()));
}

template <class T>
Tensor<T> sum_rows(const Tensor<T>& x) {
    return reduce_rows<T>("sum_rows", x, false);
}

template <class T>
Tensor<T> mean_rows(const Tensor<T>& x) {
    return reduce_rows<T>("mean_rows", x, true);
}

template <class T>
Tensor<T> norm_last(const Tensor<T>& x) {
    const std::size_t m = x.shape().back();
    const std::size_t rows = x.size() / m;
    Shape out_shape(x.shape().begin(), x.shape().end() - 1);
    if (out_shape.empty()) out_shape = {1};
    const auto xv = x.data();
    std::vector<T> out(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        Acc s = 0.0;
        for (std::size_t j = 0; j < m; ++j) s += Acc(xv[r * m + j]) * Acc(xv[r * m + j]);
        out[r] = static_cast<T>(std::sqrt(s));
    }
    return make_op<T>("norm_last", std::move(out_shape), std::move(out), {x}, [rows, m](Node<T>& self) {
        Node<T>& px = parent(self, 0);
        px.ensure_grad();
        for (std::size_t r = 0; r < rows; ++r) {
            const Acc y = self.data[r];
            if (y <= 0.0) continue;  // subgradient 0 at the origin
            const Acc g = Acc(self.grad[r]) / y;
            for (std::size_t j = 0; j < m; ++j) px.grad[r * m + j] += static_cast<T>(g * Acc(px.data[r * m + j]));
        }
    });
}

template <class T>
Tensor<T> concat(std::span<const Tensor<T>> parts) {
    if (parts.empty()) shape_error("concat", "no operands");
    const Shape tail = drop_leading(parts[0].shape());
    const bool one_d = parts[0].shape().size() == 1;
    std::size_t rows = 0;
    std::vector<T> out;
    std::vector<std::size_t> sizes;
    for (const auto& p : parts) {
        const bool p_one_d = p.shape().size() == 1;
        if (p_one_d != one_d || (!one_d && drop_leading(p.shape()) != tail)) {
            shape_error("concat", "operand " + to_string(p.shape()) + " incompatible with " +
                                      to_string(parts[0].shape()));
        }
        rows += p.dim(0);
        sizes.push_back(p.size());
        out.insert(out.end(), p.data().begin(), p.data().end());
    }
    Shape shape = parts[0].shape();
    shape[0] = rows;
    return make_op<T>("concat", std::move(shape), std::move(out), std::vector<Tensor<T>>(parts.begin(), parts.end()),
                      [sizes](Node<T>& self) {
                          std::size_t offset = 0;
                          for (std::size_t i = 0; i < sizes.size(); ++i) {
                              Node<T>& p = parent(self, i);
                              if (p.requires_grad) {
                                  p.ensure_grad();
                                  for (std::size_t j = 0; j < sizes[i]; ++j) p.grad[j] += self.grad[offset + j];
                              }
                              offset += sizes[i];
                          }
                      });
}

template <class T>
Tensor<T> gather_rows(const Tensor<T>& x, std::span<const std::size_t> rows) {
    if (rows.empty()) shape_error("gather_rows", "empty index list");
    const std::size_t n = x.dim(0);
    const std::size_t width = x.size() / n;
    std::vector<T> out;
    out.reserve(rows.size() * width);
    for (auto r : rows) {
        if (r >= n) shape_error("gather_rows", "row " + std::to_string(r) + " out of range for " + to_string(x.shape()));
        out.insert(out.end(), x.data().begin() + r * width, x.data().begin() + (r + 1) * width);
    }
    Shape shape = x.shape();
    shape[0] = rows.size();
    std::vector<std::size_t> idx(rows.begin(), rows.end());
    return make_op<T>("gather_rows", std::move(shape), std::move(out), {x}, [idx, width](Node<T>& self) {
        Node<T>& px = parent(self, 0);
        px.ensure_grad();
        for (std::size_t k = 0; k < idx.size(); ++k) {
            for (std::size_t j = 0; j < width; ++j) px.grad[idx[k] * width + j] += self.grad[k * width + j];
        }
    });
}

template <class T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
    if (numel(shape) != x.size()) {
        shape_error("reshape", "cannot view " + to_string(x.shape()) + " as " + to_string(shape));
    }
    return make_op<T>("reshape", std::move(shape), std::vector<T>(x.data().begin(), x.data().end()), {x},
                      [](Node<T>& self) {
                          Node<T>& px = parent(self, 0);
                          px.ensure_grad();
                          for (std::size_t i = 0; i < px.grad.size(); ++i) px.grad[i] += self.grad[i];
                      });
}

template <class T>
Tensor<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const int> labels) {
    if (logits.shape().size() != 2 || logits.dim(0) != labels.size() || logits.dim(1) < 2) {
        shape_error("softmax_cross_entropy", "logits " + to_string(logits.shape()) + " vs " +
                                                 std::to_string(labels.size()) + " labels");
    }
    const std::size_t b = logits.dim(0), c = logits.dim(1);
    const auto lv = logits.data();
    std::vector<Acc> probs(b * c);
    Acc total = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        const int y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= c) {
            throw Error(ErrorCode::invalid_argument, "softmax_cross_entropy: label " + std::to_string(y) +
                                                         " outside [0," + std::to_string(c) + ")");
        }
        Acc mx = -std::numeric_limits<Acc>::infinity();
        for (std::size_t j = 0; j < c; ++j) mx = std::max(mx, Acc(lv[i * c + j]));
        Acc z = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            probs[i * c + j] = std::exp(Acc(lv[i * c + j]) - mx);
            z += probs[i * c + j];
        }
        for (std::size_t j = 0; j < c; ++j) probs[i * c + j] /= z;
        total += std::log(z) + mx - Acc(lv[i * c + static_cast<std::size_t>(y)]);
    }
    std::vector<int> ys(labels.begin(), labels.end());
    return make_op<T>("softmax_cross_entropy", {1}, {static_cast<T>(total / Acc(b))}, {logits},
                      [probs = std::move(probs), ys = std::move(ys), b, c](Node<T>& self) {
                          Node<T>& pl = parent(self, 0);
                          pl.ensure_grad();
                          const Acc g = Acc(self.grad[0]) / Acc(b);
                          for (std::size_t i = 0; i < b; ++i) {
                              for (std::size_t j = 0; j < c; ++j) {
                                  const Acc onehot = static_cast<std::size_t>(ys[i]) == j ? 1.0 : 0.0;
                                  pl.grad[i * c + j] += static_cast<T>(g * (probs[i * c + j] - onehot));
                              }
                          }
                      });
}

template <class T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
    if (x.shape().size() != 3 || w.shape().size() != 3 || b.shape().size() != 1 || x.dim(1) != w.dim(1) ||
        b.dim(0) != w.dim(0) || w.dim(2) > x.dim(2)) {
        shape_error("conv1d", "x " + to_string(x.shape()) + ", w " + to_string(w.shape()) + ", b " +
                                  to_string(b.shape()));
    }
    const std::size_t batch = x.dim(0), cin = x.dim(1), len = x.dim(2);
    const std::size_t cout = w.dim(0), k = w.dim(2), out_len = len - k + 1;
    const auto xv = x.data();
    const auto wv = w.data();
    const auto bv = b.data();
    std::vector<T> out(batch * cout * out_len);
    for (std::size_t n = 0; n < batch; ++n) {
        for (std::size_t o = 0; o < cout; ++o) {
            for (std::size_t t = 0; t < out_len; ++t) {
                Acc s = bv[o];
                for (std::size_t c = 0; c < cin; ++c) {
                    const T* xr = xv.data() + (n * cin + c) * len + t;
                    const T* wr = wv.data() + (o * cin + c) * k;
                    for (std::size_t q = 0; q < k; ++q) s += Acc(wr[q]) * Acc(xr[q]);
                }
                out[(n * cout + o) * out_len + t] = static_cast<T>(s);
            }
        }
    }
    return make_op<T>(
        "conv1d", {batch, cout, out_len}, std::move(out), {x, w, b},
        [batch, cin, len, cout, k, out_len](Node<T>& self) {
            Node<T>& px = parent(self, 0);
            Node<T>& pw = parent(self, 1);
            Node<T>& pb = parent(self, 2);
            const auto& g = self.grad;
            if (px.requires_grad) {
                px.ensure_grad();
                for (std::size_t n = 0; n < batch; ++n) {
                    for (std::size_t c = 0; c < cin; ++c) {
                        for (std::size_t pos = 0; pos < len; ++pos) {
                            Acc s = 0.0;
                            for (std::size_t o = 0; o < cout; ++o) {
                                for (std::size_t q = 0; q < k; ++q) {
                                    if (pos < q || pos - q >= out_len) continue;
                                    s += Acc(g[(n * cout + o) * out_len + pos - q]) * Acc(pw.data[(o * cin + c) * k + q]);
                                }
                            }
                            px.grad[(n * cin + c) * len + pos] += static_cast<T>(s);
                        }
                    }
                }
            }
            if (pw.requires_grad) {
                pw.ensure_grad();
                for (std::size_t o = 0; o < cout; ++o) {
                    for (std::size_t c = 0; c < cin; ++c) {
                        for (std::size_t q = 0; q < k; ++q) {
                            Acc s = 0.0;
                            for (std::size_t n = 0; n < batch; ++n) {
                                for (std::size_t t = 0; t < out_len; ++t) {
                                    s += Acc(g[(n * cout + o) * out_len + t]) * Acc(px.data[(n * cin + c) * len + t + q]);
                                }
                            }
                            pw.grad[(o * cin + c) * k + q] += static_cast<T>(s);
                        }
                    }
                }
            }
            if (pb.requires_grad) {
                pb.ensure_grad();
                for (std::size_t o = 0; o < cout; ++o) {
                    Acc s = 0.0;
                    for (std::size_t n = 0; n < batch; ++n) {
                        for (std::size_t t = 0; t < out_len; ++t) s += Acc(g[(n * cout + o) * out_len + t]);
                    }
                    pb.grad[o] += static_cast<T>(s);
                }
            }
        });
}

template <class T>
Tensor<T> max_pool1d(const Tensor<T>& x, std::size_t window) {
    const std::size_t len = x.shape().back();
    if (window == 0 || window > len) {
        shape_error("max_pool1d", "window " + std::to_string(window) + " for " + to_string(x.shape()));
    }
    const std::size_t rows = x.size() / len;
    const std::size_t out_len = len / window;
    Shape shape = x.shape();
    shape.back() = out_len;
    const auto xv = x.data();
    std::vector<T> out(rows * out_len);
    std::vector<std::size_t> argmax(rows * out_len);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t t = 0; t < out_len; ++t) {
            std::size_t best = r * len + t * window;
            for (std::size_t q = 1; q < window; ++q) {
                const std::size_t i = r * len + t * window + q;
                if (xv[i] > xv[best]) best = i;
            }
            out[r * out_len + t] = xv[best];
            argmax[r * out_len + t] = best;
        }
    }
    return make_op<T>("max_pool1d", std::move(shape), std::move(out), {x}, [argmax](Node<T>& self) {
        Node<T>& px = parent(self, 0);
        px.ensure_grad();
        for (std::size_t i = 0; i < argmax.size(); ++i) px.grad[argmax[i]] += self.grad[i];
    });
}

namespace {

constexpr std::array<std::string_view, 22> kOps = {
    "matmul", "add",        "sub",      "mul",       "squared_difference", "relu",
    "tanh",   "sqrt",       "abs",      "scale",     "add_scalar",         "sum",
    "mean",   "sum_rows",   "mean_rows", "norm_last", "concat",             "gather_rows",
    "reshape", "softmax_cross_entropy", "conv1d", "max_pool1d"};

template <class T>
void expect_arity(std::string_view op, std::span<const Tensor<T>> operands, std::size_t n) {
    if (operands.size() != n) {
        throw Error(ErrorCode::invalid_argument, std::string(op) + " expects " + std::to_string(n) +
                                                     " operands, got " + std::to_string(operands.size()));
    }
}

}  // namespace

std::span<const std::string_view> supported_ops() noexcept { return kOps; }

template <class T>
Tensor<T> forward(std::string_view op, std::span<const Tensor<T>> xs, const OpAttrs& attrs) {
    auto arity = [&](std::size_t n) { expect_arity<T>(op, xs, n); };
    if (op == "matmul") return arity(2), matmul(xs[0], xs[1]);
    if (op == "add") return arity(2), add(xs[0], xs[1]);
    if (op == "sub") return arity(2), sub(xs[0], xs[1]);
    if (op == "mul") return arity(2), mul(xs[0], xs[1]);
    if (op == "squared_difference") return arity(2), squared_difference(xs[0], xs[1]);
    if (op == "relu") return arity(1), relu(xs[0]);
    if (op == "tanh") return arity(1), ad::tanh(xs[0]);
    if (op == "sqrt") return arity(1), ad::sqrt(xs[0]);
    if (op == "abs") return arity(1), ad::abs(xs[0]);
    if (op == "scale") return arity(1), scale(xs[0], attrs.scalar);
    if (op == "add_scalar") return arity(1), add_scalar(xs[0], attrs.scalar);
    if (op == "sum") return arity(1), sum(xs[0]);
    if (op == "mean") return arity(1), mean(xs[0]);
    if (op == "sum_rows") return arity(1), sum_rows(xs[0]);
    if (op == "mean_rows") return arity(1), mean_rows(xs[0]);
    if (op == "norm_last") return arity(1), norm_last(xs[0]);
    if (op == "concat") return concat(xs);
    if (op == "gather_rows") return arity(1), gather_rows<T>(xs[0], attrs.indices);
    if (op == "reshape") return arity(1), reshape(xs[0], attrs.shape);
    if (op == "softmax_cross_entropy") return arity(1), softmax_cross_entropy<T>(xs[0], attrs.labels);
    if (op == "conv1d") return arity(3), conv1d(xs[0], xs[1], xs[2]);
    if (op == "max_pool1d") return arity(1), max_pool1d(xs[0], attrs.window);
    throw Error(ErrorCode::unknown_op, std::string(op));
}

#define HILL_INSTANTIATE_OPS(T)                                                                \
    template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                \
    template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                \
    template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                \
    template Tensor<T> squared_difference(const Tensor<T>&, const Tensor<T>&);                 \
    template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                             \
    template Tensor<T> relu(const Tensor<T>&);                                                 \
    template Tensor<T> tanh(const Tensor<T>&);                                                 \
    template Tensor<T> sqrt(const Tensor<T>&);                                                 \
    template Tensor<T> abs(const Tensor<T>&);                                                  \
    template Tensor<T> scale(const Tensor<T>&, double);                                        \
    template Tensor<T> add_scalar(const Tensor<T>&, double);                                   \
    template Tensor<T> sum(const Tensor<T>&);                                                  \
    template Tensor<T> mean(const Tensor<T>&);                                                 \
    template Tensor<T> sum_rows(const Tensor<T>&);                                             \
    template Tensor<T> mean_rows(const Tensor<T>&);                                            \
    template Tensor<T> norm_last(const Tensor<T>&);                                            \
    template Tensor<T> concat(std::span<const Tensor<T>>);                                     \
    template Tensor<T> gather_rows(const Tensor<T>&, std::span<const std::size_t>);            \
    template Tensor<T> reshape(const Tensor<T>&, Shape);                                       \
    template Tensor<T> softmax_cross_entropy(const Tensor<T>&, std::span<const int>);          \
    template Tensor<T> conv1d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);           \
    template Tensor<T> max_pool1d(const Tensor<T>&, std::size_t);                              \
    template Tensor<T> forward(std::string_view, std::span<const Tensor<T>>, const OpAttrs&);

HILL_INSTANTIATE_OPS(float)
HILL_INSTANTIATE_OPS(double)

#undef HILL_INSTANTIATE_OPS

}  // namespace hill::ad
