#include "dpno/autodiff.hpp"

#include <cmath>
#include <string>

#include "dpno/kernels.hpp"

namespace dpno {

namespace k = kernels::omp;

const Tensor& Var::value() const { return tape_->node(*this).value; }

const Tensor& Var::grad() const {
  auto& n = const_cast<Tape::Node&>(tape_->node(*this));
  if (n.grad.empty()) n.grad = Tensor(n.value.shape());
  return n.grad;
}

bool Var::requires_grad() const { return tape_->node(*this).requires_grad; }

const Tape::Node& Tape::node(const Var& v) const {
  if (v.tape_ != this || v.id_ >= nodes_.size()) throw std::logic_error("variable does not belong to this tape");
  return nodes_[v.id_];
}

Var Tape::push(Node n) {
  if (consumed_) throw std::logic_error("tape already consumed by backward");
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) { return push(Node{std::move(value), {}, false, {}, nullptr}); }

Var Tape::variable(Tensor value) { return push(Node{std::move(value), {}, true, {}, nullptr}); }

Var Tape::parameter(Parameter& p) {
  if (p.grad.shape() != p.value.shape()) p.grad = Tensor(p.value.shape());
  return push(Node{p.value, {}, true, {}, &p});
}

Var Tape::record(std::string_view op, Tensor value, std::span<const Var> inputs, BackwardFn backward) {
  if (!value.all_finite()) throw NumericError(std::string(op) + " produced a non-finite value");
  bool needs = false;
  for (const auto& in : inputs) needs = needs || node(in).requires_grad;
  return push(Node{std::move(value), {}, needs, needs ? std::move(backward) : BackwardFn{}, nullptr});
}

Tensor& Tape::grad_buffer(const Var& v) {
  auto& n = nodes_.at(v.id_);
  if (n.grad.empty()) n.grad = Tensor(n.value.shape());
  return n.grad;
}

void Tape::backward(const Var& loss) {
  if (consumed_) throw std::logic_error("backward called twice on the same tape");
  const auto& ln = node(loss);
  if (ln.value.size() != 1)
    throw ShapeError("backward needs a scalar loss, got shape " + to_string(ln.value.shape()));
  consumed_ = true;
  grad_buffer(loss).fill(1.0);
  for (std::size_t i = loss.id_ + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(n.grad);
    if (n.param) n.param->grad += n.grad;
  }
}

namespace {

void require_same(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
}

std::size_t rows_of(const Shape& s) { return numel(s) / s.back(); }

}  // namespace

Var add(const Var& a, const Var& b) {
  require_same("add", a.value(), b.value());
  Tensor out = a.value();
  out += b.value();
  Var ins[] = {a, b};
  return a.tape().record("add", std::move(out), ins, [a, b](const Tensor& g) {
    if (a.requires_grad()) a.tape().grad_buffer(a) += g;
    if (b.requires_grad()) b.tape().grad_buffer(b) += g;
  });
}

Var sub(const Var& a, const Var& b) {
  require_same("sub", a.value(), b.value());
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  Var ins[] = {a, b};
  return a.tape().record("sub", std::move(out), ins, [a, b](const Tensor& g) {
    if (a.requires_grad()) a.tape().grad_buffer(a) += g;
    if (b.requires_grad()) {
      Tensor& gb = b.tape().grad_buffer(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require_same("mul", a.value(), b.value());
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  Var ins[] = {a, b};
  return a.tape().record("mul", std::move(out), ins, [a, b](const Tensor& g) {
    if (a.requires_grad()) {
      Tensor& ga = a.tape().grad_buffer(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b.value()[i];
    }
    if (b.requires_grad()) {
      Tensor& gb = b.tape().grad_buffer(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * a.value()[i];
    }
  });
}

Var scale(const Var& a, double s) {
  Tensor out = a.value();
  for (auto& v : out.data()) v *= s;
  Var ins[] = {a};
  return a.tape().record("scale", std::move(out), ins, [a, s](const Tensor& g) {
    Tensor& ga = a.tape().grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += s * g[i];
  });
}

Var matmul(const Var& a, const Var& b) {
  const auto& as = a.shape();
  const auto& bs = b.shape();
  if (as.size() != 2 || bs.size() != 2 || as[1] != bs[0])
    throw ShapeError("matmul: cannot multiply " + to_string(as) + " by " + to_string(bs));
  const kernels::GemmDims d{as[0], as[1], bs[1]};
  Tensor out({d.rows, d.cols});
  k::gemm(d, a.value().data(), b.value().data(), out.data(), false);
  Var ins[] = {a, b};
  return a.tape().record("matmul", std::move(out), ins, [a, b, d](const Tensor& g) {
    if (a.requires_grad()) k::gemm_nt({d.rows, d.inner, d.cols}, g.data(), b.value().data(), a.tape().grad_buffer(a).data(), true);
    if (b.requires_grad()) k::gemm_tn(d, a.value().data(), g.data(), b.tape().grad_buffer(b).data(), true);
  });
}

Var batched_matmul(const Var& a, const Var& b) {
  const auto& as = a.shape();
  const auto& bs = b.shape();
  if (as.size() != 3 || bs.size() != 3 || as[0] != bs[0] || as[2] != bs[1])
    throw ShapeError("batched_matmul: cannot multiply " + to_string(as) + " by " + to_string(bs));
  const std::size_t batch = as[0];
  const kernels::GemmDims d{as[1], as[2], bs[2]};
  Tensor out({batch, d.rows, d.cols});
  const std::size_t sa = d.rows * d.inner, sb = d.inner * d.cols, sc = d.rows * d.cols;
  for (std::size_t i = 0; i < batch; ++i)
    k::gemm(d, a.value().data().subspan(i * sa, sa), b.value().data().subspan(i * sb, sb),
            out.data().subspan(i * sc, sc), false);
  Var ins[] = {a, b};
  return a.tape().record("batched_matmul", std::move(out), ins, [=](const Tensor& g) {
    for (std::size_t i = 0; i < batch; ++i) {
      auto gi = g.data().subspan(i * sc, sc);
      if (a.requires_grad())
        k::gemm_nt(d, gi, b.value().data().subspan(i * sb, sb), a.tape().grad_buffer(a).data().subspan(i * sa, sa), true);
      if (b.requires_grad())
        k::gemm_tn(d, a.value().data().subspan(i * sa, sa), gi, b.tape().grad_buffer(b).data().subspan(i * sb, sb), true);
    }
  });
}

Var linear(const Var& x, const Var& w) {
  const auto& xs = x.shape();
  const auto& ws = w.shape();
  if (xs.empty() || ws.size() != 2 || xs.back() != ws[0])
    throw ShapeError("linear: input " + to_string(xs) + " does not match weight " + to_string(ws));
  const kernels::GemmDims d{rows_of(xs), ws[0], ws[1]};
  Shape os = xs;
  os.back() = d.cols;
  Tensor out(os);
  k::gemm(d, x.value().data(), w.value().data(), out.data(), false);
  Var ins[] = {x, w};
  return x.tape().record("linear", std::move(out), ins, [x, w, d](const Tensor& g) {
    if (x.requires_grad()) k::gemm_nt(d, g.data(), w.value().data(), x.tape().grad_buffer(x).data(), true);
    if (w.requires_grad()) k::gemm_tn(d, x.value().data(), g.data(), w.tape().grad_buffer(w).data(), true);
  });
}

Var bias_add(const Var& x, const Var& b) {
  const auto& xs = x.shape();
  if (xs.empty() || b.shape().size() != 1 || b.shape()[0] != xs.back())
    throw ShapeError("bias_add: bias " + to_string(b.shape()) + " does not match channels of " + to_string(xs));
  const std::size_t c = xs.back(), rows = rows_of(xs);
  Tensor out = x.value();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < c; ++j) out[r * c + j] += b.value()[j];
  Var ins[] = {x, b};
  return x.tape().record("bias_add", std::move(out), ins, [x, b, rows, c](const Tensor& g) {
    if (x.requires_grad()) x.tape().grad_buffer(x) += g;
    if (b.requires_grad()) {
      Tensor& gb = b.tape().grad_buffer(b);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < c; ++j) gb[j] += g[r * c + j];
    }
  });
}

Var gelu(const Var& x) {
  Tensor out(x.shape());
  k::gelu(x.value().data(), out.data());
  Var ins[] = {x};
  return x.tape().record("gelu", std::move(out), ins, [x](const Tensor& g) {
    k::gelu_backward(x.value().data(), g.data(), x.tape().grad_buffer(x).data());
  });
}

Var concat_channels(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_channels: no inputs");
  const Shape& first = parts[0].shape();
  if (first.empty()) throw ShapeError("concat_channels: scalar input");
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != first.size() || !std::equal(s.begin(), s.end() - 1, first.begin()))
      throw ShapeError("concat_channels: " + to_string(s) + " does not match " + to_string(first) +
                       " outside the channel axis");
    widths.push_back(s.back());
    total += s.back();
  }
  const std::size_t rows = rows_of(first);
  Shape os = first;
  os.back() = total;
  Tensor out(os);
  std::size_t off = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const Tensor& v = parts[p].value();
    const std::size_t w = widths[p];
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(v.ptr() + r * w, w, out.ptr() + r * total + off);
    off += w;
  }
  std::vector<Var> ins(parts.begin(), parts.end());
  return parts[0].tape().record("concat_channels", std::move(out), ins,
                                [ins, widths, rows, total](const Tensor& g) {
                                  std::size_t off = 0;
                                  for (std::size_t p = 0; p < ins.size(); ++p) {
                                    const std::size_t w = widths[p];
                                    if (ins[p].requires_grad()) {
                                      Tensor& gp = ins[p].tape().grad_buffer(ins[p]);
                                      for (std::size_t r = 0; r < rows; ++r)
                                        for (std::size_t j = 0; j < w; ++j) gp[r * w + j] += g[r * total + off + j];
                                    }
                                    off += w;
                                  }
                                });
}

Var transpose(const Var& a) {
  const auto& s = a.shape();
  if (s.size() != 2) throw ShapeError("transpose: expected a matrix, got " + to_string(s));
  const std::size_t m = s[0], n = s[1];
  Tensor out({n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = a.value()[i * n + j];
  Var ins[] = {a};
  return a.tape().record("transpose", std::move(out), ins, [a, m, n](const Tensor& g) {
    Tensor& ga = a.tape().grad_buffer(a);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += g[j * m + i];
  });
}

Var reshape(const Var& a, Shape shape) {
  Tensor out = a.value().reshaped(std::move(shape));
  Var ins[] = {a};
  return a.tape().record("reshape", std::move(out), ins, [a](const Tensor& g) {
    Tensor& ga = a.tape().grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

Var sum(const Var& a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  Var ins[] = {a};
  return a.tape().record("sum", Tensor::scalar(s), ins, [a](const Tensor& g) {
    Tensor& ga = a.tape().grad_buffer(a);
    const double gv = g.item();
    for (auto& v : ga.data()) v += gv;
  });
}

namespace {
struct RelL2Parts {
  std::vector<double> diff_norm, target_norm;
  double value = 0.0;
};

RelL2Parts relative_l2_parts(const Tensor& pred, const Tensor& target) {
  require_same("relative_l2", pred, target);
  if (pred.ndim() < 1) throw ShapeError("relative_l2: expected a leading batch axis");
  const std::size_t batch = pred.dim(0), per = pred.size() / batch;
  RelL2Parts r;
  r.diff_norm.resize(batch);
  r.target_norm.resize(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    double dd = 0.0, tt = 0.0;
    for (std::size_t j = 0; j < per; ++j) {
      const double t = target[b * per + j];
      const double e = pred[b * per + j] - t;
      dd += e * e;
      tt += t * t;
    }
    if (tt == 0.0) throw std::domain_error("relative_l2: target sample " + std::to_string(b) + " has zero norm");
    r.diff_norm[b] = std::sqrt(dd);
    r.target_norm[b] = std::sqrt(tt);
    r.value += r.diff_norm[b] / r.target_norm[b];
  }
  r.value /= static_cast<double>(batch);
  return r;
}
}  // namespace

double relative_l2(const Tensor& pred, const Tensor& target) { return relative_l2_parts(pred, target).value; }

Var relative_l2(const Var& pred, const Var& target) {
  auto parts = relative_l2_parts(pred.value(), target.value());
  const double value = parts.value;
  Var ins[] = {pred, target};
  return pred.tape().record(
      "relative_l2", Tensor::scalar(value), ins, [pred, target, parts = std::move(parts)](const Tensor& g) {
        const std::size_t batch = parts.diff_norm.size(), per = pred.value().size() / batch;
        const double gv = g.item() / static_cast<double>(batch);
        // d/dp ||p - t|| / ||t|| = (p - t) / (||p - t|| ||t||); zero where p == t.
        if (pred.requires_grad()) {
          Tensor& gp = pred.tape().grad_buffer(pred);
          for (std::size_t b = 0; b < batch; ++b) {
            if (parts.diff_norm[b] == 0.0) continue;
            const double c = gv / (parts.diff_norm[b] * parts.target_norm[b]);
            for (std::size_t j = 0; j < per; ++j)
              gp[b * per + j] += c * (pred.value()[b * per + j] - target.value()[b * per + j]);
          }
        }
        if (target.requires_grad()) {
          // d/dt = -(p - t) / (||p - t|| ||t||) - ||p - t|| t / ||t||^3
          Tensor& gt = target.tape().grad_buffer(target);
          for (std::size_t b = 0; b < batch; ++b) {
            const double dn = parts.diff_norm[b], tn = parts.target_norm[b];
            for (std::size_t j = 0; j < per; ++j) {
              const double t = target.value()[b * per + j];
              const double e = pred.value()[b * per + j] - t;
              double d = -dn * t / (tn * tn * tn);
              if (dn != 0.0) d -= e / (dn * tn);
              gt[b * per + j] += gv * d;
            }
          }
        }
      });
}

}  // namespace dpno
