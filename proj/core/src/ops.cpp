#include "ggcam/ops.hpp"

#include <algorithm>
#include <cmath>

#include "ggcam/errors.hpp"

namespace ggcam::ops {

namespace {

Value make(Tensor v, std::vector<Value> parents, std::function<void(Node&)> bp) {
  auto n = std::make_shared<Node>(std::move(v));
  for (const auto& p : parents) {
    if (p->requires_grad) {
      n->requires_grad = true;
      break;
    }
  }
  n->parents = std::move(parents);
  if (n->requires_grad) n->backprop = std::move(bp);
  return n;
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Value add(const Value& a, const Value& b) {
  if (!a->value.same_shape(b->value)) throw NumericalError("add: shape mismatch");
  Tensor out = a->value;
  for (int64_t i = 0; i < out.size(); ++i) out[i] += b->value[i];
  return make(std::move(out), {a, b}, [](Node& n) {
    for (int64_t i = 0; i < n.grad.size(); ++i) {
      n.parents[0]->grad[i] += n.grad[i];
      n.parents[1]->grad[i] += n.grad[i];
    }
  });
}

Value mul(const Value& a, const Value& b) {
  if (!a->value.same_shape(b->value)) throw NumericalError("mul: shape mismatch");
  Tensor out = a->value;
  for (int64_t i = 0; i < out.size(); ++i) out[i] *= b->value[i];
  return make(std::move(out), {a, b}, [](Node& n) {
    for (int64_t i = 0; i < n.grad.size(); ++i) {
      n.parents[0]->grad[i] += n.grad[i] * n.parents[1]->value[i];
      n.parents[1]->grad[i] += n.grad[i] * n.parents[0]->value[i];
    }
  });
}

Value scale(const Value& x, const Value& s) {
  if (s->value.size() != 1) throw NumericalError("scale: scalar expected");
  double sv = s->value[0];
  Tensor out = x->value;
  for (int64_t i = 0; i < out.size(); ++i) out[i] *= sv;
  return make(std::move(out), {x, s}, [](Node& n) {
    double sv = n.parents[1]->value[0];
    double gs = 0.0;
    for (int64_t i = 0; i < n.grad.size(); ++i) {
      n.parents[0]->grad[i] += n.grad[i] * sv;
      gs += n.grad[i] * n.parents[0]->value[i];
    }
    n.parents[1]->grad[0] += gs;
  });
}

Value sum(const Value& x) {
  return make(Tensor::scalar(x->value.sum()), {x}, [](Node& n) {
    double g = n.grad[0];
    for (int64_t i = 0; i < n.parents[0]->grad.size(); ++i)
      n.parents[0]->grad[i] += g;
  });
}

Value mean_all(const Value& x) {
  int64_t cnt = x->value.size();
  if (cnt == 0) throw NumericalError("mean_all: empty tensor");
  return make(Tensor::scalar(x->value.sum() / static_cast<double>(cnt)), {x},
              [cnt](Node& n) {
                double g = n.grad[0] / static_cast<double>(cnt);
                for (int64_t i = 0; i < n.parents[0]->grad.size(); ++i)
                  n.parents[0]->grad[i] += g;
              });
}

Value average(const std::vector<Value>& scalars) {
  if (scalars.empty()) throw NumericalError("average: empty batch");
  double acc = 0.0;
  for (const auto& s : scalars) {
    if (s->value.size() != 1) throw NumericalError("average: non-scalar element");
    acc += s->value[0];
  }
  int64_t n_items = static_cast<int64_t>(scalars.size());
  return make(Tensor::scalar(acc / static_cast<double>(n_items)), scalars,
              [n_items](Node& n) {
                double g = n.grad[0] / static_cast<double>(n_items);
                for (auto& p : n.parents) p->grad[0] += g;
              });
}

Value relu(const Value& x) {
  Tensor out = x->value;
  for (int64_t i = 0; i < out.size(); ++i) out[i] = std::max(0.0, out[i]);
  return make(std::move(out), {x}, [](Node& n) {
    for (int64_t i = 0; i < n.grad.size(); ++i)
      if (n.parents[0]->value[i] > 0.0) n.parents[0]->grad[i] += n.grad[i];
  });
}

Value sigmoid(const Value& x) {
  Tensor out = x->value;
  for (int64_t i = 0; i < out.size(); ++i) out[i] = stable_sigmoid(out[i]);
  return make(std::move(out), {x}, [](Node& n) {
    for (int64_t i = 0; i < n.grad.size(); ++i) {
      double y = n.value[i];
      n.parents[0]->grad[i] += n.grad[i] * y * (1.0 - y);
    }
  });
}

Value softplus(const Value& x) {
  Tensor out = x->value;
  for (int64_t i = 0; i < out.size(); ++i) {
    double v = out[i];
    out[i] = std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v)));
  }
  return make(std::move(out), {x}, [](Node& n) {
    for (int64_t i = 0; i < n.grad.size(); ++i)
      n.parents[0]->grad[i] += n.grad[i] * stable_sigmoid(n.parents[0]->value[i]);
  });
}

Value softmax(const Value& x) {
  if (x->value.ndim() != 1) throw NumericalError("softmax: 1-D input expected");
  if (x->value.size() == 0) throw NumericalError("softmax: empty input");
  Tensor out = x->value;
  double m = out.max_element();
  double z = 0.0;
  for (int64_t i = 0; i < out.size(); ++i) {
    out[i] = std::exp(out[i] - m);
    z += out[i];
  }
  for (int64_t i = 0; i < out.size(); ++i) out[i] /= z;
  return make(std::move(out), {x}, [](Node& n) {
    double dot = 0.0;
    for (int64_t i = 0; i < n.grad.size(); ++i) dot += n.grad[i] * n.value[i];
    for (int64_t i = 0; i < n.grad.size(); ++i)
      n.parents[0]->grad[i] += n.value[i] * (n.grad[i] - dot);
  });
}

Value conv2d(const Value& input, const Value& kernel, const Value& bias,
             int stride, int pad) {
  const Tensor& x = input->value;
  const Tensor& w = kernel->value;
  const Tensor& b = bias->value;
  if (x.ndim() != 3 || w.ndim() != 4) throw NumericalError("conv2d: rank mismatch");
  int cin = x.extent(0), h = x.extent(1), wd = x.extent(2);
  int cout = w.extent(0), k = w.extent(2);
  if (w.extent(1) != cin) throw NumericalError("conv2d: input channel mismatch");
  if (w.extent(3) != k) throw NumericalError("conv2d: non-square kernel");
  if (k % 2 == 0) throw NumericalError("conv2d: kernel size must be odd");
  if (stride < 1 || pad < 0) throw NumericalError("conv2d: bad stride/pad");
  if (b.size() != cout) throw NumericalError("conv2d: bias size mismatch");
  if ((h + 2 * pad - k) % stride != 0 || (wd + 2 * pad - k) % stride != 0)
    throw NumericalError("conv2d: non-integer output extent");
  int ho = (h + 2 * pad - k) / stride + 1;
  int wo = (wd + 2 * pad - k) / stride + 1;
  if (ho < 1 || wo < 1) throw NumericalError("conv2d: empty output");

  Tensor out({cout, ho, wo});
  for (int co = 0; co < cout; ++co) {
    double bv = b[co];
    for (int oy = 0; oy < ho; ++oy)
      for (int ox = 0; ox < wo; ++ox) out.at(co, oy, ox) = bv;
    for (int ci = 0; ci < cin; ++ci) {
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          double wv = w.at(co, ci, ky, kx);
          if (wv == 0.0) continue;
          for (int oy = 0; oy < ho; ++oy) {
            int iy = oy * stride + ky - pad;
            if (iy < 0 || iy >= h) continue;
            const double* xrow = x.data() + (static_cast<size_t>(ci) * h + iy) * wd;
            double* orow = out.data() + (static_cast<size_t>(co) * ho + oy) * wo;
            for (int ox = 0; ox < wo; ++ox) {
              int ix = ox * stride + kx - pad;
              if (ix < 0 || ix >= wd) continue;
              orow[ox] += wv * xrow[ix];
            }
          }
        }
      }
    }
  }

  return make(std::move(out), {input, kernel, bias}, [stride, pad](Node& n) {
    const Tensor& x = n.parents[0]->value;
    const Tensor& w = n.parents[1]->value;
    Tensor& gx = n.parents[0]->grad;
    Tensor& gw = n.parents[1]->grad;
    Tensor& gb = n.parents[2]->grad;
    int cin = x.extent(0), h = x.extent(1), wd = x.extent(2);
    int cout = w.extent(0), k = w.extent(2);
    int ho = n.value.extent(1), wo = n.value.extent(2);
    for (int co = 0; co < cout; ++co) {
      const double* grow_base = n.grad.data() + static_cast<size_t>(co) * ho * wo;
      for (int64_t i = 0; i < static_cast<int64_t>(ho) * wo; ++i) gb[co] += grow_base[i];
      for (int ci = 0; ci < cin; ++ci) {
        for (int ky = 0; ky < k; ++ky) {
          for (int kx = 0; kx < k; ++kx) {
            double wv = w.at(co, ci, ky, kx);
            double acc = 0.0;
            for (int oy = 0; oy < ho; ++oy) {
              int iy = oy * stride + ky - pad;
              if (iy < 0 || iy >= h) continue;
              const double* xrow = x.data() + (static_cast<size_t>(ci) * h + iy) * wd;
              double* gxrow = gx.data() + (static_cast<size_t>(ci) * h + iy) * wd;
              const double* grow = grow_base + static_cast<size_t>(oy) * wo;
              for (int ox = 0; ox < wo; ++ox) {
                int ix = ox * stride + kx - pad;
                if (ix < 0 || ix >= wd) continue;
                acc += grow[ox] * xrow[ix];
                gxrow[ix] += grow[ox] * wv;
              }
            }
            gw.at(co, ci, ky, kx) += acc;
          }
        }
      }
    }
  });
}

Value maxpool2(const Value& x) {
  const Tensor& in = x->value;
  if (in.ndim() != 3) throw NumericalError("maxpool2: rank-3 input expected");
  int c = in.extent(0), h = in.extent(1), w = in.extent(2);
  if (h % 2 != 0 || w % 2 != 0 || h == 0 || w == 0)
    throw NumericalError("maxpool2: spatial extents must be even and nonzero");
  int ho = h / 2, wo = w / 2;
  Tensor out({c, ho, wo});
  auto argmax = std::make_shared<std::vector<int64_t>>(static_cast<size_t>(c) * ho * wo);
  int64_t oi = 0;
  for (int ci = 0; ci < c; ++ci) {
    for (int oy = 0; oy < ho; ++oy) {
      for (int ox = 0; ox < wo; ++ox, ++oi) {
        // ties broken by first row-major occurrence
        double best = -1.0;
        int64_t best_idx = -1;
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            int64_t idx = (static_cast<int64_t>(ci) * h + (2 * oy + dy)) * w + (2 * ox + dx);
            double v = in[idx];
            if (best_idx < 0 || v > best) {
              best = v;
              best_idx = idx;
            }
          }
        }
        out[oi] = best;
        (*argmax)[static_cast<size_t>(oi)] = best_idx;
      }
    }
  }
  return make(std::move(out), {x}, [argmax](Node& n) {
    for (int64_t i = 0; i < n.grad.size(); ++i)
      n.parents[0]->grad[(*argmax)[static_cast<size_t>(i)]] += n.grad[i];
  });
}

Value global_avg_pool(const Value& x) {
  const Tensor& in = x->value;
  if (in.ndim() != 3) throw NumericalError("global_avg_pool: rank-3 input expected");
  int g = in.extent(0), h = in.extent(1), w = in.extent(2);
  int64_t hw = static_cast<int64_t>(h) * w;
  if (hw == 0) throw NumericalError("global_avg_pool: empty spatial extent");
  Tensor out({g});
  for (int k = 0; k < g; ++k) {
    double acc = 0.0;
    const double* p = in.data() + static_cast<size_t>(k) * hw;
    for (int64_t i = 0; i < hw; ++i) acc += p[i];
    out[k] = acc / static_cast<double>(hw);
  }
  return make(std::move(out), {x}, [hw](Node& n) {
    for (int64_t k = 0; k < n.grad.size(); ++k) {
      double g = n.grad[k] / static_cast<double>(hw);
      double* gp = n.parents[0]->grad.data() + static_cast<size_t>(k) * hw;
      for (int64_t i = 0; i < hw; ++i) gp[i] += g;
    }
  });
}

Value linear(const Value& x, const Value& weight, const Value& bias) {
  const Tensor& in = x->value;
  const Tensor& w = weight->value;
  if (in.ndim() != 1 || w.ndim() != 2 || w.extent(1) != in.extent(0) ||
      bias->value.size() != w.extent(0))
    throw NumericalError("linear: shape mismatch");
  int c = w.extent(0), g = w.extent(1);
  Tensor out({c});
  for (int i = 0; i < c; ++i) {
    double acc = bias->value[i];
    for (int j = 0; j < g; ++j) acc += w.at(i, j) * in[j];
    out[i] = acc;
  }
  return make(std::move(out), {x, weight, bias}, [c, g](Node& n) {
    for (int i = 0; i < c; ++i) {
      double gi = n.grad[i];
      n.parents[2]->grad[i] += gi;
      for (int j = 0; j < g; ++j) {
        n.parents[0]->grad[j] += gi * n.parents[1]->value.at(i, j);
        n.parents[1]->grad.at(i, j) += gi * n.parents[0]->value[j];
      }
    }
  });
}

Value cam_project(const Value& features, const Value& weight) {
  const Tensor& a = features->value;
  const Tensor& w = weight->value;
  if (a.ndim() != 3 || w.ndim() != 2 || w.extent(1) != a.extent(0))
    throw NumericalError("cam_project: feature-count mismatch");
  int g = a.extent(0), h = a.extent(1), wd = a.extent(2);
  int c = w.extent(0);
  int64_t hw = static_cast<int64_t>(h) * wd;
  Tensor out({c, h, wd});
  for (int ci = 0; ci < c; ++ci) {
    double* op = out.data() + static_cast<size_t>(ci) * hw;
    for (int k = 0; k < g; ++k) {
      double wv = w.at(ci, k);
      const double* ap = a.data() + static_cast<size_t>(k) * hw;
      for (int64_t i = 0; i < hw; ++i) op[i] += wv * ap[i];
    }
  }
  return make(std::move(out), {features, weight}, [g, hw](Node& n) {
    int c = n.value.extent(0);
    for (int ci = 0; ci < c; ++ci) {
      const double* gp = n.grad.data() + static_cast<size_t>(ci) * hw;
      for (int k = 0; k < g; ++k) {
        double wv = n.parents[1]->value.at(ci, k);
        const double* ap = n.parents[0]->value.data() + static_cast<size_t>(k) * hw;
        double* gap = n.parents[0]->grad.data() + static_cast<size_t>(k) * hw;
        double acc = 0.0;
        for (int64_t i = 0; i < hw; ++i) {
          gap[i] += gp[i] * wv;
          acc += gp[i] * ap[i];
        }
        n.parents[1]->grad.at(ci, k) += acc;
      }
    }
  });
}

Value channel_mean(const Value& x) {
  const Tensor& in = x->value;
  if (in.ndim() != 3) throw NumericalError("channel_mean: rank-3 input expected");
  int c = in.extent(0);
  int64_t hw = static_cast<int64_t>(in.extent(1)) * in.extent(2);
  if (hw == 0) throw NumericalError("channel_mean: empty spatial extent");
  Tensor out({c});
  for (int ci = 0; ci < c; ++ci) {
    double acc = 0.0;
    const double* p = in.data() + static_cast<size_t>(ci) * hw;
    for (int64_t i = 0; i < hw; ++i) acc += p[i];
    out[ci] = acc / static_cast<double>(hw);
  }
  return make(std::move(out), {x}, [hw](Node& n) {
    for (int64_t ci = 0; ci < n.grad.size(); ++ci) {
      double g = n.grad[ci] / static_cast<double>(hw);
      double* gp = n.parents[0]->grad.data() + static_cast<size_t>(ci) * hw;
      for (int64_t i = 0; i < hw; ++i) gp[i] += g;
    }
  });
}

Value cross_entropy(const Value& logits, int label) {
  const Tensor& l = logits->value;
  if (l.ndim() != 1) throw NumericalError("cross_entropy: 1-D logits expected");
  if (label < 0 || label >= l.extent(0))
    throw DataError("cross_entropy: label out of range");
  double m = l.max_element();
  double z = 0.0;
  for (int64_t i = 0; i < l.size(); ++i) z += std::exp(l[i] - m);
  double loss = m + std::log(z) - l[label];
  if (!std::isfinite(loss)) throw NumericalError("cross_entropy: non-finite loss");
  return make(Tensor::scalar(loss), {logits}, [label, m, z](Node& n) {
    double g = n.grad[0];
    const Tensor& l = n.parents[0]->value;
    for (int64_t i = 0; i < l.size(); ++i) {
      double p = std::exp(l[i] - m) / z;
      n.parents[0]->grad[i] += g * (p - (i == label ? 1.0 : 0.0));
    }
  });
}

Value selective_mse(const Value& scaled_cam, const Tensor& target, int label) {
  const Tensor& sc = scaled_cam->value;
  if (sc.ndim() != 3) throw NumericalError("selective_mse: rank-3 CAM expected");
  if (target.ndim() != 2 || target.extent(0) != sc.extent(1) ||
      target.extent(1) != sc.extent(2))
    throw DataError("selective_mse: heat map dimension mismatch");
  if (label < 0 || label >= sc.extent(0))
    throw DataError("selective_mse: label out of range");
  int64_t hw = static_cast<int64_t>(sc.extent(1)) * sc.extent(2);
  const double* slice = sc.data() + static_cast<size_t>(label) * hw;
  double acc = 0.0;
  for (int64_t i = 0; i < hw; ++i) {
    double d = slice[i] - target[i];
    acc += d * d;
  }
  double loss = acc / static_cast<double>(hw);
  if (!std::isfinite(loss)) throw NumericalError("selective_mse: non-finite loss");
  auto tgt = std::make_shared<Tensor>(target);
  return make(Tensor::scalar(loss), {scaled_cam}, [label, hw, tgt](Node& n) {
    double g = n.grad[0] * 2.0 / static_cast<double>(hw);
    const double* slice = n.parents[0]->value.data() + static_cast<size_t>(label) * hw;
    double* gs = n.parents[0]->grad.data() + static_cast<size_t>(label) * hw;
    for (int64_t i = 0; i < hw; ++i) gs[i] += g * (slice[i] - (*tgt)[i]);
  });
}

Value uncertainty_combine(const Value& loss_sm, const Value& loss_ce,
                          const Value& sigma_sm, const Value& sigma_ce) {
  for (const Value* v : {&loss_sm, &loss_ce, &sigma_sm, &sigma_ce})
    if ((*v)->value.size() != 1)
      throw NumericalError("uncertainty_combine: scalar inputs expected");
  double lsm = loss_sm->value[0], lce = loss_ce->value[0];
  double ssm = sigma_sm->value[0], sce = sigma_ce->value[0];
  if (lsm < 0.0 || lce < 0.0)
    throw NumericalError("uncertainty_combine: negative loss input");
  if (ssm <= 0.0 || sce <= 0.0)
    throw NumericalError("uncertainty_combine: non-positive sigma");
  double inv_sm = 1.0 / ssm, inv_ce = 1.0 / sce;
  double total = 0.5 * lsm * inv_sm * inv_sm + lce * inv_ce * inv_ce +
                 std::log1p(ssm) + std::log1p(sce);
  if (!std::isfinite(total))
    throw NumericalError("uncertainty_combine: loss overflow (check sigma_sm init)");
  return make(Tensor::scalar(total), {loss_sm, loss_ce, sigma_sm, sigma_ce},
              [](Node& n) {
                double g = n.grad[0];
                double lsm = n.parents[0]->value[0], lce = n.parents[1]->value[0];
                double ssm = n.parents[2]->value[0], sce = n.parents[3]->value[0];
                double inv_sm = 1.0 / ssm, inv_ce = 1.0 / sce;
                n.parents[0]->grad[0] += g * 0.5 * inv_sm * inv_sm;
                n.parents[1]->grad[0] += g * inv_ce * inv_ce;
                n.parents[2]->grad[0] +=
                    g * (-lsm * inv_sm * inv_sm * inv_sm + 1.0 / (ssm + 1.0));
                n.parents[3]->grad[0] +=
                    g * (-2.0 * lce * inv_ce * inv_ce * inv_ce + 1.0 / (sce + 1.0));
              });
}

}  // namespace ggcam::ops
