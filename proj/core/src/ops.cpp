#include "mogat/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "mogat/error.hpp"

namespace mogat::ops {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

ConstMap view(const Tensor& t) { return ConstMap(t.data().data(), t.rows(), t.cols()); }
MutMap view(Tensor& t) { return MutMap(t.data().data(), t.rows(), t.cols()); }

void require(bool ok, const char* op, const std::string& what) {
  if (!ok) throw ShapeError(std::string(op) + ": " + what);
}

std::string dims(const Tensor& t) { return std::to_string(t.rows()) + "x" + std::to_string(t.cols()); }

}  // namespace

Var matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require(av.cols() == bv.rows(), "matmul", dims(av) + " times " + dims(bv));
  Tensor out(av.rows(), bv.cols());
  view(out).noalias() = view(av) * view(bv);
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& tape, const Tensor&, const Tensor& g) {
    if (a.requires_grad()) {
      Tensor& ga = tape.grad_slot(a.id());
      view(ga).noalias() += view(g) * view(b.value()).transpose();
    }
    if (b.requires_grad()) {
      Tensor& gb = tape.grad_slot(b.id());
      view(gb).noalias() += view(a.value()).transpose() * view(g);
    }
  });
}

Var add(Var a, Var b) {
  require(a.value().same_shape(b.value()), "add", dims(a.value()) + " vs " + dims(b.value()));
  Tensor out = a.value();
  out.accumulate(b.value());
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& tape, const Tensor&, const Tensor& g) {
    tape.accumulate_grad(a.id(), g);
    tape.accumulate_grad(b.id(), g);
  });
}

Var mul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require(av.same_shape(bv), "mul", dims(av) + " vs " + dims(bv));
  Tensor out(av.rows(), av.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& tape, const Tensor&, const Tensor& g) {
    if (a.requires_grad()) {
      Tensor& ga = tape.grad_slot(a.id());
      const Tensor& bv = b.value();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (b.requires_grad()) {
      Tensor& gb = tape.grad_slot(b.id());
      const Tensor& av = a.value();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var add_row(Var x, Var row) {
  const Tensor& xv = x.value();
  const Tensor& rv = row.value();
  require(rv.rows() == 1 && rv.cols() == xv.cols(), "add_row", dims(xv) + " with row " + dims(rv));
  Tensor out = xv;
  const std::size_t c = xv.cols();
  for (std::size_t r = 0; r < xv.rows(); ++r)
    for (std::size_t j = 0; j < c; ++j) out[r * c + j] += rv[j];
  return x.tape().record(std::move(out), {x, row}, [x, row](Tape& tape, const Tensor&, const Tensor& g) {
    tape.accumulate_grad(x.id(), g);
    if (row.requires_grad()) {
      Tensor& gr = tape.grad_slot(row.id());
      const std::size_t c = g.cols();
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t j = 0; j < c; ++j) gr[j] += g[r * c + j];
    }
  });
}

Var mul_row(Var x, Var row) {
  const Tensor& xv = x.value();
  const Tensor& rv = row.value();
  require(rv.rows() == 1 && rv.cols() == xv.cols(), "mul_row", dims(xv) + " with row " + dims(rv));
  Tensor out = xv;
  const std::size_t c = xv.cols();
  for (std::size_t r = 0; r < xv.rows(); ++r)
    for (std::size_t j = 0; j < c; ++j) out[r * c + j] *= rv[j];
  return x.tape().record(std::move(out), {x, row}, [x, row](Tape& tape, const Tensor&, const Tensor& g) {
    const std::size_t c = g.cols();
    if (x.requires_grad()) {
      Tensor& gx = tape.grad_slot(x.id());
      const Tensor& rv = row.value();
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t j = 0; j < c; ++j) gx[r * c + j] += g[r * c + j] * rv[j];
    }
    if (row.requires_grad()) {
      Tensor& gr = tape.grad_slot(row.id());
      const Tensor& xv = x.value();
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t j = 0; j < c; ++j) gr[j] += g[r * c + j] * xv[r * c + j];
    }
  });
}

Var add_scalar(Var x, double s) {
  Tensor out = x.value();
  for (double& v : out.data()) v += s;
  return x.tape().record(std::move(out), {x}, [x](Tape& tape, const Tensor&, const Tensor& g) { tape.accumulate_grad(x.id(), g); });
}

Var mul_scalar(Var x, double s) {
  Tensor out = x.value();
  for (double& v : out.data()) v *= s;
  return x.tape().record(std::move(out), {x}, [x, s](Tape& tape, const Tensor&, const Tensor& g) {
    Tensor& gx = tape.grad_slot(x.id());
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += s * g[i];
  });
}

Var pow_scalar(Var x, double exponent) {
  Tensor out = x.value();
  for (double& v : out.data()) v = std::pow(v, exponent);
  return x.tape().record(std::move(out), {x}, [x, exponent](Tape& tape, const Tensor&, const Tensor& g) {
    Tensor& gx = tape.grad_slot(x.id());
    const Tensor& xv = x.value();
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * exponent * std::pow(xv[i], exponent - 1.0);
  });
}

Var concat_rows(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require(av.cols() == bv.cols(), "concat_rows", dims(av) + " over " + dims(bv));
  std::vector<double> data(av.values());
  data.insert(data.end(), bv.values().begin(), bv.values().end());
  Tensor out(av.rows() + bv.rows(), av.cols(), std::move(data));
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& tape, const Tensor&, const Tensor& g) {
    const std::size_t split = a.value().size();
    if (a.requires_grad()) {
      Tensor& ga = tape.grad_slot(a.id());
      for (std::size_t i = 0; i < split; ++i) ga[i] += g[i];
    }
    if (b.requires_grad()) {
      Tensor& gb = tape.grad_slot(b.id());
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[split + i];
    }
  });
}

Var reshape(Var x, std::size_t rows, std::size_t cols) {
  require(rows * cols == x.value().size(), "reshape", dims(x.value()) + " to " + std::to_string(rows) + "x" +
                                                          std::to_string(cols));
  Tensor out(rows, cols, x.value().values());
  return x.tape().record(std::move(out), {x}, [x](Tape& tape, const Tensor&, const Tensor& g) {
    Tensor& gx = tape.grad_slot(x.id());
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

Var leaky_relu(Var x, double slope) {
  Tensor out = x.value();
  for (double& v : out.data())
    if (v < 0.0) v *= slope;
  return x.tape().record(std::move(out), {x}, [x, slope](Tape& tape, const Tensor&, const Tensor& g) {
    Tensor& gx = tape.grad_slot(x.id());
    const Tensor& xv = x.value();
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += xv[i] < 0.0 ? slope * g[i] : g[i];
  });
}

Var exp(Var x) {
  Tensor out = x.value();
  for (double& v : out.data()) v = std::exp(v);
  return x.tape().record(std::move(out), {x}, [x](Tape& tape, const Tensor& y, const Tensor& g) {
    Tensor& gx = tape.grad_slot(x.id());
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i];
  });
}

Var log(Var x) {
  Tensor out = x.value();
  for (double& v : out.data()) {
    if (!(v > 0.0)) throw NumericError("log: argument must be > 0");
    v = std::log(v);
  }
  return x.tape().record(std::move(out), {x}, [x](Tape& tape, const Tensor&, const Tensor& g) {
    Tensor& gx = tape.grad_slot(x.id());
    const Tensor& xv = x.value();
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] / xv[i];
  });
}

Var mean_over_axis(Var x, int axis) {
  const Tensor& xv = x.value();
  require(axis == 0 || axis == 1, "mean_over_axis", "axis must be 0 or 1");
  require(xv.size() > 0, "mean_over_axis", "empty input");
  const std::size_t R = xv.rows(), C = xv.cols();
  Tensor out = axis == 0 ? Tensor(1, C) : Tensor(R, 1);
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t c = 0; c < C; ++c) out[axis == 0 ? c : r] += xv[r * C + c];
  const double inv = 1.0 / static_cast<double>(axis == 0 ? R : C);
  for (double& v : out.data()) v *= inv;
  return x.tape().record(std::move(out), {x}, [x, axis, inv](Tape& tape, const Tensor&, const Tensor& g) {
    Tensor& gx = tape.grad_slot(x.id());
    const std::size_t R = gx.rows(), C = gx.cols();
    for (std::size_t r = 0; r < R; ++r)
      for (std::size_t c = 0; c < C; ++c) gx[r * C + c] += inv * g[axis == 0 ? c : r];
  });
}

Var variance_over_axis(Var x, int axis) {
  const Tensor& xv = x.value();
  require(axis == 0 || axis == 1, "variance_over_axis", "axis must be 0 or 1");
  require(xv.size() > 0, "variance_over_axis", "empty input");
  const std::size_t R = xv.rows(), C = xv.cols();
  const std::size_t count = axis == 0 ? R : C;
  Tensor mu = axis == 0 ? Tensor(1, C) : Tensor(R, 1);
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t c = 0; c < C; ++c) mu[axis == 0 ? c : r] += xv[r * C + c];
  for (double& v : mu.data()) v /= static_cast<double>(count);
  Tensor out = axis == 0 ? Tensor(1, C) : Tensor(R, 1);
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t c = 0; c < C; ++c) {
      const std::size_t k = axis == 0 ? c : r;
      const double d = xv[r * C + c] - mu[k];
      out[k] += d * d;
    }
  for (double& v : out.data()) v /= static_cast<double>(count);
  return x.tape().record(std::move(out), {x}, [x, axis, mu = std::move(mu), count](Tape& tape, const Tensor&, const Tensor& g) {
    Tensor& gx = tape.grad_slot(x.id());
    const Tensor& xv = x.value();
    const std::size_t R = xv.rows(), C = xv.cols();
    const double scale = 2.0 / static_cast<double>(count);
    for (std::size_t r = 0; r < R; ++r)
      for (std::size_t c = 0; c < C; ++c) {
        const std::size_t k = axis == 0 ? c : r;
        gx[r * C + c] += scale * g[k] * (xv[r * C + c] - mu[k]);
      }
  });
}

Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  return x.tape().record(Tensor::scalar(s), {x}, [x](Tape& tape, const Tensor&, const Tensor& g) {
    Tensor& gx = tape.grad_slot(x.id());
    const double gv = g[0];
    for (double& v : gx.data()) v += gv;
  });
}

Var mean(Var x) {
  require(x.value().size() > 0, "mean", "empty input");
  return mul_scalar(sum(x), 1.0 / static_cast<double>(x.value().size()));
}

Var block_mean_rows(Var x, std::size_t block) {
  const Tensor& xv = x.value();
  require(block > 0 && xv.rows() % block == 0, "block_mean_rows",
          std::to_string(xv.rows()) + " rows not divisible into blocks of " + std::to_string(block));
  const std::size_t B = xv.rows() / block, C = xv.cols();
  Tensor out(B, C);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t r = 0; r < block; ++r)
      for (std::size_t c = 0; c < C; ++c) out[b * C + c] += xv[(b * block + r) * C + c];
  const double inv = 1.0 / static_cast<double>(block);
  for (double& v : out.data()) v *= inv;
  return x.tape().record(std::move(out), {x}, [x, block, inv](Tape& tape, const Tensor&, const Tensor& g) {
    Tensor& gx = tape.grad_slot(x.id());
    const std::size_t C = gx.cols();
    for (std::size_t row = 0; row < gx.rows(); ++row) {
      const std::size_t b = row / block;
      for (std::size_t c = 0; c < C; ++c) gx[row * C + c] += inv * g[b * C + c];
    }
  });
}

Var log_softmax_rows(Var x) {
  const Tensor& xv = x.value();
  const std::size_t R = xv.rows(), C = xv.cols();
  require(C > 0, "log_softmax_rows", "no columns");
  Tensor out(R, C);
  for (std::size_t r = 0; r < R; ++r) {
    const double* row = &xv[r * C];
    const double m = *std::max_element(row, row + C);
    double s = 0.0;
    for (std::size_t c = 0; c < C; ++c) s += std::exp(row[c] - m);
    const double lse = m + std::log(s);
    for (std::size_t c = 0; c < C; ++c) out[r * C + c] = row[c] - lse;
  }
  return x.tape().record(std::move(out), {x}, [x](Tape& tape, const Tensor& y, const Tensor& g) {
    Tensor& gx = tape.grad_slot(x.id());
    const std::size_t R = g.rows(), C = g.cols();
    for (std::size_t r = 0; r < R; ++r) {
      double gsum = 0.0;
      for (std::size_t c = 0; c < C; ++c) gsum += g[r * C + c];
      for (std::size_t c = 0; c < C; ++c) gx[r * C + c] += g[r * C + c] - std::exp(y[r * C + c]) * gsum;
    }
  });
}

Var pick(Var x, std::span<const std::size_t> index) {
  const Tensor& xv = x.value();
  require(index.size() == xv.rows(), "pick", "one index per row required");
  Tensor out(xv.rows(), 1);
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    require(index[r] < xv.cols(), "pick", "index out of range");
    out[r] = xv(r, index[r]);
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  return x.tape().record(std::move(out), {x}, [x, idx = std::move(idx)](Tape& tape, const Tensor&, const Tensor& g) {
    Tensor& gx = tape.grad_slot(x.id());
    for (std::size_t r = 0; r < idx.size(); ++r) gx(r, idx[r]) += g[r];
  });
}

Var segment_softmax(Var logits, std::span<const std::size_t> segment, std::size_t num_segments) {
  const Tensor& lv = logits.value();
  require(lv.cols() == 1 && lv.rows() == segment.size(), "segment_softmax", "logits must be E x 1 matching segments");
  const std::size_t E = segment.size();
  std::vector<double> seg_max(num_segments, -std::numeric_limits<double>::infinity());
  for (std::size_t e = 0; e < E; ++e) {
    if (segment[e] >= num_segments) throw ShapeError("segment_softmax: unknown segment id " + std::to_string(segment[e]));
    seg_max[segment[e]] = std::max(seg_max[segment[e]], lv[e]);
  }
  Tensor out(E, 1);
  std::vector<double> seg_sum(num_segments, 0.0);
  for (std::size_t e = 0; e < E; ++e) {
    out[e] = std::exp(lv[e] - seg_max[segment[e]]);
    seg_sum[segment[e]] += out[e];
  }
  for (std::size_t e = 0; e < E; ++e) out[e] /= seg_sum[segment[e]];

  std::vector<std::size_t> seg(segment.begin(), segment.end());
  return logits.tape().record(
      std::move(out), {logits},
      [logits, seg = std::move(seg), num_segments](Tape& tape, const Tensor& alpha, const Tensor& g) {
        std::vector<double> dot(num_segments, 0.0);
        for (std::size_t e = 0; e < seg.size(); ++e) dot[seg[e]] += alpha[e] * g[e];
        Tensor& gl = tape.grad_slot(logits.id());
        for (std::size_t e = 0; e < seg.size(); ++e) gl[e] += alpha[e] * (g[e] - dot[seg[e]]);
      });
}

Var segment_weighted_sum(Var weights, Var values, std::span<const std::size_t> gather,
                         std::span<const std::size_t> segment, std::size_t num_segments) {
  const Tensor& w = weights.value();
  const Tensor& v = values.value();
  const std::size_t E = segment.size();
  require(w.cols() == 1 && w.rows() == E && gather.size() == E, "segment_weighted_sum",
          "weights, gather and segment must have one entry per edge");
  const std::size_t F = v.cols();
  Tensor out(num_segments, F);
  for (std::size_t e = 0; e < E; ++e) {
    if (segment[e] >= num_segments) throw ShapeError("segment_weighted_sum: unknown segment id");
    if (gather[e] >= v.rows()) throw ShapeError("segment_weighted_sum: gather index out of range");
    const double we = w[e];
    const double* src = &v[gather[e] * F];
    double* dst = &out[segment[e] * F];
    for (std::size_t f = 0; f < F; ++f) dst[f] += we * src[f];
  }
  std::vector<std::size_t> gat(gather.begin(), gather.end());
  std::vector<std::size_t> seg(segment.begin(), segment.end());
  return weights.tape().record(
      std::move(out), {weights, values},
      [weights, values, gat = std::move(gat), seg = std::move(seg)](Tape& tape, const Tensor&, const Tensor& g) {
        const Tensor& w = weights.value();
        const Tensor& v = values.value();
        const std::size_t F = v.cols();
        if (weights.requires_grad()) {
          Tensor& gw = tape.grad_slot(weights.id());
          for (std::size_t e = 0; e < seg.size(); ++e) {
            const double* go = &g[seg[e] * F];
            const double* src = &v[gat[e] * F];
            double s = 0.0;
            for (std::size_t f = 0; f < F; ++f) s += go[f] * src[f];
            gw[e] += s;
          }
        }
        if (values.requires_grad()) {
          Tensor& gv = tape.grad_slot(values.id());
          for (std::size_t e = 0; e < seg.size(); ++e) {
            const double* go = &g[seg[e] * F];
            double* dst = &gv[gat[e] * F];
            const double we = w[e];
            for (std::size_t f = 0; f < F; ++f) dst[f] += we * go[f];
          }
        }
      });
}

Var attention_logits(Var features, Var attention, std::span<const std::size_t> src,
                     std::span<const std::size_t> dst) {
  const Tensor& h = features.value();
  const Tensor& a = attention.value();
  const std::size_t F = h.cols();
  require(a.rows() == 2 * F && a.cols() == 1, "attention_logits", "attention vector must be 2F x 1");
  require(src.size() == dst.size(), "attention_logits", "src/dst length mismatch");
  // a' [h_i || h_j] splits into per-node scores a_dst' h_i + a_src' h_j.
  std::vector<double> score_dst(h.rows(), 0.0), score_src(h.rows(), 0.0);
  for (std::size_t n = 0; n < h.rows(); ++n) {
    const double* row = &h[n * F];
    double sd = 0.0, ss = 0.0;
    for (std::size_t f = 0; f < F; ++f) {
      sd += a[f] * row[f];
      ss += a[F + f] * row[f];
    }
    score_dst[n] = sd;
    score_src[n] = ss;
  }
  Tensor out(src.size(), 1);
  for (std::size_t e = 0; e < src.size(); ++e) {
    if (src[e] >= h.rows() || dst[e] >= h.rows()) throw ShapeError("attention_logits: node index out of range");
    out[e] = score_dst[dst[e]] + score_src[src[e]];
  }
  std::vector<std::size_t> s(src.begin(), src.end()), d(dst.begin(), dst.end());
  return features.tape().record(
      std::move(out), {features, attention},
      [features, attention, s = std::move(s), d = std::move(d)](Tape& tape, const Tensor&, const Tensor& g) {
        const Tensor& h = features.value();
        const Tensor& a = attention.value();
        const std::size_t F = h.cols();
        std::vector<double> g_dst(h.rows(), 0.0), g_src(h.rows(), 0.0);
        for (std::size_t e = 0; e < s.size(); ++e) {
          g_dst[d[e]] += g[e];
          g_src[s[e]] += g[e];
        }
        if (features.requires_grad()) {
          Tensor& gh = tape.grad_slot(features.id());
          for (std::size_t n = 0; n < h.rows(); ++n) {
            if (g_dst[n] == 0.0 && g_src[n] == 0.0) continue;
            double* row = &gh[n * F];
            for (std::size_t f = 0; f < F; ++f) row[f] += g_dst[n] * a[f] + g_src[n] * a[F + f];
          }
        }
        if (attention.requires_grad()) {
          Tensor& ga = tape.grad_slot(attention.id());
          for (std::size_t n = 0; n < h.rows(); ++n) {
            const double* row = &h[n * F];
            for (std::size_t f = 0; f < F; ++f) {
              ga[f] += g_dst[n] * row[f];
              ga[F + f] += g_src[n] * row[f];
            }
          }
        }
      });
}

Var dropout(Var x, double rate, std::uint64_t seed, bool training) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout: rate must lie in [0, 1)");
  if (!training || rate == 0.0) return x;
  const Tensor& xv = x.value();
  Tensor mask(xv.rows(), xv.cols());
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution keep(1.0 - rate);
  const double scale = 1.0 / (1.0 - rate);
  for (double& m : mask.data()) m = keep(rng) ? scale : 0.0;
  Tensor out = xv;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  return x.tape().record(std::move(out), {x}, [x, mask = std::move(mask)](Tape& tape, const Tensor&, const Tensor& g) {
    Tensor& gx = tape.grad_slot(x.id());
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * mask[i];
  });
}

}  // namespace mogat::ops
