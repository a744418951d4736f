#include "eac/onnx_graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>

#include <Eigen/Core>

#include "eac/error.hpp"
#include "onnx_subset.pb.h"

namespace eac::onnx {

namespace {

using Shape = std::vector<std::int64_t>;

[[noreturn]] void fail(const std::string& what) { throw Error(Errc::BackendFailure, what); }

std::int64_t product(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::int64_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + "]";
}

Tensor from_proto(const ::onnx::TensorProto& p) {
  Shape shape(p.dims().begin(), p.dims().end());
  const std::int64_t n = product(shape);
  switch (p.data_type()) {
    case ::onnx::TensorProto::FLOAT: {
      std::vector<float> v;
      if (p.has_raw_data()) {
        v.resize(p.raw_data().size() / sizeof(float));
        std::memcpy(v.data(), p.raw_data().data(), v.size() * sizeof(float));
      } else {
        v.assign(p.float_data().begin(), p.float_data().end());
      }
      if (static_cast<std::int64_t>(v.size()) != n) fail("tensor " + p.name() + " has wrong element count");
      return Tensor::floats(std::move(shape), std::move(v));
    }
    case ::onnx::TensorProto::DOUBLE: {
      std::vector<float> v;
      if (p.has_raw_data()) {
        std::vector<double> d(p.raw_data().size() / sizeof(double));
        std::memcpy(d.data(), p.raw_data().data(), d.size() * sizeof(double));
        v.assign(d.begin(), d.end());
      } else {
        v.assign(p.double_data().begin(), p.double_data().end());
      }
      if (static_cast<std::int64_t>(v.size()) != n) fail("tensor " + p.name() + " has wrong element count");
      return Tensor::floats(std::move(shape), std::move(v));
    }
    case ::onnx::TensorProto::INT64: {
      std::vector<std::int64_t> v;
      if (p.has_raw_data()) {
        v.resize(p.raw_data().size() / sizeof(std::int64_t));
        std::memcpy(v.data(), p.raw_data().data(), v.size() * sizeof(std::int64_t));
      } else {
        v.assign(p.int64_data().begin(), p.int64_data().end());
      }
      if (static_cast<std::int64_t>(v.size()) != n) fail("tensor " + p.name() + " has wrong element count");
      return Tensor::int64s(std::move(shape), std::move(v));
    }
    case ::onnx::TensorProto::INT32: {
      std::vector<std::int64_t> v;
      if (p.has_raw_data()) {
        std::vector<std::int32_t> d(p.raw_data().size() / sizeof(std::int32_t));
        std::memcpy(d.data(), p.raw_data().data(), d.size() * sizeof(std::int32_t));
        v.assign(d.begin(), d.end());
      } else {
        v.assign(p.int32_data().begin(), p.int32_data().end());
      }
      if (static_cast<std::int64_t>(v.size()) != n) fail("tensor " + p.name() + " has wrong element count");
      return Tensor::int64s(std::move(shape), std::move(v));
    }
    default:
      fail("tensor " + p.name() + " has unsupported data type " + std::to_string(p.data_type()));
  }
}

struct Attr {
  std::int64_t i = 0;
  float f = 0;
  std::string s;
  std::vector<std::int64_t> ints;
  std::vector<float> floats;
  std::optional<Tensor> t;
};

}  // namespace

std::int64_t Tensor::numel() const { return product(shape); }

Tensor Tensor::floats(std::vector<std::int64_t> shape, std::vector<float> values) {
  Tensor t;
  t.shape = std::move(shape);
  t.values = std::move(values);
  return t;
}

Tensor Tensor::int64s(std::vector<std::int64_t> shape, std::vector<std::int64_t> values) {
  Tensor t;
  t.shape = std::move(shape);
  t.ints = std::move(values);
  t.is_int = true;
  return t;
}

struct Graph::Node {
  std::string op;
  std::string name;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::map<std::string, Attr> attrs;

  bool has(const std::string& k) const { return attrs.count(k) != 0; }
  std::int64_t i(const std::string& k, std::int64_t def) const {
    auto it = attrs.find(k);
    return it == attrs.end() ? def : it->second.i;
  }
  float f(const std::string& k, float def) const {
    auto it = attrs.find(k);
    return it == attrs.end() ? def : it->second.f;
  }
  std::string s(const std::string& k, const std::string& def) const {
    auto it = attrs.find(k);
    return it == attrs.end() ? def : it->second.s;
  }
  std::vector<std::int64_t> ints(const std::string& k, std::vector<std::int64_t> def = {}) const {
    auto it = attrs.find(k);
    return it == attrs.end() ? def : it->second.ints;
  }
};

namespace {

const Tensor& need_float(const Tensor& t, const std::string& op) {
  if (t.is_int) fail(op + " expects a float tensor");
  return t;
}

// ---------------------------------------------------------------- kernels

Tensor broadcast_binary(const Tensor& a, const Tensor& b, const std::string& op) {
  const std::size_t rank = std::max(a.shape.size(), b.shape.size());
  Shape as(rank, 1), bs(rank, 1), out(rank);
  std::copy(a.shape.begin(), a.shape.end(), as.begin() + (rank - a.shape.size()));
  std::copy(b.shape.begin(), b.shape.end(), bs.begin() + (rank - b.shape.size()));
  for (std::size_t d = 0; d < rank; ++d) {
    if (as[d] != bs[d] && as[d] != 1 && bs[d] != 1)
      fail(op + ": cannot broadcast " + shape_str(a.shape) + " with " + shape_str(b.shape));
    out[d] = std::max(as[d], bs[d]);
  }
  // Strides, zeroed along broadcast axes.
  Shape sa(rank, 0), sb(rank, 0);
  std::int64_t ka = 1, kb = 1;
  for (std::size_t d = rank; d-- > 0;) {
    sa[d] = as[d] == 1 ? 0 : ka;
    sb[d] = bs[d] == 1 ? 0 : kb;
    ka *= as[d];
    kb *= bs[d];
  }
  const std::int64_t n = product(out);

  auto apply = [&](auto&& get_a, auto&& get_b, auto&& fn, auto& dst) {
    Shape idx(rank, 0);
    std::int64_t oa = 0, ob = 0;
    for (std::int64_t k = 0; k < n; ++k) {
      dst[k] = fn(get_a(oa), get_b(ob));
      for (std::size_t d = rank; d-- > 0;) {
        ++idx[d];
        oa += sa[d];
        ob += sb[d];
        if (idx[d] < out[d]) break;
        oa -= sa[d] * out[d];
        ob -= sb[d] * out[d];
        idx[d] = 0;
      }
    }
  };

  if (a.is_int && b.is_int) {
    std::vector<std::int64_t> dst(n);
    auto ga = [&](std::int64_t o) { return a.ints[o]; };
    auto gb = [&](std::int64_t o) { return b.ints[o]; };
    if (op == "Add") apply(ga, gb, std::plus<>(), dst);
    else if (op == "Sub") apply(ga, gb, std::minus<>(), dst);
    else if (op == "Mul") apply(ga, gb, std::multiplies<>(), dst);
    else if (op == "Div") apply(ga, gb, [](std::int64_t x, std::int64_t y) { return y ? x / y : 0; }, dst);
    return Tensor::int64s(out, std::move(dst));
  }
  auto ga = [&](std::int64_t o) { return a.is_int ? static_cast<float>(a.ints[o]) : a.values[o]; };
  auto gb = [&](std::int64_t o) { return b.is_int ? static_cast<float>(b.ints[o]) : b.values[o]; };
  std::vector<float> dst(n);
  if (op == "Add") apply(ga, gb, std::plus<>(), dst);
  else if (op == "Sub") apply(ga, gb, std::minus<>(), dst);
  else if (op == "Mul") apply(ga, gb, std::multiplies<>(), dst);
  else if (op == "Div") apply(ga, gb, std::divides<>(), dst);
  else fail("unknown binary op " + op);
  return Tensor::floats(out, std::move(dst));
}

template <typename Fn>
Tensor unary(const Tensor& x, const std::string& op, Fn fn) {
  need_float(x, op);
  Tensor y = x;
  for (float& v : y.values) v = fn(v);
  return y;
}

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Window {
  std::int64_t kh, kw, sh, sw, dh, dw, ph0, pw0, ph1, pw1, oh, ow;
};

Window window(const Graph::Node& node, std::int64_t h, std::int64_t w, std::int64_t kh, std::int64_t kw,
              bool allow_ceil) {
  Window win{};
  win.kh = kh;
  win.kw = kw;
  const auto strides = node.ints("strides", {1, 1});
  const auto dil = node.ints("dilations", {1, 1});
  auto pads = node.ints("pads", {0, 0, 0, 0});
  if (strides.size() != 2 || dil.size() != 2 || pads.size() != 4)
    fail(node.op + ": only 2-D spatial windows are supported");
  win.sh = strides[0];
  win.sw = strides[1];
  win.dh = dil[0];
  win.dw = dil[1];
  const std::string auto_pad = node.s("auto_pad", "NOTSET");
  const std::int64_t ekh = (kh - 1) * win.dh + 1, ekw = (kw - 1) * win.dw + 1;
  if (auto_pad == "SAME_UPPER" || auto_pad == "SAME_LOWER") {
    const std::int64_t oh = (h + win.sh - 1) / win.sh, ow = (w + win.sw - 1) / win.sw;
    const std::int64_t th = std::max<std::int64_t>(0, (oh - 1) * win.sh + ekh - h);
    const std::int64_t tw = std::max<std::int64_t>(0, (ow - 1) * win.sw + ekw - w);
    const bool upper = auto_pad == "SAME_UPPER";
    pads = {upper ? th / 2 : th - th / 2, upper ? tw / 2 : tw - tw / 2, upper ? th - th / 2 : th / 2,
            upper ? tw - tw / 2 : tw / 2};
  } else if (auto_pad == "VALID") {
    pads = {0, 0, 0, 0};
  } else if (auto_pad != "NOTSET") {
    fail(node.op + ": unsupported auto_pad " + auto_pad);
  }
  win.ph0 = pads[0];
  win.pw0 = pads[1];
  win.ph1 = pads[2];
  win.pw1 = pads[3];
  const bool ceil_mode = allow_ceil && node.i("ceil_mode", 0) != 0;
  auto out_dim = [&](std::int64_t in, std::int64_t p0, std::int64_t p1, std::int64_t ek, std::int64_t s) {
    const std::int64_t span = in + p0 + p1 - ek;
    std::int64_t o = (ceil_mode ? (span + s - 1) / s : span / s) + 1;
    // A ceil-mode window must start inside the input or left padding.
    if (ceil_mode && (o - 1) * s >= in + p0) --o;
    return o;
  };
  win.oh = out_dim(h, win.ph0, win.ph1, ekh, win.sh);
  win.ow = out_dim(w, win.pw0, win.pw1, ekw, win.sw);
  if (win.oh <= 0 || win.ow <= 0) fail(node.op + ": window larger than input");
  return win;
}

Tensor conv(const Graph::Node& node, const Tensor& x, const Tensor& w, const Tensor* bias) {
  need_float(x, "Conv");
  need_float(w, "Conv");
  if (x.shape.size() != 4 || w.shape.size() != 4) fail("Conv: only NCHW 2-D convolution is supported");
  const std::int64_t n = x.shape[0], c = x.shape[1], h = x.shape[2], wd = x.shape[3];
  const std::int64_t m = w.shape[0], cg = w.shape[1], kh = w.shape[2], kw = w.shape[3];
  const std::int64_t groups = node.i("group", 1);
  if (cg * groups != c || m % groups != 0)
    fail("Conv: weight " + shape_str(w.shape) + " incompatible with input " + shape_str(x.shape));
  const Window win = window(node, h, wd, kh, kw, false);
  const std::int64_t mg = m / groups, ksize = cg * kh * kw, osize = win.oh * win.ow;

  Tensor y = Tensor::floats({n, m, win.oh, win.ow}, std::vector<float>(n * m * osize));
  RowMatrix cols(ksize, osize);
  for (std::int64_t b = 0; b < n; ++b) {
    for (std::int64_t g = 0; g < groups; ++g) {
      for (std::int64_t ci = 0; ci < cg; ++ci) {
        const float* src = x.values.data() + ((b * c) + g * cg + ci) * h * wd;
        for (std::int64_t ky = 0; ky < kh; ++ky)
          for (std::int64_t kx = 0; kx < kw; ++kx) {
            float* row = cols.data() + ((ci * kh + ky) * kw + kx) * osize;
            for (std::int64_t oy = 0; oy < win.oh; ++oy) {
              const std::int64_t iy = oy * win.sh - win.ph0 + ky * win.dh;
              for (std::int64_t ox = 0; ox < win.ow; ++ox) {
                const std::int64_t ix = ox * win.sw - win.pw0 + kx * win.dw;
                row[oy * win.ow + ox] = (iy >= 0 && iy < h && ix >= 0 && ix < wd) ? src[iy * wd + ix] : 0.0f;
              }
            }
          }
      }
      Eigen::Map<const RowMatrix> wg(w.values.data() + g * mg * ksize, mg, ksize);
      Eigen::Map<RowMatrix> out(y.values.data() + (b * m + g * mg) * osize, mg, osize);
      out.noalias() = wg * cols;
      if (bias) out.colwise() += Eigen::Map<const Eigen::VectorXf>(bias->values.data() + g * mg, mg);
    }
  }
  return y;
}

Tensor pool(const Graph::Node& node, const Tensor& x, bool is_max) {
  need_float(x, node.op);
  if (x.shape.size() != 4) fail(node.op + ": only NCHW input is supported");
  const auto kernel = node.ints("kernel_shape");
  if (kernel.size() != 2) fail(node.op + ": kernel_shape must have 2 entries");
  const std::int64_t n = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3];
  const Window win = window(node, h, w, kernel[0], kernel[1], true);
  const bool include_pad = node.i("count_include_pad", 0) != 0;
  Tensor y = Tensor::floats({n, c, win.oh, win.ow}, std::vector<float>(n * c * win.oh * win.ow));
  for (std::int64_t plane = 0; plane < n * c; ++plane) {
    const float* src = x.values.data() + plane * h * w;
    float* dst = y.values.data() + plane * win.oh * win.ow;
    for (std::int64_t oy = 0; oy < win.oh; ++oy)
      for (std::int64_t ox = 0; ox < win.ow; ++ox) {
        float acc = is_max ? -std::numeric_limits<float>::infinity() : 0.0f;
        std::int64_t count = 0, padded = 0;
        for (std::int64_t ky = 0; ky < win.kh; ++ky) {
          const std::int64_t iy = oy * win.sh - win.ph0 + ky * win.dh;
          for (std::int64_t kx = 0; kx < win.kw; ++kx) {
            const std::int64_t ix = ox * win.sw - win.pw0 + kx * win.dw;
            if (iy < 0 || iy >= h || ix < 0 || ix >= w) {
              // Positions in explicit padding count toward the divisor when
              // count_include_pad is set; ceil-mode overhang never does.
              if (iy < h + win.ph1 && ix < w + win.pw1) ++padded;
              continue;
            }
            const float v = src[iy * w + ix];
            acc = is_max ? std::max(acc, v) : acc + v;
            ++count;
          }
        }
        if (!is_max) acc /= static_cast<float>(include_pad ? count + padded : count);
        dst[oy * win.ow + ox] = acc;
      }
  }
  return y;
}

Tensor global_pool(const Tensor& x, bool is_max) {
  need_float(x, "GlobalPool");
  if (x.shape.size() < 3) fail("GlobalPool: rank must be >= 3");
  const std::int64_t planes = x.shape[0] * x.shape[1];
  const std::int64_t spatial = x.numel() / planes;
  Shape out = x.shape;
  std::fill(out.begin() + 2, out.end(), 1);
  Tensor y = Tensor::floats(out, std::vector<float>(planes));
  for (std::int64_t p = 0; p < planes; ++p) {
    Eigen::Map<const Eigen::VectorXf> v(x.values.data() + p * spatial, spatial);
    y.values[p] = is_max ? v.maxCoeff() : v.sum() / static_cast<float>(spatial);
  }
  return y;
}

Tensor batch_norm(const Graph::Node& node, const Tensor& x, const Tensor& scale, const Tensor& bias,
                  const Tensor& mean, const Tensor& var) {
  need_float(x, "BatchNormalization");
  if (x.shape.size() < 2) fail("BatchNormalization: rank must be >= 2");
  const float eps = node.f("epsilon", 1e-5f);
  const std::int64_t n = x.shape[0], c = x.shape[1];
  const std::int64_t spatial = x.numel() / (n * c);
  Tensor y = x;
  for (std::int64_t b = 0; b < n; ++b)
    for (std::int64_t ch = 0; ch < c; ++ch) {
      const float k = scale.values[ch] / std::sqrt(var.values[ch] + eps);
      const float off = bias.values[ch] - mean.values[ch] * k;
      float* p = y.values.data() + (b * c + ch) * spatial;
      for (std::int64_t s = 0; s < spatial; ++s) p[s] = p[s] * k + off;
    }
  return y;
}

Tensor gemm(const Graph::Node& node, const Tensor& a, const Tensor& b, const Tensor* c) {
  need_float(a, "Gemm");
  need_float(b, "Gemm");
  if (a.shape.size() != 2 || b.shape.size() != 2) fail("Gemm: inputs must be 2-D");
  const float alpha = node.f("alpha", 1.0f), beta = node.f("beta", 1.0f);
  Eigen::Map<const RowMatrix> am(a.values.data(), a.shape[0], a.shape[1]);
  Eigen::Map<const RowMatrix> bm(b.values.data(), b.shape[0], b.shape[1]);
  RowMatrix lhs = node.i("transA", 0) ? RowMatrix(am.transpose()) : RowMatrix(am);
  RowMatrix rhs = node.i("transB", 0) ? RowMatrix(bm.transpose()) : RowMatrix(bm);
  if (lhs.cols() != rhs.rows())
    fail("Gemm: " + shape_str(a.shape) + " x " + shape_str(b.shape) + " do not conform");
  RowMatrix out = alpha * (lhs * rhs);
  Tensor y = Tensor::floats({out.rows(), out.cols()}, std::vector<float>(out.data(), out.data() + out.size()));
  if (c) {
    Tensor scaled = *c;
    need_float(scaled, "Gemm");
    for (float& v : scaled.values) v *= beta;
    y = broadcast_binary(y, scaled, "Add");
  }
  return y;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  need_float(a, "MatMul");
  need_float(b, "MatMul");
  if (a.shape.size() < 2 || b.shape.size() != 2) fail("MatMul: supports [..., k] x [k, n] only");
  const std::int64_t k = a.shape.back(), rows = a.numel() / k;
  if (b.shape[0] != k) fail("MatMul: " + shape_str(a.shape) + " x " + shape_str(b.shape) + " do not conform");
  Eigen::Map<const RowMatrix> am(a.values.data(), rows, k);
  Eigen::Map<const RowMatrix> bm(b.values.data(), k, b.shape[1]);
  RowMatrix out = am * bm;
  Shape shape = a.shape;
  shape.back() = b.shape[1];
  return Tensor::floats(shape, std::vector<float>(out.data(), out.data() + out.size()));
}

std::int64_t norm_axis(std::int64_t axis, std::size_t rank) {
  if (axis < 0) axis += static_cast<std::int64_t>(rank);
  if (axis < 0 || axis > static_cast<std::int64_t>(rank)) fail("axis out of range");
  return axis;
}

Tensor reshaped(Tensor t, Shape shape) {
  t.shape = std::move(shape);
  return t;
}

Tensor flatten(const Graph::Node& node, const Tensor& x) {
  const std::int64_t axis = norm_axis(node.i("axis", 1), x.shape.size());
  std::int64_t outer = 1;
  for (std::int64_t d = 0; d < axis; ++d) outer *= x.shape[d];
  return reshaped(x, {outer, x.numel() / std::max<std::int64_t>(outer, 1)});
}

Tensor reshape(const Tensor& x, const Tensor& target, bool allow_zero) {
  if (!target.is_int) fail("Reshape: shape must be int64");
  Shape shape = target.ints;
  std::int64_t known = 1, infer = -1;
  for (std::size_t d = 0; d < shape.size(); ++d) {
    if (shape[d] == 0 && !allow_zero) {
      if (d >= x.shape.size()) fail("Reshape: 0 refers past input rank");
      shape[d] = x.shape[d];
    }
    if (shape[d] == -1) {
      if (infer >= 0) fail("Reshape: more than one -1");
      infer = static_cast<std::int64_t>(d);
    } else {
      known *= shape[d];
    }
  }
  if (infer >= 0) shape[infer] = known ? x.numel() / known : 0;
  if (product(shape) != x.numel())
    fail("Reshape: cannot reshape " + shape_str(x.shape) + " to " + shape_str(shape));
  return reshaped(x, shape);
}

Tensor transpose(const Graph::Node& node, const Tensor& x) {
  const std::size_t rank = x.shape.size();
  Shape perm = node.ints("perm");
  if (perm.empty()) {
    perm.resize(rank);
    for (std::size_t d = 0; d < rank; ++d) perm[d] = static_cast<std::int64_t>(rank - 1 - d);
  }
  if (perm.size() != rank) fail("Transpose: perm rank mismatch");
  Shape out(rank), in_strides(rank);
  std::int64_t s = 1;
  for (std::size_t d = rank; d-- > 0;) {
    in_strides[d] = s;
    s *= x.shape[d];
  }
  for (std::size_t d = 0; d < rank; ++d) out[d] = x.shape[perm[d]];
  Tensor y = x;
  y.shape = out;
  const std::int64_t n = x.numel();
  Shape idx(rank, 0);
  for (std::int64_t k = 0; k < n; ++k) {
    std::int64_t src = 0;
    for (std::size_t d = 0; d < rank; ++d) src += idx[d] * in_strides[perm[d]];
    if (x.is_int) y.ints[k] = x.ints[src];
    else y.values[k] = x.values[src];
    for (std::size_t d = rank; d-- > 0;) {
      if (++idx[d] < out[d]) break;
      idx[d] = 0;
    }
  }
  return y;
}

Tensor concat(const Graph::Node& node, const std::vector<const Tensor*>& xs) {
  if (xs.empty()) fail("Concat: no inputs");
  const std::size_t rank = xs[0]->shape.size();
  const std::int64_t axis = norm_axis(node.i("axis", 0), rank);
  const bool is_int = xs[0]->is_int;
  Shape out = xs[0]->shape;
  out[axis] = 0;
  for (const Tensor* t : xs) {
    if (t->shape.size() != rank || t->is_int != is_int) fail("Concat: mismatched inputs");
    for (std::size_t d = 0; d < rank; ++d)
      if (static_cast<std::int64_t>(d) != axis && t->shape[d] != xs[0]->shape[d]) fail("Concat: shape mismatch");
    out[axis] += t->shape[axis];
  }
  std::int64_t outer = 1, inner = 1;
  for (std::int64_t d = 0; d < axis; ++d) outer *= out[d];
  for (std::size_t d = axis + 1; d < rank; ++d) inner *= out[d];
  Tensor y;
  y.shape = out;
  y.is_int = is_int;
  for (std::int64_t o = 0; o < outer; ++o)
    for (const Tensor* t : xs) {
      const std::int64_t chunk = t->shape[axis] * inner;
      if (is_int) y.ints.insert(y.ints.end(), t->ints.begin() + o * chunk, t->ints.begin() + (o + 1) * chunk);
      else y.values.insert(y.values.end(), t->values.begin() + o * chunk, t->values.begin() + (o + 1) * chunk);
    }
  return y;
}

Tensor gather(const Graph::Node& node, const Tensor& data, const Tensor& indices) {
  if (!indices.is_int) fail("Gather: indices must be integers");
  const std::int64_t axis = norm_axis(node.i("axis", 0), data.shape.size());
  if (axis >= static_cast<std::int64_t>(data.shape.size())) fail("Gather: axis out of range");
  std::int64_t outer = 1, inner = 1;
  for (std::int64_t d = 0; d < axis; ++d) outer *= data.shape[d];
  for (std::size_t d = axis + 1; d < data.shape.size(); ++d) inner *= data.shape[d];
  const std::int64_t dim = data.shape[axis];
  Shape out(data.shape.begin(), data.shape.begin() + axis);
  out.insert(out.end(), indices.shape.begin(), indices.shape.end());
  out.insert(out.end(), data.shape.begin() + axis + 1, data.shape.end());
  Tensor y;
  y.shape = out;
  y.is_int = data.is_int;
  for (std::int64_t o = 0; o < outer; ++o)
    for (std::int64_t idx : indices.ints) {
      if (idx < 0) idx += dim;
      if (idx < 0 || idx >= dim) fail("Gather: index out of range");
      const std::int64_t base = (o * dim + idx) * inner;
      if (data.is_int) y.ints.insert(y.ints.end(), data.ints.begin() + base, data.ints.begin() + base + inner);
      else y.values.insert(y.values.end(), data.values.begin() + base, data.values.begin() + base + inner);
    }
  return y;
}

Tensor reduce_mean(const Graph::Node& node, const Tensor& x, Shape axes) {
  need_float(x, "ReduceMean");
  const std::size_t rank = x.shape.size();
  if (axes.empty())
    for (std::size_t d = 0; d < rank; ++d) axes.push_back(static_cast<std::int64_t>(d));
  std::vector<bool> reduce(rank, false);
  for (auto a : axes) reduce[norm_axis(a, rank)] = true;
  const bool keep = node.i("keepdims", 1) != 0;
  Shape out_keep(rank), out;
  for (std::size_t d = 0; d < rank; ++d) {
    out_keep[d] = reduce[d] ? 1 : x.shape[d];
    if (!reduce[d] || keep) out.push_back(out_keep[d]);
  }
  Shape ostride(rank);
  std::int64_t s = 1;
  for (std::size_t d = rank; d-- > 0;) {
    ostride[d] = reduce[d] ? 0 : s;
    s *= out_keep[d];
  }
  std::vector<float> acc(product(out_keep), 0.0f);
  Shape idx(rank, 0);
  for (std::int64_t k = 0; k < x.numel(); ++k) {
    std::int64_t o = 0;
    for (std::size_t d = 0; d < rank; ++d) o += idx[d] * ostride[d];
    acc[o] += x.values[k];
    for (std::size_t d = rank; d-- > 0;) {
      if (++idx[d] < x.shape[d]) break;
      idx[d] = 0;
    }
  }
  const float count = static_cast<float>(x.numel() / std::max<std::int64_t>(product(out_keep), 1));
  for (float& v : acc) v /= count;
  return Tensor::floats(out, std::move(acc));
}

Tensor squeeze(const Tensor& x, Shape axes) {
  const std::size_t rank = x.shape.size();
  std::vector<bool> drop(rank, false);
  if (axes.empty()) {
    for (std::size_t d = 0; d < rank; ++d) drop[d] = x.shape[d] == 1;
  } else {
    for (auto a : axes) {
      const auto d = norm_axis(a, rank);
      if (x.shape[d] != 1) fail("Squeeze: axis is not 1");
      drop[d] = true;
    }
  }
  Shape out;
  for (std::size_t d = 0; d < rank; ++d)
    if (!drop[d]) out.push_back(x.shape[d]);
  return reshaped(x, out);
}

Tensor unsqueeze(const Tensor& x, Shape axes) {
  const std::size_t rank = x.shape.size() + axes.size();
  for (auto& a : axes) a = norm_axis(a, rank);
  std::sort(axes.begin(), axes.end());
  Shape out;
  std::size_t src = 0;
  for (std::size_t d = 0; d < rank; ++d) {
    if (std::binary_search(axes.begin(), axes.end(), static_cast<std::int64_t>(d))) out.push_back(1);
    else out.push_back(x.shape[src++]);
  }
  return reshaped(x, out);
}

Attr attr_from_proto(const ::onnx::AttributeProto& a) {
  Attr out;
  out.i = a.i();
  out.f = a.f();
  out.s = a.s();
  out.ints.assign(a.ints().begin(), a.ints().end());
  out.floats.assign(a.floats().begin(), a.floats().end());
  if (a.has_t()) out.t = from_proto(a.t());
  return out;
}

}  // namespace

Graph Graph::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::MissingArtifact, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

Graph Graph::parse(const std::string& bytes) {
  ::onnx::ModelProto model;
  if (!model.ParseFromString(bytes)) fail("not a valid ONNX model");
  Graph g;
  const auto& graph = model.graph();
  for (const auto& init : graph.initializer()) g.initializers_[init.name()] = from_proto(init);
  for (const auto& vi : graph.input())
    if (!g.initializers_.count(vi.name())) g.inputs_.push_back(vi.name());
  for (const auto& vi : graph.output()) g.outputs_.push_back(vi.name());

  static const std::set<std::string> kSupported = {
      "Conv", "BatchNormalization", "Relu", "LeakyRelu", "Sigmoid", "Tanh", "Clip", "MaxPool",
      "AveragePool", "GlobalAveragePool", "GlobalMaxPool", "Gemm", "MatMul", "Add", "Sub", "Mul",
      "Div", "Flatten", "Reshape", "Squeeze", "Unsqueeze", "Transpose", "Concat", "Shape", "Gather",
      "ReduceMean", "Identity", "Dropout", "Constant"};
  for (const auto& np : graph.node()) {
    if (!np.domain().empty() && np.domain() != "ai.onnx") fail("unsupported operator domain " + np.domain());
    if (!kSupported.count(np.op_type())) fail("unsupported operator " + np.op_type());
    auto node = std::make_shared<Node>();
    node->op = np.op_type();
    node->name = np.name();
    node->inputs.assign(np.input().begin(), np.input().end());
    node->outputs.assign(np.output().begin(), np.output().end());
    for (const auto& a : np.attribute()) node->attrs[a.name()] = attr_from_proto(a);
    g.nodes_.push_back(std::move(node));
  }
  return g;
}

std::map<std::string, Tensor> Graph::run(const std::map<std::string, Tensor>& inputs) const {
  std::map<std::string, Tensor> env = initializers_;
  for (const auto& name : inputs_) {
    auto it = inputs.find(name);
    if (it == inputs.end()) fail("missing graph input " + name);
    env[name] = it->second;
  }
  auto in = [&](const Node& node, std::size_t k) -> const Tensor& {
    if (k >= node.inputs.size() || node.inputs[k].empty()) fail(node.op + ": missing input " + std::to_string(k));
    auto it = env.find(node.inputs[k]);
    if (it == env.end()) fail(node.op + ": undefined value " + node.inputs[k]);
    return it->second;
  };
  auto opt = [&](const Node& node, std::size_t k) -> const Tensor* {
    if (k >= node.inputs.size() || node.inputs[k].empty()) return nullptr;
    return &in(node, k);
  };
  auto axes_of = [&](const Node& node) {
    if (node.has("axes")) return node.ints("axes");
    const Tensor* t = opt(node, 1);
    return t ? t->ints : Shape{};
  };

  for (const auto& np : nodes_) {
    const Node& node = *np;
    const std::string& op = node.op;
    Tensor y;
    if (op == "Conv") y = conv(node, in(node, 0), in(node, 1), opt(node, 2));
    else if (op == "BatchNormalization")
      y = batch_norm(node, in(node, 0), in(node, 1), in(node, 2), in(node, 3), in(node, 4));
    else if (op == "Relu") y = unary(in(node, 0), op, [](float v) { return v > 0 ? v : 0.0f; });
    else if (op == "LeakyRelu") {
      const float alpha = node.f("alpha", 0.01f);
      y = unary(in(node, 0), op, [alpha](float v) { return v > 0 ? v : alpha * v; });
    } else if (op == "Sigmoid") y = unary(in(node, 0), op, [](float v) { return 1.0f / (1.0f + std::exp(-v)); });
    else if (op == "Tanh") y = unary(in(node, 0), op, [](float v) { return std::tanh(v); });
    else if (op == "Clip") {
      float lo = node.f("min", -std::numeric_limits<float>::infinity());
      float hi = node.f("max", std::numeric_limits<float>::infinity());
      if (const Tensor* t = opt(node, 1)) lo = t->values.at(0);
      if (const Tensor* t = opt(node, 2)) hi = t->values.at(0);
      y = unary(in(node, 0), op, [lo, hi](float v) { return std::clamp(v, lo, hi); });
    } else if (op == "MaxPool") y = pool(node, in(node, 0), true);
    else if (op == "AveragePool") y = pool(node, in(node, 0), false);
    else if (op == "GlobalAveragePool") y = global_pool(in(node, 0), false);
    else if (op == "GlobalMaxPool") y = global_pool(in(node, 0), true);
    else if (op == "Gemm") y = gemm(node, in(node, 0), in(node, 1), opt(node, 2));
    else if (op == "MatMul") y = matmul(in(node, 0), in(node, 1));
    else if (op == "Add" || op == "Sub" || op == "Mul" || op == "Div")
      y = broadcast_binary(in(node, 0), in(node, 1), op);
    else if (op == "Flatten") y = flatten(node, in(node, 0));
    else if (op == "Reshape") y = reshape(in(node, 0), in(node, 1), node.i("allowzero", 0) != 0);
    else if (op == "Squeeze") y = squeeze(in(node, 0), axes_of(node));
    else if (op == "Unsqueeze") y = unsqueeze(in(node, 0), axes_of(node));
    else if (op == "Transpose") y = transpose(node, in(node, 0));
    else if (op == "Concat") {
      std::vector<const Tensor*> xs;
      for (std::size_t k = 0; k < node.inputs.size(); ++k) xs.push_back(&in(node, k));
      y = concat(node, xs);
    } else if (op == "Shape") {
      const Tensor& x = in(node, 0);
      y = Tensor::int64s({static_cast<std::int64_t>(x.shape.size())}, x.shape);
    } else if (op == "Gather") y = gather(node, in(node, 0), in(node, 1));
    else if (op == "ReduceMean") y = reduce_mean(node, in(node, 0), axes_of(node));
    else if (op == "Identity" || op == "Dropout") y = in(node, 0);
    else if (op == "Constant") {
      auto it = node.attrs.find("value");
      if (it != node.attrs.end() && it->second.t) y = *it->second.t;
      else if (node.has("value_float")) y = Tensor::floats({}, {node.f("value_float", 0)});
      else if (node.has("value_floats")) {
        const auto& f = node.attrs.at("value_floats").floats;
        y = Tensor::floats({static_cast<std::int64_t>(f.size())}, f);
      } else if (node.has("value_int")) y = Tensor::int64s({}, {node.i("value_int", 0)});
      else if (node.has("value_ints")) {
        const auto v = node.ints("value_ints");
        y = Tensor::int64s({static_cast<std::int64_t>(v.size())}, v);
      } else fail("Constant: unsupported value attribute");
    }
    if (node.outputs.empty()) fail(op + ": node has no outputs");
    env[node.outputs[0]] = std::move(y);
  }

  std::map<std::string, Tensor> result;
  for (const auto& name : outputs_) {
    auto it = env.find(name);
    if (it == env.end()) fail("graph output " + name + " was never produced");
    result[name] = it->second;
  }
  return result;
}

Tensor Graph::run(const std::string& input_name, const Tensor& input, const std::string& output_name) const {
  auto out = run(std::map<std::string, Tensor>{{input_name, input}});
  auto it = out.find(output_name);
  if (it == out.end()) fail("graph has no output named " + output_name);
  return it->second;
}

std::string make_grid_mean_model(int channels, int height, int width, int grid) {
  if (grid < 1 || height % grid != 0 || width % grid != 0)
    throw Error(Errc::InvalidArgument, "grid must divide the input size");
  ::onnx::ModelProto model;
  model.set_ir_version(7);
  model.set_producer_name("eac");
  auto* opset = model.add_opset_import();
  opset->set_version(13);
  auto* graph = model.mutable_graph();
  graph->set_name("grid_means");

  auto add_value = [](::onnx::ValueInfoProto* vi, const std::string& name, const Shape& dims) {
    vi->set_name(name);
    auto* tt = vi->mutable_type()->mutable_tensor_type();
    tt->set_elem_type(::onnx::TensorProto::FLOAT);
    for (auto d : dims) tt->mutable_shape()->add_dim()->set_dim_value(d);
  };
  add_value(graph->add_input(), "input", {1, channels, height, width});
  add_value(graph->add_output(), "features", {1, static_cast<std::int64_t>(channels) * grid * grid});

  auto* pool_node = graph->add_node();
  pool_node->set_op_type("AveragePool");
  pool_node->set_name("cell_means");
  pool_node->add_input("input");
  pool_node->add_output("cells");
  auto ints_attr = [](::onnx::NodeProto* n, const std::string& name, std::initializer_list<std::int64_t> v) {
    auto* a = n->add_attribute();
    a->set_name(name);
    a->set_type(::onnx::AttributeProto::INTS);
    for (auto x : v) a->add_ints(x);
  };
  ints_attr(pool_node, "kernel_shape", {height / grid, width / grid});
  ints_attr(pool_node, "strides", {height / grid, width / grid});

  auto* flat = graph->add_node();
  flat->set_op_type("Flatten");
  flat->set_name("flatten");
  flat->add_input("cells");
  flat->add_output("features");

  std::string bytes;
  model.SerializeToString(&bytes);
  return bytes;
}

}  // namespace eac::onnx
