#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "nncore.hpp"

// Peephole LSTM with full peephole matrices:
//
//   i_t = sigma(W_xi x_t + W_hi h_{t-1} + W_ci c_{t-1} + b_i)
//   f_t = sigma(W_xf x_t + W_hf h_{t-1} + W_cf c_{t-1} + b_f)
//   c_t = f_t * c_{t-1} + i_t * tanh(W_xc x_t + W_hc h_{t-1} + b_c)
//   o_t = sigma(W_xo x_t + W_ho h_{t-1} + W_co c_t + b_o)
//   h_t = o_t * tanh(c_t)
//
// Input-side matrices are H x d_in, hidden and peephole matrices H x H and
// biases 1 x H.
namespace gujian::lstm {

struct LstmParams {
  Param W_xi, W_hi, W_ci, b_i;
  Param W_xf, W_hf, W_cf, b_f;
  Param W_xc, W_hc, b_c;
  Param W_xo, W_ho, W_co, b_o;

  LstmParams() = default;
  LstmParams(std::size_t input_dim, std::size_t hidden, const std::string& prefix = "lstm")
      : W_xi(prefix + ".W_xi", hidden, input_dim),
        W_hi(prefix + ".W_hi", hidden, hidden),
        W_ci(prefix + ".W_ci", hidden, hidden),
        b_i(prefix + ".b_i", 1, hidden),
        W_xf(prefix + ".W_xf", hidden, input_dim),
        W_hf(prefix + ".W_hf", hidden, hidden),
        W_cf(prefix + ".W_cf", hidden, hidden),
        b_f(prefix + ".b_f", 1, hidden),
        W_xc(prefix + ".W_xc", hidden, input_dim),
        W_hc(prefix + ".W_hc", hidden, hidden),
        b_c(prefix + ".b_c", 1, hidden),
        W_xo(prefix + ".W_xo", hidden, input_dim),
        W_ho(prefix + ".W_ho", hidden, hidden),
        W_co(prefix + ".W_co", hidden, hidden),
        b_o(prefix + ".b_o", 1, hidden) {}

  std::size_t input_dim() const { return W_xi.value.cols(); }
  std::size_t hidden() const { return W_xi.value.rows(); }

  ParamList params() {
    return {&W_xi, &W_hi, &W_ci, &b_i, &W_xf, &W_hf, &W_cf, &b_f,
            &W_xc, &W_hc, &b_c, &W_xo, &W_ho, &W_co, &b_o};
  }

  // Glorot-uniform weights, zero biases.
  void init(Rng& rng) {
    for (Param* p : params()) {
      if (p->value.rows() == 1) {
        p->value.fill(0.0);
      } else {
        p->init_glorot(rng);
      }
    }
  }
};

struct LstmState {
  Vec h;
  Vec c;

  static LstmState zeros(std::size_t hidden) { return {Vec(hidden, 0.0), Vec(hidden, 0.0)}; }
};

// Everything one step needs for backpropagation.
struct StepCache {
  Vec x, h_prev, c_prev;
  Vec i, f, g, c, o, tanh_c, h;
};

inline StepCache lstm_step_cached(const LstmParams& p, std::span<const double> x, const LstmState& prev) {
  const std::size_t H = p.hidden();
  if (x.size() != p.input_dim()) {
    throw DimensionError("lstm_step: input has length " + std::to_string(x.size()) + ", expected " +
                         std::to_string(p.input_dim()));
  }
  if (prev.h.size() != H || prev.c.size() != H) {
    throw DimensionError("lstm_step: state has length " + std::to_string(prev.h.size()) + "/" +
                         std::to_string(prev.c.size()) + ", expected " + std::to_string(H));
  }
  StepCache s;
  s.x.assign(x.begin(), x.end());
  s.h_prev = prev.h;
  s.c_prev = prev.c;

  auto affine = [&](const Param& wx, const Param& wh, const Param* wc, std::span<const double> cvec,
                    const Param& b) {
    Vec a(b.value.data());
    gemv_acc(wx.value, x, a);
    gemv_acc(wh.value, prev.h, a);
    if (wc) gemv_acc(wc->value, cvec, a);
    return a;
  };

  s.i = affine(p.W_xi, p.W_hi, &p.W_ci, prev.c, p.b_i);
  s.f = affine(p.W_xf, p.W_hf, &p.W_cf, prev.c, p.b_f);
  s.g = affine(p.W_xc, p.W_hc, nullptr, {}, p.b_c);
  for (std::size_t j = 0; j < H; ++j) {
    s.i[j] = sigmoid(s.i[j]);
    s.f[j] = sigmoid(s.f[j]);
    s.g[j] = std::tanh(s.g[j]);
  }
  s.c.resize(H);
  for (std::size_t j = 0; j < H; ++j) s.c[j] = s.f[j] * prev.c[j] + s.i[j] * s.g[j];
  s.o = affine(p.W_xo, p.W_ho, &p.W_co, s.c, p.b_o);
  s.tanh_c.resize(H);
  s.h.resize(H);
  for (std::size_t j = 0; j < H; ++j) {
    s.o[j] = sigmoid(s.o[j]);
    s.tanh_c[j] = std::tanh(s.c[j]);
    s.h[j] = s.o[j] * s.tanh_c[j];
  }
  return s;
}

inline LstmState lstm_step(const LstmParams& p, std::span<const double> x, const LstmState& prev) {
  StepCache s = lstm_step_cached(p, x, prev);
  return {std::move(s.h), std::move(s.c)};
}

struct StepGrads {
  Vec dx, dh_prev, dc_prev;
};

// Backpropagates one step. dh and dc are the loss gradients w.r.t. h_t and
// c_t arriving from above and from step t+1. Parameter gradients are
// accumulated into p.
inline StepGrads lstm_step_backward(LstmParams& p, const StepCache& s, std::span<const double> dh,
                                    std::span<const double> dc_next) {
  const std::size_t H = p.hidden();
  Vec da_o(H), dc(H), da_i(H), da_f(H), da_g(H);
  for (std::size_t j = 0; j < H; ++j) {
    const double d_o = dh[j] * s.tanh_c[j];
    da_o[j] = d_o * s.o[j] * (1.0 - s.o[j]);
    dc[j] = dc_next[j] + dh[j] * s.o[j] * (1.0 - s.tanh_c[j] * s.tanh_c[j]);
  }
  gemv_t_acc(p.W_co.value, da_o, dc);
  for (std::size_t j = 0; j < H; ++j) {
    da_i[j] = dc[j] * s.g[j] * s.i[j] * (1.0 - s.i[j]);
    da_f[j] = dc[j] * s.c_prev[j] * s.f[j] * (1.0 - s.f[j]);
    da_g[j] = dc[j] * s.i[j] * (1.0 - s.g[j] * s.g[j]);
  }

  outer_acc(p.W_xi.grad, da_i, s.x);
  outer_acc(p.W_hi.grad, da_i, s.h_prev);
  outer_acc(p.W_ci.grad, da_i, s.c_prev);
  axpy(1.0, da_i, p.b_i.grad.data());
  outer_acc(p.W_xf.grad, da_f, s.x);
  outer_acc(p.W_hf.grad, da_f, s.h_prev);
  outer_acc(p.W_cf.grad, da_f, s.c_prev);
  axpy(1.0, da_f, p.b_f.grad.data());
  outer_acc(p.W_xc.grad, da_g, s.x);
  outer_acc(p.W_hc.grad, da_g, s.h_prev);
  axpy(1.0, da_g, p.b_c.grad.data());
  outer_acc(p.W_xo.grad, da_o, s.x);
  outer_acc(p.W_ho.grad, da_o, s.h_prev);
  outer_acc(p.W_co.grad, da_o, s.c);
  axpy(1.0, da_o, p.b_o.grad.data());

  StepGrads out;
  out.dx.assign(p.input_dim(), 0.0);
  gemv_t_acc(p.W_xi.value, da_i, out.dx);
  gemv_t_acc(p.W_xf.value, da_f, out.dx);
  gemv_t_acc(p.W_xc.value, da_g, out.dx);
  gemv_t_acc(p.W_xo.value, da_o, out.dx);

  out.dh_prev.assign(H, 0.0);
  gemv_t_acc(p.W_hi.value, da_i, out.dh_prev);
  gemv_t_acc(p.W_hf.value, da_f, out.dh_prev);
  gemv_t_acc(p.W_hc.value, da_g, out.dh_prev);
  gemv_t_acc(p.W_ho.value, da_o, out.dh_prev);

  out.dc_prev.resize(H);
  for (std::size_t j = 0; j < H; ++j) out.dc_prev[j] = dc[j] * s.f[j];
  gemv_t_acc(p.W_ci.value, da_i, out.dc_prev);
  gemv_t_acc(p.W_cf.value, da_f, out.dc_prev);
  return out;
}

// Runs over `inputs` in order (or reversed) from a zero state. Caches are
// stored in processing order.
inline std::vector<StepCache> run_direction(const LstmParams& p, const std::vector<Vec>& inputs, bool reverse) {
  std::vector<StepCache> caches;
  caches.reserve(inputs.size());
  LstmState state = LstmState::zeros(p.hidden());
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const std::size_t t = reverse ? inputs.size() - 1 - k : k;
    caches.push_back(lstm_step_cached(p, inputs[t], state));
    state.h = caches.back().h;
    state.c = caches.back().c;
  }
  return caches;
}

// dh[t] is indexed by sequence position; dx is accumulated into d_inputs.
inline void backprop_direction(LstmParams& p, const std::vector<StepCache>& caches, const std::vector<Vec>& dh,
                               bool reverse, std::vector<Vec>& d_inputs) {
  const std::size_t H = p.hidden();
  const std::size_t n = caches.size();
  Vec dh_carry(H, 0.0), dc_carry(H, 0.0);
  for (std::size_t k = n; k-- > 0;) {
    const std::size_t t = reverse ? n - 1 - k : k;
    Vec dh_total = dh[t];
    axpy(1.0, dh_carry, dh_total);
    StepGrads g = lstm_step_backward(p, caches[k], dh_total, dc_carry);
    axpy(1.0, g.dx, d_inputs[t]);
    dh_carry = std::move(g.dh_prev);
    dc_carry = std::move(g.dc_prev);
  }
}

struct BiLstmParams {
  LstmParams forward;
  LstmParams backward;

  BiLstmParams() = default;
  BiLstmParams(std::size_t input_dim, std::size_t hidden)
      : forward(input_dim, hidden, "lstm.fwd"), backward(input_dim, hidden, "lstm.bwd") {}

  std::size_t input_dim() const { return forward.input_dim(); }
  std::size_t hidden() const { return forward.hidden(); }

  ParamList params() {
    ParamList out = forward.params();
    for (Param* p : backward.params()) out.push_back(p);
    return out;
  }

  void init(Rng& rng) {
    forward.init(rng);
    backward.init(rng);
  }
};

struct BiLstmCache {
  std::vector<StepCache> fwd;
  std::vector<StepCache> bwd;  // processing order, i.e. last position first
};

// Output t is concat(h_fwd_t, h_bwd_t), length 2H.
inline std::vector<Vec> bilstm_forward(const BiLstmParams& p, const std::vector<Vec>& inputs,
                                       BiLstmCache* cache = nullptr) {
  const std::size_t H = p.hidden();
  auto fwd = run_direction(p.forward, inputs, false);
  auto bwd = run_direction(p.backward, inputs, true);
  const std::size_t n = inputs.size();
  std::vector<Vec> out(n, Vec(2 * H));
  for (std::size_t t = 0; t < n; ++t) {
    std::copy(fwd[t].h.begin(), fwd[t].h.end(), out[t].begin());
    const auto& hb = bwd[n - 1 - t].h;
    std::copy(hb.begin(), hb.end(), out[t].begin() + static_cast<std::ptrdiff_t>(H));
  }
  if (cache) {
    cache->fwd = std::move(fwd);
    cache->bwd = std::move(bwd);
  }
  return out;
}

// Accumulates parameter gradients and returns d loss / d inputs.
inline std::vector<Vec> bilstm_backward(BiLstmParams& p, const BiLstmCache& cache, const std::vector<Vec>& d_outputs) {
  const std::size_t H = p.hidden();
  const std::size_t n = d_outputs.size();
  std::vector<Vec> dh_f(n), dh_b(n);
  for (std::size_t t = 0; t < n; ++t) {
    if (d_outputs[t].size() != 2 * H) throw DimensionError("bilstm_backward: gradient has wrong width");
    dh_f[t].assign(d_outputs[t].begin(), d_outputs[t].begin() + static_cast<std::ptrdiff_t>(H));
    dh_b[t].assign(d_outputs[t].begin() + static_cast<std::ptrdiff_t>(H), d_outputs[t].end());
  }
  std::vector<Vec> d_inputs(n, Vec(p.input_dim(), 0.0));
  backprop_direction(p.forward, cache.fwd, dh_f, false, d_inputs);
  backprop_direction(p.backward, cache.bwd, dh_b, true, d_inputs);
  return d_inputs;
}

}  // namespace gujian::lstm
