// SPDX-License-Identifier: Apache-2.0
#pragma once

// Single-layer LSTM binary classifier over trit sequences.
//
// Each timestep consumes one trit (scalar encoding, fed as -1/0/1) or its
// one-hot over {-1, 0, 1}. The cell starts from zero hidden and cell state;
// the logistic head reads the final hidden state.
//
//   z_g   = W_g x_t + U_g h_{t-1} + b_g            g in {input, forget, output, cell}
//   i,f,o = sigmoid(z_i), sigmoid(z_f), sigmoid(z_o)
//   g     = tanh(z_cell)
//   c_t   = f * c_{t-1} + i * g
//   h_t   = o * tanh(c_t)
//   p     = sigmoid(v . h_T + b_out)
//
// Gradients are exact backpropagation-through-time of the mean binary
// cross-entropy over a batch.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include "paritylab/bitstring.hpp"
#include "paritylab/datagen.hpp"
#include "paritylab/error.hpp"
#include "paritylab/rng.hpp"

namespace paritylab {

enum class InputEncoding { scalar, one_hot };

inline std::string_view to_string(InputEncoding e) noexcept { return e == InputEncoding::scalar ? "scalar" : "one_hot"; }

inline InputEncoding parse_input_encoding(std::string_view name) {
  if (name == "scalar") return InputEncoding::scalar;
  if (name == "one_hot") return InputEncoding::one_hot;
  throw DomainError("unknown input encoding: " + std::string(name));
}

inline constexpr std::size_t input_width(InputEncoding e) noexcept { return e == InputEncoding::scalar ? 1 : 3; }

enum class Gate : std::size_t { input = 0, forget = 1, output = 2, cell = 3 };

inline constexpr std::array<Gate, 4> all_gates{Gate::input, Gate::forget, Gate::output, Gate::cell};

/// All trainable weights, stored flat in a fixed declared order:
/// for each gate (input, forget, output, cell): input weights [H x D],
/// recurrent weights [H x H] (row = receiving unit), bias [H];
/// then the head weights [H] and head bias [1].
///
/// The same type doubles as the gradient structure.
template <std::floating_point T>
class LstmParams {
public:
  LstmParams() = default;

  explicit LstmParams(std::size_t hidden_size, InputEncoding encoding = InputEncoding::scalar)
      : hidden_(hidden_size), encoding_(encoding) {
    if (hidden_size < 1) throw DomainError("hidden size must be >= 1");
    data_.assign(parameter_count(hidden_size, encoding), T{0});
  }

  static constexpr std::size_t parameter_count(std::size_t hidden, InputEncoding encoding) noexcept {
    const std::size_t d = input_width(encoding);
    return 4 * (hidden * d + hidden * hidden + hidden) + hidden + 1;
  }

  std::size_t hidden_size() const noexcept { return hidden_; }
  InputEncoding encoding() const noexcept { return encoding_; }
  std::size_t input_size() const noexcept { return input_width(encoding_); }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<T> flat() noexcept { return data_; }
  std::span<const T> flat() const noexcept { return data_; }

  std::span<T> input_weights(Gate g) noexcept { return block(g, 0, hidden_ * input_size()); }
  std::span<const T> input_weights(Gate g) const noexcept { return block(g, 0, hidden_ * input_size()); }
  std::span<T> recurrent_weights(Gate g) noexcept { return block(g, hidden_ * input_size(), hidden_ * hidden_); }
  std::span<const T> recurrent_weights(Gate g) const noexcept {
    return block(g, hidden_ * input_size(), hidden_ * hidden_);
  }
  std::span<T> bias(Gate g) noexcept { return block(g, hidden_ * input_size() + hidden_ * hidden_, hidden_); }
  std::span<const T> bias(Gate g) const noexcept {
    return block(g, hidden_ * input_size() + hidden_ * hidden_, hidden_);
  }
  std::span<T> head_weights() noexcept { return std::span<T>(data_).subspan(4 * gate_stride(), hidden_); }
  std::span<const T> head_weights() const noexcept {
    return std::span<const T>(data_).subspan(4 * gate_stride(), hidden_);
  }
  T& head_bias() noexcept { return data_.back(); }
  T head_bias() const noexcept { return data_.back(); }

  bool same_shape(const LstmParams& other) const noexcept {
    return hidden_ == other.hidden_ && encoding_ == other.encoding_ && data_.size() == other.data_.size();
  }

  bool all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
  }

  template <std::floating_point U>
  LstmParams<U> cast() const {
    LstmParams<U> out(hidden_, encoding_);
    std::copy(data_.begin(), data_.end(), out.flat().begin());
    return out;
  }

  friend bool operator==(const LstmParams&, const LstmParams&) = default;

private:
  std::size_t gate_stride() const noexcept { return hidden_ * input_size() + hidden_ * hidden_ + hidden_; }

  std::span<T> block(Gate g, std::size_t offset, std::size_t count) noexcept {
    return std::span<T>(data_).subspan(static_cast<std::size_t>(g) * gate_stride() + offset, count);
  }
  std::span<const T> block(Gate g, std::size_t offset, std::size_t count) const noexcept {
    return std::span<const T>(data_).subspan(static_cast<std::size_t>(g) * gate_stride() + offset, count);
  }

  std::size_t hidden_ = 0;
  InputEncoding encoding_ = InputEncoding::scalar;
  std::vector<T> data_;
};

/// Weights i.i.d. uniform on [-0.1, 0.1]; gate biases 0 except forget bias 1.
template <std::floating_point T = double>
LstmParams<T> init_params(std::size_t hidden_size, Rng& rng, InputEncoding encoding = InputEncoding::scalar) {
  LstmParams<T> params(hidden_size, encoding);
  for (Gate g : all_gates) {
    for (auto& w : params.input_weights(g)) w = static_cast<T>(rng.uniform(-0.1, 0.1));
    for (auto& w : params.recurrent_weights(g)) w = static_cast<T>(rng.uniform(-0.1, 0.1));
    std::fill(params.bias(g).begin(), params.bias(g).end(), g == Gate::forget ? T{1} : T{0});
  }
  for (auto& w : params.head_weights()) w = static_cast<T>(rng.uniform(-0.1, 0.1));
  params.head_bias() = T{0};
  return params;
}

/// Per-timestep activations of one unrolled sequence.
template <std::floating_point T>
struct ForwardTrace {
  std::size_t hidden = 0;
  std::size_t steps = 0;
  std::vector<T> input_gate, forget_gate, output_gate, candidate;
  std::vector<T> cell, cell_tanh, hidden_state;
  T logit = 0;
  T probability = 0;

  void reset(std::size_t hidden_size, std::size_t length) {
    hidden = hidden_size;
    steps = length;
    for (auto* v : {&input_gate, &forget_gate, &output_gate, &candidate, &cell, &cell_tanh, &hidden_state}) {
      v->resize(hidden_size * length);
    }
  }

  std::span<const T> at(const std::vector<T>& series, std::size_t t) const noexcept {
    return std::span<const T>(series).subspan(t * hidden, hidden);
  }
};

namespace detail {

/// Branch-free exp for float, vectorizable and bit-reproducible (no libm).
/// Range reduction by ln 2 and a degree-6 minimax polynomial; about 2 ulp.
inline float fast_exp(float x) noexcept {
  x = std::min(std::max(x, -87.0f), 88.0f);
  constexpr float log2e = 1.44269504088896341f;
  constexpr float round_magic = 12582912.0f; // 1.5 * 2^23
  const float n = (x * log2e + round_magic) - round_magic;
  float r = x - n * 0.693359375f;
  r = r - n * -2.12194440e-4f;
  float p = 1.9875691500e-4f;
  p = p * r + 1.3981999507e-3f;
  p = p * r + 8.3334519073e-3f;
  p = p * r + 4.1665795894e-2f;
  p = p * r + 1.6666665459e-1f;
  p = p * r + 5.0000001201e-1f;
  p = p * r * r + r + 1.0f;
  const auto bits = static_cast<std::uint32_t>(static_cast<std::int32_t>(n) + 127) << 23;
  return p * std::bit_cast<float>(bits);
}

template <std::floating_point T>
inline T exp_(T x) noexcept {
  if constexpr (std::is_same_v<T, float>) {
    return fast_exp(x);
  } else {
    return std::exp(x);
  }
}

template <std::floating_point T>
inline T sigmoid(T x) noexcept {
  return T{1} / (T{1} + exp_(-x));
}

template <std::floating_point T>
inline T tanh_(T x) noexcept {
  if constexpr (std::is_same_v<T, float>) {
    return 1.0f - 2.0f / (fast_exp(2.0f * x) + 1.0f);
  } else {
    return std::tanh(x);
  }
}

/// Sum of a[i] * b[i] with eight fixed partial sums, so the reduction order
/// (and the result) does not depend on the compiler's vectorization choice.
template <std::floating_point T>
inline T dot(const T* a, const T* b, std::size_t n) noexcept {
  std::array<T, 8> acc{};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (std::size_t l = 0; l < 8; ++l) acc[l] += a[i + l] * b[i + l];
  }
  T tail = 0;
  for (; i < n; ++i) tail += a[i] * b[i];
  return ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail;
}

template <std::floating_point T>
inline T sum(const T* a, std::size_t n) noexcept {
  std::array<T, 8> acc{};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (std::size_t l = 0; l < 8; ++l) acc[l] += a[i + l];
  }
  T tail = 0;
  for (; i < n; ++i) tail += a[i];
  return ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail;
}

/// Writes the input vector of a trit into x[k * stride] for k < inputs.
template <std::floating_point T>
inline void encode_trit(Trit t, std::size_t inputs, T* x, std::size_t stride) noexcept {
  if (inputs == 1) {
    x[0] = static_cast<T>(t);
  } else {
    x[0] = t == -1 ? T{1} : T{0};
    x[stride] = t == 0 ? T{1} : T{0};
    x[2 * stride] = t == 1 ? T{1} : T{0};
  }
}

/// One LSTM cell update over `count` (unit, example) pairs. `z` holds the
/// four gate pre-activation blocks back to back.
template <std::floating_point T>
inline void cell_step(const T* __restrict z, std::size_t count, const T* __restrict c_prev, T* __restrict ig,
                      T* __restrict fg, T* __restrict og, T* __restrict cg, T* __restrict cell, T* __restrict ctanh,
                      T* __restrict hid) noexcept {
  const T* __restrict zi = z;
  const T* __restrict zf = z + count;
  const T* __restrict zo = z + 2 * count;
  const T* __restrict zg = z + 3 * count;
  for (std::size_t idx = 0; idx < count; ++idx) {
    const T i = sigmoid(zi[idx]);
    const T f = sigmoid(zf[idx]);
    const T o = sigmoid(zo[idx]);
    const T g = tanh_(zg[idx]);
    const T c = f * c_prev[idx] + i * g;
    const T tc = tanh_(c);
    ig[idx] = i;
    fg[idx] = f;
    og[idx] = o;
    cg[idx] = g;
    cell[idx] = c;
    ctanh[idx] = tc;
    hid[idx] = o * tc;
  }
}

/// Gate pre-activation gradients of one step from the incoming hidden and
/// cell gradients; `dc` is updated in place to the carry into step t-1.
template <std::floating_point T>
inline void cell_step_backward(std::size_t count, const T* __restrict ig, const T* __restrict fg,
                               const T* __restrict og, const T* __restrict cg, const T* __restrict ctanh,
                               const T* __restrict c_prev, const T* __restrict dh, T* __restrict dc,
                               T* __restrict dz) noexcept {
  T* __restrict dzi = dz;
  T* __restrict dzf = dz + count;
  T* __restrict dzo = dz + 2 * count;
  T* __restrict dzg = dz + 3 * count;
  for (std::size_t idx = 0; idx < count; ++idx) {
    const T i = ig[idx];
    const T f = fg[idx];
    const T o = og[idx];
    const T g = cg[idx];
    const T tc = ctanh[idx];
    const T dcell = dc[idx] + dh[idx] * o * (T{1} - tc * tc);
    dzi[idx] = dcell * g * i * (T{1} - i);
    dzf[idx] = dcell * c_prev[idx] * f * (T{1} - f);
    dzo[idx] = dh[idx] * tc * o * (T{1} - o);
    dzg[idx] = dcell * i * (T{1} - g * g);
    dc[idx] = dcell * f;
  }
}

/// Unrolls a group of equal-length sequences side by side. Every per-step
/// array is laid out [step][row][example], so the inner loops run over the
/// examples of the group. Gradients accumulate into a params-shaped buffer
/// across calls until cleared.
template <std::floating_point T>
class Engine {
public:
  explicit Engine(const LstmParams<T>& params)
      : hidden_(params.hidden_size()), inputs_(params.input_size()), grad_(params.hidden_size(), params.encoding()) {
    input_w_.resize(4 * hidden_ * inputs_);
    recurrent_w_.resize(4 * hidden_ * hidden_);
    bias_.resize(4 * hidden_);
    rebind(params);
  }

  /// Points the engine at `params` (same shape) and clears the gradient, so
  /// activation buffers are reused across training steps.
  void rebind(const LstmParams<T>& params) {
    if (!params.same_shape(grad_)) throw DomainError("engine rebound to parameters of another shape");
    params_ = &params;
    const std::size_t h = hidden_;
    const std::size_t d = inputs_;
    for (Gate g : all_gates) {
      const std::size_t go = static_cast<std::size_t>(g) * h;
      std::copy_n(params.input_weights(g).begin(), h * d, input_w_.begin() + static_cast<std::ptrdiff_t>(go * d));
      std::copy_n(params.recurrent_weights(g).begin(), h * h,
                  recurrent_w_.begin() + static_cast<std::ptrdiff_t>(go * h));
      std::copy_n(params.bias(g).begin(), h, bias_.begin() + static_cast<std::ptrdiff_t>(go));
    }
    std::fill(grad_.flat().begin(), grad_.flat().end(), T{0});
  }

  std::size_t hidden() const noexcept { return hidden_; }

  /// Forward pass over `group` (all the same length). Probabilities land in
  /// probabilities(); with `keep_history` every activation is retained for
  /// backward() or trace extraction.
  void forward(std::span<const Bitstring* const> group, bool keep_history) {
    const std::size_t b = group.size();
    const std::size_t len = group.front()->size();
    const std::size_t h = hidden_;
    const std::size_t h4 = 4 * h;
    for (const Bitstring* bits : group) {
      if (bits->size() != len) throw DomainError("engine group must have equal lengths");
    }
    batch_ = b;
    steps_ = len;
    history_ = keep_history;
    const std::size_t frames = keep_history ? len : 2;
    xs_.resize(len * inputs_ * b);
    for (std::size_t t = 0; t < len; ++t) {
      for (std::size_t e = 0; e < b; ++e) encode_trit((*group[e])[t], inputs_, &xs_[(t * inputs_) * b + e], b);
    }
    for (auto* v : {&ig_, &fg_, &og_, &cg_, &cell_, &ctanh_, &hid_}) v->resize(frames * h * b);
    z_.resize(h4 * b);
    zeros_.assign(h * b, T{0});

    for (std::size_t t = 0; t < len; ++t) {
      const std::size_t frame = keep_history ? t : t % 2;
      const std::size_t prev_frame = keep_history ? t - 1 : (t + 1) % 2;
      const T* h_prev = t == 0 ? zeros_.data() : hid_.data() + prev_frame * h * b;
      const T* c_prev = t == 0 ? zeros_.data() : cell_.data() + prev_frame * h * b;
      const T* x = xs_.data() + t * inputs_ * b;
      for (std::size_t r = 0; r < h4; ++r) {
        T* zr = z_.data() + r * b;
        const T br = bias_[r];
        for (std::size_t e = 0; e < b; ++e) zr[e] = br;
        for (std::size_t k = 0; k < inputs_; ++k) {
          const T w = input_w_[r * inputs_ + k];
          const T* xk = x + k * b;
          for (std::size_t e = 0; e < b; ++e) zr[e] += w * xk[e];
        }
        for (std::size_t j = 0; j < h; ++j) {
          const T w = recurrent_w_[r * h + j];
          const T* hj = h_prev + j * b;
          for (std::size_t e = 0; e < b; ++e) zr[e] += w * hj[e];
        }
      }
      const std::size_t base = frame * h * b;
      cell_step(z_.data(), h * b, c_prev, ig_.data() + base, fg_.data() + base, og_.data() + base, cg_.data() + base,
                cell_.data() + base, ctanh_.data() + base, hid_.data() + base);
    }

    logits_.assign(b, params_->head_bias());
    prob_.resize(b);
    const T* h_last = hid_.data() + (keep_history ? len - 1 : (len - 1) % 2) * h * b;
    const auto head = params_->head_weights();
    for (std::size_t u = 0; u < h; ++u) {
      const T w = head[u];
      for (std::size_t e = 0; e < b; ++e) logits_[e] += w * h_last[u * b + e];
    }
    for (std::size_t e = 0; e < b; ++e) {
      prob_[e] = sigmoid(logits_[e]);
      if (!std::isfinite(prob_[e])) throw NumericOverflowError("non-finite activation in LSTM forward pass");
    }
  }

  std::span<const T> probabilities() const noexcept { return prob_; }

  /// Copies the recorded activations of example `e` of the last forward pass.
  ForwardTrace<T> trace(std::size_t e) const {
    ForwardTrace<T> tr;
    const std::size_t h = hidden_;
    const std::size_t b = batch_;
    tr.reset(h, steps_);
    const std::pair<const std::vector<T>*, std::vector<T>*> series[] = {
        {&ig_, &tr.input_gate}, {&fg_, &tr.forget_gate}, {&og_, &tr.output_gate}, {&cg_, &tr.candidate},
        {&cell_, &tr.cell},     {&ctanh_, &tr.cell_tanh}, {&hid_, &tr.hidden_state}};
    for (std::size_t t = 0; t < steps_; ++t) {
      for (std::size_t u = 0; u < h; ++u) {
        for (auto [src, dst] : series) (*dst)[t * h + u] = (*src)[(t * h + u) * b + e];
      }
    }
    tr.logit = logits_[e];
    tr.probability = prob_[e];
    return tr;
  }

  /// Adds scale * d(sum of BCE)/d(theta) for the last forward pass (which
  /// must have kept history) into the gradient buffer. Returns the summed loss.
  T backward(std::span<const int> labels, T scale) {
    if (!history_) throw DomainError("backward requires a forward pass with history");
    const std::size_t b = batch_;
    const std::size_t h = hidden_;
    const std::size_t h4 = 4 * h;
    dlogit_.resize(b);
    T loss = 0;
    for (std::size_t e = 0; e < b; ++e) {
      dlogit_[e] = scale * (prob_[e] - static_cast<T>(labels[e]));
      loss += bce(prob_[e], labels[e]);
    }

    const T* h_last = hid_.data() + (steps_ - 1) * h * b;
    auto ghead = grad_.head_weights();
    const auto head = params_->head_weights();
    dh_.resize(h * b);
    dc_.assign(h * b, T{0});
    for (std::size_t u = 0; u < h; ++u) {
      ghead[u] += dot(dlogit_.data(), h_last + u * b, b);
      for (std::size_t e = 0; e < b; ++e) dh_[u * b + e] = dlogit_[e] * head[u];
    }
    grad_.head_bias() += sum(dlogit_.data(), b);

    dz_.resize(h4 * b);
    for (std::size_t t = steps_; t-- > 0;) {
      const std::size_t base = t * h * b;
      const T* c_prev = t > 0 ? cell_.data() + base - h * b : zeros_.data();
      cell_step_backward(h * b, ig_.data() + base, fg_.data() + base, og_.data() + base, cg_.data() + base,
                         ctanh_.data() + base, c_prev, dh_.data(), dc_.data(), dz_.data());

      const T* x = xs_.data() + t * inputs_ * b;
      for (Gate gate : all_gates) {
        const std::size_t go = static_cast<std::size_t>(gate) * h;
        auto gbias = grad_.bias(gate);
        auto ginput = grad_.input_weights(gate);
        auto grec = grad_.recurrent_weights(gate);
        for (std::size_t u = 0; u < h; ++u) {
          const T* dzr = dz_.data() + (go + u) * b;
          gbias[u] += sum(dzr, b);
          for (std::size_t k = 0; k < inputs_; ++k) ginput[u * inputs_ + k] += dot(dzr, x + k * b, b);
          if (t > 0) {
            const T* h_prev = hid_.data() + base - h * b;
            for (std::size_t j = 0; j < h; ++j) grec[u * h + j] += dot(dzr, h_prev + j * b, b);
          }
        }
      }
      if (t == 0) break;
      std::fill(dh_.begin(), dh_.end(), T{0});
      for (std::size_t r = 0; r < h4; ++r) {
        const T* dzr = dz_.data() + r * b;
        for (std::size_t j = 0; j < h; ++j) {
          const T w = recurrent_w_[r * h + j];
          T* dhj = dh_.data() + j * b;
          for (std::size_t e = 0; e < b; ++e) dhj[e] += w * dzr[e];
        }
      }
    }
    return loss;
  }

  const LstmParams<T>& gradient() const noexcept { return grad_; }
  LstmParams<T>& gradient() noexcept { return grad_; }

  static T bce(T p, int y) noexcept {
    constexpr T eps = static_cast<T>(1e-7);
    const T q = std::clamp(p, eps, T{1} - eps);
    return y == 1 ? -std::log(q) : -std::log(T{1} - q);
  }

private:
  const LstmParams<T>* params_ = nullptr;
  std::size_t hidden_;
  std::size_t inputs_;
  std::vector<T> input_w_, recurrent_w_, bias_;
  LstmParams<T> grad_;

  std::size_t batch_ = 0;
  std::size_t steps_ = 0;
  bool history_ = false;
  std::vector<T> xs_, z_, zeros_;
  std::vector<T> ig_, fg_, og_, cg_, cell_, ctanh_, hid_;
  std::vector<T> logits_, prob_, dlogit_, dh_, dc_, dz_;
};

/// Splits a dataset into groups of equal-length sequences of at most
/// `max_group` members, preserving order within each length.
template <typename Example, typename Bits>
std::vector<std::vector<std::size_t>> group_by_length(std::span<const Example> data, Bits&& bits_of,
                                                      std::size_t max_group) {
  std::vector<std::pair<std::size_t, std::size_t>> keyed;
  keyed.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) keyed.emplace_back(bits_of(data[i]).size(), i);
  std::stable_sort(keyed.begin(), keyed.end(), [](auto& a, auto& b) { return a.first < b.first; });
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < keyed.size(); ++i) {
    if (groups.empty() || groups.back().size() == max_group || keyed[i].first != keyed[i - 1].first) {
      groups.emplace_back();
    }
    groups.back().push_back(keyed[i].second);
  }
  return groups;
}

inline constexpr std::size_t eval_group = 512;

} // namespace detail

template <std::floating_point T>
ForwardTrace<T> forward(const LstmParams<T>& params, const Bitstring& bits) {
  detail::Engine<T> engine(params);
  const Bitstring* one[] = {&bits};
  engine.forward(one, true);
  return engine.trace(0);
}

/// Binary cross-entropy with p clamped to [1e-7, 1 - 1e-7].
inline double bce_loss(double p, int y) { return detail::Engine<double>::bce(p, y); }

namespace detail {

/// Accumulates the mean-BCE gradient of `batch` into `engine` (already bound
/// to the parameters, gradient cleared) and returns the mean loss.
template <std::floating_point T>
T accumulate_gradient(Engine<T>& engine, std::span<const LabeledExample> batch) {
  if (batch.empty()) throw DomainError("cannot differentiate an empty batch");
  const T scale = T{1} / static_cast<T>(batch.size());
  T loss = 0;
  const auto groups = group_by_length(batch, [](const LabeledExample& ex) -> const Bitstring& { return ex.bits; },
                                      batch.size());
  std::vector<const Bitstring*> bits;
  std::vector<int> labels;
  for (const auto& group : groups) {
    bits.clear();
    labels.clear();
    for (std::size_t i : group) {
      bits.push_back(&batch[i].bits);
      labels.push_back(batch[i].label);
    }
    engine.forward(bits, true);
    loss += engine.backward(labels, scale);
  }
  return loss * scale;
}

} // namespace detail

/// Gradient of the mean batch BCE. Sequences may have different lengths.
template <std::floating_point T>
LstmParams<T> backward(const LstmParams<T>& params, std::span<const LabeledExample> batch, T* mean_loss = nullptr) {
  detail::Engine<T> engine(params);
  const T loss = detail::accumulate_gradient(engine, batch);
  if (mean_loss != nullptr) *mean_loss = loss;
  return std::move(engine.gradient());
}

/// Forward probabilities of every example, in input order.
template <std::floating_point T>
std::vector<T> probabilities(const LstmParams<T>& params, std::span<const LabeledExample> data) {
  detail::Engine<T> engine(params);
  std::vector<T> out(data.size());
  const auto groups = detail::group_by_length(data, [](const LabeledExample& ex) -> const Bitstring& { return ex.bits; },
                                              detail::eval_group);
  std::vector<const Bitstring*> bits;
  for (const auto& group : groups) {
    bits.clear();
    for (std::size_t i : group) bits.push_back(&data[i].bits);
    engine.forward(bits, false);
    const auto p = engine.probabilities();
    for (std::size_t k = 0; k < group.size(); ++k) out[group[k]] = p[k];
  }
  return out;
}

template <std::floating_point T>
T mean_loss(const LstmParams<T>& params, std::span<const LabeledExample> batch) {
  if (batch.empty()) throw DomainError("cannot evaluate loss on an empty batch");
  const auto p = probabilities(params, batch);
  T loss = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) loss += detail::Engine<T>::bce(p[i], batch[i].label);
  return loss / static_cast<T>(batch.size());
}

/// theta <- theta - lr * g, in place.
template <std::floating_point T>
void sgd_update(LstmParams<T>& params, const LstmParams<T>& grads, T lr) {
  if (!params.same_shape(grads)) throw DomainError("gradient shape does not match parameters");
  if (!(lr >= T{0})) throw DomainError("learning rate must be non-negative");
  auto p = params.flat();
  auto g = grads.flat();
  for (std::size_t k = 0; k < p.size(); ++k) p[k] -= lr * g[k];
}

template <std::floating_point T>
LstmParams<T> sgd_step(LstmParams<T> params, const LstmParams<T>& grads, T lr) {
  sgd_update(params, grads, lr);
  return params;
}

/// Predicted label: 1 iff p >= 0.5 (ties go to 1).
template <std::floating_point T>
inline int predict_label(T p) noexcept {
  return p >= T{0.5} ? 1 : 0;
}

template <std::floating_point T>
double accuracy(const LstmParams<T>& params, std::span<const LabeledExample> data) {
  if (data.empty()) throw DomainError("cannot measure accuracy on an empty set");
  const auto p = probabilities(params, data);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) correct += predict_label(p[i]) == data[i].label ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

} // namespace paritylab
