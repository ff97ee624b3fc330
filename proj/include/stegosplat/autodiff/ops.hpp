#pragma once

#include <span>
#include <variant>

#include "stegosplat/autodiff/tape.hpp"

namespace stegosplat::autodiff {

// Convolution with zero padding k/2: spatial size is kept at stride 1 and
// halved at stride 2. x: (Cin, H, W), weight: (Cout, Cin, k, k), bias: (Cout).
template <class T> Var conv2d(Tape<T>& tape, Var x, Var weight, Var bias, int stride);
template <class T> Var leaky_relu(Tape<T>& tape, Var x, double slope);
template <class T> Var upsample2x(Tape<T>& tape, Var x);
template <class T> Var concat_channels(Tape<T>& tape, Var a, Var b);
template <class T> Var sigmoid(Tape<T>& tape, Var x);
template <class T> Var add(Tape<T>& tape, Var a, Var b);
template <class T> Var sub(Tape<T>& tape, Var a, Var b);
template <class T> Var square(Tape<T>& tape, Var x);
template <class T> Var abs(Tape<T>& tape, Var x);
template <class T> Var sum(Tape<T>& tape, Var x);
template <class T> Var mean(Tape<T>& tape, Var x);

/// mean |a - b|
template <class T> Var l1_loss(Tape<T>& tape, Var a, Var b);

struct Conv2d { int stride = 1; };
struct LeakyRelu { double slope = 0.2; };
struct Upsample2x {};
struct Concat {};
struct Sigmoid {};
struct Add {};

using LayerKind = std::variant<Conv2d, LeakyRelu, Upsample2x, Concat, Sigmoid, Add>;

/// Dispatches one layer. Shape errors are rethrown with the layer index in
/// the message.
template <class T>
Var forward_layer(Tape<T>& tape, const LayerKind& kind, std::span<const Var> inputs,
                  std::span<const Var> params, std::size_t layer_index);

}  // namespace stegosplat::autodiff
