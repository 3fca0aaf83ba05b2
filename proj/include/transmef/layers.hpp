#pragma once

// Network building blocks: ConvBlock, patch embedding, pre-norm transformer
// layer. Parameters are plain structs of tensors; the model owns and names
// them.

#include <cstddef>
#include <vector>

#include "transmef/tensor.hpp"

namespace transmef::nn {

inline constexpr double kLayerNormEps = 1e-5;

template <class T>
struct LinearParams {
  BasicTensor<T> weight;  // [in, out]
  BasicTensor<T> bias;    // [out]
};

/// conv3x3 -> ReLU -> conv3x3, padding 1. Spatial extent is preserved.
template <class T>
struct ConvBlockParams {
  BasicTensor<T> w1, b1;  // [C_mid, C_in, 3, 3], [C_mid]
  BasicTensor<T> w2, b2;  // [C_out, C_mid, 3, 3], [C_out]
};

template <class T>
struct PatchEmbedParams {
  std::size_t patch = 0;
  LinearParams<T> proj;  // P^2 -> D
};

template <class T>
struct TransformerLayerParams {
  std::size_t heads = 1;
  BasicTensor<T> ln1_scale, ln1_shift;
  LinearParams<T> q, k, v, o;  // D -> D
  BasicTensor<T> ln2_scale, ln2_shift;
  LinearParams<T> mlp_in;   // D -> D_mlp
  LinearParams<T> mlp_out;  // D_mlp -> D
};

template <class T>
BasicTensor<T> linear(const BasicTensor<T>& x, const LinearParams<T>& p);

template <class T>
BasicTensor<T> conv_block(const BasicTensor<T>& x, const ConvBlockParams<T>& p);

/// [1,H,W] -> [M, P*P], M = HW/P^2. Row k is the k-th patch in row-major
/// patch order, flattened row-major.
template <class T>
BasicTensor<T> patchify(const BasicTensor<T>& image, std::size_t patch);

/// Inverse of patchify.
template <class T>
BasicTensor<T> unpatchify(const BasicTensor<T>& seq, std::size_t patch, std::size_t height,
                          std::size_t width);

template <class T>
BasicTensor<T> patch_embed(const BasicTensor<T>& seq, const PatchEmbedParams<T>& p);

/// z' = z + MSA(LN(z)); out = z' + MLP(LN(z')). When `attention` is given it
/// receives one [M,M] post-softmax matrix per head.
template <class T>
BasicTensor<T> transformer_layer(const BasicTensor<T>& z, const TransformerLayerParams<T>& p,
                                 std::vector<BasicTensor<T>>* attention = nullptr);

/// Tokens [M,D] on a (H/P)x(W/P) grid -> feature map [D,H,W], each token
/// replicated over its PxP cell (nearest-neighbour upsampling).
template <class T>
BasicTensor<T> tokens_to_feature_map(const BasicTensor<T>& tokens, std::size_t patch,
                                     std::size_t height, std::size_t width);

}  // namespace transmef::nn
