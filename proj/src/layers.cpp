#include "transmef/layers.hpp"

#include <cmath>
#include <memory>

#include "transmef/error.hpp"

namespace transmef::nn {
namespace {

using Index = std::shared_ptr<const std::vector<std::size_t>>;

void check_patch_grid(std::size_t height, std::size_t width, std::size_t patch) {
  if (patch == 0 || height % patch != 0 || width % patch != 0)
    throw ShapeError("image " + std::to_string(height) + "x" + std::to_string(width) +
                     " is not divisible into " + std::to_string(patch) + "x" +
                     std::to_string(patch) + " patches");
}

// For each sequence entry (patch k, offset dy*P+dx), the flat pixel index.
Index patch_index(std::size_t height, std::size_t width, std::size_t patch) {
  const std::size_t gw = width / patch;
  const std::size_t m = (height / patch) * gw;
  auto idx = std::make_shared<std::vector<std::size_t>>(m * patch * patch);
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t py = k / gw, px = k % gw;
    for (std::size_t dy = 0; dy < patch; ++dy)
      for (std::size_t dx = 0; dx < patch; ++dx)
        (*idx)[(k * patch + dy) * patch + dx] = (py * patch + dy) * width + px * patch + dx;
  }
  return idx;
}

}  // namespace

template <class T>
BasicTensor<T> linear(const BasicTensor<T>& x, const LinearParams<T>& p) {
  return add_row_bias(matmul(x, p.weight), p.bias);
}

template <class T>
BasicTensor<T> conv_block(const BasicTensor<T>& x, const ConvBlockParams<T>& p) {
  return conv2d(relu(conv2d(x, p.w1, p.b1, 1)), p.w2, p.b2, 1);
}

template <class T>
BasicTensor<T> patchify(const BasicTensor<T>& image, std::size_t patch) {
  if (image.rank() != 3 || image.dim(0) != 1)
    throw ShapeError("patchify expects a [1,H,W] image, got " + to_string(image.shape()));
  const std::size_t h = image.dim(1), w = image.dim(2);
  check_patch_grid(h, w, patch);
  return gather(image, patch_index(h, w, patch), {h * w / (patch * patch), patch * patch});
}

template <class T>
BasicTensor<T> unpatchify(const BasicTensor<T>& seq, std::size_t patch, std::size_t height,
                          std::size_t width) {
  check_patch_grid(height, width, patch);
  if (seq.rank() != 2 || seq.dim(0) != height * width / (patch * patch) || seq.dim(1) != patch * patch)
    throw ShapeError("unpatchify: sequence " + to_string(seq.shape()) + " does not tile " +
                     std::to_string(height) + "x" + std::to_string(width));
  const auto forward = patch_index(height, width, patch);
  auto inverse = std::make_shared<std::vector<std::size_t>>(forward->size());
  for (std::size_t i = 0; i < forward->size(); ++i) (*inverse)[(*forward)[i]] = i;
  return gather(seq, Index(inverse), {1, height, width});
}

template <class T>
BasicTensor<T> patch_embed(const BasicTensor<T>& seq, const PatchEmbedParams<T>& p) {
  if (seq.rank() != 2 || seq.dim(1) != p.proj.weight.dim(0))
    throw ShapeError("patch_embed: sequence " + to_string(seq.shape()) + " vs projection " +
                     to_string(p.proj.weight.shape()));
  return linear(seq, p.proj);
}

template <class T>
BasicTensor<T> transformer_layer(const BasicTensor<T>& z, const TransformerLayerParams<T>& p,
                                 std::vector<BasicTensor<T>>* attention) {
  if (z.rank() != 2 || z.dim(1) != p.q.weight.dim(0))
    throw ShapeError("transformer_layer: tokens " + to_string(z.shape()) + " vs width " +
                     std::to_string(p.q.weight.dim(0)));
  const std::size_t d = z.dim(1);
  if (p.heads == 0 || d % p.heads != 0)
    throw ShapeError("embedding width " + std::to_string(d) + " not divisible by " +
                     std::to_string(p.heads) + " heads");
  const std::size_t dh = d / p.heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));

  const auto normed = layer_norm(z, p.ln1_scale, p.ln1_shift, static_cast<T>(kLayerNormEps));
  const auto q = linear(normed, p.q);
  const auto k = linear(normed, p.k);
  const auto v = linear(normed, p.v);
  std::vector<BasicTensor<T>> heads;
  heads.reserve(p.heads);
  for (std::size_t h = 0; h < p.heads; ++h) {
    const auto qh = slice(q, 1, h * dh, dh);
    const auto kh = slice(k, 1, h * dh, dh);
    const auto vh = slice(v, 1, h * dh, dh);
    const auto weights = softmax(mul_scalar(matmul(qh, transpose(kh)), scale), 1);
    if (attention) attention->push_back(weights);
    heads.push_back(matmul(weights, vh));
  }
  const auto attended = linear(p.heads == 1 ? heads.front() : concat(heads, 1), p.o);
  const auto mid = add(z, attended);

  const auto normed2 = layer_norm(mid, p.ln2_scale, p.ln2_shift, static_cast<T>(kLayerNormEps));
  const auto mlp = linear(gelu(linear(normed2, p.mlp_in)), p.mlp_out);
  return add(mid, mlp);
}

template <class T>
BasicTensor<T> tokens_to_feature_map(const BasicTensor<T>& tokens, std::size_t patch,
                                     std::size_t height, std::size_t width) {
  check_patch_grid(height, width, patch);
  const std::size_t gw = width / patch;
  const std::size_t m = (height / patch) * gw;
  if (tokens.rank() != 2 || tokens.dim(0) != m)
    throw ShapeError("tokens " + to_string(tokens.shape()) + " do not form a " +
                     std::to_string(height / patch) + "x" + std::to_string(gw) + " grid");
  const std::size_t d = tokens.dim(1);
  auto idx = std::make_shared<std::vector<std::size_t>>(d * height * width);
  for (std::size_t c = 0; c < d; ++c)
    for (std::size_t y = 0; y < height; ++y)
      for (std::size_t x = 0; x < width; ++x)
        (*idx)[(c * height + y) * width + x] = ((y / patch) * gw + x / patch) * d + c;
  return gather(tokens, Index(idx), {d, height, width});
}

#define TRANSMEF_INSTANTIATE_LAYERS(T)                                                            \
  template BasicTensor<T> linear(const BasicTensor<T>&, const LinearParams<T>&);                  \
  template BasicTensor<T> conv_block(const BasicTensor<T>&, const ConvBlockParams<T>&);           \
  template BasicTensor<T> patchify(const BasicTensor<T>&, std::size_t);                           \
  template BasicTensor<T> unpatchify(const BasicTensor<T>&, std::size_t, std::size_t, std::size_t); \
  template BasicTensor<T> patch_embed(const BasicTensor<T>&, const PatchEmbedParams<T>&);         \
  template BasicTensor<T> transformer_layer(const BasicTensor<T>&, const TransformerLayerParams<T>&, \
                                            std::vector<BasicTensor<T>>*);                        \
  template BasicTensor<T> tokens_to_feature_map(const BasicTensor<T>&, std::size_t, std::size_t,  \
                                                std::size_t);

TRANSMEF_INSTANTIATE_LAYERS(float)
TRANSMEF_INSTANTIATE_LAYERS(double)

}  // namespace transmef::nn
