#include "transmef/model.hpp"

#include <cmath>

#include "transmef/error.hpp"
#include "transmef/rng.hpp"

namespace transmef {

void ModelConfig::validate() const {
  auto fail = [](const std::string& what) { throw ShapeError("model config: " + what); };
  if (image_size == 0 || patch_size == 0 || embed_dim == 0 || n_heads == 0 || cnn_channels == 0 ||
      enhance_channels == 0)
    fail("sizes must be positive");
  if (image_size % patch_size != 0)
    fail("patch_size " + std::to_string(patch_size) + " does not divide image_size " +
         std::to_string(image_size));
  if (embed_dim % n_heads != 0)
    fail("n_heads " + std::to_string(n_heads) + " does not divide embed_dim " +
         std::to_string(embed_dim));
}

template <class T>
BasicModel<T>::BasicModel(const ModelConfig& config) : config_(config) {
  config_.validate();
  const std::size_t c = config_.cnn_channels, e = config_.enhance_channels;
  const std::size_t d = config_.embed_dim, p = config_.patch_size;

  cnn_.push_back(make_conv_block("cnn.0", 1, c));
  cnn_.push_back(make_conv_block("cnn.1", c, c));
  cnn_.push_back(make_conv_block("cnn.2", c, c));

  std::size_t fused_channels = c;
  if (config_.use_transformer) {
    embed_.patch = p;
    embed_.proj = make_linear("embed", p * p, d, 1.0);
    for (std::size_t l = 0; l < config_.n_layers; ++l) {
      const std::string prefix = "layer." + std::to_string(l);
      nn::TransformerLayerParams<T> layer;
      layer.heads = config_.n_heads;
      layer.ln1_scale = add_param(prefix + ".ln1.scale", {d}, 0, true);
      layer.ln1_shift = add_param(prefix + ".ln1.shift", {d}, 0);
      layer.q = make_linear(prefix + ".q", d, d, 1.0);
      layer.k = make_linear(prefix + ".k", d, d, 1.0);
      layer.v = make_linear(prefix + ".v", d, d, 1.0);
      layer.o = make_linear(prefix + ".o", d, d, 1.0);
      layer.ln2_scale = add_param(prefix + ".ln2.scale", {d}, 0, true);
      layer.ln2_shift = add_param(prefix + ".ln2.shift", {d}, 0);
      layer.mlp_in = make_linear(prefix + ".mlp_in", d, 4 * d, std::sqrt(2.0));
      layer.mlp_out = make_linear(prefix + ".mlp_out", 4 * d, d, 1.0);
      layers_.push_back(std::move(layer));
    }
    token_proj_ = make_linear("token_proj", d, d, 1.0);
    fused_channels += d;
  }

  enhance_.push_back(make_conv_block("enhance.0", fused_channels, e));
  enhance_.push_back(make_conv_block("enhance.1", e, e));
  decoder_.push_back(make_conv_block("decoder.0", e, e));
  decoder_.push_back(make_conv_block("decoder.1", e, e));
  head_w_ = add_param("head.weight", {1, e, 1, 1}, std::sqrt(3.0 / double(e)));
  head_b_ = add_param("head.bias", {1}, 0);
}

template <class T>
BasicTensor<T> BasicModel<T>::add_param(const std::string& name, Shape shape, double bound,
                                        bool ones) {
  auto t = BasicTensor<T>::zeros(std::move(shape), true);
  auto values = t.mutable_data();
  if (ones) {
    for (auto& v : values) v = T(1);
  } else if (bound > 0) {
    Rng rng = Rng::derive(config_.seed, name);
    for (auto& v : values) v = static_cast<T>(rng.uniform(-bound, bound));
  }
  params_.push_back({name, t});
  return t;
}

// Kaiming-uniform: bound = gain * sqrt(3 / fan_in). The first conv feeds a
// ReLU (gain sqrt 2); the second is linear.
template <class T>
nn::ConvBlockParams<T> BasicModel<T>::make_conv_block(const std::string& name, std::size_t c_in,
                                                      std::size_t c_out) {
  nn::ConvBlockParams<T> p;
  p.w1 = add_param(name + ".conv1.weight", {c_out, c_in, 3, 3}, std::sqrt(6.0 / double(c_in * 9)));
  p.b1 = add_param(name + ".conv1.bias", {c_out}, 0);
  p.w2 = add_param(name + ".conv2.weight", {c_out, c_out, 3, 3}, std::sqrt(3.0 / double(c_out * 9)));
  p.b2 = add_param(name + ".conv2.bias", {c_out}, 0);
  return p;
}

template <class T>
nn::LinearParams<T> BasicModel<T>::make_linear(const std::string& name, std::size_t in,
                                               std::size_t out, double gain) {
  nn::LinearParams<T> p;
  p.weight = add_param(name + ".weight", {in, out}, gain * std::sqrt(3.0 / double(in)));
  p.bias = add_param(name + ".bias", {out}, 0);
  return p;
}

template <class T>
BasicTensor<T> BasicModel<T>::find(const std::string& name) const {
  for (const auto& p : params_)
    if (p.name == name) return p.tensor;
  return {};
}

template <class T>
std::size_t BasicModel<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.tensor.size();
  return n;
}

template <class T>
void BasicModel<T>::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

namespace {

template <class T>
void check_image(const BasicTensor<T>& image) {
  if (image.rank() != 3 || image.dim(0) != 1)
    throw ShapeError("model expects a [1,H,W] image, got " + to_string(image.shape()));
}

}  // namespace

template <class T>
BasicTensor<T> BasicModel<T>::cnn_branch(const BasicTensor<T>& image) const {
  check_image(image);
  auto x = image;
  for (const auto& block : cnn_) x = nn::conv_block(x, block);
  return x;
}

template <class T>
BasicTensor<T> BasicModel<T>::transformer_branch(const BasicTensor<T>& image) const {
  check_image(image);
  if (!config_.use_transformer) throw ShapeError("model was built without a transformer branch");
  const std::size_t h = image.dim(1), w = image.dim(2), p = config_.patch_size;
  auto z = nn::patch_embed(nn::patchify(image, p), embed_);
  for (const auto& layer : layers_) z = nn::transformer_layer(z, layer);
  return nn::tokens_to_feature_map(nn::linear(z, token_proj_), p, h, w);
}

template <class T>
BasicTensor<T> BasicModel<T>::encode(const BasicTensor<T>& image) const {
  auto x = cnn_branch(image);
  if (config_.use_transformer) x = concat(std::vector<BasicTensor<T>>{x, transformer_branch(image)}, 0);
  for (const auto& block : enhance_) x = nn::conv_block(x, block);
  return x;
}

template <class T>
BasicTensor<T> BasicModel<T>::decode(const BasicTensor<T>& features) const {
  if (features.rank() != 3 || features.dim(0) != config_.enhance_channels)
    throw ShapeError("decode expects [" + std::to_string(config_.enhance_channels) +
                     ",H,W] features, got " + to_string(features.shape()));
  auto x = features;
  for (const auto& block : decoder_) x = nn::conv_block(x, block);
  return sigmoid(conv2d(x, head_w_, head_b_, 0));
}

template class BasicModel<float>;
template class BasicModel<double>;

}  // namespace transmef
