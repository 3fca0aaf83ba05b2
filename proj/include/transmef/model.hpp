#pragma once

// Encoder-decoder reconstruction network.
//
//   encoder = EnhanceBlock(concat(CNN branch, transformer branch))
//   decoder = ConvBlock x2 -> 1x1 conv -> sigmoid
//
// The CNN branch is three ConvBlocks (1 -> C -> C -> C). The transformer
// branch splits the image into PxP patches, embeds them to width D, runs L
// pre-norm transformer layers, projects the tokens and upsamples the token
// grid back to full resolution by nearest-neighbour replication. With
// use_transformer = false the encoder is the CNN branch alone.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "transmef/layers.hpp"
#include "transmef/tensor.hpp"

namespace transmef {

struct ModelConfig {
  std::size_t image_size = 64;
  std::size_t patch_size = 8;
  std::size_t embed_dim = 64;
  std::size_t n_layers = 2;
  std::size_t n_heads = 4;
  std::size_t cnn_channels = 16;
  std::size_t enhance_channels = 64;
  bool use_transformer = true;
  std::uint64_t seed = 0;

  /// Throws ShapeError on inconsistent values.
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

template <class T>
struct NamedTensor {
  std::string name;
  BasicTensor<T> tensor;
};

template <class T>
class BasicModel {
 public:
  /// Kaiming-uniform (fan-in) weights, zero biases, unit LayerNorm scale.
  /// Each parameter draws from its own stream derived from (seed, name).
  explicit BasicModel(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }

  /// [1,H,W] -> [C,H,W]
  BasicTensor<T> cnn_branch(const BasicTensor<T>& image) const;
  /// [1,H,W] -> [D,H,W]; H and W must be multiples of the patch size.
  BasicTensor<T> transformer_branch(const BasicTensor<T>& image) const;
  /// [1,H,W] -> [enhance_channels,H,W]
  BasicTensor<T> encode(const BasicTensor<T>& image) const;
  /// [enhance_channels,H,W] -> [1,H,W] in (0,1)
  BasicTensor<T> decode(const BasicTensor<T>& features) const;
  BasicTensor<T> reconstruct(const BasicTensor<T>& image) const { return decode(encode(image)); }

  /// Named parameters in a fixed order (the checkpoint order).
  const std::vector<NamedTensor<T>>& parameters() const { return params_; }
  /// Null tensor handle when the name is unknown.
  BasicTensor<T> find(const std::string& name) const;
  std::size_t parameter_count() const;
  void zero_grad();

  /// Copies every parameter value from `other` (same config), converting
  /// precision as needed.
  template <class U>
  void copy_values_from(const BasicModel<U>& other);

 private:
  BasicTensor<T> add_param(const std::string& name, Shape shape, double bound, bool ones = false);
  nn::ConvBlockParams<T> make_conv_block(const std::string& name, std::size_t c_in,
                                         std::size_t c_out);
  nn::LinearParams<T> make_linear(const std::string& name, std::size_t in, std::size_t out,
                                  double gain);

  ModelConfig config_;
  std::vector<NamedTensor<T>> params_;
  std::vector<nn::ConvBlockParams<T>> cnn_;
  nn::PatchEmbedParams<T> embed_;
  std::vector<nn::TransformerLayerParams<T>> layers_;
  nn::LinearParams<T> token_proj_;
  std::vector<nn::ConvBlockParams<T>> enhance_;
  std::vector<nn::ConvBlockParams<T>> decoder_;
  BasicTensor<T> head_w_, head_b_;
};

using Model = BasicModel<float>;

template <class T>
template <class U>
void BasicModel<T>::copy_values_from(const BasicModel<U>& other) {
  const auto& src = other.parameters();
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto dst = params_[i].tensor.mutable_data();
    const auto values = src.at(i).tensor.data();
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] = static_cast<T>(values[j]);
  }
}

// --- checkpoint file ---------------------------------------------------------
//
// "TMEF" | u32 version | config record | tensor records... | u32 CRC32
// config record: u32 image_size, patch_size, embed_dim, n_layers, n_heads,
//                cnn_channels, enhance_channels, use_transformer; u64 seed
// tensor record: u32 name length, name bytes, u32 rank, u32 extents[rank],
//                little-endian f32 payload
// The CRC covers every preceding byte. All integers are little-endian.

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelConfig config;
  std::vector<NamedTensor<float>> tensors;
};

/// Written to a temporary file and renamed into place.
void save_weights(const Model& model, const std::filesystem::path& path);
/// Parses and verifies a checkpoint. Throws CheckpointError on bad magic,
/// version, CRC, or truncation.
Checkpoint read_checkpoint(const std::filesystem::path& path);
/// Builds a model from the checkpoint's own config.
Model load_weights(const std::filesystem::path& path);
/// Loads into a model built from `expected`; a tensor whose shape differs
/// raises ShapeError naming that tensor.
Model load_weights(const std::filesystem::path& path, const ModelConfig& expected);

}  // namespace transmef
