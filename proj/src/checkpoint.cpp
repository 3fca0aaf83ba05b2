#include <zlib.h>

#include <bit>
#include <cstring>
#include <map>

#include "transmef/error.hpp"
#include "transmef/fileutil.hpp"
#include "transmef/model.hpp"

namespace transmef {
namespace {

constexpr char kMagic[4] = {'T', 'M', 'E', 'F'};

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    u32(static_cast<std::uint32_t>(v));
    u32(static_cast<std::uint32_t>(v >> 32));
  }
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    bytes_.insert(bytes_.end(), b, b + n);
  }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}
  std::size_t remaining() const { return size_ - pos_; }
  void need(std::size_t n) const {
    if (remaining() < n) throw CheckpointError("checkpoint truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    const std::uint64_t lo = u32();
    return lo | (std::uint64_t(u32()) << 32);
  }
  const std::uint8_t* take(std::size_t n) {
    need(n);
    const auto* p = data_ + pos_;
    pos_ += n;
    return p;
  }

 private:
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(const std::uint8_t* data, std::size_t n) {
  return static_cast<std::uint32_t>(crc32(crc32(0L, Z_NULL, 0), data, static_cast<uInt>(n)));
}

}  // namespace

void save_weights(const Model& model, const std::filesystem::path& path) {
  const auto& c = model.config();
  Writer w;
  w.raw(kMagic, 4);
  w.u32(kCheckpointVersion);
  for (std::size_t v : {c.image_size, c.patch_size, c.embed_dim, c.n_layers, c.n_heads,
                        c.cnn_channels, c.enhance_channels})
    w.u32(static_cast<std::uint32_t>(v));
  w.u32(c.use_transformer ? 1 : 0);
  w.u64(c.seed);
  for (const auto& p : model.parameters()) {
    w.u32(static_cast<std::uint32_t>(p.name.size()));
    w.raw(p.name.data(), p.name.size());
    w.u32(static_cast<std::uint32_t>(p.tensor.rank()));
    for (std::size_t d : p.tensor.shape()) w.u32(static_cast<std::uint32_t>(d));
    for (float v : p.tensor.data()) w.u32(std::bit_cast<std::uint32_t>(v));
  }
  w.u32(crc_of(w.bytes().data(), w.bytes().size()));
  write_file_atomic(path, w.bytes());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw CheckpointError(path.string() + ": not a checkpoint (bad magic)");
  if (bytes.size() < 4 + 4 + 4)
    throw CheckpointError(path.string() + ": checkpoint truncated");
  const std::size_t body = bytes.size() - 4;
  Reader crc_reader(bytes.data() + body, 4);
  if (crc_reader.u32() != crc_of(bytes.data(), body))
    throw CheckpointError(path.string() + ": CRC mismatch (corrupt or truncated checkpoint)");

  Reader r(bytes.data(), body);
  r.take(4);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw CheckpointError(path.string() + ": unsupported checkpoint version " +
                          std::to_string(version));
  Checkpoint ck;
  auto& c = ck.config;
  for (std::size_t* field : {&c.image_size, &c.patch_size, &c.embed_dim, &c.n_layers, &c.n_heads,
                             &c.cnn_channels, &c.enhance_channels})
    *field = r.u32();
  c.use_transformer = r.u32() != 0;
  c.seed = r.u64();
  while (r.remaining() > 0) {
    const std::uint32_t name_len = r.u32();
    const auto* name = r.take(name_len);
    const std::uint32_t rank = r.u32();
    if (rank == 0 || rank > 8) throw CheckpointError("checkpoint tensor has invalid rank");
    Shape shape(rank);
    std::size_t count = 1;
    for (auto& d : shape) {
      d = r.u32();
      count *= d;
    }
    r.need(count * 4);
    std::vector<float> values(count);
    for (auto& v : values) v = std::bit_cast<float>(r.u32());
    ck.tensors.push_back({std::string(reinterpret_cast<const char*>(name), name_len),
                          Tensor::create(std::move(shape), std::move(values))});
  }
  return ck;
}

Model load_weights(const std::filesystem::path& path) {
  return load_weights(path, read_checkpoint(path).config);
}

Model load_weights(const std::filesystem::path& path, const ModelConfig& expected) {
  auto ck = read_checkpoint(path);
  std::map<std::string, const Tensor*> by_name;
  for (const auto& t : ck.tensors)
    if (!by_name.emplace(t.name, &t.tensor).second)
      throw CheckpointError("checkpoint repeats tensor '" + t.name + "'");

  Model model(expected);
  if (by_name.size() != model.parameters().size())
    throw CheckpointError("checkpoint holds " + std::to_string(by_name.size()) +
                          " tensors, model expects " + std::to_string(model.parameters().size()));
  for (const auto& p : model.parameters()) {
    const auto it = by_name.find(p.name);
    if (it == by_name.end()) throw CheckpointError("checkpoint lacks tensor '" + p.name + "'");
    if (it->second->shape() != p.tensor.shape())
      throw ShapeError("tensor '" + p.name + "' has shape " + to_string(it->second->shape()) +
                       " in checkpoint, model expects " + to_string(p.tensor.shape()));
  }
  // Values are copied only after every tensor has been validated.
  for (const auto& p : model.parameters()) {
    auto dst = BasicTensor<float>(p.tensor).mutable_data();
    const auto src = by_name[p.name]->data();
    std::copy(src.begin(), src.end(), dst.begin());
  }
  return model;
}

}  // namespace transmef
