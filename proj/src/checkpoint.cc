#include "rqa/checkpoint.h"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "rqa/error.h"

namespace rqa {

namespace {

constexpr char kMagic[8] = {'R', 'Q', 'A', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kByteOrderMark = 0x01020304;
constexpr std::uint64_t kMaxString = 1ull << 30;

class Writer {
 public:
  void U32(std::uint32_t v) { Le(v, 4); }
  void U64(std::uint64_t v) { Le(v, 8); }
  void F32(float f) { U32(std::bit_cast<std::uint32_t>(f)); }
  void Str(const std::string& s) {
    U64(s.size());
    buf_.append(s);
  }
  void Raw(const char* p, std::size_t n) { buf_.append(p, n); }
  const std::string& buffer() const { return buf_; }

 private:
  void Le(std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string data) : data_(std::move(data)) {}
  std::uint32_t U32() { return static_cast<std::uint32_t>(Le(4)); }
  std::uint64_t U64() { return Le(8); }
  float F32() { return std::bit_cast<float>(U32()); }
  std::string Str() {
    const std::uint64_t n = U64();
    if (n > kMaxString) throw FormatError("checkpoint: string length out of range");
    Need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void Raw(char* out, std::size_t n) {
    Need(n);
    std::memcpy(out, data_.data() + pos_, n);
    pos_ += n;
  }
  bool AtEnd() const { return pos_ == data_.size(); }

 private:
  void Need(std::uint64_t n) {
    if (n > data_.size() - pos_) throw FormatError("checkpoint: truncated file");
  }
  std::uint64_t Le(int bytes) {
    Need(bytes);
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += bytes;
    return v;
  }
  std::string data_;
  std::size_t pos_ = 0;
};

}  // namespace

const StoredTensor* Checkpoint::Find(const std::string& name) const {
  for (const StoredTensor& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

void Checkpoint::Put(const std::string& name, const Shape& shape,
                     std::span<const double> values) {
  RQA_REQUIRE(NumElements(shape) == values.size(), "Checkpoint::Put: size mismatch");
  RQA_REQUIRE(Find(name) == nullptr, "Checkpoint::Put: duplicate tensor " + name);
  StoredTensor t{name, shape, {}};
  t.values.reserve(values.size());
  for (double v : values) t.values.push_back(static_cast<float>(v));
  tensors.push_back(std::move(t));
}

void WriteCheckpoint(const std::string& path, const Checkpoint& ckpt) {
  Writer w;
  w.Raw(kMagic, sizeof(kMagic));
  w.U32(kCheckpointVersion);
  w.U32(kByteOrderMark);
  w.Str(ckpt.config);
  w.Str(ckpt.vocab_hash);
  w.U64(ckpt.step);
  w.U64(ckpt.metadata.size());
  for (const auto& [k, v] : ckpt.metadata) {
    w.Str(k);
    w.Str(v);
  }
  w.U64(ckpt.tensors.size());
  for (const StoredTensor& t : ckpt.tensors) {
    w.Str(t.name);
    w.U32(static_cast<std::uint32_t>(t.shape.size()));
    for (std::size_t d : t.shape) w.U64(d);
    w.U64(t.values.size());
    for (float f : t.values) w.F32(f);
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint " + tmp);
    out.write(w.buffer().data(), static_cast<std::streamsize>(w.buffer().size()));
    if (!out) throw IoError("failed writing checkpoint " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw IoError("cannot move checkpoint into place at " + path);
  }
}

Checkpoint ReadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  Reader r(buf.str());
  char magic[sizeof(kMagic)];
  r.Raw(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw FormatError(path + " is not a checkpoint (bad magic)");
  }
  const std::uint32_t version = r.U32();
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint version " + std::to_string(version) +
                      " is not supported (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  }
  if (r.U32() != kByteOrderMark) throw FormatError("checkpoint: bad byte-order mark");
  Checkpoint ckpt;
  ckpt.config = r.Str();
  ckpt.vocab_hash = r.Str();
  ckpt.step = r.U64();
  const std::uint64_t meta = r.U64();
  for (std::uint64_t i = 0; i < meta; ++i) {
    std::string k = r.Str();
    ckpt.metadata[k] = r.Str();
  }
  const std::uint64_t count = r.U64();
  for (std::uint64_t i = 0; i < count; ++i) {
    StoredTensor t;
    t.name = r.Str();
    const std::uint32_t rank = r.U32();
    if (rank > 8) throw FormatError("checkpoint: tensor " + t.name + " has rank > 8");
    for (std::uint32_t d = 0; d < rank; ++d) t.shape.push_back(r.U64());
    const std::uint64_t n = r.U64();
    if (n != NumElements(t.shape)) {
      throw FormatError("checkpoint: tensor " + t.name + " size does not match its shape");
    }
    if (n > kMaxString) throw FormatError("checkpoint: tensor " + t.name + " too large");
    t.values.resize(n);
    for (float& f : t.values) f = r.F32();
    ckpt.tensors.push_back(std::move(t));
  }
  if (!r.AtEnd()) throw FormatError("checkpoint: trailing bytes");
  return ckpt;
}

void StoreParams(Checkpoint& ckpt, const ParamSet& params) {
  for (const NamedTensor& e : params.entries()) {
    ckpt.Put(e.name, e.tensor.shape(), e.tensor.data());
  }
}

void RestoreParams(const Checkpoint& ckpt, const ParamSet& params) {
  for (const NamedTensor& e : params.entries()) {
    const StoredTensor* s = ckpt.Find(e.name);
    if (s == nullptr) throw FormatError("checkpoint has no tensor " + e.name);
    if (s->shape != e.tensor.shape()) {
      throw FormatError("checkpoint tensor " + e.name + " has shape " +
                        ShapeString(s->shape) + ", model expects " +
                        ShapeString(e.tensor.shape()));
    }
    Tensor t = e.tensor;
    auto dst = t.mutable_data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = s->values[i];
  }
}

void StoreMoments(Checkpoint& ckpt, const ParamSet& params,
                  const std::vector<AdamMoments>& moments) {
  RQA_REQUIRE(moments.size() == params.size(), "StoreMoments: size mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const NamedTensor& e = params.entries()[i];
    const AdamMoments& m = moments[i];
    ckpt.metadata["adam.step." + e.name] = std::to_string(m.step);
    if (m.first.empty()) continue;
    ckpt.Put("adam.m." + e.name, e.tensor.shape(), m.first);
    ckpt.Put("adam.v." + e.name, e.tensor.shape(), m.second);
  }
}

void RestoreMoments(const Checkpoint& ckpt, const ParamSet& params,
                    std::vector<AdamMoments>& moments) {
  moments.assign(params.size(), AdamMoments{});
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string& name = params.entries()[i].name;
    const auto step = ckpt.metadata.find("adam.step." + name);
    if (step == ckpt.metadata.end()) {
      throw FormatError("checkpoint has no optimizer state for " + name);
    }
    moments[i].step = std::stoll(step->second);
    const StoredTensor* m = ckpt.Find("adam.m." + name);
    const StoredTensor* v = ckpt.Find("adam.v." + name);
    if (m == nullptr || v == nullptr) continue;
    if (m->values.size() != params.entries()[i].tensor.numel() ||
        v->values.size() != m->values.size()) {
      throw FormatError("optimizer state for " + name + " has the wrong size");
    }
    moments[i].first.assign(m->values.begin(), m->values.end());
    moments[i].second.assign(v->values.begin(), v->values.end());
  }
}

}  // namespace rqa
