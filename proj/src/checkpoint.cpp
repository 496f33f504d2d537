#include "g3d/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "g3d/error.hpp"

G3D_NAMESPACE_BEGIN

namespace {

constexpr char kMagic[4] = {'G', '3', 'D', 'C'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : b_(b) {}
  bool done() const { return pos_ == b_.size(); }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return b_.size() - pos_; }
  void need(std::size_t n) const {
    require(remaining() >= n, ErrorCode::kTruncated, "checkpoint: truncated");
  }

 private:
  const std::vector<std::uint8_t>& b_;
  std::size_t pos_ = 0;
};

std::vector<float> to_f32(const std::vector<Real>& v) { return {v.begin(), v.end()}; }

void copy_into(std::vector<Real>& dst, const CheckpointSection& s) {
  require(s.data.size() == dst.size(), ErrorCode::kSizeMismatch, "checkpoint: size mismatch in " + s.name);
  std::copy(s.data.begin(), s.data.end(), dst.begin());
}

}  // namespace

const CheckpointSection* Checkpoint::find(const std::string& name) const {
  for (const auto& s : sections)
    if (s.name == name) return &s;
  return nullptr;
}

void Checkpoint::set(const std::string& name, std::vector<float> data) {
  for (auto& s : sections)
    if (s.name == name) {
      s.data = std::move(data);
      return;
    }
  sections.push_back({name, std::move(data)});
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, kCheckpointVersion);
  for (const auto& s : ckpt.sections) {
    put_u32(out, static_cast<std::uint32_t>(s.name.size()));
    out.insert(out.end(), s.name.begin(), s.name.end());
    put_u32(out, static_cast<std::uint32_t>(s.data.size()));
    for (float f : s.data) put_f32(out, f);
  }
  return out;
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  require(bytes.size() >= 4, ErrorCode::kTruncated, "checkpoint: truncated header");
  require(std::memcmp(bytes.data(), kMagic, 4) == 0, ErrorCode::kBadMagic, "checkpoint: bad magic");
  r.str(4);
  const std::uint32_t version = r.u32();
  require(version == kCheckpointVersion, ErrorCode::kVersionMismatch,
          "checkpoint: unsupported version " + std::to_string(version));
  Checkpoint ckpt;
  while (!r.done()) {
    CheckpointSection s;
    s.name = r.str(r.u32());
    const std::uint32_t count = r.u32();
    r.need(static_cast<std::size_t>(count) * 4);
    s.data.resize(count);
    for (auto& f : s.data) f = std::bit_cast<float>(r.u32());
    ckpt.sections.push_back(std::move(s));
  }
  return ckpt;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto bytes = encode_checkpoint(ckpt);
  std::ofstream f(path, std::ios::binary);
  require(static_cast<bool>(f), ErrorCode::kIo, "cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(f), ErrorCode::kIo, "write failed: " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  require(static_cast<bool>(f), ErrorCode::kMissingFile, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

void store_params(const ParamStore& store, Checkpoint& ckpt) {
  for (const auto& g : store.groups()) {
    ckpt.set("param/" + g->name, to_f32(g->value));
    ckpt.set("adam.m/" + g->name, to_f32(g->m));
    ckpt.set("adam.v/" + g->name, to_f32(g->v));
    ckpt.set("adam.t/" + g->name, {static_cast<float>(g->step), static_cast<float>(g->skipped_steps)});
  }
}

void load_params(ParamStore& store, const Checkpoint& ckpt) {
  for (const auto& g : store.groups()) {
    const auto* p = ckpt.find("param/" + g->name);
    require(p != nullptr, ErrorCode::kSizeMismatch, "checkpoint: missing parameter group " + g->name);
    copy_into(g->value, *p);
    const auto* m = ckpt.find("adam.m/" + g->name);
    const auto* v = ckpt.find("adam.v/" + g->name);
    const auto* t = ckpt.find("adam.t/" + g->name);
    g->m.assign(g->size(), 0);
    g->v.assign(g->size(), 0);
    if (m && v && t) {
      copy_into(g->m, *m);
      copy_into(g->v, *v);
      require(t->data.size() == 2, ErrorCode::kSizeMismatch, "checkpoint: bad step section for " + g->name);
      g->step = static_cast<std::int64_t>(t->data[0]);
      g->skipped_steps = static_cast<std::int64_t>(t->data[1]);
    } else {
      g->step = 0;
      g->skipped_steps = 0;
    }
  }
}

G3D_NAMESPACE_END
