#include "acd/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace acd {

namespace {

template <class T>
void put(std::vector<std::uint8_t>& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::uint8_t buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  out.insert(out.end(), buf, buf + sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : b_(b) {}
  template <class T>
  T get() {
    need(sizeof(T));
    std::uint8_t buf[sizeof(T)];
    std::memcpy(buf, b_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    pos_ += sizeof(T);
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }
  void seek(std::size_t p) { pos_ = p; }
  std::size_t size() const { return b_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > b_.size()) throw checkpoint_error("checkpoint: truncated file");
  }
  const std::vector<std::uint8_t>& b_;
  std::size_t pos_ = 0;
};

}  // namespace

Checkpoint Checkpoint::capture(const ParameterStore& store, std::string metadata) {
  Checkpoint c;
  c.metadata = std::move(metadata);
  for (auto const& nt : store.all())
    c.entries.push_back({nt.name, nt.tensor.shape(), {nt.tensor.data().begin(), nt.tensor.data().end()}});
  return c;
}

void Checkpoint::restore(ParameterStore& store) const {
  for (auto& nt : store.all()) {
    const Entry* e = nullptr;
    for (auto const& x : entries)
      if (x.name == nt.name) e = &x;
    if (!e) throw checkpoint_error("checkpoint: missing tensor " + nt.name);
    if (e->shape != nt.tensor.shape())
      throw checkpoint_error("checkpoint: shape mismatch for " + nt.name + ": file " + shape_str(e->shape) +
                             ", model " + shape_str(nt.tensor.shape()));
    Tensor t = nt.tensor;
    std::copy(e->data.begin(), e->data.end(), t.mutable_data().begin());
  }
}

std::vector<std::uint8_t> Checkpoint::serialize() const {
  std::vector<std::uint8_t> out{'A', 'C', 'D', 'T'};
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(metadata.size()));
  out.insert(out.end(), metadata.begin(), metadata.end());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(entries.size()));
  std::uint64_t offset = 0;
  for (auto const& e : entries) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
    out.insert(out.end(), e.name.begin(), e.name.end());
    put<std::uint32_t>(out, static_cast<std::uint32_t>(e.shape.size()));
    for (auto d : e.shape) put<std::uint64_t>(out, d);
    put<std::uint64_t>(out, offset);
    offset += e.data.size() * sizeof(double);
  }
  for (auto const& e : entries)
    for (double v : e.data) put<double>(out, v);
  return out;
}

Checkpoint Checkpoint::deserialize(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  if (r.bytes(4) != "ACDT") throw checkpoint_error("checkpoint: bad magic");
  const auto version = r.get<std::uint32_t>();
  if (version != kVersion) throw checkpoint_error("checkpoint: unsupported version " + std::to_string(version));
  Checkpoint c;
  c.metadata = r.bytes(r.get<std::uint32_t>());
  const auto count = r.get<std::uint32_t>();
  std::vector<std::uint64_t> offsets;
  for (std::uint32_t k = 0; k < count; ++k) {
    Entry e;
    e.name = r.bytes(r.get<std::uint32_t>());
    const auto rank = r.get<std::uint32_t>();
    std::size_t n = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      e.shape.push_back(static_cast<std::size_t>(r.get<std::uint64_t>()));
      n *= e.shape.back();
    }
    offsets.push_back(r.get<std::uint64_t>());
    e.data.resize(n);
    c.entries.push_back(std::move(e));
  }
  const std::size_t payload = r.pos();
  for (std::size_t k = 0; k < c.entries.size(); ++k) {
    r.seek(payload + offsets[k]);
    for (auto& v : c.entries[k].data) v = r.get<double>();
  }
  return c;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  const auto bytes = serialize();
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw checkpoint_error("checkpoint: cannot write " + tmp);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw checkpoint_error("checkpoint: write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw checkpoint_error("checkpoint: cannot read " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace acd
