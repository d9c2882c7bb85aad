#include "kge/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace kge {

namespace {

class Writer {
 public:
  void bytes(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }

  template <class U>
  void uint(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }

  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }

  void label(const std::string& s) {
    uint(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }

  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}

  std::string_view bytes(std::size_t n) {
    if (in_.size() - pos_ < n) throw Error("checkpoint is truncated");
    auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  template <class U>
  U uint() {
    auto b = bytes(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= U(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
  }

  double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }

  std::string label() {
    auto n = uint<std::uint32_t>();
    return std::string(bytes(n));
  }

  bool done() const { return pos_ == in_.size(); }

 private:
  std::string_view in_;
  std::size_t pos_ = 0;
};

void write_dictionary(Writer& w, const std::optional<Dictionary>& dict) {
  if (!dict) {
    w.uint(std::uint64_t{0});
    return;
  }
  w.uint(static_cast<std::uint64_t>(dict->size()));
  for (const auto& l : dict->labels()) w.label(l);
}

std::optional<Dictionary> read_dictionary(Reader& r, std::size_t expected) {
  auto n = r.uint<std::uint64_t>();
  if (n == 0) return std::nullopt;
  if (n != expected) throw Error("checkpoint dictionary size does not match the model");
  std::vector<std::string> labels;
  labels.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) labels.push_back(r.label());
  return Dictionary(std::move(labels));
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  const Model& m = ckpt.model;
  if ((ckpt.entities && ckpt.entities->size() != m.n_ent) ||
      (ckpt.relations && ckpt.relations->size() != m.n_rel))
    throw Error("dictionary sizes do not match the model");
  Writer w;
  w.bytes(kCheckpointMagic, sizeof kCheckpointMagic);
  w.uint(static_cast<std::uint32_t>(m.kind));
  w.uint(std::uint32_t{0});
  w.uint(static_cast<std::uint64_t>(m.n_ent));
  w.uint(static_cast<std::uint64_t>(m.n_rel));
  w.uint(static_cast<std::uint64_t>(m.dim));
  w.uint(static_cast<std::uint64_t>(m.rel_dim));
  for (const auto& p : m.params)
    for (double v : p.data) w.f64(v);
  write_dictionary(w, ckpt.entities);
  write_dictionary(w, ckpt.relations);
  return w.take();
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
  Reader r(bytes);
  if (std::memcmp(r.bytes(sizeof kCheckpointMagic).data(), kCheckpointMagic, sizeof kCheckpointMagic) != 0)
    throw Error("not a checkpoint file (bad magic)");
  auto kind = r.uint<std::uint32_t>();
  if (kind >= std::size(kAllModelKinds)) throw Error("checkpoint has unknown model kind " + std::to_string(kind));
  r.uint<std::uint32_t>();
  auto n_ent = r.uint<std::uint64_t>();
  auto n_rel = r.uint<std::uint64_t>();
  auto dim = r.uint<std::uint64_t>();
  auto rel_dim = r.uint<std::uint64_t>();
  Checkpoint ckpt{make_model(static_cast<ModelKind>(kind), n_ent, n_rel, dim, rel_dim), {}, {}};
  if (ckpt.model.rel_dim != rel_dim) throw Error("checkpoint relation dimension is inconsistent");
  for (auto& p : ckpt.model.params)
    for (double& v : p.data) v = r.f64();
  ckpt.entities = read_dictionary(r, n_ent);
  ckpt.relations = read_dictionary(r, n_rel);
  if (!r.done()) throw Error("trailing bytes after checkpoint");
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  const std::string bytes = serialize_checkpoint(ckpt);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str());
}

}  // namespace kge
