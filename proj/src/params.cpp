#include "uavsched/params.hpp"

#include <atomic>
#include <bit>
#include <cstring>

#include "uavsched/error.hpp"
#include "uavsched/io.hpp"

namespace uavsched {

static_assert(std::endian::native == std::endian::little,
              "checkpoint encoding assumes a little-endian host");

namespace {

std::uint64_t next_uid() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1);
}

}  // namespace

ParamStore::ParamStore(const ParamStore& other) : index_(other.index_) {
  for (const auto& p : other.params_) {
    params_.push_back({p.name, p.value, p.trainable, next_uid()});
  }
}

ParamStore& ParamStore::operator=(const ParamStore& other) {
  if (this != &other) {
    ParamStore copy(other);
    *this = std::move(copy);
  }
  return *this;
}

Parameter& ParamStore::add(std::string name, Tensor value, bool trainable) {
  if (index_.count(name)) throw ArgumentError("duplicate parameter " + name);
  index_.emplace(name, params_.size());
  params_.push_back({std::move(name), std::move(value), trainable, next_uid()});
  return params_.back();
}

Parameter* ParamStore::find(std::string_view name) {
  auto it = index_.find(std::string(name));
  return it == index_.end() ? nullptr : &params_[it->second];
}

const Parameter* ParamStore::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  return it == index_.end() ? nullptr : &params_[it->second];
}

Parameter& ParamStore::get(std::string_view name) {
  if (auto* p = find(name)) return *p;
  throw ArgumentError("unknown parameter " + std::string(name));
}

const Parameter& ParamStore::get(std::string_view name) const {
  if (const auto* p = find(name)) return *p;
  throw ArgumentError("unknown parameter " + std::string(name));
}

void ParamStore::assign_values(const ParamStore& other) {
  for (auto& p : params_) {
    const auto& src = other.get(p.name);
    if (src.value.shape() != p.value.shape()) {
      throw ShapeError("parameter " + p.name + " shape mismatch");
    }
    p.value = src.value;
  }
}

std::size_t ParamStore::scalar_count(bool trainable_only) const {
  std::size_t n = 0;
  for (const auto& p : params_)
    if (p.trainable || !trainable_only) n += p.value.size();
  return n;
}

// ------------------------------------------------------------ checkpoints

double Checkpoint::hyper_value(std::string_view name) const {
  for (const auto& [k, v] : hyper)
    if (k == name) return v;
  throw FormatError("checkpoint lacks hyperparameter " + std::string(name));
}

bool Checkpoint::has_hyper(std::string_view name) const {
  for (const auto& kv : hyper)
    if (kv.first == name) return true;
  return false;
}

void Checkpoint::add_params(const ParamStore& store) {
  for (const auto& p : store) tensors.emplace_back(p.name, p.value);
}

void Checkpoint::load_params(ParamStore& store) const {
  std::unordered_map<std::string_view, const Tensor*> by_name;
  for (const auto& [name, t] : tensors) by_name[name] = &t;
  for (auto& p : store) {
    auto it = by_name.find(p.name);
    if (it == by_name.end()) throw FormatError("checkpoint lacks tensor " + p.name);
    if (it->second->shape() != p.value.shape()) {
      throw FormatError("checkpoint tensor " + p.name + " has shape " +
                        shape_string(it->second->shape()) + ", expected " +
                        shape_string(p.value.shape()));
    }
    p.value = *it->second;
  }
}

namespace {

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

void put_name(std::string& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out += s;
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string name() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }

  void raw(double* dst, std::size_t count) {
    need(count * sizeof(double));
    std::memcpy(dst, bytes_.data() + pos_, count * sizeof(double));
    pos_ += count * sizeof(double);
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw FormatError("truncated checkpoint");
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
  std::string out = "UVSD";
  put<std::uint32_t>(out, Checkpoint::kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.hyper.size()));
  for (const auto& [k, v] : ckpt.hyper) {
    put_name(out, k);
    put<double>(out, v);
  }
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, t] : ckpt.tensors) {
    put_name(out, name);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.ndim()));
    for (auto d : t.shape()) put<std::uint64_t>(out, d);
    out.append(reinterpret_cast<const char*>(t.data()), t.size() * sizeof(double));
  }
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  if (bytes.substr(0, 4) != "UVSD") throw FormatError("not a UVSD checkpoint");
  Reader r(bytes.substr(4));
  const auto version = r.get<std::uint32_t>();
  if (version != Checkpoint::kVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  const auto nh = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < nh; ++i) {
    auto k = r.name();
    ckpt.hyper.emplace_back(std::move(k), r.get<double>());
  }
  const auto nt = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < nt; ++i) {
    auto name = r.name();
    const auto ndim = r.get<std::uint32_t>();
    if (ndim > 8) throw FormatError("tensor " + name + " has too many dimensions");
    Tensor::Shape shape(ndim);
    for (auto& d : shape) d = r.get<std::uint64_t>();
    if (shape_size(shape) > (std::size_t{1} << 32)) throw FormatError("tensor " + name + " too large");
    Tensor t(shape);
    r.raw(t.data(), t.size());
    ckpt.tensors.emplace_back(std::move(name), std::move(t));
  }
  if (!r.done()) throw FormatError("trailing bytes in checkpoint");
  return ckpt;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file(path, encode_checkpoint(ckpt));
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path));
}

}  // namespace uavsched
