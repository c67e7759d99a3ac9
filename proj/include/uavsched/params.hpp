#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "uavsched/tensor.hpp"

namespace uavsched {

/// A named tensor owned by a ParamStore. Non-trainable entries hold
/// buffers such as batch-normalization running statistics.
struct Parameter {
  std::string name;
  Tensor value;
  bool trainable = true;
  std::uint64_t uid = 0;  // unique per process; keys gradients
};

/// Ordered collection of parameters with stable addresses.
///
/// Copies get fresh uids, so gradients computed against one store never
/// alias another (a frozen baseline is a plain copy of the model store).
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(const ParamStore& other);
  ParamStore& operator=(const ParamStore& other);
  ParamStore(ParamStore&&) noexcept = default;
  ParamStore& operator=(ParamStore&&) noexcept = default;

  Parameter& add(std::string name, Tensor value, bool trainable = true);

  Parameter& get(std::string_view name);
  const Parameter& get(std::string_view name) const;
  Parameter* find(std::string_view name);
  const Parameter* find(std::string_view name) const;

  // Copies values by name; shapes must agree.
  void assign_values(const ParamStore& other);

  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count(bool trainable_only = true) const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::deque<Parameter> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Binary checkpoint:
///   magic "UVSD", u32 version,
///   u32 hyper count, { u32 name length, name bytes, f64 value }*,
///   u32 tensor count, { u32 name length, name bytes, u32 ndim,
///                       u64 dims[ndim], f64 data[prod dims] }*
/// All integers and doubles little-endian.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::vector<std::pair<std::string, double>> hyper;
  std::vector<std::pair<std::string, Tensor>> tensors;

  double hyper_value(std::string_view name) const;  // throws FormatError
  bool has_hyper(std::string_view name) const;
  void add_params(const ParamStore& store);
  // Loads every tensor whose name exists in `store`; all store entries
  // must be present in the checkpoint.
  void load_params(ParamStore& store) const;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::string_view bytes);
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace uavsched
