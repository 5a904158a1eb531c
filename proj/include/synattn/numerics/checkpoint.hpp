// Copyright 2026 The synattn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "synattn/error.hpp"
#include "synattn/numerics/parameter.hpp"
#include "synattn/numerics/tensor.hpp"

// Binary checkpoint container. All integers are unsigned little-endian,
// floats are IEEE-754 little-endian.
//
//   magic            8 bytes  "SYNATTNK"
//   format_version   u32      (currently 1)
//   scalar_bytes     u32      4 (float32) or 8 (float64)
//   config_len       u64
//   config           config_len bytes, UTF-8 key = value text
//   n_blobs          u32
//   n_blobs x { name_len u32, name bytes, len u64, bytes }
//   n_tensors        u32
//   n_tensors x { name_len u32, name bytes, rank u32, dims u64[rank],
//                 data scalar_bytes * prod(dims) }
namespace synattn {

inline constexpr char kCheckpointMagic[8] = {'S', 'Y', 'N', 'A', 'T', 'T', 'N', 'K'};
inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
struct NamedTensor {
  std::string name;
  Tensor<T> tensor;
};

template <typename T>
struct Checkpoint {
  std::uint32_t format_version = kCheckpointFormatVersion;
  std::string config_text;
  std::vector<std::pair<std::string, std::string>> blobs;
  std::vector<NamedTensor<T>> tensors;

  const std::string& blob(const std::string& name) const {
    for (const auto& [k, v] : blobs) {
      if (k == name) return v;
    }
    fail(ErrorCategory::kCheckpoint, "checkpoint has no section " + name);
  }
};

namespace detail {

class ByteWriter {
 public:
  explicit ByteWriter(const std::string& path) : out_(path, std::ios::binary | std::ios::trunc) {
    require(out_.good(), ErrorCategory::kIo, "cannot open " + path + " for writing");
  }
  void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  void u32(std::uint32_t v) { bytes(&v, 4); }
  void u64(std::uint64_t v) { bytes(&v, 8); }
  void str32(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void str64(const std::string& s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }
  void finish(const std::string& path) {
    out_.flush();
    require(out_.good(), ErrorCategory::kIo, "write failed for " + path);
  }

 private:
  std::ofstream out_;
};

class ByteReader {
 public:
  explicit ByteReader(const std::string& path) : in_(path, std::ios::binary) {
    require(in_.good(), ErrorCategory::kIo, "cannot open checkpoint " + path);
  }
  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    require(static_cast<std::size_t>(in_.gcount()) == n, ErrorCategory::kCheckpoint, "truncated checkpoint");
  }
  std::uint32_t u32() {
    std::uint32_t v;
    bytes(&v, 4);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    bytes(&v, 8);
    return v;
  }
  std::string str(std::uint64_t n) {
    require(n < (std::uint64_t{1} << 32), ErrorCategory::kCheckpoint, "implausible string length in checkpoint");
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }

 private:
  std::ifstream in_;
};

template <typename Stored, typename T>
Tensor<T> read_values(ByteReader& r, Shape shape) {
  std::vector<Stored> raw(shape_numel(shape));
  r.bytes(raw.data(), raw.size() * sizeof(Stored));
  return Tensor<T>(std::move(shape), std::vector<T>(raw.begin(), raw.end()));
}

}  // namespace detail

template <typename T>
void save_checkpoint(const std::string& path, const std::string& config_text,
                     const std::vector<std::pair<std::string, std::string>>& blobs, const ParameterSet<T>& params) {
  static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>);
  detail::ByteWriter w(path);
  w.bytes(kCheckpointMagic, sizeof kCheckpointMagic);
  w.u32(kCheckpointFormatVersion);
  w.u32(sizeof(T));
  w.str64(config_text);
  w.u32(static_cast<std::uint32_t>(blobs.size()));
  for (const auto& [name, body] : blobs) {
    w.str32(name);
    w.str64(body);
  }
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params.entries()) {
    const Tensor<T>& t = p.var.value();
    w.str32(p.name);
    w.u32(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) w.u64(d);
    w.bytes(t.data().data(), t.numel() * sizeof(T));
  }
  w.finish(path);
}

// Reads a checkpoint written at either precision, converting to T.
template <typename T>
Checkpoint<T> load_checkpoint(const std::string& path) {
  detail::ByteReader r(path);
  char magic[8];
  r.bytes(magic, 8);
  require(std::memcmp(magic, kCheckpointMagic, 8) == 0, ErrorCategory::kCheckpoint, path + " is not a checkpoint");
  Checkpoint<T> ck;
  ck.format_version = r.u32();
  require(ck.format_version == kCheckpointFormatVersion, ErrorCategory::kCheckpoint,
          "unsupported checkpoint format version " + std::to_string(ck.format_version));
  const std::uint32_t width = r.u32();
  require(width == 4 || width == 8, ErrorCategory::kCheckpoint, "unsupported scalar width");
  ck.config_text = r.str(r.u64());
  const std::uint32_t n_blobs = r.u32();
  for (std::uint32_t i = 0; i < n_blobs; ++i) {
    std::string name = r.str(r.u32());
    std::string body = r.str(r.u64());
    ck.blobs.emplace_back(std::move(name), std::move(body));
  }
  const std::uint32_t n_tensors = r.u32();
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    NamedTensor<T> nt;
    nt.name = r.str(r.u32());
    const std::uint32_t rank = r.u32();
    require(rank > 0 && rank <= 8, ErrorCategory::kCheckpoint, "bad tensor rank for " + nt.name);
    Shape shape(rank);
    for (auto& d : shape) d = r.u64();
    nt.tensor = width == 4 ? detail::read_values<float, T>(r, std::move(shape))
                           : detail::read_values<double, T>(r, std::move(shape));
    ck.tensors.push_back(std::move(nt));
  }
  return ck;
}

// Copies checkpoint tensors into a parameter set with identical names and shapes.
template <typename T>
void restore_parameters(const Checkpoint<T>& ck, ParameterSet<T>& params) {
  require(ck.tensors.size() == params.size(), ErrorCategory::kCheckpoint,
          "checkpoint holds " + std::to_string(ck.tensors.size()) + " tensors, model expects " +
              std::to_string(params.size()));
  for (const auto& nt : ck.tensors) {
    require(params.contains(nt.name), ErrorCategory::kCheckpoint, "unexpected tensor " + nt.name);
    ad::Var<T> v = params.get(nt.name);
    require(v.shape() == nt.tensor.shape(), ErrorCategory::kCheckpoint,
            "shape mismatch for " + nt.name + ": " + shape_string(nt.tensor.shape()) + " vs " +
                shape_string(v.shape()));
    v.mutable_value() = nt.tensor;
  }
}

}  // namespace synattn
