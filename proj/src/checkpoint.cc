// Copyright 2026 The slujoint Authors.
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

#include "slu/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>

#include "slu/error.h"

namespace slu {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'S', 'L', 'U', 'C', 'K', 'P', 'T', '1'};

template <typename T>
void put(std::ostream &os, T v) {
  os.write(reinterpret_cast<const char *>(&v), sizeof(T));
}

class Reader {
 public:
  Reader(std::istream &is, const std::string &path) : is_(is), path_(path) {}

  template <typename T>
  T get(const char *what) {
    T v;
    bytes(reinterpret_cast<char *>(&v), sizeof(T), what);
    return v;
  }

  void bytes(char *dst, std::size_t n, const char *what) {
    is_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is_.gcount()) != n)
      throw FormatError(internal::StrCat("checkpoint '", path_,
                                         "' truncated while reading ", what));
  }

 private:
  std::istream &is_;
  const std::string &path_;
};

}  // namespace

const Tensor *Checkpoint::find(const std::string &name) const {
  for (const auto &[n, t] : tensors)
    if (n == name) return &t;
  return nullptr;
}

void save_checkpoint(const std::string &path, const std::string &metadata,
                     const ParameterList &params) {
  std::ofstream os(path, std::ios::binary);
  SLU_CHECK(os, "cannot open checkpoint '", path, "' for writing");
  os.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(os, kCheckpointVersion);
  put<std::uint64_t>(os, metadata.size());
  os.write(metadata.data(), static_cast<std::streamsize>(metadata.size()));
  put<std::uint64_t>(os, params.size());
  for (const NamedTensor &p : params) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(p.name.size()));
    os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(p.tensor.rank()));
    for (std::size_t d : p.tensor.shape()) put<std::uint64_t>(os, d);
    const std::span<const double> v = p.tensor.data();
    os.write(reinterpret_cast<const char *>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(double)));
  }
  SLU_CHECK(os.good(), "write to checkpoint '", path, "' failed");
}

Checkpoint load_checkpoint(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  SLU_CHECK(is, "cannot open checkpoint '", path, "'");
  Reader r(is, path);
  char magic[8];
  r.bytes(magic, sizeof(magic), "magic");
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw FormatError(internal::StrCat("'", path, "' is not a checkpoint"));
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion)
    throw FormatError(internal::StrCat("checkpoint '", path, "' has version ",
                                       version, ", expected ", kCheckpointVersion));
  Checkpoint ck;
  ck.metadata.resize(r.get<std::uint64_t>("metadata length"));
  r.bytes(ck.metadata.data(), ck.metadata.size(), "metadata");
  const auto count = r.get<std::uint64_t>("tensor count");
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name(r.get<std::uint32_t>("name length"), '\0');
    r.bytes(name.data(), name.size(), "tensor name");
    Shape shape(r.get<std::uint32_t>("rank"));
    for (std::size_t &d : shape) d = r.get<std::uint64_t>("dims");
    std::vector<double> values(shape_numel(shape));
    r.bytes(reinterpret_cast<char *>(values.data()), values.size() * sizeof(double),
            name.c_str());
    ck.tensors.emplace_back(std::move(name), Tensor(std::move(shape), std::move(values)));
  }
  return ck;
}

void assign_parameters(const Checkpoint &ckpt, ParameterList &params) {
  for (NamedTensor &p : params) {
    const Tensor *src = ckpt.find(p.name);
    if (!src)
      throw FormatError(internal::StrCat("checkpoint has no parameter '", p.name, "'"));
    if (src->shape() != p.tensor.shape())
      throw ShapeError(internal::StrCat("parameter '", p.name, "' has shape ",
                                        shape_str(src->shape()),
                                        " in the checkpoint but ",
                                        shape_str(p.tensor.shape()), " in the model"));
    std::span<double> dst = p.tensor.mutable_data();
    std::copy(src->data().begin(), src->data().end(), dst.begin());
  }
}

}  // namespace slu
