// Copyright 2026 The p2r Authors
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

#include "p2r/archive.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "p2r/common.hpp"

namespace p2r {

namespace {

constexpr std::uint8_t kMagic[4] = {0x54, 0x56, 0x41, 0x31};  // "TVA1"

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
  }
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
  }
}

// Cursor over the input with explicit truncation checks.
class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::size_t pos() const { return pos_; }

  void need(std::size_t n, const char* what) {
    if (remaining() < n) {
      throw_data(std::string("archive truncated: expected ") +
                 std::to_string(n) + " byte(s) for " + what + " at offset " +
                 std::to_string(pos_) + ", " + std::to_string(remaining()) +
                 " left");
    }
  }

  std::uint16_t u16(const char* what) {
    need(2, what);
    std::uint16_t v = static_cast<std::uint16_t>(
        bytes_[pos_] | (static_cast<std::uint16_t>(bytes_[pos_ + 1]) << 8));
    pos_ += 2;
    return v;
  }

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    }
    pos_ += 8;
    return v;
  }

  std::uint8_t u8(const char* what) {
    need(1, what);
    return bytes_[pos_++];
  }

  std::string str(std::size_t n, const char* what) {
    need(n, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  const std::uint8_t* raw(std::size_t n, const char* what) {
    need(n, what);
    const std::uint8_t* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> save_archive(const TensorMap& map) {
  if (map.size() > 0xffffffffULL) {
    throw_data("archive cannot hold more than 2^32-1 tensors");
  }
  std::vector<std::uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u32(out, static_cast<std::uint32_t>(map.size()));
  for (const auto& [name, t] : map.entries()) {
    // Name length and rank bounds are TensorMap insert invariants.
    put_u16(out, static_cast<std::uint16_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    out.push_back(static_cast<std::uint8_t>(t.shape.size()));
    for (std::uint64_t d : t.shape) put_u64(out, d);
    for (float f : t.data) put_u32(out, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

TensorMap load_archive(std::span<const std::uint8_t> bytes,
                       const LoadOptions& options) {
  Reader r(bytes);
  r.need(4, "magic");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw_data("bad archive magic: expected \"TVA1\"");
  }
  (void)r.raw(4, "magic");
  std::uint32_t count = r.u32("tensor count");

  TensorMap map;
  for (std::uint32_t idx = 0; idx < count; ++idx) {
    std::uint16_t name_len = r.u16("name length");
    if (name_len == 0) {
      throw_data("archive tensor " + std::to_string(idx) + ": empty name");
    }
    std::string name = r.str(name_len, "name");
    if (map.find(name) != nullptr) {
      throw_data("archive: duplicate tensor name '" + name + "'");
    }
    std::uint8_t rank = r.u8("rank");
    if (rank > kMaxTensorRank) {
      throw_data("archive tensor '" + name + "': rank " +
                 std::to_string(rank) + " exceeds maximum " +
                 std::to_string(kMaxTensorRank));
    }
    Tensor t;
    t.shape.reserve(rank);
    for (int d = 0; d < rank; ++d) t.shape.push_back(r.u64("dim"));

    std::uint64_t n = 1;
    for (std::uint64_t d : t.shape) {
      std::uint64_t next = 0;
      if (__builtin_mul_overflow(n, d, &next)) {
        throw_data("archive tensor '" + name +
                   "': declared element count overflows uint64");
      }
      n = next;
    }
    // Bound the payload by what is actually present before allocating.
    if (n > r.remaining() / 4) {
      throw_data("archive truncated: tensor '" + name + "' declares " +
                 std::to_string(n) + " element(s) but only " +
                 std::to_string(r.remaining()) + " byte(s) remain");
    }
    const std::uint8_t* p = r.raw(static_cast<std::size_t>(n) * 4, "payload");
    t.data.resize(static_cast<std::size_t>(n));
    for (std::uint64_t i = 0; i < n; ++i) {
      std::uint32_t w = 0;
      for (int b = 0; b < 4; ++b) {
        w |= static_cast<std::uint32_t>(p[i * 4 + b]) << (8 * b);
      }
      float f = std::bit_cast<float>(w);
      if (!options.allow_non_finite && !std::isfinite(f)) {
        throw_data("archive tensor '" + name + "': non-finite value at flat index " +
                   std::to_string(i));
      }
      t.data[static_cast<std::size_t>(i)] = f;
    }
    map.set(std::move(name), std::move(t));
  }
  if (r.remaining() != 0) {
    throw_data("archive has " + std::to_string(r.remaining()) +
               " trailing byte(s) after the last tensor");
  }
  return map;
}

void save_archive_file(const TensorMap& map,
                       const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes = save_archive(map);
  std::ofstream ofs(path, std::ios::binary | std::ios::trunc);
  if (!ofs) throw_data("cannot open '" + path.string() + "' for writing");
  ofs.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!ofs.good()) throw_data("failed writing '" + path.string() + "'");
}

TensorMap load_archive_file(const std::filesystem::path& path,
                            const LoadOptions& options) {
  std::ifstream ifs(path, std::ios::binary);
  if (!ifs) throw_data("cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(ifs)),
                                  std::istreambuf_iterator<char>());
  if (ifs.bad()) throw_data("failed reading '" + path.string() + "'");
  return load_archive(bytes, options);
}

}  // namespace p2r
