#include "sha1.hpp"

#include <fmt/format.h>

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include "swamp/error.hpp"

namespace swamp {

namespace {

class Sha1 {
 public:
  void update(const std::uint8_t* data, std::size_t len) {
    total_bits_ += static_cast<std::uint64_t>(len) * 8;
    while (len > 0) {
      const std::size_t take = std::min<std::size_t>(64 - fill_, len);
      std::memcpy(block_.data() + fill_, data, take);
      fill_ += take;
      data += take;
      len -= take;
      if (fill_ == 64) {
        process();
        fill_ = 0;
      }
    }
  }

  std::string hex_digest() {
    // Padding: 0x80, zeros, 64-bit big-endian length.
    std::uint8_t pad = 0x80;
    const std::uint64_t bits = total_bits_;
    update(&pad, 1);
    const std::uint8_t zero = 0;
    while (fill_ != 56) update(&zero, 1);
    std::array<std::uint8_t, 8> len_be;
    for (int i = 0; i < 8; ++i)
      len_be[i] = static_cast<std::uint8_t>(bits >> (56 - 8 * i));
    update(len_be.data(), 8);

    std::string out;
    for (std::uint32_t word : h_) out += fmt::format("{:08x}", word);
    return out;
  }

 private:
  void process() {
    std::uint32_t w[80];
    for (int t = 0; t < 16; ++t) {
      w[t] = (static_cast<std::uint32_t>(block_[4 * t]) << 24) |
             (static_cast<std::uint32_t>(block_[4 * t + 1]) << 16) |
             (static_cast<std::uint32_t>(block_[4 * t + 2]) << 8) |
             static_cast<std::uint32_t>(block_[4 * t + 3]);
    }
    for (int t = 16; t < 80; ++t)
      w[t] = std::rotl(w[t - 3] ^ w[t - 8] ^ w[t - 14] ^ w[t - 16], 1);

    std::uint32_t a = h_[0], b = h_[1], c = h_[2], d = h_[3], e = h_[4];
    for (int t = 0; t < 80; ++t) {
      std::uint32_t f, k;
      if (t < 20) {
        f = (b & c) | (~b & d);
        k = 0x5a827999u;
      } else if (t < 40) {
        f = b ^ c ^ d;
        k = 0x6ed9eba1u;
      } else if (t < 60) {
        f = (b & c) | (b & d) | (c & d);
        k = 0x8f1bbcdcu;
      } else {
        f = b ^ c ^ d;
        k = 0xca62c1d6u;
      }
      const std::uint32_t tmp = std::rotl(a, 5) + f + e + k + w[t];
      e = d;
      d = c;
      c = std::rotl(b, 30);
      b = a;
      a = tmp;
    }
    h_[0] += a;
    h_[1] += b;
    h_[2] += c;
    h_[3] += d;
    h_[4] += e;
  }

  std::array<std::uint32_t, 5> h_ = {0x67452301u, 0xefcdab89u, 0x98badcfeu,
                                     0x10325476u, 0xc3d2e1f0u};
  std::array<std::uint8_t, 64> block_ = {};
  std::size_t fill_ = 0;
  std::uint64_t total_bits_ = 0;
};

}  // namespace

std::string git_blob_sha1_hex(std::span<const std::uint8_t> content) {
  Sha1 sha;
  const std::string prefix = fmt::format("blob {}", content.size());
  sha.update(reinterpret_cast<const std::uint8_t*>(prefix.data()), prefix.size() + 1);
  if (!content.empty()) sha.update(content.data(), content.size());
  return sha.hex_digest();
}

std::string git_blob_sha1_of_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError(fmt::format("cannot open for hashing: {}", path.string()));
  }
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  return git_blob_sha1_hex(data);
}

}  // namespace swamp
