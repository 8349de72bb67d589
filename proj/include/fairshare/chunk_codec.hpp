// Copyright 2026 The fairshare Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Systematic k-of-n Reed-Solomon erasure coding over GF(2^8).
//
// The file is zero-padded to a multiple of k and cut into k data shards of
// ceil(|F|/k) bytes; shards 0..k-1 are those data shards verbatim and shards
// k..n-1 are parity. Any k distinct shards reconstruct the file.

#include <fairshare/common.hpp>

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

namespace fairshare::codec {

inline constexpr std::uint8_t kChunkFormatVersion = 0x01;
/// version byte + index byte + 8-byte big-endian original length.
inline constexpr std::size_t kChunkHeaderSize = 10;
inline constexpr std::uint32_t kMaxShards = 255;

struct CodingParams {
  std::uint32_t k = 0;
  std::uint32_t n = 0;

  bool valid() const { return k >= 1 && k <= n && n <= kMaxShards; }
  friend bool operator==(const CodingParams&, const CodingParams&) = default;
};

struct PlainChunk {
  std::uint8_t index = 0;
  Bytes payload;
  std::uint64_t original_len = 0;

  friend bool operator==(const PlainChunk&, const PlainChunk&) = default;
};

inline std::size_t shard_size(std::uint64_t original_len, std::uint32_t k) {
  return static_cast<std::size_t>((original_len + k - 1) / k);
}

namespace gf256 {

// Primitive polynomial x^8 + x^4 + x^3 + x^2 + 1, generator 2.
inline constexpr unsigned kPolynomial = 0x11d;

struct Tables {
  std::array<std::uint8_t, 512> exp{};
  std::array<std::uint8_t, 256> log{};
  std::array<std::array<std::uint8_t, 256>, 256> mul{};

  Tables() {
    unsigned x = 1;
    for (unsigned i = 0; i < 255; ++i) {
      exp[i] = static_cast<std::uint8_t>(x);
      log[x] = static_cast<std::uint8_t>(i);
      x <<= 1;
      if (x & 0x100) x ^= kPolynomial;
    }
    for (unsigned i = 255; i < exp.size(); ++i) exp[i] = exp[i - 255];
    for (unsigned a = 0; a < 256; ++a) {
      for (unsigned b = 0; b < 256; ++b) {
        mul[a][b] = (a == 0 || b == 0)
                        ? 0
                        : exp[static_cast<unsigned>(log[a]) + log[b]];
      }
    }
  }
};

inline const Tables& tables() {
  static const Tables t;
  return t;
}

inline std::uint8_t mul(std::uint8_t a, std::uint8_t b) {
  return tables().mul[a][b];
}

inline std::uint8_t inv(std::uint8_t a) {
  if (a == 0) throw std::domain_error("gf256: inverse of zero");
  return tables().exp[255 - tables().log[a]];
}

inline std::uint8_t pow(std::uint8_t a, unsigned e) {
  if (e == 0) return 1;
  if (a == 0) return 0;
  return tables().exp[(static_cast<unsigned>(tables().log[a]) * e) % 255];
}

/// out ^= coeff * in, bytewise.
inline void mul_add(std::uint8_t coeff, ByteView in, std::span<std::uint8_t> out) {
  if (coeff == 0) return;
  const auto& row = tables().mul[coeff];
  for (std::size_t i = 0; i < in.size(); ++i) out[i] ^= row[in[i]];
}

/// Row-major square or rectangular matrix over GF(2^8).
class Matrix {
 public:
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  static Matrix identity(std::size_t size) {
    Matrix m(size, size);
    for (std::size_t i = 0; i < size; ++i) m(i, i) = 1;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::uint8_t& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  std::uint8_t operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  Matrix operator*(const Matrix& rhs) const {
    Matrix out(rows_, rhs.cols_);
    for (std::size_t r = 0; r < rows_; ++r) {
      for (std::size_t c = 0; c < rhs.cols_; ++c) {
        std::uint8_t acc = 0;
        for (std::size_t i = 0; i < cols_; ++i) acc ^= mul((*this)(r, i), rhs(i, c));
        out(r, c) = acc;
      }
    }
    return out;
  }

  Matrix select_rows(std::span<const std::size_t> which) const {
    Matrix out(which.size(), cols_);
    for (std::size_t r = 0; r < which.size(); ++r) {
      for (std::size_t c = 0; c < cols_; ++c) out(r, c) = (*this)(which[r], c);
    }
    return out;
  }

  /// Gauss-Jordan inverse; nullopt when singular.
  std::optional<Matrix> inverse() const {
    if (rows_ != cols_) return std::nullopt;
    const std::size_t size = rows_;
    Matrix work = *this;
    Matrix out = identity(size);
    for (std::size_t col = 0; col < size; ++col) {
      std::size_t pivot = col;
      while (pivot < size && work(pivot, col) == 0) ++pivot;
      if (pivot == size) return std::nullopt;
      if (pivot != col) {
        for (std::size_t c = 0; c < size; ++c) {
          std::swap(work(col, c), work(pivot, c));
          std::swap(out(col, c), out(pivot, c));
        }
      }
      const std::uint8_t scale = inv(work(col, col));
      for (std::size_t c = 0; c < size; ++c) {
        work(col, c) = mul(work(col, c), scale);
        out(col, c) = mul(out(col, c), scale);
      }
      for (std::size_t r = 0; r < size; ++r) {
        if (r == col || work(r, col) == 0) continue;
        const std::uint8_t factor = work(r, col);
        for (std::size_t c = 0; c < size; ++c) {
          work(r, c) ^= mul(factor, work(col, c));
          out(r, c) ^= mul(factor, out(col, c));
        }
      }
    }
    return out;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<std::uint8_t> data_;
};

}  // namespace gf256

/// n x k systematic generator: a Vandermonde matrix over the points 0..n-1
/// multiplied by the inverse of its top k x k block, so the top block is the
/// identity and every k-row subset stays invertible.
inline gf256::Matrix encoding_matrix(CodingParams params) {
  gf256::Matrix vandermonde(params.n, params.k);
  for (std::size_t r = 0; r < params.n; ++r) {
    for (std::size_t c = 0; c < params.k; ++c) {
      vandermonde(r, c) = gf256::pow(static_cast<std::uint8_t>(r), static_cast<unsigned>(c));
    }
  }
  gf256::Matrix top(params.k, params.k);
  for (std::size_t r = 0; r < params.k; ++r) {
    for (std::size_t c = 0; c < params.k; ++c) top(r, c) = vandermonde(r, c);
  }
  return vandermonde * *top.inverse();
}

inline Result<std::vector<PlainChunk>> erasure_code(ByteView file, CodingParams params) {
  if (!params.valid()) return Errc::invalid_params;
  if (file.empty()) return Errc::empty_file;

  const std::size_t size = shard_size(file.size(), params.k);
  std::vector<PlainChunk> chunks(params.n);
  for (std::uint32_t i = 0; i < params.n; ++i) {
    chunks[i].index = static_cast<std::uint8_t>(i);
    chunks[i].original_len = file.size();
    chunks[i].payload.assign(size, 0);
  }
  for (std::uint32_t i = 0; i < params.k; ++i) {
    const std::size_t begin = std::min(file.size(), i * size);
    const std::size_t end = std::min(file.size(), begin + size);
    std::copy(file.begin() + begin, file.begin() + end, chunks[i].payload.begin());
  }
  if (params.n > params.k) {
    const gf256::Matrix generator = encoding_matrix(params);
    for (std::uint32_t r = params.k; r < params.n; ++r) {
      for (std::uint32_t c = 0; c < params.k; ++c) {
        gf256::mul_add(generator(r, c), chunks[c].payload, chunks[r].payload);
      }
    }
  }
  return chunks;
}

/// Reconstructs the original bytes from any k or more distinct chunks.
/// Chunks beyond the first k are re-derived from the decoded data and must
/// match, so a corrupt surplus shard yields DecodeFailure instead of output.
inline Result<Bytes> recover(std::span<const PlainChunk> chunks, CodingParams params) {
  if (!params.valid()) return Errc::invalid_params;
  if (chunks.empty()) return Errc::insufficient_chunks;

  const std::uint64_t original_len = chunks.front().original_len;
  if (original_len == 0) return Errc::inconsistent_chunks;
  const std::size_t size = shard_size(original_len, params.k);

  std::map<std::uint8_t, const PlainChunk*> by_index;
  for (const PlainChunk& chunk : chunks) {
    if (chunk.original_len != original_len || chunk.payload.size() != size ||
        chunk.index >= params.n) {
      return Errc::inconsistent_chunks;
    }
    auto [it, inserted] = by_index.emplace(chunk.index, &chunk);
    if (!inserted && it->second->payload != chunk.payload) {
      return Errc::inconsistent_chunks;
    }
  }
  if (by_index.size() < params.k) return Errc::insufficient_chunks;

  std::vector<std::size_t> chosen;
  std::vector<const PlainChunk*> surplus;
  for (const auto& [index, chunk] : by_index) {
    if (chosen.size() < params.k) {
      chosen.push_back(index);
    } else {
      surplus.push_back(chunk);
    }
  }

  std::vector<Bytes> data(params.k, Bytes(size, 0));
  const bool systematic = chosen.back() == params.k - 1;
  if (systematic) {
    for (std::size_t i = 0; i < params.k; ++i) data[i] = by_index.at(static_cast<std::uint8_t>(i))->payload;
  }
  std::optional<gf256::Matrix> generator;
  if (!systematic || !surplus.empty()) generator = encoding_matrix(params);
  if (!systematic) {
    auto decode = generator->select_rows(chosen).inverse();
    if (!decode) return Errc::decode_failure;
    for (std::size_t out = 0; out < params.k; ++out) {
      for (std::size_t in = 0; in < params.k; ++in) {
        gf256::mul_add((*decode)(out, in), by_index.at(static_cast<std::uint8_t>(chosen[in]))->payload,
                       data[out]);
      }
    }
  }

  for (const PlainChunk* extra : surplus) {
    Bytes expected(size, 0);
    for (std::size_t c = 0; c < params.k; ++c) {
      gf256::mul_add((*generator)(extra->index, c), data[c], expected);
    }
    if (expected != extra->payload) return Errc::decode_failure;
  }

  Bytes file;
  file.reserve(size * params.k);
  for (const Bytes& shard : data) file.insert(file.end(), shard.begin(), shard.end());
  if (std::any_of(file.begin() + static_cast<std::ptrdiff_t>(original_len), file.end(),
                  [](std::uint8_t b) { return b != 0; })) {
    return Errc::decode_failure;
  }
  file.resize(original_len);
  return file;
}

/// Wire form: version (0x01), index, original_len as 8 bytes big-endian,
/// payload.
inline Bytes serialize(const PlainChunk& chunk) {
  Bytes out;
  out.reserve(kChunkHeaderSize + chunk.payload.size());
  out.push_back(kChunkFormatVersion);
  out.push_back(chunk.index);
  for (int shift = 56; shift >= 0; shift -= 8) {
    out.push_back(static_cast<std::uint8_t>(chunk.original_len >> shift));
  }
  out.insert(out.end(), chunk.payload.begin(), chunk.payload.end());
  return out;
}

inline Result<PlainChunk> deserialize(ByteView bytes) {
  if (bytes.size() < kChunkHeaderSize || bytes[0] != kChunkFormatVersion) {
    return Errc::malformed_chunk;
  }
  PlainChunk chunk;
  chunk.index = bytes[1];
  for (std::size_t i = 2; i < kChunkHeaderSize; ++i) {
    chunk.original_len = (chunk.original_len << 8) | bytes[i];
  }
  chunk.payload.assign(bytes.begin() + kChunkHeaderSize, bytes.end());
  return chunk;
}

}  // namespace fairshare::codec
