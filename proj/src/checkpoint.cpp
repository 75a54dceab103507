/*
 * Copyright 2026 The FairRank Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "fairrank/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace fairrank {

namespace {

constexpr char kMagic[6] = {'F', 'R', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint64_t kMaxDim = std::uint64_t{1} << 32;

class Writer {
 public:
  explicit Writer(std::ofstream& out) : out_(out) {}
  template <typename T>
  void pod(const T& v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void str(const std::string& s) {
    pod<std::uint64_t>(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void doubles(const double* p, std::size_t n) {
    out_.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
  }

 private:
  std::ofstream& out_;
};

class Reader {
 public:
  Reader(std::ifstream& in, std::string path) : in_(in), path_(std::move(path)) {}
  template <typename T>
  T pod() {
    T v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    check();
    return v;
  }
  std::uint64_t dim() {
    const auto v = pod<std::uint64_t>();
    if (v > kMaxDim) fail("implausible dimension");
    return v;
  }
  std::string str() {
    const auto n = pod<std::uint64_t>();
    if (n > (1u << 20)) fail("implausible string length");
    std::string s(n, '\0');
    in_.read(s.data(), static_cast<std::streamsize>(n));
    check();
    return s;
  }
  void doubles(double* p, std::size_t n) {
    in_.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
    check();
  }
  [[noreturn]] void fail(const std::string& what) {
    throw Error("checkpoint " + path_ + ": " + what);
  }

 private:
  void check() {
    if (!in_) fail("truncated file");
  }
  std::ifstream& in_;
  std::string path_;
};

void write_matrix(Writer& w, const RowMatrix& m) {
  w.pod<std::uint64_t>(static_cast<std::uint64_t>(m.rows()));
  w.pod<std::uint64_t>(static_cast<std::uint64_t>(m.cols()));
  w.doubles(m.data(), static_cast<std::size_t>(m.size()));
}

RowMatrix read_matrix(Reader& r) {
  const auto rows = r.dim();
  const auto cols = r.dim();
  RowMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  r.doubles(m.data(), static_cast<std::size_t>(m.size()));
  return m;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  Writer w(out);
  out.write(kMagic, sizeof(kMagic));
  w.pod(kVersion);
  w.str(ckpt.model);
  w.str(ckpt.config_hash);
  w.pod<std::uint64_t>(ckpt.params.frozen_item_dims);
  write_matrix(w, ckpt.params.user_factors);
  write_matrix(w, ckpt.params.item_factors);
  w.pod<std::uint8_t>(ckpt.adversary ? 1 : 0);
  if (ckpt.adversary) {
    w.pod<std::uint64_t>(ckpt.adversary->layers.size());
    for (const auto& l : ckpt.adversary->layers) {
      write_matrix(w, l.weight);
      w.pod<std::uint64_t>(static_cast<std::uint64_t>(l.bias.size()));
      w.doubles(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
    }
  }
  if (!out) throw Error("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  Reader r(in, path.string());
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) r.fail("not a checkpoint file");
  const auto version = r.pod<std::uint32_t>();
  if (version != kVersion) r.fail("unsupported version " + std::to_string(version));
  Checkpoint c;
  c.model = r.str();
  c.config_hash = r.str();
  c.params.frozen_item_dims = r.dim();
  c.params.user_factors = read_matrix(r);
  c.params.item_factors = read_matrix(r);
  if (c.params.user_factors.cols() != c.params.item_factors.cols() ||
      c.params.frozen_item_dims > static_cast<std::size_t>(c.params.item_factors.cols())) {
    r.fail("inconsistent factor shapes");
  }
  if (r.pod<std::uint8_t>() != 0) {
    AdversaryParams psi;
    const auto layers = r.dim();
    for (std::uint64_t k = 0; k < layers; ++k) {
      DenseLayer l;
      l.weight = read_matrix(r);
      const auto n = r.dim();
      if (n != static_cast<std::uint64_t>(l.weight.rows())) r.fail("adversary bias size mismatch");
      l.bias.resize(static_cast<Eigen::Index>(n));
      r.doubles(l.bias.data(), n);
      psi.layers.push_back(std::move(l));
    }
    if (psi.layers.empty()) r.fail("adversary without layers");
    c.adversary = std::move(psi);
  }
  return c;
}

}  // namespace fairrank
