#pragma once

// Checkpoint container: named parameter blocks serialized as little-endian
// float32 arrays.
//
//   file   := magic[8] "ACRDCKPT" | version u32 | config_hash u64 | step u64 | count u32 | block*
//   block  := name_len u16 | name bytes | spec_hash u64 | length u64 | float32[length]

#include <Eigen/Core>

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "acord/error.hpp"
#include "acord/funcapprox.hpp"

namespace acord {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

struct ParamBlock {
  std::uint64_t spec_hash = 0;
  std::vector<float> values;
};

struct Checkpoint {
  static constexpr char kMagic[8] = {'A', 'C', 'R', 'D', 'C', 'K', 'P', 'T'};
  static constexpr std::uint32_t kVersion = 1;

  std::uint64_t config_hash = 0;
  std::uint64_t step = 0;
  std::map<std::string, ParamBlock> blocks;

  template <typename Scalar>
  void put(const std::string& name, const fa::Vec<Scalar>& values, std::uint64_t spec_hash = 0) {
    ParamBlock block;
    block.spec_hash = spec_hash;
    block.values.resize(static_cast<std::size_t>(values.size()));
    for (Eigen::Index i = 0; i < values.size(); ++i) block.values[static_cast<std::size_t>(i)] = static_cast<float>(values[i]);
    blocks[name] = std::move(block);
  }

  template <typename Scalar>
  void put(const std::string& name, const fa::Mlp<Scalar>& net) {
    put(name, net.params(), net.spec().hash());
  }

  void put_scalar(const std::string& name, double value) {
    blocks[name] = ParamBlock{0, {static_cast<float>(value)}};
  }

  bool has(const std::string& name) const { return blocks.count(name) != 0; }

  const ParamBlock& block(const std::string& name) const {
    auto it = blocks.find(name);
    if (it == blocks.end()) throw ConfigError("checkpoint has no block '" + name + "'");
    return it->second;
  }

  template <typename Scalar>
  fa::Vec<Scalar> get(const std::string& name) const {
    const auto& b = block(name);
    fa::Vec<Scalar> out(static_cast<Eigen::Index>(b.values.size()));
    for (std::size_t i = 0; i < b.values.size(); ++i) out[static_cast<Eigen::Index>(i)] = static_cast<Scalar>(b.values[i]);
    return out;
  }

  double get_scalar(const std::string& name) const {
    const auto& b = block(name);
    if (b.values.size() != 1) throw ConfigError("checkpoint block '" + name + "' is not a scalar");
    return b.values[0];
  }

  /// Loads a network's parameters, refusing blocks written for a different architecture.
  template <typename Scalar>
  void load_into(const std::string& name, fa::Mlp<Scalar>& net) const {
    const auto& b = block(name);
    if (b.spec_hash != net.spec().hash()) {
      throw ConfigError("checkpoint block '" + name + "' was written for a different network shape");
    }
    if (b.values.size() != net.spec().param_count()) {
      throw ConfigError("checkpoint block '" + name + "' has the wrong length");
    }
    net.params() = get<Scalar>(name);
  }

  void save(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const auto tmp = path.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw std::runtime_error("cannot write checkpoint " + tmp);
      out.write(kMagic, sizeof kMagic);
      write_pod(out, kVersion);
      write_pod(out, config_hash);
      write_pod(out, step);
      write_pod(out, static_cast<std::uint32_t>(blocks.size()));
      for (const auto& [name, b] : blocks) {
        write_pod(out, static_cast<std::uint16_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_pod(out, b.spec_hash);
        write_pod(out, static_cast<std::uint64_t>(b.values.size()));
        out.write(reinterpret_cast<const char*>(b.values.data()),
                  static_cast<std::streamsize>(b.values.size() * sizeof(float)));
      }
      if (!out) throw std::runtime_error("short write on checkpoint " + tmp);
    }
    std::filesystem::rename(tmp, path);
  }

  static Checkpoint load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open checkpoint " + path.string());
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) throw ConfigError(path.string() + " is not a checkpoint");
    Checkpoint ck;
    const auto version = read_pod<std::uint32_t>(in);
    if (version != kVersion) throw ConfigError("unsupported checkpoint version " + std::to_string(version));
    ck.config_hash = read_pod<std::uint64_t>(in);
    ck.step = read_pod<std::uint64_t>(in);
    const auto count = read_pod<std::uint32_t>(in);
    for (std::uint32_t i = 0; i < count; ++i) {
      const auto len = read_pod<std::uint16_t>(in);
      std::string name(len, '\0');
      in.read(name.data(), len);
      ParamBlock b;
      b.spec_hash = read_pod<std::uint64_t>(in);
      const auto n = read_pod<std::uint64_t>(in);
      b.values.resize(n);
      in.read(reinterpret_cast<char*>(b.values.data()), static_cast<std::streamsize>(n * sizeof(float)));
      if (!in) throw ConfigError("truncated checkpoint " + path.string());
      ck.blocks.emplace(std::move(name), std::move(b));
    }
    return ck;
  }

 private:
  template <typename T>
  static void write_pod(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof value);
  }

  template <typename T>
  static T read_pod(std::istream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof value);
    if (!in) throw ConfigError("truncated checkpoint header");
    return value;
  }
};

}  // namespace acord
