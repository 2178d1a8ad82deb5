#include "votenet/cli/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace votenet::cli {

namespace {

constexpr char kMagic[8] = {'V', 'N', 'E', 'T', 'C', 'K', 'P', 'T'};

template <typename T>
void put(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

void put_string(std::ofstream& out, const std::string& s) {
  put<std::uint64_t>(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
T take(std::ifstream& in, const std::string& what) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw CheckpointError("checkpoint truncated while reading " + what);
  }
  return value;
}

std::string take_string(std::ifstream& in, const std::string& what) {
  const auto n = take<std::uint64_t>(in, what);
  if (n > (1u << 24)) throw CheckpointError("checkpoint string too long in " + what);
  std::string s(n, '\0');
  if (n > 0 && !in.read(s.data(), static_cast<std::streamsize>(n))) {
    throw CheckpointError("checkpoint truncated while reading " + what);
  }
  return s;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const std::string& config_text,
                     const net::ParameterSet& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put_string(out, config_text);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, tensor] : params.entries()) {
    put_string(out, name);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(tensor.rank()));
    for (std::size_t d : tensor.shape()) put<std::uint64_t>(out, d);
    const auto data = tensor.data();
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(double)));
  }
  if (!out) throw CheckpointError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read checkpoint " + path.string());
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError(path.string() + " is not a checkpoint");
  }
  const auto version = take<std::uint32_t>(in, "version");
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ck;
  ck.config_text = take_string(in, "config");
  const auto count = take<std::uint32_t>(in, "tensor count");
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = take_string(in, "tensor name");
    const auto rank = take<std::uint32_t>(in, name);
    if (rank > 8) throw CheckpointError("implausible rank for " + name);
    ad::Shape shape(rank);
    for (auto& d : shape) d = take<std::uint64_t>(in, name);
    std::vector<double> values(ad::element_count(shape));
    if (!in.read(reinterpret_cast<char*>(values.data()),
                 static_cast<std::streamsize>(values.size() * sizeof(double)))) {
      throw CheckpointError("checkpoint truncated in tensor " + name);
    }
    ck.params.add(std::move(name), ad::Tensor(shape, std::move(values), true));
  }
  return ck;
}

void check_compatible(const net::ParameterSet& params, const net::NetworkConfig& config) {
  const auto layout = net::parameter_layout(config);
  std::string problems;
  const auto& entries = params.entries();
  for (std::size_t i = 0; i < std::max(layout.size(), entries.size()); ++i) {
    if (i >= entries.size()) {
      problems += "\n  missing " + layout[i].first + " " + ad::shape_string(layout[i].second);
    } else if (i >= layout.size()) {
      problems += "\n  unexpected " + entries[i].first;
    } else if (entries[i].first != layout[i].first) {
      problems += "\n  tensor " + std::to_string(i) + ": checkpoint has " + entries[i].first +
                  ", configuration expects " + layout[i].first;
    } else if (entries[i].second.shape() != layout[i].second) {
      problems += "\n  " + layout[i].first + ": checkpoint " +
                  ad::shape_string(entries[i].second.shape()) + " vs configuration " +
                  ad::shape_string(layout[i].second);
    }
  }
  if (!problems.empty()) {
    throw CheckpointError("checkpoint does not match the network configuration:" + problems);
  }
}

}  // namespace votenet::cli
