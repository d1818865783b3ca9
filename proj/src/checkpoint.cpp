// Copyright 2026 The SVL Authors
// SPDX-License-Identifier: Apache-2.0

#include "svl/checkpoint.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "svl/error.hpp"

namespace svl {
namespace {

constexpr char kMagic[8] = {'S', 'V', 'L', 'C', 'K', 'P', 'T', '\0'};

template <class T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T get(std::istream& in, const std::filesystem::path& path) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw IoError("truncated checkpoint: " + path.string());
  return value;
}

std::string get_string(std::istream& in, std::uint64_t length, const std::filesystem::path& path) {
  std::string s(length, '\0');
  in.read(s.data(), static_cast<std::streamsize>(length));
  if (!in) throw IoError("truncated checkpoint: " + path.string());
  return s;
}

void append_views(std::vector<NamedTensor>& out, ModelParams& params, const std::string& prefix) {
  for (const auto& view : param_views(params)) {
    out.push_back({prefix + view.name, view.shape, {view.data.begin(), view.data.end()}});
  }
}

void fill_views(const std::map<std::string, const NamedTensor*>& by_name, ModelParams& params,
                const std::string& prefix) {
  for (auto& view : param_views(params)) {
    const auto it = by_name.find(prefix + view.name);
    if (it == by_name.end()) throw VersionError("checkpoint lacks tensor '" + prefix + view.name + "'");
    const NamedTensor& t = *it->second;
    if (t.shape != view.shape || t.data.size() != view.data.size()) {
      throw VersionError("tensor '" + t.name + "' has a shape incompatible with the configured model");
    }
    std::copy(t.data.begin(), t.data.end(), view.data.begin());
  }
}

}  // namespace

Checkpoint make_checkpoint(TrainState& state, const std::string& config_text) {
  Checkpoint ckpt;
  ckpt.config_text = config_text;
  ckpt.iteration = state.iteration;
  append_views(ckpt.tensors, state.params, "");
  append_views(ckpt.tensors, state.momentum, "momentum/");
  return ckpt;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, ckpt.format_version);
  put<std::uint64_t>(out, ckpt.config_text.size());
  out.write(ckpt.config_text.data(), static_cast<std::streamsize>(ckpt.config_text.size()));
  put<std::int64_t>(out, ckpt.iteration);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& t : ckpt.tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put<std::uint8_t>(out, 0);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) put<std::uint64_t>(out, static_cast<std::uint64_t>(d));
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(double)));
  }
  if (!out) throw IoError("short write to " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || !std::equal(magic, magic + 8, kMagic)) throw VersionError("not a checkpoint file: " + path.string());

  Checkpoint ckpt;
  ckpt.format_version = get<std::uint32_t>(in, path);
  if (ckpt.format_version != kCheckpointVersion) {
    throw VersionError("checkpoint format version " + std::to_string(ckpt.format_version) +
                       " is not supported (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  ckpt.config_text = get_string(in, get<std::uint64_t>(in, path), path);
  ckpt.iteration = get<std::int64_t>(in, path);
  const auto count = get<std::uint32_t>(in, path);
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name = get_string(in, get<std::uint32_t>(in, path), path);
    const auto dtype = get<std::uint8_t>(in, path);
    const auto rank = get<std::uint32_t>(in, path);
    std::size_t numel = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      t.shape.push_back(static_cast<std::int64_t>(get<std::uint64_t>(in, path)));
      numel *= static_cast<std::size_t>(t.shape.back());
    }
    t.data.resize(numel);
    if (dtype == 0) {
      in.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(numel * sizeof(double)));
    } else if (dtype == 1) {
      std::vector<float> f(numel);
      in.read(reinterpret_cast<char*>(f.data()), static_cast<std::streamsize>(numel * sizeof(float)));
      std::copy(f.begin(), f.end(), t.data.begin());
    } else {
      throw VersionError("unknown tensor dtype " + std::to_string(dtype) + " in " + path.string());
    }
    if (!in) throw IoError("truncated checkpoint: " + path.string());
    ckpt.tensors.push_back(std::move(t));
  }
  return ckpt;
}

void restore_state(const Checkpoint& ckpt, TrainState& state) {
  if (ckpt.format_version != kCheckpointVersion) {
    throw VersionError("unsupported checkpoint format version " + std::to_string(ckpt.format_version));
  }
  std::map<std::string, const NamedTensor*> by_name;
  for (const auto& t : ckpt.tensors) by_name[t.name] = &t;
  fill_views(by_name, state.params, "");
  fill_views(by_name, state.momentum, "momentum/");
  state.iteration = ckpt.iteration;
}

}  // namespace svl
