#include "esp/pipeline/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "esp/common/error.hpp"

namespace esp::pipeline {

namespace {

constexpr std::array<char, 8> kMagic = {'E', 'S', 'P', 'C', 'K', 'P', 'T', '\0'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <class T>
void put_raw(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

void put_string(std::ostream& out, const std::string& s) {
  put_raw<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <class T>
T get_raw(std::istream& in, const char* what) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T)))
    throw Error(ErrorCode::MalformedRecord, std::string("checkpoint truncated reading ") + what);
  return v;
}

std::string get_string(std::istream& in, const char* what) {
  const auto n = get_raw<std::uint32_t>(in, what);
  std::string s(n, '\0');
  if (n && !in.read(s.data(), n))
    throw Error(ErrorCode::MalformedRecord, std::string("checkpoint truncated reading ") + what);
  return s;
}

}  // namespace

const TensorSection* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t;
  return nullptr;
}

const TensorSection& Checkpoint::require(const std::string& name, std::size_t rows, std::size_t cols) const {
  const TensorSection* t = find(name);
  if (!t) throw Error(ErrorCode::MalformedRecord, "checkpoint lacks tensor " + name);
  if (t->rows != rows || t->cols != cols)
    throw Error(ErrorCode::MalformedRecord, "tensor " + name + " has shape " + std::to_string(t->rows) + "x" +
                                                std::to_string(t->cols) + ", expected " + std::to_string(rows) +
                                                "x" + std::to_string(cols));
  return *t;
}

void Checkpoint::put(const std::string& name, std::size_t rows, std::size_t cols, std::span<const double> values) {
  if (values.size() != rows * cols) throw Error(ErrorCode::DimensionMismatch, "tensor " + name + " size/shape mismatch");
  if (find(name)) throw Error(ErrorCode::InvalidArgument, "duplicate tensor " + name);
  TensorSection t;
  t.name = name;
  t.rows = static_cast<std::uint32_t>(rows);
  t.cols = static_cast<std::uint32_t>(cols);
  t.data.reserve(values.size());
  for (double v : values) t.data.push_back(static_cast<float>(v));
  tensors.push_back(std::move(t));
}

std::vector<double> Checkpoint::values(const std::string& name, std::size_t rows, std::size_t cols) const {
  const auto& t = require(name, rows, cols);
  return std::vector<double>(t.data.begin(), t.data.end());
}

void write_checkpoint(std::ostream& out, const Checkpoint& c) {
  out.write(kMagic.data(), kMagic.size());
  put_raw<std::uint32_t>(out, c.version);
  put_raw<std::uint64_t>(out, c.seed);
  put_string(out, c.config);
  put_string(out, c.meta);
  put_raw<std::uint32_t>(out, static_cast<std::uint32_t>(c.tensors.size()));
  for (const auto& t : c.tensors) {
    put_string(out, t.name);
    put_raw<std::uint32_t>(out, t.rows);
    put_raw<std::uint32_t>(out, t.cols);
    out.write(reinterpret_cast<const char*>(t.data.data()), static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  }
}

Checkpoint read_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic)
    throw Error(ErrorCode::BadMagic, "not an ESP checkpoint");
  Checkpoint c;
  c.version = get_raw<std::uint32_t>(in, "version");
  if (c.version != kCheckpointVersion)
    throw Error(ErrorCode::VersionMismatch, "checkpoint format version " + std::to_string(c.version) +
                                                " but this build reads version " + std::to_string(kCheckpointVersion));
  c.seed = get_raw<std::uint64_t>(in, "seed");
  c.config = get_string(in, "config");
  c.meta = get_string(in, "meta");
  const auto count = get_raw<std::uint32_t>(in, "tensor count");
  for (std::uint32_t i = 0; i < count; ++i) {
    TensorSection t;
    t.name = get_string(in, "tensor name");
    t.rows = get_raw<std::uint32_t>(in, "rows");
    t.cols = get_raw<std::uint32_t>(in, "cols");
    t.data.resize(static_cast<std::size_t>(t.rows) * t.cols);
    if (!t.data.empty() &&
        !in.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(t.data.size() * sizeof(float))))
      throw Error(ErrorCode::MalformedRecord, "checkpoint truncated in tensor " + t.name);
    c.tensors.push_back(std::move(t));
  }
  return c;
}

void save_checkpoint(const std::string& path, const Checkpoint& c) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp);
    write_checkpoint(out, c);
    out.flush();
    if (!out) throw Error(ErrorCode::Io, "write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot move checkpoint into place: " + ec.message());
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  return read_checkpoint(in);
}

}  // namespace esp::pipeline
