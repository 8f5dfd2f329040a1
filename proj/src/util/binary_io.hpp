#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sdyn/error.hpp"

namespace sdyn::detail {

static_assert(std::endian::native == std::endian::little,
              "binary formats are little-endian; add byte swapping for this host");

class BinaryWriter {
 public:
  void magic(std::string_view tag) { bytes(tag.data(), tag.size()); }

  template <typename T>
  void pod(const T& value) {
    bytes(reinterpret_cast<const char*>(&value), sizeof(T));
  }

  template <typename T>
  void array(std::span<const T> values) {
    bytes(reinterpret_cast<const char*>(values.data()), values.size_bytes());
  }

  void bytes(const char* data, std::size_t count) { buffer_.append(data, count); }

  const std::string& buffer() const { return buffer_; }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::Io, "cannot open " + path.string() + " for writing");
    out.write(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
    if (!out) throw Error(Errc::Io, "write failed: " + path.string());
  }

 private:
  std::string buffer_;
};

// Reads from an in-memory copy of the file; every read is bounds-checked and
// raises `truncated_code` on a short buffer.
class BinaryReader {
 public:
  BinaryReader(const std::filesystem::path& path, Errc truncated_code)
      : code_(truncated_code), name_(path.string()) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot open " + name_);
    buffer_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }

  bool magic(std::string_view tag) {
    if (remaining() < tag.size()) return false;
    bool ok = std::memcmp(buffer_.data() + pos_, tag.data(), tag.size()) == 0;
    pos_ += tag.size();
    return ok;
  }

  template <typename T>
  T pod() {
    T value;
    take(reinterpret_cast<char*>(&value), sizeof(T));
    return value;
  }

  template <typename T>
  std::vector<T> array(std::size_t count) {
    if (count > remaining() / sizeof(T)) throw truncated();
    std::vector<T> values(count);
    take(reinterpret_cast<char*>(values.data()), count * sizeof(T));
    return values;
  }

  std::string string(std::size_t count) {
    if (count > remaining()) throw truncated();
    std::string s(buffer_.data() + pos_, count);
    pos_ += count;
    return s;
  }

  std::size_t remaining() const { return buffer_.size() - pos_; }
  std::size_t position() const { return pos_; }
  const char* data() const { return buffer_.data(); }
  const std::string& name() const { return name_; }

 private:
  void take(char* dst, std::size_t count) {
    if (count > remaining()) throw truncated();
    std::memcpy(dst, buffer_.data() + pos_, count);
    pos_ += count;
  }

  Error truncated() const { return Error(code_, "truncated file " + name_); }

  Errc code_;
  std::string name_;
  std::string buffer_;
  std::size_t pos_ = 0;
};

}  // namespace sdyn::detail
