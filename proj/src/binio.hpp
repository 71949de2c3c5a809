#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "pdeop/pipeline.hpp"

namespace pdeop::detail {

class BinWriter {
 public:
  explicit BinWriter(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot open for writing: " + path);
  }
  void bytes(const void* p, size_t n) { out_.write(static_cast<const char*>(p), n); }
  template <typename T>
  void pod(T v) {
    bytes(&v, sizeof(T));
  }
  void f64s(const double* p, size_t n) { bytes(p, n * sizeof(double)); }
  void check(const std::string& path) {
    if (!out_) throw IoError("write failed: " + path);
  }

 private:
  std::ofstream out_;
};

class BinReader {
 public:
  explicit BinReader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw IoError("cannot open for reading: " + path);
  }
  void bytes(void* p, size_t n) {
    in_.read(static_cast<char*>(p), n);
    if (static_cast<size_t>(in_.gcount()) != n)
      throw ParseError(path_ + ": truncated at byte offset " + std::to_string(offset_));
    offset_ += n;
  }
  template <typename T>
  T pod() {
    T v;
    bytes(&v, sizeof(T));
    return v;
  }
  void f64s(double* p, size_t n) { bytes(p, n * sizeof(double)); }
  size_t offset() const { return offset_; }
  void expect_magic(const char magic[8]) {
    char got[8];
    bytes(got, 8);
    if (std::memcmp(got, magic, 8) != 0)
      throw ParseError(path_ + ": bad magic bytes at offset 0");
  }

 private:
  std::ifstream in_;
  std::string path_;
  size_t offset_ = 0;
};

}  // namespace pdeop::detail
