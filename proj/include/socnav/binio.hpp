#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace socnav {

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts unsupported");

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void write_u32(std::ostream& os, uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), 4);
}

inline void write_u64(std::ostream& os, uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), 8);
}

inline void write_f32(std::ostream& os, const float* data, size_t count) {
  os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * 4));
}

inline void write_bytes(std::ostream& os, const std::string& s) {
  write_u32(os, static_cast<uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline uint32_t read_u32(std::istream& is, const char* what) {
  uint32_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), 4)) {
    throw FormatError(std::string("truncated input while reading ") + what);
  }
  return v;
}

inline uint64_t read_u64(std::istream& is, const char* what) {
  uint64_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), 8)) {
    throw FormatError(std::string("truncated input while reading ") + what);
  }
  return v;
}

inline void read_f32(std::istream& is, float* data, size_t count, const char* what) {
  if (!is.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * 4))) {
    throw FormatError(std::string("truncated input while reading ") + what);
  }
}

inline std::string read_bytes(std::istream& is, const char* what) {
  const uint32_t len = read_u32(is, what);
  std::string s(len, '\0');
  if (len > 0 && !is.read(s.data(), len)) {
    throw FormatError(std::string("truncated input while reading ") + what);
  }
  return s;
}

inline uint64_t fnv1a64(const void* data, size_t size, uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline uint64_t fnv1a64_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open file for hashing: " + path.string());
  uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (is.read(buf, sizeof(buf)) || is.gcount() > 0) {
    h = fnv1a64(buf, static_cast<size_t>(is.gcount()), h);
  }
  return h;
}

inline std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Write-temp-then-rename so partially written outputs never take the final name.
inline void atomic_write_file(const std::filesystem::path& path,
                              const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw FormatError("cannot open for writing: " + tmp.string());
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!os) throw FormatError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open file: " + path.string());
  std::string s((std::istreambuf_iterator<char>(is)),
                std::istreambuf_iterator<char>());
  return s;
}

}  // namespace socnav
