#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slim/map.hpp"

namespace slim {

namespace io {

/// Little-endian binary writer with LEB128 varints; accumulates into a
/// buffer so the returned byte count always equals the file size.
class Writer {
 public:
  void u8(uint8_t v) { buf_.push_back(char(v)); }
  void u16(uint16_t v);
  void u32(uint32_t v);
  void f32(float v);
  void f64(double v);
  void varint(uint64_t v);
  void bytes(const void* data, size_t n);
  void pose(const Pose& p);
  void sym_f32(const MatX& m);  // packed upper triangle as f32

  const std::string& buffer() const { return buf_; }
  size_t size() const { return buf_.size(); }
  size_t write_file(const std::string& path) const;

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string data) : buf_(std::move(data)) {}
  static Reader from_file(const std::string& path);

  uint8_t u8();
  uint16_t u16();
  uint32_t u32();
  float f32();
  double f64();
  uint64_t varint();
  Pose pose();
  MatX sym_f32(int dim);
  bool at_end() const { return pos_ == buf_.size(); }

 private:
  void need(size_t n);
  std::string buf_;
  size_t pos_ = 0;
};

}  // namespace io

/// Rounds every information entry to f32 and wraps landmark angles into
/// (-pi, pi]; serialized form is bit-stable afterwards.
void canonicalize_for_storage(Map& map);

/// Full archive: landmarks, keyframes, observations, factors, session table.
/// Returns exact bytes written.
size_t serialize_full(const Map& map, const std::string& path);

/// Localization-only archive: per line 4 f64 + label byte, per plane 3 f64 +
/// label byte, plus the fixed header.
size_t serialize_localization_only(const Map& map, const std::string& path);

/// Reads either archive flavor; localization-only archives yield a map with
/// landmarks only.
Map deserialize_map(const std::string& path);

/// Size in bytes of the header of either archive flavor.
size_t archive_header_size();

/// Id-remapped union of every record kind; the session table is appended.
void merge_into_base(Map& base, const Map& submap);

}  // namespace slim
