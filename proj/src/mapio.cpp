#include "slim/mapio.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include "slim/error.hpp"

namespace slim {

namespace io {

void Writer::u16(uint16_t v) { bytes(&v, 2); }
void Writer::u32(uint32_t v) { bytes(&v, 4); }
void Writer::f32(float v) { bytes(&v, 4); }
void Writer::f64(double v) { bytes(&v, 8); }

void Writer::varint(uint64_t v) {
  while (v >= 0x80) {
    u8(uint8_t(v) | 0x80);
    v >>= 7;
  }
  u8(uint8_t(v));
}

void Writer::bytes(const void* data, size_t n) {
  buf_.append(reinterpret_cast<const char*>(data), n);
}

void Writer::pose(const Pose& p) {
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < 3; ++r) f64(p.rotation(r, c));
  for (int i = 0; i < 3; ++i) f64(p.translation[i]);
}

void Writer::sym_f32(const MatX& m) {
  for (int r = 0; r < m.rows(); ++r)
    for (int c = r; c < m.cols(); ++c) f32(float(m(r, c)));
}

size_t Writer::write_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorCode::IoFailure, "cannot open for writing: " + path);
  out.write(buf_.data(), std::streamsize(buf_.size()));
  if (!out) raise(ErrorCode::IoFailure, "write failed: " + path);
  return buf_.size();
}

Reader Reader::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::IoFailure, "cannot open for reading: " + path);
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return Reader(std::move(data));
}

void Reader::need(size_t n) {
  if (pos_ + n > buf_.size()) raise(ErrorCode::IoFailure, "truncated archive");
}

uint8_t Reader::u8() {
  need(1);
  return uint8_t(buf_[pos_++]);
}
uint16_t Reader::u16() {
  need(2);
  uint16_t v;
  std::memcpy(&v, buf_.data() + pos_, 2);
  pos_ += 2;
  return v;
}
uint32_t Reader::u32() {
  need(4);
  uint32_t v;
  std::memcpy(&v, buf_.data() + pos_, 4);
  pos_ += 4;
  return v;
}
float Reader::f32() {
  need(4);
  float v;
  std::memcpy(&v, buf_.data() + pos_, 4);
  pos_ += 4;
  return v;
}
double Reader::f64() {
  need(8);
  double v;
  std::memcpy(&v, buf_.data() + pos_, 8);
  pos_ += 8;
  return v;
}

uint64_t Reader::varint() {
  uint64_t v = 0;
  int shift = 0;
  while (true) {
    const uint8_t b = u8();
    v |= uint64_t(b & 0x7f) << shift;
    if (!(b & 0x80)) break;
    shift += 7;
    if (shift > 63) raise(ErrorCode::IoFailure, "varint overflow");
  }
  return v;
}

Pose Reader::pose() {
  Pose p;
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < 3; ++r) p.rotation(r, c) = f64();
  for (int i = 0; i < 3; ++i) p.translation[i] = f64();
  return p;
}

MatX Reader::sym_f32(int dim) {
  MatX m(dim, dim);
  for (int r = 0; r < dim; ++r) {
    for (int c = r; c < dim; ++c) {
      m(r, c) = double(f32());
      m(c, r) = m(r, c);
    }
  }
  return m;
}

}  // namespace io

namespace {

constexpr char kMagic[4] = {'S', 'L', 'I', 'M'};
constexpr uint16_t kVersion = 1;
constexpr uint8_t kFormatFull = 0;
constexpr uint8_t kFormatLocalization = 1;

double round_f32(double v) { return double(float(v)); }

MatX round_sym_f32(const MatX& m) {
  MatX out = m;
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = r; c < m.cols(); ++c) {
      out(r, c) = round_f32(m(r, c));
      out(c, r) = out(r, c);
    }
  }
  return out;
}

void write_header(io::Writer& w, uint8_t format) {
  w.bytes(kMagic, 4);
  w.u16(kVersion);
  w.u8(format);
}

uint8_t read_header(io::Reader& r) {
  char magic[4];
  for (int i = 0; i < 4; ++i) magic[i] = char(r.u8());
  if (std::memcmp(magic, kMagic, 4) != 0) raise(ErrorCode::IoFailure, "bad magic");
  if (r.u16() != kVersion) raise(ErrorCode::IoFailure, "unsupported archive version");
  return r.u8();
}

}  // namespace

size_t archive_header_size() { return 4 + 2 + 1; }

void canonicalize_for_storage(Map& map) {
  for (auto& [id, lm] : map.landmarks) {
    if (lm.kind == GeomKind::line) {
      lm.line.alpha = wrap_angle(lm.line.alpha);
      lm.line.beta = wrap_angle(lm.line.beta);
    } else {
      lm.plane.alpha = wrap_angle(lm.plane.alpha);
      lm.plane.beta = wrap_angle(lm.plane.beta);
    }
  }
  for (auto& [id, kf] : map.keyframes) {
    for (auto& [lm, obs] : kf.line_obs) obs.sqrt_info = round_f32(obs.sqrt_info);
    for (auto& [lm, obs] : kf.plane_obs) obs.sqrt_info = round_f32(obs.sqrt_info);
  }
  for (auto& f : map.rel_pose_factors) f.sqrt_info = round_sym_f32(f.sqrt_info);
  for (auto& f : map.prior_factors) f.sqrt_info = round_sym_f32(f.sqrt_info);
  for (auto& f : map.recovered_obs) f.sqrt_info = round_sym_f32(f.sqrt_info);
}

size_t serialize_full(const Map& map, const std::string& path) {
  io::Writer w;
  write_header(w, kFormatFull);
  w.varint(map.sessions.size());
  for (int32_t s : map.sessions) w.varint(uint64_t(uint32_t(s)));

  w.varint(map.keyframes.size());
  for (const auto& [id, kf] : map.keyframes) {
    w.varint(uint64_t(id));
    w.varint(uint64_t(uint32_t(kf.session)));
    w.varint(uint64_t(uint32_t(kf.seq)));
    w.pose(kf.pose);
  }

  w.varint(map.landmarks.size());
  for (const auto& [id, lm] : map.landmarks) {
    w.varint(uint64_t(id));
    w.u8(uint8_t(lm.label));
    w.u8(uint8_t(lm.kind));
    if (lm.kind == GeomKind::line) {
      w.f64(lm.line.alpha);
      w.f64(lm.line.beta);
      w.f64(lm.line.x);
      w.f64(lm.line.y);
    } else {
      w.f64(lm.plane.alpha);
      w.f64(lm.plane.beta);
      w.f64(lm.plane.d);
    }
    for (int i = 0; i < 3; ++i) w.f64(lm.centroid[i]);
    w.f64(lm.radius);
  }

  w.varint(map.observation_count());
  for (const auto& [id, kf] : map.keyframes) {
    for (const auto& [lm, obs] : kf.line_obs) {
      w.varint(uint64_t(id));
      w.varint(uint64_t(lm));
      w.u8(uint8_t(GeomKind::line));
      for (const Vec3* p : {&obs.p_a, &obs.p_b})
        for (int i = 0; i < 3; ++i) w.f64((*p)[i]);
      w.f32(float(obs.sqrt_info));
      w.varint(uint64_t(obs.point_count));
    }
    for (const auto& [lm, obs] : kf.plane_obs) {
      w.varint(uint64_t(id));
      w.varint(uint64_t(lm));
      w.u8(uint8_t(GeomKind::plane));
      for (const Vec3* p : {&obs.p_a, &obs.p_b, &obs.p_c})
        for (int i = 0; i < 3; ++i) w.f64((*p)[i]);
      w.f32(float(obs.sqrt_info));
      w.varint(uint64_t(obs.point_count));
    }
  }

  w.varint(map.rel_pose_factors.size());
  for (const auto& f : map.rel_pose_factors) {
    w.varint(uint64_t(f.kf_a));
    w.varint(uint64_t(f.kf_b));
    w.u8(f.recovered ? 1 : 0);
    w.pose(f.z);
    w.sym_f32(f.sqrt_info);
  }
  w.varint(map.prior_factors.size());
  for (const auto& f : map.prior_factors) {
    w.varint(uint64_t(f.kf));
    w.pose(f.z);
    w.sym_f32(f.sqrt_info);
  }
  w.varint(map.recovered_obs.size());
  for (const auto& f : map.recovered_obs) {
    w.varint(uint64_t(f.landmark));
    w.varint(uint64_t(f.keyframe));
    w.u8(uint8_t(f.kind));
    const int npts = f.kind == GeomKind::line ? 2 : 3;
    for (int p = 0; p < npts; ++p)
      for (int i = 0; i < 3; ++i) w.f64(f.points[p][i]);
    w.sym_f32(f.sqrt_info);
  }
  w.varint(uint64_t(map.next_keyframe_id));
  w.varint(uint64_t(map.next_landmark_id));
  return w.write_file(path);
}

size_t serialize_localization_only(const Map& map, const std::string& path) {
  io::Writer w;
  write_header(w, kFormatLocalization);
  size_t lines = 0, planes = 0;
  for (const auto& [id, lm] : map.landmarks) (lm.kind == GeomKind::line ? lines : planes)++;
  w.varint(lines);
  w.varint(planes);
  for (const auto& [id, lm] : map.landmarks) {
    if (lm.kind != GeomKind::line) continue;
    w.f64(lm.line.alpha);
    w.f64(lm.line.beta);
    w.f64(lm.line.x);
    w.f64(lm.line.y);
    w.u8(uint8_t(lm.label));
  }
  for (const auto& [id, lm] : map.landmarks) {
    if (lm.kind != GeomKind::plane) continue;
    w.f64(lm.plane.alpha);
    w.f64(lm.plane.beta);
    w.f64(lm.plane.d);
    w.u8(uint8_t(lm.label));
  }
  return w.write_file(path);
}

Map deserialize_map(const std::string& path) {
  io::Reader r = io::Reader::from_file(path);
  const uint8_t format = read_header(r);
  Map map;
  if (format == kFormatLocalization) {
    const uint64_t lines = r.varint();
    const uint64_t planes = r.varint();
    for (uint64_t i = 0; i < lines; ++i) {
      Landmark lm;
      lm.id = map.alloc_landmark_id();
      lm.kind = GeomKind::line;
      lm.line.alpha = r.f64();
      lm.line.beta = r.f64();
      lm.line.x = r.f64();
      lm.line.y = r.f64();
      lm.label = Label(r.u8());
      map.landmarks.emplace(lm.id, std::move(lm));
    }
    for (uint64_t i = 0; i < planes; ++i) {
      Landmark lm;
      lm.id = map.alloc_landmark_id();
      lm.kind = GeomKind::plane;
      lm.plane.alpha = r.f64();
      lm.plane.beta = r.f64();
      lm.plane.d = r.f64();
      lm.label = Label(r.u8());
      map.landmarks.emplace(lm.id, std::move(lm));
    }
    refresh_landmark_caches(map);
    return map;
  }
  if (format != kFormatFull) raise(ErrorCode::IoFailure, "unknown archive format");

  const uint64_t n_sessions = r.varint();
  for (uint64_t i = 0; i < n_sessions; ++i) map.sessions.push_back(int32_t(uint32_t(r.varint())));

  const uint64_t n_kf = r.varint();
  for (uint64_t i = 0; i < n_kf; ++i) {
    Keyframe kf;
    kf.id = int64_t(r.varint());
    kf.session = int32_t(uint32_t(r.varint()));
    kf.seq = int32_t(uint32_t(r.varint()));
    kf.pose = r.pose();
    map.keyframes.emplace(kf.id, std::move(kf));
  }

  const uint64_t n_lm = r.varint();
  for (uint64_t i = 0; i < n_lm; ++i) {
    Landmark lm;
    lm.id = int64_t(r.varint());
    lm.label = Label(r.u8());
    lm.kind = GeomKind(r.u8());
    if (lm.kind == GeomKind::line) {
      lm.line.alpha = r.f64();
      lm.line.beta = r.f64();
      lm.line.x = r.f64();
      lm.line.y = r.f64();
    } else {
      lm.plane.alpha = r.f64();
      lm.plane.beta = r.f64();
      lm.plane.d = r.f64();
    }
    for (int k = 0; k < 3; ++k) lm.centroid[k] = r.f64();
    lm.radius = r.f64();
    map.landmarks.emplace(lm.id, std::move(lm));
  }

  const uint64_t n_obs = r.varint();
  for (uint64_t i = 0; i < n_obs; ++i) {
    const int64_t kf_id = int64_t(r.varint());
    const int64_t lm_id = int64_t(r.varint());
    const GeomKind kind = GeomKind(r.u8());
    Keyframe& kf = map.keyframes.at(kf_id);
    if (kind == GeomKind::line) {
      LineObservation obs;
      for (Vec3* p : {&obs.p_a, &obs.p_b})
        for (int k = 0; k < 3; ++k) (*p)[k] = r.f64();
      obs.sqrt_info = double(r.f32());
      obs.point_count = int32_t(r.varint());
      kf.line_obs.emplace_back(lm_id, obs);
    } else {
      PlaneObservation obs;
      for (Vec3* p : {&obs.p_a, &obs.p_b, &obs.p_c})
        for (int k = 0; k < 3; ++k) (*p)[k] = r.f64();
      obs.sqrt_info = double(r.f32());
      obs.point_count = int32_t(r.varint());
      kf.plane_obs.emplace_back(lm_id, obs);
    }
    map.landmarks.at(lm_id).observers.push_back(kf_id);
  }

  const uint64_t n_rel = r.varint();
  for (uint64_t i = 0; i < n_rel; ++i) {
    RelPoseFactor f;
    f.kf_a = int64_t(r.varint());
    f.kf_b = int64_t(r.varint());
    f.recovered = r.u8() != 0;
    f.z = r.pose();
    f.sqrt_info = r.sym_f32(6);
    map.rel_pose_factors.push_back(std::move(f));
  }
  const uint64_t n_prior = r.varint();
  for (uint64_t i = 0; i < n_prior; ++i) {
    PriorFactor f;
    f.kf = int64_t(r.varint());
    f.z = r.pose();
    f.sqrt_info = r.sym_f32(6);
    map.prior_factors.push_back(std::move(f));
  }
  const uint64_t n_rec = r.varint();
  for (uint64_t i = 0; i < n_rec; ++i) {
    RecoveredObsFactor f;
    f.landmark = int64_t(r.varint());
    f.keyframe = int64_t(r.varint());
    f.kind = GeomKind(r.u8());
    const int npts = f.kind == GeomKind::line ? 2 : 3;
    for (int p = 0; p < npts; ++p)
      for (int k = 0; k < 3; ++k) f.points[p][k] = r.f64();
    f.sqrt_info = r.sym_f32(f.kind == GeomKind::line ? 4 : 3);
    map.recovered_obs.push_back(std::move(f));
    map.landmarks.at(f.landmark).observers.push_back(f.keyframe);
  }
  map.next_keyframe_id = int64_t(r.varint());
  map.next_landmark_id = int64_t(r.varint());
  if (!r.at_end()) raise(ErrorCode::IoFailure, "trailing bytes in archive");
  for (auto& [id, lm] : map.landmarks) {
    std::sort(lm.observers.begin(), lm.observers.end());
    lm.observers.erase(std::unique(lm.observers.begin(), lm.observers.end()),
                       lm.observers.end());
  }
  validate_map(map);
  return map;
}

void merge_into_base(Map& base, const Map& submap) {
  std::map<int64_t, int64_t> kf_remap, lm_remap;
  for (const auto& [id, kf] : submap.keyframes) kf_remap[id] = base.alloc_keyframe_id();
  for (const auto& [id, lm] : submap.landmarks) lm_remap[id] = base.alloc_landmark_id();

  for (const auto& [id, lm] : submap.landmarks) {
    Landmark copy = lm;
    copy.id = lm_remap.at(id);
    copy.observers.clear();
    for (int64_t kf : lm.observers) copy.observers.push_back(kf_remap.at(kf));
    if (!base.landmarks.emplace(copy.id, std::move(copy)).second)
      raise(ErrorCode::IdCollision, "landmark id collision during merge");
  }
  for (const auto& [id, kf] : submap.keyframes) {
    Keyframe copy = kf;
    copy.id = kf_remap.at(id);
    for (auto& [lm, obs] : copy.line_obs) lm = lm_remap.at(lm);
    for (auto& [lm, obs] : copy.plane_obs) lm = lm_remap.at(lm);
    if (!base.keyframes.emplace(copy.id, std::move(copy)).second)
      raise(ErrorCode::IdCollision, "keyframe id collision during merge");
  }
  for (const auto& f : submap.rel_pose_factors) {
    RelPoseFactor copy = f;
    copy.kf_a = kf_remap.at(f.kf_a);
    copy.kf_b = kf_remap.at(f.kf_b);
    base.rel_pose_factors.push_back(std::move(copy));
  }
  // Gauge stays with the base map: submap priors are dropped.
  for (const auto& f : submap.recovered_obs) {
    RecoveredObsFactor copy = f;
    copy.landmark = lm_remap.at(f.landmark);
    copy.keyframe = kf_remap.at(f.keyframe);
    base.recovered_obs.push_back(std::move(copy));
  }
  for (int32_t s : submap.sessions) base.sessions.push_back(s);
  validate_map(base);
}

}  // namespace slim
