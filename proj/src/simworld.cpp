#include "slim/simworld.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>

#include "slim/error.hpp"
#include "slim/mapio.hpp"

namespace slim {

namespace {

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::mt19937_64 rng_for(uint64_t seed, uint64_t stream, uint64_t index = 0) {
  return std::mt19937_64(splitmix64(splitmix64(seed ^ (stream * 0x9e3779b97f4a7c15ull)) + index));
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double gauss(std::mt19937_64& rng, double sigma) {
  return sigma > 0 ? std::normal_distribution<double>(0.0, sigma)(rng) : 0.0;
}

Mat3 yaw_rotation(double yaw) {
  Mat3 R;
  R << std::cos(yaw), -std::sin(yaw), 0, std::sin(yaw), std::cos(yaw), 0, 0, 0, 1;
  return R;
}

double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double t = std::clamp(ab.dot(p - a) / ab.squaredNorm(), 0.0, 1.0);
  return (a + t * ab - p).norm();
}

constexpr uint8_t kOdometryFile = 10;
constexpr uint8_t kClustersFile = 11;
constexpr uint8_t kTruthFile = 12;

void write_sim_header(io::Writer& w, uint8_t kind) {
  w.bytes("SLSS", 4);
  w.u16(1);
  w.u8(kind);
}

void read_sim_header(io::Reader& r, uint8_t kind) {
  char magic[4];
  for (int i = 0; i < 4; ++i) magic[i] = char(r.u8());
  if (std::string(magic, 4) != "SLSS") raise(ErrorCode::IoFailure, "bad session file magic");
  if (r.u16() != 1) raise(ErrorCode::IoFailure, "unsupported session file version");
  if (r.u8() != kind) raise(ErrorCode::IoFailure, "unexpected session file kind");
}

}  // namespace

World generate_world(const WorldSpec& spec) {
  World world;
  world.spec = spec;
  const double q = spec.extent / 4.0;

  // Square ring road with corners at (+-q, +-q).
  const Vec3 c0(-q, -q, 0), c1(q, -q, 0), c2(q, q, 0), c3(-q, q, 0);
  world.road_segments = {{c0, c1}, {c1, c2}, {c2, c3}, {c3, c0}};

  for (const auto& [a, b] : world.road_segments) {
    TrueLandmark road;
    road.kind = GeomKind::plane;
    road.label = Label::road;
    road.center = 0.5 * (a + b);
    road.axis_u = (b - a).normalized();
    road.axis_v = Vec3::UnitZ().cross(road.axis_u);
    road.half_u = 0.5 * (b - a).norm() + spec.road_width / 2;
    road.half_v = spec.road_width / 2;
    world.landmarks.push_back(road);
  }

  auto near_road = [&](const Vec3& p, double margin) {
    for (const auto& [a, b] : world.road_segments) {
      if (point_segment_distance(p, a, b) < margin) return true;
    }
    return false;
  };

  auto rng = rng_for(spec.seed, 1);
  for (int bi = 0; bi < spec.building_count; ++bi) {
    for (int attempt = 0; attempt < 60; ++attempt) {
      const int seg = int(uniform(rng, 0, 4)) % 4;
      const auto& [a, b] = world.road_segments[seg];
      const double t = uniform(rng, 0.1, 0.9);
      const Vec3 dir = (b - a).normalized();
      const Vec3 side = Vec3::UnitZ().cross(dir) * (uniform(rng, 0, 1) < 0.5 ? 1.0 : -1.0);
      const double span = uniform(rng, spec.building_side_min, spec.building_side_max);
      const double setback = spec.road_width / 2 + 2.0 + span / 2 + uniform(rng, 0, 4);
      Vec3 center = a + t * (b - a) + setback * side;
      center.z() = 0;
      if (std::abs(center.x()) > spec.extent / 2 - span || std::abs(center.y()) > spec.extent / 2 - span)
        continue;
      if (near_road(center, spec.road_width / 2 + span * 0.75)) continue;
      // keep yaw away from the axis-aligned gimbal directions
      const double yaw = uniform(rng, 8.0, 82.0) * M_PI / 180.0;
      const Mat3 R = yaw_rotation(yaw);
      bool overlaps = false;
      for (const auto& lm : world.landmarks) {
        if (lm.label == Label::building && (lm.center - center).head<2>().norm() < span * 1.6) {
          overlaps = true;
          break;
        }
      }
      if (overlaps) continue;
      for (int f = 0; f < 4; ++f) {
        const Vec3 n = R * (f < 2 ? Vec3::UnitX() : Vec3::UnitY()) * (f % 2 ? -1.0 : 1.0);
        const Vec3 u = Vec3::UnitZ().cross(n).normalized();
        TrueLandmark facade;
        facade.kind = GeomKind::plane;
        facade.label = Label::building;
        facade.center = center + (span / 2) * n + Vec3(0, 0, spec.building_height / 2);
        facade.axis_u = u;
        facade.axis_v = Vec3::UnitZ();
        facade.half_u = span / 2;
        facade.half_v = spec.building_height / 2;
        world.landmarks.push_back(facade);
      }
      break;
    }
  }

  if (spec.pole_density > 0) {
    const double step = 100.0 / spec.pole_density;
    int side_flip = 1;
    for (const auto& [a, b] : world.road_segments) {
      const double len = (b - a).norm();
      const Vec3 dir = (b - a).normalized();
      const Vec3 side = Vec3::UnitZ().cross(dir);
      for (double t = step / 2; t < len; t += step) {
        TrueLandmark pole;
        pole.kind = GeomKind::line;
        pole.label = Label::pole;
        pole.center = a + t * dir + side * side_flip * (spec.road_width / 2 + 0.5) +
                      Vec3(0, 0, spec.pole_height / 2);
        pole.axis_u = Vec3::UnitZ();
        pole.half_u = spec.pole_height / 2;
        world.landmarks.push_back(pole);
        side_flip = -side_flip;
      }
    }
  }
  return world;
}

uint64_t world_hash(const World& world) {
  uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    h ^= bits;
    h *= 0x100000001b3ull;
  };
  for (const auto& lm : world.landmarks) {
    mix(double(uint8_t(lm.kind)) + 10.0 * double(uint8_t(lm.label)));
    for (int i = 0; i < 3; ++i) mix(lm.center[i]);
    for (int i = 0; i < 3; ++i) mix(lm.axis_u[i]);
    for (int i = 0; i < 3; ++i) mix(lm.axis_v[i]);
    mix(lm.half_u);
    mix(lm.half_v);
  }
  return h;
}

SessionSim simulate_session(const World& world, int session_index) {
  const WorldSpec& spec = world.spec;
  auto rng = rng_for(spec.seed, 2, uint64_t(session_index));

  SessionSim sim;
  sim.session_id = session_index;

  // Route: the ring loop from a random corner, random direction, random
  // start offset along the perimeter.
  std::vector<Vec3> corners;
  for (const auto& [a, b] : world.road_segments) corners.push_back(a);
  const bool clockwise = uniform(rng, 0, 1) < 0.5;
  const int start = int(uniform(rng, 0, 4)) % 4;
  std::vector<Vec3> route;
  for (int i = 0; i <= 4; ++i) {
    const int idx = clockwise ? (start - i % 4 + 8) % 4 : (start + i) % 4;
    route.push_back(corners[idx]);
  }
  const double skip = uniform(rng, 0, spec.keyframe_spacing);

  double along = skip;
  for (size_t seg = 0; seg + 1 < route.size(); ++seg) {
    const Vec3 a = route[seg];
    const Vec3 b = route[seg + 1];
    const double len = (a - b).norm();
    const Vec3 dir = (b - a).normalized();
    while (along < len) {
      Pose T;
      T.rotation = yaw_rotation(std::atan2(dir.y(), dir.x()));
      T.translation = a + along * dir + Vec3(0, 0, spec.sensor_height);
      sim.truth.push_back(T);
      along += spec.keyframe_spacing;
    }
    along -= len;
  }

  // Drifting odometry in a session-specific frame.
  Pose offset;
  offset.rotation = yaw_rotation(uniform(rng, -M_PI, M_PI));
  offset.translation = Vec3(uniform(rng, -20, 20), uniform(rng, -20, 20), 0);
  sim.odometry.push_back(offset);
  for (size_t k = 1; k < sim.truth.size(); ++k) {
    const Pose rel = sim.truth[k - 1].inverse() * sim.truth[k];
    const double dist = rel.translation.norm();
    Pose noisy = rel;
    noisy.translation += Vec3(gauss(rng, spec.drift_trans_per_m * dist),
                              gauss(rng, spec.drift_trans_per_m * dist),
                              gauss(rng, spec.drift_trans_per_m * dist));
    const Vec3 dtheta(gauss(rng, spec.drift_rot_per_m * dist),
                      gauss(rng, spec.drift_rot_per_m * dist),
                      gauss(rng, spec.drift_rot_per_m * dist));
    noisy.rotation = noisy.rotation * so3_exp(dtheta);
    sim.odometry.push_back(sim.odometry.back() * noisy);
  }

  // Clusters: points sampled on visible landmarks, noise added, expressed in
  // the keyframe-local frame through the true pose.
  sim.clusters.resize(sim.truth.size());
  sim.visible.resize(sim.truth.size());
  for (size_t k = 0; k < sim.truth.size(); ++k) {
    const Pose& T = sim.truth[k];
    const Pose T_inv = T.inverse();
    for (size_t li = 0; li < world.landmarks.size(); ++li) {
      const TrueLandmark& lm = world.landmarks[li];
      if ((lm.center - T.translation).norm() > spec.sensor_range) continue;
      PointCluster cluster;
      cluster.label = lm.label;
      cluster.kind = lm.kind;
      for (int i = 0; i < spec.cluster_points * 5 && int(cluster.points.size()) < spec.cluster_points;
           ++i) {
        Vec3 p = lm.center + uniform(rng, -lm.half_u, lm.half_u) * lm.axis_u;
        if (lm.kind == GeomKind::plane) p += uniform(rng, -lm.half_v, lm.half_v) * lm.axis_v;
        if ((p - T.translation).norm() > spec.sensor_range) continue;
        p += Vec3(gauss(rng, spec.sigma_obs), gauss(rng, spec.sigma_obs),
                  gauss(rng, spec.sigma_obs));
        cluster.points.push_back(T_inv.act(p));
      }
      const size_t min_points = lm.kind == GeomKind::plane ? 8 : 4;
      if (cluster.points.size() < min_points) continue;
      sim.clusters[k].push_back(std::move(cluster));
      sim.visible[k].push_back(int(li));
    }
  }
  return sim;
}

SessionData to_session_data(const SessionSim& sim) {
  SessionData data;
  data.session_id = sim.session_id;
  data.odometry = sim.odometry;
  data.clusters = sim.clusters;
  return data;
}

double evaluate_ate(const std::vector<Pose>& estimated, const std::vector<Pose>& truth,
                    AteMode mode) {
  const size_t n = std::min(estimated.size(), truth.size());
  if (n < 3) raise(ErrorCode::TooFewPoses, "need at least 3 matched poses");

  if (mode == AteMode::se3) {
    MatX src(3, n), dst(3, n);
    for (size_t i = 0; i < n; ++i) {
      src.col(i) = estimated[i].translation;
      dst.col(i) = truth[i].translation;
    }
    const MatX T = Eigen::umeyama(src, dst, false);
    double sq = 0;
    for (size_t i = 0; i < n; ++i) {
      const Vec3 aligned = T.topLeftCorner<3, 3>() * estimated[i].translation + T.topRightCorner<3, 1>();
      sq += (aligned - truth[i].translation).squaredNorm();
    }
    return std::sqrt(sq / double(n));
  }

  // xy-only: project, then 2D rigid Kabsch alignment.
  Vec2 mean_e = Vec2::Zero(), mean_t = Vec2::Zero();
  for (size_t i = 0; i < n; ++i) {
    mean_e += estimated[i].translation.head<2>();
    mean_t += truth[i].translation.head<2>();
  }
  mean_e /= double(n);
  mean_t /= double(n);
  Mat2 cov = Mat2::Zero();
  for (size_t i = 0; i < n; ++i) {
    cov += (truth[i].translation.head<2>() - mean_t) *
           (estimated[i].translation.head<2>() - mean_e).transpose();
  }
  Eigen::JacobiSVD<Mat2> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat2 S = Mat2::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0) S(1, 1) = -1;
  const Mat2 R = svd.matrixU() * S * svd.matrixV().transpose();
  double sq = 0;
  for (size_t i = 0; i < n; ++i) {
    const Vec2 aligned = R * (estimated[i].translation.head<2>() - mean_e) + mean_t;
    sq += (aligned - truth[i].translation.head<2>()).squaredNorm();
  }
  return std::sqrt(sq / double(n));
}

void write_session_dir(const std::string& dir, const SessionSim& sim) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) raise(ErrorCode::IoFailure, "cannot create directory: " + dir);

  {
    io::Writer w;
    write_sim_header(w, kOdometryFile);
    w.varint(uint64_t(sim.session_id));
    w.varint(sim.odometry.size());
    for (const Pose& p : sim.odometry) w.pose(p);
    w.write_file(dir + "/odometry.bin");
  }
  {
    io::Writer w;
    write_sim_header(w, kClustersFile);
    w.varint(sim.clusters.size());
    for (const auto& frame : sim.clusters) {
      w.varint(frame.size());
      for (const auto& c : frame) {
        w.u8(uint8_t(c.label));
        w.u8(uint8_t(c.kind));
        w.varint(c.points.size());
        for (const Vec3& p : c.points)
          for (int i = 0; i < 3; ++i) w.f64(p[i]);
      }
    }
    w.write_file(dir + "/clusters.bin");
  }
  {
    io::Writer w;
    write_sim_header(w, kTruthFile);
    w.varint(sim.truth.size());
    for (const Pose& p : sim.truth) w.pose(p);
    w.varint(sim.visible.size());
    for (const auto& v : sim.visible) {
      w.varint(v.size());
      for (int idx : v) w.varint(uint64_t(idx));
    }
    w.write_file(dir + "/truth.bin");
  }
}

SessionSim read_session_dir(const std::string& dir) {
  SessionSim sim;
  {
    io::Reader r = io::Reader::from_file(dir + "/odometry.bin");
    read_sim_header(r, kOdometryFile);
    sim.session_id = int32_t(r.varint());
    const uint64_t n = r.varint();
    for (uint64_t i = 0; i < n; ++i) sim.odometry.push_back(r.pose());
  }
  {
    io::Reader r = io::Reader::from_file(dir + "/clusters.bin");
    read_sim_header(r, kClustersFile);
    const uint64_t frames = r.varint();
    sim.clusters.resize(frames);
    for (uint64_t k = 0; k < frames; ++k) {
      const uint64_t count = r.varint();
      for (uint64_t c = 0; c < count; ++c) {
        PointCluster cluster;
        cluster.label = Label(r.u8());
        cluster.kind = GeomKind(r.u8());
        const uint64_t npts = r.varint();
        for (uint64_t p = 0; p < npts; ++p) {
          Vec3 v;
          for (int i = 0; i < 3; ++i) v[i] = r.f64();
          cluster.points.push_back(v);
        }
        sim.clusters[k].push_back(std::move(cluster));
      }
    }
  }
  const std::string truth_path = dir + "/truth.bin";
  if (std::filesystem::exists(truth_path)) {
    io::Reader r = io::Reader::from_file(truth_path);
    read_sim_header(r, kTruthFile);
    const uint64_t n = r.varint();
    for (uint64_t i = 0; i < n; ++i) sim.truth.push_back(r.pose());
    const uint64_t frames = r.varint();
    sim.visible.resize(frames);
    for (uint64_t k = 0; k < frames; ++k) {
      const uint64_t count = r.varint();
      for (uint64_t i = 0; i < count; ++i) sim.visible[k].push_back(int(r.varint()));
    }
  }
  return sim;
}

size_t write_dense_point_dump(const World& world, const std::string& path, double grid) {
  io::Writer w;
  write_sim_header(w, 13);
  for (const auto& lm : world.landmarks) {
    if (lm.kind == GeomKind::plane) {
      for (double s = -lm.half_u; s <= lm.half_u; s += grid) {
        for (double t = -lm.half_v; t <= lm.half_v; t += grid) {
          const Vec3 p = lm.center + s * lm.axis_u + t * lm.axis_v;
          for (int i = 0; i < 3; ++i) w.f32(float(p[i]));
        }
      }
    } else {
      for (double s = -lm.half_u; s <= lm.half_u; s += grid) {
        const Vec3 p = lm.center + s * lm.axis_u;
        for (int i = 0; i < 3; ++i) w.f32(float(p[i]));
      }
    }
  }
  return w.write_file(path);
}

}  // namespace slim
