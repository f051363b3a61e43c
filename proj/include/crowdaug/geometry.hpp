#pragma once

#include <array>
#include <cmath>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "crowdaug/errors.hpp"

namespace crowdaug {

// World coordinates in meters; the ground plane is z = 0.
struct WorldPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const WorldPoint&, const WorldPoint&) = default;
};

// Continuous pixel coordinates, origin at the top-left image corner.
struct ImagePoint {
  double u = 0.0;
  double v = 0.0;

  friend bool operator==(const ImagePoint&, const ImagePoint&) = default;
};

inline bool is_finite(const WorldPoint& p) {
  return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z);
}

inline bool is_finite(const ImagePoint& q) { return std::isfinite(q.u) && std::isfinite(q.v); }

inline double distance(const WorldPoint& a, const WorldPoint& b) {
  return std::hypot(a.x - b.x, a.y - b.y, a.z - b.z);
}

inline double distance(const ImagePoint& a, const ImagePoint& b) {
  return std::hypot(a.u - b.u, a.v - b.v);
}

using ProjectionMatrix = Eigen::Matrix<double, 3, 4, Eigen::RowMajor>;

inline constexpr double kMinDepth = 1e-9;

class CameraModel {
 public:
  CameraModel(const ProjectionMatrix& P, int image_width, int image_height)
      : P_(P), width_(image_width), height_(image_height) {
    if (image_width <= 0 || image_height <= 0) {
      throw PreconditionError("camera image dimensions must be positive");
    }
    if (!P.allFinite()) {
      throw PreconditionError("camera matrix has non-finite entries");
    }
    if (std::abs(P.leftCols<3>().determinant()) <= 1e-15) {
      throw PreconditionError("camera matrix is degenerate (singular left 3x3 block)");
    }
  }

  // Row-major 12 numbers.
  static CameraModel from_matrix(std::span<const double> rows, int image_width, int image_height) {
    if (rows.size() != 12) {
      throw PreconditionError("camera matrix needs 12 entries, got " + std::to_string(rows.size()));
    }
    ProjectionMatrix P;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 4; ++c) P(r, c) = rows[static_cast<std::size_t>(r * 4 + c)];
    }
    return CameraModel(P, image_width, image_height);
  }

  // P = K [R | -R C]. `rotation` is the row-major world-to-camera linear map and
  // `center` the camera position in world coordinates.
  static CameraModel from_intrinsics(double focal_px, double cx, double cy,
                                     std::span<const double> rotation, const WorldPoint& center,
                                     int image_width, int image_height) {
    if (rotation.size() != 9) {
      throw PreconditionError("camera pose rotation needs 9 entries");
    }
    Eigen::Matrix3d K;
    K << focal_px, 0.0, cx, 0.0, focal_px, cy, 0.0, 0.0, 1.0;
    Eigen::Matrix3d R;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) R(r, c) = rotation[static_cast<std::size_t>(r * 3 + c)];
    }
    const Eigen::Vector3d C(center.x, center.y, center.z);
    ProjectionMatrix P;
    P.leftCols<3>() = K * R;
    P.col(3) = -(K * R * C);
    return CameraModel(P, image_width, image_height);
  }

  const ProjectionMatrix& matrix() const noexcept { return P_; }
  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

  // Homogeneous depth of a point (third row of P applied to (x, y, z, 1)).
  double depth(const WorldPoint& p) const {
    return P_(2, 0) * p.x + P_(2, 1) * p.y + P_(2, 2) * p.z + P_(2, 3);
  }

  bool in_image(const ImagePoint& q) const {
    return q.u >= 0.0 && q.u < width_ && q.v >= 0.0 && q.v < height_;
  }

 private:
  ProjectionMatrix P_;
  int width_;
  int height_;
};

// u = P x with homogeneous division. May land outside the image.
inline ImagePoint project(const CameraModel& camera, const WorldPoint& p) {
  if (!is_finite(p)) throw PreconditionError("project: non-finite world point");
  const Eigen::Vector4d x(p.x, p.y, p.z, 1.0);
  const Eigen::Vector3d h = camera.matrix() * x;
  if (!(h.z() > kMinDepth)) {
    throw DepthError("point lies on or behind the camera plane (w = " + std::to_string(h.z()) + ")");
  }
  return {h.x() / h.z(), h.y() / h.z()};
}

// Top-view image <-> ground plane mapping: isotropic scale plus offset.
struct GroundMapping {
  double meters_per_pixel = 1.0;
  WorldPoint origin{};

  GroundMapping() = default;
  GroundMapping(double mpp, WorldPoint origin_offset) : meters_per_pixel(mpp), origin(origin_offset) {
    if (!(mpp > 0.0) || !std::isfinite(mpp)) {
      throw PreconditionError("meters_per_pixel must be positive and finite");
    }
    if (origin.z != 0.0 || !is_finite(origin)) {
      throw PreconditionError("mapping origin must be a finite ground point (z = 0)");
    }
  }
};

inline WorldPoint pixels_to_meters(const GroundMapping& m, const ImagePoint& q) {
  return {q.u * m.meters_per_pixel + m.origin.x, q.v * m.meters_per_pixel + m.origin.y, 0.0};
}

inline ImagePoint meters_to_pixels(const GroundMapping& m, const WorldPoint& p) {
  if (std::abs(p.z) > 1e-9) {
    throw OffPlaneError("point is off the ground plane (z = " + std::to_string(p.z) + ")");
  }
  return {(p.x - m.origin.x) / m.meters_per_pixel, (p.y - m.origin.y) / m.meters_per_pixel};
}

// Downward-looking camera whose ground-plane projection coincides with
// meters_to_pixels(mapping, .). The camera sits `height_m` above the ground
// point that maps to the image centre. The axis flip (diag(1, 1, -1)) keeps
// image v aligned with world +y, matching the mapping convention.
inline CameraModel top_view_camera(const GroundMapping& mapping, double height_m, int image_width,
                                   int image_height) {
  if (!(height_m > 0.0)) throw PreconditionError("top-view camera height must be positive");
  const double cx = image_width / 2.0;
  const double cy = image_height / 2.0;
  const double focal = height_m / mapping.meters_per_pixel;
  const WorldPoint center{mapping.origin.x + cx * mapping.meters_per_pixel,
                          mapping.origin.y + cy * mapping.meters_per_pixel, height_m};
  const std::array<double, 9> flip{1, 0, 0, 0, 1, 0, 0, 0, -1};
  return CameraModel::from_intrinsics(focal, cx, cy, flip, center, image_width, image_height);
}

}  // namespace crowdaug
