#include <array>
#include <random>

#include <gtest/gtest.h>

#include "crowdaug/geometry.hpp"

using namespace crowdaug;

namespace {

CameraModel identity_camera() {
  const std::array<double, 12> rows{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0};
  return CameraModel::from_matrix(rows, 640, 480);
}

CameraModel focal_camera(double scale = 1.0) {
  const std::array<double, 12> rows{100 * scale, 0, 0, 0, 0, 100 * scale, 0, 0, 0, 0, scale, 0};
  return CameraModel::from_matrix(rows, 640, 480);
}

// An oblique camera looking down at the ground from (2, -3, 5).
CameraModel oblique_camera() {
  const double c = std::cos(0.6), s = std::sin(0.6);
  const std::array<double, 9> R{1, 0, 0, 0, -c, -s, 0, s, -c};
  return CameraModel::from_intrinsics(700.0, 320.0, 240.0, R, {2.0, -3.0, 5.0}, 640, 480);
}

}  // namespace

TEST(Project, IdentityOnOpticalAxis) {
  const auto q = project(identity_camera(), {0, 0, 1});
  EXPECT_EQ(q.u, 0.0);
  EXPECT_EQ(q.v, 0.0);
}

TEST(Project, FocalHomogeneousDivision) {
  const auto q = project(focal_camera(), {1, 2, 10});
  EXPECT_DOUBLE_EQ(q.u, 10.0);
  EXPECT_DOUBLE_EQ(q.v, 20.0);
}

TEST(Project, ZeroDepthThrows) {
  EXPECT_THROW(project(identity_camera(), {1, 1, 0}), DepthError);
  EXPECT_THROW(project(identity_camera(), {1, 1, -2}), DepthError);
  EXPECT_THROW(project(identity_camera(), {0, 0, 1e-10}), DepthError);
}

TEST(Project, RejectsNonFinitePoint) {
  EXPECT_THROW(project(identity_camera(), {std::nan(""), 0, 1}), PreconditionError);
}

TEST(CameraModel, RejectsDegenerateMatrix) {
  const std::array<double, 12> rows{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 1};
  EXPECT_THROW(CameraModel::from_matrix(rows, 10, 10), PreconditionError);
  EXPECT_THROW(CameraModel::from_matrix(std::array<double, 11>{}, 10, 10), PreconditionError);
  const std::array<double, 12> ok{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0};
  EXPECT_THROW(CameraModel::from_matrix(ok, 0, 10), PreconditionError);
}

TEST(CameraModel, IntrinsicsAssembly) {
  // Camera at the origin looking along +z: P = K [I | 0].
  const std::array<double, 9> I{1, 0, 0, 0, 1, 0, 0, 0, 1};
  const auto cam = CameraModel::from_intrinsics(100.0, 320.0, 240.0, I, {0, 0, 0}, 640, 480);
  const auto q = project(cam, {1, 2, 10});
  EXPECT_DOUBLE_EQ(q.u, 330.0);
  EXPECT_DOUBLE_EQ(q.v, 260.0);
  // Translating the camera shifts the point the other way.
  const auto moved = CameraModel::from_intrinsics(100.0, 320.0, 240.0, I, {1, 2, 0}, 640, 480);
  const auto q2 = project(moved, {1, 2, 10});
  EXPECT_DOUBLE_EQ(q2.u, 320.0);
  EXPECT_DOUBLE_EQ(q2.v, 240.0);
}

TEST(GroundMapping, PixelsToMeters) {
  const GroundMapping m(0.05, {});
  const auto p = pixels_to_meters(m, {100, 40});
  EXPECT_DOUBLE_EQ(p.x, 5.0);
  EXPECT_DOUBLE_EQ(p.y, 2.0);
  EXPECT_EQ(p.z, 0.0);
  EXPECT_EQ(pixels_to_meters(GroundMapping(0.37, {}), {0, 0}), (WorldPoint{0, 0, 0}));
}

TEST(GroundMapping, OffsetApplied) {
  const GroundMapping m(0.05, {1, 1, 0});
  const auto p = pixels_to_meters(m, {20, 20});
  EXPECT_DOUBLE_EQ(p.x, 2.0);
  EXPECT_DOUBLE_EQ(p.y, 2.0);
}

TEST(GroundMapping, MetersToPixels) {
  const GroundMapping m(0.05, {});
  const auto q = meters_to_pixels(m, {5.0, 2.0, 0});
  EXPECT_DOUBLE_EQ(q.u, 100.0);
  EXPECT_DOUBLE_EQ(q.v, 40.0);
  EXPECT_THROW(meters_to_pixels(m, {0, 0, 1}), OffPlaneError);
  EXPECT_NO_THROW(meters_to_pixels(m, {0, 0, 1e-10}));
}

TEST(GroundMapping, RejectsBadScaleOrOrigin) {
  EXPECT_THROW(GroundMapping(0.0, {}), PreconditionError);
  EXPECT_THROW(GroundMapping(-1.0, {}), PreconditionError);
  EXPECT_THROW(GroundMapping(0.1, {0, 0, 1}), PreconditionError);
}

TEST(GroundMappingProperty, RoundTripWithin1e9) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> pix(-2000.0, 2000.0);
  std::uniform_real_distribution<double> scale(1e-3, 2.0);
  std::uniform_real_distribution<double> off(-50.0, 50.0);
  for (int i = 0; i < 2000; ++i) {
    const GroundMapping m(scale(rng), {off(rng), off(rng), 0.0});
    const ImagePoint q{pix(rng), pix(rng)};
    const auto back = meters_to_pixels(m, pixels_to_meters(m, q));
    ASSERT_NEAR(back.u, q.u, 1e-9);
    ASSERT_NEAR(back.v, q.v, 1e-9);
  }
}

TEST(ProjectProperty, HomogeneousScaleInvariance) {
  const auto base = oblique_camera();
  const CameraModel doubled(base.matrix() * 2.0, base.width(), base.height());
  const CameraModel halved(base.matrix() * 0.5, base.width(), base.height());
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> xy(-5.0, 9.0);
  int checked = 0;
  for (int i = 0; i < 2000; ++i) {
    const WorldPoint p{xy(rng), xy(rng), 0.0};
    if (!(base.depth(p) > kMinDepth)) continue;
    const auto a = project(base, p);
    const auto b = project(doubled, p);
    const auto c = project(halved, p);
    ASSERT_NEAR(a.u, b.u, 1e-9);
    ASSERT_NEAR(a.v, b.v, 1e-9);
    ASSERT_NEAR(a.u, c.u, 1e-9);
    ASSERT_NEAR(a.v, c.v, 1e-9);
    ++checked;
  }
  EXPECT_GT(checked, 1000);
}

TEST(ProjectProperty, CollinearGroundPointsStayCollinear) {
  const auto cam = oblique_camera();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> xy(-2.0, 6.0);
  std::uniform_real_distribution<double> t(-1.0, 2.0);
  int checked = 0;
  for (int i = 0; i < 2000; ++i) {
    const WorldPoint a{xy(rng), xy(rng), 0}, b{xy(rng), xy(rng), 0};
    const double s = t(rng);
    const WorldPoint c{a.x + s * (b.x - a.x), a.y + s * (b.y - a.y), 0};
    if (cam.depth(a) <= kMinDepth || cam.depth(b) <= kMinDepth || cam.depth(c) <= kMinDepth) continue;
    const auto qa = project(cam, a), qb = project(cam, b), qc = project(cam, c);
    const double ab = distance(qa, qb);
    if (ab < 1.0) continue;
    // Perpendicular distance of qc from the line through qa, qb.
    const double cr = (qb.u - qa.u) * (qc.v - qa.v) - (qb.v - qa.v) * (qc.u - qa.u);
    ASSERT_NEAR(cr / ab, 0.0, 1e-6);
    ++checked;
  }
  EXPECT_GT(checked, 500);
}

TEST(TopViewCamera, AgreesWithGroundMapping) {
  const GroundMapping m(0.0125, {0.5, -1.0, 0.0});
  const auto cam = top_view_camera(m, 8.0, 640, 480);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-50.0, 700.0);
  for (int i = 0; i < 500; ++i) {
    const ImagePoint q{u(rng), u(rng)};
    const auto p = pixels_to_meters(m, q);
    const auto img = project(cam, p);
    ASSERT_NEAR(img.u, q.u, 1e-9);
    ASSERT_NEAR(img.v, q.v, 1e-9);
  }
  EXPECT_THROW(top_view_camera(m, 0.0, 640, 480), PreconditionError);
}

TEST(CameraModel, InImageIsHalfOpen) {
  const auto cam = identity_camera();
  EXPECT_TRUE(cam.in_image({0, 0}));
  EXPECT_TRUE(cam.in_image({639.999, 479.999}));
  EXPECT_FALSE(cam.in_image({640, 10}));
  EXPECT_FALSE(cam.in_image({10, -0.001}));
}
