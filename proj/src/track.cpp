#include "dualgk/racing.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace dualgk
{
namespace
{

double wrap_angle(double a)
{
  return std::remainder(a, 2.0 * std::numbers::pi);
}

Eigen::Vector2d catmull_rom(
  const Eigen::Vector2d & p0, const Eigen::Vector2d & p1, const Eigen::Vector2d & p2, const Eigen::Vector2d & p3,
  double t)
{
  const double t2 = t * t;
  const double t3 = t2 * t;
  return 0.5 * ((2.0 * p1) + (-p0 + p2) * t + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2 +
                (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * t3);
}

}  // namespace

Track::Track(const std::vector<Eigen::Vector2d> & waypoints, double half_width, double ds)
: half_width_(half_width), ds_(ds)
{
  const int n = static_cast<int>(waypoints.size());
  if (n < 4) {
    throw std::invalid_argument("track needs at least 4 waypoints");
  }
  if (half_width <= 0.0 || ds <= 0.0) {
    throw std::invalid_argument("track half_width and ds must be positive");
  }
  constexpr int dense_per_segment = 400;
  std::vector<Eigen::Vector2d> dense;
  std::vector<double> arc;
  dense.reserve(static_cast<std::size_t>(n * dense_per_segment + 1));
  for (int i = 0; i < n; ++i) {
    const auto & p0 = waypoints[static_cast<std::size_t>((i - 1 + n) % n)];
    const auto & p1 = waypoints[static_cast<std::size_t>(i)];
    const auto & p2 = waypoints[static_cast<std::size_t>((i + 1) % n)];
    const auto & p3 = waypoints[static_cast<std::size_t>((i + 2) % n)];
    for (int j = 0; j < dense_per_segment; ++j) {
      dense.push_back(catmull_rom(p0, p1, p2, p3, static_cast<double>(j) / dense_per_segment));
    }
  }
  dense.push_back(dense.front());
  arc.resize(dense.size(), 0.0);
  for (std::size_t i = 1; i < dense.size(); ++i) {
    arc[i] = arc[i - 1] + (dense[i] - dense[i - 1]).norm();
  }
  const double total = arc.back();
  const auto count = static_cast<std::size_t>(std::max(8.0, std::round(total / ds)));
  ds_ = total / static_cast<double>(count);
  length_ = total;
  points_.resize(count);
  std::size_t j = 0;
  for (std::size_t k = 0; k < count; ++k) {
    const double s = static_cast<double>(k) * ds_;
    while (j + 1 < arc.size() && arc[j + 1] < s) {
      ++j;
    }
    const double seg = arc[j + 1] - arc[j];
    const double a = seg > 0.0 ? (s - arc[j]) / seg : 0.0;
    points_[k] = dense[j] + a * (dense[j + 1] - dense[j]);
  }
  heading_.resize(count);
  curvature_.resize(count);
  for (std::size_t k = 0; k < count; ++k) {
    const Eigen::Vector2d d = points_[(k + 1) % count] - points_[(k + count - 1) % count];
    heading_[k] = std::atan2(d.y(), d.x());
  }
  for (std::size_t k = 0; k < count; ++k) {
    const double dh = wrap_angle(heading_[(k + 1) % count] - heading_[(k + count - 1) % count]);
    curvature_[k] = dh / (2.0 * ds_);
  }

  Eigen::Vector2d lo = points_.front();
  Eigen::Vector2d hi = points_.front();
  for (const auto & p : points_) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double reach = half_width_ + 2.0;
  origin_ = lo - Eigen::Vector2d::Constant(reach);
  nx_ = static_cast<int>(std::ceil((hi.x() - lo.x() + 2.0 * reach) / cell_)) + 1;
  ny_ = static_cast<int>(std::ceil((hi.y() - lo.y() + 2.0 * reach) / cell_)) + 1;
  cells_.assign(static_cast<std::size_t>(nx_ * ny_), {});
  const int r = static_cast<int>(std::ceil(reach / cell_));
  for (std::size_t k = 0; k < count; ++k) {
    const int cx = static_cast<int>(std::floor((points_[k].x() - origin_.x()) / cell_));
    const int cy = static_cast<int>(std::floor((points_[k].y() - origin_.y()) / cell_));
    for (int ix = std::max(0, cx - r); ix <= std::min(nx_ - 1, cx + r); ++ix) {
      for (int iy = std::max(0, cy - r); iy <= std::min(ny_ - 1, cy + r); ++iy) {
        cells_[static_cast<std::size_t>(ix * ny_ + iy)].push_back(static_cast<int>(k));
      }
    }
  }
}

double Track::wrap(double s) const
{
  double r = std::fmod(s, length_);
  return r < 0.0 ? r + length_ : r;
}

double Track::progress_delta(double a, double b) const
{
  return std::remainder(b - a, length_);
}

Eigen::Vector2d Track::point_at(double s) const
{
  const double w = wrap(s) / ds_;
  const auto i = static_cast<std::size_t>(w) % points_.size();
  const double a = w - std::floor(w);
  return (1.0 - a) * points_[i] + a * points_[(i + 1) % points_.size()];
}

double Track::heading_at(double s) const
{
  const double w = wrap(s) / ds_;
  const auto i = static_cast<std::size_t>(w) % points_.size();
  const double a = w - std::floor(w);
  return heading_[i] + a * wrap_angle(heading_[(i + 1) % points_.size()] - heading_[i]);
}

double Track::curvature_at(double s) const
{
  const double w = wrap(s) / ds_;
  const auto i = static_cast<std::size_t>(w) % points_.size();
  const double a = w - std::floor(w);
  return (1.0 - a) * curvature_[i] + a * curvature_[(i + 1) % points_.size()];
}

std::size_t Track::nearest_index(const Eigen::Vector2d & p) const
{
  const int cx = static_cast<int>(std::floor((p.x() - origin_.x()) / cell_));
  const int cy = static_cast<int>(std::floor((p.y() - origin_.y()) / cell_));
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_k = 0;
  if (cx >= 0 && cx < nx_ && cy >= 0 && cy < ny_) {
    const auto & cell = cells_[static_cast<std::size_t>(cx * ny_ + cy)];
    for (const int k : cell) {
      const double d = (points_[static_cast<std::size_t>(k)] - p).squaredNorm();
      if (d < best) {
        best = d;
        best_k = static_cast<std::size_t>(k);
      }
    }
    if (!cell.empty()) {
      return best_k;
    }
  }
  for (std::size_t k = 0; k < points_.size(); ++k) {
    const double d = (points_[k] - p).squaredNorm();
    if (d < best) {
      best = d;
      best_k = k;
    }
  }
  return best_k;
}

TrackFrame Track::project(const Eigen::Vector2d & p, double heading) const
{
  const std::size_t n = points_.size();
  const std::size_t i = nearest_index(p);
  double best_d = std::numeric_limits<double>::infinity();
  TrackFrame f;
  for (const std::size_t a : {(i + n - 1) % n, i}) {
    const std::size_t b = (a + 1) % n;
    const Eigen::Vector2d seg = points_[b] - points_[a];
    const double len2 = seg.squaredNorm();
    const double t = std::clamp((p - points_[a]).dot(seg) / len2, 0.0, 1.0);
    const Eigen::Vector2d foot = points_[a] + t * seg;
    const double d = (p - foot).norm();
    if (d < best_d) {
      best_d = d;
      const Eigen::Vector2d tangent = seg / std::sqrt(len2);
      const Eigen::Vector2d rel = p - foot;
      f.s = wrap((static_cast<double>(a) + t) * ds_);
      f.e_y = tangent.x() * rel.y() - tangent.y() * rel.x();
      f.e_psi = wrap_angle(heading - heading_at(f.s));
    }
  }
  f.in_corridor = std::abs(f.e_y) <= half_width_;
  return f;
}

TrackFrame track_frame(const Track & track, const Vec & x)
{
  return track.project(Eigen::Vector2d(x(car_index::px), x(car_index::py)), x(car_index::psi));
}

double corridor_limit(const Track & track, const CarParams & p)
{
  return track.half_width() - p.vehicle_half_width;
}

bool car_state_admissible(const Track & track, const CarParams & p, const Vec & x)
{
  using namespace car_index;
  if (!x.allFinite()) {
    return false;
  }
  if (x(vx) < p.v_min || x(vx) > p.v_max || std::abs(x(delta)) > p.steer_limit + 1e-9) {
    return false;
  }
  return std::abs(track_frame(track, x).e_y) <= corridor_limit(track, p);
}

}  // namespace dualgk
