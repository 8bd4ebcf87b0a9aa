#pragma once

#include "dualgk/models.hpp"
#include "dualgk/smid.hpp"

#include <Eigen/Dense>
#include <vector>

namespace dualgk
{

// State [p_x, p_y, psi, v_x, v_y, omega, delta]; input [F_d, F_b, delta_rate]; parameter mu.
struct CarParams
{
  double m{3.5};
  double l_f{0.16};
  double l_r{0.16};
  double J_z{0.08};
  double B_f{6.0};
  double C_f{1.4};
  double B_r{6.0};
  double C_r{1.4};
  double rho{1.2};
  double A_front{0.05};
  double C_d_aero{0.6};
  double k_d{0.0};
  double k_b{0.5};
  double f_r{0.02};
  double gravity{9.81};
  double slip_eps{0.5};
  double steer_limit{0.4};
  double steer_rate_limit{3.0};
  double drive_max{20.0};
  double brake_max{20.0};
  double v_min{0.3};
  double v_max{9.0};
  double vehicle_half_width{0.1};
  double disturbance_bound{0.4};
  ParameterBox mu_bounds{vec({0.2}), vec({2.0})};
};

namespace car_index
{
inline constexpr int px = 0;
inline constexpr int py = 1;
inline constexpr int psi = 2;
inline constexpr int vx = 3;
inline constexpr int vy = 4;
inline constexpr int omega = 5;
inline constexpr int delta = 6;
}  // namespace car_index

struct TireState
{
  double alpha_f{0.0};
  double alpha_r{0.0};
  double Fz_f{0.0};
  double Fz_r{0.0};
  double Fy_f_bar{0.0};  // lateral forces with mu factored out
  double Fy_r_bar{0.0};
};

TireState tire_state(const CarParams & p, const Vec & x);

Vec car_dynamics(const CarParams & p, const Vec & x, const Vec & u, double mu, const Vec & w);

Mat car_regressor(const CarParams & p, const Vec & x);

ModelSpec make_car_model(const CarParams & p, double mu_true);

struct TrackFrame
{
  double s{0.0};
  double e_y{0.0};    // left of the centerline is positive
  double e_psi{0.0};  // heading minus centerline heading, wrapped
  bool in_corridor{true};
};

// Closed centerline resampled at uniform arc length with a spatial hash for projection.
class Track
{
public:
  Track() = default;
  Track(const std::vector<Eigen::Vector2d> & waypoints, double half_width, double ds = 0.05);

  double length() const { return length_; }
  double half_width() const { return half_width_; }
  double ds() const { return ds_; }
  std::size_t size() const { return points_.size(); }
  const std::vector<Eigen::Vector2d> & points() const { return points_; }

  Eigen::Vector2d point_at(double s) const;
  double heading_at(double s) const;
  double curvature_at(double s) const;
  double wrap(double s) const;
  // Signed progress difference b - a in (-L/2, L/2].
  double progress_delta(double a, double b) const;

  TrackFrame project(const Eigen::Vector2d & p, double heading) const;

private:
  std::size_t nearest_index(const Eigen::Vector2d & p) const;

  std::vector<Eigen::Vector2d> points_;
  std::vector<double> heading_;
  std::vector<double> curvature_;
  double length_{0.0};
  double half_width_{0.0};
  double ds_{0.05};
  Eigen::Vector2d origin_{0.0, 0.0};
  double cell_{1.0};
  int nx_{0};
  int ny_{0};
  std::vector<std::vector<int>> cells_;
};

TrackFrame track_frame(const Track & track, const Vec & x);

// Lateral limit for the vehicle reference point.
double corridor_limit(const Track & track, const CarParams & p);

bool car_state_admissible(const Track & track, const CarParams & p, const Vec & x);

}  // namespace dualgk
