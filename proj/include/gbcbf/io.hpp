#pragma once

#include "gbcbf/sim.hpp"

#include <cstdio>
#include <ostream>

namespace gbcbf {

/// Shortest-form-independent rendering with 17 significant digits.
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// t,x1..xn,u1..um,u_nom_1..u_nom_m,status,h,h_b,traj_margin,term_margin[,theta_1..theta_p],iters
inline std::string trajectory_header(int n, int m, int p) {
  std::string s = "t";
  for (int i = 1; i <= n; ++i) s += ",x" + std::to_string(i);
  for (int i = 1; i <= m; ++i) s += ",u" + std::to_string(i);
  for (int i = 1; i <= m; ++i) s += ",u_nom_" + std::to_string(i);
  s += ",status,h,h_b,traj_margin,term_margin";
  for (int i = 1; i <= p; ++i) s += ",theta_" + std::to_string(i);
  s += ",iters";
  return s;
}

inline void write_trajectory_csv(std::ostream& os, const TrajectoryLog& log, int n, int m, int p) {
  os << trajectory_header(n, m, p) << '\n';
  for (const auto& r : log.records) {
    std::string line = fmt_double(r.t);
    auto put = [&](double v) {
      line += ',';
      line += fmt_double(v);
    };
    for (int i = 0; i < n; ++i) put(r.x(i));
    for (int i = 0; i < m; ++i) put(r.u(i));
    for (int i = 0; i < m; ++i) put(r.u_nom(i));
    line += ',';
    line += to_string(r.status);
    put(r.h);
    put(r.h_b);
    put(r.traj_margin);
    put(r.term_margin);
    for (int i = 0; i < p; ++i) put(r.theta(i));
    line += ',' + std::to_string(r.iterations);
    os << line << '\n';
  }
}

/// Grid columns: row,col,<state coordinates>,traj_margin,term_margin,inside[,kernel]
inline std::string grid_header(int n, bool with_kernel) {
  std::string s = "row,col";
  for (int i = 1; i <= n; ++i) s += ",x" + std::to_string(i);
  s += ",traj_margin,term_margin,inside";
  if (with_kernel) s += ",kernel";
  return s;
}

inline void write_grid_row(std::ostream& os, const std::vector<GridCell>& cells,
                           const std::function<bool(const Vec&)>& kernel = {}) {
  for (const auto& c : cells) {
    std::string line = std::to_string(c.row) + ',' + std::to_string(c.col);
    for (int i = 0; i < c.x.size(); ++i) line += ',' + fmt_double(c.x(i));
    line += ',' + fmt_double(c.rec.traj_margin) + ',' + fmt_double(c.rec.term_margin);
    line += c.rec.inside ? ",1" : ",0";
    if (kernel) line += kernel(c.x) ? ",1" : ",0";
    os << line << '\n';
  }
}

}  // namespace gbcbf
