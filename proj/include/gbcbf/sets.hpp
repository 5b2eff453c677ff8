#pragma once

#include "gbcbf/benchmarks/bundle.hpp"
#include "gbcbf/filter.hpp"

#include <algorithm>
#include <thread>

namespace gbcbf {

/// Standard backup method, generalized (switched expander), adaptive (parameterized expander).
enum class Variant { bcbf, gb, agb };

inline const char* to_string(Variant v) {
  switch (v) {
    case Variant::bcbf: return "bcbf";
    case Variant::gb: return "gb";
    case Variant::agb: return "agb";
  }
  return "?";
}

inline Variant parse_variant(const std::string& s) {
  if (s == "bcbf") return Variant::bcbf;
  if (s == "gb") return Variant::gb;
  if (s == "agb") return Variant::agb;
  throw InvalidArgument("unknown variant '" + s + "' (expected bcbf, gb or agb)");
}

/// Law that generates the implicit-set flow for a variant.
inline ControlLaw flow_law_for(const ProblemBundle& b, Variant v, const std::string& expander = "") {
  switch (v) {
    case Variant::bcbf: return b.k_b;
    case Variant::gb: return as_control_law(b.switched(expander.empty() ? b.default_expander : expander));
    case Variant::agb: return as_control_law(b.switched_param());
  }
  throw InvalidArgument("flow_law_for: bad variant");
}

struct MembershipRecord {
  double traj_margin = 0.0;
  double term_margin = 0.0;
  bool inside = false;
};

/// Margins of x in the implicit set generated by `law`; a diverged flow gives -inf margins.
inline MembershipRecord implicit_membership(const Vec& x, const ProblemBundle& b, const ControlLaw& law,
                                            const Vec& theta = Vec()) {
  require(x.size() == b.sys.n, "implicit_membership: state has wrong dimension");
  MembershipRecord rec;
  try {
    const FlowGrid flow = integrate_flow(b.sys, law, x, theta, b.cfg, false);
    const FlowMargins fm = flow_margins(flow, b.h, b.h_b);
    rec.traj_margin = fm.traj;
    rec.term_margin = fm.term;
  } catch (const DivergedFlowError&) {
    rec.traj_margin = -std::numeric_limits<double>::infinity();
    rec.term_margin = -std::numeric_limits<double>::infinity();
  }
  rec.inside = rec.traj_margin >= 0.0 && rec.term_margin >= 0.0;
  return rec;
}

inline MembershipRecord implicit_membership(const Vec& x, const ProblemBundle& b, Variant v,
                                            const std::string& expander = "", const Vec& theta = Vec()) {
  Vec th = theta;
  if (v == Variant::agb && th.size() == 0) th = b.theta0;
  if (v != Variant::agb) th = Vec();
  return implicit_membership(x, b, flow_law_for(b, v, expander), th);
}

/// Axis-aligned 2-D (or 1-D) slice through state space.
struct GridSpec {
  std::vector<int> axes;                         // free state coordinates (1 or 2)
  std::vector<std::pair<double, double>> bounds;  // per free axis
  std::vector<int> resolution;                   // per free axis, >= 1
  Vec slice;                                     // values of all coordinates; free ones are overwritten

  void validate(int n) const {
    require(!axes.empty() && axes.size() <= 2, "grid_scan: between one and two free axes are supported");
    require(bounds.size() == axes.size() && resolution.size() == axes.size(),
            "grid_scan: bounds/resolution must match the free axes");
    require(slice.size() == n, "grid_scan: slice has wrong dimension");
    for (std::size_t k = 0; k < axes.size(); ++k) {
      require(axes[k] >= 0 && axes[k] < n, "grid_scan: axis index out of range");
      require(resolution[k] >= 1, "grid_scan: resolution must be at least 1");
      require(bounds[k].first <= bounds[k].second, "grid_scan: empty bounds");
    }
    if (axes.size() == 2) require(axes[0] != axes[1], "grid_scan: repeated axis");
  }

  int rows() const { return axes.size() == 2 ? resolution[1] : 1; }
  int cols() const { return resolution[0]; }

  static double coord(const std::pair<double, double>& b, int res, int i) {
    return res == 1 ? b.first : b.first + (b.second - b.first) * i / (res - 1);
  }

  /// State at cell (row, col); col runs along the first free axis.
  Vec point(int row, int col) const {
    Vec x = slice;
    x(axes[0]) = coord(bounds[0], resolution[0], col);
    if (axes.size() == 2) x(axes[1]) = coord(bounds[1], resolution[1], row);
    return x;
  }
};

struct GridCell {
  int row = 0;
  int col = 0;
  Vec x;
  MembershipRecord rec;
};

/**
 * Evaluates `cell_fn` on every grid cell, handing each finished row to `sink`
 * in row-major order. Cells within a row may be split across `threads`
 * workers; output order does not depend on the thread count.
 */
template <class CellFn, class Sink>
void grid_scan(const GridSpec& spec, int n, CellFn&& cell_fn, Sink&& sink, int threads = 1) {
  spec.validate(n);
  const int cols = spec.cols();
  threads = std::clamp(threads, 1, std::max(1, cols));
  std::vector<GridCell> row_cells(cols);
  for (int r = 0; r < spec.rows(); ++r) {
    auto work = [&](int begin, int end) {
      for (int c = begin; c < end; ++c) {
        GridCell& cell = row_cells[c];
        cell.row = r;
        cell.col = c;
        cell.x = spec.point(r, c);
        cell.rec = cell_fn(cell.x);
      }
    };
    if (threads == 1) {
      work(0, cols);
    } else {
      std::vector<std::thread> pool;
      const int chunk = (cols + threads - 1) / threads;
      for (int t = 0; t < threads; ++t) {
        const int b = t * chunk, e = std::min(cols, b + chunk);
        if (b < e) pool.emplace_back(work, b, e);
      }
      for (auto& th : pool) th.join();
    }
    sink(static_cast<const std::vector<GridCell>&>(row_cells));
  }
}

/// Convenience overload: membership of every cell for one bundle and variant.
template <class Sink>
void grid_scan(const GridSpec& spec, const ProblemBundle& b, Variant v, const std::string& expander,
               Sink&& sink, int threads = 1) {
  const ControlLaw law = flow_law_for(b, v, expander);
  const Vec theta = v == Variant::agb ? b.theta0 : Vec();
  grid_scan(
      spec, b.sys.n, [&](const Vec& x) { return implicit_membership(x, b, law, theta); },
      std::forward<Sink>(sink), threads);
}

}  // namespace gbcbf
