/**
 * @file path.hpp
 * @brief Uniform-grid càdlàg paths and the primitive path deformations.
 *
 * A SampledPath stores one value vector per grid node t0 + k*dt. Between
 * nodes the path is a left-closed step function: the value on [t_k, t_{k+1})
 * is values[k]. Before t0 the path is identically zero.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "pathctl/detail/numeric.hpp"

namespace pathctl {

class SampledPath {
 public:
  /// `values` is node-major: values[k*dim + d] is coordinate d at node k.
  SampledPath(double t0, double dt, std::size_t dim, std::vector<double> values)
      : t0_(t0), dt_(dt), dim_(dim), values_(std::move(values)) {
    if (!(dt_ > 0.0) || !std::isfinite(dt_)) throw GridAlignmentError("SampledPath: dt must be positive");
    if (dim_ == 0) throw DimensionError("SampledPath: dimension must be at least 1");
    if (values_.empty() || values_.size() % dim_ != 0) {
      throw DimensionError("SampledPath: need at least one node and a whole number of value vectors");
    }
  }

  static SampledPath scalar(double t0, double dt, std::vector<double> values) {
    return SampledPath(t0, dt, 1, std::move(values));
  }

  /// Builds a scalar path by sampling `fn` at nodes t0, t0+dt, ..., t0+(n-1)dt.
  template <typename Fn>
  static SampledPath sample(double t0, double dt, std::size_t n, Fn&& fn) {
    std::vector<double> v(n);
    for (std::size_t k = 0; k < n; ++k) v[k] = fn(t0 + static_cast<double>(k) * dt);
    return scalar(t0, dt, std::move(v));
  }

  double t0() const noexcept { return t0_; }
  double dt() const noexcept { return dt_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return values_.size() / dim_; }
  double time(std::size_t k) const noexcept { return t0_ + static_cast<double>(k) * dt_; }
  double end_time() const noexcept { return time(size() - 1); }

  std::span<const double> at(std::size_t k) const { return {values_.data() + k * dim_, dim_}; }
  std::span<const double> last() const { return at(size() - 1); }
  std::span<const double> data() const noexcept { return values_; }

  /// Scalar accessors; only meaningful for dim() == 1.
  double operator[](std::size_t k) const { return values_[k * dim_]; }
  double last_scalar() const { return values_[(size() - 1) * dim_]; }

  /// Grid index of time `s`; throws if `s` is off the grid.
  std::int64_t index_of(double s) const { return detail::grid_steps(s - t0_, dt_, "time"); }

  /// Value at an arbitrary time under the càdlàg step convention. Zero before
  /// t0; throws past the end of the path.
  std::vector<double> value_at(double s) const {
    if (s < t0_ - detail::kGridTolerance * dt_) return std::vector<double>(dim_, 0.0);
    auto k = static_cast<std::int64_t>(std::floor((s - t0_) / dt_ + detail::kGridTolerance));
    if (k >= static_cast<std::int64_t>(size())) {
      if (std::abs(s - end_time()) > detail::kGridTolerance * dt_) {
        throw std::out_of_range("SampledPath::value_at: time past end of path");
      }
      k = static_cast<std::int64_t>(size()) - 1;
    }
    auto v = at(static_cast<std::size_t>(std::max<std::int64_t>(k, 0)));
    return {v.begin(), v.end()};
  }

  double scalar_at(double s) const { return value_at(s)[0]; }

  friend bool operator==(const SampledPath&, const SampledPath&) = default;

 private:
  double t0_;
  double dt_;
  std::size_t dim_;
  std::vector<double> values_;
};

/// A state path and a control path on the same time domain.
struct PathPair {
  SampledPath state;
  SampledPath control;

  PathPair(SampledPath s, SampledPath c) : state(std::move(s)), control(std::move(c)) {
    if (state.size() != control.size() || !detail::same_step(state.dt(), control.dt()) ||
        std::abs(state.t0() - control.t0()) > detail::kGridTolerance * state.dt()) {
      throw GridAlignmentError("PathPair: state and control must share t0, dt and length");
    }
  }
};

/// Y_{t,delta}: appends delta/dt copies of the last value.
inline SampledPath flat_extend(const SampledPath& p, double delta) {
  if (delta < 0.0) throw GridAlignmentError("flat_extend: negative extension");
  const auto steps = detail::grid_steps(delta, p.dt(), "extension");
  std::vector<double> v(p.data().begin(), p.data().end());
  auto last = p.last();
  v.reserve(v.size() + static_cast<std::size_t>(steps) * p.dim());
  for (std::int64_t k = 0; k < steps; ++k) v.insert(v.end(), last.begin(), last.end());
  return SampledPath(p.t0(), p.dt(), p.dim(), std::move(v));
}

/// Y_t^h: adds h to the last value only.
inline SampledPath bump(const SampledPath& p, std::span<const double> h) {
  if (h.size() != p.dim()) throw DimensionError("bump: dimension mismatch");
  std::vector<double> v(p.data().begin(), p.data().end());
  const std::size_t base = (p.size() - 1) * p.dim();
  for (std::size_t d = 0; d < p.dim(); ++d) v[base + d] += h[d];
  return SampledPath(p.t0(), p.dt(), p.dim(), std::move(v));
}

inline SampledPath bump(const SampledPath& p, double h) {
  return bump(p, std::span<const double>(&h, 1));
}

/// Bumps a single coordinate of the last value.
inline SampledPath bump_coordinate(const SampledPath& p, std::size_t coord, double h) {
  if (coord >= p.dim()) throw DimensionError("bump_coordinate: coordinate out of range");
  std::vector<double> e(p.dim(), 0.0);
  e[coord] = h;
  return bump(p, e);
}

/// Replaces the last value by `alpha` (Z_t^{alpha - z_t}).
inline SampledPath substitute_last(const SampledPath& z, std::span<const double> alpha) {
  if (alpha.size() != z.dim()) throw DimensionError("substitute_last: dimension mismatch");
  std::vector<double> v(z.data().begin(), z.data().end());
  std::copy(alpha.begin(), alpha.end(), v.begin() + static_cast<std::ptrdiff_t>((z.size() - 1) * z.dim()));
  return SampledPath(z.t0(), z.dt(), z.dim(), std::move(v));
}

inline SampledPath substitute_last(const SampledPath& z, double alpha) {
  return substitute_last(z, std::span<const double>(&alpha, 1));
}

/// Skorokhod-type distance ||P_{t,s-t} - Q_s||_inf + |s - t|, where the shorter
/// path is flat-extended to the end of the longer one.
inline double lambda_metric(const SampledPath& p, const SampledPath& q) {
  if (!detail::same_step(p.dt(), q.dt())) throw GridAlignmentError("lambda_metric: incompatible dt");
  if (std::abs(p.t0() - q.t0()) > detail::kGridTolerance * p.dt()) {
    throw GridAlignmentError("lambda_metric: paths must share t0");
  }
  if (p.dim() != q.dim()) throw DimensionError("lambda_metric: dimension mismatch");
  const SampledPath& shorter = p.size() <= q.size() ? p : q;
  const SampledPath& longer = p.size() <= q.size() ? q : p;
  const std::size_t gap = longer.size() - shorter.size();
  double sup = 0.0;
  for (std::size_t k = 0; k < longer.size(); ++k) {
    auto a = shorter.at(std::min(k, shorter.size() - 1));
    auto b = longer.at(k);
    double sq = 0.0;
    for (std::size_t d = 0; d < p.dim(); ++d) sq += (a[d] - b[d]) * (a[d] - b[d]);
    sup = std::max(sup, std::sqrt(sq));
  }
  return sup + static_cast<double>(gap) * p.dt();
}

/// Z_t (x) A: follows `z` strictly before `t` and `a` from `t` on. `a` must
/// start exactly at `t`; `z` must cover [z.t0, t) without gaps.
inline SampledPath concat_control(const SampledPath& z, const SampledPath& a, double t) {
  if (!detail::same_step(z.dt(), a.dt())) throw GridAlignmentError("concat_control: incompatible dt");
  if (z.dim() != a.dim()) throw DimensionError("concat_control: dimension mismatch");
  const auto k_t = z.index_of(t);
  if (k_t < 0) throw GridAlignmentError("concat_control: splice time before history start");
  if (std::abs(a.t0() - t) > detail::kGridTolerance * z.dt()) {
    throw GridAlignmentError("concat_control: control must start at the splice time");
  }
  if (k_t > static_cast<std::int64_t>(z.size())) {
    throw GridAlignmentError("concat_control: gap between history and splice time");
  }
  const auto prefix = static_cast<std::size_t>(k_t) * z.dim();
  std::vector<double> v(z.data().begin(), z.data().begin() + static_cast<std::ptrdiff_t>(prefix));
  v.insert(v.end(), a.data().begin(), a.data().end());
  const double t0 = k_t == 0 ? a.t0() : z.t0();
  return SampledPath(t0, z.dt(), z.dim(), std::move(v));
}

/// Sup norm over nodes of the Euclidean norm of each value.
inline double sup_norm(const SampledPath& p) {
  double sup = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    double sq = 0.0;
    for (double x : p.at(k)) sq += x * x;
    sup = std::max(sup, std::sqrt(sq));
  }
  return sup;
}

/// Prefix of `p` holding nodes 0..k (inclusive).
inline SampledPath prefix(const SampledPath& p, std::size_t k) {
  if (k >= p.size()) throw std::out_of_range("prefix: node out of range");
  const auto n = (k + 1) * p.dim();
  return SampledPath(p.t0(), p.dt(), p.dim(), std::vector<double>(p.data().begin(), p.data().begin() + static_cast<std::ptrdiff_t>(n)));
}

// CSV: header `time,v1,...,vn`, one row per node.

inline void write_csv(std::ostream& os, const SampledPath& p) {
  os << "time";
  for (std::size_t d = 1; d <= p.dim(); ++d) os << ",v" << d;
  os << '\n';
  for (std::size_t k = 0; k < p.size(); ++k) {
    os << detail::format_double(p.time(k));
    for (double x : p.at(k)) os << ',' << detail::format_double(x);
    os << '\n';
  }
}

inline SampledPath read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("time", 0) != 0) {
    throw std::invalid_argument("read_csv: missing `time,...` header");
  }
  const auto dim = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
  if (dim == 0) throw std::invalid_argument("read_csv: header has no value columns");
  std::vector<double> times;
  std::vector<double> values;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(row, cell, ',')) {
      if (col == 0) {
        times.push_back(detail::parse_double(cell));
      } else {
        values.push_back(detail::parse_double(cell));
      }
      ++col;
    }
    if (col != dim + 1) throw std::invalid_argument("read_csv: ragged row");
  }
  if (times.empty()) throw std::invalid_argument("read_csv: no rows");
  if (times.size() == 1) return SampledPath(times[0], 1.0, dim, std::move(values));
  const double dt = times[1] - times[0];
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (std::abs((times[k] - times[0]) - static_cast<double>(k) * dt) > 1e-9 * std::max(1.0, std::abs(times[k]))) {
      throw GridAlignmentError("read_csv: rows are not on a uniform grid");
    }
  }
  return SampledPath(times[0], dt, dim, std::move(values));
}

}  // namespace pathctl
