#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "carflow/quadrature.hpp"

namespace carflow {
namespace partition {

/// Finite union of disjoint open intervals, kept sorted.
class IntervalUnion {
 public:
  IntervalUnion() = default;
  explicit IntervalUnion(std::vector<std::pair<double, double>> intervals)
      : intervals_(std::move(intervals)) {
    std::sort(intervals_.begin(), intervals_.end());
    for (std::size_t i = 0; i < intervals_.size(); ++i) {
      if (intervals_[i].second <= intervals_[i].first)
        throw std::invalid_argument("IntervalUnion: degenerate interval");
      if (i > 0 && intervals_[i].first < intervals_[i - 1].second)
        throw std::invalid_argument("IntervalUnion: intervals overlap");
    }
  }

  double measure() const {
    long double m = 0.0L;
    for (const auto& [a, b] : intervals_) m += static_cast<long double>(b) - a;
    return static_cast<double>(m);
  }

  IntervalUnion translated(double x) const {
    IntervalUnion out;
    out.intervals_ = intervals_;
    for (auto& [a, b] : out.intervals_) {
      a += x;
      b += x;
    }
    return out;
  }

  /// Lebesgue measure of the overlap with another union (two-pointer sweep).
  double intersection_measure(const IntervalUnion& other) const {
    long double m = 0.0L;
    std::size_t i = 0, j = 0;
    while (i < intervals_.size() && j < other.intervals_.size()) {
      const double lo = std::max(intervals_[i].first, other.intervals_[j].first);
      const double hi = std::min(intervals_[i].second, other.intervals_[j].second);
      if (hi > lo) m += static_cast<long double>(hi) - lo;
      if (intervals_[i].second < other.intervals_[j].second)
        ++i;
      else
        ++j;
    }
    return static_cast<double>(m);
  }

  const std::vector<std::pair<double, double>>& intervals() const { return intervals_; }

 private:
  std::vector<std::pair<double, double>> intervals_;
};

/// |O (symmetric difference) (O + x)|. Translation preserves measure, so this
/// is 2(|O| - |O intersect (O+x)|).
inline double sym_diff_measure(const IntervalUnion& o, double x) {
  return 2.0 * (o.measure() - o.intersection_measure(o.translated(x)));
}

/// Decay profile h: strictly decreasing on (0,inf), h(0+)=inf, h(inf)=0,
/// with int_0^1 h finite.
struct DecayProfile {
  std::string name;
  std::function<double(double)> h;
  std::function<double(double)> h_inv;
  std::function<double(double)> integral0;  // int_0^x h(t) dt
  std::optional<double> mu;                 // set for the power law h(x) = x^{mu-1}
};

inline DecayProfile power_profile(double mu) {
  if (!(mu > 0.0 && mu < 1.0)) throw std::invalid_argument("power_profile: mu must be in (0,1)");
  DecayProfile prof;
  prof.name = "power:mu=" + std::to_string(mu);
  prof.h = [mu](double x) { return std::pow(x, mu - 1.0); };
  prof.h_inv = [mu](double y) { return std::pow(y, -1.0 / (1.0 - mu)); };
  prof.integral0 = [mu](double x) { return std::pow(x, mu) / mu; };
  prof.mu = mu;
  return prof;
}

/// Wraps user-supplied h and h_inv, validating monotonicity and the
/// integrability of h at 0 (the harmonic profile 1/x is rejected here).
inline DecayProfile make_profile(const std::string& name, std::function<double(double)> h,
                                 std::function<double(double)> h_inv) {
  // monotonicity spot-check
  double prev = h(std::ldexp(1.0, -30));
  for (int k = -29; k <= 20; ++k) {
    const double cur = h(std::ldexp(1.0, k));
    if (!(cur < prev)) throw std::invalid_argument("make_profile: h is not strictly decreasing");
    prev = cur;
  }
  // int_0^1 h < inf: dyadic shell values must decay toward 0
  double small_shell = 0.0, big_shell = 0.0;
  for (int k = -40; k < -32; ++k)
    small_shell += quadrature::gl16(h, std::ldexp(1.0, k), std::ldexp(1.0, k + 1));
  for (int k = -8; k < 0; ++k)
    big_shell += quadrature::gl16(h, std::ldexp(1.0, k), std::ldexp(1.0, k + 1));
  if (small_shell > 0.5 * big_shell)
    throw std::invalid_argument("make_profile: int_0^1 h(t) dt diverges");
  DecayProfile prof;
  prof.name = name;
  prof.h = std::move(h);
  prof.h_inv = std::move(h_inv);
  prof.integral0 = [hf = prof.h](double x) {
    double acc = 0.0;
    for (int k = -48; ; ++k) {
      const double lo = std::ldexp(x, k), hi = std::ldexp(x, k + 1);
      acc += quadrature::gl16(hf, lo, hi);
      if (k == -1) break;
    }
    return acc;
  };
  return prof;
}

/// The partition a_0 = 0, a_n = sum_{k<=n} h^{-1}(k), its intervals
/// I_n = (a_n, a_{n+1}), and the union O of even-indexed intervals.
/// Sums are accumulated in extended precision; the truncation tail
/// a_limit - a_{n_max} is carried as an explicit error bar on O-measures.
struct PartitionScheme {
  DecayProfile profile;
  std::vector<long double> a;  // a_0 .. a_{n_max}
  double a_limit = 0.0;
  double tail_bound = 0.0;  // certified bound on sum_{k > n_max} h^{-1}(k)
  int n_max = 0;

  double interval_length(int n) const { return static_cast<double>(a[n + 1] - a[n]); }

  /// Union of even-indexed intervals I_0, I_2, ..., truncated at n_max.
  /// Stops early once interval lengths fall below the double-precision ulp of
  /// the endpoints; the dropped measure is bounded by the truncation tail of
  /// the remaining a_n increments and stays far below the chain slack.
  IntervalUnion even_union() const {
    std::vector<std::pair<double, double>> iv;
    for (int n = 0; n + 1 < static_cast<int>(a.size()); n += 2) {
      const double lo = static_cast<double>(a[n]), hi = static_cast<double>(a[n + 1]);
      if (hi <= lo) break;
      iv.emplace_back(lo, hi);
    }
    return IntervalUnion(std::move(iv));
  }

  double truncation_tail() const { return a_limit - static_cast<double>(a.back()); }
};

namespace detail {

/// sum_{k > n} h^{-1}(k) ~ int_{n+1/2}^{inf} h^{-1}(t) dt, by the
/// substitution t = T/v mapping the tail onto (0, 1].
inline double tail_sum_estimate(const DecayProfile& prof, int n) {
  const double T = n + 0.5;
  auto f = [&prof, T](double v) { return prof.h_inv(T / v) * T / (v * v); };
  double acc = 0.0;
  for (int k = -40; k < 0; ++k)
    acc += quadrature::gl16(f, std::ldexp(1.0, k), std::ldexp(1.0, k + 1));
  return acc;
}

}  // namespace detail

inline PartitionScheme build_from_h(const DecayProfile& prof, int n_max) {
  if (n_max < 2) throw std::invalid_argument("build_from_h: n_max must be at least 2");
  PartitionScheme scheme;
  scheme.profile = prof;
  scheme.n_max = n_max;
  scheme.a.reserve(static_cast<std::size_t>(n_max) + 1);
  long double acc = 0.0L;
  scheme.a.push_back(acc);
  for (int k = 1; k <= n_max; ++k) {
    acc += static_cast<long double>(prof.h_inv(static_cast<double>(k)));
    scheme.a.push_back(acc);
  }
  scheme.a_limit = static_cast<double>(acc) + detail::tail_sum_estimate(prof, n_max);
  const double hin = prof.h_inv(static_cast<double>(n_max + 1));
  scheme.tail_bound = prof.integral0(hin) - n_max * hin;
  return scheme;
}

inline PartitionScheme build_from_mu(double mu, int n_max) {
  return build_from_h(power_profile(mu), n_max);
}

/// sum_n min{x, |I_n|}: head by binary search over the decreasing lengths,
/// tail in closed form as a_limit - a_n.
inline double min_sum(const PartitionScheme& scheme, double x) {
  if (!(x > 0.0)) throw std::invalid_argument("min_sum: x must be positive");
  // |I_n| is strictly decreasing; find the first n with |I_n| <= x
  int lo = 0, hi = scheme.n_max;  // interval indices 0 .. n_max-1
  while (lo < hi) {
    const int mid = (lo + hi) / 2;
    if (scheme.interval_length(mid) <= x)
      hi = mid;
    else
      lo = mid + 1;
  }
  const int crossover = lo;
  return x * crossover + (scheme.a_limit - static_cast<double>(scheme.a[crossover]));
}

/// The four-term bound chain
///   x(h(x)-1) <= |O (sym diff) (O+x)| <= 2 sum_n min{x,|I_n|} <= 2 int_0^x h.
struct ChainReport {
  double lower = 0.0;
  double mid = 0.0;        // symmetric-difference measure on the truncated O
  double mid_error = 0.0;  // 2 * truncation tail
  double upper_sum = 0.0;
  double upper_int = 0.0;
  bool pass = false;
};

inline ChainReport check_oestimate_chain(const PartitionScheme& scheme, double x) {
  if (!(x > 0.0)) throw std::invalid_argument("check_oestimate_chain: x must be positive");
  ChainReport rep;
  rep.lower = x * (scheme.profile.h(x) - 1.0);
  const IntervalUnion o = scheme.even_union();
  rep.mid = sym_diff_measure(o, x);
  rep.mid_error = 2.0 * scheme.truncation_tail();
  rep.upper_sum = 2.0 * min_sum(scheme, x);
  rep.upper_int = 2.0 * scheme.profile.integral0(x);
  const double slack = 1e-9 * (1.0 + rep.upper_int);
  rep.pass = rep.lower <= rep.mid + rep.mid_error + slack &&
             rep.mid - rep.mid_error <= rep.upper_sum + slack &&
             rep.upper_sum <= rep.upper_int + slack;
  return rep;
}

}  // namespace partition
}  // namespace carflow
