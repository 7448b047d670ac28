#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hypergat/error.hpp"

namespace hypergat {

inline double accuracy(std::span<const int> preds, std::span<const int> labels) {
  if (preds.size() != labels.size())
    throw UsageError("accuracy: prediction/label length mismatch");
  if (preds.empty()) throw UsageError("accuracy: empty inputs");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (preds[i] == labels[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

struct RunSummary {
  std::vector<double> accuracies;
  std::vector<std::uint64_t> seeds;
  double mean = 0.0;
  bool has_std = false;   // sample std needs n >= 2
  double stddev = 0.0;

  std::size_t runs() const { return accuracies.size(); }
};

inline RunSummary summarize_runs(std::vector<double> accuracies,
                                 std::vector<std::uint64_t> seeds) {
  if (accuracies.empty() || accuracies.size() != seeds.size())
    throw UsageError("summarize_runs: need one accuracy per seed");
  RunSummary s;
  s.accuracies = std::move(accuracies);
  s.seeds = std::move(seeds);
  double acc = 0.0;
  for (double a : s.accuracies) acc += a;
  s.mean = acc / static_cast<double>(s.runs());
  if (s.runs() >= 2) {
    double ss = 0.0;
    for (double a : s.accuracies) ss += (a - s.mean) * (a - s.mean);
    s.has_std = true;
    s.stddev = std::sqrt(ss / static_cast<double>(s.runs() - 1));
  }
  return s;
}

// ---------------------------------------------------------------------------
// regularized incomplete beta, needed for the t-distribution tail

namespace detail {

// Continued-fraction evaluation (modified Lentz); converges far below the
// 1e-8 absolute target for the (a, b) ranges a t-test produces.
inline double beta_cont_fraction(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-14;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 500; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) return h;
  }
  throw NumericError("incomplete beta continued fraction did not converge");
}

}  // namespace detail

inline double reg_incomplete_beta(double a, double b, double x) {
  if (a <= 0.0 || b <= 0.0)
    throw UsageError("incomplete beta parameters must be positive");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = a * std::log(x) + b * std::log1p(-x) -
                          (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0))
    return front * detail::beta_cont_fraction(a, b, x) / a;
  return 1.0 - front * detail::beta_cont_fraction(b, a, 1.0 - x) / b;
}

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
};

// Unequal-variance t-test with Welch-Satterthwaite degrees of freedom and a
// two-sided p from the t tail: p = I_{df/(df+t^2)}(df/2, 1/2).
inline WelchResult welch_t_test(std::span<const double> a,
                                std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2)
    throw UsageError("welch_t_test needs at least two values per sample");
  const auto na = static_cast<double>(a.size());
  const auto nb = static_cast<double>(b.size());
  double ma = 0.0, mb = 0.0;
  for (double v : a) ma += v;
  for (double v : b) mb += v;
  ma /= na;
  mb /= nb;
  double va = 0.0, vb = 0.0;
  for (double v : a) va += (v - ma) * (v - ma);
  for (double v : b) vb += (v - mb) * (v - mb);
  va /= na - 1.0;
  vb /= nb - 1.0;

  WelchResult r;
  if (va == 0.0 && vb == 0.0) {
    // degenerate samples: identical means are indistinguishable, distinct
    // means are separated with certainty
    r.t = 0.0;
    r.df = na + nb - 2.0;
    r.p = ma == mb ? 1.0 : 0.0;
    return r;
  }
  const double sa = va / na, sb = vb / nb;
  const double se2 = sa + sb;
  r.t = (ma - mb) / std::sqrt(se2);
  r.df = se2 * se2 /
         (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
  const double x = r.df / (r.df + r.t * r.t);
  r.p = reg_incomplete_beta(r.df / 2.0, 0.5, x);
  if (r.p < 0.0) r.p = 0.0;
  if (r.p > 1.0) r.p = 1.0;
  return r;
}

}  // namespace hypergat
