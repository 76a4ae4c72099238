/*
 * Copyright 2026 the uptake authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

// Statistical procedures for validating uptake measures: rank correlation
// with bootstrap CIs, inter-rater agreement, quantile transforms, median
// tests, residual-gap comparison, OLS outcome regression, t-tests,
// punctuation-cue rates, and the dialog-act phenomenon mapping.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "uptake/corpus.hpp"
#include "uptake/error.hpp"
#include "uptake/parallel.hpp"
#include "uptake/prng.hpp"
#include "uptake/similarity.hpp"

namespace uptake {

// ---------------------------------------------------------------------------
// Distribution helpers

/// P(chi-square, 1 df > x).
inline double chi2_sf_1df(double x) { return std::erfc(std::sqrt(x / 2.0)); }

/// P(standard normal > z).
inline double normal_sf(double z) {
  return 0.5 * std::erfc(z / 1.4142135623730951);
}

inline void require_finite(const std::vector<double>& v, const char* what) {
  for (const double x : v) {
    if (!std::isfinite(x)) {
      throw error(std::string("non-finite value in ") + what);
    }
  }
}

/// 1-based average (mid) ranks; ties share the mean of their rank span.
inline std::vector<double> mid_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size(), 0.0);
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double shared = (static_cast<double>(i + 1) +
                           static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
    i = j + 1;
  }
  return ranks;
}

inline double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) /
         static_cast<double>(v.size());
}

/// Sample (n-1) variance.
inline double sample_variance(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double acc = 0.0;
  for (const double x : v) acc += (x - m) * (x - m);
  return acc / static_cast<double>(v.size() - 1);
}

inline double median_of(std::vector<double> v) {
  if (v.empty()) throw error("median of empty list");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

inline double pearson(const std::vector<double>& x,
                      const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw error("pearson needs two equal-length lists of size >= 2");
  }
  const double mx = mean_of(x), my = mean_of(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw error("zero variance in correlation");
  return sxy / std::sqrt(sxx * syy);
}

// ---------------------------------------------------------------------------
// Spearman correlation and bootstrap CI

struct SpearmanResult {
  double rho = 0.0;
  int n = 0;
  std::optional<double> ci_low;
  std::optional<double> ci_high;
  std::optional<int> iterations;
  int degenerate_skipped = 0;
  bool ci_warning = false;  // set when rho falls outside the interval
};

namespace detail {

inline void check_spearman_input(const std::vector<double>& x,
                                 const std::vector<double>& y) {
  if (x.size() != y.size()) throw error("length mismatch");
  if (x.size() < 3) throw error("need at least 3 observations");
  require_finite(x, "x");
  require_finite(y, "y");
  const auto distinct = [](const std::vector<double>& v) {
    for (const double a : v) {
      if (a != v.front()) return true;
    }
    return false;
  };
  if (!distinct(x) || !distinct(y)) throw error("zero rank variance");
}

}  // namespace detail

/// Pearson correlation of mid-ranks.
inline SpearmanResult spearman(const std::vector<double>& x,
                               const std::vector<double>& y) {
  detail::check_spearman_input(x, y);
  SpearmanResult result;
  result.rho = pearson(mid_ranks(x), mid_ranks(y));
  result.n = static_cast<int>(x.size());
  return result;
}

namespace detail {

inline double percentile_of_sorted(const std::vector<double>& sorted,
                                   double q) {
  if (sorted.empty()) throw error("percentile of empty list");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

}  // namespace detail

/// Percentile bootstrap over resampled index pairs. Degenerate resamples
/// (a constant list) are skipped and counted; more than half degenerate is
/// an error. Deterministic for any job count via per-iteration seeds.
inline SpearmanResult bootstrap_ci(const std::vector<double>& x,
                                   const std::vector<double>& y,
                                   int iterations = 1000, double level = 0.95,
                                   std::uint64_t seed = 0, int jobs = 1) {
  detail::check_spearman_input(x, y);
  if (iterations < 1) throw error("need at least 1 bootstrap iteration");
  if (!(level > 0.0 && level < 1.0)) throw error("level must be in (0,1)");

  SpearmanResult result = spearman(x, y);
  const std::size_t n = x.size();
  std::vector<double> draws(static_cast<std::size_t>(iterations),
                            std::numeric_limits<double>::quiet_NaN());
  parallel_for(draws.size(), jobs, [&](std::size_t it) {
    Prng rng(derive_seed(seed, static_cast<std::uint64_t>(it)));
    std::vector<double> rx(n), ry(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t pick = static_cast<std::size_t>(rng.below(n));
      rx[i] = x[pick];
      ry[i] = y[pick];
    }
    bool const_x = true, const_y = true;
    for (std::size_t i = 1; i < n; ++i) {
      const_x = const_x && rx[i] == rx[0];
      const_y = const_y && ry[i] == ry[0];
    }
    if (const_x || const_y) return;  // leave the NaN marker
    draws[it] = pearson(mid_ranks(rx), mid_ranks(ry));
  });

  std::vector<double> kept;
  kept.reserve(draws.size());
  for (const double d : draws) {
    if (std::isnan(d)) {
      ++result.degenerate_skipped;
    } else {
      kept.push_back(d);
    }
  }
  if (result.degenerate_skipped * 2 > iterations) {
    throw error("more than half of bootstrap resamples were degenerate (" +
                std::to_string(result.degenerate_skipped) + "/" +
                std::to_string(iterations) + ")");
  }
  std::sort(kept.begin(), kept.end());
  const double alpha = (1.0 - level) / 2.0;
  result.ci_low = detail::percentile_of_sorted(kept, alpha);
  result.ci_high = detail::percentile_of_sorted(kept, 1.0 - alpha);
  result.iterations = iterations;
  result.ci_warning = result.rho < *result.ci_low || result.rho > *result.ci_high;
  return result;
}

// ---------------------------------------------------------------------------
// Agreement

/// Standard Fleiss formula over an items x categories count matrix with a
/// constant number of raters per item.
inline double fleiss_kappa(const std::vector<std::vector<int>>& counts) {
  if (counts.empty()) throw error("no items");
  const std::size_t categories = counts[0].size();
  if (categories < 2) throw error("need at least 2 categories");
  long long per_item = -1;
  for (const auto& row : counts) {
    if (row.size() != categories) throw error("ragged count matrix");
    long long total = 0;
    for (const int c : row) {
      if (c < 0) throw error("negative count");
      total += c;
    }
    if (per_item < 0) per_item = total;
    if (total != per_item) {
      throw error("varying raters per item (" + std::to_string(total) +
                  " vs " + std::to_string(per_item) + ")");
    }
  }
  if (per_item < 2) throw error("need at least 2 raters per item");

  const double n = static_cast<double>(per_item);
  const double items = static_cast<double>(counts.size());
  double p_bar = 0.0;
  std::vector<double> p_cat(categories, 0.0);
  for (const auto& row : counts) {
    double agree = 0.0;
    for (std::size_t j = 0; j < categories; ++j) {
      agree += static_cast<double>(row[j]) * (row[j] - 1);
      p_cat[j] += row[j];
    }
    p_bar += agree / (n * (n - 1.0));
  }
  p_bar /= items;
  double pe = 0.0;
  for (double& p : p_cat) {
    p /= items * n;
    pe += p * p;
  }
  if (pe >= 1.0) throw error("all judgments in a single category");
  return (p_bar - pe) / (1.0 - pe);
}

struct AgreementResult {
  double mean_rho = 0.0;
  std::vector<std::pair<std::string, double>> per_rater;
  std::vector<std::string> warnings;
};

/// Per rater, the rank correlation between their z-scores and the mean of
/// the other raters' z-scores over shared items; averaged across raters.
/// Raters without enough usable shared items are excluded with a warning.
inline AgreementResult leave_out_agreement(
    const std::map<std::string, std::map<std::string, double>>& by_rater) {
  if (by_rater.size() < 3) throw error("need at least 3 raters");
  AgreementResult result;
  for (const auto& [rater, own] : by_rater) {
    std::vector<double> mine, others;
    for (const auto& [item, z] : own) {
      double sum = 0.0;
      int cnt = 0;
      for (const auto& [other, theirs] : by_rater) {
        if (other == rater) continue;
        const auto it = theirs.find(item);
        if (it != theirs.end()) {
          sum += it->second;
          ++cnt;
        }
      }
      if (cnt > 0) {
        mine.push_back(z);
        others.push_back(sum / cnt);
      }
    }
    if (mine.empty()) {
      result.warnings.push_back("rater \"" + rater +
                                "\" excluded: no shared items");
      continue;
    }
    try {
      result.per_rater.emplace_back(rater, spearman(mine, others).rho);
    } catch (const error& e) {
      result.warnings.push_back("rater \"" + rater +
                                "\" excluded: " + e.what());
    }
  }
  if (result.per_rater.empty()) {
    throw error("no rater had usable shared items");
  }
  double sum = 0.0;
  for (const auto& [rater, rho] : result.per_rater) sum += rho;
  result.mean_rho = sum / static_cast<double>(result.per_rater.size());
  return result;
}

// ---------------------------------------------------------------------------
// Quantile transform and median test

/// value -> (average rank - 0.5)/n; uniform on (0,1] by construction.
inline std::vector<double> quantile_transform(const std::vector<double>& v) {
  if (v.empty()) throw error("quantile_transform of empty list");
  require_finite(v, "values");
  std::vector<double> out = mid_ranks(v);
  for (double& r : out) r = (r - 0.5) / static_cast<double>(v.size());
  return out;
}

struct MedianTestResult {
  double p = 1.0;
  double statistic = 0.0;
  bool warning = false;  // degenerate pooled split
};

/// Mood's median test: 2x2 contingency of counts above vs <= the pooled
/// grand median, chi-square with 1 df. Values equal to the grand median
/// count as "<=".
inline MedianTestResult median_test(const std::vector<double>& a,
                                    const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw error("median_test needs two nonempty lists");
  require_finite(a, "a");
  require_finite(b, "b");
  std::vector<double> pooled = a;
  pooled.insert(pooled.end(), b.begin(), b.end());
  const double grand = median_of(pooled);

  const auto above = [grand](const std::vector<double>& v) {
    return static_cast<double>(
        std::count_if(v.begin(), v.end(), [&](double x) { return x > grand; }));
  };
  const double a_above = above(a), b_above = above(b);
  const double a_below = static_cast<double>(a.size()) - a_above;
  const double b_below = static_cast<double>(b.size()) - b_above;
  const double total = static_cast<double>(pooled.size());
  const double col_above = a_above + b_above;
  const double col_below = a_below + b_below;

  MedianTestResult result;
  if (col_above == 0.0 || col_below == 0.0) {
    result.warning = true;  // nothing above (or below) the pooled median
    return result;
  }
  const double rows[2] = {static_cast<double>(a.size()),
                          static_cast<double>(b.size())};
  const double cols[2] = {col_above, col_below};
  const double observed[2][2] = {{a_above, a_below}, {b_above, b_below}};
  double chi2 = 0.0;
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) {
      const double expected = rows[r] * cols[c] / total;
      chi2 += (observed[r][c] - expected) * (observed[r][c] - expected) /
              expected;
    }
  }
  result.statistic = chi2;
  result.p = chi2_sf_1df(chi2);
  return result;
}

// ---------------------------------------------------------------------------
// Dialog-act phenomenon mapping

enum class Phenomenon {
  acknowledgment,
  answer,
  reformulation,
  collaborative_completion,
  repetition,
};

inline const char* phenomenon_name(Phenomenon p) {
  switch (p) {
    case Phenomenon::acknowledgment: return "acknowledgment";
    case Phenomenon::answer: return "answer";
    case Phenomenon::reformulation: return "reformulation";
    case Phenomenon::collaborative_completion: return "collaborative_completion";
    case Phenomenon::repetition: return "repetition";
  }
  throw error("bad phenomenon enum value");
}

inline const std::vector<Phenomenon>& all_phenomena() {
  static const std::vector<Phenomenon> kAll = {
      Phenomenon::acknowledgment, Phenomenon::answer,
      Phenomenon::reformulation, Phenomenon::collaborative_completion,
      Phenomenon::repetition};
  return kAll;
}

struct PhenomenonRule {
  enum class Matcher {
    exact_tag_set,  // whole tag equals one of the patterns
    marker,         // tag contains the "^..." pattern anywhere
    substring,      // base tag (before any '^') contains the pattern
  };
  Matcher matcher;
  std::vector<std::string> patterns;
  Phenomenon phenomenon;
};

struct PhenomenonMapping {
  std::vector<PhenomenonRule> rules;  // first match wins
};

/// Exclusive acknowledgment tags, then the two markers, then whole-tag
/// "bf", then answer tags (an "n" in the base tag). The answer rule runs
/// last so "b"/"bf" never fall through to it, and marker text is excluded
/// from the "n" scan.
inline const PhenomenonMapping& default_phenomenon_mapping() {
  static const PhenomenonMapping kMapping = {{
      {PhenomenonRule::Matcher::exact_tag_set,
       {"b", "bh", "bk"},
       Phenomenon::acknowledgment},
      {PhenomenonRule::Matcher::marker, {"^2"},
       Phenomenon::collaborative_completion},
      {PhenomenonRule::Matcher::marker, {"^m"}, Phenomenon::repetition},
      {PhenomenonRule::Matcher::exact_tag_set, {"bf"},
       Phenomenon::reformulation},
      {PhenomenonRule::Matcher::substring, {"n"}, Phenomenon::answer},
  }};
  return kMapping;
}

inline std::optional<Phenomenon> map_damsl(
    std::string_view tag,
    const PhenomenonMapping& mapping = default_phenomenon_mapping()) {
  const std::string_view base = tag.substr(0, tag.find('^'));
  for (const auto& rule : mapping.rules) {
    for (const auto& pattern : rule.patterns) {
      bool hit = false;
      switch (rule.matcher) {
        case PhenomenonRule::Matcher::exact_tag_set:
          hit = tag == pattern;
          break;
        case PhenomenonRule::Matcher::marker:
          hit = tag.find(pattern) != std::string_view::npos;
          break;
        case PhenomenonRule::Matcher::substring:
          hit = base.find(pattern) != std::string_view::npos;
          break;
      }
      if (hit) return rule.phenomenon;
    }
  }
  return std::nullopt;
}

struct PhenomenonDelta {
  Phenomenon phenomenon;
  int n = 0;                     // matching pairs with both scores
  std::optional<double> delta;   // median(a) - median(b); unset when n < 2
  std::optional<double> p;       // median test between the two score sets
};

/// Per phenomenon, the median difference between two (already
/// quantile-transformed) score columns over pairs whose tag maps to it.
inline std::vector<PhenomenonDelta> phenomenon_delta(
    const std::unordered_map<std::string, double>& scores_a,
    const std::unordered_map<std::string, double>& scores_b,
    const std::map<std::string, std::string>& tags,
    const PhenomenonMapping& mapping = default_phenomenon_mapping()) {
  std::map<Phenomenon, std::pair<std::vector<double>, std::vector<double>>>
      buckets;
  for (const auto& [pair_id, tag] : tags) {
    const auto phen = map_damsl(tag, mapping);
    if (!phen) continue;
    const auto ia = scores_a.find(pair_id);
    const auto ib = scores_b.find(pair_id);
    if (ia == scores_a.end() || ib == scores_b.end()) continue;
    buckets[*phen].first.push_back(ia->second);
    buckets[*phen].second.push_back(ib->second);
  }
  std::vector<PhenomenonDelta> out;
  for (const Phenomenon phen : all_phenomena()) {
    PhenomenonDelta row;
    row.phenomenon = phen;
    const auto it = buckets.find(phen);
    if (it != buckets.end()) {
      row.n = static_cast<int>(it->second.first.size());
      if (row.n >= 2) {
        row.delta = median_of(it->second.first) - median_of(it->second.second);
        row.p = median_test(it->second.first, it->second.second).p;
      }
    }
    out.push_back(row);
  }
  return out;
}

// ---------------------------------------------------------------------------
// OLS and residual comparison

struct OlsResult {
  std::vector<std::string> names;  // "intercept" first
  std::vector<double> coefficients;
  std::vector<double> std_errors;
  std::vector<double> p_values;
  std::vector<double> standardized;  // 0 for the intercept row
  double r_squared = 0.0;
  int n = 0;
  bool approximate = false;  // normal-approximation p with df <= 30
};

namespace detail {

/// Cholesky solve of the normal equations; names identify the column blamed
/// for a rank deficiency.
inline std::vector<double> solve_normal_equations(
    std::vector<std::vector<double>> a, std::vector<double> rhs,
    const std::vector<std::string>& names,
    std::vector<std::vector<double>>* inverse = nullptr) {
  const std::size_t p = a.size();
  std::vector<double> orig_diag(p);
  for (std::size_t j = 0; j < p; ++j) orig_diag[j] = a[j][j];
  // in-place LL^T factorization
  for (std::size_t j = 0; j < p; ++j) {
    double pivot = a[j][j];
    for (std::size_t k = 0; k < j; ++k) pivot -= a[j][k] * a[j][k];
    const double floor_value =
        1e-10 * (orig_diag[j] > 0.0 ? orig_diag[j] : 1.0);
    if (!(pivot > floor_value)) {
      throw error("collinear design column \"" + names[j] + "\"");
    }
    a[j][j] = std::sqrt(pivot);
    for (std::size_t i = j + 1; i < p; ++i) {
      double v = a[i][j];
      for (std::size_t k = 0; k < j; ++k) v -= a[i][k] * a[j][k];
      a[i][j] = v / a[j][j];
    }
  }
  const auto solve_one = [&](std::vector<double> b) {
    for (std::size_t i = 0; i < p; ++i) {  // L z = b
      for (std::size_t k = 0; k < i; ++k) b[i] -= a[i][k] * b[k];
      b[i] /= a[i][i];
    }
    for (std::size_t i = p; i-- > 0;) {  // L^T x = z
      for (std::size_t k = i + 1; k < p; ++k) b[i] -= a[k][i] * b[k];
      b[i] /= a[i][i];
    }
    return b;
  };
  if (inverse) {
    inverse->assign(p, std::vector<double>(p, 0.0));
    for (std::size_t j = 0; j < p; ++j) {
      std::vector<double> e(p, 0.0);
      e[j] = 1.0;
      const auto col = solve_one(std::move(e));
      for (std::size_t i = 0; i < p; ++i) (*inverse)[i][j] = col[i];
    }
  }
  return solve_one(std::move(rhs));
}

}  // namespace detail

/// Closed-form least squares of y on [intercept, x_main, controls...].
/// Raw and standardized coefficients; normal-approximation p-values,
/// flagged approximate when residual df <= 30.
inline OlsResult ols(const std::vector<double>& y,
                     const std::vector<double>& x_main,
                     const std::vector<std::vector<double>>& controls = {},
                     std::vector<std::string> names = {}) {
  const std::size_t n = y.size();
  const std::size_t p = 2 + controls.size();
  if (x_main.size() != n) throw error("length mismatch between y and x");
  for (const auto& c : controls) {
    if (c.size() != n) throw error("length mismatch in controls");
  }
  if (n <= p) throw error("need more observations than coefficients");
  require_finite(y, "y");
  require_finite(x_main, "x");
  for (const auto& c : controls) require_finite(c, "control");

  if (names.empty()) {
    names.push_back("x");
    for (std::size_t c = 0; c < controls.size(); ++c) {
      names.push_back("control" + std::to_string(c + 1));
    }
  }
  if (names.size() != p - 1) {
    throw error("need one name per non-intercept column");
  }
  std::vector<std::string> full_names = {"intercept"};
  full_names.insert(full_names.end(), names.begin(), names.end());

  // column-major design
  std::vector<const std::vector<double>*> cols = {&x_main};
  for (const auto& c : controls) cols.push_back(&c);

  const auto design_at = [&](std::size_t i, std::size_t j) {
    return j == 0 ? 1.0 : (*cols[j - 1])[i];
  };
  std::vector<std::vector<double>> xtx(p, std::vector<double>(p, 0.0));
  std::vector<double> xty(p, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      const double xj = design_at(i, j);
      xty[j] += xj * y[i];
      for (std::size_t k = j; k < p; ++k) xtx[j][k] += xj * design_at(i, k);
    }
  }
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t k = 0; k < j; ++k) xtx[j][k] = xtx[k][j];
  }

  std::vector<std::vector<double>> xtx_inv;
  const auto beta =
      detail::solve_normal_equations(xtx, xty, full_names, &xtx_inv);

  double rss = 0.0;
  const double ymean = mean_of(y);
  double tss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double fit = 0.0;
    for (std::size_t j = 0; j < p; ++j) fit += beta[j] * design_at(i, j);
    rss += (y[i] - fit) * (y[i] - fit);
    tss += (y[i] - ymean) * (y[i] - ymean);
  }
  if (tss == 0.0) throw error("response has zero variance");

  OlsResult result;
  result.names = full_names;
  result.coefficients = beta;
  result.n = static_cast<int>(n);
  result.r_squared = 1.0 - rss / tss;
  const double df = static_cast<double>(n - p);
  result.approximate = df <= 30.0;
  const double sigma2 = rss / df;
  const double sd_y = std::sqrt(tss / static_cast<double>(n - 1));
  for (std::size_t j = 0; j < p; ++j) {
    const double se = std::sqrt(sigma2 * xtx_inv[j][j]);
    result.std_errors.push_back(se);
    const double t = se > 0.0 ? beta[j] / se
                              : (beta[j] == 0.0 ? 0.0
                                                : std::numeric_limits<double>::infinity());
    result.p_values.push_back(2.0 * normal_sf(std::abs(t)));
    if (j == 0) {
      result.standardized.push_back(0.0);
    } else {
      std::vector<double> col = *cols[j - 1];
      const double sd_x = std::sqrt(sample_variance(col));
      result.standardized.push_back(beta[j] * sd_x / sd_y);
    }
  }
  return result;
}

struct ResidualGapResult {
  std::vector<std::string> pair_ids;  // sorted; d above mean + threshold*sd
  std::vector<double> d_values;       // aligned with pair_ids
  double mean_d = 0.0;
  double sd_d = 0.0;
  int n = 0;
};

/// Regresses labels on each model's predictions separately (simple OLS with
/// intercept), forms d = residual_a - residual_b per pair, and returns the
/// pairs whose d exceeds mean(d) + threshold_sd * sd(d).
inline ResidualGapResult residual_gap_set(
    const std::vector<GoldLabel>& labels,
    const std::unordered_map<std::string, double>& pred_a,
    const std::unordered_map<std::string, double>& pred_b,
    double threshold_sd = 1.5) {
  std::vector<std::string> ids;
  std::vector<double> y, xa, xb;
  for (const auto& label : labels) {
    const auto ia = pred_a.find(label.pair_id);
    const auto ib = pred_b.find(label.pair_id);
    if (ia == pred_a.end() || ib == pred_b.end()) continue;
    ids.push_back(label.pair_id);
    y.push_back(label.value);
    xa.push_back(ia->second);
    xb.push_back(ib->second);
  }
  if (ids.size() < 10) {
    throw error("need at least 10 complete rows; have " +
                std::to_string(ids.size()));
  }
  const auto residuals = [&](const std::vector<double>& x) {
    const OlsResult fit = ols(y, x, {}, {"prediction"});
    std::vector<double> r(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      r[i] = y[i] - (fit.coefficients[0] + fit.coefficients[1] * x[i]);
    }
    return r;
  };
  const auto ra = residuals(xa);
  const auto rb = residuals(xb);
  std::vector<double> d(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) d[i] = ra[i] - rb[i];

  ResidualGapResult result;
  result.n = static_cast<int>(ids.size());
  result.mean_d = mean_of(d);
  result.sd_d = std::sqrt(sample_variance(d));
  const double cut = result.mean_d + threshold_sd * result.sd_d;
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (d[i] > cut) kept.push_back(i);
  }
  std::sort(kept.begin(), kept.end(), [&](std::size_t l, std::size_t r) {
    return ids[l] < ids[r];
  });
  for (const std::size_t i : kept) {
    result.pair_ids.push_back(ids[i]);
    result.d_values.push_back(d[i]);
  }
  return result;
}

// ---------------------------------------------------------------------------
// t-test

struct TTestResult {
  double p = 1.0;
  double statistic = 0.0;
  double df = 0.0;
  bool approximate = false;  // normal-approximation p with df <= 30
};

/// Welch two-sample test with normal-approximation p-values.
inline TTestResult ttest_two_sample(const std::vector<double>& a,
                                    const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2) {
    throw error("each sample needs at least 2 observations");
  }
  require_finite(a, "a");
  require_finite(b, "b");
  const double va = sample_variance(a), vb = sample_variance(b);
  if (va == 0.0 && vb == 0.0) throw error("zero variance in both samples");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double se2 = va / na + vb / nb;
  TTestResult result;
  result.statistic = (mean_of(a) - mean_of(b)) / std::sqrt(se2);
  result.df = se2 * se2 /
              (va * va / (na * na * (na - 1.0)) +
               vb * vb / (nb * nb * (nb - 1.0)));
  result.approximate = result.df <= 30.0;
  result.p = 2.0 * normal_sf(std::abs(result.statistic));
  return result;
}

// ---------------------------------------------------------------------------
// Conversation-level aggregation

struct CueRates {
  double question_rate = 0.0;
  double exclamation_rate = 0.0;
  int n_pairs = 0;
};

/// Per conversation, the fraction of pairs whose teacher reply contains a
/// question mark / exclamation mark.
inline std::map<std::string, CueRates> cue_rates(
    const std::vector<ExchangePair>& pairs) {
  std::map<std::string, CueRates> out;
  for (const auto& p : pairs) {
    if (p.conversation.empty()) {
      throw error("pair \"" + p.id + "\" has no conversation id");
    }
    CueRates& c = out[p.conversation];
    c.n_pairs += 1;
    if (p.t.text.find('?') != std::string::npos) c.question_rate += 1.0;
    if (p.t.text.find('!') != std::string::npos) c.exclamation_rate += 1.0;
  }
  for (auto& [conv, c] : out) {
    c.question_rate /= c.n_pairs;
    c.exclamation_rate /= c.n_pairs;
  }
  return out;
}

struct ConversationScore {
  std::string conversation;
  double mean_score = 0.0;
  int n_pairs = 0;  // pairs contributing a present score
};

struct ConversationAggregate {
  std::vector<ConversationScore> rows;  // ordered by conversation id
  std::vector<std::string> warnings;
};

/// Mean of the present scores of one metric per conversation, with the
/// contributing-pair count used as the regression control.
inline ConversationAggregate conversation_aggregate(
    const ScoreTable& scores, const std::vector<ExchangePair>& pairs,
    std::string_view metric) {
  std::unordered_map<std::string, const ExchangePair*> by_id;
  for (const auto& p : pairs) by_id.emplace(p.id, &p);
  const std::size_t col = scores.column(metric);

  std::map<std::string, std::pair<double, int>> acc;  // conv -> (sum, n)
  std::map<std::string, int> scored_rows;              // conv -> rows seen
  for (std::size_t r = 0; r < scores.pair_ids.size(); ++r) {
    const auto it = by_id.find(scores.pair_ids[r]);
    if (it == by_id.end()) {
      throw error("scored pair \"" + scores.pair_ids[r] +
                  "\" is not in the pair list");
    }
    const std::string& conv = it->second->conversation;
    if (conv.empty()) {
      throw error("pair \"" + scores.pair_ids[r] + "\" has no conversation id");
    }
    scored_rows[conv] += 1;
    if (scores.cells[r][col]) {
      auto& slot = acc[conv];
      slot.first += *scores.cells[r][col];
      slot.second += 1;
    }
  }

  ConversationAggregate out;
  for (const auto& [conv, seen] : scored_rows) {
    const auto it = acc.find(conv);
    if (it == acc.end()) {
      out.warnings.push_back("conversation \"" + conv +
                             "\" omitted: no present scores");
      continue;
    }
    out.rows.push_back(ConversationScore{
        conv, it->second.first / it->second.second, it->second.second});
  }
  return out;
}

}  // namespace uptake
