/*
 * Copyright 2026 The ensemble-lens Authors.
 *
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

#include "oracles.h"

#include <algorithm>
#include <cmath>
#include <set>

namespace ensemble_lens::oracle {
namespace {

using Wide = long double;

double AbsDiff(double a, double b) { return std::fabs(a - b); }

}  // namespace

double PopulationStd(const Reals& y) {
  Wide mean = 0;
  for (double v : y) mean += v;
  mean /= y.size();
  Wide ss = 0;
  for (double v : y) ss += (v - mean) * (v - mean);
  return static_cast<double>(std::sqrt(ss / y.size()));
}

double Msd(const Reals& a, const Reals& b) {
  Wide sum = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    const Wide d = static_cast<Wide>(a[i]) - b[i];
    sum += d * d;
  }
  return static_cast<double>(sum / a.size());
}

double Rmsd(const Reals& a, const Reals& b) {
  Wide sum = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    const Wide d = static_cast<Wide>(a[i]) - b[i];
    sum += d * d;
  }
  return static_cast<double>(std::sqrt(sum / a.size()));
}

double Sdr(const Reals& a, const Reals& b, double threshold) {
  int64_t hits = 0;
  for (size_t i = 0; i < a.size(); ++i) hits += AbsDiff(a[i], b[i]) >= threshold;
  return static_cast<double>(hits) / static_cast<double>(a.size());
}

double Ar(const Reals& a, const Reals& b, double target_std, double xi) {
  const double limit = target_std / xi;
  int64_t hits = 0;
  for (size_t i = 0; i < a.size(); ++i) hits += AbsDiff(a[i], b[i]) <= limit;
  return static_cast<double>(hits) / static_cast<double>(a.size());
}

double Rmse(const Reals& pred, const Reals& y) {
  return static_cast<double>(std::sqrt(static_cast<Wide>(Mse(pred, y))));
}

double Crmse(const Reals& a, const Reals& b, const Reals& y) {
  Wide sum = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    const Wide mid = (static_cast<Wide>(a[i]) + b[i]) / 2;
    sum += (mid - y[i]) * (mid - y[i]);
  }
  return static_cast<double>(std::sqrt(sum / a.size()));
}

double Mse(const Reals& pred, const Reals& y) {
  Wide sum = 0;
  for (size_t i = 0; i < y.size(); ++i) {
    const Wide e = static_cast<Wide>(pred[i]) - y[i];
    sum += e * e;
  }
  return static_cast<double>(sum / y.size());
}

double Mae(const Reals& pred, const Reals& y) {
  Wide sum = 0;
  for (size_t i = 0; i < y.size(); ++i) sum += std::fabs(static_cast<Wide>(pred[i]) - y[i]);
  return static_cast<double>(sum / y.size());
}

std::optional<double> Mape(const Reals& pred, const Reals& y) {
  Wide sum = 0;
  for (size_t i = 0; i < y.size(); ++i) {
    if (y[i] == 0) return std::nullopt;
    sum += std::fabs((static_cast<Wide>(y[i]) - pred[i]) / y[i]);
  }
  return static_cast<double>(sum / y.size());
}

std::optional<double> R2(const Reals& pred, const Reals& y) {
  Wide mean = 0;
  for (double v : y) mean += v;
  mean /= y.size();
  Wide total = 0, residual = 0;
  for (size_t i = 0; i < y.size(); ++i) {
    total += (y[i] - mean) * (y[i] - mean);
    residual += (static_cast<Wide>(y[i]) - pred[i]) * (static_cast<Wide>(y[i]) - pred[i]);
  }
  if (total == 0) return std::nullopt;
  return static_cast<double>(1 - residual / total);
}

Cells EightCells(const Labels& a, const Labels& b, const Labels& y, int positive) {
  Cells c;
  for (size_t i = 0; i < y.size(); ++i) {
    const bool ra = a[i] == y[i];
    const bool rb = b[i] == y[i];
    if (y[i] == positive) {
      if (ra && rb) ++c.ttp;
      if (ra && !rb) ++c.tfp;
      if (!ra && rb) ++c.ftp;
      if (!ra && !rb) ++c.ffp;
    } else {
      if (ra && rb) ++c.ttn;
      if (ra && !rb) ++c.tfn;
      if (!ra && rb) ++c.ftn;
      if (!ra && !rb) ++c.ffn;
    }
  }
  return c;
}

double Uniformity(const Labels& a, const Labels& b) {
  int64_t same = 0;
  for (size_t i = 0; i < a.size(); ++i) same += a[i] == b[i];
  return static_cast<double>(same) / static_cast<double>(a.size());
}

double Incompatibility(const Labels& a, const Labels& b) {
  return 1.0 - Uniformity(a, b);
}

double Acs(const Labels& a, const Labels& b, const Labels& y) {
  int64_t halves = 0;
  for (size_t i = 0; i < y.size(); ++i) halves += (a[i] == y[i]) + (b[i] == y[i]);
  return static_cast<double>(halves) / (2.0 * static_cast<double>(y.size()));
}

std::vector<double> AcsCumulative(const Labels& a, const Labels& b, const Labels& y) {
  std::vector<double> out;
  int64_t halves = 0;
  for (size_t i = 0; i < y.size(); ++i) {
    halves += (a[i] == y[i]) + (b[i] == y[i]);
    out.push_back(static_cast<double>(halves) / (2.0 * static_cast<double>(i + 1)));
  }
  return out;
}

std::vector<double> CorrectnessLevels(const Labels& a, const Labels& b, const Labels& y) {
  int64_t tally[3] = {0, 0, 0};
  for (size_t i = 0; i < y.size(); ++i) {
    const int right = (a[i] == y[i]) + (b[i] == y[i]);
    ++tally[2 - right];
  }
  const double n = static_cast<double>(y.size());
  return {tally[0] / n, tally[1] / n, tally[2] / n};
}

std::vector<std::optional<double>> DisagreementByClass(const Labels& a, const Labels& b,
                                                       const Labels& y, int k) {
  std::vector<std::optional<double>> out;
  for (int c = 0; c < k; ++c) {
    int64_t count = 0, differ = 0;
    for (size_t i = 0; i < y.size(); ++i) {
      if (y[i] != c) continue;
      ++count;
      differ += a[i] != b[i];
    }
    if (count == 0) {
      out.push_back(std::nullopt);
    } else {
      out.push_back(static_cast<double>(differ) / static_cast<double>(count));
    }
  }
  return out;
}

double StrictConjunctiveAccuracy(const Labels& a, const Labels& b, const Labels& y) {
  int64_t both = 0;
  for (size_t i = 0; i < y.size(); ++i) both += a[i] == y[i] && b[i] == y[i];
  return static_cast<double>(both) / static_cast<double>(y.size());
}

Labels AveragedLabels(const Rows& a, const Rows& b) {
  Labels out;
  for (size_t i = 0; i < a.size(); ++i) {
    int best = 0;
    double top = (a[i][0] + b[i][0]) / 2;
    for (size_t c = 1; c < a[i].size(); ++c) {
      const double v = (a[i][c] + b[i][c]) / 2;
      if (v > top) {
        top = v;
        best = static_cast<int>(c);
      }
    }
    out.push_back(best);
  }
  return out;
}

ClassScores Classification(const Labels& pred, const Labels& y, int k, bool binary,
                           int positive) {
  ClassScores s;
  int64_t correct = 0;
  for (size_t i = 0; i < y.size(); ++i) correct += pred[i] == y[i];
  s.accuracy = static_cast<double>(correct) / static_cast<double>(y.size());
  auto ratio = [](int64_t num, int64_t den) {
    return den == 0 ? 0.0L : static_cast<Wide>(num) / den;
  };
  auto per_class = [&](int c, Wide& p, Wide& r, Wide& f) {
    int64_t tp = 0, fp = 0, fn = 0;
    for (size_t i = 0; i < y.size(); ++i) {
      tp += pred[i] == c && y[i] == c;
      fp += pred[i] == c && y[i] != c;
      fn += pred[i] != c && y[i] == c;
    }
    p = ratio(tp, tp + fp);
    r = ratio(tp, tp + fn);
    f = (p + r) == 0 ? 0.0L : 2 * p * r / (p + r);
  };
  if (binary) {
    Wide p, r, f;
    per_class(positive, p, r, f);
    s.precision = static_cast<double>(p);
    s.recall = static_cast<double>(r);
    s.f1 = static_cast<double>(f);
    return s;
  }
  std::set<int> present(y.begin(), y.end());
  present.insert(pred.begin(), pred.end());
  Wide sp = 0, sr = 0, sf = 0;
  for (int c = 0; c < k; ++c) {
    if (!present.count(c)) continue;
    Wide p, r, f;
    per_class(c, p, r, f);
    sp += p;
    sr += r;
    sf += f;
  }
  const Wide count = static_cast<Wide>(present.size());
  s.precision = static_cast<double>(sp / count);
  s.recall = static_cast<double>(sr / count);
  s.f1 = static_cast<double>(sf / count);
  return s;
}

double Pearson(const Reals& a, const Reals& b) {
  Wide ma = 0, mb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= a.size();
  mb /= b.size();
  Wide sab = 0, saa = 0, sbb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return static_cast<double>(sab / std::sqrt(saa * sbb));
}

double Kappa(const Labels& a, const Labels& b, int k) {
  const Wide n = static_cast<Wide>(a.size());
  Wide agree = 0;
  std::vector<Wide> ca(k, 0), cb(k, 0);
  for (size_t i = 0; i < a.size(); ++i) {
    agree += a[i] == b[i];
    ca[a[i]] += 1;
    cb[b[i]] += 1;
  }
  const Wide po = agree / n;
  Wide pe = 0;
  for (int c = 0; c < k; ++c) pe += (ca[c] / n) * (cb[c] / n);
  if (pe == 1) return 1.0;
  return static_cast<double>((po - pe) / (1 - pe));
}

std::vector<int64_t> AbsDiffCounts(const Reals& a, const Reals& b, int bins) {
  double top = 0;
  for (size_t i = 0; i < a.size(); ++i) top = std::max(top, AbsDiff(a[i], b[i]));
  if (top == 0) return {static_cast<int64_t>(a.size())};
  std::vector<int64_t> counts(bins, 0);
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = AbsDiff(a[i], b[i]);
    // Bin j holds [j*w, (j+1)*w); the maximum goes into the last bin.
    int j = 0;
    while (j + 1 < bins && d >= top * (j + 1) / bins) ++j;
    ++counts[j];
  }
  return counts;
}

double Quantile(Reals values, double p) {
  std::sort(values.begin(), values.end());
  const Wide h = static_cast<Wide>(values.size() - 1) * p;
  const size_t lo = static_cast<size_t>(std::floor(h));
  const size_t hi = std::min(lo + 1, values.size() - 1);
  return static_cast<double>(values[lo] + (h - lo) * (static_cast<Wide>(values[hi]) - values[lo]));
}

}  // namespace ensemble_lens::oracle
