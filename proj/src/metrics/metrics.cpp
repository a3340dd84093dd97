#include "txbench/metrics/metrics.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <exception>
#include <memory>
#include <numeric>
#include <regex>
#include <set>

#include "txbench/chem/smiles.hpp"
#include "txbench/common/rng.hpp"
#include "txbench/common/text.hpp"

namespace txbench::metrics {

namespace {

bool scorable(const PredictionRecord& r) { return r.prediction.has_value(); }

double as_double(const LabelValue& v) {
  if (const double* d = std::get_if<double>(&v)) return *d;
  if (const bool* b = std::get_if<bool>(&v)) return *b ? 1.0 : 0.0;
  throw MetricError("numeric label expected");
}

bool as_bool(const LabelValue& v) {
  if (const bool* b = std::get_if<bool>(&v)) return *b;
  throw MetricError("binary label expected");
}

struct RankingInputs {
  std::unique_ptr<bool[]> labels;
  std::vector<double> scores;
  std::span<const bool> label_span() const { return {labels.get(), scores.size()}; }
};

RankingInputs ranking_inputs(std::span<const PredictionRecord> records) {
  RankingInputs in;
  in.labels = std::make_unique<bool[]>(records.size());
  for (const auto& r : records) {
    if (!scorable(r)) continue;
    if (!r.score) throw MissingScore();
    in.labels[in.scores.size()] = as_bool(r.truth);
    in.scores.push_back(*r.score);
  }
  return in;
}

void regression_inputs(std::span<const PredictionRecord> records, std::vector<double>& truth,
                       std::vector<double>& pred) {
  for (const auto& r : records) {
    if (!scorable(r)) continue;
    truth.push_back(as_double(r.truth));
    pred.push_back(as_double(*r.prediction));
  }
  if (truth.empty()) throw EmptyInput();
}

// Linear interpolation between order statistics.
double percentile(std::vector<double> sorted, double q) {
  std::sort(sorted.begin(), sorted.end());
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double sample_mean(std::span<const double> x) { return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size()); }

double sample_variance(std::span<const double> x) {
  const double m = sample_mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

}  // namespace

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double auroc(std::span<const bool> labels, std::span<const double> scores) {
  if (labels.size() != scores.size()) throw LengthMismatch(labels.size(), scores.size());
  const std::vector<double> ranks = average_ranks(scores);
  double pos = 0, rank_sum = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i]) {
      ++pos;
      rank_sum += ranks[i];
    }
  }
  const double neg = static_cast<double>(labels.size()) - pos;
  if (pos == 0 || neg == 0) throw SingleClass();
  return (rank_sum - pos * (pos + 1) / 2.0) / (pos * neg);
}

double auprc(std::span<const bool> labels, std::span<const double> scores) {
  if (labels.size() != scores.size()) throw LengthMismatch(labels.size(), scores.size());
  const auto total_pos = static_cast<double>(std::count(labels.begin(), labels.end(), true));
  if (total_pos == 0 || total_pos == static_cast<double>(labels.size())) throw SingleClass();
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double tp = 0, fp = 0, prev_recall = 0, ap = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double threshold = scores[order[i]];
    while (i < order.size() && scores[order[i]] == threshold) {
      (labels[order[i]] ? tp : fp) += 1;
      ++i;
    }
    const double recall = tp / total_pos;
    ap += (recall - prev_recall) * (tp / (tp + fp));
    prev_recall = recall;
  }
  return ap;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw LengthMismatch(x.size(), y.size());
  if (x.size() < 2) throw MetricError("correlation needs at least two points");
  const double mx = sample_mean(x), my = sample_mean(y);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) throw ZeroVariance();
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw LengthMismatch(x.size(), y.size());
  const auto rx = average_ranks(x), ry = average_ranks(y);
  return pearson(rx, ry);
}

double auroc(std::span<const PredictionRecord> records) {
  RankingInputs in = ranking_inputs(records);
  return auroc(in.label_span(), in.scores);
}

double auprc(std::span<const PredictionRecord> records) {
  RankingInputs in = ranking_inputs(records);
  return auprc(in.label_span(), in.scores);
}

double accuracy(std::span<const PredictionRecord> records) {
  std::size_t n = 0, hit = 0;
  for (const auto& r : records) {
    if (!scorable(r)) continue;
    ++n;
    if (*r.prediction == r.truth) ++hit;
  }
  if (n == 0) throw EmptyInput();
  return static_cast<double>(hit) / static_cast<double>(n);
}

double spearman(std::span<const PredictionRecord> records) {
  std::vector<double> t, p;
  regression_inputs(records, t, p);
  return spearman(t, p);
}

double pearson(std::span<const PredictionRecord> records) {
  std::vector<double> t, p;
  regression_inputs(records, t, p);
  return pearson(t, p);
}

double mae(std::span<const PredictionRecord> records) {
  std::vector<double> t, p;
  regression_inputs(records, t, p);
  double s = 0;
  for (std::size_t i = 0; i < t.size(); ++i) s += std::abs(t[i] - p[i]);
  return s / static_cast<double>(t.size());
}

double mse(std::span<const PredictionRecord> records) {
  std::vector<double> t, p;
  regression_inputs(records, t, p);
  double s = 0;
  for (std::size_t i = 0; i < t.size(); ++i) s += (t[i] - p[i]) * (t[i] - p[i]);
  return s / static_cast<double>(t.size());
}

double rmse(std::span<const PredictionRecord> records) { return std::sqrt(mse(records)); }

std::vector<std::string> canonical_components(std::string_view smiles) {
  static const std::regex atom_map(R"(:\d+\])");
  std::set<std::string> out;
  for (const std::string& raw : text::split(smiles, '.')) {
    std::string part(text::trim(raw));
    if (part.empty()) continue;
    part = std::regex_replace(part, atom_map, "]");
    try {
      out.insert(chem::canonical_serialize(chem::parse_smiles(part)));
    } catch (const chem::SmilesError&) {
      out.insert(part);
    }
  }
  return {out.begin(), out.end()};
}

double set_accuracy(std::span<const PredictionRecord> records) {
  std::size_t n = 0, hit = 0;
  for (const auto& r : records) {
    if (!scorable(r)) continue;
    const auto* truth = std::get_if<std::string>(&r.truth);
    const auto* pred = std::get_if<std::string>(&*r.prediction);
    if (!truth || !pred) throw MetricError("set accuracy needs string labels");
    ++n;
    if (canonical_components(*truth) == canonical_components(*pred)) ++hit;
  }
  if (n == 0) throw EmptyInput();
  return static_cast<double>(hit) / static_cast<double>(n);
}

double compute(MetricId metric, std::span<const PredictionRecord> records) {
  switch (metric) {
    case MetricId::kAuroc: return auroc(records);
    case MetricId::kAuprc: return auprc(records);
    case MetricId::kAccuracy: return accuracy(records);
    case MetricId::kSpearman: return spearman(records);
    case MetricId::kPearson: return pearson(records);
    case MetricId::kMae: return mae(records);
    case MetricId::kMse: return mse(records);
    case MetricId::kRmse: return rmse(records);
    case MetricId::kSetAccuracy: return set_accuracy(records);
  }
  throw MetricError("unknown metric");
}

std::size_t count_unparseable(std::span<const PredictionRecord> records) {
  return static_cast<std::size_t>(std::count_if(records.begin(), records.end(), [](const auto& r) { return !scorable(r); }));
}

Json MetricReport::to_json() const {
  return Json{{"metric", std::string(taskdata::to_string(metric_id))},
              {"value", value},
              {"ci_low", ci_low},
              {"ci_high", ci_high},
              {"n", n},
              {"n_unparseable", n_unparseable},
              {"seed", seed},
              {"n_failed_resamples", n_failed_resamples}};
}

MetricReport MetricReport::from_json(const Json& j) {
  MetricReport r;
  r.metric_id = taskdata::parse_metric_id(j.at("metric").get<std::string>());
  r.value = j.at("value").get<double>();
  r.ci_low = j.at("ci_low").get<double>();
  r.ci_high = j.at("ci_high").get<double>();
  r.n = j.at("n").get<std::size_t>();
  r.n_unparseable = j.at("n_unparseable").get<std::size_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.n_failed_resamples = j.value("n_failed_resamples", std::size_t{0});
  return r;
}

MetricReport bootstrap(std::span<const PredictionRecord> records, MetricId metric, const BootstrapOptions& options) {
  if (options.n_resamples < 1) throw std::invalid_argument("n_resamples must be positive");
  std::vector<PredictionRecord> scored;
  for (const auto& r : records)
    if (scorable(r)) scored.push_back(r);
  if (scored.empty()) throw EmptyInput();
  MetricReport report;
  report.metric_id = metric;
  report.n = scored.size();
  report.n_unparseable = records.size() - scored.size();
  report.seed = options.seed;

  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(options.n_resamples));
  std::vector<PredictionRecord> sample(scored.size());
  std::exception_ptr last_error;
  for (int i = 0; i < options.n_resamples; ++i) {
    Rng rng = Rng::substream(options.seed, static_cast<std::uint64_t>(i));
    bool ok = false;
    for (int attempt = 0; attempt <= options.retry_cap && !ok; ++attempt) {
      for (auto& s : sample) s = scored[rng.below(scored.size())];
      try {
        values.push_back(compute(metric, sample));
        ok = true;
      } catch (const MetricError&) {
        last_error = std::current_exception();
      }
    }
    if (!ok) ++report.n_failed_resamples;
  }
  if (values.empty()) std::rethrow_exception(last_error);
  report.value = sample_mean(values);
  report.ci_low = std::min(percentile(values, 0.025), report.value);
  report.ci_high = std::max(percentile(values, 0.975), report.value);
  return report;
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> differences) {
  std::vector<double> d;
  for (double x : differences)
    if (x != 0.0) d.push_back(x);
  if (d.empty()) throw AllZeroDifferences();
  std::vector<double> mags;
  for (double x : d) mags.push_back(std::abs(x));
  const std::vector<double> ranks = average_ranks(mags);
  WilcoxonResult r;
  r.n_effective = static_cast<int>(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) (d[i] > 0 ? r.w_plus : r.w_minus) += ranks[i];
  r.statistic = std::min(r.w_plus, r.w_minus);
  const double n = static_cast<double>(d.size());

  if (r.n_effective <= kWilcoxonExactMax) {
    // Distribution of the positive-rank sum over all 2^n sign patterns,
    // on doubled ranks so tied half-ranks stay integral.
    std::vector<int> doubled;
    int total = 0;
    for (double rk : ranks) {
      doubled.push_back(static_cast<int>(std::lround(2 * rk)));
      total += doubled.back();
    }
    std::vector<double> ways(static_cast<std::size_t>(total) + 1, 0.0);
    ways[0] = 1.0;
    for (int w : doubled)
      for (int s = total; s >= w; --s) ways[static_cast<std::size_t>(s)] += ways[static_cast<std::size_t>(s - w)];
    const long stat2 = std::lround(2 * r.statistic);
    double tail = 0.0;
    for (long s = 0; s <= stat2; ++s) tail += ways[static_cast<std::size_t>(s)];
    r.p_value = std::min(1.0, 2.0 * tail / std::ldexp(1.0, r.n_effective));
    r.exact = true;
    return r;
  }

  double tie_term = 0.0;
  std::vector<double> sorted = mags;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  const double mean = n * (n + 1) / 4.0;
  const double var = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term / 48.0;
  const double dev = std::max(0.0, std::abs(r.w_plus - mean) - 0.5);
  const double z = dev / std::sqrt(var);
  r.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(boost::math::normal(), z)));
  return r;
}

std::vector<double> normalized_differences(std::span<const TaskScore> a, std::span<const TaskScore> b) {
  if (a.size() != b.size()) throw LengthMismatch(a.size(), b.size());
  std::vector<double> out;
  out.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].metric != b[i].metric) throw MetricError("paired tasks use different metrics");
    const double m = std::abs((a[i].value + b[i].value) / 2.0);
    double x = m == 0.0 ? a[i].value - b[i].value : (a[i].value - b[i].value) / m;
    if (taskdata::lower_is_better(a[i].metric)) x = -x;
    out.push_back(x);
  }
  return out;
}

WilcoxonResult wilcoxon_paired(std::span<const TaskScore> a, std::span<const TaskScore> b) {
  return wilcoxon_signed_rank(normalized_differences(a, b));
}

TostResult tost_equivalence(std::span<const double> a, std::span<const double> b, double delta, double alpha) {
  if (a.size() < 2 || b.size() < 2) throw MetricError("each sample needs at least two values");
  if (!(delta > 0)) throw std::invalid_argument("delta must be positive");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double va = sample_variance(a) / na, vb = sample_variance(b) / nb;
  const double se2 = va + vb;
  if (se2 == 0.0) throw DegenerateVariance();
  const double se = std::sqrt(se2);
  const double df = se2 * se2 / (va * va / (na - 1) + vb * vb / (nb - 1));
  boost::math::students_t dist(df);
  TostResult r;
  r.delta = delta;
  r.mean_difference = sample_mean(a) - sample_mean(b);
  r.p_lower = boost::math::cdf(boost::math::complement(dist, (r.mean_difference + delta) / se));
  r.p_upper = boost::math::cdf(dist, (r.mean_difference - delta) / se);
  r.p_value = std::max(r.p_lower, r.p_upper);
  r.equivalent = r.p_value < alpha;
  return r;
}

}  // namespace txbench::metrics
