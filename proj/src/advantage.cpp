#include "lcdf/advantage.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "lcdf/detail/parallel.hpp"
#include "lcdf/kernels.hpp"
#include "lcdf/truncexp.hpp"

namespace lcdf {

double esp_prefix_sum(std::span<const double> r, int degree) {
  if (degree < 0) throw std::domain_error("esp_prefix_sum: degree must be >= 0");
  return kernels::esp_prefix_sum(r.data(), r.size(), degree);
}

namespace {

// Memo for quadrature-backed overlaps: discrete priors hit a handful of
// (x1, x2) values, continuous ones blow the cache and fall through.
class OverlapCache {
 public:
  explicit OverlapCache(const Channel& channel) : channel_(channel) {}

  double overlap(double x1, double x2) {
    if (x2 < x1) std::swap(x1, x2);  // symmetry halves the key space
    std::uint64_t key = std::bit_cast<std::uint64_t>(x1) * 0x9E3779B97F4A7C15ULL ^
                        std::bit_cast<std::uint64_t>(x2);
    auto it = map_.find(key);
    if (it != map_.end()) return it->second;
    double value = channel_.overlap(x1, x2);
    if (map_.size() < kCapacity) map_.emplace(key, value);
    return value;
  }

 private:
  static constexpr std::size_t kCapacity = 1 << 16;
  const Channel& channel_;
  std::unordered_map<std::uint64_t, double> map_;
};

struct TrialStats {
  double mean = 0.0;
  double std_error = 0.0;
  double trimmed_mean = 0.0;
  bool flagged = false;
};

TrialStats reduce_trials(std::vector<double>& values) {
  const std::size_t n = values.size();
  double mean = kernels::sum_comp(values.data(), n) / static_cast<double>(n);
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var = n > 1 ? var / (static_cast<double>(n) * (n - 1)) : 0.0;

  TrialStats stats;
  stats.mean = mean;
  stats.std_error = std::sqrt(var);

  std::size_t drop = (n + 999) / 1000;  // top 0.1%, at least one trial
  if (drop < n) {
    std::vector<double> sorted = values;
    std::nth_element(sorted.begin(), sorted.end() - drop, sorted.end());
    double kept = kernels::sum_comp(sorted.data(), n - drop);
    stats.trimmed_mean = kept / static_cast<double>(n - drop);
  } else {
    stats.trimmed_mean = mean;
  }
  double scale = std::max({std::fabs(stats.mean), std::fabs(stats.trimmed_mean), 1e-300});
  stats.flagged = std::fabs(stats.mean - stats.trimmed_mean) > 0.2 * scale;
  return stats;
}

AdvantageEstimate finish(std::string estimator, int degree, std::vector<double>& values) {
  TrialStats stats = reduce_trials(values);
  AdvantageEstimate est;
  est.estimator = std::move(estimator);
  est.degree = degree;
  est.trials = values.size();
  est.mean = stats.mean;
  est.std_error = stats.std_error;
  est.trimmed_mean = stats.trimmed_mean;
  est.heavy_tail_flagged = stats.flagged;
  return est;
}

void check_even(int degree, const char* who) {
  if (degree < 0 || degree % 2 != 0)
    throw std::domain_error(std::string(who) + ": degree must be even and >= 0");
}

void fill_overlaps(const Channel& channel, OverlapCache* cache, std::span<const double> x1,
                   std::span<const double> x2, std::span<double> r) {
  const Interval domain = channel.signal_domain();
  for (std::size_t i = 0; i < x1.size(); ++i) {
    if (!domain.contains(x1[i]) || !domain.contains(x2[i]))
      throw std::domain_error("signal coordinate " + std::to_string(i) +
                              " lies outside the channel domain");
    r[i] = cache ? cache->overlap(x1[i], x2[i]) : channel.overlap(x1[i], x2[i]);
  }
}

// Shared pair-drawing front end for the two channel estimators.
template <typename Reduce>
std::vector<double> channel_trials(const Prior& prior, const Channel& channel,
                                   std::size_t trials, std::uint64_t seed, int threads,
                                   Reduce reduce) {
  const std::size_t n = prior.dim();
  const bool want_cache = !channel.cheap_overlap();
  return detail::run_indexed(trials, threads, [&, n, want_cache](std::size_t t) {
    thread_local std::vector<double> x1, x2, r;
    thread_local std::unique_ptr<OverlapCache> memo;
    thread_local const void* memo_tag = nullptr;
    x1.resize(n);
    x2.resize(n);
    r.resize(n);
    OverlapCache* cache = nullptr;
    if (want_cache) {
      if (memo_tag != static_cast<const void*>(&channel)) {
        memo = std::make_unique<OverlapCache>(channel);
        memo_tag = &channel;
      }
      cache = memo.get();
    }
    RngStream s1(seed, 2 * t), s2(seed, 2 * t + 1);
    prior.sample_into(s1, x1);
    prior.sample_into(s2, x2);
    fill_overlaps(channel, cache, x1, x2, r);
    return reduce(std::span<const double>(r));
  });
}

}  // namespace

AdvantageEstimate cadv_mc(const Prior& prior, const Channel& channel, int degree,
                          std::size_t trials, std::uint64_t seed, int threads) {
  if (degree < 0) throw std::domain_error("cadv_mc: degree must be >= 0");
  auto values = channel_trials(prior, channel, trials, seed, threads,
                               [degree](std::span<const double> r) {
                                 return kernels::esp_prefix_sum(r.data(), r.size(), degree);
                               });
  return finish("subset_formula", degree, values);
}

AdvantageEstimate cadv_exp_bound_mc(const Prior& prior, const Channel& channel, int degree,
                                    std::size_t trials, std::uint64_t seed, int threads) {
  check_even(degree, "cadv_exp_bound_mc");
  auto values = channel_trials(prior, channel, trials, seed, threads,
                               [degree](std::span<const double> r) {
                                 return trunc_exp(kernels::sum_comp(r.data(), r.size()), degree);
                               });
  return finish("exp_bound", degree, values);
}

AdvantageEstimate univ_mc(const Prior& prior, double sigma2, int degree, std::size_t trials,
                          std::uint64_t seed, int threads) {
  check_even(degree, "univ_mc");
  if (!(sigma2 > 0.0)) throw std::domain_error("univ_mc: sigma2 must be positive");
  const std::size_t n = prior.dim();
  auto values = detail::run_indexed(trials, threads, [&, n](std::size_t t) {
    thread_local std::vector<double> x1, x2;
    x1.resize(n);
    x2.resize(n);
    RngStream s1(seed, 2 * t), s2(seed, 2 * t + 1);
    prior.sample_into(s1, x1);
    prior.sample_into(s2, x2);
    return trunc_exp(kernels::dot(x1.data(), x2.data(), n) / sigma2, degree);
  });
  return finish("univ", degree, values);
}

UniversalityReport universality_report(const Prior& prior, const Channel& channel, int degree,
                                       std::size_t trials, std::uint64_t seed, int threads) {
  check_even(degree, "universality_report");
  if (degree < 2)
    throw std::domain_error("universality_report: degree must be >= 2 for the D-2 term");
  UniversalityReport report;
  report.fisher_information = channel.fisher_information();
  if (!(report.fisher_information > 0.0))
    throw std::domain_error("universality_report: channel is degenerate");
  report.assumption_report = check_assumptions(prior, std::min<std::size_t>(trials, 256), seed);
  report.assumptions_pass = report.assumption_report.all_pass();
  double sigma2 = 1.0 / report.fisher_information;
  report.cadv = cadv_mc(prior, channel, degree, trials, seed, threads);
  report.univ_d = univ_mc(prior, sigma2, degree, trials, seed, threads);
  report.univ_dm2 = univ_mc(prior, sigma2, degree - 2, trials, seed, threads);
  report.ratio = report.cadv.mean / report.univ_d.mean;
  return report;
}

}  // namespace lcdf
