#include "lcdf/priors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lcdf {

SpikeLaw SpikeLaw::sparse_rademacher(double s) {
  if (!(s > 0.0 && s <= 1.0))
    throw std::invalid_argument("sparse_rademacher: sparsity must lie in (0, 1]");
  SpikeLaw law;
  law.kind = Kind::sparse_rademacher;
  law.sparsity = s;
  return law;
}

SpikeLaw SpikeLaw::two_point(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("two_point: atom probability must lie in (0, 1)");
  SpikeLaw law;
  law.kind = Kind::two_point;
  law.p = p;
  return law;
}

double SpikeLaw::sample(RngStream& rng) const {
  switch (kind) {
    case Kind::rademacher:
      return rng.next_bernoulli(0.5) ? 1.0 : -1.0;
    case Kind::sparse_rademacher: {
      double u = rng.next_double();
      if (u >= sparsity) return 0.0;
      double a = 1.0 / std::sqrt(sparsity);
      return u < 0.5 * sparsity ? a : -a;
    }
    case Kind::uniform_pm:
      return std::sqrt(3.0) * (2.0 * rng.next_double() - 1.0);
    case Kind::two_point: {
      double hi = std::sqrt((1.0 - p) / p);
      double lo = -std::sqrt(p / (1.0 - p));
      return rng.next_bernoulli(p) ? hi : lo;
    }
  }
  return 0.0;
}

double SpikeLaw::sup_bound() const {
  switch (kind) {
    case Kind::rademacher:
      return 1.0;
    case Kind::sparse_rademacher:
      return 1.0 / std::sqrt(sparsity);
    case Kind::uniform_pm:
      return std::sqrt(3.0);
    case Kind::two_point:
      return std::max(std::sqrt((1.0 - p) / p), std::sqrt(p / (1.0 - p)));
  }
  return 0.0;
}

std::string SpikeLaw::name() const {
  switch (kind) {
    case Kind::rademacher:
      return "rademacher";
    case Kind::sparse_rademacher:
      return "sparse_rademacher(s=" + std::to_string(sparsity) + ")";
    case Kind::uniform_pm:
      return "uniform_pm";
    case Kind::two_point:
      return "two_point(p=" + std::to_string(p) + ")";
  }
  return "?";
}

namespace detail {

class PriorImpl {
 public:
  virtual ~PriorImpl() = default;
  virtual std::size_t dim() const = 0;
  virtual void sample_into(RngStream& rng, std::span<double> out) const = 0;
  virtual std::optional<double> sup_bound() const = 0;
  virtual std::optional<double> norm_bound(int k) const = 0;
  virtual const std::string& structure() const = 0;
};

struct PriorAccess {
  static std::shared_ptr<const PriorImpl> impl(const Prior& prior) { return prior.impl_; }
};

namespace {

void check_out(const PriorImpl& impl, std::span<double> out) {
  if (out.size() != impl.dim())
    throw std::invalid_argument("prior sample buffer has wrong dimension");
}

class IidPrior final : public PriorImpl {
 public:
  IidPrior(SpikeLaw pi, std::size_t n, double scale) : pi_(pi), n_(n), scale_(scale) {
    if (n == 0) throw std::invalid_argument("iid_prior: dimension must be positive");
    if (!(scale > 0.0)) throw std::invalid_argument("iid_prior: scale must be positive");
    structure_ = "iid(" + pi.name() + ", n=" + std::to_string(n) +
                 (scale != 1.0 ? ", scale=" + std::to_string(scale) : "") + ")";
  }
  std::size_t dim() const override { return n_; }
  void sample_into(RngStream& rng, std::span<double> out) const override {
    check_out(*this, out);
    for (auto& v : out) v = scale_ * pi_.sample(rng);
  }
  std::optional<double> sup_bound() const override { return scale_ * pi_.sup_bound(); }
  // ||x||_k ~ N^{1/k} for O(1) entries, so the N^{1/4 - 1/k} statistic grows
  // like N^{1/4}: no constant bound exists.
  std::optional<double> norm_bound(int) const override { return std::nullopt; }
  const std::string& structure() const override { return structure_; }

 private:
  SpikeLaw pi_;
  std::size_t n_;
  double scale_;
  std::string structure_;
};

class SpikedMatrixPrior final : public PriorImpl {
 public:
  SpikedMatrixPrior(std::size_t n, double lambda, SpikeLaw pi) : n_(n), lambda_(lambda), pi_(pi) {
    if (n < 2) throw std::invalid_argument("spiked_matrix_prior: need n >= 2");
    if (!(lambda > 0.0)) throw std::invalid_argument("spiked_matrix_prior: lambda must be > 0");
    dim_ = n * (n - 1) / 2;
    structure_ = "spiked_matrix(n=" + std::to_string(n) + ", lambda=" + std::to_string(lambda) +
                 ", pi=" + pi.name() + ")";
  }
  std::size_t dim() const override { return dim_; }
  void sample_into(RngStream& rng, std::span<double> out) const override {
    check_out(*this, out);
    std::vector<double> x(n_);
    for (auto& v : x) v = pi_.sample(rng);
    const double a = lambda_ / std::sqrt(static_cast<double>(n_));
    std::size_t idx = 0;
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i + 1; j < n_; ++j) out[idx++] = a * x[i] * x[j];
  }
  std::optional<double> sup_bound() const override {
    double k = pi_.sup_bound();
    return lambda_ * k * k / std::sqrt(static_cast<double>(n_));
  }
  std::optional<double> norm_bound(int k) const override {
    // ||X||_k <= lambda K^2 n^{2/k - 1/2}, and N = n(n-1)/2 <= n^2/2, giving
    // the N-free constant lambda K^2 2^{1/4 - 1/k}
    double kk = pi_.sup_bound();
    return lambda_ * kk * kk * std::pow(2.0, 0.25 - 1.0 / k);
  }
  const std::string& structure() const override { return structure_; }

 private:
  std::size_t n_, dim_;
  double lambda_;
  SpikeLaw pi_;
  std::string structure_;
};

class SpikedTensorPrior final : public PriorImpl {
 public:
  SpikedTensorPrior(std::size_t n, int q, double lambda, SpikeLaw pi)
      : n_(n), q_(q), lambda_(lambda), pi_(pi) {
    if (q < 3) throw std::invalid_argument("spiked_tensor_prior: need q >= 3");
    if (n < static_cast<std::size_t>(q))
      throw std::domain_error("spiked_tensor_prior: need n >= q");
    if (!(lambda > 0.0)) throw std::invalid_argument("spiked_tensor_prior: lambda must be > 0");
    dim_ = 1;
    for (int j = 0; j < q; ++j) dim_ = dim_ * (n - j) / (j + 1);
    structure_ = "spiked_tensor(n=" + std::to_string(n) + ", q=" + std::to_string(q) +
                 ", lambda=" + std::to_string(lambda) + ", pi=" + pi.name() + ")";
  }
  std::size_t dim() const override { return dim_; }
  void sample_into(RngStream& rng, std::span<double> out) const override {
    check_out(*this, out);
    std::vector<double> x(n_);
    for (auto& v : x) v = pi_.sample(rng);
    const double a = lambda_ * std::pow(static_cast<double>(n_), -0.25 * q_);
    std::vector<std::size_t> idx(q_);
    for (int j = 0; j < q_; ++j) idx[j] = j;
    std::size_t pos = 0;
    while (true) {
      double prod = a;
      for (int j = 0; j < q_; ++j) prod *= x[idx[j]];
      out[pos++] = prod;
      // next lexicographic combination
      int j = q_ - 1;
      while (j >= 0 && idx[j] == n_ - q_ + j) --j;
      if (j < 0) break;
      ++idx[j];
      for (int l = j + 1; l < q_; ++l) idx[l] = idx[l - 1] + 1;
    }
  }
  std::optional<double> sup_bound() const override {
    return lambda_ * std::pow(pi_.sup_bound(), q_) *
           std::pow(static_cast<double>(n_), -0.25 * q_);
  }
  std::optional<double> norm_bound(int) const override {
    // ||X||_k N^{1/4-1/k} <= lambda K^q (N / n^q)^{1/4} * (N^{1/k}/N^{1/k}) and
    // N = C(n,q) <= n^q / q!, so lambda K^q / (q!)^{1/4} works for every k
    double f = 1.0;
    for (int j = 2; j <= q_; ++j) f *= j;
    return lambda_ * std::pow(pi_.sup_bound(), q_) / std::pow(f, 0.25);
  }
  const std::string& structure() const override { return structure_; }

 private:
  std::size_t n_, dim_;
  int q_;
  double lambda_;
  SpikeLaw pi_;
  std::string structure_;
};

class DilutedPrior final : public PriorImpl {
 public:
  DilutedPrior(std::shared_ptr<const PriorImpl> inner, std::size_t k)
      : inner_(std::move(inner)), k_(k) {
    if (k == 0) throw std::invalid_argument("dilute: k must be >= 1");
    structure_ = "diluted(k=" + std::to_string(k) + ", " + inner_->structure() + ")";
  }
  std::size_t dim() const override { return k_ * inner_->dim(); }
  void sample_into(RngStream& rng, std::span<double> out) const override {
    check_out(*this, out);
    std::size_t m = inner_->dim();
    std::vector<double> x(m);
    inner_->sample_into(rng, x);
    const double s = 1.0 / std::sqrt(static_cast<double>(k_));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t r = 0; r < k_; ++r) out[i * k_ + r] = s * x[i];
  }
  std::optional<double> sup_bound() const override {
    auto a = inner_->sup_bound();
    if (!a) return std::nullopt;
    return *a / std::sqrt(static_cast<double>(k_));
  }
  std::optional<double> norm_bound(int k) const override {
    // ||x~||_j stat = k^{-1/4} * inner stat; inherit and improve when declared
    auto b = inner_->norm_bound(k);
    if (b) return *b * std::pow(static_cast<double>(k_), -0.25);
    // an undeclared bounded iid inner at fixed dimension m gets the crude
    // bound ||x||_j <= A m^{1/j}; after dilution the statistic is
    // A m^{1/j} k^{-1/4} (km)^{1/4 - 1/j} <= A m^{1/4} k^{-1/4} -- still
    // m-dependent, so stay undeclared
    return std::nullopt;
  }
  const std::string& structure() const override { return structure_; }

 private:
  std::shared_ptr<const PriorImpl> inner_;
  std::size_t k_;
  std::string structure_;
};

class TruncatedPrior final : public PriorImpl {
 public:
  TruncatedPrior(std::shared_ptr<const PriorImpl> inner, double sup_bound,
                 std::vector<double> norm_bounds)
      : inner_(std::move(inner)), sup_(sup_bound), norms_(std::move(norm_bounds)) {
    if (!(sup_ > 0.0)) throw std::invalid_argument("truncate_to_bounds: bound must be positive");
    structure_ = "truncated(A=" + std::to_string(sup_) + ", " + inner_->structure() + ")";
  }
  std::size_t dim() const override { return inner_->dim(); }
  void sample_into(RngStream& rng, std::span<double> out) const override {
    inner_->sample_into(rng, out);
    const double n = static_cast<double>(dim());
    bool ok = true;
    for (double v : out)
      if (std::fabs(v) > sup_) ok = false;
    for (std::size_t j = 0; ok && j < norms_.size(); ++j) {
      int k = 2 * static_cast<int>(j) + 2;
      double s = 0.0;
      for (double v : out) s += std::pow(std::fabs(v), k);
      double stat = std::pow(s, 1.0 / k) * std::pow(n, 0.25 - 1.0 / k);
      if (stat > norms_[j]) ok = false;
    }
    if (!ok)
      for (auto& v : out) v = 0.0;
  }
  std::optional<double> sup_bound() const override { return sup_; }
  std::optional<double> norm_bound(int k) const override {
    std::size_t j = static_cast<std::size_t>(k / 2) - 1;
    if (j < norms_.size()) return norms_[j];
    return std::nullopt;
  }
  const std::string& structure() const override { return structure_; }

 private:
  std::shared_ptr<const PriorImpl> inner_;
  double sup_;
  std::vector<double> norms_;
  std::string structure_;
};

}  // namespace
}  // namespace detail

Prior::Prior(std::shared_ptr<const detail::PriorImpl> impl) : impl_(std::move(impl)) {}

std::size_t Prior::dim() const { return impl_->dim(); }

void Prior::sample_into(RngStream& rng, std::span<double> out) const {
  impl_->sample_into(rng, out);
}

std::vector<double> Prior::sample(RngStream& rng) const {
  std::vector<double> out(dim());
  impl_->sample_into(rng, out);
  return out;
}

std::optional<double> Prior::declared_sup_bound() const { return impl_->sup_bound(); }

std::optional<double> Prior::declared_norm_bound(int k) const {
  if (k < 2 || k > 12 || k % 2 != 0)
    throw std::invalid_argument("declared_norm_bound: k must be even in [2, 12]");
  return impl_->norm_bound(k);
}

const std::string& Prior::structure() const { return impl_->structure(); }

Prior iid_prior(SpikeLaw pi, std::size_t n, double scale) {
  return Prior(std::make_shared<detail::IidPrior>(pi, n, scale));
}

Prior spiked_matrix_prior(std::size_t n, double lambda, SpikeLaw pi) {
  return Prior(std::make_shared<detail::SpikedMatrixPrior>(n, lambda, pi));
}

Prior spiked_tensor_prior(std::size_t n, int q, double lambda, SpikeLaw pi) {
  return Prior(std::make_shared<detail::SpikedTensorPrior>(n, q, lambda, pi));
}

Prior dilute(const Prior& inner, std::size_t k) {
  return Prior(std::make_shared<detail::DilutedPrior>(detail::PriorAccess::impl(inner), k));
}

Prior truncate_to_bounds(const Prior& inner, double sup_bound,
                         std::span<const double> norm_bounds_2_to_12) {
  return Prior(std::make_shared<detail::TruncatedPrior>(
      detail::PriorAccess::impl(inner), sup_bound,
      std::vector<double>(norm_bounds_2_to_12.begin(), norm_bounds_2_to_12.end())));
}

bool AssumptionReport::all_pass() const {
  return sup_verdict == AssumptionVerdict::pass && low_norm_verdict == AssumptionVerdict::pass &&
         high_norm_verdict == AssumptionVerdict::pass;
}

AssumptionReport check_assumptions(const Prior& prior, std::size_t samples, std::uint64_t seed) {
  if (samples == 0) throw std::invalid_argument("check_assumptions: need samples >= 1");
  AssumptionReport report;
  report.dim = prior.dim();
  report.samples = samples;
  const double n = static_cast<double>(prior.dim());
  std::vector<double> x(prior.dim());
  for (std::size_t t = 0; t < samples; ++t) {
    RngStream rng(seed, t);
    prior.sample_into(rng, x);
    double sup = 0.0;
    double pow_sum[6] = {0};
    for (double v : x) {
      double a = std::fabs(v);
      sup = std::max(sup, a);
      double a2 = a * a;
      double p = 1.0;
      for (int j = 0; j < 6; ++j) {
        p *= a2;
        pow_sum[j] += p;
      }
    }
    report.empirical_sup = std::max(report.empirical_sup, sup);
    for (int j = 0; j < 6; ++j) {
      int k = 2 * j + 2;
      double stat = std::pow(pow_sum[j], 1.0 / k) * std::pow(n, 0.25 - 1.0 / k);
      report.empirical_norm_stat[j] = std::max(report.empirical_norm_stat[j], stat);
    }
  }

  const double slack = 1.0 + 1e-9;
  if (auto a = prior.declared_sup_bound())
    report.sup_verdict = report.empirical_sup <= *a * slack ? AssumptionVerdict::pass
                                                            : AssumptionVerdict::fail;
  auto verdict_for = [&](int j_lo, int j_hi) {
    AssumptionVerdict v = AssumptionVerdict::pass;
    for (int j = j_lo; j <= j_hi; ++j) {
      auto b = prior.declared_norm_bound(2 * j + 2);
      if (!b) return AssumptionVerdict::fail;  // no constant bound can exist
      if (report.empirical_norm_stat[j] > *b * slack) v = AssumptionVerdict::fail;
    }
    return v;
  };
  report.low_norm_verdict = verdict_for(0, 2);
  report.high_norm_verdict = verdict_for(3, 5);
  return report;
}

}  // namespace lcdf
