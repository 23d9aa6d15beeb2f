#include "lcdf/efron_stein.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "lcdf/kernels.hpp"

namespace lcdf {

namespace {

constexpr std::size_t kStateCap = 1u << 20;

void validate_pmf(const std::vector<double>& pmf, const char* what, bool strictly_positive) {
  double sum = 0.0;
  for (double p : pmf) {
    if (p < 0.0 || (strictly_positive && p <= 0.0))
      throw std::invalid_argument(std::string(what) + ": probabilities must be " +
                                  (strictly_positive ? "strictly positive" : "non-negative"));
    sum += p;
  }
  if (std::fabs(sum - 1.0) > 1e-14 * pmf.size())
    throw std::invalid_argument(std::string(what) + ": pmf sums to " + std::to_string(sum));
}

int popcount(std::uint32_t mask) { return std::popcount(mask); }

}  // namespace

DiscreteLvm::DiscreteLvm(std::vector<std::size_t> alphabet_sizes,
                         std::vector<std::vector<double>> null_pmfs,
                         std::vector<SignalAtom> signals)
    : alphabet_(std::move(alphabet_sizes)), null_(std::move(null_pmfs)),
      signals_(std::move(signals)) {
  const std::size_t n = alphabet_.size();
  if (n == 0 || n > 31) throw std::invalid_argument("DiscreteLvm: need 1..31 coordinates");
  if (null_.size() != n) throw std::invalid_argument("DiscreteLvm: null pmf count mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    if (alphabet_[i] < 1 || null_[i].size() != alphabet_[i])
      throw std::invalid_argument("DiscreteLvm: alphabet/pmf size mismatch");
    validate_pmf(null_[i], "null pmf", true);
    if (states_ > kStateCap / alphabet_[i])
      throw std::invalid_argument("DiscreteLvm: state space exceeds the 2^20 cap");
    states_ *= alphabet_[i];
  }
  if (signals_.empty()) throw std::invalid_argument("DiscreteLvm: empty signal support");
  double total = 0.0;
  for (const auto& atom : signals_) {
    if (atom.prob < 0.0) throw std::invalid_argument("DiscreteLvm: negative signal probability");
    total += atom.prob;
    if (atom.channel_pmfs.size() != n)
      throw std::invalid_argument("DiscreteLvm: channel pmf count mismatch");
    for (std::size_t i = 0; i < n; ++i) {
      if (atom.channel_pmfs[i].size() != alphabet_[i])
        throw std::invalid_argument("DiscreteLvm: channel pmf size mismatch");
      validate_pmf(atom.channel_pmfs[i], "channel pmf", false);
    }
  }
  if (std::fabs(total - 1.0) > 1e-14 * signals_.size())
    throw std::invalid_argument("DiscreteLvm: signal probabilities sum to " +
                                std::to_string(total));

  stride_.assign(n, 1);
  for (std::size_t i = n; i-- > 1;) stride_[i - 1] = stride_[i] * alphabet_[i];

  weight_.assign(states_, 1.0);
  std::vector<std::size_t> digits(n, 0);
  for (std::size_t s = 0; s < states_; ++s) {
    double w = 1.0;
    for (std::size_t i = 0; i < n; ++i) w *= null_[i][digits[i]];
    weight_[s] = w;
    for (std::size_t i = n; i-- > 0;) {
      if (++digits[i] < alphabet_[i]) break;
      digits[i] = 0;
    }
  }
}

TableFunction likelihood_vector(const DiscreteLvm& model) {
  const std::size_t n = model.coords();
  const std::size_t states = model.states();
  TableFunction table;
  table.values.assign(states, 0.0);
  // per-atom, per-coordinate likelihood ratios
  for (const auto& atom : model.signals()) {
    std::vector<std::vector<double>> ratio(n);
    for (std::size_t i = 0; i < n; ++i) {
      ratio[i].resize(model.alphabet_size(i));
      for (std::size_t y = 0; y < model.alphabet_size(i); ++y)
        ratio[i][y] = atom.channel_pmfs[i][y] / model.null_pmf(i)[y];
    }
    std::vector<std::size_t> digits(n, 0);
    for (std::size_t s = 0; s < states; ++s) {
      double prod = atom.prob;
      for (std::size_t i = 0; i < n; ++i) prod *= ratio[i][digits[i]];
      table.values[s] += prod;
      for (std::size_t i = n; i-- > 0;) {
        if (++digits[i] < model.alphabet_size(i)) break;
        digits[i] = 0;
      }
    }
  }
  return table;
}

namespace {

// average out one coordinate in place
void avg_one(const DiscreteLvm& model, std::vector<double>& v, std::size_t i) {
  const std::size_t k = model.alphabet_size(i);
  if (k == 1) return;
  const std::size_t stride = model.stride(i);
  const std::size_t block = k * stride;
  const std::vector<double>& q = model.null_pmf(i);
  for (std::size_t outer = 0; outer < v.size(); outer += block) {
    for (std::size_t inner = 0; inner < stride; ++inner) {
      const std::size_t base = outer + inner;
      double mean = 0.0;
      for (std::size_t y = 0; y < k; ++y) mean += q[y] * v[base + y * stride];
      for (std::size_t y = 0; y < k; ++y) v[base + y * stride] = mean;
    }
  }
}

}  // namespace

TableFunction avg_operator(const DiscreteLvm& model, const TableFunction& f,
                           std::uint32_t t_mask) {
  if (f.values.size() != model.states())
    throw std::invalid_argument("avg_operator: table size mismatch");
  TableFunction out = f;
  for (std::size_t i = 0; i < model.coords(); ++i)
    if (t_mask & (1u << i)) avg_one(model, out.values, i);
  return out;
}

TableFunction project_hat(const DiscreteLvm& model, const TableFunction& f,
                          std::uint32_t t_mask) {
  const int t_size = popcount(t_mask);
  if (t_size > 20) throw std::invalid_argument("project_hat: |T| > 20 refused");
  const std::uint32_t full = (model.coords() >= 32) ? ~0u : ((1u << model.coords()) - 1);
  // sum_{S subseteq T} (-1)^{|T|-|S|} Avg_{[N] \ S}
  TableFunction out;
  out.values.assign(model.states(), 0.0);
  std::uint32_t s_mask = t_mask;
  while (true) {
    TableFunction term = avg_operator(model, f, full & ~s_mask);
    double sign = ((t_size - popcount(s_mask)) % 2 == 0) ? 1.0 : -1.0;
    for (std::size_t idx = 0; idx < out.values.size(); ++idx)
      out.values[idx] += sign * term.values[idx];
    if (s_mask == 0) break;
    s_mask = (s_mask - 1) & t_mask;  // next subset, descending
  }
  return out;
}

TableFunction project_hat_product(const DiscreteLvm& model, const TableFunction& f,
                                  std::uint32_t t_mask) {
  const std::uint32_t full = (model.coords() >= 32) ? ~0u : ((1u << model.coords()) - 1);
  TableFunction out = avg_operator(model, f, full & ~t_mask);
  for (std::size_t i = 0; i < model.coords(); ++i) {
    if (!(t_mask & (1u << i))) continue;
    TableFunction averaged = out;
    avg_one(model, averaged.values, i);
    for (std::size_t idx = 0; idx < out.values.size(); ++idx)
      out.values[idx] -= averaged.values[idx];
  }
  return out;
}

namespace {

double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  double r = 1.0;
  for (std::size_t j = 1; j <= k; ++j) r = r * (n - k + j) / j;
  return r;
}

TableFunction project_leq_closed_form(const DiscreteLvm& model, const TableFunction& f,
                                      int degree) {
  // sum over |T| <= D of (-1)^{D-|T|} C(N-|T|-1, D-|T|) Avg_{[N]\T}
  const std::size_t n = model.coords();
  const std::uint32_t full = (n >= 32) ? ~0u : ((1u << n) - 1);
  TableFunction out;
  out.values.assign(model.states(), 0.0);
  for (std::uint32_t t_mask = 0;; ++t_mask) {
    int t = popcount(t_mask);
    if (t <= degree) {
      double coeff = ((degree - t) % 2 == 0 ? 1.0 : -1.0) *
                     binomial(n - static_cast<std::size_t>(t) - 1,
                              static_cast<std::size_t>(degree - t));
      if (static_cast<std::size_t>(degree) >= n && t == static_cast<int>(n))
        coeff = 1.0;  // D >= N: the identity survives as the single term
      if (coeff != 0.0) {
        TableFunction term = avg_operator(model, f, full & ~t_mask);
        for (std::size_t idx = 0; idx < out.values.size(); ++idx)
          out.values[idx] += coeff * term.values[idx];
      }
    }
    if (t_mask == full) break;
  }
  return out;
}

}  // namespace

TableFunction project_leq(const DiscreteLvm& model, const TableFunction& f, int degree) {
  if (degree < 0) throw std::invalid_argument("project_leq: degree must be >= 0");
  const std::size_t n = model.coords();
  if (static_cast<std::size_t>(degree) > n) degree = static_cast<int>(n);
  const std::uint32_t full = (n >= 32) ? ~0u : ((1u << n) - 1);

  TableFunction out;
  out.values.assign(model.states(), 0.0);
  for (std::uint32_t t_mask = 0;; ++t_mask) {
    if (popcount(t_mask) <= degree) {
      TableFunction hat = project_hat(model, f, t_mask);
      for (std::size_t idx = 0; idx < out.values.size(); ++idx)
        out.values[idx] += hat.values[idx];
    }
    if (t_mask == full) break;
  }

  // cross-check against the closed-form operator combination
  TableFunction check = project_leq_closed_form(model, f, degree);
  double scale = 0.0;
  for (double v : out.values) scale = std::max(scale, std::fabs(v));
  for (std::size_t idx = 0; idx < out.values.size(); ++idx)
    if (std::fabs(out.values[idx] - check.values[idx]) > 1e-10 * std::max(1.0, scale))
      throw std::logic_error("project_leq: hat-sum and closed-form routes disagree");
  return out;
}

double inner_q(const DiscreteLvm& model, const TableFunction& f, const TableFunction& g) {
  const auto& w = model.state_weights();
  std::vector<double> terms(model.states());
  for (std::size_t s = 0; s < model.states(); ++s) terms[s] = w[s] * f.values[s] * g.values[s];
  return kernels::sum_comp(terms.data(), terms.size());
}

double norm_q(const DiscreteLvm& model, const TableFunction& f) {
  return std::sqrt(inner_q(model, f, f));
}

double cadv_exact(const DiscreteLvm& model, int degree) {
  TableFunction l = likelihood_vector(model);
  TableFunction projected = project_leq(model, l, degree);
  return norm_q(model, projected);
}

double cadv_formula_exact(const DiscreteLvm& model, int degree) {
  const std::size_t n = model.coords();
  const auto& signals = model.signals();
  const std::size_t m = signals.size();
  if (m > 4096) throw std::invalid_argument("cadv_formula_exact: signal support too large");
  // R[i](s1, s2) = sum_y P1 P2 / Q - 1
  std::vector<std::vector<double>> overlaps(n, std::vector<double>(m * m));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t s1 = 0; s1 < m; ++s1)
      for (std::size_t s2 = 0; s2 < m; ++s2) {
        double acc = 0.0;
        for (std::size_t y = 0; y < model.alphabet_size(i); ++y)
          acc += signals[s1].channel_pmfs[i][y] * signals[s2].channel_pmfs[i][y] /
                 model.null_pmf(i)[y];
        overlaps[i][s1 * m + s2] = acc - 1.0;
      }
  std::vector<double> r(n), terms(m * m);
  for (std::size_t s1 = 0; s1 < m; ++s1)
    for (std::size_t s2 = 0; s2 < m; ++s2) {
      for (std::size_t i = 0; i < n; ++i) r[i] = overlaps[i][s1 * m + s2];
      terms[s1 * m + s2] = signals[s1].prob * signals[s2].prob *
                           kernels::esp_prefix_sum(r.data(), n, degree);
    }
  return std::sqrt(kernels::sum_comp(terms.data(), terms.size()));
}

std::map<std::uint32_t, double> chi2_decomposition(const DiscreteLvm& model) {
  TableFunction l = likelihood_vector(model);
  std::map<std::uint32_t, double> parts;
  const std::uint32_t full =
      (model.coords() >= 32) ? ~0u : ((1u << model.coords()) - 1);
  for (std::uint32_t t_mask = 1;; ++t_mask) {
    TableFunction hat = project_hat(model, l, t_mask);
    parts[t_mask] = inner_q(model, hat, hat);
    if (t_mask == full) break;
  }
  return parts;
}

double chi_squared(const DiscreteLvm& model) {
  TableFunction l = likelihood_vector(model);
  return inner_q(model, l, l) - 1.0;
}

DiscreteLvm restrict_model(const DiscreteLvm& model, std::uint32_t t_mask) {
  std::vector<std::size_t> alphabets;
  std::vector<std::vector<double>> nulls;
  std::vector<DiscreteLvm::SignalAtom> atoms(model.signals().size());
  for (std::size_t a = 0; a < atoms.size(); ++a) atoms[a].prob = model.signals()[a].prob;
  for (std::size_t i = 0; i < model.coords(); ++i) {
    if (!(t_mask & (1u << i))) continue;
    alphabets.push_back(model.alphabet_size(i));
    nulls.push_back(model.null_pmf(i));
    for (std::size_t a = 0; a < atoms.size(); ++a)
      atoms[a].channel_pmfs.push_back(model.signals()[a].channel_pmfs[i]);
  }
  if (alphabets.empty()) throw std::invalid_argument("restrict_model: empty coordinate set");
  return DiscreteLvm(std::move(alphabets), std::move(nulls), std::move(atoms));
}

DiscreteLvm random_discrete_lvm(RngStream& rng, std::size_t max_coords,
                                std::size_t max_alphabet, std::size_t max_support) {
  auto rand_size = [&](std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(rng.next_double() * static_cast<double>(hi - lo + 1));
  };
  const std::size_t n = std::min(rand_size(1, max_coords), max_coords);
  std::vector<std::size_t> alphabets(n);
  std::vector<std::vector<double>> nulls(n);
  for (std::size_t i = 0; i < n; ++i) {
    alphabets[i] = std::min(rand_size(2, max_alphabet), max_alphabet);
    nulls[i].resize(alphabets[i]);
    double sum = 0.0;
    for (auto& p : nulls[i]) {
      p = 0.05 + rng.next_double();  // bounded away from zero
      sum += p;
    }
    for (auto& p : nulls[i]) p /= sum;
  }
  const std::size_t support = std::min(rand_size(1, max_support), max_support);
  std::vector<DiscreteLvm::SignalAtom> atoms(support);
  double total = 0.0;
  for (auto& atom : atoms) {
    atom.prob = 0.1 + rng.next_double();
    total += atom.prob;
    atom.channel_pmfs.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      atom.channel_pmfs[i].resize(alphabets[i]);
      double sum = 0.0;
      for (auto& p : atom.channel_pmfs[i]) {
        p = 0.02 + rng.next_double();
        sum += p;
      }
      for (auto& p : atom.channel_pmfs[i]) p /= sum;
    }
  }
  for (auto& atom : atoms) atom.prob /= total;
  return DiscreteLvm(std::move(alphabets), std::move(nulls), std::move(atoms));
}

DiscreteLvm parse_discrete_lvm(const std::string& json_text) {
  nlohmann::json doc = nlohmann::json::parse(json_text);
  std::vector<std::size_t> alphabets = doc.at("alphabets").get<std::vector<std::size_t>>();
  auto nulls = doc.at("null_pmfs").get<std::vector<std::vector<double>>>();
  std::vector<DiscreteLvm::SignalAtom> atoms;
  for (const auto& entry : doc.at("signals")) {
    DiscreteLvm::SignalAtom atom;
    atom.prob = entry.at("prob").get<double>();
    atom.channel_pmfs = entry.at("channel_pmfs").get<std::vector<std::vector<double>>>();
    atoms.push_back(std::move(atom));
  }
  return DiscreteLvm(std::move(alphabets), std::move(nulls), std::move(atoms));
}

}  // namespace lcdf
