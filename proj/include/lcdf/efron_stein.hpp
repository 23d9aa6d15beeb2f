#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lcdf/rng.hpp"

namespace lcdf {

// Fully enumerable latent variable model on a small finite product space:
// per-coordinate null pmfs Q_i, a finite signal support, and per-atom
// channel pmfs P_{i,s}. Serves as the exact oracle for everything the
// Monte-Carlo estimators approximate.
class DiscreteLvm {
 public:
  struct SignalAtom {
    double prob;
    // channel_pmfs[i][y]: law of coordinate i under this signal
    std::vector<std::vector<double>> channel_pmfs;
  };

  DiscreteLvm(std::vector<std::size_t> alphabet_sizes,
              std::vector<std::vector<double>> null_pmfs, std::vector<SignalAtom> signals);

  std::size_t coords() const { return alphabet_.size(); }
  std::size_t states() const { return states_; }
  std::size_t alphabet_size(std::size_t i) const { return alphabet_[i]; }
  std::size_t stride(std::size_t i) const { return stride_[i]; }
  const std::vector<double>& null_pmf(std::size_t i) const { return null_[i]; }
  const std::vector<SignalAtom>& signals() const { return signals_; }
  // product null weight of each state, indexed like a TableFunction
  const std::vector<double>& state_weights() const { return weight_; }

 private:
  std::vector<std::size_t> alphabet_;
  std::vector<std::size_t> stride_;
  std::vector<std::vector<double>> null_;
  std::vector<SignalAtom> signals_;
  std::size_t states_ = 1;
  std::vector<double> weight_;
};

// Dense table over the product space, mixed-radix indexed with coordinate 0
// slowest and coordinate N-1 fastest. The ordering is part of the contract.
struct TableFunction {
  std::vector<double> values;
};

// Exact likelihood ratio dP/dQ as a table; E_Q L = 1 up to rounding.
TableFunction likelihood_vector(const DiscreteLvm& model);

// Conditional expectation integrating out the coordinates in t_mask under Q.
// Idempotent, and averages over disjoint sets compose.
TableFunction avg_operator(const DiscreteLvm& model, const TableFunction& f, std::uint32_t t_mask);

// Orthogonal projection onto the subspace of functions depending exactly on
// the coordinates in t_mask, via inclusion-exclusion over averaging
// operators. Refuses |T| > 20 (2^|T| growth).
TableFunction project_hat(const DiscreteLvm& model, const TableFunction& f, std::uint32_t t_mask);
// Same projection in the operator-product form prod_{i in T}(Id - Avg_i)
// prod_{i not in T} Avg_i; kept as an independent route for tests.
TableFunction project_hat_product(const DiscreteLvm& model, const TableFunction& f,
                                  std::uint32_t t_mask);

// Projection onto coordinate degree <= D. Evaluates both the sum of hat
// projections and the closed-form alternating-binomial combination of
// averaging operators and insists they agree to 1e-10.
TableFunction project_leq(const DiscreteLvm& model, const TableFunction& f, int degree);

double inner_q(const DiscreteLvm& model, const TableFunction& f, const TableFunction& g);
double norm_q(const DiscreteLvm& model, const TableFunction& f);

// Exact coordinate advantage ||P_{<=D} L||_{L2(Q)}; equals 1 at D = 0 and is
// non-decreasing in D.
double cadv_exact(const DiscreteLvm& model, int degree);

// The same quantity through the subset-product route: enumerates signal
// pairs, forms the per-coordinate overlaps and runs the symmetric-function
// dynamic program. Independent of the projection path.
double cadv_formula_exact(const DiscreteLvm& model, int degree);

// ||hat L_T||^2 for each non-empty T; the values sum to chi^2(P || Q).
std::map<std::uint32_t, double> chi2_decomposition(const DiscreteLvm& model);

double chi_squared(const DiscreteLvm& model);  // E_Q L^2 - 1

// Model restricted to the coordinates in t_mask (marginal model).
DiscreteLvm restrict_model(const DiscreteLvm& model, std::uint32_t t_mask);

// Randomized tiny model for property suites: dimensions, alphabet sizes and
// support size drawn up to the given caps, pmfs strictly positive.
DiscreteLvm random_discrete_lvm(RngStream& rng, std::size_t max_coords,
                                std::size_t max_alphabet, std::size_t max_support);

// Loader for the on-disk schema:
// {"alphabets": [...], "null_pmfs": [[...]], "signals": [{"prob": p,
//  "channel_pmfs": [[...]]}]}
DiscreteLvm parse_discrete_lvm(const std::string& json_text);

}  // namespace lcdf
