#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "lcdf/channels.hpp"
#include "lcdf/priors.hpp"
#include "lcdf/spectral.hpp"

namespace lcdf {

// JSON experiment-config bindings. Block schemas:
//   channel: {"kind": "additive"|"expfam"|"bernoulli", "density": {...},
//             "cgf": {...}, "c": 0.5, "censor_eta": 0.2, "quantize": false}
//            quantize applies to the base channel first; censor_eta wraps
//            the result
//   density: {"name": "gaussian", "sigma": 1.0}
//            {"name": "smoothed_laplace", "c": 0.7, "eps": 0.1}
//   cgf:     {"name": "gaussian", "sigma2": 1.0} | {"name": "bernoulli",
//             "c": 0.5} | {"name": "poisson", "mean": 2.0}
//   pi:      {"kind": "rademacher"|"sparse_rademacher"|"uniform_pm"|
//             "two_point", "s": 0.1, "p": 0.3}
//   prior:   {"kind": "iid", "n": 16, "pi": {...}, "scale": 1.0,
//             "dilute_k": 4}
//            {"kind": "spiked_matrix", "n": 40, "lambda": 0.5, "pi": {...}}
//            {"kind": "spiked_tensor", "n": 24, "q": 3, "lambda": 0.3,
//             "pi": {...}}
//   spectral: {"n": 800, "lambda": 1.0, "lambda_grid": [...], "density":
//              {...}, "spike": {...}, "corruption": "none"|"censor"|
//              "quantize", "eta": 0.5, "trials": 20}
SpikeLaw parse_spike_law(const std::string& json_text);
DensitySpec parse_density(const std::string& json_text);
Channel parse_channel(const std::string& json_text);
Prior parse_prior(const std::string& json_text);

struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out_dir;
};

// Exit codes: 0 success, 2 config/validation error, 3 numerical failure.
constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

// Parses the config, dispatches on its "command" (which must match
// `command` when both are given), writes <out>/result.json and, for scans,
// <out>/scan.csv. Returns the exit code and prints diagnostics to stderr.
int run_experiment(const std::string& command, const std::string& config_text,
                   const CliOverrides& overrides);

// The built-in invariant suite behind the `selftest` command.
int run_selftest();

}  // namespace lcdf
