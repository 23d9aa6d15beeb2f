#include "lcdf/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <vector>

#include <json.hpp>

#include "lcdf/advantage.hpp"
#include "lcdf/efron_stein.hpp"
#include "lcdf/kernels.hpp"
#include "lcdf/truncexp.hpp"

namespace lcdf {

using nlohmann::json;

namespace {

SpikeLaw spike_from(const json& block) {
  std::string kind = block.value("kind", "rademacher");
  if (kind == "rademacher") return SpikeLaw::rademacher();
  if (kind == "sparse_rademacher") return SpikeLaw::sparse_rademacher(block.at("s").get<double>());
  if (kind == "uniform_pm") return SpikeLaw::uniform_pm();
  if (kind == "two_point") return SpikeLaw::two_point(block.at("p").get<double>());
  throw std::invalid_argument("unknown spike law kind: " + kind);
}

DensitySpec density_from(const json& block) {
  std::string name = block.at("name").get<std::string>();
  if (name == "gaussian") return gaussian_density(block.value("sigma", 1.0));
  if (name == "smoothed_laplace")
    return smoothed_laplace_density(block.at("c").get<double>(), block.at("eps").get<double>());
  throw std::invalid_argument("unknown density: " + name);
}

CgfSpec cgf_from(const json& block) {
  std::string name = block.at("name").get<std::string>();
  if (name == "gaussian") return gaussian_cgf(block.value("sigma2", 1.0));
  if (name == "bernoulli") return bernoulli_cgf(block.at("c").get<double>());
  if (name == "poisson") return poisson_cgf(block.at("mean").get<double>());
  throw std::invalid_argument("unknown cgf: " + name);
}

Channel channel_from(const json& block) {
  std::string kind = block.at("kind").get<std::string>();
  Channel channel = [&] {
    if (kind == "additive") return make_additive(density_from(block.at("density")));
    if (kind == "expfam") return make_exponential_family(cgf_from(block.at("cgf")));
    if (kind == "bernoulli") return make_bernoulli(block.value("c", 0.5));
    throw std::invalid_argument("unknown channel kind: " + kind);
  }();
  if (block.value("quantize", false)) channel = quantize(channel);
  if (block.contains("censor_eta")) channel = censor(channel, block.at("censor_eta").get<double>());
  return channel;
}

Prior prior_from(const json& block) {
  std::string kind = block.at("kind").get<std::string>();
  SpikeLaw pi = block.contains("pi") ? spike_from(block.at("pi")) : SpikeLaw::rademacher();
  Prior prior = [&] {
    if (kind == "iid")
      return iid_prior(pi, block.at("n").get<std::size_t>(), block.value("scale", 1.0));
    if (kind == "spiked_matrix")
      return spiked_matrix_prior(block.at("n").get<std::size_t>(),
                                 block.at("lambda").get<double>(), pi);
    if (kind == "spiked_tensor")
      return spiked_tensor_prior(block.at("n").get<std::size_t>(), block.at("q").get<int>(),
                                 block.at("lambda").get<double>(), pi);
    throw std::invalid_argument("unknown prior kind: " + kind);
  }();
  if (block.contains("dilute_k")) prior = dilute(prior, block.at("dilute_k").get<std::size_t>());
  return prior;
}

SpikedMatrixConfig spectral_from(const json& block) {
  SpikedMatrixConfig config;
  config.n = block.at("n").get<std::size_t>();
  config.lambda = block.value("lambda", 0.0);
  config.density = block.contains("density") ? density_from(block.at("density"))
                                             : gaussian_density(1.0);
  if (block.contains("spike")) config.spike = spike_from(block.at("spike"));
  std::string corruption = block.value("corruption", "none");
  if (corruption == "none") {
    config.corruption = Corruption::none;
  } else if (corruption == "censor") {
    config.corruption = Corruption::censored;
    config.eta = block.at("eta").get<double>();
  } else if (corruption == "quantize") {
    config.corruption = Corruption::quantized;
  } else {
    throw std::invalid_argument("unknown corruption: " + corruption);
  }
  return config;
}

json estimate_to_json(const AdvantageEstimate& est) {
  return json{{"estimator", est.estimator},
              {"degree", est.degree},
              {"trials", est.trials},
              {"mean", est.mean},
              {"std_error", est.std_error},
              {"diagnostics",
               json{{"trimmed_mean", est.trimmed_mean},
                    {"heavy_tail_flagged", est.heavy_tail_flagged}}}};
}

std::string estimate_csv_row(const AdvantageEstimate& est) {
  json row = estimate_to_json(est);
  return est.estimator + "," + std::to_string(est.degree) + "," + std::to_string(est.trials) +
         "," + json(est.mean).dump() + "," + json(est.std_error).dump() + "," +
         json(est.trimmed_mean).dump() + "," + (est.heavy_tail_flagged ? "1" : "0") + "\n";
}

struct Runtime {
  std::uint64_t seed = 0;
  int threads = 1;
  std::filesystem::path out_dir;
};

Runtime resolve_runtime(const json& config, const CliOverrides& overrides) {
  Runtime rt;
  if (overrides.seed) {
    rt.seed = *overrides.seed;
  } else if (config.contains("seed")) {
    rt.seed = config.at("seed").get<std::uint64_t>();
  } else {
    throw std::invalid_argument("seed is mandatory (config \"seed\" or --seed)");
  }
  if (overrides.threads) {
    rt.threads = *overrides.threads;
  } else if (config.contains("threads")) {
    rt.threads = config.at("threads").get<int>();
  } else if (const char* env = std::getenv("LCDF_THREADS")) {
    rt.threads = std::atoi(env);
  }
  if (rt.threads < 1) rt.threads = 1;
  rt.out_dir = overrides.out_dir ? *overrides.out_dir : config.value("out", std::string("."));
  return rt;
}

void write_text(const std::filesystem::path& path, const std::string& text, bool append = false) {
  std::ofstream stream(path, append ? std::ios::app : std::ios::trunc);
  if (!stream) throw std::invalid_argument("cannot write " + path.string());
  stream << text;
}

json run_fisher(const json& config) {
  Channel channel = channel_from(config.at("channel"));
  const char* method =
      channel.kind() == "additive"
          ? "quadrature"
          : (channel.kind() == "censored" || channel.kind() == "quantized" ? "composed"
                                                                           : "closed_form");
  return json{{"quantity", "fisher_information"},
              {"definition", "mixed second derivative of the channel overlap at the origin"},
              {"channel", channel.description()},
              {"method", method},
              {"F", channel.fisher_information()},
              {"degenerate", channel.degenerate()}};
}

json run_overlap(const json& config) {
  Channel channel = channel_from(config.at("channel"));
  double x1 = config.at("x1").get<double>();
  double x2 = config.at("x2").get<double>();
  return json{{"quantity", "channel_overlap"},
              {"definition", "covariance of the likelihood ratios at x1, x2 under the null"},
              {"channel", channel.description()},
              {"x1", x1},
              {"x2", x2},
              {"R", channel.overlap(x1, x2)}};
}

json run_advantage(const json& config, const Runtime& rt, std::string* csv) {
  Prior prior = prior_from(config.at("prior"));
  int degree = config.at("degree").get<int>();
  std::size_t trials = config.at("trials").get<std::size_t>();
  std::string estimator = config.value("estimator", "subset_formula");
  AdvantageEstimate est;
  if (estimator == "subset_formula") {
    est = cadv_mc(prior, channel_from(config.at("channel")), degree, trials, rt.seed, rt.threads);
  } else if (estimator == "exp_bound") {
    est = cadv_exp_bound_mc(prior, channel_from(config.at("channel")), degree, trials, rt.seed,
                            rt.threads);
  } else if (estimator == "univ") {
    double sigma2 = config.contains("sigma2")
                        ? config.at("sigma2").get<double>()
                        : 1.0 / channel_from(config.at("channel")).fisher_information();
    est = univ_mc(prior, sigma2, degree, trials, rt.seed, rt.threads);
  } else {
    throw std::invalid_argument("unknown estimator: " + estimator);
  }
  *csv = estimate_csv_row(est);
  json doc = estimate_to_json(est);
  doc["prior"] = prior.structure();
  doc["quantity"] = "squared_coordinate_advantage_estimate";
  return doc;
}

json run_universality(const json& config, const Runtime& rt) {
  Prior prior = prior_from(config.at("prior"));
  Channel channel = channel_from(config.at("channel"));
  int degree = config.at("degree").get<int>();
  std::size_t trials = config.at("trials").get<std::size_t>();
  UniversalityReport report = universality_report(prior, channel, degree, trials, rt.seed,
                                                  rt.threads);
  return json{{"quantity", "universality_report"},
              {"channel", channel.description()},
              {"prior", prior.structure()},
              {"fisher_information", report.fisher_information},
              {"cadv", estimate_to_json(report.cadv)},
              {"univ_d", estimate_to_json(report.univ_d)},
              {"univ_dm2", estimate_to_json(report.univ_dm2)},
              {"ratio_cadv_over_univ", report.ratio},
              {"assumptions_pass", report.assumptions_pass}};
}

json run_exact(const json& config) {
  std::string model_text;
  if (config.contains("model")) {
    model_text = config.at("model").dump();
  } else {
    std::ifstream in(config.at("model_path").get<std::string>());
    if (!in) throw std::invalid_argument("cannot read model_path");
    model_text.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  DiscreteLvm model = parse_discrete_lvm(model_text);
  int degree = config.value("degree", static_cast<int>(model.coords()));
  json rows = json::array();
  double worst_gap = 0.0;
  for (int d = 0; d <= std::min<int>(degree, static_cast<int>(model.coords())); ++d) {
    double exact = cadv_exact(model, d);
    double formula = cadv_formula_exact(model, d);
    double gap = std::fabs(exact - formula) / std::max(1.0, std::fabs(exact));
    worst_gap = std::max(worst_gap, gap);
    rows.push_back(json{{"degree", d},
                        {"cadv_exact", exact},
                        {"cadv_formula_exact", formula},
                        {"rel_gap", gap}});
  }
  return json{{"quantity", "exact_coordinate_advantage"},
              {"definition", "norm of the low-coordinate-degree projection of dP/dQ"},
              {"coords", model.coords()},
              {"states", model.states()},
              {"chi_squared", chi_squared(model)},
              {"per_degree", rows},
              {"max_rel_gap", worst_gap}};
}

json run_spectral(const json& config, const Runtime& rt, std::string* csv, bool scan) {
  const json& block = config.at("spectral");
  SpikedMatrixConfig base = spectral_from(block);
  std::size_t trials = block.value("trials", config.value("trials", std::size_t{8}));
  std::vector<double> grid;
  if (scan) {
    grid = block.at("lambda_grid").get<std::vector<double>>();
  } else {
    grid.push_back(base.lambda);
  }
  auto points = phase_scan(base, grid, trials, rt.seed, rt.threads);
  *csv = phase_scan_csv(points);
  json rows = json::array();
  for (const auto& p : points)
    rows.push_back(json{{"lambda", p.lambda},
                        {"eta", p.eta},
                        {"n", p.n},
                        {"trials", p.trials},
                        {"mean_lmax", p.mean_lmax},
                        {"stderr_lmax", p.stderr_lmax},
                        {"bulk_edge_estimate", p.bulk_edge_estimate}});
  return json{{"quantity", scan ? "phase_diagram" : "spectral_statistics"},
              {"definition", "top eigenvalue of the transformed matrix over sqrt(n)"},
              {"statistic", base.corruption == Corruption::quantized
                                ? "raw sign matrix"
                                : "entrywise score transform"},
              {"conjecture_probe", base.corruption != Corruption::none},
              {"points", rows}};
}

}  // namespace

SpikeLaw parse_spike_law(const std::string& text) { return spike_from(json::parse(text)); }
DensitySpec parse_density(const std::string& text) { return density_from(json::parse(text)); }
Channel parse_channel(const std::string& text) { return channel_from(json::parse(text)); }
Prior parse_prior(const std::string& text) { return prior_from(json::parse(text)); }

int run_experiment(const std::string& command, const std::string& config_text,
                   const CliOverrides& overrides) {
  json config;
  try {
    config = json::parse(config_text);
  } catch (const json::exception& err) {
    std::cerr << "config parse error: " << err.what() << "\n";
    return kExitConfig;
  }
  try {
    std::string cmd = command;
    if (config.contains("command")) {
      std::string from_config = config.at("command").get<std::string>();
      if (cmd.empty()) cmd = from_config;
      if (cmd != from_config)
        throw std::invalid_argument("config command \"" + from_config +
                                    "\" does not match subcommand \"" + cmd + "\"");
    }
    if (cmd.empty()) throw std::invalid_argument("no command given");
    if (cmd == "selftest") return run_selftest();

    Runtime rt = resolve_runtime(config, overrides);
    std::filesystem::create_directories(rt.out_dir);

    json results;
    std::string csv;
    bool csv_append = false;
    if (cmd == "fisher") {
      results = run_fisher(config);
    } else if (cmd == "overlap") {
      results = run_overlap(config);
    } else if (cmd == "advantage") {
      results = run_advantage(config, rt, &csv);
      csv_append = true;
      if (!std::filesystem::exists(rt.out_dir / "scan.csv"))
        csv = "estimator,degree,trials,mean,std_error,trimmed_mean,heavy_tail\n" + csv;
    } else if (cmd == "universality") {
      results = run_universality(config, rt);
    } else if (cmd == "exact") {
      results = run_exact(config);
    } else if (cmd == "spectral") {
      results = run_spectral(config, rt, &csv, false);
    } else if (cmd == "phase-diagram") {
      results = run_spectral(config, rt, &csv, true);
    } else {
      throw std::invalid_argument("unknown command: " + cmd);
    }

    json doc{{"command", cmd},
             {"seed", rt.seed},
             {"threads", rt.threads},
             {"simd", kernels::isa_name(kernels::active_isa())},
             {"results", results}};
    write_text(rt.out_dir / "result.json", doc.dump(2) + "\n");
    if (!csv.empty()) write_text(rt.out_dir / "scan.csv", csv, csv_append);
    std::cout << doc.dump(2) << "\n";
    return kExitOk;
  } catch (const NumericalError& err) {
    std::cerr << "numerical failure: " << err.what()
              << " (achieved tolerance " << err.achieved_tolerance() << ")\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return kExitConfig;
  } catch (const std::domain_error& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return kExitConfig;
  } catch (const json::exception& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return kExitConfig;
  } catch (const std::logic_error& err) {
    // dual-route disagreement inside the exact engine and similar defects
    std::cerr << "numerical failure: " << err.what() << "\n";
    return kExitNumerical;
  }
}

namespace {

struct SelftestReporter {
  int failures = 0;
  void check(bool ok, const std::string& what) {
    std::cout << (ok ? "PASS" : "FAIL") << "  " << what << "\n";
    if (!ok) ++failures;
  }
};

}  // namespace

int run_selftest() {
  SelftestReporter reporter;
  try {
    Channel gauss = make_additive(gaussian_density(1.0));
    reporter.check(std::fabs(gauss.fisher_information() - 1.0) < 1e-6,
                   "gaussian additive fisher information = 1 (quadrature)");
    reporter.check(std::fabs(make_bernoulli(0.5).fisher_information() - 4.0) < 1e-12,
                   "bernoulli(1/2+x) fisher information = 4");
    reporter.check(
        std::fabs(quantize(gauss).fisher_information() - 2.0 / M_PI) < 1e-9,
        "quantized gaussian fisher information = 2/pi");
    reporter.check(std::fabs(censor(gauss, 0.25).fisher_information() -
                             0.75 * gauss.fisher_information()) < 1e-12,
                   "censoring scales fisher information by 1 - eta");

    // symmetric-function dynamic program against subset enumeration
    RngStream rng(12345, 0);
    bool esp_ok = true;
    for (int rep = 0; rep < 20 && esp_ok; ++rep) {
      std::size_t n = 1 + static_cast<std::size_t>(rng.next_double() * 10);
      std::vector<double> r(n);
      for (auto& v : r) v = 2.0 * rng.next_double() - 1.0;
      for (int degree = 0; degree <= static_cast<int>(n); ++degree) {
        double brute = 0.0;
        for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
          if (static_cast<int>(std::popcount(mask)) > degree) continue;
          double prod = 1.0;
          for (std::size_t i = 0; i < n; ++i)
            if (mask & (1u << i)) prod *= r[i];
          brute += prod;
        }
        double got = esp_prefix_sum(r, degree);
        if (std::fabs(got - brute) > 1e-12 * std::max(1.0, std::fabs(brute))) esp_ok = false;
      }
    }
    reporter.check(esp_ok, "symmetric-function prefix sums match subset enumeration");

    bool dual_ok = true;
    for (int rep = 0; rep < 5; ++rep) {
      DiscreteLvm model = random_discrete_lvm(rng, 4, 3, 5);
      for (int d = 0; d <= static_cast<int>(model.coords()); ++d) {
        double a = cadv_exact(model, d), b = cadv_formula_exact(model, d);
        if (std::fabs(a - b) > 1e-10 * std::max(1.0, a)) dual_ok = false;
      }
    }
    reporter.check(dual_ok, "projection route equals subset-product route on random models");

    bool texp_ok = true;
    for (int rep = 0; rep < 2000; ++rep) {
      double x = 60.0 * rng.next_double() - 30.0;
      int degree = 2 * static_cast<int>(rng.next_double() * 40.0);
      double v = trunc_exp(x, degree);
      if (!(v > 0.0) || v > std::exp(std::fabs(x)) * (1 + 1e-12)) texp_ok = false;
    }
    texp_ok = texp_ok &&
              std::fabs(trunc_exp(-20.0, 40) / trunc_exp_oracle(-20.0, 40) - 1.0) < 1e-11;
    reporter.check(texp_ok, "truncated exponential positivity, bound, and oracle agreement");

    Prior prior = spiked_matrix_prior(12, 0.6, SpikeLaw::rademacher());
    Channel nef = make_exponential_family(gaussian_cgf(1.0));
    auto est1 = cadv_mc(prior, nef, 2, 4000, 99, 1);
    auto est4 = cadv_mc(prior, nef, 2, 4000, 99, 4);
    reporter.check(est1.mean == est4.mean && est1.std_error == est4.std_error,
                   "estimator reduction independent of thread count");
  } catch (const std::exception& err) {
    std::cout << "FAIL  selftest aborted: " << err.what() << "\n";
    return 1;
  }
  std::cout << (reporter.failures == 0 ? "selftest: all checks passed\n"
                                       : "selftest: failures detected\n");
  return reporter.failures == 0 ? kExitOk : 1;
}

}  // namespace lcdf
