/*
 * Copyright 2026 The weakeq Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// weakeq: command-line front end.
//
// Exit codes: 0 success / PASS, 1 FAIL verdict, 2 usage error, 3 budget
// refusal.

#include <chrono>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "weakeq/core.hpp"
#include "weakeq/csets.hpp"
#include "weakeq/generators.hpp"
#include "weakeq/io.hpp"
#include "weakeq/metric.hpp"
#include "weakeq/products.hpp"
#include "weakeq/statistics.hpp"

namespace {

using weakeq::io::json;

constexpr int kExitOk = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitBudget = 3;

struct Common {
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::uint64_t budget = weakeq::kDefaultBudget;
  bool exact = false;
  bool heuristic = false;
  std::string output;

  weakeq::Mode mode() const {
    if (exact && heuristic) throw weakeq::UsageError("--exact and --heuristic are mutually exclusive");
    if (exact) return weakeq::Mode::exact;
    if (heuristic) return weakeq::Mode::heuristic;
    return weakeq::Mode::automatic;
  }

  weakeq::SearchConfig search() const {
    weakeq::SearchConfig cfg;
    cfg.seed = seed;
    return cfg;
  }
};

void add_search_flags(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Seed for randomized search (default 0)");
  cmd->add_option("--budget", c.budget, "Maximum labellings for exhaustive enumeration");
  cmd->add_flag("--exact", c.exact, "Require exhaustive enumeration; refuse (exit 3) if over budget");
  cmd->add_flag("--heuristic", c.heuristic, "Never enumerate; use seeded search");
}

void add_output_flag(CLI::App* cmd, Common& c) { cmd->add_option("-o,--output", c.output, "Write to file instead of stdout"); }

void emit(const Common& c, const std::string& text) {
  if (c.output.empty()) {
    std::cout << text;
  } else {
    weakeq::io::write_file(c.output, text);
  }
}

// Comma-separated numbers; "p/q" fractions are allowed.
std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      const auto slash = item.find('/');
      std::size_t used = 0, used_den = 0;
      const double num = std::stod(item.substr(0, slash), &used);
      const double den = slash == std::string::npos ? 1.0 : std::stod(item.substr(slash + 1), &used_den);
      const std::size_t expected = slash == std::string::npos ? item.size() : slash;
      if (used != expected || (slash != std::string::npos && used_den != item.size() - slash - 1) || den == 0.0) {
        throw std::invalid_argument(item);
      }
      out.push_back(num / den);
    } catch (const std::exception&) {
      throw weakeq::UsageError("not a number: '" + item + "'");
    }
  }
  return out;
}

class Timer {
 public:
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"weakeq: partition statistics, Hausdorff distances and the fine metric on finite measure-preserving actions"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--threads", common.threads, "Worker threads (0 = all cores; results do not depend on it)");

  // validate
  std::string validate_file;
  auto* validate = app.add_subcommand("validate", "Check an action file");
  validate->add_option("action", validate_file, "Action JSON")->required();

  // stats
  std::string stats_file, stats_partition;
  std::size_t stats_t = 1, stats_k = 0;
  auto* stats = app.add_subcommand("stats", "Statistic point of one partition");
  stats->add_option("action", stats_file, "Action JSON")->required();
  stats->add_option("--partition", stats_partition, "1-based block labels, comma separated")->required();
  stats->add_option("--t", stats_t, "Number of enumerated words");
  stats->add_option("--k", stats_k, "Block count (default: largest label)");
  add_output_flag(stats, common);

  // cset
  std::string cset_file;
  std::size_t cset_t = 1, cset_k = 2;
  bool cset_no_cache = false;
  auto* cset = app.add_subcommand("cset", "Statistic set C_{t,k} (exhaustive or sampled)");
  cset->add_option("action", cset_file, "Action JSON")->required();
  cset->add_option("--t", cset_t, "Number of enumerated words");
  cset->add_option("--k", cset_k, "Block count");
  cset->add_flag("--no-cache", cset_no_cache, "Bypass the on-disk C-set cache");
  add_search_flags(cset, common);
  add_output_flag(cset, common);

  // dist
  std::string dist_a, dist_b, dist_csv;
  std::size_t dist_T = 2, dist_K = 0;
  auto* dist = app.add_subcommand("dist", "Truncated fine distance");
  dist->add_option("a", dist_a, "First action")->required();
  dist->add_option("b", dist_b, "Second action")->required();
  dist->add_option("--T", dist_T, "Number of enumerated words");
  dist->add_option("--K", dist_K, "Maximum block count (default: larger atom count)");
  dist->add_option("--csv", dist_csv, "Also write the per-(t,k) table as CSV");
  add_search_flags(dist, common);
  add_output_flag(dist, common);

  // contain
  std::string contain_a, contain_b;
  std::size_t contain_T = 2, contain_K = 0;
  double contain_eps = 1e-9;
  bool contain_equiv = false;
  auto* contain = app.add_subcommand("contain", "Approximate weak containment a < b (or equivalence)");
  contain->add_option("a", contain_a, "Contained action")->required();
  contain->add_option("b", contain_b, "Containing action")->required();
  contain->add_option("--T", contain_T, "Number of enumerated words");
  contain->add_option("--K", contain_K, "Maximum block count (default: larger atom count)");
  contain->add_option("--eps", contain_eps, "L1 tolerance");
  contain->add_flag("--equiv", contain_equiv, "Test both directions");
  add_search_flags(contain, common);
  add_output_flag(contain, common);

  // product
  std::string product_a, product_b;
  auto* product = app.add_subcommand("product", "Product action a x b");
  product->add_option("a", product_a, "Left factor")->required();
  product->add_option("b", product_b, "Right factor")->required();
  add_output_flag(product, common);

  // probe
  std::string probe_a, probe_a2, probe_b, probe_b2;
  std::size_t probe_t = 2, probe_k = 2;
  double probe_tol = 1e-9;
  auto* probe = app.add_subcommand("probe", "Product continuity witnesses for (a, a2) x (b, b2)");
  probe->add_option("a", probe_a, "Left factor")->required();
  probe->add_option("a2", probe_a2, "Replacement for a")->required();
  probe->add_option("b", probe_b, "Right factor")->required();
  probe->add_option("b2", probe_b2, "Replacement for b")->required();
  probe->add_option("--t", probe_t, "Number of enumerated words");
  probe->add_option("--k", probe_k, "Block count");
  probe->add_option("--tol", probe_tol, "Additive tolerance on the bound");
  probe->add_option("--budget", common.budget, "Maximum labellings for exhaustive enumeration");
  add_output_flag(probe, common);

  // bernoulli
  std::string bern_group = "z2", bern_weights;
  std::size_t bern_base = 2;
  std::size_t bern_atoms = weakeq::kDefaultAtomBudget;
  auto* bern = app.add_subcommand("bernoulli", "Bernoulli shift of a finite group");
  bern->add_option("--group", bern_group, "z1|z2|z3|z4|s3");
  bern->add_option("--base", bern_base, "Number of base points m");
  bern->add_option("--weights", bern_weights, "Base weights, comma separated (default uniform)");
  bern->add_option("--atom-budget", bern_atoms, "Maximum atom count m^|G|");
  add_output_flag(bern, common);

  // harness
  std::string harness_file;
  auto* harness = app.add_subcommand("harness", "Convergence-sequence experiment table (CSV)");
  harness->add_option("spec", harness_file, "Harness spec JSON")->required();
  add_output_flag(harness, common);

  // lemma
  std::size_t lemma_random = 0;
  double lemma_delta = 0.1;
  std::string la, lb, lc, ld;
  auto* lemma = app.add_subcommand("lemma", "Check the product-of-sequences L1 inequality");
  lemma->add_option("--random", lemma_random, "Number of random instances");
  lemma->add_option("--delta", lemma_delta, "delta");
  lemma->add_option("--seed", common.seed, "Seed (default 0)");
  lemma->add_option("--a", la, "Explicit a_i, comma separated");
  lemma->add_option("--b", lb, "Explicit b_i");
  lemma->add_option("--c", lc, "Explicit c_j");
  lemma->add_option("--d", ld, "Explicit d_j");
  add_output_flag(lemma, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  weakeq::set_thread_count(common.threads);
  Timer timer;
  weakeq::io::RunReport report;
  report.seed = common.seed;

  try {
    if (*validate) {
      const auto a = weakeq::io::load_action(validate_file);
      report.command = "validate";
      report.inputs["action"] = weakeq::io::content_hash(a);
      report.results = {{"valid", true}, {"atoms", a.atoms()}, {"rank", a.rank()}};
      report.wall_time_ms = timer.ms();
      std::cout << report.to_json().dump(2) << "\n";
      return kExitOk;
    }

    if (*stats) {
      const auto a = weakeq::io::load_action(stats_file);
      std::vector<weakeq::Label> labels;
      std::size_t max_label = 0;
      for (double v : parse_list(stats_partition)) {
        if (v < 1 || v != static_cast<double>(static_cast<long>(v))) throw weakeq::UsageError("labels must be positive integers");
        labels.push_back(static_cast<weakeq::Label>(v) - 1);
        max_label = std::max(max_label, static_cast<std::size_t>(v));
      }
      const std::size_t k = stats_k == 0 ? max_label : stats_k;
      const weakeq::Partition p(a.space(), k, labels);
      const auto point = weakeq::stat_point(a.with_words(stats_t), p, stats_t);
      report.command = "stats";
      report.inputs["action"] = weakeq::io::content_hash(a);
      report.params = {{"t", stats_t}, {"k", k}, {"partition", weakeq::io::labels_to_json(labels)}};
      report.results = {{"values", weakeq::io::stat_to_json(point)}};
      report.wall_time_ms = timer.ms();
      emit(common, report.to_json().dump(2) + "\n");
      return kExitOk;
    }

    if (*cset) {
      const auto a = weakeq::io::load_action(cset_file);
      const auto cfg = common.search();
      weakeq::CSet c;
      bool hit = false;
      if (cset_no_cache) {
        c = weakeq::obtain_cset(a, cset_t, cset_k, cfg, common.mode(), common.budget);
      } else {
        c = weakeq::io::CSetCache::from_environment().get(a, cset_t, cset_k, cfg, common.mode(), common.budget, &hit);
      }
      json j = weakeq::io::cset_to_json(c, weakeq::io::content_hash(a));
      j["cache_hit"] = hit;
      emit(common, j.dump() + "\n");
      return kExitOk;
    }

    if (*dist) {
      const auto a = weakeq::io::load_action(dist_a);
      const auto b = weakeq::io::load_action(dist_b);
      weakeq::TruncationParams p;
      p.T = dist_T;
      p.K = dist_K;
      p.search = common.search();
      p.mode = common.mode();
      p.budget = common.budget;
      const auto r = weakeq::fine_distance(a, b, p);
      report.command = "dist";
      report.inputs = {{"a", weakeq::io::content_hash(a)}, {"b", weakeq::io::content_hash(b)}};
      report.params = {{"T", r.T}, {"K", r.K}, {"budget", common.budget}};
      report.results = weakeq::io::fine_distance_to_json(r);
      report.mode = weakeq::io::mode_name(r.exact);
      report.wall_time_ms = timer.ms();
      if (!dist_csv.empty()) weakeq::io::write_file(dist_csv, weakeq::io::fine_distance_csv(r));
      emit(common, report.to_json().dump(2) + "\n");
      return kExitOk;
    }

    if (*contain) {
      const auto a = weakeq::io::load_action(contain_a);
      const auto b = weakeq::io::load_action(contain_b);
      weakeq::TruncationParams p;
      p.T = contain_T;
      p.K = contain_K;
      p.search = common.search();
      p.mode = common.mode();
      p.budget = common.budget;
      report.command = contain_equiv ? "contain --equiv" : "contain";
      report.inputs = {{"a", weakeq::io::content_hash(a)}, {"b", weakeq::io::content_hash(b)}};
      report.params = {{"T", contain_T}, {"K", p.resolved_K(a, b)}, {"eps", contain_eps}};
      bool pass = false;
      if (contain_equiv) {
        const auto r = weakeq::weakly_equivalent(a, b, p, contain_eps);
        pass = r.pass;
        report.results = {{"verdict", pass ? "PASS" : "FAIL"},
                          {"forward", weakeq::io::containment_to_json(r.forward)},
                          {"backward", weakeq::io::containment_to_json(r.backward)}};
        report.mode = weakeq::io::mode_name(r.forward.exact && r.backward.exact);
      } else {
        const auto r = weakeq::weakly_contained(a, b, p, contain_eps);
        pass = r.pass;
        report.results = weakeq::io::containment_to_json(r);
        report.mode = weakeq::io::mode_name(r.exact);
      }
      report.wall_time_ms = timer.ms();
      emit(common, report.to_json().dump(2) + "\n");
      return pass ? kExitOk : kExitFail;
    }

    if (*product) {
      const auto a = weakeq::io::load_action(product_a);
      const auto b = weakeq::io::load_action(product_b);
      emit(common, weakeq::io::action_to_json(weakeq::product_action(a, b)).dump(2) + "\n");
      return kExitOk;
    }

    if (*probe) {
      const auto a = weakeq::io::load_action(probe_a);
      const auto a2 = weakeq::io::load_action(probe_a2);
      const auto b = weakeq::io::load_action(probe_b);
      const auto b2 = weakeq::io::load_action(probe_b2);
      const auto r = weakeq::product_continuity_probe(a, a2, b, b2, probe_t, probe_k, common.budget, probe_tol);
      report.command = "probe";
      report.inputs = {{"a", weakeq::io::content_hash(a)},
                       {"a2", weakeq::io::content_hash(a2)},
                       {"b", weakeq::io::content_hash(b)},
                       {"b2", weakeq::io::content_hash(b2)}};
      report.params = {{"t", probe_t}, {"k", probe_k}, {"tol", probe_tol}};
      report.results = weakeq::io::probe_to_json(r);
      report.wall_time_ms = timer.ms();
      emit(common, report.to_json().dump(2) + "\n");
      return r.holds && r.holds_at_k ? kExitOk : kExitFail;
    }

    if (*bern) {
      std::vector<double> w = bern_weights.empty() ? std::vector<double>(bern_base, 1.0 / static_cast<double>(bern_base))
                                                   : parse_list(bern_weights);
      if (!bern_weights.empty() && w.size() != bern_base) {
        throw weakeq::UsageError("--weights lists " + std::to_string(w.size()) + " values but --base is " +
                                 std::to_string(bern_base));
      }
      const auto a = weakeq::bernoulli_shift(weakeq::FiniteGroupTable::named(bern_group), w, bern_atoms);
      emit(common, weakeq::io::action_to_json(a).dump(2) + "\n");
      return kExitOk;
    }

    if (*harness) {
      const auto spec = weakeq::io::parse_harness_spec(weakeq::io::read_file(harness_file), harness_file);
      const auto table = weakeq::sequence_harness(spec);
      emit(common, weakeq::io::harness_csv(table));
      bool ok = true;
      for (const auto& r : table.rows) ok = ok && r.holds;
      return ok ? kExitOk : kExitFail;
    }

    if (*lemma) {
      report.command = "lemma";
      report.params = {{"delta", lemma_delta}};
      bool ok = true;
      if (lemma_random > 0) {
        weakeq::Rng rng(common.seed);
        std::size_t holds = 0, strict = 0;
        double worst_ratio = 0.0;
        for (std::size_t i = 0; i < lemma_random; ++i) {
          const auto inst = weakeq::random_lemma_instance(rng, lemma_delta);
          const auto r = weakeq::lemma_check(inst.a, inst.b, inst.c, inst.d, lemma_delta);
          holds += r.holds;
          strict += r.strict;
          worst_ratio = std::max(worst_ratio, r.lhs / r.two_delta);
        }
        ok = holds == lemma_random && strict == lemma_random;
        report.params["random"] = lemma_random;
        report.results = {{"instances", lemma_random},
                          {"holds", holds},
                          {"strict", strict},
                          {"max_lhs_over_2delta", worst_ratio},
                          {"verdict", ok ? "PASS" : "FAIL"}};
      } else {
        const auto r = weakeq::lemma_check(parse_list(la), parse_list(lb), parse_list(lc), parse_list(ld), lemma_delta);
        ok = r.holds && r.strict;
        report.results = weakeq::io::lemma_to_json(r);
        report.results["verdict"] = ok ? "PASS" : "FAIL";
      }
      report.wall_time_ms = timer.ms();
      emit(common, report.to_json().dump(2) + "\n");
      return ok ? kExitOk : kExitFail;
    }
  } catch (const weakeq::BudgetError& e) {
    std::cerr << "weakeq: budget refusal: " << e.what() << "\n";
    return kExitBudget;
  } catch (const weakeq::UsageError& e) {
    std::cerr << "weakeq: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "weakeq: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
