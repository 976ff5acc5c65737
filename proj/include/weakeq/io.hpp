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

#pragma once

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "weakeq/csets.hpp"
#include "weakeq/generators.hpp"
#include "weakeq/metric.hpp"
#include "weakeq/products.hpp"

namespace weakeq::io {

using nlohmann::json;

inline constexpr int kFormatVersion = 1;

// ---------------------------------------------------------------------------
// JSON parsing with source lines

/// Parsed document plus the 1-based source line of every value, keyed by
/// JSON pointer ("" is the root, "/weights/2" the third weight).
struct LocatedJson {
  json value;
  std::map<std::string, int> lines;
  std::string source;

  int line_of(const std::string& pointer) const {
    auto it = lines.find(pointer);
    return it == lines.end() ? 1 : it->second;
  }

  [[noreturn]] void fail(const std::string& pointer, const std::string& message) const {
    throw UsageError(source + ":" + std::to_string(line_of(pointer)) + ": " + message);
  }
};

namespace detail {

/// Forward iterator over a buffer that records the last position the parser
/// dereferenced.
struct TrackingIterator {
  using iterator_category = std::forward_iterator_tag;
  using value_type = char;
  using difference_type = std::ptrdiff_t;
  using pointer = const char*;
  using reference = const char&;

  const char* p = nullptr;
  const char** last = nullptr;

  reference operator*() const {
    *last = p;
    return *p;
  }
  TrackingIterator& operator++() {
    ++p;
    return *this;
  }
  TrackingIterator operator++(int) {
    auto copy = *this;
    ++p;
    return copy;
  }
  bool operator==(const TrackingIterator& o) const { return p == o.p; }
  bool operator!=(const TrackingIterator& o) const { return p != o.p; }
};

class LocatingSax {
 public:
  LocatingSax(const std::string& text, const char** last, LocatedJson& out) : text_(text), last_(last), out_(out) {
    for (std::size_t i = 0; i < text.size(); ++i) {
      if (text[i] == '\n') newlines_.push_back(i);
    }
  }

  bool null() { return value(nullptr); }
  bool boolean(bool v) { return value(v); }
  bool number_integer(json::number_integer_t v) { return value(v); }
  bool number_unsigned(json::number_unsigned_t v) { return value(v); }
  bool number_float(json::number_float_t v, const std::string&) { return value(v); }
  bool string(std::string& v) { return value(v); }
  bool binary(json::binary_t& v) { return value(json::binary(v)); }
  bool start_object(std::size_t) { return open(json::object()); }
  bool start_array(std::size_t) { return open(json::array()); }
  bool end_object() { return close(); }
  bool end_array() { return close(); }
  bool key(std::string& k) {
    key_ = k;
    return true;
  }
  bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception& ex) {
    throw UsageError(out_.source + ":" + std::to_string(current_line()) + ": syntax error: " + ex.what());
  }

 private:
  int current_line() const {
    const std::size_t pos = *last_ ? static_cast<std::size_t>(*last_ - text_.data()) : 0;
    return 1 + static_cast<int>(std::lower_bound(newlines_.begin(), newlines_.end(), pos) - newlines_.begin());
  }

  static std::string escape(const std::string& k) {
    std::string s;
    for (char c : k) {
      if (c == '~') s += "~0";
      else if (c == '/') s += "~1";
      else s += c;
    }
    return s;
  }

  json* place(json v, std::string& pointer) {
    if (stack_.empty()) {
      out_.value = std::move(v);
      pointer = "";
      return &out_.value;
    }
    json* top = stack_.back();
    if (top->is_array()) {
      pointer = paths_.back() + "/" + std::to_string(top->size());
      top->push_back(std::move(v));
      return &top->back();
    }
    pointer = paths_.back() + "/" + escape(key_);
    (*top)[key_] = std::move(v);
    return &(*top)[key_];
  }

  bool value(json v) {
    std::string pointer;
    place(std::move(v), pointer);
    out_.lines[pointer] = current_line();
    return true;
  }

  bool open(json v) {
    std::string pointer;
    json* slot = place(std::move(v), pointer);
    out_.lines[pointer] = current_line();
    stack_.push_back(slot);
    paths_.push_back(pointer);
    return true;
  }

  bool close() {
    stack_.pop_back();
    paths_.pop_back();
    return true;
  }

  const std::string& text_;
  const char** last_;
  LocatedJson& out_;
  std::vector<std::size_t> newlines_;
  std::vector<json*> stack_;
  std::vector<std::string> paths_;
  std::string key_;
};

}  // namespace detail

inline LocatedJson parse_located(const std::string& text, const std::string& source) {
  LocatedJson out;
  out.source = source;
  const char* last = nullptr;
  detail::LocatingSax sax(text, &last, out);
  detail::TrackingIterator begin{text.data(), &last};
  detail::TrackingIterator end{text.data() + text.size(), &last};
  json::sax_parse(begin, end, &sax);
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path);
  out << content;
}

// ---------------------------------------------------------------------------
// Actions

namespace detail {

/// A weight is a positive number or a string "p/q".
inline double parse_weight(const LocatedJson& doc, const json& v, const std::string& pointer) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    auto slash = s.find('/');
    double num = 0, den = 1;
    const char* b = s.data();
    auto parse = [&](const char* from, const char* to, double& out) {
      auto [ptr, ec] = std::from_chars(from, to, out);
      return ec == std::errc() && ptr == to;
    };
    bool ok = slash == std::string::npos ? parse(b, b + s.size(), num)
                                         : parse(b, b + slash, num) && parse(b + slash + 1, b + s.size(), den);
    if (ok && den != 0.0) return num / den;
  }
  doc.fail(pointer, "weight must be a number or a \"p/q\" string");
}

}  // namespace detail

/// Reads `{"weights":[...],"generators":{"g1":[1-based images],...}}` and
/// validates it. Every rejection names the source line of the offending
/// value.
inline MPAction action_from_json(const LocatedJson& doc, const std::string& base = "") {
  const json& root = base.empty() ? doc.value : doc.value.at(json::json_pointer(base));
  if (!root.is_object()) doc.fail(base, "action must be a JSON object");
  if (!root.contains("weights")) doc.fail(base, "missing \"weights\"");
  if (!root.contains("generators")) doc.fail(base, "missing \"generators\"");
  const json& jw = root["weights"];
  const std::string wp = base + "/weights";
  if (!jw.is_array() || jw.empty()) doc.fail(wp, "\"weights\" must be a non-empty array");
  std::vector<double> weights;
  double total = 0.0;
  for (std::size_t i = 0; i < jw.size(); ++i) {
    const std::string p = wp + "/" + std::to_string(i);
    double w = detail::parse_weight(doc, jw[i], p);
    if (!(w > 0.0)) doc.fail(p, "weight of atom " + std::to_string(i + 1) + " must be > 0");
    weights.push_back(w);
    total += w;
  }
  if (std::abs(total - 1.0) > kWeightTolerance) {
    std::ostringstream os;
    os.precision(17);
    os << "weights sum to " << total << ", expected 1 within " << kWeightTolerance;
    doc.fail(wp, os.str());
  }
  const std::size_t n = weights.size();

  const json& jg = root["generators"];
  const std::string gp = base + "/generators";
  if (!jg.is_object() || jg.empty()) doc.fail(gp, "\"generators\" must be a non-empty object");
  std::vector<Permutation> gens(jg.size());
  for (const auto& [name, images] : jg.items()) {
    const std::string p = gp + "/" + name;
    std::size_t idx = 0;
    bool named = name.size() >= 2 && name[0] == 'g';
    if (named) {
      auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), idx);
      named = ec == std::errc() && ptr == name.data() + name.size() && idx >= 1 && idx <= jg.size();
    }
    if (!named) doc.fail(p, "generator names must be g1..g" + std::to_string(jg.size()) + ", got \"" + name + "\"");
    if (!images.is_array() || images.size() != n) {
      doc.fail(p, "generator " + name + " must list " + std::to_string(n) + " images");
    }
    Permutation perm(n);
    std::vector<char> hit(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::string ep = p + "/" + std::to_string(i);
      if (!images[i].is_number_integer()) doc.fail(ep, "image must be an integer atom index");
      long long v = images[i].get<long long>();
      if (v < 1 || v > static_cast<long long>(n)) doc.fail(ep, "image " + std::to_string(v) + " outside 1.." + std::to_string(n));
      if (hit[v - 1]) doc.fail(ep, "generator " + name + " is not a bijection: atom " + std::to_string(v) + " hit twice");
      hit[v - 1] = 1;
      perm[i] = static_cast<Atom>(v - 1);
      if (std::abs(weights[v - 1] - weights[i]) > kWeightTolerance) {
        doc.fail(ep, "generator " + name + " maps atom " + std::to_string(i + 1) + " to atom " + std::to_string(v) +
                         ": weight not preserved");
      }
    }
    gens[idx - 1] = std::move(perm);
  }
  return make_action(std::make_shared<const WeightedSpace>(std::move(weights)), std::move(gens));
}

inline MPAction parse_action(const std::string& text, const std::string& source = "<input>") {
  return action_from_json(parse_located(text, source));
}

inline MPAction load_action(const std::string& path) { return parse_action(read_file(path), path); }

inline json action_to_json(const MPAction& a) {
  json w = json::array();
  for (double x : a.space()->weights()) w.push_back(x);
  json g = json::object();
  for (std::size_t i = 0; i < a.generators().size(); ++i) {
    json imgs = json::array();
    for (Atom y : a.generators()[i]) imgs.push_back(y + 1);
    g["g" + std::to_string(i + 1)] = std::move(imgs);
  }
  return json{{"weights", std::move(w)}, {"generators", std::move(g)}};
}

inline void save_action(const MPAction& a, const std::string& path) { write_file(path, action_to_json(a).dump(2) + "\n"); }

/// FNV-1a over the weights' bit patterns and the generator images.
inline std::string content_hash(const MPAction& a) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  mix(a.atoms());
  mix(static_cast<std::uint64_t>(a.rank()));
  for (double w : a.space()->weights()) mix(std::bit_cast<std::uint64_t>(w));
  for (const auto& g : a.generators()) {
    for (Atom x : g) mix(x);
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Statistic points and C-sets

/// Flat array in (s,l,m) row-major order.
inline json stat_to_json(const StatPoint& p) { return json(p.values); }

inline StatPoint stat_from_json(const json& j, std::size_t t, std::size_t k) {
  return StatPoint(t, k, j.get<std::vector<double>>());
}

inline json labels_to_json(std::span<const Label> labels) {
  json out = json::array();
  for (Label l : labels) out.push_back(l + 1);
  return out;
}

inline std::vector<Label> labels_from_json(const json& j) {
  std::vector<Label> out;
  for (const auto& v : j) out.push_back(v.get<Label>() - 1);
  return out;
}

inline json cset_to_json(const CSet& c, const std::string& action_hash) {
  json points = json::array();
  json witnesses = json::array();
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    points.push_back(stat_to_json(c.points[i]));
    witnesses.push_back(labels_to_json(c.witnesses[i]));
  }
  return json{{"format_version", kFormatVersion},
              {"action_hash", action_hash},
              {"t", c.t},
              {"k", c.k},
              {"exact", c.exact},
              {"provenance",
               {{"kind", c.provenance.kind == Provenance::Kind::enumeration ? "enumeration" : "search"},
                {"seed", c.provenance.seed},
                {"budget", c.provenance.budget}}},
              {"points", std::move(points)},
              {"witnesses", std::move(witnesses)}};
}

inline CSet cset_from_json(const json& j) {
  if (j.at("format_version").get<int>() != kFormatVersion) throw UsageError("unsupported C-set format version");
  CSet c;
  c.t = j.at("t").get<std::size_t>();
  c.k = j.at("k").get<std::size_t>();
  c.exact = j.at("exact").get<bool>();
  const json& prov = j.at("provenance");
  c.provenance.kind = prov.at("kind").get<std::string>() == "enumeration" ? Provenance::Kind::enumeration
                                                                          : Provenance::Kind::search;
  c.provenance.seed = prov.at("seed").get<std::uint64_t>();
  c.provenance.budget = prov.at("budget").get<std::uint64_t>();
  for (const auto& p : j.at("points")) c.points.push_back(stat_from_json(p, c.t, c.k));
  for (const auto& w : j.at("witnesses")) c.witnesses.push_back(labels_from_json(w));
  if (c.points.size() != c.witnesses.size()) throw UsageError("C-set file has mismatched points and witnesses");
  return c;
}

/// On-disk C-set cache keyed by action content hash, t, k and how the set
/// was obtained. Location: $WEAKEQ_CACHE_DIR, else $HOME/.cache/weakeq.
class CSetCache {
 public:
  explicit CSetCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  static CSetCache from_environment() {
    if (const char* d = std::getenv("WEAKEQ_CACHE_DIR"); d && *d) return CSetCache(d);
    if (const char* home = std::getenv("HOME"); home && *home) return CSetCache(std::filesystem::path(home) / ".cache" / "weakeq");
    return CSetCache(".weakeq-cache");
  }

  const std::filesystem::path& dir() const { return dir_; }

  std::filesystem::path path_for(const std::string& hash, std::size_t t, std::size_t k, bool exact,
                                 std::uint64_t budget, const SearchConfig& cfg) const {
    std::string name = "cset-" + hash + "-t" + std::to_string(t) + "-k" + std::to_string(k);
    name += exact ? "-exact-b" + std::to_string(budget)
                  : "-search-s" + std::to_string(cfg.seed) + "-n" + std::to_string(cfg.sample_count);
    return dir_ / (name + ".json");
  }

  /// Cached C-set, or obtain_cset() stored for next time. Unreadable cache
  /// entries are recomputed and overwritten.
  CSet get(const MPAction& a, std::size_t t, std::size_t k, const SearchConfig& cfg, Mode mode, std::uint64_t budget,
           bool* hit = nullptr) const {
    const bool feasible = exhaustive_feasible(a.atoms(), k, budget);
    if (mode == Mode::exact && !feasible) throw BudgetError(weakeq::detail::budget_message(a.atoms(), k, budget));
    const bool exact = mode != Mode::heuristic && feasible;
    const auto path = path_for(content_hash(a), t, k, exact, budget, cfg);
    if (hit) *hit = false;
    std::error_code ec;
    if (std::filesystem::exists(path, ec)) {
      try {
        CSet c = cset_from_json(json::parse(read_file(path.string())));
        if (c.t == t && c.k == k && c.exact == exact) {
          if (hit) *hit = true;
          return c;
        }
      } catch (const std::exception&) {
      }
    }
    CSet c = obtain_cset(a, t, k, cfg, mode, budget);
    std::filesystem::create_directories(dir_, ec);
    if (!ec) {
      const auto tmp = path.string() + ".tmp";
      try {
        write_file(tmp, cset_to_json(c, content_hash(a)).dump() + "\n");
        std::filesystem::rename(tmp, path, ec);
      } catch (const UsageError&) {
      }
    }
    return c;
  }

 private:
  std::filesystem::path dir_;
};

// ---------------------------------------------------------------------------
// Reports

inline std::string mode_name(bool exact) { return exact ? "exact" : "heuristic"; }

/// Envelope for every JSON report the CLI emits. `wall_time_ms` is the only
/// field that varies between identical runs.
struct RunReport {
  std::string command;
  json inputs = json::object();  // name -> content hash
  json params = json::object();
  json results = json::object();
  std::string mode = "exact";
  std::uint64_t seed = 0;
  double wall_time_ms = 0.0;

  json to_json() const {
    return json{{"format_version", kFormatVersion}, {"command", command}, {"inputs", inputs}, {"params", params},
                {"results", results},          {"mode", mode},       {"seed", seed},     {"wall_time_ms", wall_time_ms}};
  }
};

inline json fine_distance_to_json(const FineDistanceResult& r) {
  json table = json::array();
  for (std::size_t t = 0; t < r.T; ++t) {
    for (std::size_t k = 0; k < r.K; ++k) {
      table.push_back({{"t", t + 1}, {"k", k + 1}, {"hausdorff", r.table[t][k]}, {"mode", mode_name(r.cell_exact[t][k])}});
    }
  }
  return json{{"value", r.value},
              {"value_kind", "truncated estimate"},
              {"T", r.T},
              {"K", r.K},
              {"table", std::move(table)},
              {"tail_bound", r.tail_bound},
              {"mode", mode_name(r.exact)}};
}

/// Per-cell CSV: t,k,hausdorff,mode.
inline std::string fine_distance_csv(const FineDistanceResult& r) {
  std::string out = "# format_version=" + std::to_string(kFormatVersion) + "\nt,k,hausdorff,mode\n";
  char buf[64];
  for (std::size_t t = 0; t < r.T; ++t) {
    for (std::size_t k = 0; k < r.K; ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", r.table[t][k]);
      out += std::to_string(t + 1) + "," + std::to_string(k + 1) + "," + buf + "," + mode_name(r.cell_exact[t][k]) + "\n";
    }
  }
  return out;
}

inline json containment_to_json(const ContainmentResult& r) {
  json j{{"verdict", r.pass ? "PASS" : "FAIL"}, {"mode", mode_name(r.exact)}, {"worst_distance", r.worst}};
  if (r.witness) {
    j["witness"] = {{"t", r.witness->t},
                    {"k", r.witness->k},
                    {"partition", labels_to_json(r.witness->labels)},
                    {"distance", r.witness->distance},
                    {"certificate", r.exact}};
  }
  return j;
}

inline json probe_to_json(const ProbeReport& r) {
  json ws = json::array();
  for (const auto& w : r.witnesses) {
    ws.push_back({{"source", labels_to_json(w.source)},
                  {"transfer", labels_to_json(w.transfer)},
                  {"distance", w.distance},
                  {"factor_left", w.factor_left},
                  {"factor_right", w.factor_right},
                  {"p", w.p},
                  {"q", w.q}});
  }
  return json{{"t", r.t},
              {"k", r.k},
              {"delta_a", r.delta_a},
              {"delta_b", r.delta_b},
              {"delta_a_at_k", r.delta_a_at_k},
              {"delta_b_at_k", r.delta_b_at_k},
              {"bound", r.delta_a_at_k + r.delta_b_at_k},
              {"bound_sup", r.delta_a + r.delta_b},
              {"tolerance", r.tolerance},
              {"max_witness", r.max_witness},
              {"witnesses_over_bound", r.witnesses_over_at_k},
              {"verdict", r.holds_at_k ? "PASS" : "FAIL"},
              {"verdict_sup", r.holds ? "PASS" : "FAIL"},
              {"mode", "exact"},
              {"witnesses", std::move(ws)}};
}

inline json lemma_to_json(const LemmaResult& r) {
  return json{{"lhs", r.lhs}, {"sharpened", r.sharpened}, {"row_bound", r.row_bound},
              {"two_delta", r.two_delta}, {"holds", r.holds}, {"strict", r.strict}};
}

// ---------------------------------------------------------------------------
// Harness

namespace detail {
inline MPAction action_field(const LocatedJson& doc, const std::string& key, const std::filesystem::path& dir) {
  const json& v = doc.value.at(key);
  if (v.is_string()) {
    std::filesystem::path p = v.get<std::string>();
    if (p.is_relative()) p = dir / p;
    return load_action(p.string());
  }
  return action_from_json(doc, "/" + key);
}
}  // namespace detail

/// {"family": "constant"|"mixture"|"conjugate", "a": action|path, "b": ...,
///  "perturb_a", "perturb_b" (mixture only), "n_min", "n_max", "T", "K",
///  "seed", "budget"}. Paths are relative to the spec file's directory.
inline HarnessSpec parse_harness_spec(const std::string& text, const std::string& source) {
  LocatedJson doc = parse_located(text, source);
  if (!doc.value.is_object()) doc.fail("", "harness spec must be a JSON object");
  const std::filesystem::path dir = std::filesystem::path(source).parent_path();
  HarnessSpec spec;
  const std::string family = doc.value.value("family", std::string("constant"));
  if (family == "constant") spec.family = SequenceFamily::constant;
  else if (family == "mixture") spec.family = SequenceFamily::mixture;
  else if (family == "conjugate") spec.family = SequenceFamily::conjugate;
  else doc.fail("/family", "unknown family \"" + family + "\"");
  for (const char* key : {"a", "b"}) {
    if (!doc.value.contains(key)) doc.fail("", std::string("missing \"") + key + "\"");
  }
  spec.a = detail::action_field(doc, "a", dir);
  spec.b = detail::action_field(doc, "b", dir);
  if (spec.family == SequenceFamily::mixture) {
    for (const char* key : {"perturb_a", "perturb_b"}) {
      if (!doc.value.contains(key)) doc.fail("", std::string("mixture family needs \"") + key + "\"");
    }
    spec.perturb_a = detail::action_field(doc, "perturb_a", dir);
    spec.perturb_b = detail::action_field(doc, "perturb_b", dir);
  }
  auto get_size = [&](const char* key, std::size_t fallback) {
    if (!doc.value.contains(key)) return fallback;
    const json& v = doc.value[key];
    if (!v.is_number_unsigned()) doc.fail(std::string("/") + key, std::string("\"") + key + "\" must be a non-negative integer");
    return v.get<std::size_t>();
  };
  spec.n_min = get_size("n_min", spec.n_min);
  spec.n_max = get_size("n_max", spec.n_max);
  spec.T = get_size("T", spec.T);
  spec.K = get_size("K", spec.K);
  spec.seed = get_size("seed", 0);
  spec.budget = get_size("budget", kDefaultBudget);
  if (spec.T < 1 || spec.K < 1) doc.fail("", "T and K must be >= 1");
  return spec;
}

inline std::string harness_csv(const HarnessTable& table) {
  std::string out = "# format_version=" + std::to_string(kFormatVersion) + ",T=" + std::to_string(table.T) +
                    ",K=" + std::to_string(table.K) + ",K_factor=" + std::to_string(table.K_factor) + "\n";
  out += "n,lambda,df_a,df_b,df_prod,bound,holds";
  for (std::size_t t = 1; t <= table.T; ++t) out += ",dh_prod_t" + std::to_string(t) + ",bound_t" + std::to_string(t);
  out += "\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const auto& r : table.rows) {
    out += std::to_string(r.n) + "," + num(r.lambda) + "," + num(r.df_a) + "," + num(r.df_b) + "," + num(r.df_prod) +
           "," + num(r.bound) + "," + (r.holds ? "true" : "false");
    for (std::size_t t = 0; t < table.T; ++t) out += "," + num(r.prod_by_t[t]) + "," + num(r.bound_by_t[t]);
    out += "\n";
  }
  return out;
}

}  // namespace weakeq::io
