#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mmdom/boxorder.hpp"
#include "mmdom/construct.hpp"
#include "mmdom/core.hpp"
#include "mmdom/gh.hpp"
#include "mmdom/io.hpp"
#include "mmdom/measures.hpp"

namespace mmdom::cli {

using io::json;

enum Exit : int { computed = 0, refuted = 1, input_error = 2, budget = 3 };

struct RunConfig {
  std::string command;
  std::string input, input2;
  std::optional<std::string> eps, eps2, eps_seq;
  std::optional<std::size_t> stages;
  std::uint64_t seed = 0;
  std::uint64_t budget_maps = SearchOptions{}.max_maps;
  std::size_t budget_points = kDefaultPointCap;
  std::string mode = "direct";
  std::string out;
  unsigned threads = 1;
  std::optional<std::size_t> n;
  std::optional<std::string> diam;
  std::size_t count = 1;
  bool full_domain = false;
};

struct RunResult {
  int exit = computed;
  json report;
};

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> names{
      "validate",      "prohorov",       "box-bounds",      "dominates",          "eps-dominates",  "build-product",
      "refine",        "pad",            "run-sequence",    "derive-covering",    "precompact-profile", "gen",
      "gh-dist",       "gh-dominates",   "gh-refine",       "gh-run-sequence",    "gh-net-profile"};
  return names;
}

namespace detail {

using io::to_json;
using io::to_text;

struct Context {
  const RunConfig& cfg;
  json report;
  std::map<std::string, json> inputs;   // name -> parsed document

  SearchOptions search() const { return {cfg.budget_maps, cfg.threads}; }

  const json& load(const std::string& which) {
    auto it = inputs.find(which);
    if (it != inputs.end()) return it->second;
    const std::string& path = which == "input" ? cfg.input : cfg.input2;
    if (path.empty()) throw PreconditionError("--" + which + " is required for " + cfg.command);
    const std::string text = io::read_file(path);
    report["inputs"][which] = {{"fnv1a64", io::fnv1a64_hex(text)}, {"bytes", text.size()}};
    return inputs.emplace(which, io::parse_json(text, which)).first->second;
  }

  Scalar eps(const char* flag = "eps") {
    const auto& v = std::string(flag) == "eps" ? cfg.eps : cfg.eps2;
    if (!v) throw PreconditionError("--" + std::string(flag) + " is required for " + cfg.command);
    Scalar s;
    try {
      s = Scalar::parse(*v);
    } catch (const std::invalid_argument& e) {
      throw PreconditionError("--" + std::string(flag) + ": " + e.what());
    }
    report["params"][flag] = to_text(s);
    return s;
  }

  std::size_t stages() {
    if (!cfg.stages || *cfg.stages == 0) throw PreconditionError("--stages must be a positive count for " + cfg.command);
    report["params"]["stages"] = *cfg.stages;
    return *cfg.stages;
  }

  // --eps-seq "a,b,c" or --eps with the halving default.
  std::vector<Scalar> eps_sequence(std::size_t count) {
    std::vector<Scalar> seq;
    if (cfg.eps_seq) {
      std::stringstream ss(*cfg.eps_seq);
      std::string item;
      while (std::getline(ss, item, ',')) {
        try {
          seq.push_back(Scalar::parse(item));
        } catch (const std::invalid_argument& e) {
          throw PreconditionError(std::string("--eps-seq: ") + e.what());
        }
      }
    } else if (cfg.eps) {
      seq = default_eps_sequence(Scalar::parse(*cfg.eps), count);
    } else {
      throw PreconditionError("--eps-seq or --eps is required for " + cfg.command);
    }
    report["params"]["eps_seq"] = io::to_text_array(seq);
    return seq;
  }

  RepresentativeMode mode() {
    if (cfg.mode != "direct" && cfg.mode != "transfer") throw PreconditionError("--mode must be direct or transfer");
    report["params"]["mode"] = cfg.mode;
    return cfg.mode == "direct" ? RepresentativeMode::direct : RepresentativeMode::transfer;
  }
};

inline json decision_json(Decision d) { return to_string(d); }

inline int decision_exit(Decision d) {
  switch (d) {
    case Decision::holds: return computed;
    case Decision::refuted: return refuted;
    case Decision::indeterminate: return budget;
  }
  return budget;
}

inline json mm_iso_json(const MmIsoCertificate& c) {
  return {{"witness", to_json(c.witness)},
          {"eps", to_text(c.eps)},
          {"mass_defect", to_text(c.breakdown.mass_defect)},
          {"distortion", to_text(c.breakdown.distortion)},
          {"prohorov", to_text(c.breakdown.prohorov)}};
}

inline json domination_json(const DominationResult& r) {
  json j{{"decision", decision_json(r.decision)}, {"work", r.work}};
  if (r.certificate)
    j["certificate"] = {{"witness", to_json(r.certificate->witness)},
                        {"mode", to_string(r.certificate->mode)},
                        {"eps", to_text(r.certificate->eps)}};
  else
    j["certificate"] = nullptr;
  return j;
}

inline json optional_text(const std::optional<Scalar>& s) { return s ? json(to_text(*s)) : json(nullptr); }

inline json scheme_json(const PartitionScheme& s) {
  json levels = json::array();
  for (const auto& l : s.levels) levels.push_back(to_json(l));
  return {{"first_level", s.first_level}, {"eps", io::to_text_array(s.eps)}, {"levels", levels}};
}

inline json trace_json(const DominatorTrace& t) {
  json stages = json::array(), steps = json::array(), schemes = json::array(), rep_of = json::array();
  for (const auto& st : t.stages) {
    json members = json::array();
    for (const auto& c : st.members)
      members.push_back({{"member", c.member},
                         {"map", to_json(c.map)},
                         {"additive_defect", to_text(c.additive_defect)},
                         {"image_in_cover", c.image_in_cover},
                         {"pushforward_identity", c.pushforward_identity},
                         {"lemma_p_bound", optional_text(c.lemma_p_bound)},
                         {"domination_eps", to_text(c.domination.eps)},
                         {"verified", c.verified}});
    stages.push_back({{"index", st.index}, {"eps", to_text(st.eps)}, {"size", st.space.size()},
                      {"space", to_json(st.space)}, {"members", members}, {"verified", st.verified}});
  }
  for (const auto& s : t.steps)
    steps.push_back({{"from", s.from},
                     {"refine_eps", to_text(s.refine_eps)},
                     {"pad_eps", to_text(s.pad_eps)},
                     {"pad_eps_prime", to_text(s.pad_eps_prime)},
                     {"refine_bound", to_text(s.refine_bound)},
                     {"pad_bound", to_text(s.pad_bound)},
                     {"total_bound", to_text(s.total_bound)},
                     {"projection", mm_iso_json(s.projection)},
                     {"projection_ok", s.projection_ok},
                     {"inclusion", mm_iso_json(s.inclusion)},
                     {"inclusion_ok", s.inclusion_ok},
                     {"intermediate_size", s.intermediate_size},
                     {"transferred", s.transferred},
                     {"verified", s.verified}});
  for (const auto& s : t.schemes) schemes.push_back(scheme_json(s));
  for (const auto& r : t.representative_of) rep_of.push_back(r ? json(*r) : json(nullptr));
  return {{"eps", io::to_text_array(t.eps)},
          {"mode", to_string(t.mode)},
          {"representatives", t.representatives},
          {"representative_of", rep_of},
          {"schemes", schemes},
          {"stages", stages},
          {"steps", steps},
          {"truncated", t.truncated},
          {"truncation_reason", t.truncation_reason},
          {"verified", t.verified()}};
}

inline json isometry_json(const IsometryCheck& c) {
  return {{"distortion", to_text(c.distortion)}, {"covering", to_text(c.covering)}, {"eps", to_text(c.eps)}, {"ok", c.ok}};
}

inline json correspondence_json(const Correspondence& r) {
  json a = json::array();
  for (const auto& [x, y] : r.pairs) a.push_back(json::array({x, y}));
  return a;
}

// Members of the form {"space": ..., "blocks": ...} or bare spaces.
inline std::vector<std::pair<FiniteMMSpace, std::optional<PartitionFamily>>> members_with_blocks(const json& doc) {
  std::vector<std::pair<FiniteMMSpace, std::optional<PartitionFamily>>> out;
  const auto& arr = io::family_array(doc);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& m = arr[i];
    const json& sp = m.contains("space") ? m.at("space") : m;
    std::optional<PartitionFamily> blocks;
    if (m.contains("blocks")) blocks = io::partition_from_json(m.at("blocks"), "member " + std::to_string(i) + " blocks");
    out.emplace_back(io::space_from_json(sp), std::move(blocks));
  }
  if (out.empty()) throw PreconditionError("family: no members");
  return out;
}

inline const json& field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw PreconditionError(where + ": missing \"" + key + "\"");
  return j.at(key);
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

inline int cmd_validate(Context& c) {
  const json& doc = c.load("input");
  json results = json::array();
  bool all_ok = true;
  auto one = [&](const json& s) {
    const auto x = io::space_from_json(s);
    const auto msgs = validate(x);
    all_ok = all_ok && msgs.empty();
    results.push_back({{"valid", msgs.empty()}, {"violations", msgs}, {"size", x.size()}});
  };
  if (io::is_family(doc))
    for (const auto& s : io::family_array(doc)) one(s);
  else
    one(doc);
  c.report["result"] = {{"spaces", results}, {"valid", all_ok}};
  return all_ok ? computed : refuted;
}

inline int cmd_prohorov(Context& c) {
  const auto x = io::space_from_json(c.load("input"));
  const auto y = io::space_from_json(c.load("input2"));
  if (!(x.metric == y.metric)) throw PreconditionError("prohorov: both inputs must carry the same metric");
  require_valid(x, "input");
  require_valid(y, "input2");
  const auto v = prohorov_distance(x.metric, x.mass, y.mass);
  json r{{"value", to_text(v.value)}, {"attained", v.attained}};
  int exit = computed;
  if (c.cfg.eps) {
    const Scalar e = c.eps();
    const auto d = prohorov_le(x.metric, x.mass, y.mass, e);
    json dj{{"holds", d.holds}, {"within_closed", prohorov_within(x.metric, x.mass, y.mass, e)}};
    if (d.coupling) {
      json m = json::array();
      for (Index i = 0; i < d.coupling->n; ++i) {
        json row = json::array();
        for (Index k = 0; k < d.coupling->n; ++k) row.push_back(to_text(d.coupling->at(i, k)));
        m.push_back(row);
      }
      dj["coupling"] = m;
    }
    if (d.violating_set) {
      dj["violating_set"] = *d.violating_set;
      dj["violation_in_first"] = d.violation_in_first;
    }
    r["decision"] = dj;
    if (!d.holds) exit = refuted;
  }
  c.report["result"] = r;
  return exit;
}

inline int cmd_box_bounds(Context& c) {
  const auto x = io::space_from_json(c.load("input"));
  const auto y = io::space_from_json(c.load("input2"));
  const auto b = box_bounds(x, y, c.search());
  auto side = [](const MinMmIso& m) {
    return json{{"eps", to_text(m.eps)}, {"optimal", m.optimal}, {"maps_examined", m.maps_examined},
                {"certificate", mm_iso_json(m.certificate)}};
  };
  c.report["result"] = {{"lower", to_text(b.lower)}, {"upper", to_text(b.upper)},
                        {"forward", side(b.forward)}, {"backward", side(b.backward)}};
  return b.forward.optimal && b.backward.optimal ? computed : budget;
}

inline int cmd_dominates(Context& c) {
  const auto x = io::space_from_json(c.load("input"));
  const auto y = io::space_from_json(c.load("input2"));
  const auto r = dominates(x, y, c.search());
  c.report["result"] = domination_json(r);
  return decision_exit(r.decision);
}

inline int cmd_eps_dominates(Context& c) {
  const auto x = io::space_from_json(c.load("input"));
  const auto y = io::space_from_json(c.load("input2"));
  const Scalar e = c.eps();
  c.report["params"]["full_domain"] = c.cfg.full_domain;
  const auto r = eps_dominates(x, y, e, c.cfg.full_domain, c.search());
  c.report["result"] = domination_json(r);
  return decision_exit(r.decision);
}

inline int cmd_build_product(Context& c) {
  auto members = members_with_blocks(c.load("input"));
  std::optional<Scalar> e;
  if (c.cfg.eps) e = c.eps();
  std::vector<Factor> factors;
  json blocks = json::array();
  for (auto& [y, b] : members) {
    if (!b) b = e ? refine_level(y, PartitionFamily{}, *e) : singleton_partition(support(y.mass));
    blocks.push_back(to_json(*b));
  }
  for (auto& [y, b] : members) factors.push_back({y, *b});
  c.report["params"]["budget_points"] = c.cfg.budget_points;
  const auto p = product_dominator(factors, c.cfg.budget_points);
  json maps = json::array();
  for (const auto& f : p.maps) maps.push_back(to_json(f));
  c.report["result"] = {{"space", to_json(p.space)}, {"maps", maps}, {"tuples", p.tuples}, {"blocks", blocks},
                        {"quotiented", p.quotiented}, {"verified", true}};
  return computed;
}

inline int cmd_refine(Context& c) {
  const json& doc = c.load("input");
  const auto x = io::space_from_json(field(doc, "x", "refine input"));
  const Scalar e = c.eps(), e2 = c.eps("eps2");
  std::vector<FiniteMMSpace> spaces;
  const auto& arr = field(doc, "members", "refine input");
  for (const auto& m : arr) spaces.push_back(io::space_from_json(field(m, "space", "refine member")));
  std::vector<RefineMember> members;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string w = "member " + std::to_string(i);
    members.push_back({spaces[i], io::map_from_json(field(arr[i], "map", w), w + " map"),
                       io::partition_from_json(field(arr[i], "coarse", w), w + " coarse"),
                       io::partition_from_json(field(arr[i], "fine", w), w + " fine")});
  }
  const auto r = refine(x, members, e, e2, c.cfg.budget_points);
  json maps = json::array();
  for (const auto& g : r.maps) maps.push_back(to_json(g));
  c.report["result"] = {{"space", to_json(r.space)},
                        {"maps", maps},
                        {"projection", to_json(r.projection)},
                        {"projection_certificate", mm_iso_json(r.projection_check.certificate)},
                        {"projection_ok", r.projection_check.ok},
                        {"box_bound", to_text(r.box_bound)},
                        {"max_key_ratio", io::to_text_array(r.max_key_ratio)},
                        {"quotiented", r.quotiented},
                        {"verified", true}};
  return computed;
}

inline int cmd_pad(Context& c) {
  const json& doc = c.load("input");
  const auto x = io::space_from_json(field(doc, "x", "pad input"));
  const Scalar e = c.eps(), e2 = c.eps("eps2");
  std::vector<FiniteMMSpace> spaces;
  const auto& arr = field(doc, "members", "pad input");
  for (const auto& m : arr) spaces.push_back(io::space_from_json(field(m, "space", "pad member")));
  std::vector<PadMember> members;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string w = "member " + std::to_string(i);
    members.push_back({spaces[i], io::map_from_json(field(arr[i], "map", w), w + " map"),
                       io::partition_from_json(field(arr[i], "blocks", w), w + " blocks")});
  }
  const auto r = pad_extend(x, members, e, e2, c.cfg.budget_points);
  json maps = json::array(), weights = json::array();
  for (const auto& f : r.maps) maps.push_back(to_json(f));
  for (const auto& w : r.anchor_masses) weights.push_back(io::to_text_array(w));
  c.report["result"] = {{"space", to_json(r.space)},
                        {"maps", maps},
                        {"inclusion", to_json(r.inclusion)},
                        {"inclusion_certificate", mm_iso_json(r.inclusion_check.certificate)},
                        {"inclusion_ok", r.inclusion_check.ok},
                        {"anchors", r.anchors},
                        {"anchor_masses", weights},
                        {"box_bound", to_text(r.box_bound)},
                        {"quotiented", r.quotiented},
                        {"verified", true}};
  return computed;
}

inline int cmd_run_sequence(Context& c) {
  const auto family = io::family_from_json(c.load("input"));
  const std::size_t k = c.stages();
  const auto seq = c.eps_sequence(k);
  SequenceOptions opts;
  opts.mode = c.mode();
  opts.point_cap = c.cfg.budget_points;
  opts.search = c.search();
  c.report["params"]["budget_points"] = c.cfg.budget_points;
  const auto t = dominator_sequence(family, seq, k, opts);
  c.report["result"] = trace_json(t);
  if (t.truncated) return budget;
  return t.verified() ? computed : refuted;
}

inline json covering_json(const DerivedCovering& d) {
  return {{"sets", d.sets},
          {"max_diameter", to_text(d.max_diameter)},
          {"union_diameter", to_text(d.union_diameter)},
          {"source_union_diameter", to_text(d.source_union_diameter)},
          {"covered_mass", to_text(d.covered_mass)},
          {"count_ok", d.count_ok},
          {"diameter_ok", d.diameter_ok},
          {"union_diameter_ok", d.union_diameter_ok},
          {"mass_ok", d.mass_ok},
          {"ok", d.ok()}};
}

inline int cmd_derive_covering(Context& c) {
  const json& doc = c.load("input");
  const Scalar e = c.eps();
  std::vector<DerivedCovering> res;
  json extra;
  if (io::is_family(doc)) {
    const auto family = io::family_from_json(doc);
    const auto d = eps_dominator(family, e, c.mode(), c.search(), c.cfg.budget_points);
    const auto cov = derive_covering_from(d, family);
    res = cov.members;
    extra = {{"dominator", to_json(d.space)}, {"covering", to_json(cov.covering)}, {"covering_eps", to_text(cov.eps)}};
  } else {
    const auto x = io::space_from_json(field(doc, "x", "derive-covering input"));
    const auto k = io::partition_from_json(field(doc, "covering", "derive-covering input"), "covering");
    const auto& arr = field(doc, "members", "derive-covering input");
    std::vector<FiniteMMSpace> spaces;
    for (const auto& m : arr) spaces.push_back(io::space_from_json(field(m, "space", "derive-covering member")));
    std::vector<CoveringWitness> w;
    for (std::size_t i = 0; i < arr.size(); ++i)
      w.push_back({spaces[i], io::map_from_json(field(arr[i], "map", "member"), "member " + std::to_string(i) + " map")});
    res = derive_covering(x, k, w, e);
  }
  json members = json::array();
  bool ok = true;
  for (const auto& d : res) {
    members.push_back(covering_json(d));
    ok = ok && d.ok();
  }
  extra["members"] = members;
  extra["ok"] = ok;
  c.report["result"] = extra;
  return ok ? computed : refuted;
}

inline int cmd_precompact_profile(Context& c) {
  const auto family = io::family_from_json(c.load("input"));
  const Scalar e = c.eps();
  const auto p = precompact_profile(family, e);
  json members = json::array();
  for (const auto& m : p.members)
    members.push_back({{"blocks", m.blocks},
                       {"max_block_diameter", to_text(m.max_block_diameter)},
                       {"union_diameter", to_text(m.union_diameter)},
                       {"covered_mass", to_text(m.covered_mass)}});
  c.report["result"] = {{"count_bound", p.count_bound}, {"diameter_bound", to_text(p.diameter_bound)},
                        {"delta", to_text(p.delta)}, {"members", members}};
  return computed;
}

inline int cmd_gen(Context& c) {
  if (!c.cfg.n || *c.cfg.n == 0) throw PreconditionError("gen: --n must be a positive point bound");
  if (!c.cfg.diam) throw PreconditionError("gen: --diam is required");
  Scalar d;
  try {
    d = Scalar::parse(*c.cfg.diam);
  } catch (const std::invalid_argument& e) {
    throw PreconditionError(std::string("--diam: ") + e.what());
  }
  if (!d.is_positive()) throw PreconditionError("gen: --diam must be positive");
  if (c.cfg.count == 0) throw PreconditionError("gen: --count must be positive");
  c.report["params"]["n"] = *c.cfg.n;
  c.report["params"]["diam"] = to_text(d);
  c.report["params"]["seed"] = c.cfg.seed;
  c.report["params"]["count"] = c.cfg.count;
  if (c.cfg.count == 1) {
    const auto x = generate_instance(*c.cfg.n, d, c.cfg.seed);
    const json doc = to_json(x);
    for (const auto& [k, v] : doc.items()) c.report[k] = v;
  } else {
    json spaces = json::array();
    for (std::size_t i = 0; i < c.cfg.count; ++i) spaces.push_back(to_json(generate_instance(*c.cfg.n, d, c.cfg.seed + i)));
    c.report["spaces"] = spaces;
  }
  return computed;
}

inline int cmd_gh_dist(Context& c) {
  const auto x = io::metric_from_json(c.load("input"));
  const auto y = io::metric_from_json(c.load("input2"));
  const auto g = gh_distance(x, y, c.search());
  json cert{{"kind", g.certificate.kind == GhCertificateKind::correspondence ? "correspondence" : "eps_isometry"},
            {"value", to_text(g.certificate.value)}};
  if (g.certificate.kind == GhCertificateKind::correspondence)
    cert["correspondence"] = correspondence_json(g.certificate.correspondence);
  else
    cert["map"] = to_json(g.certificate.map);
  json r{{"exact", g.exact}, {"lower", to_text(g.lower)}, {"upper", to_text(g.upper)},
         {"upper_strict", g.upper_strict}, {"certificate", cert}, {"work", g.work}};
  if (g.exact) r["value"] = to_text(g.lower);
  c.report["result"] = r;
  return g.exact ? computed : budget;
}

inline int cmd_gh_dominates(Context& c) {
  const auto x = io::metric_from_json(c.load("input"));
  const auto y = io::metric_from_json(c.load("input2"));
  GhDominationResult r;
  if (c.cfg.eps)
    r = gh_eps_dominates(x, y, c.eps(), c.search());
  else
    r = gh_dominates(x, y, c.search());
  c.report["result"] = {{"decision", decision_json(r.decision)},
                        {"witness", r.witness ? to_json(*r.witness) : json(nullptr)},
                        {"work", r.work}};
  return decision_exit(r.decision);
}

inline int cmd_gh_refine(Context& c) {
  const json& doc = c.load("input");
  const auto x = io::metric_from_json(field(doc, "x", "gh-refine input"));
  const Scalar e = c.eps(), e2 = c.eps("eps2");
  std::vector<FiniteMetricSpace> spaces;
  const auto& arr = field(doc, "members", "gh-refine input");
  for (const auto& m : arr) spaces.push_back(io::metric_from_json(field(m, "space", "gh-refine member")));
  std::vector<GhRefineMember> members;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string w = "member " + std::to_string(i);
    IndexSet net = arr[i].contains("net") ? io::index_set_from_json(arr[i].at("net"), w + " net")
                                          : greedy_net(spaces[i], e2, true);
    members.push_back({spaces[i], io::map_from_json(field(arr[i], "map", w), w + " map"), std::move(net)});
  }
  const auto r = gh_refine(x, members, e, e2, {}, c.search(), c.cfg.budget_points);
  json maps = json::array(), nets = json::array();
  for (const auto& g : r.maps) maps.push_back(to_json(g));
  for (const auto& m : members) nets.push_back(m.net);
  c.report["result"] = {{"space", to_json(r.space)},
                        {"maps", maps},
                        {"nets", nets},
                        {"projection", to_json(r.projection)},
                        {"projection_check", isometry_json(r.projection_check)},
                        {"gh_bound", to_text(r.gh_bound)},
                        {"coverings", io::to_text_array(r.coverings)},
                        {"passthrough", r.passthrough},
                        {"verified", true}};
  return computed;
}

inline int cmd_gh_run_sequence(Context& c) {
  const auto family = io::metric_family_from_json(c.load("input"));
  const std::size_t k = c.stages();
  const auto seq = c.eps_sequence(k);
  GhSequenceOptions opts;
  opts.point_cap = c.cfg.budget_points;
  opts.search = c.search();
  c.report["params"]["budget_points"] = c.cfg.budget_points;
  const auto t = gh_dominator_sequence(family, seq, k, opts);
  json stages = json::array(), steps = json::array();
  for (const auto& s : t.stages) {
    json maps = json::array(), checks = json::array();
    for (const auto& f : s.maps) maps.push_back(to_json(f));
    for (const auto& ch : s.checks)
      checks.push_back({{"additive_defect", to_text(ch.distortion)}, {"covering", to_text(ch.covering)}, {"ok", ch.ok}});
    stages.push_back({{"index", s.index}, {"eps", to_text(s.eps)}, {"size", s.space.size()},
                      {"space", to_json(s.space)}, {"maps", maps}, {"checks", checks}, {"verified", s.verified}});
  }
  for (const auto& s : t.steps)
    steps.push_back({{"from", s.from}, {"eps", to_text(s.eps)}, {"eps_prime", to_text(s.eps_prime)},
                     {"gh_bound", to_text(s.gh_bound)}, {"projection", to_json(s.projection_map)},
                     {"projection_check", isometry_json(s.projection)}, {"nets", s.nets},
                     {"passthrough", s.passthrough}, {"verified", s.verified}});
  c.report["result"] = {{"eps", io::to_text_array(t.eps)}, {"stages", stages}, {"steps", steps},
                        {"truncated", t.truncated}, {"truncation_reason", t.truncation_reason},
                        {"verified", t.verified()}};
  if (t.truncated) return budget;
  return t.verified() ? computed : refuted;
}

inline int cmd_gh_net_profile(Context& c) {
  const auto family = io::metric_family_from_json(c.load("input"));
  const Scalar e = c.eps();
  const auto p = gh_net_profile(family, e);
  json members = json::array();
  bool ok = true;
  for (const auto& m : p.members) {
    members.push_back({{"net", m.net}, {"separation", to_text(m.separation)}, {"covering", to_text(m.covering)}, {"ok", m.ok}});
    ok = ok && m.ok;
  }
  c.report["result"] = {{"size_bound", p.size_bound}, {"diameter_bound", to_text(p.diameter_bound)},
                        {"members", members}, {"ok", ok}};
  return ok ? computed : refuted;
}

inline const std::map<std::string, std::function<int(Context&)>>& dispatch() {
  static const std::map<std::string, std::function<int(Context&)>> table{
      {"validate", cmd_validate},
      {"prohorov", cmd_prohorov},
      {"box-bounds", cmd_box_bounds},
      {"dominates", cmd_dominates},
      {"eps-dominates", cmd_eps_dominates},
      {"build-product", cmd_build_product},
      {"refine", cmd_refine},
      {"pad", cmd_pad},
      {"run-sequence", cmd_run_sequence},
      {"derive-covering", cmd_derive_covering},
      {"precompact-profile", cmd_precompact_profile},
      {"gen", cmd_gen},
      {"gh-dist", cmd_gh_dist},
      {"gh-dominates", cmd_gh_dominates},
      {"gh-refine", cmd_gh_refine},
      {"gh-run-sequence", cmd_gh_run_sequence},
      {"gh-net-profile", cmd_gh_net_profile}};
  return table;
}

inline const char* status_name(int exit) {
  switch (exit) {
    case computed: return "computed";
    case refuted: return "refuted";
    case input_error: return "input_error";
    case budget: return "budget_exceeded";
  }
  return "unknown";
}

}  // namespace detail

// Runs one command. Never throws for data problems: they become exit codes
// with an "error" entry in the report.
inline RunResult run(const RunConfig& cfg) {
  detail::Context ctx{cfg, json::object(), {}};
  ctx.report["command"] = cfg.command;
  ctx.report["params"] = json::object();
  ctx.report["params"]["budget_maps"] = cfg.budget_maps;
  int exit = computed;
  try {
    const auto& table = detail::dispatch();
    auto it = table.find(cfg.command);
    if (it == table.end()) throw PreconditionError("unknown command '" + cfg.command + "'");
    exit = it->second(ctx);
  } catch (const BudgetExceeded& e) {
    exit = budget;
    ctx.report["error"] = e.what();
  } catch (const HypothesisError& e) {
    exit = input_error;
    ctx.report["error"] = e.what();
    ctx.report["hypothesis"] = e.hypothesis();
  } catch (const PreconditionError& e) {
    exit = input_error;
    ctx.report["error"] = e.what();
  } catch (const PostconditionError& e) {
    exit = refuted;
    ctx.report["error"] = std::string("postcondition failed: ") + e.what();
  } catch (const std::invalid_argument& e) {
    exit = input_error;
    ctx.report["error"] = e.what();
  } catch (const nlohmann::json::exception& e) {
    exit = input_error;
    ctx.report["error"] = e.what();
  }
  ctx.report["exit"] = exit;
  ctx.report["status"] = detail::status_name(exit);
  return {exit, std::move(ctx.report)};
}

// Canonical text form of a report: sorted keys, two-space indent.
inline std::string render(const json& report) { return report.dump(2) + "\n"; }

}  // namespace mmdom::cli
