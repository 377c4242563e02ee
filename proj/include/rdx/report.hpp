#pragma once

#include "rdx/align.hpp"
#include "rdx/baselines.hpp"
#include "rdx/difference.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <optional>

namespace rdx {

inline constexpr const char* kToolVersion = "rdx 0.1.0";

enum class AlignMode { none, a2b, b2a };
enum class Sampler { spectral, pagerank };

inline const char* to_string(AlignMode m) {
  switch (m) {
    case AlignMode::none: return "none";
    case AlignMode::a2b: return "a2b";
    case AlignMode::b2a: return "b2a";
  }
  return "?";
}

inline AlignMode align_mode_from_string(const std::string& s) {
  if (s == "none") return AlignMode::none;
  if (s == "a2b") return AlignMode::a2b;
  if (s == "b2a") return AlignMode::b2a;
  throw ValidationError("unknown align mode '" + s + "'");
}

inline const char* to_string(Sampler s) { return s == Sampler::spectral ? "spectral" : "pagerank"; }

inline Sampler sampler_from_string(const std::string& s) {
  if (s == "spectral") return Sampler::spectral;
  if (s == "pagerank") return Sampler::pagerank;
  throw ValidationError("unknown sampler '" + s + "'");
}

/// Every knob of a run. Echoed verbatim into the report.
struct RunConfig {
  std::string method = "rdx";  // rdx | kmeans | pca | nmf
  DistanceKind distance = DistanceKind::neighborhood;
  DiffKind diff = DiffKind::locally_biased_tanh;
  double gamma = 0.05;
  double beta = 5.0;
  int m = 3;
  int grid_size = 9;
  AlignMode align = AlignMode::none;
  int align_steps = 100;
  double align_lr = 0.001;
  double align_train_frac = 0.7;
  Sampler sampler = Sampler::spectral;
  std::uint64_t seed = 0;
  std::optional<std::string> judge_path;
  int neighbor_index = 7;
  int kmeans_restarts = 10;
  int kmeans_max_iter = 300;
  double eig_tolerance = 1e-8;
  double pagerank_damping = 0.85;
  std::vector<DistanceKind> bsr_variants = {DistanceKind::neighborhood,
                                            DistanceKind::max_normalized};
  int poly_h = 2;
  int nmf_iters = 500;
  bool allow_large = false;

  static constexpr Index kMaxItems = 20000;

  bool operator==(const RunConfig&) const = default;

  void validate() const {
    if (method != "rdx" && method != "kmeans" && method != "pca" && method != "nmf") {
      throw ValidationError("unknown method '" + method + "'");
    }
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ValidationError("gamma must be positive");
    if (!(beta > 0.0) || !std::isfinite(beta)) throw ValidationError("beta must be positive");
    if (m < 1) throw ValidationError("num-explanations must be >= 1");
    if (grid_size < 2) throw ValidationError("grid-size must be >= 2 (BSR needs item pairs)");
    if (align_steps < 0) throw ValidationError("align steps must be >= 0");
    if (!(align_lr > 0.0)) throw ValidationError("align lr must be positive");
    if (!(align_train_frac > 0.0 && align_train_frac < 1.0)) {
      throw ValidationError("align train fraction must lie in (0, 1)");
    }
    if (neighbor_index < 1) throw ValidationError("neighbor_index must be >= 1");
    if (kmeans_restarts < 1 || kmeans_max_iter < 1) throw ValidationError("bad k-means settings");
    if (!(eig_tolerance > 0.0)) throw ValidationError("eig_tolerance must be positive");
    if (!(pagerank_damping > 0.0 && pagerank_damping < 1.0)) {
      throw ValidationError("pagerank damping must lie in (0, 1)");
    }
    if (poly_h < 2) throw ValidationError("polysemanticity h must be >= 2");
    if (nmf_iters < 1) throw ValidationError("nmf iterations must be >= 1");
  }
};

struct GridRecord {
  std::string anchor;
  std::vector<std::string> members;
  int source_cluster = 0;
  int target_size = 0;
  bool partial = false;
  double bsr = 0.0;
  std::optional<double> clarity;
  std::optional<double> polysemanticity;

  bool operator==(const GridRecord&) const = default;
};

struct DirectionRecord {
  std::string source;
  std::string reference;
  double bsr = 0.0;
  std::map<std::string, double> bsr_variants;
  std::vector<GridRecord> grids;
  std::vector<int> partition;  // cluster label per report item
  int discarded_label = -1;
  std::vector<std::string> discarded;
  std::uint64_t zero_min_cells = 0;
  std::uint64_t clamped_cells = 0;

  bool operator==(const DirectionRecord&) const = default;
};

struct ProjectionRecord {
  std::string model_id;
  std::vector<std::array<double, 2>> coords;
  bool rank_deficient = false;

  bool operator==(const ProjectionRecord&) const = default;
};

struct AlignmentRecord {
  std::string mode;
  double best_val_cka = 0.0;
  int best_step = 0;
  std::vector<AlignmentStep> trace;

  bool operator==(const AlignmentRecord&) const = default;
};

/// Complete record of one run.
struct ComparisonReport {
  std::string tool_version = kToolVersion;
  RunConfig config;
  std::map<std::string, std::string> input_digests;
  std::vector<std::string> items;
  std::vector<DirectionRecord> directions;
  std::optional<double> redundancy;
  std::vector<ProjectionRecord> projections;
  std::optional<AlignmentRecord> alignment;
  std::vector<std::string> notes;

  bool operator==(const ComparisonReport&) const = default;
};

// ---------------------------------------------------------------------------
// JSON conversion
// ---------------------------------------------------------------------------

using Json = nlohmann::json;

namespace detail {

inline Json opt(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

/// Field access that reports the dotted path of whatever is missing.
class Reader {
public:
  Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {}

  const Json& at(const std::string& key) const {
    if (!j_.is_object()) throw SchemaError(path_, "expected an object");
    auto it = j_.find(key);
    if (it == j_.end()) throw SchemaError(child(key), "missing required field");
    return *it;
  }

  std::string child(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  Reader sub(const std::string& key) const { return {at(key), child(key)}; }

  template <typename T>
  T get(const std::string& key) const {
    const Json& v = at(key);
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (v.is_null()) return std::numeric_limits<double>::quiet_NaN();
        if (!v.is_number()) throw SchemaError(child(key), "expected a number");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw SchemaError(child(key), "expected a string");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw SchemaError(child(key), "expected a boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw SchemaError(child(key), "expected an integer");
      }
      return v.get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(child(key), e.what());
    }
  }

  std::optional<double> get_opt(const std::string& key) const {
    const Json& v = at(key);
    if (v.is_null()) return std::nullopt;
    if (!v.is_number()) throw SchemaError(child(key), "expected a number or null");
    return v.get<double>();
  }

  const Json& array(const std::string& key) const {
    const Json& v = at(key);
    if (!v.is_array()) throw SchemaError(child(key), "expected an array");
    return v;
  }

  const std::string& path() const { return path_; }
  const Json& json() const { return j_; }

private:
  const Json& j_;
  std::string path_;
};

template <typename F>
auto parse_enum(const Reader& r, const std::string& key, F from_string) {
  const auto s = r.get<std::string>(key);
  try {
    return from_string(s);
  } catch (const ValidationError& e) {
    throw SchemaError(r.child(key), e.what());
  }
}

}  // namespace detail

inline Json to_json(const RunConfig& c) {
  Json variants = Json::array();
  for (auto k : c.bsr_variants) variants.push_back(to_string(k));
  return {{"method", c.method},
          {"distance", to_string(c.distance)},
          {"diff", to_string(c.diff)},
          {"gamma", c.gamma},
          {"beta", c.beta},
          {"num_explanations", c.m},
          {"grid_size", c.grid_size},
          {"align", to_string(c.align)},
          {"align_steps", c.align_steps},
          {"align_lr", c.align_lr},
          {"align_train_frac", c.align_train_frac},
          {"sampler", to_string(c.sampler)},
          {"seed", c.seed},
          {"judge_path", c.judge_path ? Json(*c.judge_path) : Json(nullptr)},
          {"neighbor_index", c.neighbor_index},
          {"kmeans_restarts", c.kmeans_restarts},
          {"kmeans_max_iter", c.kmeans_max_iter},
          {"eig_tolerance", c.eig_tolerance},
          {"pagerank_damping", c.pagerank_damping},
          {"bsr_variants", variants},
          {"poly_h", c.poly_h},
          {"nmf_iters", c.nmf_iters},
          {"allow_large", c.allow_large}};
}

inline RunConfig run_config_from_json(const detail::Reader& r) {
  RunConfig c;
  c.method = r.get<std::string>("method");
  c.distance = detail::parse_enum(r, "distance", distance_kind_from_string);
  c.diff = detail::parse_enum(r, "diff", diff_kind_from_string);
  c.gamma = r.get<double>("gamma");
  c.beta = r.get<double>("beta");
  c.m = r.get<int>("num_explanations");
  c.grid_size = r.get<int>("grid_size");
  c.align = detail::parse_enum(r, "align", align_mode_from_string);
  c.align_steps = r.get<int>("align_steps");
  c.align_lr = r.get<double>("align_lr");
  c.align_train_frac = r.get<double>("align_train_frac");
  c.sampler = detail::parse_enum(r, "sampler", sampler_from_string);
  c.seed = r.get<std::uint64_t>("seed");
  const Json& judge = r.at("judge_path");
  if (judge.is_null()) {
    c.judge_path.reset();
  } else {
    c.judge_path = r.get<std::string>("judge_path");
  }
  c.neighbor_index = r.get<int>("neighbor_index");
  c.kmeans_restarts = r.get<int>("kmeans_restarts");
  c.kmeans_max_iter = r.get<int>("kmeans_max_iter");
  c.eig_tolerance = r.get<double>("eig_tolerance");
  c.pagerank_damping = r.get<double>("pagerank_damping");
  c.bsr_variants.clear();
  for (const auto& v : r.array("bsr_variants")) {
    if (!v.is_string()) throw SchemaError(r.child("bsr_variants"), "expected strings");
    try {
      c.bsr_variants.push_back(distance_kind_from_string(v.get<std::string>()));
    } catch (const ValidationError& e) {
      throw SchemaError(r.child("bsr_variants"), e.what());
    }
  }
  c.poly_h = r.get<int>("poly_h");
  c.nmf_iters = r.get<int>("nmf_iters");
  c.allow_large = r.get<bool>("allow_large");
  return c;
}

inline Json to_json(const ComparisonReport& rep) {
  Json dirs = Json::array();
  for (const auto& d : rep.directions) {
    Json grids = Json::array();
    for (const auto& g : d.grids) {
      grids.push_back({{"anchor", g.anchor},
                       {"members", g.members},
                       {"source_cluster", g.source_cluster},
                       {"target_size", g.target_size},
                       {"partial", g.partial},
                       {"bsr", g.bsr},
                       {"clarity", detail::opt(g.clarity)},
                       {"polysemanticity", detail::opt(g.polysemanticity)}});
    }
    Json variants = Json::object();
    for (const auto& [k, v] : d.bsr_variants) variants[k] = v;
    dirs.push_back({{"source", d.source},
                    {"reference", d.reference},
                    {"bsr", d.bsr},
                    {"bsr_variants", variants},
                    {"grids", grids},
                    {"partition", d.partition},
                    {"discarded_label", d.discarded_label},
                    {"discarded", d.discarded},
                    {"zero_min_cells", d.zero_min_cells},
                    {"clamped_cells", d.clamped_cells}});
  }
  Json projections = Json::array();
  for (const auto& p : rep.projections) {
    Json coords = Json::array();
    for (const auto& c : p.coords) coords.push_back({c[0], c[1]});
    projections.push_back(
        {{"model_id", p.model_id}, {"coords", coords}, {"rank_deficient", p.rank_deficient}});
  }
  Json alignment = nullptr;
  if (rep.alignment) {
    Json trace = Json::array();
    for (const auto& s : rep.alignment->trace) {
      trace.push_back({{"step", s.step}, {"train_loss", s.train_loss}, {"val_cka", s.val_cka}});
    }
    alignment = {{"mode", rep.alignment->mode},
                 {"best_val_cka", rep.alignment->best_val_cka},
                 {"best_step", rep.alignment->best_step},
                 {"trace", trace}};
  }
  Json digests = Json::object();
  for (const auto& [k, v] : rep.input_digests) digests[k] = v;
  return {{"tool_version", rep.tool_version},
          {"config", to_json(rep.config)},
          {"input_digests", digests},
          {"items", rep.items},
          {"directions", dirs},
          {"redundancy", detail::opt(rep.redundancy)},
          {"projections", projections},
          {"alignment", alignment},
          {"notes", rep.notes}};
}

inline ComparisonReport report_from_json(const Json& j) {
  using detail::Reader;
  const Reader r(j, "");
  ComparisonReport rep;
  rep.tool_version = r.get<std::string>("tool_version");
  rep.config = run_config_from_json(r.sub("config"));
  const Json& digests = r.at("input_digests");
  if (!digests.is_object()) throw SchemaError("input_digests", "expected an object");
  for (auto it = digests.begin(); it != digests.end(); ++it) {
    if (!it->is_string()) throw SchemaError("input_digests." + it.key(), "expected a string");
    rep.input_digests[it.key()] = it->get<std::string>();
  }
  rep.items = r.get<std::vector<std::string>>("items");
  const Json& dirs = r.array("directions");
  for (std::size_t di = 0; di < dirs.size(); ++di) {
    const Reader dr(dirs[di], "directions[" + std::to_string(di) + "]");
    DirectionRecord d;
    d.source = dr.get<std::string>("source");
    d.reference = dr.get<std::string>("reference");
    d.bsr = dr.get<double>("bsr");
    const Json& variants = dr.at("bsr_variants");
    if (!variants.is_object()) throw SchemaError(dr.child("bsr_variants"), "expected an object");
    for (auto it = variants.begin(); it != variants.end(); ++it) {
      d.bsr_variants[it.key()] = it->is_null() ? std::numeric_limits<double>::quiet_NaN()
                                               : it->get<double>();
    }
    const Json& grids = dr.array("grids");
    for (std::size_t gi = 0; gi < grids.size(); ++gi) {
      const Reader gr(grids[gi], dr.child("grids[" + std::to_string(gi) + "]"));
      GridRecord g;
      g.anchor = gr.get<std::string>("anchor");
      g.members = gr.get<std::vector<std::string>>("members");
      g.source_cluster = gr.get<int>("source_cluster");
      g.target_size = gr.get<int>("target_size");
      g.partial = gr.get<bool>("partial");
      g.bsr = gr.get<double>("bsr");
      g.clarity = gr.get_opt("clarity");
      g.polysemanticity = gr.get_opt("polysemanticity");
      d.grids.push_back(std::move(g));
    }
    d.partition = dr.get<std::vector<int>>("partition");
    if (d.partition.size() != rep.items.size()) {
      throw SchemaError(dr.child("partition"), "length differs from items");
    }
    d.discarded_label = dr.get<int>("discarded_label");
    d.discarded = dr.get<std::vector<std::string>>("discarded");
    d.zero_min_cells = dr.get<std::uint64_t>("zero_min_cells");
    d.clamped_cells = dr.get<std::uint64_t>("clamped_cells");
    rep.directions.push_back(std::move(d));
  }
  rep.redundancy = r.get_opt("redundancy");
  const Json& projections = r.array("projections");
  for (std::size_t pi = 0; pi < projections.size(); ++pi) {
    const Reader pr(projections[pi], "projections[" + std::to_string(pi) + "]");
    ProjectionRecord p;
    p.model_id = pr.get<std::string>("model_id");
    for (const auto& c : pr.array("coords")) {
      if (!c.is_array() || c.size() != 2) throw SchemaError(pr.child("coords"), "expected [x, y] pairs");
      p.coords.push_back({c[0].get<double>(), c[1].get<double>()});
    }
    p.rank_deficient = pr.get<bool>("rank_deficient");
    rep.projections.push_back(std::move(p));
  }
  const Json& alignment = r.at("alignment");
  if (!alignment.is_null()) {
    const Reader ar(alignment, "alignment");
    AlignmentRecord a;
    a.mode = ar.get<std::string>("mode");
    a.best_val_cka = ar.get<double>("best_val_cka");
    a.best_step = ar.get<int>("best_step");
    const Json& trace = ar.array("trace");
    for (std::size_t ti = 0; ti < trace.size(); ++ti) {
      const Reader tr(trace[ti], ar.child("trace[" + std::to_string(ti) + "]"));
      a.trace.push_back({tr.get<int>("step"), tr.get<double>("train_loss"), tr.get<double>("val_cka")});
    }
    rep.alignment = std::move(a);
  }
  rep.notes = r.get<std::vector<std::string>>("notes");
  return rep;
}

// ---------------------------------------------------------------------------
// Canonical serialization: sorted keys, two-space indentation, arrays of
// scalars on one line, floats as %.17g, non-finite floats as null.
// ---------------------------------------------------------------------------

namespace detail {

inline void canonical_scalar(const Json& j, std::string& out) {
  switch (j.type()) {
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) {
        out += "null";
        return;
      }
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out += buf;
      return;
    }
    default:
      out += j.dump();
  }
}

inline bool all_scalars(const Json& j) {
  for (const auto& e : j) {
    if (e.is_structured()) return false;
  }
  return true;
}

inline void canonical_dump(const Json& j, std::string& out, int depth) {
  const std::string pad(static_cast<std::size_t>(2 * (depth + 1)), ' ');
  const std::string close_pad(static_cast<std::size_t>(2 * depth), ' ');
  if (j.is_object()) {
    if (j.empty()) {
      out += "{}";
      return;
    }
    out += "{\n";
    bool first = true;
    for (auto it = j.begin(); it != j.end(); ++it) {  // std::map order: sorted keys
      if (!first) out += ",\n";
      first = false;
      out += pad;
      out += Json(it.key()).dump();
      out += ": ";
      canonical_dump(*it, out, depth + 1);
    }
    out += "\n" + close_pad + "}";
  } else if (j.is_array()) {
    if (j.empty()) {
      out += "[]";
      return;
    }
    if (all_scalars(j)) {
      out += "[";
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += ", ";
        first = false;
        canonical_scalar(e, out);
      }
      out += "]";
      return;
    }
    out += "[\n";
    bool first = true;
    for (const auto& e : j) {
      if (!first) out += ",\n";
      first = false;
      out += pad;
      canonical_dump(e, out, depth + 1);
    }
    out += "\n" + close_pad + "]";
  } else {
    canonical_scalar(j, out);
  }
}

}  // namespace detail

inline std::string canonical_json(const Json& j) {
  std::string out;
  detail::canonical_dump(j, out, 0);
  out.push_back('\n');
  return out;
}

inline std::string serialize_report(const ComparisonReport& rep) {
  return canonical_json(to_json(rep));
}

inline ComparisonReport parse_report(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("report is not valid JSON: ") + e.what(), e.byte);
  }
  return report_from_json(j);
}

inline void write_report(const ComparisonReport& rep, const std::string& path) {
  const std::string text = serialize_report(rep);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw IoError("error writing '" + path + "'");
}

inline ComparisonReport read_report(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_report(text);
}

}  // namespace rdx
