// rdx command-line front end.

#include <rdx/rdx.hpp>

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <cstdio>
#include <iostream>

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw rdx::IoError("sha256 failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return "sha256:" + hex;
}

void digest_file(std::map<std::string, std::string>& out, const std::string& key,
                 const std::optional<std::string>& path) {
  if (path) out[key] = sha256_hex(rdx::detail::read_file(*path));
}

std::optional<std::string> opt_path(const std::string& s) {
  return s.empty() ? std::nullopt : std::optional<std::string>(s);
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    rdx::detail::write_file(path, text);
  }
}

struct Inputs {
  std::string repr_a, repr_b, ids_a, ids_b, judge, judge_ids;

  void add_to(CLI::App* cmd, bool with_judge) {
    cmd->add_option("--repr-a", repr_a, "representation A (.npy, n x d_A)")->required();
    cmd->add_option("--repr-b", repr_b, "representation B (.npy, n x d_B)")->required();
    cmd->add_option("--ids-a", ids_a, "newline-delimited item ids for A");
    cmd->add_option("--ids-b", ids_b, "newline-delimited item ids for B");
    if (with_judge) {
      cmd->add_option("--judge", judge, "judge embeddings (.npy) for clarity/polysemanticity");
      cmd->add_option("--judge-ids", judge_ids, "item ids for the judge embeddings");
    }
  }

  rdx::EmbeddingMatrix a() const { return rdx::read_embeddings(repr_a, "A", opt_path(ids_a)); }
  rdx::EmbeddingMatrix b() const { return rdx::read_embeddings(repr_b, "B", opt_path(ids_b)); }

  std::optional<rdx::JudgeEmbeddings> load_judge() const {
    if (judge.empty()) return std::nullopt;
    auto emb = rdx::read_embeddings(judge, "judge", opt_path(judge_ids));
    return rdx::JudgeEmbeddings{std::move(emb.items), std::move(emb.data)};
  }

  std::map<std::string, std::string> digests() const {
    std::map<std::string, std::string> out;
    digest_file(out, "repr_a", repr_a);
    digest_file(out, "repr_b", repr_b);
    digest_file(out, "ids_a", opt_path(ids_a));
    digest_file(out, "ids_b", opt_path(ids_b));
    digest_file(out, "judge", opt_path(judge));
    digest_file(out, "judge_ids", opt_path(judge_ids));
    return out;
  }
};

struct CommonFlags {
  std::string align = "none";
  std::vector<std::string> bsr_variants = {"neighborhood", "maxnorm"};

  void add_to(CLI::App* cmd, rdx::RunConfig& cfg) {
    cmd->add_option("--align", align, "learn a linear map before comparing")
        ->check(CLI::IsMember({"none", "a2b", "b2a"}))
        ->capture_default_str();
    cmd->add_option("--align-steps", cfg.align_steps)->check(CLI::NonNegativeNumber)->capture_default_str();
    cmd->add_option("--align-lr", cfg.align_lr)->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--num-explanations,-m", cfg.m, "explanations per direction")
        ->check(CLI::Range(1, 1 << 20))
        ->capture_default_str();
    cmd->add_option("--grid-size", cfg.grid_size, "items per explanation grid (>= 2)")
        ->check(CLI::Range(2, 1 << 20))
        ->capture_default_str();
    cmd->add_option("--seed", cfg.seed)->capture_default_str();
    cmd->add_option("--bsr-variants", bsr_variants, "extra BSR distance kinds")
        ->check(CLI::IsMember({"neighborhood", "maxnorm", "localscale"}))
        ->capture_default_str();
    cmd->add_flag("--allow-large", cfg.allow_large, "lift the 20000-item memory guard");
  }

  void apply(rdx::RunConfig& cfg) const {
    cfg.align = rdx::align_mode_from_string(align);
    cfg.bsr_variants.clear();
    for (const auto& v : bsr_variants) cfg.bsr_variants.push_back(rdx::distance_kind_from_string(v));
  }
};

int run(int argc, char** argv) {
  CLI::App app{"Representational difference explanations: contrast two embedding matrices"};
  app.set_version_flag("--version", rdx::kToolVersion);
  app.require_subcommand(1);

  // compare
  rdx::RunConfig compare_cfg;
  Inputs compare_in;
  CommonFlags compare_flags;
  std::string compare_out, distance = "neighborhood", diff = "tanh", sampler = "spectral";
  auto* compare = app.add_subcommand("compare", "full two-direction comparison");
  compare_in.add_to(compare, true);
  compare_flags.add_to(compare, compare_cfg);
  compare->add_option("--distance", distance)
      ->check(CLI::IsMember({"neighborhood", "maxnorm", "localscale"}))
      ->capture_default_str();
  compare->add_option("--diff", diff)->check(CLI::IsMember({"tanh", "sub"}))->capture_default_str();
  compare->add_option("--gamma", compare_cfg.gamma)->check(CLI::PositiveNumber)->capture_default_str();
  compare->add_option("--beta", compare_cfg.beta)->check(CLI::PositiveNumber)->capture_default_str();
  compare->add_option("--sampler", sampler)
      ->check(CLI::IsMember({"spectral", "pagerank"}))
      ->capture_default_str();
  compare->add_option("--out", compare_out, "report path")->required();

  // baseline
  rdx::RunConfig baseline_cfg;
  Inputs baseline_in;
  CommonFlags baseline_flags;
  std::string baseline_out, method;
  auto* baseline = app.add_subcommand("baseline", "baseline explanations scored with BSR");
  baseline->add_option("--method", method)->check(CLI::IsMember({"kmeans", "pca", "nmf"}))->required();
  baseline_in.add_to(baseline, true);
  baseline_flags.add_to(baseline, baseline_cfg);
  baseline->add_option("--nmf-iters", baseline_cfg.nmf_iters)->check(CLI::PositiveNumber)->capture_default_str();
  baseline->add_option("--out", baseline_out, "report path")->required();

  // eval
  Inputs eval_in;
  std::string eval_report, eval_out;
  auto* eval = app.add_subcommand("eval", "recompute metrics for the grids in a report");
  eval->add_option("--report", eval_report)->required();
  eval_in.add_to(eval, true);
  eval->add_option("--out", eval_out, "updated report path (default: stdout)");

  // consistency
  std::vector<std::string> reports;
  std::string consistency_out;
  auto* cons = app.add_subcommand("consistency", "cluster disagreement between two runs");
  cons->add_option("--reports", reports)->expected(2)->required();
  cons->add_option("--out", consistency_out, "result path (default: stdout)");

  // synth
  std::string spec_path, out_a, out_b, ids_out_a, ids_out_b, truth_out, dtype = "f8";
  auto* synth = app.add_subcommand("synth", "generate a planted-difference fixture");
  synth->add_option("--spec", spec_path, "fixture spec (JSON)")->required();
  synth->add_option("--out-a", out_a)->required();
  synth->add_option("--out-b", out_b)->required();
  synth->add_option("--ids-a", ids_out_a, "also write an id sidecar for A");
  synth->add_option("--ids-b", ids_out_b, "also write an id sidecar for B");
  synth->add_option("--truth", truth_out, "write cluster labels and planted flags (JSON)");
  synth->add_option("--dtype", dtype)->check(CLI::IsMember({"f4", "f8"}))->capture_default_str();

  // align
  Inputs align_in;
  rdx::AlignmentOptions align_opts;
  std::string align_out, align_trace;
  auto* align = app.add_subcommand("align", "fit a linear map M so that A M matches B under CKA");
  align_in.add_to(align, false);
  align->add_option("--steps", align_opts.steps)->check(CLI::NonNegativeNumber)->capture_default_str();
  align->add_option("--lr", align_opts.lr)->check(CLI::PositiveNumber)->capture_default_str();
  align->add_option("--train-frac", align_opts.train_frac)->capture_default_str();
  align->add_option("--seed", align_opts.seed)->capture_default_str();
  align->add_option("--out", align_out, "M as .npy")->required();
  align->add_option("--trace", align_trace, "training trace (JSON)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::cerr << "rdx: error[usage]: " << msg << "\n";
    return kExitUsage;
  }

  if (*compare) {
    compare_flags.apply(compare_cfg);
    compare_cfg.distance = rdx::distance_kind_from_string(distance);
    compare_cfg.diff = rdx::diff_kind_from_string(diff);
    compare_cfg.sampler = rdx::sampler_from_string(sampler);
    compare_cfg.judge_path = opt_path(compare_in.judge);
    compare_cfg.validate();
    const auto judge = compare_in.load_judge();
    const auto rep = rdx::run_compare(compare_in.a(), compare_in.b(), compare_cfg,
                                      judge ? &*judge : nullptr, compare_in.digests());
    rdx::write_report(rep, compare_out);
  } else if (*baseline) {
    baseline_flags.apply(baseline_cfg);
    baseline_cfg.method = method;
    baseline_cfg.judge_path = opt_path(baseline_in.judge);
    baseline_cfg.validate();
    const auto judge = baseline_in.load_judge();
    const auto rep = rdx::run_compare(baseline_in.a(), baseline_in.b(), baseline_cfg,
                                      judge ? &*judge : nullptr, baseline_in.digests());
    rdx::write_report(rep, baseline_out);
  } else if (*eval) {
    const auto rep = rdx::read_report(eval_report);
    const auto judge = eval_in.load_judge();
    auto out = rdx::evaluate_report(rep, eval_in.a(), eval_in.b(), judge ? &*judge : nullptr);
    emit(rdx::serialize_report(out), eval_out);
  } else if (*cons) {
    const auto r1 = rdx::read_report(reports[0]);
    const auto r2 = rdx::read_report(reports[1]);
    nlohmann::json dirs = nlohmann::json::array();
    for (const auto& c : rdx::consistency(r1, r2)) {
      dirs.push_back({{"source", c.source},
                      {"reference", c.reference},
                      {"shared_items", c.shared_items},
                      {"disagreement", c.disagreement}});
    }
    emit(rdx::canonical_json({{"directions", dirs}}), consistency_out);
  } else if (*synth) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(rdx::detail::read_file(spec_path));
    } catch (const nlohmann::json::parse_error& e) {
      throw rdx::FormatError(spec_path + ": " + e.what(), e.byte);
    }
    rdx::PlantedSpec spec;
    try {
      spec = j.get<rdx::PlantedSpec>();
    } catch (const nlohmann::json::exception& e) {
      throw rdx::SchemaError("spec", spec_path + ": " + e.what());
    }
    const auto pair = rdx::generate_pair(spec);
    const auto dt = dtype == "f4" ? rdx::NpyDtype::f4 : rdx::NpyDtype::f8;
    rdx::write_embeddings(out_a, pair.a, dt, opt_path(ids_out_a));
    rdx::write_embeddings(out_b, pair.b, dt, opt_path(ids_out_b));
    if (!truth_out.empty()) {
      std::vector<int> planted(pair.truth.planted.begin(), pair.truth.planted.end());
      rdx::detail::write_file(
          truth_out, rdx::canonical_json({{"items", pair.a.items},
                                          {"labels", pair.truth.labels},
                                          {"planted", planted},
                                          {"spec", spec}}));
    }
  } else if (*align) {
    const auto map = rdx::fit_alignment(align_in.a(), align_in.b(), align_opts);
    rdx::write_npy(align_out, map.matrix);
    if (!align_trace.empty()) {
      nlohmann::json trace = nlohmann::json::array();
      for (const auto& s : map.train_trace) {
        trace.push_back({{"step", s.step}, {"train_loss", s.train_loss}, {"val_cka", s.val_cka}});
      }
      rdx::detail::write_file(align_trace,
                              rdx::canonical_json({{"best_step", map.best_step},
                                                   {"best_val_cka", map.best_val_cka},
                                                   {"split_seed", map.split_seed},
                                                   {"trace", trace}}));
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const rdx::Error& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::cerr << "rdx: error[" << e.kind() << "]: " << msg << "\n";
  } catch (const std::exception& e) {
    std::cerr << "rdx: error[internal]: " << e.what() << "\n";
  }
  return kExitRuntime;
}
