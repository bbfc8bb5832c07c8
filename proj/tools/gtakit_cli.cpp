#include <CLI11.hpp>
#include <Eigen/Core>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "gtakit/analysis.hpp"
#include "gtakit/model.hpp"
#include "gtakit/scene.hpp"
#include "gtakit/selfcheck.hpp"

namespace {

using namespace gtakit;

constexpr int kExitUsage = 1;
constexpr int kExitCheckFailed = 2;
constexpr int kExitIo = 3;

struct CliError : std::runtime_error {
  int code;
  CliError(int code, const std::string& msg) : std::runtime_error(msg), code(code) {}
};

// Flat `key = value` config with [section] headers; keys are resolved to
// "section.key". Unknown keys are rejected.
std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw CliError(kExitIo, "cannot open config file: " + path);
  std::map<std::string, std::string> kv;
  std::string line, section;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw CliError(kExitUsage, path + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw CliError(kExitUsage, path + ":" + std::to_string(line_no) + ": empty key");
    kv[(section.empty() ? key : section + "." + key)] = value;
  }
  return kv;
}

int to_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const int r = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw CliError(kExitUsage, "config key " + key + ": not an integer: " + v);
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double r = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw CliError(kExitUsage, "config key " + key + ": not a number: " + v);
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const std::uint64_t r = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw CliError(kExitUsage, "config key " + key + ": not an unsigned integer: " + v);
  }
}

void apply_config(const std::map<std::string, std::string>& kv, ModelConfig& mc,
                  TrainConfig& tc) {
  for (const auto& [key, value] : kv) {
    if (key == "model.token_dim") mc.token_dim = to_int(key, value);
    else if (key == "model.n_enc_layers") mc.n_enc_layers = to_int(key, value);
    else if (key == "model.n_dec_layers") mc.n_dec_layers = to_int(key, value);
    else if (key == "model.mlp_hidden") mc.mlp_hidden = to_int(key, value);
    else if (key == "model.ff_hidden") mc.ff_hidden = to_int(key, value);
    else if (key == "model.n_heads") mc.n_heads = to_int(key, value);
    else if (key == "model.resolution") mc.resolution = to_int(key, value);
    else if (key == "model.seed") mc.seed = to_u64(key, value);
    else if (key == "model.variant") {
      try {
        mc.variant = variant_from_name(value);
      } catch (const std::exception& e) {
        throw CliError(kExitUsage, std::string("config key model.variant: ") + e.what());
      }
    } else if (key == "train.lr") tc.lr = to_double(key, value);
    else if (key == "train.weight_decay") tc.weight_decay = to_double(key, value);
    else if (key == "train.batch_size") tc.batch_size = to_int(key, value);
    else if (key == "train.steps") tc.steps = to_int(key, value);
    else if (key == "train.eval_interval") tc.eval_interval = to_int(key, value);
    else if (key == "train.eval_scenes") tc.eval_scenes = to_int(key, value);
    else if (key == "train.train_data") tc.train_data = value;
    else if (key == "train.test_data") tc.test_data = value;
    else if (key == "train.seed") tc.seed = to_u64(key, value);
    else throw CliError(kExitUsage, "unknown config key: " + key);
  }
}

void print_resolved(const ModelConfig& mc, const TrainConfig& tc) {
  std::cout << "model.variant = " << variant_name(mc.variant) << "\n"
            << "model.token_dim = " << mc.token_dim << "\n"
            << "model.n_enc_layers = " << mc.n_enc_layers << "\n"
            << "model.n_dec_layers = " << mc.n_dec_layers << "\n"
            << "model.mlp_hidden = " << mc.mlp_hidden << "\n"
            << "model.ff_hidden = " << mc.ff() << "\n"
            << "model.n_heads = " << mc.n_heads << "\n"
            << "model.resolution = " << mc.resolution << "\n"
            << "model.seed = " << mc.seed << "\n"
            << "train.lr = " << tc.lr << "\n"
            << "train.weight_decay = " << tc.weight_decay << "\n"
            << "train.batch_size = " << tc.batch_size << "\n"
            << "train.steps = " << tc.steps << "\n"
            << "train.eval_interval = " << tc.eval_interval << "\n"
            << "train.eval_scenes = " << tc.eval_scenes << "\n"
            << "train.train_data = " << tc.train_data << "\n"
            << "train.test_data = " << tc.test_data << "\n"
            << "train.seed = " << tc.seed << "\n";
}

int cmd_gen_data(std::uint64_t seed, int scenes, int resolution, std::uint64_t texture_seed,
                 const std::string& out) {
  Intrinsics K;
  K.resolution = resolution;
  try {
    generate_dataset(out, seed, scenes, K, texture_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  std::cout << "wrote " << scenes << " scenes to " << out << "\n"
            << "checksum " << std::hex << file_checksum(out) << std::dec << "\n";
  return 0;
}

int cmd_check(const std::string& suite, std::uint64_t seed) {
  std::vector<CheckResult> results;
  try {
    results = run_checks(suite, seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  bool all_pass = true;
  for (const auto& r : results) {
    std::printf("%-40s max_err %.3e  tol %.3e  %s\n", r.name.c_str(), r.max_err, r.tol,
                r.pass ? "PASS" : "FAIL");
    all_pass = all_pass && r.pass;
  }
  std::cout << (all_pass ? "all checks passed" : "CHECKS FAILED") << "\n";
  return all_pass ? 0 : kExitCheckFailed;
}

int cmd_inspect_reps(const std::string& spec_name, std::uint64_t seed, bool identity,
                     const std::string& out) {
  RepSpec spec;
  if (spec_name == "msn-hard") spec = RepSpec::msn_hard();
  else if (spec_name.rfind("so3:", 0) == 0)
    spec = RepSpec::so3_blocks(to_int("--spec", spec_name.substr(4)));
  else
    throw CliError(kExitUsage, "unknown rep spec: " + spec_name + " (use msn-hard or so3:<dim>)");

  std::mt19937_64 rng(seed);
  ProductElement g;
  if (!identity) g = sample_product(rng);
  const Representation rep = build_rep(spec, g);
  const Eigen::MatrixXd dense = rep.dense();

  std::ofstream os(out);
  if (!os) throw CliError(kExitIo, "cannot open output file: " + out);
  auto kind_name = [](RepBlockKind k) {
    switch (k) {
      case RepBlockKind::Cam: return "cam";
      case RepBlockKind::Rot: return "rot";
      case RepBlockKind::So2H: return "so2_h";
      case RepBlockKind::So2W: return "so2_w";
      default: return "trivial";
    }
  };
  os << "# dim " << spec.total_dim << "\n";
  for (size_t b = 0; b < spec.blocks.size(); ++b) {
    const auto& blk = spec.blocks[b];
    os << "# block " << b << " kind " << kind_name(blk.kind) << " offset " << rep.offsets[b]
       << " dim " << blk.dim;
    if (blk.kind == RepBlockKind::Rot) os << " degree " << blk.degree;
    if (blk.kind == RepBlockKind::So2H || blk.kind == RepBlockKind::So2W)
      os << " freq " << blk.frequency;
    os << "\n";
  }
  for (int i = 0; i < dense.rows(); ++i) {
    for (int j = 0; j < dense.cols(); ++j) os << (j ? "," : "") << dense(i, j);
    os << "\n";
  }
  if (!os) throw CliError(kExitIo, "write failed: " + out);
  std::cout << "wrote " << spec.total_dim << "x" << spec.total_dim << " matrix to " << out << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& variant,
              const std::vector<std::string>& overrides, const std::string& out,
              const std::string& metrics, bool verbose) {
  ModelConfig mc;
  TrainConfig tc;
  if (!config_path.empty()) apply_config(parse_config_file(config_path), mc, tc);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw CliError(kExitUsage, "--set expects key=value: " + kv);
    apply_config({{kv.substr(0, eq), kv.substr(eq + 1)}}, mc, tc);
  }
  if (!variant.empty()) mc.variant = variant_from_name(variant);
  tc.checkpoint = out;
  if (tc.train_data.empty() || tc.test_data.empty())
    throw CliError(kExitUsage, "train.train_data and train.test_data must be set");
  print_resolved(mc, tc);

  try {
    NvsModel<float> model(mc);
    const TrainResult r = train(model, tc, metrics, verbose);
    std::cout << "final test mse " << r.final_test.mse << " psnr " << r.final_test.psnr << "\n";
  } catch (const std::invalid_argument& e) {
    throw CliError(kExitUsage, e.what());
  } catch (const std::exception& e) {
    throw CliError(kExitIo, e.what());
  }
  return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& data, int max_scenes,
             const std::string& render_dir, const std::string& attn_csv) {
  NvsModel<float> model{peek_checkpoint_config(ckpt)};
  load_checkpoint(ckpt, model, nullptr);
  auto scenes = read_dataset(data);
  if (max_scenes > 0 && static_cast<int>(scenes.size()) > max_scenes) scenes.resize(max_scenes);
  if (scenes.empty()) throw CliError(kExitIo, "empty dataset: " + data);

  const Metrics m = evaluate(model, scenes);
  std::cout << "scenes " << scenes.size() << " mse " << m.mse << " psnr " << m.psnr << "\n";

  if (!render_dir.empty()) {
    const int res = model.config().resolution;
    for (size_t i = 0; i < scenes.size(); ++i) {
      Graph<float> g;
      auto b = model.bind(g);
      const int pred = model.predict(g, b, scenes[i]);
      const std::string base = render_dir + "/scene" + std::to_string(i);
      write_ppm(base + "_pred.ppm", g.val(pred).data.data(), res, res);
      write_ppm(base + "_gt.ppm", scenes[i].target().image.data(), res, res);
    }
    std::cout << "rendered " << scenes.size() << " scene pairs to " << render_dir << "\n";
  }
  if (!attn_csv.empty()) {
    Graph<float> g;
    auto b = model.bind(g);
    AttnRecord rec;
    model.predict(g, b, scenes[0], &rec);
    write_attn_record_csv(attn_csv, rec);
    std::cout << "wrote attention record to " << attn_csv << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* t = std::getenv("GTAKIT_THREADS")) {
    const int n = std::atoi(t);
    if (n > 0) Eigen::setNbThreads(n);
  }

  CLI::App app{"geometric transform attention toolkit"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic NVS dataset");
  std::uint64_t gen_seed = 0, gen_tex_seed = 0;
  int gen_scenes = 100, gen_res = 32;
  std::string gen_out;
  gen->add_option("--seed", gen_seed, "base RNG seed");
  gen->add_option("--texture-seed", gen_tex_seed,
                  "texture seed (0: derive from --seed); lets splits share one texture");
  gen->add_option("--scenes", gen_scenes, "number of scenes");
  gen->add_option("--resolution", gen_res, "image resolution");
  gen->add_option("--out", gen_out, "output dataset path")->required();

  auto* tr = app.add_subcommand("train", "train an NVS model");
  std::string tr_config, tr_variant, tr_out, tr_metrics;
  std::vector<std::string> tr_set;
  bool tr_verbose = false;
  tr->add_option("--config", tr_config, "key = value config file");
  tr->add_option("--set", tr_set, "config override, key=value (repeatable)");
  tr->add_option("--variant", tr_variant, "attention variant")
      ->check(CLI::IsMember({"vanilla", "ape", "rpe", "gta", "gta-euclid", "gta-kron"}));
  tr->add_option("--out", tr_out, "checkpoint output path")->required();
  tr->add_option("--metrics", tr_metrics, "metrics CSV output path");
  tr->add_flag("--verbose", tr_verbose, "log eval metrics to stderr");

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string ev_ckpt, ev_data, ev_render, ev_attn;
  int ev_scenes = 0;
  ev->add_option("--ckpt", ev_ckpt, "checkpoint path")->required();
  ev->add_option("--data", ev_data, "dataset path")->required();
  ev->add_option("--scenes", ev_scenes, "max scenes to evaluate (0 = all)");
  ev->add_option("--render", ev_render, "directory for prediction/ground-truth PPM pairs");
  ev->add_option("--attn", ev_attn, "CSV path for the first scene's attention record");

  auto* ck = app.add_subcommand("check", "run the property-check suites");
  std::string ck_suite = "all";
  std::uint64_t ck_seed = 7;
  ck->add_option("--suite", ck_suite, "groups|reps|attn|grads|all")
      ->check(CLI::IsMember({"groups", "reps", "attn", "grads", "all"}));
  ck->add_option("--seed", ck_seed, "RNG seed");

  auto* ir = app.add_subcommand("inspect-reps", "dump a materialized representation as CSV");
  std::string ir_spec = "msn-hard", ir_out;
  std::uint64_t ir_seed = 0;
  bool ir_identity = false;
  ir->add_option("--spec", ir_spec, "msn-hard or so3:<dim>");
  ir->add_option("--seed", ir_seed, "RNG seed for the group element");
  ir->add_flag("--identity", ir_identity, "use the identity element");
  ir->add_option("--out", ir_out, "output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(gen_seed, gen_scenes, gen_res, gen_tex_seed, gen_out);
    if (tr->parsed()) return cmd_train(tr_config, tr_variant, tr_set, tr_out, tr_metrics, tr_verbose);
    if (ev->parsed()) return cmd_eval(ev_ckpt, ev_data, ev_scenes, ev_render, ev_attn);
    if (ck->parsed()) return cmd_check(ck_suite, ck_seed);
    if (ir->parsed()) return cmd_inspect_reps(ir_spec, ir_seed, ir_identity, ir_out);
  } catch (const CliError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return 0;
}
