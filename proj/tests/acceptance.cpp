// Acceptance gate: one pass/fail line per criterion, nonzero exit on any
// failure. Criterion 5 runs at a reduced scale by default; set
// GTAKIT_ACCEPT_FULL=1 for the full desk-scale configuration.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "gtakit/analysis.hpp"
#include "gtakit/model.hpp"
#include "gtakit/scene.hpp"
#include "gtakit/selfcheck.hpp"

using namespace gtakit;

namespace {

int g_failures = 0;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void report(int criterion, const std::string& what, bool pass, double secs,
            const std::string& detail = "") {
  std::printf("criterion %d: %-52s %s (%.1fs)%s%s\n", criterion, what.c_str(),
              pass ? "PASS" : "FAIL", secs, detail.empty() ? "" : "  ", detail.c_str());
  if (!pass) ++g_failures;
}

bool suite_passes(const std::vector<CheckResult>& results,
                  const std::vector<std::string>& prefixes, std::string* detail) {
  bool pass = true;
  double worst = 0.0;
  for (const auto& r : results) {
    const bool wanted =
        prefixes.empty() ||
        std::any_of(prefixes.begin(), prefixes.end(),
                    [&](const std::string& p) { return r.name.rfind(p, 0) == 0; });
    if (!wanted) continue;
    pass = pass && r.pass;
    worst = std::max(worst, r.max_err);
    if (!r.pass) *detail += r.name + " max_err " + std::to_string(r.max_err) + "; ";
  }
  if (detail->empty()) *detail = "max_err " + std::to_string(worst);
  return pass;
}

// --- criterion 1: representation homomorphism + orthogonality ---
void criterion_reps() {
  const auto t0 = std::chrono::steady_clock::now();
  std::string detail;
  const bool pass = suite_passes(check_reps(101), {"homomorphism/", "orthogonality/"}, &detail);
  report(1, "representation homomorphism & orthogonality", pass, seconds_since(t0), detail);
}

// --- criterion 2: definitional vs efficient attention ---
void criterion_pairwise_efficient() {
  const auto t0 = std::chrono::steady_clock::now();
  std::string detail;
  const bool pass = suite_passes(check_attn(102), {"gta/pairwise_efficient", "gta/kronecker", "gta/euclid"},
                                 &detail);
  report(2, "pairwise = efficient form (gta, kronecker, euclid)", pass, seconds_since(t0), detail);
}

// --- criterion 3: reference-frame invariance, op level and model level ---
void criterion_invariance() {
  const auto t0 = std::chrono::steady_clock::now();
  std::string detail;
  bool pass = suite_passes(check_attn(103), {"invariance/"}, &detail);

  ModelConfig mc;
  mc.token_dim = 24;
  mc.mlp_hidden = 16;
  mc.ff_hidden = 32;
  mc.n_enc_layers = 2;
  mc.n_dec_layers = 2;
  mc.variant = Variant::Gta;
  mc.resolution = 16;
  mc.seed = 103;
  NvsModel<float> model(mc);
  Intrinsics K;
  K.resolution = 16;
  const SceneSample s = make_scene(make_texture(31), 32, K);
  std::mt19937_64 rng(33);
  SceneSample shifted = s;
  const So3Rotation h = sample_rotation(rng);
  for (auto& v : shifted.views) v.rotation = compose(v.rotation, h);
  auto run = [&](const SceneSample& sc) {
    Graph<float> g;
    auto b = model.bind(g);
    return g.val(model.predict(g, b, sc)).data;
  };
  const auto a = run(s), b = run(shifted);
  double mean_abs = 0.0;
  for (size_t i = 0; i < a.size(); ++i) mean_abs += std::abs(a[i] - b[i]);
  mean_abs /= static_cast<double>(a.size());
  pass = pass && mean_abs < 1e-4;
  detail += " model mean_abs " + std::to_string(mean_abs);
  report(3, "reference-frame invariance (ops + model)", pass, seconds_since(t0), detail);
}

// --- criterion 4: gradient fidelity ---
void criterion_grads() {
  const auto t0 = std::chrono::steady_clock::now();
  std::string detail;
  const bool pass = suite_passes(check_grads(104), {}, &detail);
  report(4, "finite-difference gradient checks", pass, seconds_since(t0), detail);
}

// --- criterion 5: synthetic NVS ordering ---
struct Scale {
  int token_dim, resolution, train_scenes, test_scenes, steps, batch, eval_interval;
};

double run_variant(Variant v, std::uint64_t seed, const Scale& sc, const TrainConfig& base) {
  ModelConfig mc;
  mc.token_dim = sc.token_dim;
  mc.variant = v;
  mc.resolution = sc.resolution;
  mc.seed = seed;
  NvsModel<float> model(mc);
  TrainConfig tc = base;
  tc.seed = seed;
  return train(model, tc).final_test.psnr;
}

void criterion_ordering() {
  const auto t0 = std::chrono::steady_clock::now();
  const bool full = []() {
    const char* e = std::getenv("GTAKIT_ACCEPT_FULL");
    return e && std::string(e) == "1";
  }();
  // Full desk scale per the experiment defaults; the reduced scale keeps the
  // same shape and asserts the same ordering inequalities.
  const Scale sc = full ? Scale{126, 32, 2000, 500, 20000, 16, 1000}
                        : Scale{48, 16, 2048, 64, 4000, 8, 1000};
  const std::vector<std::uint64_t> seeds{1, 2, 3};

  const std::string train_path = "/tmp/gtakit_accept_train.gtas";
  const std::string test_path = "/tmp/gtakit_accept_test.gtas";
  Intrinsics K;
  K.resolution = sc.resolution;
  // Disjoint rotation streams over one shared sphere texture: train and test
  // scenes differ only in their camera rotations.
  generate_dataset(train_path, 901, sc.train_scenes, K, 900);
  generate_dataset(test_path, 902, sc.test_scenes, K, 900);

  TrainConfig base;
  base.train_data = train_path;
  base.test_data = test_path;
  base.steps = sc.steps;
  base.batch_size = sc.batch;
  base.eval_interval = sc.eval_interval;
  base.eval_scenes = std::min(sc.test_scenes, 64);

  bool pass = true;
  std::string detail = full ? "full scale: " : "reduced scale: ";
  for (std::uint64_t seed : seeds) {
    const double gta = run_variant(Variant::Gta, seed, sc, base);
    const double ape = run_variant(Variant::Ape, seed, sc, base);
    const double rpe = run_variant(Variant::RpeBias, seed, sc, base);
    char buf[96];
    std::snprintf(buf, sizeof(buf), "[seed %llu gta %.2f ape %.2f rpe %.2f] ",
                  static_cast<unsigned long long>(seed), gta, ape, rpe);
    detail += buf;
    pass = pass && gta >= ape + 1.0 && gta >= rpe;
  }
  std::remove(train_path.c_str());
  std::remove(test_path.c_str());
  report(5, "synthetic NVS ordering gta >= ape+1dB, gta >= rpe", pass, seconds_since(t0), detail);
}

// --- criterion 6: structured-apply complexity ---
void criterion_complexity() {
  const auto t0 = std::chrono::steady_clock::now();
  std::string detail;
  const bool pass = suite_passes(check_reps(106), {"rep_apply/"}, &detail);
  report(6, "rep_apply O(nd) madds + dense equivalence", pass, seconds_since(t0), detail);
}

// --- criterion 7: PR-AUC procedure ---
double brute_force_auc(const std::vector<double>& attn, const MaskSet& masks) {
  std::vector<double> thresholds(attn.begin(), attn.end());
  thresholds.push_back(0.0);
  thresholds.push_back(1.0);
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  double wsum = 0.0;
  for (double w : masks.weights) wsum += w;
  std::vector<double> precision, recall;
  for (double t : thresholds) {
    double p = 0.0, r = 0.0;
    bool defined = false;
    for (size_t o = 0; o < masks.masks.size(); ++o) {
      int tp = 0, npred = 0, pos = 0;
      for (size_t i = 0; i < attn.size(); ++i) {
        const bool pred = attn[i] > t;
        npred += pred;
        pos += masks.masks[o][i];
        tp += pred && masks.masks[o][i];
      }
      const double w = masks.weights[o] / wsum;
      if (npred > 0) {
        p += w * tp / npred;
        defined = true;
      }
      r += w * tp / pos;
    }
    precision.push_back(defined ? p : -1.0);
    recall.push_back(r);
  }
  for (size_t i = 0; i < precision.size(); ++i)
    if (precision[i] < 0.0) {
      size_t j = i;
      while (j < precision.size() && precision[j] < 0.0) ++j;
      const double fill = j < precision.size() ? precision[j] : 1.0;
      for (size_t k = i; k < j; ++k) precision[k] = fill;
    }
  double auc = 0.0;
  for (size_t i = 1; i < recall.size(); ++i)
    auc += 0.5 * (precision[i] + precision[i - 1]) * (recall[i] - recall[i - 1]);
  return auc;
}

void criterion_pr_auc() {
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = true;
  std::string detail;

  MaskSet hand;
  hand.n_views = 2;
  hand.tokens_per_view = 2;
  hand.masks = {{1, 1, 0, 0}};
  hand.weights = {1.0};
  const std::vector<double> hand_attn{0.4, 0.3, 0.2, 0.1};
  const double hand_auc = pr_auc(hand_attn, hand).auc;
  pass = pass && std::abs(hand_auc - brute_force_auc(hand_attn, hand)) < 1e-12;

  MaskSet perfect;
  perfect.n_views = 2;
  perfect.tokens_per_view = 4;
  perfect.masks = {{1, 0, 1, 0, 0, 0, 1, 0}};
  perfect.weights = {1.0};
  const std::vector<double> perfect_attn{0.8, 0.0, 0.9, 0.0, 0.0, 0.0, 0.7, 0.0};
  const double perfect_auc = pr_auc(perfect_attn, perfect).auc;
  pass = pass && std::abs(perfect_auc - 1.0) < 1e-12;

  MaskSet unif;
  unif.n_views = 2;
  unif.tokens_per_view = 10;
  std::vector<int> m(20, 0);
  for (int i = 0; i < 7; ++i) m[i * 2 + 1] = 1;  // coverage 7/20
  unif.masks = {m};
  unif.weights = {1.0};
  const double unif_auc = pr_auc(std::vector<double>(20, 0.4), unif).auc;
  pass = pass && std::abs(unif_auc - 7.0 / 20.0) < 0.02;

  detail = "hand " + std::to_string(hand_auc) + " perfect " + std::to_string(perfect_auc) +
           " uniform " + std::to_string(unif_auc);
  report(7, "PR-AUC vs brute force, perfect & uniform cases", pass, seconds_since(t0), detail);
}

// --- criterion 8: determinism ---
void criterion_determinism() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string a = "/tmp/gtakit_accept_det_a.gtas", b = "/tmp/gtakit_accept_det_b.gtas";
  Intrinsics K;
  K.resolution = 16;
  generate_dataset(a, 801, 4, K);
  generate_dataset(b, 801, 4, K);
  bool pass = file_checksum(a) == file_checksum(b);

  ModelConfig mc;
  mc.token_dim = 24;
  mc.mlp_hidden = 16;
  mc.ff_hidden = 32;
  mc.n_enc_layers = 2;
  mc.n_dec_layers = 2;
  mc.variant = Variant::Gta;
  mc.resolution = 16;
  mc.seed = 42;
  TrainConfig tc;
  tc.train_data = a;
  tc.test_data = b;
  tc.steps = 20;
  tc.batch_size = 2;
  tc.eval_interval = 10;
  tc.eval_scenes = 4;
  tc.seed = 5;
  NvsModel<float> m1(mc), m2(mc);
  const TrainResult r1 = train(m1, tc), r2 = train(m2, tc);
  pass = pass && r1.final_test.mse == r2.final_test.mse && r1.metrics == r2.metrics;
  std::remove(a.c_str());
  std::remove(b.c_str());
  report(8, "dataset & training determinism", pass, seconds_since(t0));
}

}  // namespace

int main() {
  criterion_reps();
  criterion_pairwise_efficient();
  criterion_invariance();
  criterion_grads();
  criterion_ordering();
  criterion_complexity();
  criterion_pr_auc();
  criterion_determinism();
  if (g_failures > 0) {
    std::printf("ACCEPTANCE FAILED: %d criterion(s)\n", g_failures);
    return 1;
  }
  std::printf("ACCEPTANCE PASSED\n");
  return 0;
}
