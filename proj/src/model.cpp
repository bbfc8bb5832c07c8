#include "gtakit/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace gtakit {

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::Vanilla: return "vanilla";
    case Variant::Ape: return "ape";
    case Variant::RpeBias: return "rpe";
    case Variant::Gta: return "gta";
    case Variant::GtaEuclid: return "gta-euclid";
    case Variant::GtaKron: return "gta-kron";
  }
  throw std::logic_error("variant_name: unreachable");
}

Variant variant_from_name(const std::string& name) {
  if (name == "vanilla") return Variant::Vanilla;
  if (name == "ape") return Variant::Ape;
  if (name == "rpe") return Variant::RpeBias;
  if (name == "gta") return Variant::Gta;
  if (name == "gta-euclid") return Variant::GtaEuclid;
  if (name == "gta-kron") return Variant::GtaKron;
  throw std::invalid_argument("unknown variant: " + name);
}

Representation so3_kron_rep(const So3Rotation& r, int head_dim) {
  Eigen::MatrixXd kron(9, 9);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) kron.block(3 * i, 3 * j, 3, 3) = r.r(i, j) * r.r;
  Representation rep;
  int offset = 0;
  // Orthogonal 9x9 blocks; the Rot kind routes inverse through transpose.
  // Never passed through build_rep, so the degree is irrelevant.
  while (offset + 9 <= head_dim) {
    rep.spec.blocks.push_back(RepBlockSpec{RepBlockKind::Rot, 0, 0.0, 9});
    rep.blocks.push_back(kron);
    rep.offsets.push_back(offset);
    offset += 9;
  }
  if (offset < head_dim) {
    rep.spec.blocks.push_back(RepBlockSpec::trivial(head_dim - offset));
    rep.blocks.push_back(Eigen::MatrixXd::Identity(head_dim - offset, head_dim - offset));
    rep.offsets.push_back(offset);
  }
  rep.spec.total_dim = head_dim;
  return rep;
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string config_string(const ModelConfig& c) {
  std::ostringstream os;
  os << c.token_dim << '|' << c.n_enc_layers << '|' << c.n_dec_layers << '|' << c.mlp_hidden
     << '|' << c.ff_hidden << '|' << variant_name(c.variant) << '|' << c.n_heads << '|' << c.seed
     << '|' << c.resolution;
  return os.str();
}

std::vector<float> flat_rotation(const So3Rotation& r) {
  std::vector<float> v(9);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) v[i * 3 + j] = static_cast<float>(r.r(i, j));
  return v;
}

}  // namespace

std::uint64_t config_hash(const ModelConfig& config) { return fnv1a(config_string(config)); }

template <typename T>
int NvsModel<T>::add_param(const std::string& name, Tensor<T> t) {
  index_[name] = static_cast<int>(params_.size());
  names_.push_back(name);
  params_.push_back(std::move(t));
  return static_cast<int>(params_.size()) - 1;
}

template <typename T>
NvsModel<T>::NvsModel(const ModelConfig& config) : config_(config) {
  const int d = config.token_dim;
  if (d < 1) throw std::invalid_argument("NvsModel: token_dim must be positive");
  if (d % config.n_heads != 0)
    throw std::invalid_argument("NvsModel: token_dim not divisible by n_heads");
  const int hd = d / config.n_heads;
  if ((config.variant == Variant::Gta || config.variant == Variant::GtaEuclid) && hd % 3 != 0)
    throw std::invalid_argument("NvsModel: head dim must be divisible by 3 for the SO(3) rep");
  if (config.variant == Variant::GtaKron && hd % 9 != 0)
    throw std::invalid_argument("NvsModel: head dim must be divisible by 9 for the Kronecker rep");

  std::mt19937_64 rng(config.seed ^ 0x1717a2a5eedull);
  const int px = config.pixels(), mh = config.mlp_hidden, ff = config.ff();

  auto xavier = [&](int in, int out) { return xavier_uniform<T>(in, out, rng); };
  auto zeros = [&](int k) { return Tensor<T>({1, k}); };
  auto ones = [&](int k) {
    Tensor<T> t({1, k});
    std::fill(t.data.begin(), t.data.end(), T(1));
    return t;
  };
  auto vec_identity = [&]() {
    Tensor<T> t({1, 9});
    t.data[0] = t.data[4] = t.data[8] = T(1);
    return t;
  };

  add_param("enc_in.w1", xavier(px, mh));
  add_param("enc_in.b1", zeros(mh));
  add_param("enc_in.w2", xavier(mh, d));
  add_param("enc_in.b2", zeros(d));

  auto add_block = [&](const std::string& prefix) {
    add_param(prefix + ".ln1.g", ones(d));
    add_param(prefix + ".ln1.b", zeros(d));
    add_param(prefix + ".wq", xavier(d, d));
    add_param(prefix + ".wk", xavier(d, d));
    add_param(prefix + ".wv", xavier(d, d));
    add_param(prefix + ".wo", xavier(d, d));
    if (config.variant == Variant::Ape) add_param(prefix + ".wpe", xavier(9, d));
    if (config.variant == Variant::RpeBias) {
      for (int h = 0; h < config.n_heads; ++h) {
        add_param(prefix + ".bq" + std::to_string(h), vec_identity());
        add_param(prefix + ".bk" + std::to_string(h), vec_identity());
        add_param(prefix + ".bv" + std::to_string(h), vec_identity());
      }
    }
    add_param(prefix + ".ln2.g", ones(d));
    add_param(prefix + ".ln2.b", zeros(d));
    add_param(prefix + ".ff.w1", xavier(d, ff));
    add_param(prefix + ".ff.b1", zeros(ff));
    add_param(prefix + ".ff.w2", xavier(ff, d));
    add_param(prefix + ".ff.b2", zeros(d));
  };

  for (int l = 0; l < config.n_enc_layers; ++l) add_block("e" + std::to_string(l));
  add_param("enc_final.g", ones(d));
  add_param("enc_final.b", zeros(d));
  for (int l = 0; l < config.n_dec_layers; ++l) add_block("d" + std::to_string(l));
  add_param("dec_final.g", ones(d));
  add_param("dec_final.b", zeros(d));

  add_param("dec.query", xavier(1, d));
  add_param("out.w1", xavier(d, mh));
  add_param("out.b1", zeros(mh));
  add_param("out.w2", xavier(mh, px));
  add_param("out.b2", zeros(px));
}

template <typename T>
std::vector<Tensor<T>*> NvsModel<T>::parameters() {
  std::vector<Tensor<T>*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(&p);
  return out;
}

template <typename T>
typename NvsModel<T>::Bound NvsModel<T>::bind(Graph<T>& g) {
  Bound b;
  b.ids.reserve(params_.size());
  for (auto& p : params_) b.ids.push_back(g.param(&p));
  return b;
}

template <typename T>
int NvsModel<T>::predict(Graph<T>& g, const Bound& b, const SceneSample& scene,
                         AttnRecord* record) const {
  const ModelConfig& c = config_;
  if (static_cast<int>(scene.views.size()) != SceneSample::kContextViews + 1 ||
      scene.resolution != c.resolution)
    throw std::invalid_argument("predict: scene does not match model configuration");
  const int n_ctx = SceneSample::kContextViews;
  const int d = c.token_dim, hd = d / c.n_heads, px = c.pixels();

  auto pid = [&](const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::logic_error("predict: missing parameter " + name);
    return b.ids[it->second];
  };

  // Context images -> tokens.
  Tensor<T> images({n_ctx, px});
  for (int i = 0; i < n_ctx; ++i)
    for (int j = 0; j < px; ++j)
      images.data[static_cast<size_t>(i) * px + j] = static_cast<T>(scene.views[i].image[j]);
  int x = g.leaf(std::move(images));
  x = g.gelu(g.add_rowvec(g.matmul(x, pid("enc_in.w1")), pid("enc_in.b1")));
  x = g.add_rowvec(g.matmul(x, pid("enc_in.w2")), pid("enc_in.b2"));

  // Per-token geometry, shared across layers and heads.
  RepListPtr enc_reps, dec_reps;
  std::vector<So3Rotation> enc_rots, dec_rots;
  for (int i = 0; i < n_ctx; ++i) enc_rots.push_back(scene.views[i].rotation);
  dec_rots.push_back(scene.target().rotation);
  if (c.variant == Variant::Gta || c.variant == Variant::GtaEuclid ||
      c.variant == Variant::GtaKron) {
    auto build = [&](const std::vector<So3Rotation>& rots) {
      auto reps = std::make_shared<std::vector<Representation>>();
      const RepSpec spec = RepSpec::so3_blocks(hd);
      for (const auto& r : rots) {
        if (c.variant == Variant::GtaKron) reps->push_back(so3_kron_rep(r, hd));
        else reps->push_back(build_rep(spec, ProductElement{Se3Pose(r, Eigen::Vector3d::Zero()),
                                                            So2Angle(0), So2Angle(0)}));
      }
      return RepListPtr(reps);
    };
    enc_reps = build(enc_rots);
    dec_reps = build(dec_rots);
  }
  int enc_flat = -1, dec_flat = -1;
  if (c.variant == Variant::Ape) {
    Tensor<T> ef({n_ctx, 9}), df({1, 9});
    for (int i = 0; i < n_ctx; ++i) {
      const auto f = flat_rotation(enc_rots[i]);
      for (int j = 0; j < 9; ++j) ef.data[static_cast<size_t>(i) * 9 + j] = static_cast<T>(f[j]);
    }
    const auto f = flat_rotation(dec_rots[0]);
    for (int j = 0; j < 9; ++j) df.data[j] = static_cast<T>(f[j]);
    enc_flat = g.leaf(std::move(ef));
    dec_flat = g.leaf(std::move(df));
  }

  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
  const double rpe_scale = 1.0 / std::sqrt(static_cast<double>(hd + 9));

  // One attention sublayer. x_q carries the residual stream of the query
  // tokens; key/value tokens come from `kv` (equal to x_q for self-attention).
  auto attention_block = [&](int x_q, int kv, const std::string& prefix, int layer_tag,
                             const std::vector<So3Rotation>& rot_q,
                             const std::vector<So3Rotation>& rot_kv, RepListPtr reps_q,
                             RepListPtr reps_kv, int flat_q) {
    int h = g.layer_norm(x_q, pid(prefix + ".ln1.g"), pid(prefix + ".ln1.b"));
    if (c.variant == Variant::Ape) h = g.add(h, g.matmul(flat_q, pid(prefix + ".wpe")));
    const int q = g.matmul(h, pid(prefix + ".wq"));
    const int k = g.matmul(kv, pid(prefix + ".wk"));
    const int v = g.matmul(kv, pid(prefix + ".wv"));
    auto head_op = [&](Graph<T>& gg, int hq, int hk, int hv, int head) {
      AttnSink<T> sink;
      AttnSink<T>* sp = record ? &sink : nullptr;
      int o = -1;
      switch (c.variant) {
        case Variant::Vanilla:
        case Variant::Ape:
          o = vanilla_attention(gg, hq, hk, hv, scale, sp);
          break;
        case Variant::RpeBias: {
          const std::string hs = std::to_string(head);
          o = rpe_bias_attention(gg, hq, hk, hv, pid(prefix + ".bq" + hs),
                                 pid(prefix + ".bk" + hs), pid(prefix + ".bv" + hs), rot_q,
                                 rot_kv, rpe_scale, sp);
          break;
        }
        case Variant::Gta:
        case Variant::GtaKron:
          o = gta_attention(gg, hq, hk, hv, reps_q, reps_kv, GtaOptions{scale, true, nullptr}, sp);
          break;
        case Variant::GtaEuclid:
          o = gta_euclid_attention(gg, hq, hk, hv, reps_q, reps_kv,
                                   GtaOptions{scale, true, nullptr}, sp);
          break;
      }
      if (record)
        record->entries.push_back({layer_tag, head, sink.captured.at(0).template cast<double>()});
      return o;
    };
    const int attn = multi_head<T>(g, q, k, v, c.n_heads, pid(prefix + ".wo"), head_op);
    int out = g.add(x_q, attn);
    const int h2 = g.layer_norm(out, pid(prefix + ".ln2.g"), pid(prefix + ".ln2.b"));
    int f = g.gelu(g.add_rowvec(g.matmul(h2, pid(prefix + ".ff.w1")), pid(prefix + ".ff.b1")));
    f = g.add_rowvec(g.matmul(f, pid(prefix + ".ff.w2")), pid(prefix + ".ff.b2"));
    return g.add(out, f);
  };

  for (int l = 0; l < c.n_enc_layers; ++l)
    x = attention_block(x, x, "e" + std::to_string(l), l, enc_rots, enc_rots, enc_reps, enc_reps,
                        enc_flat);
  const int enc_out = g.layer_norm(x, pid("enc_final.g"), pid("enc_final.b"));

  int tq = pid("dec.query");
  for (int l = 0; l < c.n_dec_layers; ++l)
    tq = attention_block(tq, enc_out, "d" + std::to_string(l), c.n_enc_layers + l, dec_rots,
                         enc_rots, dec_reps, enc_reps, dec_flat);
  const int dec_out = g.layer_norm(tq, pid("dec_final.g"), pid("dec_final.b"));

  int y = g.gelu(g.add_rowvec(g.matmul(dec_out, pid("out.w1")), pid("out.b1")));
  y = g.add_rowvec(g.matmul(y, pid("out.w2")), pid("out.b2"));

  if (record && record->token_map.empty())
    for (int i = 0; i < n_ctx; ++i) record->token_map.emplace_back(i, 0);
  return y;
}

template <typename T>
int NvsModel<T>::loss(Graph<T>& g, const Bound& b, const SceneSample& scene) const {
  const int pred = predict(g, b, scene);
  Tensor<T> target({1, config_.pixels()});
  for (int j = 0; j < config_.pixels(); ++j)
    target.data[j] = static_cast<T>(scene.target().image[j]);
  return g.mse(pred, g.leaf(std::move(target)));
}

template <typename T>
void NvsModel<T>::accumulate_grads(Graph<T>& g, const Bound& b,
                                   std::vector<Tensor<T>>& grads) const {
  if (grads.empty())
    for (const auto& p : params_) grads.emplace_back(p.shape);
  for (size_t i = 0; i < params_.size(); ++i) {
    const auto& src = g.grad(b.ids[i]).data;
    for (size_t j = 0; j < src.size(); ++j) grads[i].data[j] += src[j];
  }
}

template class NvsModel<float>;
template class NvsModel<double>;

double psnr_of_mse(double mse) {
  if (mse <= 0.0) return 99.0;
  return std::min(99.0, -10.0 * std::log10(mse));
}

Metrics evaluate(NvsModel<float>& model, const std::vector<SceneSample>& scenes) {
  if (scenes.empty()) throw std::invalid_argument("evaluate: empty scene list");
  double total = 0.0;
  for (const auto& scene : scenes) {
    Graph<float> g;
    auto b = model.bind(g);
    const int l = model.loss(g, b, scene);
    total += static_cast<double>(g.val(l).data[0]);
  }
  Metrics m;
  m.mse = total / static_cast<double>(scenes.size());
  m.psnr = psnr_of_mse(m.mse);
  return m;
}

TrainResult train(NvsModel<float>& model, const TrainConfig& config,
                  const std::string& metrics_csv, bool verbose) {
  const auto train_scenes = read_dataset(config.train_data);
  const auto test_scenes = read_dataset(config.test_data);
  if (train_scenes.empty() || test_scenes.empty())
    throw std::runtime_error("train: empty dataset");

  const int n_eval_train =
      std::min<int>(config.eval_scenes, static_cast<int>(train_scenes.size()));
  const int n_eval_test = std::min<int>(config.eval_scenes, static_cast<int>(test_scenes.size()));
  const std::vector<SceneSample> eval_train(train_scenes.begin(),
                                            train_scenes.begin() + n_eval_train);
  const std::vector<SceneSample> eval_test(test_scenes.begin(),
                                           test_scenes.begin() + n_eval_test);

  AdamWState<float> opt;
  opt.lr = config.lr;
  opt.weight_decay = config.weight_decay;
  auto params = model.parameters();

  std::ofstream csv;
  if (!metrics_csv.empty()) {
    csv.open(metrics_csv);
    if (!csv) throw std::runtime_error("train: cannot open metrics file " + metrics_csv);
    csv << "step,split,mse,psnr\n";
  }

  TrainResult result;
  auto log_eval = [&](int step) {
    const Metrics mt = evaluate(model, eval_train);
    const Metrics me = evaluate(model, eval_test);
    result.metrics.emplace_back(step, "train", mt.mse, mt.psnr);
    result.metrics.emplace_back(step, "test", me.mse, me.psnr);
    if (csv.is_open()) {
      csv << step << ",train," << mt.mse << ',' << mt.psnr << '\n';
      csv << step << ",test," << me.mse << ',' << me.psnr << '\n';
      csv.flush();
    }
    if (verbose)
      std::cerr << "step " << step << " train mse " << mt.mse << " test mse " << me.mse
                << " test psnr " << me.psnr << "\n";
    result.final_test = me;
  };

  std::mt19937_64 batch_rng(config.seed ^ 0xba7c4ull);
  std::uniform_int_distribution<size_t> pick(0, train_scenes.size() - 1);

  for (int step = 0; step < config.steps; ++step) {
    std::vector<Tensor<float>> grads;
    double batch_loss = 0.0;
    for (int s = 0; s < config.batch_size; ++s) {
      const SceneSample& scene = train_scenes[pick(batch_rng)];
      Graph<float> g;
      auto bound = model.bind(g);
      const int l = model.loss(g, bound, scene);
      batch_loss += static_cast<double>(g.val(l).data[0]);
      g.backward(l);
      model.accumulate_grads(g, bound, grads);
    }
    batch_loss /= config.batch_size;
    if (!std::isfinite(batch_loss))
      throw std::runtime_error("train: non-finite loss at step " + std::to_string(step));
    for (auto& gt : grads)
      for (auto& v : gt.data) v /= static_cast<float>(config.batch_size);
    adamw_step(params, grads, opt);
    if ((step + 1) % config.eval_interval == 0 || step + 1 == config.steps) log_eval(step + 1);
  }
  if (result.metrics.empty()) log_eval(config.steps);
  if (!config.checkpoint.empty()) save_checkpoint(config.checkpoint, model, opt, config.steps);
  return result;
}

namespace {

void write_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
void write_u64(std::ostream& os, std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }
void write_f64(std::ostream& os, double v) { os.write(reinterpret_cast<const char*>(&v), 8); }
std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 8);
  return v;
}
double read_f64(std::istream& is) {
  double v = 0;
  is.read(reinterpret_cast<char*>(&v), 8);
  return v;
}

void write_blob(std::ostream& os, const std::string& name, const Tensor<float>& t) {
  write_u32(os, static_cast<std::uint32_t>(name.size()));
  os.write(name.data(), static_cast<std::streamsize>(name.size()));
  write_u32(os, static_cast<std::uint32_t>(t.shape.size()));
  for (int d : t.shape) write_u32(os, static_cast<std::uint32_t>(d));
  os.write(reinterpret_cast<const char*>(t.data.data()),
           static_cast<std::streamsize>(t.data.size() * sizeof(float)));
}

Tensor<float> read_blob(std::istream& is, std::string& name) {
  const std::uint32_t name_len = read_u32(is);
  name.resize(name_len);
  is.read(name.data(), name_len);
  const std::uint32_t rank = read_u32(is);
  std::vector<int> shape(rank);
  for (auto& d : shape) d = static_cast<int>(read_u32(is));
  Tensor<float> t(shape);
  is.read(reinterpret_cast<char*>(t.data.data()),
          static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  return t;
}

void write_config(std::ostream& os, const ModelConfig& c) {
  write_u32(os, static_cast<std::uint32_t>(c.token_dim));
  write_u32(os, static_cast<std::uint32_t>(c.n_enc_layers));
  write_u32(os, static_cast<std::uint32_t>(c.n_dec_layers));
  write_u32(os, static_cast<std::uint32_t>(c.mlp_hidden));
  write_u32(os, static_cast<std::uint32_t>(c.ff_hidden));
  write_u32(os, static_cast<std::uint32_t>(c.variant));
  write_u32(os, static_cast<std::uint32_t>(c.n_heads));
  write_u64(os, c.seed);
  write_u32(os, static_cast<std::uint32_t>(c.resolution));
}

ModelConfig read_config(std::istream& is) {
  ModelConfig c;
  c.token_dim = static_cast<int>(read_u32(is));
  c.n_enc_layers = static_cast<int>(read_u32(is));
  c.n_dec_layers = static_cast<int>(read_u32(is));
  c.mlp_hidden = static_cast<int>(read_u32(is));
  c.ff_hidden = static_cast<int>(read_u32(is));
  c.variant = static_cast<Variant>(read_u32(is));
  c.n_heads = static_cast<int>(read_u32(is));
  c.seed = read_u64(is);
  c.resolution = static_cast<int>(read_u32(is));
  return c;
}

}  // namespace

void save_checkpoint(const std::string& path, const NvsModel<float>& model,
                     const AdamWState<float>& opt, std::int64_t step) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_checkpoint: cannot open " + path);
  os.write("GTAC", 4);
  write_u32(os, 1);
  write_config(os, model.config());
  write_u64(os, config_hash(model.config()));
  write_u64(os, static_cast<std::uint64_t>(step));
  write_f64(os, opt.lr);
  write_f64(os, opt.beta1);
  write_f64(os, opt.beta2);
  write_f64(os, opt.eps);
  write_f64(os, opt.weight_decay);
  write_u64(os, static_cast<std::uint64_t>(opt.step));
  const bool has_opt = !opt.m.empty();
  write_u32(os, has_opt ? 1 : 0);
  write_u32(os, static_cast<std::uint32_t>(model.params_.size()));
  const auto& names = model.parameter_names();
  for (size_t i = 0; i < model.params_.size(); ++i) write_blob(os, names[i], model.params_[i]);
  if (has_opt)
    for (size_t i = 0; i < model.params_.size(); ++i) {
      write_blob(os, "adam_m." + names[i], opt.m[i]);
      write_blob(os, "adam_v." + names[i], opt.v[i]);
    }
  if (!os) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

ModelConfig peek_checkpoint_config(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_checkpoint: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (std::memcmp(magic, "GTAC", 4) != 0)
    throw std::runtime_error("load_checkpoint: bad magic in " + path);
  if (read_u32(is) != 1) throw std::runtime_error("load_checkpoint: unsupported version");
  return read_config(is);
}

std::int64_t load_checkpoint(const std::string& path, NvsModel<float>& model,
                             AdamWState<float>* opt) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_checkpoint: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (std::memcmp(magic, "GTAC", 4) != 0)
    throw std::runtime_error("load_checkpoint: bad magic in " + path);
  if (read_u32(is) != 1) throw std::runtime_error("load_checkpoint: unsupported version");
  read_config(is);
  const std::uint64_t hash = read_u64(is);
  if (hash != config_hash(model.config()))
    throw std::runtime_error("load_checkpoint: config hash mismatch");
  const std::int64_t step = static_cast<std::int64_t>(read_u64(is));
  const double lr = read_f64(is), b1 = read_f64(is), b2 = read_f64(is), eps = read_f64(is),
               wd = read_f64(is);
  const std::int64_t opt_step = static_cast<std::int64_t>(read_u64(is));
  const bool has_opt = read_u32(is) != 0;
  const std::uint32_t n_params = read_u32(is);
  if (n_params != model.params_.size())
    throw std::runtime_error("load_checkpoint: parameter count mismatch");
  const auto& names = model.parameter_names();
  for (std::uint32_t i = 0; i < n_params; ++i) {
    std::string name;
    Tensor<float> t = read_blob(is, name);
    if (name != names[i] || t.shape != model.params_[i].shape)
      throw std::runtime_error("load_checkpoint: parameter mismatch at " + name);
    model.params_[i] = std::move(t);
  }
  if (opt) {
    opt->lr = lr;
    opt->beta1 = b1;
    opt->beta2 = b2;
    opt->eps = eps;
    opt->weight_decay = wd;
    opt->step = opt_step;
    opt->m.clear();
    opt->v.clear();
    if (has_opt)
      for (std::uint32_t i = 0; i < n_params; ++i) {
        std::string name;
        opt->m.push_back(read_blob(is, name));
        opt->v.push_back(read_blob(is, name));
      }
  }
  if (!is) throw std::runtime_error("load_checkpoint: truncated file " + path);
  return step;
}

void write_ppm(const std::string& path, const float* rgb, int h, int w) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_ppm: cannot open " + path);
  os << "P6\n" << w << ' ' << h << "\n255\n";
  for (int i = 0; i < h * w * 3; ++i) {
    const int v = static_cast<int>(std::lround(std::clamp(rgb[i], 0.0f, 1.0f) * 255.0f));
    os.put(static_cast<char>(v));
  }
  if (!os) throw std::runtime_error("write_ppm: write failed for " + path);
}

}  // namespace gtakit
