#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gtakit/attn.hpp"
#include "gtakit/optim.hpp"
#include "gtakit/scene.hpp"

namespace gtakit {

enum class Variant { Vanilla, Ape, RpeBias, Gta, GtaEuclid, GtaKron };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct ModelConfig {
  int token_dim = 126;  // divisible by 3 for the SO(3) block rep
  int n_enc_layers = 3;
  int n_dec_layers = 3;
  int mlp_hidden = 256;  // hidden width of the image-in and image-out MLPs
  int ff_hidden = 0;     // transformer feedforward width; 0 means 2 * token_dim
  Variant variant = Variant::Gta;
  int n_heads = 1;
  std::uint64_t seed = 0;
  int resolution = 32;

  int pixels() const { return resolution * resolution * 3; }
  int ff() const { return ff_hidden > 0 ? ff_hidden : 2 * token_dim; }
};

// The R (x) R Kronecker rep (9x9 orthogonal blocks), repeated d/9 times.
Representation so3_kron_rep(const So3Rotation& r, int head_dim);

// Encoder-decoder NVS transformer with pre-LN blocks, residual connections
// and a GELU feedforward. One parameter set; a fresh Graph per forward.
template <typename T>
class NvsModel {
 public:
  explicit NvsModel(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }

  std::vector<Tensor<T>*> parameters();
  const std::vector<std::string>& parameter_names() const { return names_; }

  // Binds all parameters into the graph; must be called once per graph.
  struct Bound {
    std::vector<int> ids;
  };
  Bound bind(Graph<T>& g);

  // Predicted target image as a node of shape {1, pixels}. When `record` is
  // set, per-layer head-averaged attention matrices are captured into it.
  int predict(Graph<T>& g, const Bound& b, const SceneSample& scene,
              AttnRecord* record = nullptr) const;

  // Scalar MSE node between prediction and the scene's target image.
  int loss(Graph<T>& g, const Bound& b, const SceneSample& scene) const;

  // Accumulates parameter gradients from a finished backward pass.
  void accumulate_grads(Graph<T>& g, const Bound& b, std::vector<Tensor<T>>& grads) const;

  template <typename U>
  NvsModel<U> cast() const {
    NvsModel<U> out(config_);
    for (size_t i = 0; i < params_.size(); ++i) out.params_[i] = params_[i].template cast<U>();
    return out;
  }

  std::vector<Tensor<T>> params_;  // ordered as names_

 private:
  template <typename U>
  friend class NvsModel;

  int add_param(const std::string& name, Tensor<T> t);
  int layer_param(const std::string& base, int layer, const std::string& leaf) const;

  ModelConfig config_;
  std::vector<std::string> names_;
  std::map<std::string, int> index_;
};

struct TrainConfig {
  double lr = 2e-4;
  double weight_decay = 1e-3;
  int batch_size = 16;
  int steps = 20000;
  int eval_interval = 500;
  int eval_scenes = 128;  // evaluation subset size per split
  std::string train_data, test_data;
  std::string checkpoint;  // saved at the end of training when non-empty
  std::uint64_t seed = 0;
};

struct Metrics {
  double mse = 0.0;
  double psnr = 0.0;
};

Metrics evaluate(NvsModel<float>& model, const std::vector<SceneSample>& scenes);
double psnr_of_mse(double mse);

struct TrainResult {
  std::vector<std::tuple<int, std::string, double, double>> metrics;  // step, split, mse, psnr
  Metrics final_test;
};

// MSE training with AdamW; metrics appended to `metrics_csv` when non-empty.
TrainResult train(NvsModel<float>& model, const TrainConfig& config,
                  const std::string& metrics_csv = "", bool verbose = false);

std::uint64_t config_hash(const ModelConfig& config);
void save_checkpoint(const std::string& path, const NvsModel<float>& model,
                     const AdamWState<float>& opt, std::int64_t step);
// Returns the step count; throws on config-hash mismatch.
std::int64_t load_checkpoint(const std::string& path, NvsModel<float>& model,
                             AdamWState<float>* opt);
ModelConfig peek_checkpoint_config(const std::string& path);

void write_ppm(const std::string& path, const float* rgb, int h, int w);

}  // namespace gtakit
