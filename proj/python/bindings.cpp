#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gtakit/analysis.hpp"
#include "gtakit/attn.hpp"
#include "gtakit/scene.hpp"
#include "gtakit/selfcheck.hpp"

namespace py = pybind11;
using namespace gtakit;

namespace {

using Arr = py::array_t<double, py::array::c_style | py::array::forcecast>;

Eigen::Matrix3d mat3_of(const Arr& a) {
  if (a.ndim() != 2 || a.shape(0) != 3 || a.shape(1) != 3)
    throw std::invalid_argument("expected a 3x3 rotation matrix");
  Eigen::Matrix3d m;
  auto r = a.unchecked<2>();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = r(i, j);
  return m;
}

ProductElement element_of(const Arr& rot, const Arr& trans, double theta_h, double theta_w) {
  if (trans.ndim() != 1 || trans.shape(0) != 3)
    throw std::invalid_argument("expected a length-3 translation");
  Eigen::Vector3d t;
  auto tr = trans.unchecked<1>();
  for (int i = 0; i < 3; ++i) t[i] = tr(i);
  return ProductElement{Se3Pose(So3Rotation(mat3_of(rot)), t), So2Angle(theta_h),
                        So2Angle(theta_w)};
}

RepSpec spec_of(const std::string& name) {
  if (name == "msn-hard") return RepSpec::msn_hard();
  if (name.rfind("so3:", 0) == 0) return RepSpec::so3_blocks(std::stoi(name.substr(4)));
  throw std::invalid_argument("unknown rep spec: " + name + " (use msn-hard or so3:<dim>)");
}

py::array_t<double> to_numpy(const Eigen::MatrixXd& m) {
  py::array_t<double> out({static_cast<py::ssize_t>(m.rows()), static_cast<py::ssize_t>(m.cols())});
  auto w = out.mutable_unchecked<2>();
  for (py::ssize_t i = 0; i < m.rows(); ++i)
    for (py::ssize_t j = 0; j < m.cols(); ++j) w(i, j) = m(i, j);
  return out;
}

Tensor<double> tensor_of(const Arr& a) {
  if (a.ndim() != 2) throw std::invalid_argument("expected a 2-D array");
  const int n = static_cast<int>(a.shape(0)), d = static_cast<int>(a.shape(1));
  Tensor<double> t({n, d});
  auto r = a.unchecked<2>();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) t.data[static_cast<size_t>(i) * d + j] = r(i, j);
  return t;
}

py::array_t<double> node_numpy(Graph<double>& g, int id) {
  const auto& t = g.val(id);
  py::array_t<double> out(
      {static_cast<py::ssize_t>(t.lead()), static_cast<py::ssize_t>(t.cols())});
  std::copy(t.data.begin(), t.data.end(), out.mutable_data());
  return out;
}

using ElemTuple = std::tuple<Arr, Arr, double, double>;

RepListPtr reps_of(const std::string& spec_name, const std::vector<ElemTuple>& elems) {
  const RepSpec spec = spec_of(spec_name);
  auto reps = std::make_shared<std::vector<Representation>>();
  for (const auto& [rot, trans, th, tw] : elems)
    reps->push_back(build_rep(spec, element_of(rot, trans, th, tw)));
  return reps;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "geometric transform attention toolkit";

  m.def(
      "rep_dense",
      [](const std::string& spec, const Arr& rot, const Arr& trans, double theta_h,
         double theta_w) {
        return to_numpy(build_rep(spec_of(spec), element_of(rot, trans, theta_h, theta_w)).dense());
      },
      py::arg("spec"), py::arg("rotation"), py::arg("translation"), py::arg("theta_h") = 0.0,
      py::arg("theta_w") = 0.0,
      "Materialized block-diagonal representation of one group element.");

  m.def(
      "kron_rep_dense",
      [](int n_freq, const Arr& rot, const Arr& trans, double theta_h, double theta_w) {
        return to_numpy(build_rep_kronecker(n_freq, element_of(rot, trans, theta_h, theta_w))
                            .dense());
      },
      py::arg("n_freq"), py::arg("rotation"), py::arg("translation"), py::arg("theta_h") = 0.0,
      py::arg("theta_w") = 0.0);

  m.def(
      "vanilla_attention",
      [](const Arr& q, const Arr& k, const Arr& v, double scale) {
        Graph<double> g;
        return node_numpy(
            g, vanilla_attention(g, g.leaf(tensor_of(q)), g.leaf(tensor_of(k)),
                                 g.leaf(tensor_of(v)), scale));
      },
      py::arg("q"), py::arg("k"), py::arg("v"), py::arg("scale") = 1.0);

  m.def(
      "gta_attention",
      [](const Arr& q, const Arr& k, const Arr& v, const std::string& spec,
         const std::vector<ElemTuple>& elems, double scale) {
        Graph<double> g;
        const auto reps = reps_of(spec, elems);
        GtaOptions opt;
        opt.scale = scale;
        return node_numpy(g, gta_attention(g, g.leaf(tensor_of(q)), g.leaf(tensor_of(k)),
                                           g.leaf(tensor_of(v)), reps, reps, opt));
      },
      py::arg("q"), py::arg("k"), py::arg("v"), py::arg("spec"), py::arg("elements"),
      py::arg("scale") = 1.0,
      "Self-attention with geometric transforms; elements are (R, t, theta_h, theta_w) tuples.");

  m.def(
      "gta_euclid_attention",
      [](const Arr& q, const Arr& k, const Arr& v, const std::string& spec,
         const std::vector<ElemTuple>& elems, double scale) {
        Graph<double> g;
        const auto reps = reps_of(spec, elems);
        GtaOptions opt;
        opt.scale = scale;
        return node_numpy(g, gta_euclid_attention(g, g.leaf(tensor_of(q)), g.leaf(tensor_of(k)),
                                                  g.leaf(tensor_of(v)), reps, reps, opt));
      },
      py::arg("q"), py::arg("k"), py::arg("v"), py::arg("spec"), py::arg("elements"),
      py::arg("scale") = 1.0);

  m.def(
      "pr_auc",
      [](const std::vector<double>& attn, const std::vector<std::vector<int>>& object_masks,
         const std::vector<double>& weights, int n_views, int tokens_per_view) {
        MaskSet ms;
        ms.n_views = n_views;
        ms.tokens_per_view = tokens_per_view;
        ms.masks = object_masks;
        ms.weights = weights;
        const PrCurve c = pr_auc(attn, ms);
        return py::make_tuple(c.auc, c.thresholds, c.precision, c.recall);
      },
      py::arg("attn"), py::arg("object_masks"), py::arg("weights"), py::arg("n_views"),
      py::arg("tokens_per_view"),
      "Returns (auc, thresholds, precision, recall) of the attention/mask alignment.");

  m.def(
      "make_texture",
      [](std::uint64_t seed, int height, int width) {
        const Texture t = make_texture(seed, height, width);
        py::array_t<float> out({static_cast<py::ssize_t>(t.height),
                                static_cast<py::ssize_t>(t.width), py::ssize_t(3)});
        std::copy(t.data.begin(), t.data.end(), out.mutable_data());
        return out;
      },
      py::arg("seed"), py::arg("height") = 128, py::arg("width") = 256);

  m.def(
      "render_view",
      [](std::uint64_t texture_seed, const Arr& rot, int resolution) {
        const Texture t = make_texture(texture_seed);
        Intrinsics K;
        K.resolution = resolution;
        const auto img = render_view(t, So3Rotation(mat3_of(rot)), K);
        py::array_t<float> out({static_cast<py::ssize_t>(resolution),
                                static_cast<py::ssize_t>(resolution), py::ssize_t(3)});
        std::copy(img.begin(), img.end(), out.mutable_data());
        return out;
      },
      py::arg("texture_seed"), py::arg("rotation"), py::arg("resolution") = 32);

  m.def(
      "sample_rotation",
      [](std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        return to_numpy(sample_rotation(rng).r);
      },
      py::arg("seed"));

  m.def(
      "run_checks",
      [](const std::string& suite, std::uint64_t seed) {
        std::vector<std::tuple<std::string, double, double, bool>> out;
        for (const auto& r : run_checks(suite, seed))
          out.emplace_back(r.name, r.max_err, r.tol, r.pass);
        return out;
      },
      py::arg("suite") = "groups", py::arg("seed") = 7,
      "Runs a property-check suite; returns (name, max_err, tol, pass) tuples.");
}
