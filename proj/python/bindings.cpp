#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "pcn/checkpoint.hpp"
#include "pcn/coding.hpp"
#include "pcn/config.hpp"
#include "pcn/decomposition.hpp"
#include "pcn/error.hpp"
#include "pcn/gradcheck.hpp"
#include "pcn/metrics.hpp"
#include "pcn/sampling.hpp"
#include "pcn/scene_io.hpp"
#include "pcn/synth.hpp"
#include "pcn/train.hpp"

namespace py = pybind11;
using namespace pcn;

namespace {

using ComplexArray = py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>;
using RealArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using LabelArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

// (h, w, 4) complex array in HH, HV, VH, VV order.
PolsarScene scene_from_array(const ComplexArray& a) {
  if (a.ndim() != 3 || a.shape(2) != 4) throw py::value_error("scene array must have shape (h, w, 4)");
  PolsarScene scene;
  scene.height = static_cast<int>(a.shape(0));
  scene.width = static_cast<int>(a.shape(1));
  const auto* p = a.data();
  for (py::ssize_t i = 0; i < a.shape(0) * a.shape(1); ++i, p += 4) scene.pixels.push_back({p[0], p[1], p[2], p[3]});
  scene.validate();
  return scene;
}

ComplexArray scene_to_array(const PolsarScene& scene) {
  ComplexArray out({py::ssize_t{scene.height}, py::ssize_t{scene.width}, py::ssize_t{4}});
  auto* p = out.mutable_data();
  for (const auto& s : scene.pixels) {
    *p++ = s.hh;
    *p++ = s.hv;
    *p++ = s.vh;
    *p++ = s.vv;
  }
  return out;
}

std::vector<std::uint8_t> labels_of(const LabelArray& a) { return {a.data(), a.data() + a.size()}; }

LabelArray label_array(const std::vector<std::uint8_t>& v, int h, int w) {
  LabelArray out({py::ssize_t{h}, py::ssize_t{w}});
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

ConfusionMatrix confusion_of(const LabelArray& pred, const LabelArray& truth, int classes, const LabelArray* exclude) {
  const auto p = labels_of(pred), t = labels_of(truth);
  if (exclude) return confusion(p, t, classes, labels_of(*exclude));
  return confusion(p, t, classes);
}

PcnConfig config_from_dict(const py::dict& d) {
  KeyValues kv;
  for (const auto& [k, v] : d) kv.emplace_back(py::str(k), py::str(v));
  return config_from_key_values(kv);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Polarimetric scattering coding and the polarimetric convolutional network";

  static py::exception<Error> error(m, "PcnError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const std::string message = std::string(to_string(e.code())) + ": " + e.what();
      PyErr_SetString(error.ptr(), message.c_str());
    }
  });

  m.def("encode_complex", [](Complex z) { return encode_complex(z).b; });
  m.def("decode_complex", [](const std::array<std::array<double, 2>, 2>& b) { return decode_complex({b}); });
  m.def("encode_matrix", [](Complex hh, Complex hv, Complex vh, Complex vv) {
    return encode_matrix({hh, hv, vh, vv});
  });
  m.def("decode_matrix", [](const CodedTile& t) {
    const auto s = decode_matrix(t);
    return std::array<Complex, 4>{s.hh, s.hv, s.vh, s.vv};
  });

  m.def(
      "encode_scene",
      [](const ComplexArray& a) {
        const CodedMatrix c = encode_scene(scene_from_array(a));
        RealArray out({py::ssize_t{c.rows}, py::ssize_t{c.cols}});
        std::copy(c.values.begin(), c.values.end(), out.mutable_data());
        return out;
      },
      "(h, w, 4) complex scene -> (4h, 4w) coded matrix");
  m.def("decode_scene", [](const RealArray& a) {
    if (a.ndim() != 2) throw py::value_error("coded matrix must be two-dimensional");
    CodedMatrix c{static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), {a.data(), a.data() + a.size()}};
    return scene_to_array(decode_scene(c));
  });

  m.def("span", [](Complex hh, Complex hv, Complex vh, Complex vv) { return span({hh, hv, vh, vv}); });
  m.def(
      "pf22",
      [](const ComplexArray& a, int window) {
        const PolsarScene scene = scene_from_array(a);
        const auto v = pf22_scene(scene, window);
        RealArray out({py::ssize_t{scene.height}, py::ssize_t{scene.width}, py::ssize_t{kPf22Size}});
        std::copy(v.begin(), v.end(), out.mutable_data());
        return out;
      },
      py::arg("scene"), py::arg("window") = 3);

  m.def(
      "scores",
      [](const LabelArray& pred, const LabelArray& truth, int classes, std::optional<LabelArray> exclude,
         bool skip_absent) {
        const auto z = confusion_of(pred, truth, classes, exclude ? &*exclude : nullptr);
        const auto s = score(z, skip_absent ? AbsentClassPolicy::Skip : AbsentClassPolicy::Error);
        py::dict d;
        d["oa"] = s.oa;
        d["aa"] = s.aa;
        d["kappa"] = s.kappa;
        d["per_class_recall"] = s.per_class_recall;
        d["confusion"] = z.counts;
        return d;
      },
      py::arg("pred"), py::arg("truth"), py::arg("classes"), py::arg("exclude") = py::none(),
      py::arg("skip_absent") = false);
  m.def(
      "t_test",
      [](const std::vector<double>& a, const std::vector<double>& b, bool paired) {
        return t_test(a, b, paired ? TTestKind::Paired : TTestKind::Welch);
      },
      py::arg("a"), py::arg("b"), py::arg("paired") = true);

  m.def(
      "gradcheck",
      [](std::uint64_t seed) {
        py::list out;
        for (const auto& e : run_gradcheck(seed).entries)
          out.append(py::make_tuple(e.name, e.max_relative_error, e.threshold, e.passed()));
        return out;
      },
      py::arg("seed") = 7);

  m.def(
      "synthesize",
      [](const std::string& spec_text) {
        const SynthScene s = generate_synthetic_scene(synth_spec_from_key_values(parse_key_values(spec_text)));
        return py::make_tuple(scene_to_array(s.scene), label_array(s.labels, s.scene.height, s.scene.width));
      },
      "key=value synthetic scene spec -> (scene, labels)");

  m.def(
      "select_training_samples",
      [](const LabelArray& labels, int classes, int per_class, std::uint64_t seed) {
        const auto sel = select_training_samples(labels_of(labels), classes, per_class, seed);
        LabelArray mask(labels.request().shape);
        std::copy(sel.mask.begin(), sel.mask.end(), mask.mutable_data());
        return py::make_tuple(mask, sel.warnings);
      });

  py::class_<PcnModel>(m, "Model")
      .def_property_readonly("num_classes", [](const PcnModel& model) { return model.config.num_classes; })
      .def("predict",
           [](const PcnModel& model, const ComplexArray& a) {
             const PolsarScene scene = scene_from_array(a);
             return label_array(predict_map(scene, model), scene.height, scene.width);
           })
      .def("probabilities",
           [](const PcnModel& model, const ComplexArray& a) {
             const Tensor3 p = pcn_forward(scene_from_array(a), model);
             RealArray out({py::ssize_t{p.h}, py::ssize_t{p.w}, py::ssize_t{p.d}});
             std::copy(p.data.begin(), p.data.end(), out.mutable_data());
             return out;
           })
      .def("save", [](const PcnModel& model, const std::filesystem::path& path) { save_model(model, path); })
      .def("to_bytes", [](const PcnModel& model) {
        const auto b = serialize_model(model);
        return py::bytes(b.data(), b.size());
      });

  m.def("load_model", [](const std::filesystem::path& path) { return load_model(path); });

  m.def(
      "train",
      [](const ComplexArray& a, const LabelArray& labels, std::optional<LabelArray> mask, const py::dict& config) {
        const PolsarScene scene = scene_from_array(a);
        const auto l = labels_of(labels);
        const auto msk = mask ? labels_of(*mask) : std::vector<std::uint8_t>{};
        const PcnConfig c = config_from_dict(config);
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = train(scene, l, msk, c);
        }
        py::list log;
        for (const auto& e : r.log) log.append(py::make_tuple(e.epoch, e.loss, e.train_accuracy));
        return py::make_tuple(std::move(r.model), log);
      },
      py::arg("scene"), py::arg("labels"), py::arg("mask") = py::none(), py::arg("config") = py::dict(),
      "Train on a scene; config takes the same keys as the command line config file.");
}
