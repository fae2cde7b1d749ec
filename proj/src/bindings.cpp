#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ueeg/train.hpp"

namespace py = pybind11;
using namespace ueeg;

namespace {

Tensor<float> batch_from_numpy(const EEGDataset& meta,
                               py::array_t<float, py::array::c_style |
                                                      py::array::forcecast>
                                   arr) {
    if (arr.ndim() != 3)
        throw Error(ErrorCode::ShapeMismatch, "expected a (B,C,T) array");
    std::size_t B = arr.shape(0), C = arr.shape(1), T = arr.shape(2);
    if (C != meta.channels || T != meta.timesteps)
        throw Error(ErrorCode::GeometryMismatch,
                    "array geometry does not match the model");
    Tensor<float> x({B, C, T});
    std::copy(arr.data(), arr.data() + B * C * T, x.mutable_ptr());
    return x;
}

py::array_t<float> numpy_from_tensor(const Tensor<float>& t) {
    std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
    py::array_t<float> out(shape);
    std::copy(t.data().begin(), t.data().end(), out.mutable_data());
    return out;
}

Tensor<float> model_batch(const Model<float>& m, py::array arr) {
    EEGDataset meta;
    meta.channels = m.config.channels;
    meta.timesteps = m.config.timesteps;
    return batch_from_numpy(
        meta, py::cast<py::array_t<float, py::array::c_style |
                                              py::array::forcecast>>(arr));
}

}  // namespace

PYBIND11_MODULE(_ueeg, m) {
    m.doc() = "EEG encoding micro-framework core";

    py::register_exception<Error>(m, "UeegError");

    py::class_<EEGDataset>(m, "Dataset")
        .def(py::init([](const std::string& name, py::array_t<float> records,
                         py::array_t<std::uint32_t> labels,
                         std::size_t num_classes) {
                 auto r = py::cast<py::array_t<
                     float, py::array::c_style | py::array::forcecast>>(
                     records);
                 if (r.ndim() != 3)
                     throw Error(ErrorCode::ShapeMismatch,
                                 "records must be (N,C,T)");
                 EEGDataset ds;
                 ds.name = name;
                 ds.num_classes = num_classes;
                 ds.channels = r.shape(1);
                 ds.timesteps = r.shape(2);
                 ds.records.assign(r.data(), r.data() + r.size());
                 auto l = py::cast<py::array_t<
                     std::uint32_t, py::array::c_style |
                                        py::array::forcecast>>(labels);
                 ds.labels.assign(l.data(), l.data() + l.size());
                 ds.validate();
                 return ds;
             }),
             py::arg("name"), py::arg("records"), py::arg("labels"),
             py::arg("num_classes"))
        .def_readonly("name", &EEGDataset::name)
        .def_readonly("num_classes", &EEGDataset::num_classes)
        .def_readonly("channels", &EEGDataset::channels)
        .def_readonly("timesteps", &EEGDataset::timesteps)
        .def("__len__", &EEGDataset::size)
        .def_property_readonly("records",
                               [](const EEGDataset& ds) {
                                   py::array_t<float> out(
                                       {py::ssize_t(ds.size()),
                                        py::ssize_t(ds.channels),
                                        py::ssize_t(ds.timesteps)});
                                   std::copy(ds.records.begin(),
                                             ds.records.end(),
                                             out.mutable_data());
                                   return out;
                               })
        .def_property_readonly("labels",
                               [](const EEGDataset& ds) {
                                   py::array_t<std::uint32_t> out(
                                       py::ssize_t(ds.size()));
                                   std::copy(ds.labels.begin(),
                                             ds.labels.end(),
                                             out.mutable_data());
                                   return out;
                               })
        .def("save", &save_container, py::arg("path"))
        .def_static("load", &load_container, py::arg("path"));

    m.def(
        "synth",
        [](const std::string& preset, std::size_t channels,
           std::size_t timesteps, std::size_t num_classes,
           std::size_t num_records, std::uint64_t seed, double difficulty) {
            SynthSpec spec;
            if (!preset.empty()) {
                spec = preset_spec(preset, seed);
            } else {
                spec.channels = channels;
                spec.timesteps = timesteps;
                spec.num_classes = num_classes;
                spec.num_records = num_records;
                spec.seed = seed;
            }
            spec.difficulty = difficulty;
            return synth_generate(spec);
        },
        py::arg("preset") = "", py::arg("channels") = 0,
        py::arg("timesteps") = 0, py::arg("num_classes") = 0,
        py::arg("num_records") = 0, py::arg("seed") = 0,
        py::arg("difficulty") = 0.5);

    m.def("preset_names", &preset_names);

    py::class_<SplitPlan>(m, "Split")
        .def_readonly("train", &SplitPlan::train)
        .def_readonly("val", &SplitPlan::val)
        .def_readonly("test", &SplitPlan::test)
        .def_readonly("stratification_warning",
                      &SplitPlan::stratification_warning);
    m.def("make_split", &make_split, py::arg("dataset"), py::arg("seed") = 0);
    m.def("window_starts", &window_starts, py::arg("length"),
          py::arg("window"), py::arg("overlap"));
    m.def("window_dataset", &window_dataset, py::arg("dataset"),
          py::arg("window"), py::arg("overlap"));
    m.def("standardize", &standardize, py::arg("dataset"),
          py::arg("train_indices"));
    m.def("minmax_normalize", &minmax_normalize, py::arg("dataset"));

    py::class_<Model<float>>(m, "Model")
        .def_static(
            "build",
            [](const std::string& arch, std::size_t channels,
               std::size_t timesteps, std::size_t num_classes,
               std::uint64_t seed) {
                return build_model<float>(ModelConfig::make(
                    arch_from_name(arch), channels, timesteps, num_classes,
                    seed));
            },
            py::arg("arch"), py::arg("channels"), py::arg("timesteps"),
            py::arg("num_classes"), py::arg("seed") = 0)
        .def_static("load", &load_checkpoint, py::arg("path"))
        .def("save",
             [](Model<float>& m_, const std::string& path) {
                 save_checkpoint(m_, path);
             },
             py::arg("path"))
        .def_property_readonly("arch",
                               [](const Model<float>& m_) {
                                   return arch_name(m_.config.arch);
                               })
        .def_property_readonly("config_json",
                               [](const Model<float>& m_) {
                                   return m_.config.to_json().dump();
                               })
        .def("parameter_count", &Model<float>::parameter_count)
        .def("encode",
             [](Model<float>& m_, py::array arr) {
                 m_.mode = Mode::Eval;
                 auto ctx = m_.context();
                 return numpy_from_tensor(
                     m_.encode(ctx, model_batch(m_, arr)));
             },
             py::arg("batch"))
        .def("classify",
             [](Model<float>& m_, py::array arr) {
                 m_.mode = Mode::Eval;
                 auto ctx = m_.context();
                 return numpy_from_tensor(
                     m_.classify(ctx, model_batch(m_, arr)));
             },
             py::arg("batch"))
        .def("forward", [](Model<float>& m_, py::array arr) {
            m_.mode = Mode::Eval;
            auto ctx = m_.context();
            return numpy_from_tensor(m_.forward(ctx, model_batch(m_, arr)));
        },
             py::arg("batch"));

    py::class_<TrainHistory>(m, "TrainHistory")
        .def_readonly("train_loss", &TrainHistory::train_loss)
        .def_readonly("train_acc", &TrainHistory::train_acc)
        .def_readonly("val_score", &TrainHistory::val_score)
        .def_readonly("epoch_seconds", &TrainHistory::epoch_seconds)
        .def_readonly("best_epoch", &TrainHistory::best_epoch);

    py::class_<MetricsReport>(m, "MetricsReport")
        .def_readonly("dataset", &MetricsReport::dataset)
        .def_readonly("model", &MetricsReport::model)
        .def_readonly("accuracy", &MetricsReport::accuracy)
        .def_readonly("f1", &MetricsReport::f1)
        .def_readonly("has_auc", &MetricsReport::has_auc)
        .def_readonly("auc", &MetricsReport::auc)
        .def_readonly("confusion", &MetricsReport::confusion);

    m.def(
        "train",
        [](const std::string& arch, const EEGDataset& ds,
           const SplitPlan& split, std::size_t max_epochs, double lr,
           std::size_t batch_size, const std::string& optimizer,
           std::uint64_t seed) {
            auto cfg = TrainConfig::defaults_for(
                ModelConfig::make(arch_from_name(arch), ds.channels,
                                  ds.timesteps, ds.num_classes, seed));
            if (max_epochs) cfg.max_epochs = max_epochs;
            if (lr >= 0) cfg.lr = lr;
            if (batch_size) cfg.batch_size = batch_size;
            if (!optimizer.empty()) cfg.optimizer = optimizer;
            auto res = train(cfg, ds, split);
            return py::make_tuple(std::move(res.model), res.history);
        },
        py::arg("arch"), py::arg("dataset"), py::arg("split"),
        py::arg("max_epochs") = 0, py::arg("lr") = -1.0,
        py::arg("batch_size") = 0, py::arg("optimizer") = "",
        py::arg("seed") = 0);

    m.def(
        "evaluate",
        [](Model<float>& model, const EEGDataset& ds, const SplitPlan& split,
           const std::vector<std::size_t>& indices,
           const std::string& model_name) {
            return evaluate(model, ds, split, indices, model_name);
        },
        py::arg("model"), py::arg("dataset"), py::arg("split"),
        py::arg("indices"), py::arg("model_name") = "model");

    m.def("accuracy", &accuracy, py::arg("pred"), py::arg("truth"));
    m.def("macro_f1", &macro_f1, py::arg("pred"), py::arg("truth"),
          py::arg("num_classes"));
    m.def("auc_roc", &auc_roc, py::arg("scores"), py::arg("labels"));
    m.def("confusion_matrix", &confusion_matrix, py::arg("pred"),
          py::arg("truth"), py::arg("num_classes"));

    py::class_<Knn>(m, "Knn")
        .def(py::init<std::size_t>(), py::arg("k") = 5)
        .def("fit",
             [](Knn& k, py::array_t<float, py::array::c_style |
                                               py::array::forcecast>
                            x,
                std::vector<std::uint32_t> y) {
                 if (x.ndim() != 2)
                     throw Error(ErrorCode::ShapeMismatch,
                                 "embeddings must be (N,D)");
                 std::vector<float> data(x.data(), x.data() + x.size());
                 k.fit(std::move(data), x.shape(1), std::move(y));
             },
             py::arg("embeddings"), py::arg("labels"))
        .def("predict", [](const Knn& k,
                           py::array_t<float, py::array::c_style |
                                                  py::array::forcecast>
                               x) {
            std::vector<float> q(x.data(), x.data() + x.size());
            return k.predict(q, x.shape(1));
        });

    py::class_<RandomForest>(m, "RandomForest")
        .def(py::init<std::size_t, std::uint64_t>(), py::arg("n_trees") = 100,
             py::arg("seed") = 0)
        .def("fit",
             [](RandomForest& f, py::array_t<float, py::array::c_style |
                                                        py::array::forcecast>
                                     x,
                std::vector<std::uint32_t> y) {
                 std::vector<float> data(x.data(), x.data() + x.size());
                 f.fit(data, x.shape(1), y);
             },
             py::arg("embeddings"), py::arg("labels"))
        .def("predict", [](const RandomForest& f,
                           py::array_t<float, py::array::c_style |
                                                  py::array::forcecast>
                               x) {
            std::vector<float> q(x.data(), x.data() + x.size());
            return f.predict(q, x.shape(1));
        });
}
