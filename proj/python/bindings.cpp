#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "unload/config_file.hpp"
#include "unload/trainer.hpp"

namespace py = pybind11;
using namespace unload;

namespace {

py::array_t<uint8_t> observation_to_array(const Observation& obs) {
    py::array_t<uint8_t> out({obs.height, obs.width, 3});
    std::memcpy(out.mutable_data(), obs.rgb.data(), obs.rgb.size());
    return out;
}

Observation array_to_observation(const py::array_t<uint8_t, py::array::c_style>& arr) {
    if (arr.ndim() != 3 || arr.shape(2) != 3) {
        throw std::invalid_argument("observation array must have shape (H, W, 3)");
    }
    Observation obs = make_observation(static_cast<int>(arr.shape(0)),
                                       static_cast<int>(arr.shape(1)));
    std::memcpy(obs.rgb.data(), arr.data(), obs.rgb.size());
    return obs;
}

py::array_t<double> qmap_to_array(const QMap& q) {
    py::array_t<double> out({q.height, q.width});
    std::memcpy(out.mutable_data(), q.values.data(),
                sizeof(double) * static_cast<size_t>(q.values.size()));
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Deterministic parcel-unloading environment and DQN trainer";

    py::enum_<CollapseMode>(m, "CollapseMode")
        .value("DETERMINISTIC", CollapseMode::Deterministic)
        .value("STOCHASTIC", CollapseMode::Stochastic);

    py::enum_<StepKind>(m, "StepKind")
        .value("PICK_SUCCESS", StepKind::PickSuccess)
        .value("PICK_OUT_OF_WORKSPACE", StepKind::PickOutOfWorkspace)
        .value("PICK_EMPTY_CELL", StepKind::PickEmptyCell);

    py::enum_<Variant>(m, "Variant")
        .value("MASK_OFF", Variant::MaskOff)
        .value("MASK_OFF_V", Variant::MaskOffV)
        .value("MASK_ON", Variant::MaskOn)
        .value("MASK_ON_V", Variant::MaskOnV);
    m.def("variant_name", &variant_name);
    m.def("parse_variant", &parse_variant);

    py::class_<EnvConfig>(m, "EnvConfig")
        .def(py::init<>())
        .def_readwrite("columns", &EnvConfig::columns)
        .def_readwrite("rows", &EnvConfig::rows)
        .def_readwrite("parcel_edge", &EnvConfig::parcel_edge)
        .def_readwrite("obs_resolution", &EnvConfig::obs_resolution)
        .def_readwrite("collapse_mode", &EnvConfig::collapse_mode)
        .def_readwrite("p_out", &EnvConfig::p_out)
        .def_readwrite("color_jitter", &EnvConfig::color_jitter)
        .def_readwrite("seed", &EnvConfig::seed)
        .def("total_parcels", &EnvConfig::total_parcels)
        .def("validate", &EnvConfig::validate);

    py::class_<StepOutcome>(m, "StepOutcome")
        .def_readonly("kind", &StepOutcome::kind)
        .def_readonly("z_pick", &StepOutcome::z_pick)
        .def_readonly("n_fallen_out", &StepOutcome::n_fallen_out)
        .def_readonly("clock_delta", &StepOutcome::clock_delta)
        .def_readonly("terminal", &StepOutcome::terminal)
        .def_property_readonly("picked_cell", [](const StepOutcome& o) -> py::object {
            if (!o.picked_cell) return py::none();
            return py::make_tuple(o.picked_cell->column, o.picked_cell->row);
        });

    py::class_<StackEnv>(m, "StackEnv")
        .def(py::init<const EnvConfig&, uint64_t>(), py::arg("config"),
             py::arg("episode_seed"))
        .def("reset", &StackEnv::reset, py::arg("episode_seed"))
        .def(
            "step",
            [](StackEnv& env, int u, int v) { return env.step(Pixel{u, v}); },
            py::arg("u"), py::arg("v"))
        .def("render", [](const StackEnv& env) { return observation_to_array(env.render()); })
        .def("oracle_policy",
             [](const StackEnv& env) {
                 const Pixel p = env.oracle_policy();
                 return py::make_tuple(p.u, p.v);
             })
        .def("terminal", &StackEnv::terminal)
        .def_property_readonly("clock", [](const StackEnv& env) { return env.state().clock; });

    py::class_<NetConfig>(m, "NetConfig")
        .def(py::init<>())
        .def_readwrite("channels", &NetConfig::channels)
        .def_readwrite("height", &NetConfig::height)
        .def_readwrite("width", &NetConfig::width)
        .def_readwrite("hidden_sizes", &NetConfig::hidden_sizes)
        .def_readwrite("num_critics", &NetConfig::num_critics)
        .def_readwrite("seed", &NetConfig::seed);

    py::class_<CriticEnsemble>(m, "CriticEnsemble")
        .def(py::init<const NetConfig&>())
        .def(
            "forward",
            [](const CriticEnsemble& ensemble, const py::array_t<uint8_t, py::array::c_style>& obs,
               bool use_target) {
                const auto maps = ensemble.forward(array_to_observation(obs), use_target);
                py::list out;
                for (const auto& q : maps) out.append(qmap_to_array(q));
                return out;
            },
            py::arg("observation"), py::arg("use_target") = false)
        .def(
            "greedy_action",
            [](const CriticEnsemble& ensemble, const py::array_t<uint8_t, py::array::c_style>& obs) {
                const auto maps = ensemble.forward(array_to_observation(obs), true);
                const int a = greedy_action_from_map(min_over_critics(maps));
                const int w = ensemble.config().width;
                return py::make_tuple(a % w, a / w);
            },
            py::arg("observation"))
        .def("save", &CriticEnsemble::save, py::arg("path"))
        .def_static("load", &CriticEnsemble::load, py::arg("path"));

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("total_steps", &TrainConfig::total_steps)
        .def_readwrite("zeta", &TrainConfig::zeta)
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("learning_rate", &TrainConfig::learning_rate)
        .def_readwrite("gamma", &TrainConfig::gamma)
        .def_readwrite("num_critics", &TrainConfig::num_critics)
        .def_readwrite("epsilon", &TrainConfig::epsilon)
        .def_readwrite("lambda_", &TrainConfig::lambda)
        .def_readwrite("bias", &TrainConfig::bias)
        .def_readwrite("eval_every_episodes", &TrainConfig::eval_every_episodes)
        .def_readwrite("eval_episodes", &TrainConfig::eval_episodes)
        .def_readwrite("variant", &TrainConfig::variant)
        .def_readwrite("env", &TrainConfig::env)
        .def_readwrite("hidden_sizes", &TrainConfig::hidden_sizes)
        .def_readwrite("force_mask_in_eval", &TrainConfig::force_mask_in_eval)
        .def("validate", &TrainConfig::validate);

    py::class_<EvalRecord>(m, "EvalRecord")
        .def_readonly("step", &EvalRecord::step)
        .def_readonly("success_norm", &EvalRecord::success_norm)
        .def_readonly("oow_norm", &EvalRecord::oow_norm)
        .def_readonly("raw_success", &EvalRecord::raw_success)
        .def_readonly("raw_oow", &EvalRecord::raw_oow);

    py::class_<TrainStats>(m, "TrainStats")
        .def_readonly("oow_actions_total", &TrainStats::oow_actions_total)
        .def_readonly("oow_actions_first_2000", &TrainStats::oow_actions_first_2000)
        .def_readonly("episodes", &TrainStats::episodes);

    py::class_<TrainResult>(m, "TrainResult")
        .def_readonly("evals", &TrainResult::evals)
        .def_readonly("stats", &TrainResult::stats)
        .def_property_readonly("ensemble",
                               [](const TrainResult& r) -> const CriticEnsemble& {
                                   return r.ensemble;
                               },
                               py::return_value_policy::reference_internal);

    m.def("train", &train, py::arg("config"), py::arg("run_seed"),
          py::call_guard<py::gil_scoped_release>());
    m.def("evaluate", &evaluate, py::arg("ensemble"), py::arg("config"), py::arg("n_episodes"),
          py::arg("eval_seed_base"), py::arg("step_index"),
          py::call_guard<py::gil_scoped_release>());
    m.def("train_config_from_file", &train_config_from_file, py::arg("path"));
    m.def("derive_seed",
          [](uint64_t base, const std::string& tag) { return derive_seed(base, tag); });
}
