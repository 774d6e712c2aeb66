// Python bindings for the core library. Exposed with plain list/tuple
// signatures so the module has no numpy dependency; matrices cross the
// boundary as nested lists.

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "flowrl/cfm.hpp"
#include "flowrl/checkpoint.hpp"
#include "flowrl/grpo.hpp"
#include "flowrl/offline.hpp"
#include "flowrl/rewards.hpp"
#include "flowrl/samplers.hpp"
#include "flowrl/tasks.hpp"

namespace py = pybind11;
using namespace flowrl;

namespace {

Mat mat_from_rows(const std::vector<Vec>& rows) {
    const int n = static_cast<int>(rows.size());
    Mat m(n);
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(rows[i].size()) != n) {
            throw InputError("covariance rows must form a square matrix");
        }
        for (int j = 0; j < n; ++j) m(i, j) = rows[i][j];
    }
    return m;
}

std::vector<Vec> mat_to_rows(const Mat& m) {
    std::vector<Vec> rows(m.n, Vec(m.n));
    for (int i = 0; i < m.n; ++i)
        for (int j = 0; j < m.n; ++j) rows[i][j] = m(i, j);
    return rows;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "flow-matching policy training core";

    py::register_exception<ConfigError>(m, "ConfigError");
    py::register_exception<InputError>(m, "InputError");
    py::register_exception<NumericError>(m, "NumericError");
    py::register_exception<TrainingError>(m, "TrainingError");
    py::register_exception<CompatibilityError>(m, "CompatibilityError");

    // ---- network ----------------------------------------------------------
    py::class_<NetSpec>(m, "NetSpec")
        .def(py::init<>())
        .def_readwrite("input_dim", &NetSpec::input_dim)
        .def_readwrite("hidden_widths", &NetSpec::hidden_widths)
        .def_readwrite("time_embed_dim", &NetSpec::time_embed_dim)
        .def_readwrite("num_conditions", &NetSpec::num_conditions)
        .def_readwrite("cond_embed_dim", &NetSpec::cond_embed_dim)
        .def_property(
            "activation",
            [](const NetSpec& s) { return activation_to_string(s.activation); },
            [](NetSpec& s, const std::string& v) { s.activation = activation_from_string(v); })
        .def("__repr__", [](const NetSpec& s) { return describe(s); })
        .def("__eq__", [](const NetSpec& a, const NetSpec& b) { return a == b; });

    py::class_<ParamVector>(m, "ParamVector")
        .def_readwrite("values", &ParamVector::values)
        .def_readonly("spec", &ParamVector::spec)
        .def("__len__", [](const ParamVector& p) { return p.values.size(); });

    m.def("param_count", &param_count, py::arg("spec"));
    m.def("init_params", &init_params, py::arg("spec"), py::arg("seed"));
    m.def("forward_velocity", &forward_velocity, py::arg("params"), py::arg("x"), py::arg("t"),
          py::arg("c"));
    m.def("time_embedding", &time_embedding, py::arg("t"), py::arg("dim"));

    py::class_<AdamState>(m, "AdamState")
        .def_readonly("step_count", &AdamState::step_count)
        .def_readonly("lr", &AdamState::lr)
        .def_readonly("first_moment", &AdamState::first_moment)
        .def_readonly("second_moment", &AdamState::second_moment);
    m.def("make_adam_state", &make_adam_state, py::arg("n"), py::arg("lr"),
          py::arg("beta1") = 0.9, py::arg("beta2") = 0.999, py::arg("eps") = 1e-8);
    m.def(
        "adam_step",
        [](const ParamVector& p, const Vec& grads, const AdamState& st) {
            return adam_step(p, Gradients{grads}, st);
        },
        py::arg("params"), py::arg("grads"), py::arg("state"));

    // ---- tasks ------------------------------------------------------------
    py::class_<GaussianTask>(m, "GaussianTask")
        .def(py::init<>())
        .def(
            "add_condition",
            [](GaussianTask& t, const Vec& mean, const std::vector<Vec>& cov) {
                t.conditions.push_back({mean, mat_from_rows(cov)});
            },
            py::arg("mean"), py::arg("cov"))
        .def_property_readonly(
            "num_conditions",
            [](const GaussianTask& t) { return static_cast<int>(t.conditions.size()); });

    py::class_<Arc>(m, "Arc")
        .def(py::init([](double start, double width) { return Arc{start, width}; }),
             py::arg("start"), py::arg("width"))
        .def_readwrite("start", &Arc::start)
        .def_readwrite("width", &Arc::width);

    py::class_<RingTask>(m, "RingTask")
        .def(py::init<>())
        .def_readwrite("num_modes", &RingTask::num_modes)
        .def_readwrite("radius", &RingTask::radius)
        .def_readwrite("mode_std", &RingTask::mode_std)
        .def_readwrite("arcs", &RingTask::arcs);

    m.def("validate_task", [](const Task& t) { validate_task(t); }, py::arg("task"));
    m.def("num_conditions", [](const Task& t) { return num_conditions(t); }, py::arg("task"));
    m.def("task_dim", [](const Task& t) { return task_dim(t); }, py::arg("task"));
    m.def(
        "sample_data",
        [](const Task& t, int c, int n, std::uint64_t seed) { return sample_data(t, c, n, seed); },
        py::arg("task"), py::arg("c"), py::arg("n"), py::arg("seed"));
    m.def("mode_angle", &mode_angle, py::arg("task"), py::arg("k"));
    m.def("oracle_velocity", &oracle_velocity, py::arg("task"), py::arg("x_t"), py::arg("t"),
          py::arg("c"));
    m.def(
        "oracle_marginal",
        [](const GaussianTask& t, double time, int c) {
            const auto [mean, cov] = oracle_marginal(t, time, c);
            return std::make_pair(mean, mat_to_rows(cov));
        },
        py::arg("task"), py::arg("t"), py::arg("c"));

    // ---- flow-matching loss ------------------------------------------------
    m.def("interpolate", &interpolate, py::arg("x"), py::arg("eps"), py::arg("t"));
    m.def(
        "cfm_loss",
        [](const ParamVector& params, const std::vector<Vec>& x, const std::vector<int>& c,
           const std::vector<Vec>& eps, const Vec& t) {
            CfmBatch batch{x, c, eps, t};
            const LossResult res = cfm_loss(params, batch);
            return std::make_pair(res.loss, res.grads.values);
        },
        py::arg("params"), py::arg("x"), py::arg("c"), py::arg("eps"), py::arg("t"));

    py::class_<Checkpoint>(m, "Checkpoint")
        .def(py::init<>())
        .def_readwrite("params", &Checkpoint::params)
        .def_readwrite("stage", &Checkpoint::stage)
        .def_readonly("created", &Checkpoint::created)
        .def_readonly("config_fingerprint", &Checkpoint::config_fingerprint);
    m.def("save_checkpoint", &save_checkpoint, py::arg("checkpoint"), py::arg("path"));
    m.def(
        "load_checkpoint", [](const std::string& path) { return load_checkpoint(path); },
        py::arg("path"));

    m.def(
        "pretrain",
        [](const Task& task, const NetSpec& spec, int steps, int batch_size, double lr,
           std::uint64_t seed) {
            TrainConfig cfg;
            cfg.steps = steps;
            cfg.batch_size = batch_size;
            cfg.lr = lr;
            cfg.seed = seed;
            cfg.deterministic = true;
            return pretrain(task, spec, cfg);
        },
        py::arg("task"), py::arg("spec"), py::arg("steps"), py::arg("batch_size") = 64,
        py::arg("lr") = 1e-3, py::arg("seed") = 0);

    // ---- samplers -----------------------------------------------------------
    py::class_<Schedule>(m, "Schedule")
        .def_readonly("grid", &Schedule::grid)
        .def_readonly("clamp_delta", &Schedule::clamp_delta);
    m.def("uniform_schedule", py::overload_cast<int>(&uniform_schedule), py::arg("num_steps"));
    m.def("uniform_schedule", py::overload_cast<int, double>(&uniform_schedule),
          py::arg("num_steps"), py::arg("clamp_delta"));
    m.def("num_steps", &num_steps, py::arg("schedule"));
    m.def("sigma", &sigma, py::arg("a"), py::arg("t"), py::arg("delta"));
    m.def("sde_mean", &sde_mean, py::arg("x_t"), py::arg("v"), py::arg("t"), py::arg("sigma"),
          py::arg("dt"));
    m.def("transition_logpdf", &transition_logpdf, py::arg("x_next"), py::arg("mean"),
          py::arg("sigma"), py::arg("dt"));

    py::class_<Transition>(m, "Transition")
        .def_readonly("t", &Transition::t)
        .def_readonly("x_t", &Transition::x_t)
        .def_readonly("mean", &Transition::mean)
        .def_readonly("sigma", &Transition::sigma)
        .def_readonly("dt", &Transition::dt)
        .def_readonly("x_next", &Transition::x_next);
    py::class_<Trajectory>(m, "Trajectory")
        .def_readonly("condition", &Trajectory::condition)
        .def_readonly("x_init", &Trajectory::x_init)
        .def_readonly("transitions", &Trajectory::transitions)
        .def_readonly("x_final", &Trajectory::x_final);
    m.def("chains", &chains, py::arg("trajectory"));

    m.def("ode_sample",
          py::overload_cast<const ParamVector&, int, const Schedule&, std::uint64_t>(&ode_sample),
          py::arg("params"), py::arg("c"), py::arg("schedule"), py::arg("seed"));
    m.def("sde_sample",
          py::overload_cast<const ParamVector&, int, const Schedule&, double, std::uint64_t>(
              &sde_sample),
          py::arg("params"), py::arg("c"), py::arg("schedule"), py::arg("a"), py::arg("seed"));
    m.def(
        "ode_sample_field",
        [](const std::function<Vec(const Vec&, double)>& field, int dim, int c,
           const Schedule& sched, std::uint64_t seed) {
            return ode_sample(field, dim, c, sched, seed);
        },
        py::arg("field"), py::arg("dim"), py::arg("c"), py::arg("schedule"), py::arg("seed"));
    m.def(
        "sde_sample_field",
        [](const std::function<Vec(const Vec&, double)>& field, int dim, int c,
           const Schedule& sched, double a, std::uint64_t seed) {
            return sde_sample(field, dim, c, sched, a, seed);
        },
        py::arg("field"), py::arg("dim"), py::arg("c"), py::arg("schedule"), py::arg("a"),
        py::arg("seed"));

    // ---- rewards ------------------------------------------------------------
    m.def("region_margin", &region_margin, py::arg("region"), py::arg("sample"), py::arg("c"));
    m.def(
        "qa_region_reward",
        [](const RingTask& region, double steepness, const Vec& sample, int c) {
            return qa_reward(region_scorer(region, steepness), sample, c);
        },
        py::arg("region"), py::arg("steepness"), py::arg("sample"), py::arg("c"));
    m.def(
        "ring_similarity",
        [](const RingTask& ring, const Vec& sample, int c) {
            return similarity_reward(ring_embedding(ring), sample, c);
        },
        py::arg("ring"), py::arg("sample"), py::arg("c"));

    py::class_<CalibrationReport>(m, "CalibrationReport")
        .def_readonly("lcc", &CalibrationReport::lcc)
        .def_readonly("srcc", &CalibrationReport::srcc)
        .def_readonly("ktau", &CalibrationReport::ktau)
        .def_readonly("n", &CalibrationReport::n);
    m.def("calibrate", &calibrate, py::arg("model_scores"), py::arg("reference_scores"));

    // ---- policy optimization pieces ------------------------------------------
    m.def("advantages", &advantages, py::arg("rewards"));
    m.def("step_kl", &step_kl, py::arg("mean_theta"), py::arg("mean_ref"), py::arg("sigma"),
          py::arg("dt"));
    m.def("clip_term", &clip_term, py::arg("ratio"), py::arg("advantage"), py::arg("clip_eps"));
    m.def("dpo_margin_loss", &dpo_margin_loss, py::arg("e_cur_w"), py::arg("e_ref_w"),
          py::arg("e_cur_l"), py::arg("e_ref_l"), py::arg("beta"));
}
