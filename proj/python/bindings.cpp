#include "tempus/aggregate.hpp"
#include "tempus/cli.hpp"
#include "tempus/core.hpp"
#include "tempus/errors.hpp"
#include "tempus/forecasters.hpp"
#include "tempus/io.hpp"
#include "tempus/manifest.hpp"
#include "tempus/metrics.hpp"
#include "tempus/synth.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace tempus;

namespace {

// Accepts a 1-D array as a single variate.
Matrix as_matrix(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() == 1) {
        Matrix m(1, a.shape(0));
        for (py::ssize_t t = 0; t < a.shape(0); ++t) m(0, t) = a.at(t);
        return m;
    }
    if (a.ndim() != 2) throw ShapeMismatch("expected a 1-D or 2-D array");
    Matrix m(a.shape(0), a.shape(1));
    for (py::ssize_t i = 0; i < a.shape(0); ++i)
        for (py::ssize_t t = 0; t < a.shape(1); ++t) m(i, t) = a.at(i, t);
    return m;
}

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

forecasters::Params to_params(const std::map<std::string, double>& values) {
    forecasters::Params p;
    for (const auto& [k, v] : values) p.set(k, v);
    return p;
}

aggregate::ErrorPivot to_pivot(const std::vector<std::vector<std::optional<double>>>& cells,
                               const std::vector<std::string>& models,
                               const std::vector<std::string>& tasks, const std::string& metric) {
    std::vector<aggregate::Cell> flat;
    for (const auto& row : cells) {
        if (row.size() != tasks.size()) throw ShapeMismatch("every pivot row needs one cell per task");
        flat.insert(flat.end(), row.begin(), row.end());
    }
    return aggregate::ErrorPivot(metric, models, tasks, std::move(flat));
}

py::dict window_dict(const Window& w) {
    py::dict d;
    d["context"] = py::make_tuple(w.context_start, w.context_end);
    d["eval"] = py::make_tuple(w.eval_start, w.eval_end);
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Forecasting benchmark harness: metrics, forecasters, generators and aggregation";
    m.attr("__version__") = std::string(io::tool_version());

    static py::exception<Error> error(m, "TempusError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            PyErr_SetString(error.ptr(), (e.code() + ": " + e.what()).c_str());
        }
    });

    m.def("mae", [](const Array& f, const Array& y) { return metrics::mae(as_matrix(f), as_matrix(y)); },
          py::arg("forecast"), py::arg("actual"));
    m.def("mse", [](const Array& f, const Array& y) { return metrics::mse(as_matrix(f), as_matrix(y)); },
          py::arg("forecast"), py::arg("actual"));
    m.def("rmse", [](const Array& f, const Array& y) { return metrics::rmse(as_matrix(f), as_matrix(y)); },
          py::arg("forecast"), py::arg("actual"));
    m.def("mape", [](const Array& f, const Array& y) { return metrics::mape(as_matrix(f), as_matrix(y)); },
          py::arg("forecast"), py::arg("actual"));
    m.def("mase",
          [](const Array& f, const Array& y, const Array& c) {
              return metrics::mase(as_matrix(f), as_matrix(y), as_matrix(c));
          },
          py::arg("forecast"), py::arg("actual"), py::arg("context"));
    m.def("metric",
          [](const std::string& name, const Array& f, const Array& y, const Array& c) {
              return metrics::try_compute(metrics::parse_metric(name), as_matrix(f), as_matrix(y),
                                          as_matrix(c));
          },
          py::arg("name"), py::arg("forecast"), py::arg("actual"), py::arg("context"),
          "Metric by name; None where it is undefined.");

    m.def("forecast",
          [](const std::string& model, const std::map<std::string, double>& params,
             const Array& context, std::size_t horizon) -> Matrix {
              return forecasters::forecast({model, to_params(params)}, as_matrix(context), horizon)
                  .values();
          },
          py::arg("model"), py::arg("params"), py::arg("context"), py::arg("horizon"));
    m.def("native_families", &forecasters::native_families);

    m.def("generate",
          [](const std::string& family, std::size_t num_points, double noise_scale, double period,
             std::uint64_t seed, std::int64_t start_time) {
              synth::GenSpec s;
              s.family = synth::parse_family(family);
              s.num_points = num_points;
              s.noise_scale = noise_scale;
              s.period = period;
              s.seed = seed;
              s.start_time = start_time;
              const auto g = synth::generate(s);
              py::dict d;
              d["t"] = g.t;
              d["y"] = g.y;
              d["y_base"] = g.y_base;
              d["alpha_drawn"] = g.alpha_drawn;
              return d;
          },
          py::arg("family"), py::arg("num_points"), py::arg("noise_scale") = 0.0,
          py::arg("period") = 1.0, py::arg("seed") = 0, py::arg("start_time") = 0);

    m.def("plan_windows",
          [](std::size_t length, std::size_t context_len, std::size_t horizon, std::size_t n_tune,
             std::size_t n_test) {
              const WindowPlan plan = plan_windows(length, context_len, horizon, n_tune, n_test);
              py::list tune, test;
              for (const auto& w : plan.tune_windows) tune.append(window_dict(w));
              for (const auto& w : plan.test_windows) test.append(window_dict(w));
              py::dict d;
              d["tune"] = tune;
              d["test"] = test;
              d["stride"] = plan.stride;
              return d;
          },
          py::arg("length"), py::arg("context_len"), py::arg("horizon"),
          py::arg("n_tune") = kDefaultTuneWindows, py::arg("n_test") = kDefaultTestWindows);

    m.def("win_rate",
          [](const std::vector<std::vector<std::optional<double>>>& cells,
             const std::vector<std::string>& models, const std::vector<std::string>& tasks,
             const std::string& model) {
              return aggregate::win_rate(to_pivot(cells, models, tasks, "E"), model).value;
          },
          py::arg("cells"), py::arg("models"), py::arg("tasks"), py::arg("model"));
    m.def("skill_score",
          [](const std::vector<std::vector<std::optional<double>>>& cells,
             const std::vector<std::string>& models, const std::vector<std::string>& tasks,
             const std::string& model, const std::string& baseline) {
              return aggregate::skill_score(to_pivot(cells, models, tasks, "E"), model, baseline).value;
          },
          py::arg("cells"), py::arg("models"), py::arg("tasks"), py::arg("model"),
          py::arg("baseline") = "seasonal_naive");
    m.def("aggregate",
          [](const std::vector<std::vector<std::optional<double>>>& cells,
             const std::vector<std::string>& models, const std::vector<std::string>& tasks,
             const std::string& baseline) {
              const auto report =
                  aggregate::aggregate_all(to_pivot(cells, models, tasks, "E"), baseline);
              py::dict by_model;
              for (const auto& s : report.models) {
                  py::dict d;
                  d["win_rate"] = s.win_rate;
                  d["skill_score"] = s.skill_score;
                  by_model[py::str(s.model)] = d;
              }
              py::dict out;
              out["models"] = by_model;
              out["ranking"] = report.ranking;
              return out;
          },
          py::arg("cells"), py::arg("models"), py::arg("tasks"),
          py::arg("baseline") = "seasonal_naive");

    m.def("run_cli",
          [](const std::vector<std::string>& args) {
              std::ostringstream out, err;
              int code;
              {
                  py::gil_scoped_release release;
                  code = cli::run(args, out, err);
              }
              return py::make_tuple(code, out.str(), err.str());
          },
          py::arg("args"), "Runs one command line in-process; returns (exit_code, stdout, stderr).");
}
