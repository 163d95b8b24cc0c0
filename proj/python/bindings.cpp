#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include <nlohmann/json.hpp>

#include "empo2/cli.hpp"
#include "empo2/env.hpp"
#include "empo2/memory.hpp"
#include "empo2/optimizer.hpp"
#include "empo2/trainer.hpp"

namespace py = pybind11;
using namespace empo2;

namespace {

py::dict summary_dict(const EvalSummary& s) {
  py::dict d;
  d["mean_return"] = s.mean_return;
  d["median_return"] = s.median_return;
  d["success_rate"] = s.success_rate;
  d["returns"] = s.returns;
  return d;
}

TrainConfig config_from(const py::dict& overrides) {
  TrainConfig cfg;
  for (auto [k, v] : overrides) {
    std::string value = py::isinstance<py::bool_>(v) ? (v.cast<bool>() ? "true" : "false")
                                                     : py::str(v).cast<std::string>();
    cfg.set(k.cast<std::string>(), value);
  }
  cfg.validate();
  return cfg;
}

ActionSelect select_from(const std::string& s) {
  if (s == "greedy") return ActionSelect::kGreedy;
  if (s == "sample") return ActionSelect::kSample;
  throw InvalidArgument("select must be greedy or sample, got " + s);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Deterministic EMPO2 / GRPO trainer on text-world simulators";

  // Translators are tried newest first, so the base class goes first.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<NonFiniteError>(m, "NonFiniteError", PyExc_ArithmeticError);

  m.def("builtin_families", &builtin_families);

  py::class_<Observation>(m, "Observation")
      .def_readonly("tokens", &Observation::tokens)
      .def_readonly("room_id", &Observation::room_id)
      .def_readonly("milestone_flags", &Observation::milestone_flags)
      .def("__repr__", [](const Observation& o) { return "<Observation '" + join(o.tokens) + "'>"; });

  py::class_<Environment>(m, "Environment")
      .def(py::init([](const std::string& family, std::uint64_t variant) {
             return make_env(make_task(family, variant));
           }),
           py::arg("family"), py::arg("variant"))
      .def("reset", &Environment::reset)
      .def("observation", &Environment::observation)
      .def("admissible_actions",
           [](const Environment& e) {
             std::vector<std::pair<int, std::string>> out;
             for (const auto& a : e.admissible_actions()) out.emplace_back(a.id.value, join(a.tokens));
             return out;
           })
      .def("step",
           [](Environment& e, int action) {
             const auto o = e.step(ActionId{action});
             return py::make_tuple(o.reward, o.next_obs, o.done, o.success);
           })
      .def_property_readonly("task", [](const Environment& e) { return join(e.task().description); })
      .def_property_readonly("done", &Environment::done)
      .def_property_readonly("success", &Environment::success)
      .def_property_readonly("steps_taken", &Environment::steps_taken)
      .def_property_readonly("episode_return", &Environment::episode_return)
      .def("missing_milestones", &Environment::missing_milestones);

  py::class_<PolicyParams>(m, "PolicyParams")
      .def_readonly("w", &PolicyParams::w)
      .def_readonly("v", &PolicyParams::v)
      .def_readonly("version", &PolicyParams::version)
      .def_static("load", py::overload_cast<const std::filesystem::path&>(&load_policy))
      .def("save", [](const PolicyParams& p, const std::filesystem::path& path) { save_policy(p, path); });

  py::class_<Trainer>(m, "Trainer")
      .def(py::init([](const py::dict& overrides) { return Trainer(config_from(overrides)); }),
           py::arg("config") = py::dict())
      .def_static("resume", &Trainer::resume, py::arg("checkpoint_dir"))
      .def("_step_json", [](Trainer& t) { return t.step().to_json().dump(); })
      .def("save_checkpoint", &Trainer::save_checkpoint)
      .def_property_readonly("iteration", &Trainer::iteration)
      .def_property_readonly("params", &Trainer::params)
      .def("config", [](const Trainer& t) {
        py::dict d;
        for (const auto& [k, v] : t.config().to_key_values()) d[py::str(k)] = v;
        return d;
      });

  m.def(
      "evaluate",
      [](const PolicyParams& params, const std::string& family, const std::vector<std::uint64_t>& variants,
         int episodes, const std::string& select, std::uint64_t seed) {
        EvalOptions opt;
        opt.episodes_per_variant = episodes;
        opt.select = select_from(select);
        opt.seed = seed;
        return summary_dict(evaluate(params, family, variants, opt));
      },
      py::arg("params"), py::arg("family"), py::arg("variants"), py::arg("episodes") = 1,
      py::arg("select") = "greedy", py::arg("seed") = 0);

  m.def(
      "adapt",
      [](const PolicyParams& params, const std::string& family, const std::vector<std::uint64_t>& variants,
         int trials, int episodes, const std::string& select, std::uint64_t seed) {
        AdaptOptions opt;
        opt.trials = trials;
        opt.episodes_per_variant = episodes;
        opt.select = select_from(select);
        opt.seed = seed;
        py::list out;
        for (const auto& s : adapt(params, family, variants, opt)) out.append(summary_dict(s));
        return out;
      },
      py::arg("params"), py::arg("family"), py::arg("variants"), py::arg("trials") = 10,
      py::arg("episodes") = 1, py::arg("select") = "sample", py::arg("seed") = 0);

  m.def("embed", &embed);
  m.def("group_advantages", [](const std::vector<double>& r, double eps) { return group_advantages(r, eps); },
        py::arg("returns"), py::arg("eps_std") = 1e-8);

  py::class_<Tip>(m, "Tip")
      .def(py::init([](std::string content, std::vector<double> key, double score) {
             return Tip{std::move(content), std::move(key), score, 0};
           }),
           py::arg("content"), py::arg("key"), py::arg("score"))
      .def_readonly("content", &Tip::content)
      .def_readonly("key", &Tip::key)
      .def_readonly("score", &Tip::score)
      .def_readonly("seq", &Tip::seq);

  py::class_<TipMemory>(m, "TipMemory")
      .def(py::init<std::size_t, std::size_t>(), py::arg("capacity") = kTipCapacity, py::arg("dim") = kEmbedDim)
      .def("add", &TipMemory::add)
      .def("retrieve", [](const TipMemory& mem, const std::vector<double>& key) { return mem.retrieve(key); })
      .def("reset", &TipMemory::reset)
      .def("__len__", &TipMemory::size);

  py::class_<NoveltyStore>(m, "NoveltyStore")
      .def(py::init<double>(), py::arg("threshold") = 0.95)
      .def("visit", [](NoveltyStore& s, const std::vector<double>& key) { return s.visit(key); })
      .def("__len__", [](const NoveltyStore& s) { return s.entries().size(); });

  m.def(
      "cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"));
}
