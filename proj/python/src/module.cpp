#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dqf/bundle_io.hpp"
#include "dqf/core.hpp"
#include "dqf/datagen.hpp"
#include "dqf/dqf1d.hpp"
#include "dqf/dqfnd.hpp"
#include "dqf/error.hpp"
#include "dqf/geometry.hpp"
#include "dqf/scoring.hpp"

namespace py = pybind11;

namespace {

dqf::Config parse_config(const std::string& config_json) {
    if (config_json.empty()) return dqf::Config{};
    return dqf::config_from_json(nlohmann::json::parse(config_json));
}

std::vector<std::string> ids_or_default(std::optional<std::vector<std::string>> ids, std::size_t n) {
    if (!ids) return dqf::default_ids(n);
    if (ids->size() != n) throw std::invalid_argument("ids: expected one id per row");
    return std::move(*ids);
}

std::string compute_coords(const dqf::Matrix& x, const std::string& config_json, bool z_scale,
                           std::optional<std::vector<std::string>> ids, unsigned threads) {
    dqf::Dataset ds;
    ds.ids = ids_or_default(std::move(ids), static_cast<std::size_t>(x.rows()));
    ds.coords = x;
    ds.validate();
    const auto cfg = parse_config(config_json);
    dqf::ComputeOptions opts;
    opts.threads = threads;
    py::gil_scoped_release release;
    return dqf::serialize_bundle(dqf::compute_bundle(ds, cfg, z_scale, opts));
}

std::string compute_gram(const dqf::Matrix& k, const std::string& config_json,
                         std::optional<std::vector<std::string>> ids, bool check_psd, unsigned threads) {
    dqf::GramMatrix g;
    g.entries = k;
    g.validate(check_psd);
    auto row_ids = ids_or_default(std::move(ids), static_cast<std::size_t>(k.rows()));
    const auto cfg = parse_config(config_json);
    dqf::ComputeOptions opts;
    opts.threads = threads;
    py::gil_scoped_release release;
    return dqf::serialize_bundle(
        dqf::compute_bundle(dqf::InnerProductView::from_gram(k), std::move(row_ids), cfg, opts));
}

std::string report(const std::string& bundle_json, std::optional<std::vector<int>> labels, std::optional<double> delta,
                   const std::string& view, std::optional<std::size_t> angle) {
    const auto bundle = dqf::bundle_from_json(nlohmann::json::parse(bundle_json));
    dqf::ReportOptions ro;
    ro.delta = delta;
    ro.angle = angle;
    if (view == "q_tilde") {
        ro.view = dqf::ScoreView::q_tilde;
    } else if (view != "q_bar") {
        throw std::invalid_argument("view must be q_bar or q_tilde");
    }
    return dqf::to_json(dqf::make_report(bundle, ro, labels)).dump();
}

py::tuple simulate(const std::string& name, std::uint64_t seed, std::optional<std::size_t> n) {
    auto ds = dqf::datagen::generate(name, seed, n);
    return py::make_tuple(ds.coords, ds.labels.value_or(std::vector<int>{}), ds.ids);
}

py::tuple rank(const dqf::Matrix& values, const std::vector<double>& grid) {
    const auto r = dqf::rank_first_unique_argmin(values, grid);
    return py::make_tuple(r.ranks, r.scores, r.delta_star, r.fallback);
}

py::tuple dqf_1d(std::vector<double> sample, double x, const std::vector<double>& tips, std::size_t grid_size) {
    const dqf::Sample1D s(std::move(sample));
    const auto grid = dqf::regular_delta_grid(grid_size == 0 ? tips.size() : grid_size);
    const auto c = dqf::dqf_1d(s, x, tips, grid);
    return py::make_tuple(c.delta_grid, c.q);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Data depth quantile functions: compiled core";

    auto base = py::register_exception<dqf::Error>(m, "DqfError", PyExc_ValueError);
    py::register_exception<dqf::UndefinedAucError>(m, "UndefinedAucError", base.ptr());

    m.def("compute_bundle", &compute_coords, py::arg("x"), py::arg("config_json") = "", py::arg("z_scale") = true,
          py::arg("ids") = py::none(), py::arg("threads") = 0u, "Bundle JSON text for an n x d coordinate matrix.");
    m.def("compute_bundle_gram", &compute_gram, py::arg("k"), py::arg("config_json") = "", py::arg("ids") = py::none(),
          py::arg("check_psd") = true, py::arg("threads") = 0u, "Bundle JSON text for an n x n Gram matrix.");
    m.def("report", &report, py::arg("bundle_json"), py::arg("labels") = py::none(), py::arg("delta") = py::none(),
          py::arg("view") = "q_bar", py::arg("angle") = py::none(), "Report JSON text for a bundle.");
    m.def("rank_first_unique_argmin", &rank, py::arg("values"), py::arg("delta_grid"),
          "(ranks, scores, delta_star, fallback); ranks are 1-based, 0 for excluded rows.");
    m.def("auc", [](const std::vector<double>& s, const std::vector<int>& y) { return dqf::auc(s, y); }, py::arg("scores"), py::arg("labels"), "AUC where a lower score means anomaly.");
    m.def("simulate", &simulate, py::arg("name"), py::arg("seed") = 1, py::arg("n") = py::none(),
          "(coords, labels, ids) for a named scenario.");
    m.def("scenarios", [] {
        std::vector<std::string> names;
        for (const auto& s : dqf::datagen::scenarios()) names.push_back(s.name);
        return names;
    });
    m.def("dqf_1d", &dqf_1d, py::arg("sample"), py::arg("x"), py::arg("tips"), py::arg("grid_size") = 0,
          "(delta_grid, q) of the empirical one-dimensional DQF at x.");
    m.def("gram_from_coordinates", &dqf::gram_from_coordinates, py::arg("x"));
    m.def("sha256_hex", [](const py::bytes& b) { return dqf::sha256_hex(std::string(b)); });
}
