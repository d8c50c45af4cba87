#include "dqf/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dqf/bundle_io.hpp"
#include "dqf/core.hpp"
#include "dqf/csv.hpp"
#include "dqf/datagen.hpp"
#include "dqf/dqfnd.hpp"
#include "dqf/error.hpp"
#include "dqf/scoring.hpp"
#include "dqf/server.hpp"

#ifndef DQF_VERSION
#define DQF_VERSION "0.0.0"
#endif

namespace dqf::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
    return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

// Missing inputs are data errors, not usage errors.
class MissingFile : public Error {
public:
    explicit MissingFile(const std::string& path) : Error("input file not found: " + path) {}
};

void require_file(const std::string& path) {
    if (!fs::is_regular_file(path)) throw MissingFile(path);
}

std::string sibling_path(const std::string& path, const std::string& suffix) {
    fs::path p(path);
    return (p.parent_path() / (p.stem().string() + suffix)).string();
}

struct SimulateArgs {
    std::string scenario;
    std::uint64_t seed = 1;
    std::size_t n = 0;
    std::string output;
    std::string labels;
    bool list = false;
};

struct ComputeArgs {
    std::string input;
    std::string kernel;
    bool kernel_header = false;
    bool no_header = false;
    std::string id_column;
    std::string config;
    std::string anchor;
    std::vector<double> angles;
    std::size_t pairs = 0;
    std::size_t tips = 0;
    std::string g;
    double g_scale = 0.0;
    std::vector<double> g_bounds;
    std::string tip_sampling;
    std::uint64_t seed = 0;
    std::size_t delta_grid = 0;
    double smoothing = -1.0;
    bool no_zscale = false;
    bool skip_psd = false;
    unsigned threads = 0;
    std::string output = "bundle.json";
    std::string manifest;
    std::string from_manifest;
};

struct ScoreArgs {
    std::string bundle;
    std::string labels;
    double delta = 0.0;
    std::string view = "q_bar";
    std::size_t angle = 0;
    std::size_t top = 10;
    std::string output = "report.json";
};

struct ServeArgs {
    std::string bundle;
    std::string report;
    std::string static_dir;
    std::string host = "127.0.0.1";
    int port = 0;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
    if (a.list) {
        for (const auto& s : datagen::scenarios()) {
            out << std::left << std::setw(16) << s.name << " n=" << s.n << " D=" << s.ambient_dim
                << " d=" << s.intrinsic_dim << " noise=" << s.noise_sd << "  " << s.outlier << '\n';
        }
        return kExitOk;
    }
    if (a.scenario.empty()) {
        err << "simulate: a scenario name is required (see --list)\n";
        return kExitUsage;
    }
    Dataset ds;
    try {
        ds = datagen::generate(a.scenario, a.seed, a.n ? std::optional<std::size_t>(a.n) : std::nullopt);
    } catch (const std::invalid_argument& e) {
        err << "simulate: " << e.what() << '\n';
        return kExitUsage;
    }
    const std::string data_path = a.output.empty() ? a.scenario + ".csv" : a.output;
    const std::string labels_path = a.labels.empty() ? sibling_path(data_path, "_labels.csv") : a.labels;

    std::ostringstream data;
    data << "id";
    for (std::size_t c = 0; c < ds.dim(); ++c) data << ",x" << (c + 1);
    data << '\n';
    for (std::size_t r = 0; r < ds.size(); ++r) {
        data << csv::escape(ds.ids[r]);
        for (Eigen::Index c = 0; c < ds.coords.cols(); ++c) {
            data << ',' << csv::format_real(ds.coords(static_cast<Eigen::Index>(r), c));
        }
        data << '\n';
    }
    write_text(data_path, data.str());

    std::ostringstream labels;
    labels << "id,label\n";
    for (std::size_t r = 0; r < ds.size(); ++r) labels << csv::escape(ds.ids[r]) << ',' << (*ds.labels)[r] << '\n';
    write_text(labels_path, labels.str());

    out << "wrote " << data_path << " (" << ds.size() << " x " << ds.dim() << ") and " << labels_path << '\n';
    return kExitOk;
}

// Flags given on the command line override the config file.
Config resolve_config(const ComputeArgs& a, const CLI::App& sub) {
    Config cfg = a.config.empty() ? Config{} : load_config(a.config);
    auto given = [&](const char* name) { return sub.count(name) > 0; };
    if (given("--anchor")) cfg.anchor = parse_anchor(a.anchor);
    if (given("--angles")) cfg.angles = a.angles;
    if (given("--pairs")) cfg.n_pairs = a.pairs;
    if (given("--tips")) cfg.m_tips = a.tips;
    if (given("--g")) cfg.tip_distribution.variant = parse_tip_variant(a.g);
    if (given("--g-scale")) cfg.tip_distribution.scale = a.g_scale;
    if (given("--g-bounds")) {
        cfg.tip_distribution.lower = a.g_bounds.at(0);
        cfg.tip_distribution.upper = a.g_bounds.at(1);
    }
    if (given("--tip-sampling")) {
        if (a.tip_sampling == "quantile") {
            cfg.tip_sampling = TipSampling::quantile;
        } else if (a.tip_sampling == "monte-carlo" || a.tip_sampling == "monte_carlo") {
            cfg.tip_sampling = TipSampling::monte_carlo;
        } else {
            throw std::invalid_argument("unknown tip sampling: " + a.tip_sampling);
        }
    }
    if (given("--seed")) cfg.seed = a.seed;
    if (given("--delta-grid")) cfg.delta_grid_size = a.delta_grid;
    if (given("--smoothing")) cfg.smoothing_window_fraction = a.smoothing;
    cfg.validate();
    return cfg;
}

bool header_starts_with_id(const std::string& path) {
    std::ifstream in(path);
    std::string line;
    if (!std::getline(in, line)) return false;
    std::istringstream first(line);
    const auto row = csv::read(first);
    return !row.empty() && !row.front().empty() && row.front().front() == "id";
}

struct ComputeInputs {
    std::string data;
    std::string kernel;
    bool z_scale = true;
    bool has_header = true;
    bool kernel_header = false;
    std::string id_column;
    bool skip_psd = false;
};

int cmd_compute(ComputeArgs a, const CLI::App& sub, std::ostream& out, std::ostream& err) {
    ComputeInputs in;
    Config cfg;
    if (!a.from_manifest.empty()) {
        require_file(a.from_manifest);
        const json m = json::parse(read_text(a.from_manifest));
        const auto& inputs = m.at("inputs");
        in.data = inputs.value("data", std::string{});
        in.kernel = inputs.value("kernel", std::string{});
        const auto& o = m.at("options");
        in.z_scale = o.at("z_scale").get<bool>();
        in.has_header = o.at("has_header").get<bool>();
        in.kernel_header = o.at("kernel_header").get<bool>();
        in.id_column = o.at("id_column").get<std::string>();
        in.skip_psd = o.at("skip_psd_check").get<bool>();
        cfg = config_from_json(m.at("config"));
        cfg.validate();
    } else {
        in.data = a.input;
        in.kernel = a.kernel;
        in.z_scale = !a.no_zscale;
        in.has_header = !a.no_header;
        in.kernel_header = a.kernel_header;
        in.id_column = a.id_column;
        in.skip_psd = a.skip_psd;
        try {
            cfg = resolve_config(a, sub);
        } catch (const ValidationError& e) {
            err << "compute: invalid configuration: " << e.what() << '\n';
            return kExitUsage;
        }
    }
    if (in.data.empty() == in.kernel.empty()) {
        err << "compute: give exactly one of a data CSV or --kernel K.csv\n";
        return kExitUsage;
    }
    const bool kernel_mode = !in.kernel.empty();
    if (kernel_mode && !in.z_scale) {
        err << "warning: --no-zscale has no effect with --kernel (Gram input is never scaled)\n";
    }
    if (kernel_mode) in.z_scale = false;

    const auto t_load = Clock::now();
    const std::string input_path = kernel_mode ? in.kernel : in.data;
    require_file(input_path);
    std::optional<InnerProductView> view;
    std::vector<std::string> ids;
    Dataset prepared;
    if (kernel_mode) {
        GramMatrix g = load_gram(in.kernel, in.kernel_header, 1e-8,
                                 in.skip_psd ? 0 : std::size_t{2000});
        ids = g.ids.empty() ? default_ids(g.size()) : g.ids;
        view = InnerProductView::from_gram(std::move(g.entries));
    } else {
        LoadOptions lo;
        lo.has_header = in.has_header;
        if (!in.id_column.empty()) {
            lo.id_column = in.id_column;
        } else if (in.has_header && header_starts_with_id(in.data)) {
            lo.id_column = "id";
            in.id_column = "id";
        }
        Dataset ds = load_dataset(in.data, lo);
        prepared = in.z_scale ? z_scale(ds) : std::move(ds);
        if (!prepared.constant_columns.empty()) {
            err << "warning: " << prepared.constant_columns.size() << " constant column(s) set to 0\n";
        }
        ids = prepared.ids;
        view = InnerProductView::from_coordinates(prepared.coords);
    }
    const double load_ms = elapsed_ms(t_load);

    const auto t_compute = Clock::now();
    ComputeOptions copts;
    copts.threads = a.threads;
    DQFBundle bundle = compute_bundle(*view, ids, cfg, copts);
    bundle.flags.z_scaled = prepared.scaled;
    bundle.flags.constant_columns = prepared.constant_columns;
    const double compute_ms = elapsed_ms(t_compute);

    const auto t_write = Clock::now();
    const std::string text = serialize_bundle(bundle);
    write_text(a.output, text);
    const std::string digest = sha256_hex(text);
    const double write_ms = elapsed_ms(t_write);

    const std::string manifest_path = a.manifest.empty() ? sibling_path(a.output, ".manifest.json") : a.manifest;
    json inputs = {{kernel_mode ? "kernel" : "data", input_path}, {"sha256", sha256_hex(read_text(input_path))}};
    json manifest = {
        {"tool", "dqf"},
        {"version", DQF_VERSION},
        {"mode", kernel_mode ? "kernel" : "coordinates"},
        {"inputs", inputs},
        {"options",
         {{"z_scale", in.z_scale},
          {"has_header", in.has_header},
          {"kernel_header", in.kernel_header},
          {"id_column", in.id_column},
          {"skip_psd_check", in.skip_psd}}},
        {"config", to_json(cfg)},
        {"seed", cfg.seed},
        {"threads", a.threads},
        {"outputs", {{"bundle", a.output}, {"bundle_sha256", digest}}},
        {"timings_ms", {{"load", load_ms}, {"compute", compute_ms}, {"write", write_ms}}},
    };
    write_text(manifest_path, manifest.dump(2) + "\n");

    out << "bundle " << a.output << " sha256 " << digest << '\n';
    if (!bundle.flags.excluded.empty()) {
        err << "warning: " << bundle.flags.excluded.size() << " observation(s) had no usable pair\n";
    }
    return kExitOk;
}

std::string fixed(double v, int digits) {
    if (!std::isfinite(v)) return "NA";
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

int cmd_score(const ScoreArgs& a, const CLI::App& sub, std::ostream& out, std::ostream& err) {
    require_file(a.bundle);
    const DQFBundle bundle = read_bundle(a.bundle);
    ReportOptions ro;
    if (a.view == "q_bar") {
        ro.view = ScoreView::q_bar;
    } else if (a.view == "q_tilde") {
        ro.view = ScoreView::q_tilde;
    } else {
        err << "score: --view must be q_bar or q_tilde\n";
        return kExitUsage;
    }
    if (sub.count("--angle")) {
        if (a.angle >= bundle.angles.size()) {
            err << "score: --angle must be below " << bundle.angles.size() << '\n';
            return kExitUsage;
        }
        ro.angle = a.angle;
    }
    if (sub.count("--delta")) ro.delta = a.delta;
    std::optional<std::vector<int>> labels;
    if (!a.labels.empty()) {
        require_file(a.labels);
        labels = load_labels(a.labels, bundle.ids);
    }
    AnomalyReport rep;
    try {
        rep = make_report(bundle, ro, labels);
    } catch (const DomainError& e) {
        err << "score: " << e.what() << '\n';
        return kExitUsage;
    }
    write_text(a.output, to_json(rep).dump(2) + "\n");

    for (const auto& w : rep.warnings) err << "warning: " << w << '\n';
    out << "method " << rep.method << ", view " << rep.view << ", alpha " << fixed(rep.alpha, 4) << ", delta* "
        << fixed(rep.delta_star, 4) << '\n';
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < rep.ranks.size(); ++i) {
        if (rep.ranks[i] > 0) order.push_back(i);
    }
    std::sort(order.begin(), order.end(), [&](auto x, auto y) { return rep.ranks[x] < rep.ranks[y]; });
    out << std::left << std::setw(6) << "rank" << std::setw(14) << "id" << std::setw(12) << "score"
        << std::setw(12) << "zero_int" << (labels ? "label" : "") << '\n';
    for (std::size_t k = 0; k < std::min(a.top, order.size()); ++k) {
        const auto i = order[k];
        out << std::left << std::setw(6) << rep.ranks[i] << std::setw(14) << rep.ids[i] << std::setw(12)
            << fixed(rep.scores[i], 6) << std::setw(12) << fixed(rep.zero_interval_mean[i], 4);
        if (labels) out << (*labels)[i];
        out << '\n';
    }
    if (rep.auc) out << "AUC " << fixed(*rep.auc, 4) << '\n';
    out << "report " << a.output << '\n';
    return kExitOk;
}

int cmd_serve(const ServeArgs& a, std::ostream& out, std::ostream& err) {
    require_file(a.bundle);
    std::string bundle_bytes = read_text(a.bundle);
    try {
        (void)bundle_from_json(json::parse(bundle_bytes));
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed bundle: ") + e.what());
    }
    std::optional<std::string> report;
    if (!a.report.empty()) {
        require_file(a.report);
        report = read_text(a.report);
    }
    std::optional<std::string> assets;
    if (!a.static_dir.empty()) {
        if (!fs::is_directory(a.static_dir)) throw MissingFile(a.static_dir);
        assets = a.static_dir;
    }
    BundleServer server(std::move(bundle_bytes), std::move(report), assets);
    const int port = a.port > 0 ? a.port : default_port();
    if (server.bind(a.host, port) < 0) {
        err << "serve: cannot listen on " << a.host << ':' << port << " (port in use?)\n";
        return 1;
    }
    out << "serving " << a.bundle << " on http://" << a.host << ':' << port << '\n' << std::flush;
    server.serve();
    return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Depth quantile functions for anomaly detection"};
    app.name("dqf");
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Write a simulated scenario as data and label CSVs");
    simulate->add_option("scenario", sim.scenario, "Scenario name");
    simulate->add_option("--seed", sim.seed, "Random seed");
    simulate->add_option("--n", sim.n, "Sample size (holey-2d only)");
    simulate->add_option("-o,--output", sim.output, "Data CSV path");
    simulate->add_option("--labels", sim.labels, "Labels CSV path");
    simulate->add_flag("--list", sim.list, "List scenarios");

    ComputeArgs comp;
    auto* compute = app.add_subcommand("compute", "Compute a DQF bundle from a data CSV or a Gram matrix");
    compute->add_option("data", comp.input, "Data CSV (rows are observations)");
    compute->add_option("--kernel", comp.kernel, "Square Gram matrix CSV");
    compute->add_flag("--kernel-header", comp.kernel_header, "Gram CSV has a header row of ids");
    compute->add_flag("--no-header", comp.no_header, "Data CSV has no header row");
    compute->add_option("--id-column", comp.id_column, "Id column name (default: 'id' when present)");
    compute->add_option("--config", comp.config, "Config JSON file");
    compute->add_option("--anchor", comp.anchor, "midpoint | self");
    compute->add_option("--angles", comp.angles, "Opening angles in radians")->delimiter(',');
    compute->add_option("--pairs", comp.pairs, "Pairs per observation");
    compute->add_option("--tips", comp.tips, "Tips per pair");
    compute->add_option("--g", comp.g, "normal | uniform-range | uniform-robust | uniform-fixed");
    compute->add_option("--g-scale", comp.g_scale, "Scale constant of the adaptive tip laws");
    compute->add_option("--g-bounds", comp.g_bounds, "a,b for uniform-fixed")->delimiter(',')->expected(2);
    compute->add_option("--tip-sampling", comp.tip_sampling, "quantile | monte-carlo");
    compute->add_option("--seed", comp.seed, "Random seed");
    compute->add_option("--delta-grid", comp.delta_grid, "Delta grid size (default: tips)");
    compute->add_option("--smoothing", comp.smoothing, "Smoothing window fraction");
    compute->add_flag("--no-zscale", comp.no_zscale, "Skip z-scaling of the coordinates");
    compute->add_flag("--skip-psd-check", comp.skip_psd, "Skip the Gram eigenvalue check");
    compute->add_option("--threads", comp.threads, "Worker threads (0 = all cores)");
    compute->add_option("-o,--output", comp.output, "Bundle path");
    compute->add_option("--manifest", comp.manifest, "Manifest path (default: <bundle>.manifest.json)");
    compute->add_option("--from-manifest", comp.from_manifest, "Re-run the inputs and config of a manifest");

    ScoreArgs sc;
    auto* score = app.add_subcommand("score", "Rank observations from a bundle");
    score->add_option("bundle", sc.bundle, "Bundle JSON")->required();
    score->add_option("--labels", sc.labels, "id,label CSV (1 = anomaly)");
    score->add_option("--delta", sc.delta, "Score at the nearest grid delta instead of the first unique argmin");
    score->add_option("--view", sc.view, "q_bar | q_tilde");
    score->add_option("--angle", sc.angle, "Angle block index (default: closest to pi/4)");
    score->add_option("--top", sc.top, "Rows in the printed table");
    score->add_option("-o,--output", sc.output, "Report path");

    ServeArgs sv;
    auto* serve = app.add_subcommand("serve", "Serve a bundle (and report) over HTTP");
    serve->add_option("bundle", sv.bundle, "Bundle JSON")->required();
    serve->add_option("--report", sv.report, "Report JSON");
    serve->add_option("--static", sv.static_dir, "Directory of UI assets");
    serve->add_option("--host", sv.host, "Bind address");
    serve->add_option("--port", sv.port, "Port (default: $DQF_PORT or 8765)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(sim, out, err);
        if (compute->parsed()) return cmd_compute(comp, *compute, out, err);
        if (score->parsed()) return cmd_score(sc, *score, out, err);
        if (serve->parsed()) return cmd_serve(sv, out, err);
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}

}  // namespace dqf::cli
