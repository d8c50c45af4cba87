#include "dqf/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <Eigen/Eigenvalues>

#include "dqf/csv.hpp"
#include "dqf/error.hpp"
#include "dqf/rng.hpp"

namespace dqf {

void TipDistributionSpec::validate() const {
    if (!(scale > 0.0) || !std::isfinite(scale)) {
        throw std::invalid_argument("tip distribution scale must be positive");
    }
    if (variant == TipVariant::uniform_fixed && lower.has_value() != upper.has_value()) {
        throw std::invalid_argument("uniform_fixed needs both bounds or neither");
    }
    if (lower && upper && !(*lower < *upper)) {
        throw std::invalid_argument("uniform_fixed requires lower < upper");
    }
}

void Config::validate() const {
    if (angles.empty()) {
        throw std::invalid_argument("at least one opening angle is required");
    }
    for (double a : angles) {
        if (!(a > 0.0 && a < std::numbers::pi / 2)) {
            throw std::invalid_argument("opening angles must lie in (0, pi/2)");
        }
    }
    if (n_pairs < 1) throw std::invalid_argument("n_pairs must be at least 1");
    if (m_tips < 4) throw std::invalid_argument("m_tips must be at least 4");
    if (!(smoothing_window_fraction >= 0.0 && smoothing_window_fraction <= 0.5)) {
        throw std::invalid_argument("smoothing_window_fraction must lie in [0, 0.5]");
    }
    tip_distribution.validate();
}

std::string to_string(AnchorKind kind) {
    return kind == AnchorKind::midpoint ? "midpoint" : "self";
}

std::string to_string(TipVariant variant) {
    switch (variant) {
        case TipVariant::uniform_range: return "uniform_range";
        case TipVariant::uniform_robust: return "uniform_robust";
        case TipVariant::uniform_fixed: return "uniform_fixed";
        case TipVariant::normal_adaptive: return "normal_adaptive";
    }
    return "normal_adaptive";
}

AnchorKind parse_anchor(const std::string& s) {
    if (s == "midpoint") return AnchorKind::midpoint;
    if (s == "self") return AnchorKind::self;
    throw std::invalid_argument("unknown anchor kind: " + s);
}

TipVariant parse_tip_variant(const std::string& s) {
    if (s == "uniform_range" || s == "uniform-range") return TipVariant::uniform_range;
    if (s == "uniform_robust" || s == "uniform-robust") return TipVariant::uniform_robust;
    if (s == "uniform_fixed" || s == "uniform-fixed") return TipVariant::uniform_fixed;
    if (s == "normal_adaptive" || s == "normal-adaptive" || s == "normal") {
        return TipVariant::normal_adaptive;
    }
    throw std::invalid_argument("unknown tip distribution: " + s);
}

nlohmann::json to_json(const Config& cfg) {
    nlohmann::json g = {
        {"variant", to_string(cfg.tip_distribution.variant)},
        {"scale", cfg.tip_distribution.scale},
    };
    if (cfg.tip_distribution.lower) g["lower"] = *cfg.tip_distribution.lower;
    if (cfg.tip_distribution.upper) g["upper"] = *cfg.tip_distribution.upper;
    return {
        {"angles", cfg.angles},
        {"n_pairs", cfg.n_pairs},
        {"m_tips", cfg.m_tips},
        {"anchor", to_string(cfg.anchor)},
        {"tip_distribution", g},
        {"tip_sampling", cfg.tip_sampling == TipSampling::quantile ? "quantile" : "monte_carlo"},
        {"seed", cfg.seed},
        {"delta_grid_size", cfg.grid_size()},
        {"smoothing_window_fraction", cfg.smoothing_window_fraction},
        {"winsorize_per_side", cfg.winsorize_per_side},
    };
}

Config config_from_json(const nlohmann::json& j) {
    static const std::set<std::string> known = {
        "angles", "n_pairs", "m_tips", "anchor", "tip_distribution", "tip_sampling", "seed",
        "delta_grid_size", "smoothing_window_fraction", "winsorize_per_side",
        "normal_variance_scale"};
    if (!j.is_object()) throw ParseError("config must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (!known.contains(key)) throw ParseError("unknown config key: " + key);
    }
    Config cfg;
    try {
        if (j.contains("angles")) cfg.angles = j.at("angles").get<std::vector<double>>();
        if (j.contains("n_pairs")) cfg.n_pairs = j.at("n_pairs").get<std::size_t>();
        if (j.contains("m_tips")) cfg.m_tips = j.at("m_tips").get<std::size_t>();
        if (j.contains("anchor")) cfg.anchor = parse_anchor(j.at("anchor").get<std::string>());
        if (j.contains("tip_distribution")) {
            const auto& g = j.at("tip_distribution");
            if (g.is_string()) {
                cfg.tip_distribution.variant = parse_tip_variant(g.get<std::string>());
            } else {
                if (g.contains("variant")) {
                    cfg.tip_distribution.variant = parse_tip_variant(g.at("variant").get<std::string>());
                }
                if (g.contains("scale")) cfg.tip_distribution.scale = g.at("scale").get<double>();
                if (g.contains("lower")) cfg.tip_distribution.lower = g.at("lower").get<double>();
                if (g.contains("upper")) cfg.tip_distribution.upper = g.at("upper").get<double>();
            }
        }
        if (j.contains("normal_variance_scale")) {
            cfg.tip_distribution.scale = j.at("normal_variance_scale").get<double>();
        }
        if (j.contains("tip_sampling")) {
            const auto s = j.at("tip_sampling").get<std::string>();
            if (s == "quantile") {
                cfg.tip_sampling = TipSampling::quantile;
            } else if (s == "monte_carlo") {
                cfg.tip_sampling = TipSampling::monte_carlo;
            } else {
                throw ParseError("unknown tip_sampling: " + s);
            }
        }
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("delta_grid_size")) cfg.delta_grid_size = j.at("delta_grid_size").get<std::size_t>();
        if (j.contains("smoothing_window_fraction")) {
            cfg.smoothing_window_fraction = j.at("smoothing_window_fraction").get<double>();
        }
        if (j.contains("winsorize_per_side")) {
            cfg.winsorize_per_side = j.at("winsorize_per_side").get<std::size_t>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ParseError(std::string("malformed config: ") + e.what());
    }
    if (cfg.delta_grid_size == cfg.m_tips) cfg.delta_grid_size = 0;
    cfg.validate();
    return cfg;
}

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("config " + path + ": " + e.what());
    }
    return config_from_json(j);
}

std::vector<std::string> default_ids(std::size_t n) {
    std::vector<std::string> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = std::to_string(i + 1);
    return ids;
}

void Dataset::validate() const {
    const auto n = size();
    if (n < 3) throw ValidationError("a dataset needs at least 3 observations");
    if (static_cast<std::size_t>(coords.rows()) != n && coords.cols() > 0) {
        throw ValidationError("ids and coordinate rows differ in length");
    }
    std::set<std::string> seen;
    for (const auto& id : ids) {
        if (!seen.insert(id).second) throw ValidationError("duplicate id: " + id);
    }
    if (!coords.allFinite()) throw ValidationError("coordinates contain non-finite values");
    if (labels) {
        if (labels->size() != n) throw ValidationError("label count differs from observation count");
        for (int l : *labels) {
            if (l != 0 && l != 1) throw ValidationError("labels must be 0 or 1");
        }
    }
    if (scaled) {
        for (Eigen::Index c = 0; c < coords.cols(); ++c) {
            const bool constant = std::find(constant_columns.begin(), constant_columns.end(),
                                            static_cast<std::size_t>(c)) != constant_columns.end();
            const double mean = coords.col(c).mean();
            if (std::abs(mean) > 1e-9) throw ValidationError("scaled column has nonzero mean");
            if (constant) continue;
            const double ss = (coords.col(c).array() - mean).square().sum();
            const double sd = std::sqrt(ss / static_cast<double>(n - 1));
            if (std::abs(sd - 1.0) > 1e-9) throw ValidationError("scaled column does not have unit sd");
        }
    }
}

void GramMatrix::validate(bool check_psd) const {
    const auto n = entries.rows();
    if (entries.cols() != n) throw ValidationError("Gram matrix must be square");
    if (n < 3) throw ValidationError("a Gram matrix needs at least 3 observations");
    if (!entries.allFinite()) throw ValidationError("Gram matrix contains non-finite values");
    if (!ids.empty() && static_cast<Eigen::Index>(ids.size()) != n) {
        throw ValidationError("Gram matrix ids differ in length from its order");
    }
    const double magnitude = std::max(1.0, entries.cwiseAbs().maxCoeff());
    for (Eigen::Index a = 0; a < n; ++a) {
        if (entries(a, a) < 0.0) throw ValidationError("Gram matrix has a negative diagonal entry");
        for (Eigen::Index b = a + 1; b < n; ++b) {
            if (std::abs(entries(a, b) - entries(b, a)) > tolerance * magnitude) {
                throw ValidationError("Gram matrix is not symmetric within tolerance");
            }
        }
    }
    if (check_psd) {
        Eigen::MatrixXd sym = 0.5 * (entries + entries.transpose());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
        const auto& ev = solver.eigenvalues();
        const double largest = ev.cwiseAbs().maxCoeff();
        if (ev.minCoeff() < -tolerance * largest) {
            throw ValidationError("Gram matrix is not positive semidefinite within tolerance");
        }
    }
}

namespace {

std::optional<std::size_t> find_column(const csv::Row& header, const std::string& name) {
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == name) return c;
    }
    return std::nullopt;
}

}  // namespace

Dataset parse_dataset(std::istream& in, const LoadOptions& opts) {
    auto rows = csv::read(in);
    if (rows.empty()) throw ParseError("empty CSV input");

    std::size_t first = 0;
    const std::size_t width = rows.front().size();
    std::optional<std::size_t> id_col;
    std::optional<std::size_t> label_col;
    if (opts.has_header) {
        const auto& header = rows.front();
        if (opts.id_column) {
            id_col = find_column(header, *opts.id_column);
            if (!id_col) throw ParseError("id column not found in header: " + *opts.id_column);
        }
        if (opts.label_column) label_col = find_column(header, *opts.label_column);
        first = 1;
    } else if (opts.id_column) {
        std::size_t idx = 0;
        auto [p, ec] = std::from_chars(opts.id_column->data(), opts.id_column->data() + opts.id_column->size(), idx);
        if (ec != std::errc() || idx >= width) {
            throw ParseError("without a header the id column must be a 0-based index");
        }
        id_col = idx;
    }

    const std::size_t n = rows.size() - first;
    std::size_t d = width;
    if (id_col) --d;
    if (label_col) --d;

    Dataset ds;
    ds.coords.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    std::vector<int> labels;
    for (std::size_t r = 0; r < n; ++r) {
        const auto& row = rows[r + first];
        const std::size_t line = r + first + 1;
        if (row.size() != width) {
            std::ostringstream msg;
            msg << "row " << line << ": expected " << width << " fields, found " << row.size();
            throw ParseError(msg.str());
        }
        std::size_t out = 0;
        for (std::size_t c = 0; c < width; ++c) {
            if (id_col && c == *id_col) {
                ds.ids.push_back(row[c]);
            } else if (label_col && c == *label_col) {
                const double v = csv::parse_real(row[c], line, c + 1);
                if (v != 0.0 && v != 1.0) {
                    std::ostringstream msg;
                    msg << "row " << line << ", column " << c + 1 << ": label must be 0 or 1";
                    throw ParseError(msg.str());
                }
                labels.push_back(static_cast<int>(v));
            } else {
                ds.coords(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(out++)) =
                    csv::parse_real(row[c], line, c + 1);
            }
        }
    }
    if (!id_col) ds.ids = default_ids(n);
    if (label_col) ds.labels = std::move(labels);
    ds.validate();
    return ds;
}

Dataset load_dataset(const std::string& path, const LoadOptions& opts) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path);
    return parse_dataset(in, opts);
}

GramMatrix load_gram(const std::string& path, bool has_header, double tolerance,
                     std::size_t psd_check_max_n) {
    auto rows = csv::read_file(path);
    if (rows.empty()) throw ParseError("empty Gram CSV: " + path);
    GramMatrix g;
    g.tolerance = tolerance;
    std::size_t first = 0;
    if (has_header) {
        g.ids = rows.front();
        first = 1;
    }
    const std::size_t n = rows.size() - first;
    g.entries.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < n; ++r) {
        const auto& row = rows[r + first];
        if (row.size() != n) {
            std::ostringstream msg;
            msg << "Gram row " << r + first + 1 << ": expected " << n << " fields, found " << row.size();
            throw ParseError(msg.str());
        }
        for (std::size_t c = 0; c < n; ++c) {
            g.entries(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                csv::parse_real(row[c], r + first + 1, c + 1);
        }
    }
    if (g.ids.empty()) g.ids = default_ids(n);
    std::set<std::string> seen(g.ids.begin(), g.ids.end());
    if (seen.size() != g.ids.size()) throw ValidationError("duplicate ids in Gram header");
    g.validate(n <= psd_check_max_n);
    return g;
}

std::vector<int> load_labels(const std::string& path, std::span<const std::string> ids) {
    auto rows = csv::read_file(path);
    std::unordered_map<std::string, int> by_id;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != 2) throw ParseError("labels file rows must be 'id,label'");
        if (r == 0 && row[1] == "label") continue;
        const double v = csv::parse_real(row[1], r + 1, 2);
        if (v != 0.0 && v != 1.0) throw ParseError("labels must be 0 or 1");
        by_id[row[0]] = static_cast<int>(v);
    }
    std::vector<int> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
        auto it = by_id.find(id);
        if (it == by_id.end()) throw ValidationError("no label for id " + id);
        out.push_back(it->second);
    }
    return out;
}

Dataset z_scale(const Dataset& ds) {
    if (!ds.has_coords()) throw UnsupportedOperation("z-scaling needs coordinates (Gram-only dataset)");
    Dataset out = ds;
    out.constant_columns.clear();
    const auto n = static_cast<double>(ds.size());
    for (Eigen::Index c = 0; c < out.coords.cols(); ++c) {
        auto col = out.coords.col(c);
        const double mean = col.mean();
        const double ss = (col.array() - mean).square().sum();
        const double sd = std::sqrt(ss / (n - 1.0));
        if (sd == 0.0 || sd < 1e-14 * std::max(1.0, std::abs(mean))) {
            col.setZero();
            out.constant_columns.push_back(static_cast<std::size_t>(c));
        } else {
            col = (col.array() - mean) / sd;
        }
    }
    out.scaled = true;
    return out;
}

PairPlan::PairPlan(std::size_t n, std::size_t n_pairs, std::uint64_t seed)
    : n_(n), n_pairs_(n_pairs), seed_(seed) {
    if (n < 2) throw std::invalid_argument("pair sampling needs n >= 2");
    partners_.resize(n);
    const std::size_t k = std::min(n_pairs, n - 1);
    for (std::size_t i = 0; i < n; ++i) partners_[i] = sequence(i, k);
}

std::vector<std::size_t> PairPlan::sequence(std::size_t i, std::size_t count) const {
    // Partial Fisher-Yates over the n-1 candidates, with the swapped-out
    // entries held in a sparse map.
    const std::size_t pool = n_ - 1;
    count = std::min(count, pool);
    Rng rng(stream_key(seed_, i));
    std::unordered_map<std::size_t, std::size_t> moved;
    auto at = [&](std::size_t k) {
        auto it = moved.find(k);
        return it == moved.end() ? k : it->second;
    };
    std::vector<std::size_t> out;
    out.reserve(count);
    for (std::size_t p = 0; p < count; ++p) {
        const std::size_t r = p + static_cast<std::size_t>(rng.below(pool - p));
        const std::size_t vr = at(r);
        moved[r] = at(p);
        out.push_back(vr < i ? vr : vr + 1);
    }
    return out;
}

PairPlan sample_pairs(std::size_t n, const Config& cfg) {
    return PairPlan(n, cfg.n_pairs, cfg.seed);
}

}  // namespace dqf
