#include "dqf/bundle_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <openssl/evp.h>

#include "dqf/error.hpp"

namespace dqf {

namespace {

using nlohmann::json;

json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            const double v = m(r, c);
            row.push_back(std::isfinite(v) ? json(v) : json(nullptr));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

double number(const json& v) {
    return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
}

Matrix matrix_from(const json& rows, std::size_t n, std::size_t m, const char* what) {
    if (!rows.is_array() || rows.size() != n) {
        throw ParseError(std::string("bundle: '") + what + "' must have one row per observation");
    }
    Matrix out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
    for (std::size_t r = 0; r < n; ++r) {
        const auto& row = rows[r];
        if (!row.is_array() || row.size() != m) {
            throw ParseError(std::string("bundle: '") + what + "' row has the wrong length");
        }
        for (std::size_t c = 0; c < m; ++c) {
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = number(row[c]);
        }
    }
    return out;
}

}  // namespace

json to_json(const DQFBundle& bundle) {
    json angles = json::array();
    for (const auto& block : bundle.angles) {
        json zero = json::array();
        for (double z : block.zero_interval_mean) zero.push_back(std::isfinite(z) ? json(z) : json(nullptr));
        angles.push_back({
            {"alpha", block.alpha},
            {"q_bar", matrix_json(block.q_bar)},
            {"q_tilde", matrix_json(block.q_tilde)},
            {"dq", matrix_json(block.dq)},
            {"zero_interval_mean", zero},
            {"zero_norm_rows", block.zero_norm_rows},
        });
    }
    const auto& f = bundle.flags;
    json degenerate = json::array();
    for (const auto& [i, j] : f.degenerate_pairs) degenerate.push_back({i, j});
    json flags = {
        {"z_scaled", f.z_scaled},
        {"constant_columns", f.constant_columns},
        {"pair_counts", f.pair_counts},
        {"excluded", f.excluded},
        {"degenerate_pairs", degenerate},
        {"collapsed_tip_pairs", f.collapsed_tip_pairs},
    };
    if (f.fixed_bounds) flags["fixed_bounds"] = {f.fixed_bounds->first, f.fixed_bounds->second};
    return {
        {"ids", bundle.ids},
        {"delta_grid", bundle.delta_grid},
        {"angles", angles},
        {"config", to_json(bundle.config)},
        {"flags", flags},
    };
}

DQFBundle bundle_from_json(const json& j) {
    DQFBundle b;
    try {
        b.ids = j.at("ids").get<std::vector<std::string>>();
        b.delta_grid = j.at("delta_grid").get<std::vector<double>>();
        b.config = config_from_json(j.at("config"));
        const std::size_t n = b.ids.size();
        const std::size_t m = b.delta_grid.size();
        if (m == 0) throw ParseError("bundle: empty delta grid");
        for (const auto& a : j.at("angles")) {
            AngleBlock block;
            block.alpha = a.at("alpha").get<double>();
            block.q_bar = matrix_from(a.at("q_bar"), n, m, "q_bar");
            block.q_tilde = matrix_from(a.at("q_tilde"), n, m, "q_tilde");
            block.dq = matrix_from(a.at("dq"), n, m, "dq");
            if (a.contains("zero_interval_mean")) {
                for (const auto& z : a.at("zero_interval_mean")) block.zero_interval_mean.push_back(number(z));
            }
            if (block.zero_interval_mean.size() != n) {
                block.zero_interval_mean.assign(n, std::numeric_limits<double>::quiet_NaN());
            }
            if (a.contains("zero_norm_rows")) {
                block.zero_norm_rows = a.at("zero_norm_rows").get<std::vector<std::size_t>>();
            }
            b.angles.push_back(std::move(block));
        }
        if (b.angles.empty()) throw ParseError("bundle: no angle blocks");
        if (j.contains("flags")) {
            const auto& f = j.at("flags");
            b.flags.z_scaled = f.value("z_scaled", false);
            b.flags.constant_columns = f.value("constant_columns", std::vector<std::size_t>{});
            b.flags.pair_counts = f.value("pair_counts", std::vector<std::size_t>{});
            b.flags.excluded = f.value("excluded", std::vector<std::size_t>{});
            b.flags.collapsed_tip_pairs = f.value("collapsed_tip_pairs", std::size_t{0});
            if (f.contains("degenerate_pairs")) {
                for (const auto& p : f.at("degenerate_pairs")) {
                    b.flags.degenerate_pairs.emplace_back(p.at(0).get<std::size_t>(), p.at(1).get<std::size_t>());
                }
            }
            if (f.contains("fixed_bounds")) {
                const auto& fb = f.at("fixed_bounds");
                b.flags.fixed_bounds = std::make_pair(fb.at(0).get<double>(), fb.at(1).get<double>());
            }
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed bundle: ") + e.what());
    }
    return b;
}

std::string serialize_bundle(const DQFBundle& bundle) { return to_json(bundle).dump(); }

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write file: " + path);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw Error("write failed: " + path);
}

DQFBundle read_bundle(const std::string& path) {
    const auto text = read_text(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError("bundle " + path + " is not valid JSON: " + e.what());
    }
    return bundle_from_json(j);
}

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int k = 0; k < len; ++k) {
        out.push_back(hex[digest[k] >> 4]);
        out.push_back(hex[digest[k] & 0xf]);
    }
    return out;
}

}  // namespace dqf
