#pragma once

#include <memory>
#include <optional>
#include <string>

namespace dqf {

/// Read-only HTTP front for one bundle:
///   GET /api/bundle  the bundle file's bytes, ETag = its SHA-256
///   GET /api/report  the report JSON, 404 when none was given
///   GET /api/health  "ok"
/// plus static files from `static_dir` when set. Anything else is a 404.
class BundleServer {
public:
    BundleServer(std::string bundle_bytes, std::optional<std::string> report_bytes,
                 std::optional<std::string> static_dir = std::nullopt);
    ~BundleServer();
    BundleServer(const BundleServer&) = delete;
    BundleServer& operator=(const BundleServer&) = delete;

    /// Binds without serving. Port 0 picks a free port. Returns the bound
    /// port, or -1 when the address is unavailable.
    int bind(const std::string& host, int port);
    /// Blocks until stop().
    bool serve();
    void stop();
    bool running() const;

    const std::string& etag() const { return etag_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::string etag_;
};

/// DQF_PORT when set and valid, otherwise 8765.
int default_port();

}  // namespace dqf
