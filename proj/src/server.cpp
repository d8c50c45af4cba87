#include "dqf/server.hpp"

#include <cstdlib>
#include <string_view>

#include "dqf/bundle_io.hpp"

#include <httplib.h>

namespace dqf {

struct BundleServer::Impl {
    httplib::Server http;
    std::string bundle;
    std::optional<std::string> report;
};

BundleServer::BundleServer(std::string bundle_bytes, std::optional<std::string> report_bytes,
                           std::optional<std::string> static_dir)
    : impl_(std::make_unique<Impl>()) {
    impl_->bundle = std::move(bundle_bytes);
    impl_->report = std::move(report_bytes);
    etag_ = "\"" + sha256_hex(impl_->bundle) + "\"";

    auto& http = impl_->http;
    // No SO_REUSEPORT: a second server on a busy port must fail to bind.
    http.set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
    });
    const Impl* state = impl_.get();
    const std::string etag = etag_;
    http.Get("/api/health", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("ok", "text/plain");
    });
    http.Get("/api/bundle", [state, etag](const httplib::Request& req, httplib::Response& res) {
        res.set_header("ETag", etag);
        res.set_header("Cache-Control", "no-cache");
        if (req.get_header_value("If-None-Match") == etag) {
            res.status = 304;
            return;
        }
        res.set_content(state->bundle, "application/json");
    });
    http.Get("/api/report", [state](const httplib::Request&, httplib::Response& res) {
        if (!state->report) {
            res.status = 404;
            res.set_content(R"({"error":"no report loaded"})", "application/json");
            return;
        }
        res.set_content(*state->report, "application/json");
    });
    if (static_dir) http.set_mount_point("/", *static_dir);
    http.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (res.body.empty()) res.set_content("not found", "text/plain");
    });
}

BundleServer::~BundleServer() { stop(); }

int BundleServer::bind(const std::string& host, int port) {
    if (port == 0) return impl_->http.bind_to_any_port(host);
    return impl_->http.bind_to_port(host, port) ? port : -1;
}

bool BundleServer::serve() { return impl_->http.listen_after_bind(); }

void BundleServer::stop() {
    if (impl_) impl_->http.stop();
}

bool BundleServer::running() const { return impl_->http.is_running(); }

int default_port() {
    if (const char* env = std::getenv("DQF_PORT")) {
        char* end = nullptr;
        const long p = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && p > 0 && p < 65536) return static_cast<int>(p);
    }
    return 8765;
}

}  // namespace dqf
