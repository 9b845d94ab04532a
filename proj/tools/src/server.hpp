#pragma once

#include "analysis.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace sheetguard::tools {

struct ServiceOptions {
    std::optional<SealManifest> manifest;
    /// Serialization sealed alongside the manifest, for cell-level diffs.
    std::optional<std::string> retained;
    std::optional<std::filesystem::path> static_dir;
};

/// HTTP view of one workbook. Nothing here mutates the workbook; only audit
/// sessions change, one request at a time per session.
class Service {
public:
    Service(Analysis analysis, ServiceOptions options);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Blocks until stop(). False if the port cannot be bound.
    bool listen(const std::string& host, int port);
    /// Binds an ephemeral port and returns it (-1 on failure); follow with listen_after_bind().
    int bind_to_any_port(const std::string& host);
    bool listen_after_bind();
    void wait_until_ready() const;
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace sheetguard::tools
