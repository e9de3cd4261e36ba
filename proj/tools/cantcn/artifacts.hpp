#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace cantcn::cli {

/// Writes files under one output directory and keeps the list of inputs and
/// outputs for the manifest. Paths in the manifest are relative to the
/// output directory so that two runs into different directories compare equal.
class ArtifactWriter
{
public:
    explicit ArtifactWriter(std::filesystem::path root);

    const std::filesystem::path& root() const { return root_; }

    /// Write bytes to root/relative and record the artifact.
    std::filesystem::path write(const std::filesystem::path& relative, std::string_view bytes);

    /// Record a file some other code already wrote under the root.
    void record(const std::filesystem::path& absolute);

    /// Record a consumed input with its digest.
    void record_input(const std::filesystem::path& path);

    /// manifest.json: toolkit version, subcommand, seed, effective config,
    /// inputs and artifacts with SHA-256 digests.
    void write_manifest(const std::string& subcommand, const std::string& config_json, std::uint64_t seed);

private:
    struct Entry
    {
        std::string path;
        std::string sha256;
    };

    std::filesystem::path root_;
    std::vector<Entry> inputs_;
    std::vector<Entry> artifacts_;
};

std::string read_text_file(const std::filesystem::path& path);

} // namespace cantcn::cli
