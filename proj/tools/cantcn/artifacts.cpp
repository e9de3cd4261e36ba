#include "artifacts.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cantcn/digest.hpp"
#include "run_config.hpp"

namespace cantcn::cli {

ArtifactWriter::ArtifactWriter(std::filesystem::path root) : root_(std::move(root))
{
    std::filesystem::create_directories(root_);
}

std::filesystem::path ArtifactWriter::write(const std::filesystem::path& relative, std::string_view bytes)
{
    const auto path = root_ / relative;
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw StageError("output", kInput, "cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.close();
    record(path);
    return path;
}

void ArtifactWriter::record(const std::filesystem::path& absolute)
{
    const auto rel = std::filesystem::relative(absolute, root_).generic_string();
    const auto digest = sha256_file(absolute.string());
    const auto it = std::find_if(artifacts_.begin(), artifacts_.end(), [&](const Entry& e) { return e.path == rel; });
    if (it != artifacts_.end())
        it->sha256 = digest;
    else
        artifacts_.push_back({rel, digest});
}

void ArtifactWriter::record_input(const std::filesystem::path& path)
{
    const auto name = path.filename().string();
    const auto digest = sha256_file(path.string());
    for (const auto& e : inputs_)
        if (e.path == name && e.sha256 == digest)
            return;
    inputs_.push_back({name, digest});
}

void ArtifactWriter::write_manifest(const std::string& subcommand, const std::string& config_json,
                                    std::uint64_t seed)
{
    nlohmann::ordered_json doc;
    doc["toolkit"] = "cantcn";
    doc["version"] = CANTCN_VERSION;
    doc["subcommand"] = subcommand;
    doc["seed"] = seed;
    doc["config"] = nlohmann::ordered_json::parse(config_json);
    doc["inputs"] = nlohmann::ordered_json::array();
    for (const auto& e : inputs_)
        doc["inputs"].push_back({{"file", e.path}, {"sha256", e.sha256}});
    auto sorted = artifacts_;
    std::sort(sorted.begin(), sorted.end(), [](const Entry& a, const Entry& b) { return a.path < b.path; });
    doc["artifacts"] = nlohmann::ordered_json::array();
    for (const auto& e : sorted)
        doc["artifacts"].push_back({{"path", e.path}, {"sha256", e.sha256}});

    const auto text = doc.dump(2) + "\n";
    std::ofstream out(root_ / "manifest.json", std::ios::binary | std::ios::trunc);
    out << text;
}

std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw StageError("input", kInput, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace cantcn::cli
