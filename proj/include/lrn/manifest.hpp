#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "lrn/normal_estimation.hpp"

namespace lrn {

/// Flat key=value record of one run. Keys keep insertion order. Timings are kept
/// apart because they are the only entries that differ between identical runs.
class RunManifest {
public:
    void set(const std::string& key, const std::string& value);
    void set(const std::string& key, double value);
    void set(const std::string& key, long long value);
    void set_config(const FilterConfig& cfg);
    void set_timing(const std::string& stage, double seconds);

    const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }
    /// Lookup; empty string when absent.
    std::string get(const std::string& key) const;

    /// One "key=value" per line; timings last, as "timing.<stage>_s=...".
    std::string render(bool include_timings = true) const;
    void write(const std::filesystem::path& path, bool include_timings = true) const;

    static RunManifest parse(const std::string& text);
    static RunManifest read(const std::filesystem::path& path);

private:
    std::vector<std::pair<std::string, std::string>> entries_;
    std::vector<std::pair<std::string, std::string>> timings_;
};

/// Config back from a manifest written by set_config (missing keys keep defaults).
FilterConfig config_from_manifest(const RunManifest& m);

/// "<output>.manifest"
std::filesystem::path manifest_path_for(const std::filesystem::path& output);

}  // namespace lrn
