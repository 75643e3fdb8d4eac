#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "afgm/data_io.hpp"
#include "afgm/model.hpp"
#include "afgm/trainer.hpp"

namespace afgm::cli {

/// Stable process exit codes.
enum ExitCode : int { kOk = 0, kConfig = 2, kNumeric = 3, kIo = 4 };

/// Flat `key = value` configuration. Every key has a default; unknown keys are rejected.
class RunConfig {
public:
    RunConfig();

    /// Parses `key = value` lines; `#` starts a comment. Later lines override earlier ones.
    static RunConfig parse(std::string_view text, const std::string& source = "<config>");
    static RunConfig load(const std::filesystem::path& path);

    /// Sets one key (aliases accepted). Throws ConfigError for unknown keys.
    void set(const std::string& key, const std::string& value);
    /// "key=value" form used by --set.
    void assign(const std::string& kv);
    [[nodiscard]] const std::string& get(const std::string& key) const;

    [[nodiscard]] static const std::vector<std::string>& keys();

    /// Every key in canonical order, one per line.
    [[nodiscard]] std::string render() const;

    /// Typed views. Both throw ConfigError naming the offending key.
    /// Patch lengths above T are dropped and reported through `warnings`.
    [[nodiscard]] ModelConfig model_config(std::vector<std::string>* warnings = nullptr) const;
    [[nodiscard]] TrainConfig train_config() const;

    [[nodiscard]] std::uint64_t seed() const;
    [[nodiscard]] SplitScheme split_scheme() const;
    [[nodiscard]] std::filesystem::path data_path() const;

private:
    std::map<std::string, std::string, std::less<>> values_;
};

/// Expands `key=a,b,c` specs into the cartesian product of single assignments.
std::vector<std::vector<std::string>> expand_grid(const std::vector<std::string>& specs);

/// Root for run directories: $AFGM_RUNS_DIR or ./runs.
std::filesystem::path runs_root();

/// Creates `<root>/<cmd>-s<seed>-<UTC timestamp>[-n]`, never reusing an existing path.
std::filesystem::path create_run_dir(const std::filesystem::path& root, const std::string& cmd, std::uint64_t seed);

/// Median wall time of one inference-mode scan over M patches at (S, V). Each of the
/// `repeats` samples averages enough back-to-back scans to span at least 20 ms.
double bench_scan_seconds(std::size_t M, std::size_t S, std::size_t V, std::size_t repeats, std::uint64_t seed);

/// Entry point shared by the `afgm` binary and tests. Never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace afgm::cli
