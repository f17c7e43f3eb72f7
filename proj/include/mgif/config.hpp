#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mgif/experiments.hpp"

namespace mgif {

// Batch-run description. Loaded from a key=value text file ('#' comments);
// unknown keys are rejected, referenced files must exist at validation
// time. CLI flags override config keys.
struct RunConfig {
    std::string experiment;  // taskrel | ipdetect | unlearn | fingerprint-only
    std::filesystem::path out_dir;
    std::uint64_t seed = 1;
    int jobs = 0;  // 0 = hardware concurrency

    // sampler spec
    std::string refs_kind = "random";  // random | cutmix | pgd
    int refs_k = 256;
    std::uint64_t refs_seed = 0;  // 0 = derived from `seed`
    PgdSampleConfig pgd;

    // curve spec
    int curve_steps = 64;
    std::string baseline = "zero";  // zero | random

    // experiment specs (seed/jobs fields are filled from the run-level ones)
    IpZooSpec ip;
    TaskrelSpec taskrel;
    UnlearnSpec unlearn;

    // fingerprint-only inputs
    std::vector<std::filesystem::path> checkpoints;
    GridSpec sample_data;  // reference-point source distribution

    std::uint64_t config_hash() const;
};

struct CliOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
    std::optional<int> refs_k;
    std::optional<int> curve_steps;
    std::optional<std::string> baseline;
};

RunConfig load_config(const std::filesystem::path& path, const CliOverrides& ov);

// Parse from text (tests use this directly).
RunConfig parse_config(const std::string& text, const CliOverrides& ov,
                       const std::filesystem::path& base_dir);

}  // namespace mgif
