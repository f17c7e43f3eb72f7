// End-to-end drive of the command-line tool: zoo -> sample-refs ->
// fingerprint -> distances -> report on a micro configuration, plus exit
// code and determinism checks. No test framework; exits non-zero on the
// first failure.

#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "mgif/io_util.hpp"

namespace fs = std::filesystem;

namespace {

int failures = 0;

void check(bool ok, const std::string& what) {
    if (!ok) {
        std::cerr << "[FAIL] " << what << "\n";
        ++failures;
    }
}

int run(const std::string& args) {
    const std::string cmd = std::string(MGIF_CLI_PATH) + " " + args + " 2>/dev/null >/dev/null";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string file_bytes(const fs::path& p) { return mgif::read_text_file(p); }

}  // namespace

int main() {
    const fs::path dir =
        fs::temp_directory_path() / ("mgif_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    const fs::path cfg_path = dir / "run.cfg";

    {
        std::ofstream cfg(cfg_path);
        cfg << "experiment = ipdetect\n"
            << "out_dir = out\n"
            << "seed = 11\n"
            << "jobs = 2\n"
            << "refs.k = 8\n"
            << "curve.steps = 8\n"
            << "ip.arch = input:1x16x16,flatten,dense:6,tanh,dense:3\n"
            << "ip.classes = 3\n"
            << "ip.per_family = 1\n"
            << "ip.independents = 2\n"
            << "ip.n_train = 90\n"
            << "ip.n_transfer = 90\n"
            << "ip.n_aux = 45\n"
            << "ip.base_epochs = 2\n"
            << "ip.extract_epochs = 2\n"
            << "ip.finetune_epochs = 1\n"
            << "ip.harden_epochs = 1\n";
    }
    const std::string c = " --config " + cfg_path.string();

    check(run("zoo" + c) == 0, "zoo exits 0");
    check(fs::exists(dir / "out/zoo/manifest.tsv"), "manifest written");
    check(fs::exists(dir / "out/zoo/victim.mgmd"), "victim checkpoint written");

    check(run("sample-refs" + c) == 0, "sample-refs exits 0");
    check(fs::exists(dir / "out/refs.mgrs"), "reference set written");

    check(run("fingerprint" + c) == 0, "fingerprint exits 0");
    check(fs::exists(dir / "out/fingerprints/victim.mgif"), "victim fingerprint written");

    check(run("distances" + c) == 0, "distances exits 0");
    check(fs::exists(dir / "out/distances.csv"), "distance matrix written");
    check(fs::exists(dir / "out/affinity.csv"), "affinity matrix written");

    check(run("report" + c) == 0, "report exits 0");
    check(fs::exists(dir / "out/detection_report.txt"), "detection report written");
    check(fs::exists(dir / "out/suspect_scores.csv"), "suspect scores written");

    // end-to-end determinism: a fresh run reproduces identical artifacts
    const std::string fp1 = file_bytes(dir / "out/fingerprints/victim.mgif");
    const std::string dm1 = file_bytes(dir / "out/distances.csv");
    fs::remove_all(dir / "out");
    check(run("zoo" + c) == 0, "second zoo run exits 0");
    check(run("sample-refs" + c) == 0, "second sample-refs exits 0");
    check(run("fingerprint" + c) == 0, "second fingerprint exits 0");
    check(run("distances" + c) == 0, "second distances exits 0");
    check(file_bytes(dir / "out/fingerprints/victim.mgif") == fp1,
          "fingerprints byte-identical across runs");
    check(file_bytes(dir / "out/distances.csv") == dm1,
          "distance matrix byte-identical across runs");

    // restricting fingerprint to one id only refreshes that artifact
    check(run("fingerprint" + c + " victim") == 0, "single-id fingerprint exits 0");

    // exit code 2: config errors (unknown key, missing file, bad experiment)
    {
        std::ofstream bad(dir / "bad.cfg");
        bad << "experiment = ipdetect\nout_dir = out\nnot_a_key = 1\n";
    }
    check(run("zoo --config " + (dir / "bad.cfg").string()) == 2,
          "unknown config key exits 2");
    check(run("zoo --config " + (dir / "missing.cfg").string()) == 2,
          "missing config file exits 2");
    {
        std::ofstream bad(dir / "bad2.cfg");
        bad << "experiment = warp\nout_dir = out\n";
    }
    check(run("zoo --config " + (dir / "bad2.cfg").string()) == 2,
          "unknown experiment exits 2");

    // exit code 2 for an empty zoo request
    {
        std::ofstream bad(dir / "empty.cfg");
        bad << "experiment = ipdetect\nout_dir = out_empty\n"
            << "ip.per_family = 0\nip.independents = 0\n";
    }
    check(run("zoo --config " + (dir / "empty.cfg").string()) == 2,
          "empty zoo spec exits 2");

    // exit code 3: artifacts from a different config hash are refused
    {
        std::ofstream other(dir / "other.cfg");
        other << "experiment = ipdetect\nout_dir = out\nseed = 999\n"
              << "refs.k = 8\ncurve.steps = 8\n"
              << "ip.arch = input:1x16x16,flatten,dense:6,tanh,dense:3\n"
              << "ip.classes = 3\nip.per_family = 1\nip.independents = 2\n"
              << "ip.n_train = 90\nip.n_transfer = 90\nip.n_aux = 45\n"
              << "ip.base_epochs = 2\nip.extract_epochs = 2\n"
              << "ip.finetune_epochs = 1\nip.harden_epochs = 1\n";
    }
    check(run("fingerprint --config " + (dir / "other.cfg").string()) == 3,
          "config-hash mismatch exits 3");

    // --steps flag overrides the config (changes the config hash -> exit 3)
    check(run("fingerprint" + c + " --steps 16") == 3,
          "flag override changes the config hash");

    if (failures == 0) fs::remove_all(dir);
    std::cout << (failures ? "FAILED" : "OK") << " (cli pipeline), failures="
              << failures << "\n";
    return failures == 0 ? 0 : 1;
}
