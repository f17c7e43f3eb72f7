#include "mgif/config.hpp"

#include <algorithm>
#include <sstream>

#include "mgif/io_util.hpp"
#include "mgif/parallel.hpp"
#include "mgif/rng.hpp"

namespace mgif {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

int to_int(const std::string& k, const std::string& v) {
    try {
        std::size_t used = 0;
        const int r = std::stoi(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (...) {
        throw ConfigError("config key '" + k + "': expected integer, got '" + v + "'");
    }
}

double to_double(const std::string& k, const std::string& v) {
    try {
        std::size_t used = 0;
        const double r = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (...) {
        throw ConfigError("config key '" + k + "': expected number, got '" + v + "'");
    }
}

std::uint64_t to_u64(const std::string& k, const std::string& v) {
    try {
        std::size_t used = 0;
        const std::uint64_t r = std::stoull(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (...) {
        throw ConfigError("config key '" + k + "': expected unsigned integer, got '" + v + "'");
    }
}

bool to_bool(const std::string& k, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("config key '" + k + "': expected true/false, got '" + v + "'");
}

std::vector<double> to_double_list(const std::string& k, const std::string& v) {
    std::vector<double> out;
    std::istringstream is(v);
    std::string cell;
    while (std::getline(is, cell, ',')) out.push_back(to_double(k, trim(cell)));
    if (out.empty()) throw ConfigError("config key '" + k + "': empty list");
    return out;
}

}  // namespace

std::uint64_t RunConfig::config_hash() const {
    std::ostringstream os;
    os << "run|" << experiment << "|" << seed << "|" << refs_kind << "|" << refs_k
       << "|" << refs_seed << "|" << curve_steps << "|" << baseline << "|"
       << pgd.steps << "|" << pgd.alpha << "|" << pgd.eps;
    for (const auto& c : checkpoints) os << "|" << c.string();
    std::uint64_t h = fnv1a64(os.str());
    if (experiment == "ipdetect") h ^= ip.config_hash();
    if (experiment == "taskrel") h ^= taskrel.config_hash();
    if (experiment == "unlearn") h ^= unlearn.config_hash();
    if (experiment == "fingerprint-only")
        h ^= CounterRng::mix64(sample_data.seed + 31 * sample_data.n +
                               977 * sample_data.classes);
    return h;
}

RunConfig parse_config(const std::string& text, const CliOverrides& ov,
                       const std::filesystem::path& base_dir) {
    RunConfig c;
    bool have_experiment = false, have_out = false;

    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": empty key or value");

        if (key == "experiment") {
            c.experiment = val;
            have_experiment = true;
        } else if (key == "out_dir") {
            c.out_dir = base_dir / val;
            have_out = true;
        } else if (key == "seed") {
            c.seed = to_u64(key, val);
        } else if (key == "jobs") {
            c.jobs = to_int(key, val);
        } else if (key == "refs.kind") {
            if (val != "random" && val != "cutmix" && val != "pgd")
                throw ConfigError("refs.kind must be random, cutmix or pgd");
            c.refs_kind = val;
        } else if (key == "refs.k") {
            c.refs_k = to_int(key, val);
        } else if (key == "refs.seed") {
            c.refs_seed = to_u64(key, val);
        } else if (key == "pgd.steps") {
            c.pgd.steps = to_int(key, val);
        } else if (key == "pgd.alpha") {
            c.pgd.alpha = static_cast<float>(to_double(key, val));
        } else if (key == "pgd.eps") {
            c.pgd.eps = static_cast<float>(to_double(key, val));
        } else if (key == "curve.steps") {
            c.curve_steps = to_int(key, val);
        } else if (key == "curve.baseline") {
            if (val != "zero" && val != "random")
                throw ConfigError("curve.baseline must be zero or random");
            c.baseline = val;
        } else if (key == "ip.arch") {
            c.ip.arch = val;
        } else if (key == "ip.classes") {
            c.ip.classes = to_int(key, val);
        } else if (key == "ip.per_family") {
            c.ip.per_family = to_int(key, val);
        } else if (key == "ip.independents") {
            c.ip.independents = to_int(key, val);
        } else if (key == "ip.n_train") {
            c.ip.n_train = to_int(key, val);
        } else if (key == "ip.n_transfer") {
            c.ip.n_transfer = to_int(key, val);
        } else if (key == "ip.n_aux") {
            c.ip.n_aux = to_int(key, val);
        } else if (key == "ip.base_epochs") {
            c.ip.base_epochs = to_int(key, val);
        } else if (key == "ip.base_lr") {
            c.ip.base_lr = to_double(key, val);
        } else if (key == "ip.batch") {
            c.ip.batch = to_int(key, val);
        } else if (key == "ip.finetune_epochs") {
            c.ip.finetune_epochs = to_int(key, val);
        } else if (key == "ip.extract_epochs") {
            c.ip.extract_epochs = to_int(key, val);
        } else if (key == "ip.harden_epochs") {
            c.ip.harden_epochs = to_int(key, val);
        } else if (key == "ip.prune_fractions") {
            c.ip.prune_fractions = to_double_list(key, val);
        } else if (key == "taskrel.thetas") {
            c.taskrel.thetas_deg = to_double_list(key, val);
        } else if (key == "taskrel.control") {
            c.taskrel.label_permuted_control = to_bool(key, val);
        } else if (key == "taskrel.arch") {
            c.taskrel.arch = val;
        } else if (key == "taskrel.n_train") {
            c.taskrel.n_train = to_int(key, val);
        } else if (key == "taskrel.epochs") {
            c.taskrel.epochs = to_int(key, val);
        } else if (key == "taskrel.lr") {
            c.taskrel.lr = to_double(key, val);
        } else if (key == "taskrel.batch") {
            c.taskrel.batch = to_int(key, val);
        } else if (key == "unlearn.arch") {
            c.unlearn.arch = val;
        } else if (key == "unlearn.n_train") {
            c.unlearn.n_train = to_int(key, val);
        } else if (key == "unlearn.forget") {
            c.unlearn.forget_count = to_int(key, val);
        } else if (key == "unlearn.label_noise") {
            c.unlearn.label_noise = static_cast<float>(to_double(key, val));
        } else if (key == "unlearn.epochs") {
            c.unlearn.epochs = to_int(key, val);
        } else if (key == "unlearn.lr") {
            c.unlearn.lr = to_double(key, val);
        } else if (key == "unlearn.approx_epochs") {
            c.unlearn.approx.epochs = to_int(key, val);
        } else if (key == "unlearn.ascent_lr") {
            c.unlearn.approx.ascent_lr = to_double(key, val);
        } else if (key == "unlearn.maintain_lr") {
            c.unlearn.approx.maintain_lr = to_double(key, val);
        } else if (key == "model.checkpoints") {
            std::istringstream cs(val);
            std::string item;
            while (std::getline(cs, item, ';')) {
                item = trim(item);
                if (!item.empty()) c.checkpoints.push_back(base_dir / item);
            }
        } else if (key == "data.classes") {
            c.sample_data.classes = to_int(key, val);
        } else if (key == "data.n") {
            c.sample_data.n = to_int(key, val);
        } else if (key == "data.seed") {
            c.sample_data.seed = to_u64(key, val);
        } else if (key == "data.hw") {
            c.sample_data.hw = to_int(key, val);
        } else {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }

    if (!have_experiment) throw ConfigError("config: missing 'experiment'");
    if (!have_out) throw ConfigError("config: missing 'out_dir'");
    if (c.experiment != "taskrel" && c.experiment != "ipdetect" &&
        c.experiment != "unlearn" && c.experiment != "fingerprint-only")
        throw ConfigError("config: unknown experiment '" + c.experiment + "'");

    if (ov.seed) c.seed = *ov.seed;
    if (ov.jobs) c.jobs = *ov.jobs;
    if (ov.refs_k) c.refs_k = *ov.refs_k;
    if (ov.curve_steps) c.curve_steps = *ov.curve_steps;
    if (ov.baseline) {
        if (*ov.baseline != "zero" && *ov.baseline != "random")
            throw ConfigError("--baseline must be zero or random");
        c.baseline = *ov.baseline;
    }

    if (c.refs_k < 1) throw ConfigError("config: refs.k must be >= 1");
    if (c.curve_steps < 2) throw ConfigError("config: curve.steps must be >= 2");
    if (c.jobs < 0) throw ConfigError("config: jobs must be >= 0");
    if (c.jobs == 0) c.jobs = default_jobs();

    // referenced files must exist up front
    for (const auto& p : c.checkpoints) {
        if (!std::filesystem::exists(p))
            throw ConfigError("config: checkpoint does not exist: " + p.string());
    }

    // propagate run-level seed/jobs into the experiment specs
    c.ip.seed = c.seed;
    c.ip.jobs = c.jobs;
    c.taskrel.seed = c.seed;
    c.taskrel.jobs = c.jobs;
    c.taskrel.refs_k = c.refs_k;
    c.taskrel.curve_steps = c.curve_steps;
    c.unlearn.seed = c.seed;
    c.unlearn.jobs = c.jobs;
    c.unlearn.curve_steps = c.curve_steps;
    return c;
}

RunConfig load_config(const std::filesystem::path& path, const CliOverrides& ov) {
    if (!std::filesystem::exists(path))
        throw ConfigError("config file does not exist: " + path.string());
    return parse_config(read_text_file(path), ov, path.parent_path());
}

}  // namespace mgif
