// Command-line front end: builds model zoos, samples reference points,
// extracts fingerprints, computes distance matrices and writes the
// experiment reports, all driven by a key=value config file.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <sstream>

#include "mgif/config.hpp"
#include "mgif/io_util.hpp"
#include "mgif/model_io.hpp"
#include "mgif/rng.hpp"

namespace fs = std::filesystem;
using namespace mgif;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIncomparable = 3;
constexpr int kExitTraining = 4;

fs::path zoo_dir(const RunConfig& c) { return c.out_dir / "zoo"; }
fs::path refs_path(const RunConfig& c) { return c.out_dir / "refs.mgrs"; }
fs::path fp_dir(const RunConfig& c) { return c.out_dir / "fingerprints"; }
fs::path runinfo_path(const RunConfig& c) { return c.out_dir / "run.info"; }

void write_runinfo(const RunConfig& c) {
    fs::create_directories(c.out_dir);
    std::ostringstream os;
    os << "experiment=" << c.experiment << "\n"
       << "config_hash=" << c.config_hash() << "\n";
    write_text_file(runinfo_path(c), os.str());
}

// Artifacts from different configurations must never mix.
void check_runinfo(const RunConfig& c) {
    const fs::path p = runinfo_path(c);
    if (!fs::exists(p))
        throw IncomparableError("no run.info in " + c.out_dir.string() +
                                "; run 'zoo' (or 'sample-refs') first");
    const std::string text = read_text_file(p);
    const std::string want = "config_hash=" + std::to_string(c.config_hash());
    if (text.find(want) == std::string::npos)
        throw IncomparableError(
            "config hash mismatch: artifacts in " + c.out_dir.string() +
            " were produced by a different configuration");
}

std::vector<DatasetSplit> sampling_sources(const RunConfig& c) {
    if (c.experiment == "ipdetect") {
        GridSpec g;
        g.classes = c.ip.classes;
        g.noise = c.ip.noise;
        g.dist_id = "grid" + std::to_string(c.ip.classes);
        g.n = c.ip.n_train;
        g.seed = CounterRng::mix64(c.ip.seed ^ 0x11ULL);
        g.tag = "train";
        auto train_split = make_grid_images(g);
        g.n = c.ip.n_transfer;
        g.seed = CounterRng::mix64(c.ip.seed ^ 0x22ULL);
        g.tag = "transfer";
        g.id_offset = c.ip.n_train;
        auto transfer_split = make_grid_images(g);
        return {std::move(train_split), std::move(transfer_split)};
    }
    if (c.experiment == "taskrel") {
        std::vector<DatasetSplit> out;
        const TaskrelSpec& spec = c.taskrel;
        const std::size_t n_tasks =
            spec.thetas_deg.size() + (spec.label_permuted_control ? 1 : 0);
        for (std::size_t i = 0; i < n_tasks; ++i) {
            RotatedSpec rs;
            rs.n = spec.n_train;
            rs.theta_deg = i < spec.thetas_deg.size() ? spec.thetas_deg[i] : 0.0;
            rs.flip_labels = i >= spec.thetas_deg.size();
            rs.seed = CounterRng::mix64(spec.seed ^ (0x1000ULL + i));
            rs.dist_id = "rotated_shared";
            out.push_back(make_rotated_boundary(rs));
        }
        return out;
    }
    if (c.experiment == "fingerprint-only") {
        return {make_grid_images(c.sample_data)};
    }
    throw ConfigError("no sampling sources for experiment " + c.experiment);
}

int cmd_zoo(const RunConfig& c) {
    if (c.experiment == "fingerprint-only")
        throw ConfigError(
            "no models requested (fingerprint-only runs use existing checkpoints)");
    write_runinfo(c);
    if (c.experiment == "ipdetect") {
        if (c.ip.per_family < 1 && c.ip.independents < 1)
            throw ConfigError("no models requested");
        const IpZooBundle b = build_ip_zoo(c.ip);
        save_zoo(b.zoo, zoo_dir(c));
        std::cout << "zoo: " << b.zoo.records.size() << " models -> "
                  << zoo_dir(c).string() << "\n";
    } else if (c.experiment == "taskrel") {
        const TaskrelBundle b = build_taskrel_zoo(c.taskrel);
        save_zoo(b.zoo, zoo_dir(c));
        std::cout << "zoo: " << b.zoo.records.size() << " task models -> "
                  << zoo_dir(c).string() << "\n";
    } else if (c.experiment == "unlearn") {
        const UnlearnBundle b = build_unlearn_zoo(c.unlearn);
        save_zoo(b.zoo, zoo_dir(c));
        std::cout << "zoo: " << b.zoo.records.size() << " models -> "
                  << zoo_dir(c).string() << "\n";
    }
    return kExitOk;
}

int cmd_sample_refs(const RunConfig& c) {
    if (!fs::exists(runinfo_path(c)))
        write_runinfo(c);
    else
        check_runinfo(c);

    ReferenceSet refs;
    const std::uint64_t seed =
        c.refs_seed ? c.refs_seed : CounterRng::mix64(c.seed ^ 0x5e5eULL);

    if (c.experiment == "unlearn") {
        // protocol: the forget points themselves are the reference points
        const UnlearnSpec& u = c.unlearn;
        GridSpec g;
        g.classes = u.classes;
        g.n = u.n_train;
        g.label_noise = u.label_noise;
        g.seed = CounterRng::mix64(u.seed ^ 0x51ULL);
        g.dist_id = "grid" + std::to_string(u.classes);
        const DatasetSplit full = make_grid_images(g);
        CounterRng rng(u.seed, 771);
        std::vector<int> rows(static_cast<std::size_t>(full.n()));
        std::iota(rows.begin(), rows.end(), 0);
        for (int i = full.n() - 1; i > 0; --i) {
            const int j =
                static_cast<int>(rng.next_below(static_cast<std::uint64_t>(i + 1)));
            std::swap(rows[static_cast<std::size_t>(i)], rows[static_cast<std::size_t>(j)]);
        }
        std::vector<int> forget_rows(rows.begin(), rows.begin() + u.forget_count);
        std::sort(forget_rows.begin(), forget_rows.end());
        refs = refs_from_dataset(full.subset(forget_rows, "forget"));
    } else {
        const auto sources = sampling_sources(c);
        if (c.refs_kind == "random") {
            refs = sample_random(sources, c.refs_k, seed);
        } else if (c.refs_kind == "cutmix") {
            refs = sample_cutmix(sources, c.refs_k, seed);
        } else {
            // dedicated probe, excluded from every comparison set
            const DatasetSplit& probe_data = sources.front();
            SgdConfig pcfg{6, 0.05, 32, CounterRng::mix64(c.seed ^ 0x9999ULL)};
            std::ostringstream arch;
            arch << "input:" << probe_data.input_shape[0];
            for (std::size_t i = 1; i < probe_data.input_shape.size(); ++i)
                arch << "x" << probe_data.input_shape[i];
            arch << ",flatten,dense:32,tanh,dense:" << probe_data.num_classes();
            const Model probe = train(arch.str(), probe_data, pcfg, "pgd_probe");
            const ModelField pf(probe);
            refs = sample_pgd(sources, c.refs_k, pf, c.pgd, seed);
        }
    }
    save_refset(refs, refs_path(c));
    std::cout << "refs: K=" << refs.k << " D=" << refs.dim
              << " hash=" << refs.hash() << " -> " << refs_path(c).string() << "\n";
    return kExitOk;
}

int cmd_fingerprint(const RunConfig& c, const std::vector<std::string>& only_ids) {
    check_runinfo(c);
    if (!fs::exists(refs_path(c)))
        throw IncomparableError("no reference set; run 'sample-refs' first");
    const ReferenceSet refs = load_refset(refs_path(c));

    CurveOptions opt;
    opt.steps = c.curve_steps;
    opt.baseline = c.baseline == "random" ? BaselineMode::random : BaselineMode::zero;
    opt.jobs = c.jobs;

    fs::create_directories(fp_dir(c));
    std::vector<std::pair<std::string, Model>> models;
    if (c.experiment == "fingerprint-only") {
        if (c.checkpoints.empty())
            throw ConfigError("fingerprint-only: no model.checkpoints configured");
        for (const auto& p : c.checkpoints) {
            Model m = load_model(p);
            models.emplace_back(m.id, std::move(m));
        }
    } else {
        const Zoo zoo = load_zoo(zoo_dir(c));
        for (const auto& rec : zoo.records) {
            if (!only_ids.empty() &&
                std::find(only_ids.begin(), only_ids.end(), rec.id) == only_ids.end())
                continue;
            models.emplace_back(rec.id, zoo.get(rec.id));
        }
    }
    if (models.empty()) throw ConfigError("fingerprint: no matching model ids");

    for (const auto& [id, model] : models) {
        const CurveSet cs = fingerprint(model, refs, opt);
        save_curveset(cs, fp_dir(c) / (id + ".mgif"));
    }
    std::cout << "fingerprints: " << models.size() << " models, K=" << refs.k
              << " S=" << opt.steps << " -> " << fp_dir(c).string() << "\n";
    return kExitOk;
}

std::vector<CurveSet> load_fingerprints(const RunConfig& c) {
    std::vector<CurveSet> fps;
    if (c.experiment == "fingerprint-only") {
        for (const auto& p : c.checkpoints) {
            const std::string id = p.stem().string();
            fps.push_back(load_curveset(fp_dir(c) / (id + ".mgif"), id));
        }
    } else {
        for (const auto& rec : load_manifest(zoo_dir(c) / "manifest.tsv")) {
            const fs::path p = fp_dir(c) / (rec.id + ".mgif");
            if (!fs::exists(p))
                throw IncomparableError("missing fingerprint for model '" + rec.id +
                                        "'; run 'fingerprint'");
            fps.push_back(load_curveset(p, rec.id));
        }
    }
    return fps;
}

int cmd_distances(const RunConfig& c) {
    check_runinfo(c);
    const auto fps = load_fingerprints(c);
    const DistanceMatrix dm = distance_matrix(fps, c.jobs);
    save_matrix_csv(c.out_dir / "distances.csv", dm.ids, dm.values);
    const AffinityMatrix am = to_affinity(dm);
    save_matrix_csv(c.out_dir / "affinity.csv", am.ids, am.values);
    std::cout << "distances: " << dm.n() << "x" << dm.n() << " -> "
              << (c.out_dir / "distances.csv").string() << "\n";
    return kExitOk;
}

DistanceMatrix reload_distances(const RunConfig& c) {
    const fs::path p = c.out_dir / "distances.csv";
    if (!fs::exists(p))
        throw IncomparableError("no distance matrix; run 'distances' first");
    auto [ids, values] = load_matrix_csv(p);
    DistanceMatrix dm;
    dm.ids = std::move(ids);
    dm.values = std::move(values);
    dm.curves_per_model =
        c.experiment == "unlearn" ? c.unlearn.forget_count : c.refs_k;
    return dm;
}

int cmd_report(const RunConfig& c) {
    check_runinfo(c);
    const DistanceMatrix dm = reload_distances(c);

    if (c.experiment == "ipdetect") {
        const auto records = load_manifest(zoo_dir(c) / "manifest.tsv");
        std::vector<std::pair<std::string, std::string>> lineage;
        std::string victim_id;
        for (const auto& r : records) {
            if (r.kind == "victim") victim_id = r.id;
            else lineage.emplace_back(r.id, r.kind);
        }
        if (victim_id.empty()) throw ConfigError("report: manifest has no victim");
        const DetectionReport rep = detection_report(dm, victim_id, lineage);

        std::ostringstream os;
        os << "victim: " << rep.victim_id << "\n";
        os << "family\tauc\n";
        for (const auto& [family, auc] : rep.family_auc)
            os << family << "\t" << auc << "\n";
        write_text_file(c.out_dir / "detection_report.txt", os.str());

        std::ostringstream scores;
        scores << "id,family,score\n";
        for (const auto& s : rep.suspects)
            scores << s.id << "," << s.lineage << "," << s.score << "\n";
        write_text_file(c.out_dir / "suspect_scores.csv", scores.str());

        for (const auto& [family, points] : rep.family_roc) {
            std::ostringstream roc;
            roc << "fpr,tpr,threshold\n";
            for (const auto& p : points)
                roc << p.fpr << "," << p.tpr << "," << p.threshold << "\n";
            write_text_file(c.out_dir / ("roc_" + family + ".csv"), roc.str());
        }
        std::cout << read_text_file(c.out_dir / "detection_report.txt");
    } else if (c.experiment == "taskrel") {
        const auto records = load_manifest(zoo_dir(c) / "manifest.tsv");
        std::vector<double> boundary;
        for (const auto& r : records) {
            if (r.id.rfind("theta", 0) == 0)
                boundary.push_back(std::stod(r.id.substr(5)));
            else
                boundary.push_back(0.0);  // label-permuted control
        }
        AffinityMatrix am = to_affinity(dm);
        const int n = am.n();
        const auto gt = taskrel_ground_truth(boundary);
        const double rho =
            spearman(upper_triangle(am.values, n), upper_triangle(gt, n));
        const Dendrogram tree = cluster_average(am);

        write_text_file(c.out_dir / "spearman.txt",
                        "spearman_vs_ground_truth=" + std::to_string(rho) + "\n");
        write_text_file(c.out_dir / "tree.nwk", to_newick(tree) + "\n");
        write_text_file(c.out_dir / "tree.dot", to_dot(tree));
        std::cout << "taskrel: spearman=" << rho << "\n";
    } else if (c.experiment == "unlearn") {
        const auto records = load_manifest(zoo_dir(c) / "manifest.tsv");
        std::vector<std::string> approx_ids;
        for (const auto& r : records)
            if (r.kind == "unlearn-approx") approx_ids.push_back(r.id);
        const auto idx = [&](const std::string& id) {
            const auto it = std::find(dm.ids.begin(), dm.ids.end(), id);
            if (it == dm.ids.end())
                throw IncomparableError("report: missing model '" + id + "' in matrix");
            return static_cast<int>(it - dm.ids.begin());
        };
        const int ref = idx("reference");
        const double d_unrel = dm.at(ref, idx("unrelated"));
        const double d_exact = dm.at(ref, idx("exact"));
        std::vector<double> series;
        for (const auto& id : approx_ids) series.push_back(dm.at(ref, idx(id)));
        const UnlearningReport rep = unlearning_report(d_unrel, d_exact, series);

        std::ostringstream os;
        os << "epoch,distance_to_reference\n";
        os << "unrelated," << rep.d_unrelated << "\n";
        os << "exact," << rep.d_exact << "\n";
        for (std::size_t i = 0; i < rep.approx_series.size(); ++i)
            os << (i + 1) << "," << rep.approx_series[i] << "\n";
        write_text_file(c.out_dir / "unlearn_series.csv", os.str());

        std::ostringstream vs;
        vs << "exact_detected=" << (rep.exact_detected ? "true" : "false") << "\n"
           << "approx_incomplete=" << (rep.approx_incomplete ? "true" : "false") << "\n"
           << "forgetting_trend=" << (rep.forgetting_trend ? "true" : "false") << "\n";
        write_text_file(c.out_dir / "unlearn_verdicts.txt", vs.str());
        std::cout << vs.str();
    } else {
        std::cout << "fingerprint-only: distance and affinity matrices are the report\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gradient-field model fingerprinting toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed_flag = 0;
    int jobs_flag = 0, refs_flag = 0, steps_flag = 0;
    std::string baseline_flag;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "run configuration file")->required();
        sub->add_option("--seed", seed_flag, "override config seed");
        sub->add_option("--jobs", jobs_flag, "worker threads");
        sub->add_option("--refs", refs_flag, "override reference point count K");
        sub->add_option("--steps", steps_flag, "override curve steps S");
        sub->add_option("--baseline", baseline_flag, "curve baseline: zero|random");
    };

    auto* zoo_cmd = app.add_subcommand("zoo", "train the experiment model zoo");
    auto* refs_cmd = app.add_subcommand("sample-refs", "sample reference points");
    auto* fp_cmd = app.add_subcommand("fingerprint", "extract model fingerprints");
    auto* dist_cmd = app.add_subcommand("distances", "pairwise fingerprint distances");
    auto* report_cmd = app.add_subcommand("report", "experiment-specific reports");
    std::vector<std::string> only_ids;
    fp_cmd->add_option("ids", only_ids, "restrict to these model ids");
    for (auto* sub : {zoo_cmd, refs_cmd, fp_cmd, dist_cmd, report_cmd}) add_common(sub);

    CLI11_PARSE(app, argc, argv);

    try {
        CliOverrides ov;
        if (seed_flag) ov.seed = seed_flag;
        if (jobs_flag) ov.jobs = jobs_flag;
        if (refs_flag) ov.refs_k = refs_flag;
        if (steps_flag) ov.curve_steps = steps_flag;
        if (!baseline_flag.empty()) ov.baseline = baseline_flag;

        const RunConfig cfg = load_config(config_path, ov);
        if (zoo_cmd->parsed()) return cmd_zoo(cfg);
        if (refs_cmd->parsed()) return cmd_sample_refs(cfg);
        if (fp_cmd->parsed()) return cmd_fingerprint(cfg, only_ids);
        if (dist_cmd->parsed()) return cmd_distances(cfg);
        if (report_cmd->parsed()) return cmd_report(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const IncomparableError& e) {
        std::cerr << "incomparable artifacts: " << e.what() << "\n";
        return kExitIncomparable;
    } catch (const TrainingError& e) {
        std::cerr << "training failure: " << e.what() << "\n";
        return kExitTraining;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
