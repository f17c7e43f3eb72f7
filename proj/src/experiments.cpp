#include "mgif/experiments.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "mgif/io_util.hpp"
#include "mgif/parallel.hpp"
#include "mgif/rng.hpp"

namespace mgif {

namespace {

std::uint64_t hash_stream(const std::ostringstream& os) { return fnv1a64(os.str()); }

}  // namespace

std::uint64_t IpZooSpec::config_hash() const {
    std::ostringstream os;
    os << "ip|" << arch << "|" << classes << "|" << per_family << "|"
       << independents << "|" << n_train << "|" << n_transfer << "|" << n_aux
       << "|" << noise << "|" << label_noise << "|" << seed << "|"
       << base_epochs << "|" << base_lr
       << "|" << batch << "|" << finetune_epochs << "|" << finetune_all_lr << "|"
       << finetune_last_lr << "|" << prune_finetune_epochs << "|"
       << extract_epochs << "|" << harden_epochs << "|" << harden_lr << "|"
       << harden_pgd.steps
       << "|" << harden_pgd.alpha << "|" << harden_pgd.eps;
    for (double f : prune_fractions) os << "|" << f;
    return hash_stream(os);
}

DatasetSplit make_attack_queries(const GridSpec& base, int n, std::uint64_t seed) {
    GridSpec g = base;
    g.n = n;
    g.seed = CounterRng::mix64(seed);
    g.label_noise = 0.0f;
    const DatasetSplit nat = make_grid_images(g);
    CounterRng rng(seed, 57);
    const int d = nat.dim();

    DatasetSplit out;
    out.input_shape = nat.input_shape;
    out.distribution_id = nat.distribution_id + "_queries";
    out.split_tag = "transfer";
    std::vector<float> q(static_cast<std::size_t>(d));
    for (int i = 0; i < n; ++i) {
        const float* x = nat.sample(i);
        q.assign(x, x + d);
        const int mode = static_cast<int>(rng.next_below(100));
        if (mode < 25) {
            // natural sample
        } else if (mode < 45) {
            // splice in the tail of another sample
            const float* y = nat.sample(static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n))));
            const int cut = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(d - 2)));
            for (int j = cut; j < d; ++j) q[static_cast<std::size_t>(j)] = y[j];
        } else if (mode < 70) {
            // intensity ramp toward the black image
            const float a = rng.next_float();
            for (auto& v : q) v *= a;
        } else if (mode < 95) {
            // convex blend of two samples
            const float a = rng.next_float();
            const float* y = nat.sample(static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n))));
            for (int j = 0; j < d; ++j)
                q[static_cast<std::size_t>(j)] = a * x[j] + (1.0f - a) * y[j];
        } else {
            // uniform noise image
            for (auto& v : q) v = rng.next_float();
        }
        out.inputs.insert(out.inputs.end(), q.begin(), q.end());
        out.labels.push_back(0);  // attacker relabels via the victim
        out.ids.push_back(i);
    }
    return out;
}

std::uint64_t TaskrelSpec::config_hash() const {
    std::ostringstream os;
    os << "taskrel|" << arch << "|" << n_train << "|" << epochs << "|" << lr
       << "|" << batch << "|" << refs_k << "|" << curve_steps << "|" << seed
       << "|" << label_permuted_control;
    for (double t : thetas_deg) os << "|" << t;
    return hash_stream(os);
}

std::uint64_t UnlearnSpec::config_hash() const {
    std::ostringstream os;
    os << "unlearn|" << arch << "|" << classes << "|" << n_train << "|"
       << forget_count << "|" << label_noise << "|" << epochs << "|" << lr
       << "|" << batch << "|" << approx.epochs << "|" << approx.ascent_passes
       << "|" << approx.ascent_lr << "|" << approx.maintain_lr << "|"
       << curve_steps << "|" << seed;
    return hash_stream(os);
}

IpZooBundle build_ip_zoo(const IpZooSpec& spec) {
    if (spec.per_family < 1 || spec.independents < 1)
        throw ConfigError("ip zoo: per_family and independents must be >= 1");

    const std::uint64_t cfg_hash = spec.config_hash();
    IpZooBundle out;

    GridSpec g;
    g.classes = spec.classes;
    g.noise = spec.noise;
    g.label_noise = spec.label_noise;
    g.dist_id = "grid" + std::to_string(spec.classes);

    g.n = spec.n_train;
    g.seed = CounterRng::mix64(spec.seed ^ 0x11ULL);
    g.tag = "train";
    out.train = make_grid_images(g);

    out.transfer = make_attack_queries(g, spec.n_transfer,
                                       CounterRng::mix64(spec.seed ^ 0x22ULL));

    g.n = spec.n_aux;
    g.label_noise = 0.0f;
    g.seed = CounterRng::mix64(spec.seed ^ 0x33ULL);
    g.tag = "holdout";
    g.id_offset = spec.n_train + spec.n_transfer;
    out.aux = make_grid_images(g);

    Zoo& zoo = out.zoo;
    auto add = [&](Model m, const std::string& kind, const std::string& parent,
                   std::uint64_t seed) {
        zoo.records.push_back({m.id, kind, parent, seed, cfg_hash});
        zoo.models.emplace(m.id, std::move(m));
    };

    // victim first: every derived lineage branches from it
    const std::uint64_t victim_seed = CounterRng::mix64(spec.seed ^ 0x100ULL);
    out.victim_id = "victim";
    {
        SgdConfig cfg{spec.base_epochs, spec.base_lr, spec.batch, victim_seed};
        add(train(spec.arch, out.train, cfg, out.victim_id), "victim", "", victim_seed);
    }
    const Model& victim = zoo.get(out.victim_id);

    struct Job {
        std::string id, kind;
        std::uint64_t seed;
        std::function<Model()> run;
    };
    std::vector<Job> jobs_list;
    auto seed_for = [&](const std::string& id) {
        return CounterRng::mix64(spec.seed ^ fnv1a64(id));
    };

    for (int i = 0; i < spec.per_family; ++i) {
        const std::string sfx = "_" + std::to_string(i);
        {
            const std::string id = "ft_all" + sfx;
            const auto s = seed_for(id);
            jobs_list.push_back({id, "finetune-all", s, [=, &out, &victim] {
                SgdConfig cfg{spec.finetune_epochs, spec.finetune_all_lr, spec.batch, s};
                return finetune(victim, out.aux, FinetuneMode::all, cfg, id);
            }});
        }
        {
            const std::string id = "ft_last" + sfx;
            const auto s = seed_for(id);
            jobs_list.push_back({id, "finetune-last", s, [=, &out, &victim] {
                SgdConfig cfg{spec.finetune_epochs, spec.finetune_last_lr, spec.batch, s};
                return finetune(victim, out.aux, FinetuneMode::last, cfg, id);
            }});
        }
        {
            const std::string id = "pruned" + sfx;
            const auto s = seed_for(id);
            const double frac =
                spec.prune_fractions[i % spec.prune_fractions.size()];
            jobs_list.push_back({id, "pruned", s, [=, &out, &victim] {
                SgdConfig cfg{spec.prune_finetune_epochs, spec.finetune_all_lr,
                              spec.batch, s};
                return prune(victim, frac, spec.prune_finetune_epochs, out.aux, cfg, id);
            }});
        }
        {
            const std::string id = "ext_label" + sfx;
            const auto s = seed_for(id);
            jobs_list.push_back({id, "extract-label", s, [=, &out, &victim] {
                SgdConfig cfg{spec.extract_epochs, spec.base_lr, spec.batch, s};
                return extract(victim, out.transfer, ExtractMode::label, spec.arch, cfg, id);
            }});
        }
        {
            const std::string id = "ext_prob" + sfx;
            const auto s = seed_for(id);
            jobs_list.push_back({id, "extract-prob", s, [=, &out, &victim] {
                SgdConfig cfg{spec.extract_epochs, spec.base_lr, spec.batch, s};
                return extract(victim, out.transfer, ExtractMode::prob, spec.arch, cfg, id);
            }});
        }
        {
            const std::string id = "ext_adv" + sfx;
            const auto s = seed_for(id);
            jobs_list.push_back({id, "extract-adv", s, [=, &out, &victim] {
                SgdConfig cfg{spec.extract_epochs, spec.base_lr, spec.batch, s};
                Model stolen = extract(victim, out.transfer, ExtractMode::label,
                                       spec.arch, cfg, id);
                DatasetSplit harden_data = out.transfer;
                harden_data.labels = predict_labels(victim, out.transfer);
                SgdConfig hcfg{spec.harden_epochs, spec.harden_lr, spec.batch,
                               CounterRng::mix64(s)};
                return adversarial_harden(stolen, harden_data, spec.harden_pgd, hcfg, id);
            }});
        }
    }
    for (int i = 0; i < spec.independents; ++i) {
        const std::string id = "indep_" + std::to_string(i);
        const auto s = seed_for(id);
        jobs_list.push_back({id, "independent", s, [=, &spec] {
            GridSpec gi;
            gi.classes = spec.classes;
            gi.noise = spec.noise;
            gi.label_noise = spec.label_noise;
            gi.dist_id = "grid" + std::to_string(spec.classes);
            gi.n = spec.n_train;
            gi.seed = CounterRng::mix64(s ^ 0x44ULL);
            gi.tag = "train";
            const DatasetSplit own = make_grid_images(gi);
            SgdConfig cfg{spec.base_epochs, spec.base_lr, spec.batch, s};
            return train(spec.arch, own, cfg, id);
        }});
    }

    std::vector<Model> built(jobs_list.size());
    parallel_for(static_cast<std::int64_t>(jobs_list.size()), spec.jobs,
                 [&](std::int64_t i) { built[i] = jobs_list[i].run(); });
    for (std::size_t i = 0; i < jobs_list.size(); ++i) {
        const auto& j = jobs_list[i];
        const std::string parent = j.kind == "independent" ? "" : out.victim_id;
        zoo.records.push_back({j.id, j.kind, parent, j.seed, cfg_hash});
        zoo.models.emplace(j.id, std::move(built[i]));
        out.suspect_lineage.emplace_back(j.id, j.kind);
    }
    return out;
}

std::vector<CurveSet> fingerprint_zoo(const Zoo& zoo, const ReferenceSet& refs,
                                      const CurveOptions& opt, int jobs) {
    std::vector<CurveSet> fps(zoo.records.size());
    parallel_for(static_cast<std::int64_t>(zoo.records.size()), jobs,
                 [&](std::int64_t i) {
                     const auto& rec = zoo.records[static_cast<std::size_t>(i)];
                     fps[static_cast<std::size_t>(i)] =
                         fingerprint(zoo.get(rec.id), refs, opt);
                 });
    return fps;
}

IpDetectResult run_ipdetect(const IpZooBundle& bundle, int refs_k, int steps,
                            std::uint64_t ref_seed, int jobs) {
    // patch-mixed reference points probe the ambiguous regions where model
    // identity lives; plain random points mostly land where every model
    // agrees
    const DatasetSplit sources[2] = {bundle.train, bundle.transfer};
    const ReferenceSet refs = sample_cutmix(sources, refs_k, ref_seed);

    CurveOptions copt;
    copt.steps = steps;
    const auto fps = fingerprint_zoo(bundle.zoo, refs, copt, jobs);

    IpDetectResult out;
    out.refset_hash = refs.hash();
    out.distances = distance_matrix(fps, jobs);
    out.report = detection_report(out.distances, bundle.victim_id,
                                  bundle.suspect_lineage);
    return out;
}

TaskrelBundle build_taskrel_zoo(const TaskrelSpec& spec) {
    struct Task {
        std::string id;
        double theta;
        bool flip;
    };
    std::vector<Task> tasks;
    for (double t : spec.thetas_deg)
        tasks.push_back({"theta" + std::to_string(static_cast<int>(t)), t, false});
    if (spec.label_permuted_control) tasks.push_back({"control_perm", 0.0, true});
    if (tasks.size() < 3) throw ConfigError("taskrel: need at least 3 tasks");

    TaskrelBundle out;
    // identical input distribution for every task: only the labelling varies
    out.data.resize(tasks.size());
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        RotatedSpec rs;
        rs.n = spec.n_train;
        rs.theta_deg = tasks[i].theta;
        rs.flip_labels = tasks[i].flip;
        rs.seed = CounterRng::mix64(spec.seed ^ (0x1000ULL + i));
        rs.dist_id = "rotated_shared";
        out.data[i] = make_rotated_boundary(rs);
    }

    const std::uint64_t cfg_hash = spec.config_hash();
    std::vector<Model> built(tasks.size());
    parallel_for(static_cast<std::int64_t>(tasks.size()), spec.jobs, [&](std::int64_t i) {
        const auto s = CounterRng::mix64(spec.seed ^ fnv1a64(tasks[i].id));
        SgdConfig cfg{spec.epochs, spec.lr, spec.batch, s};
        built[i] = train(spec.arch, out.data[static_cast<std::size_t>(i)], cfg, tasks[i].id);
    });
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const auto s = CounterRng::mix64(spec.seed ^ fnv1a64(tasks[i].id));
        out.zoo.records.push_back({tasks[i].id, "task", "", s, cfg_hash});
        out.zoo.models.emplace(tasks[i].id, std::move(built[i]));
        out.task_ids.push_back(tasks[i].id);
        // a label permutation leaves the boundary where it was
        out.boundary_deg.push_back(tasks[i].theta);
    }
    return out;
}

std::vector<double> taskrel_ground_truth(std::span<const double> boundary_deg) {
    const int n = static_cast<int>(boundary_deg.size());
    std::vector<double> gt(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            gt[static_cast<std::size_t>(i) * n + j] =
                -std::abs(boundary_deg[i] - boundary_deg[j]);
    return gt;
}

TaskrelResult run_taskrel(const TaskrelSpec& spec) {
    TaskrelBundle bundle = build_taskrel_zoo(spec);

    const ReferenceSet refs = sample_random(bundle.data, spec.refs_k,
                                            CounterRng::mix64(spec.seed ^ 0x2000ULL));
    CurveOptions copt;
    copt.steps = spec.curve_steps;
    const auto fps = fingerprint_zoo(bundle.zoo, refs, copt, spec.jobs);

    TaskrelResult out;
    out.task_ids = bundle.task_ids;
    out.distances = distance_matrix(fps, spec.jobs);
    out.affinity = to_affinity(out.distances);
    out.tree = cluster_average(out.affinity);

    const int n = static_cast<int>(bundle.task_ids.size());
    out.gt_upper = upper_triangle(taskrel_ground_truth(bundle.boundary_deg), n);
    out.affinity_upper = upper_triangle(out.affinity.values, n);
    out.spearman_rho = spearman(out.affinity_upper, out.gt_upper);
    return out;
}

UnlearnBundle build_unlearn_zoo(const UnlearnSpec& spec) {
    if (spec.forget_count >= spec.n_train)
        throw ConfigError("unlearn: forget set must be smaller than the train split");
    if (spec.forget_count < 1) throw ConfigError("unlearn: empty forget set");

    UnlearnBundle out;
    GridSpec g;
    g.classes = spec.classes;
    g.n = spec.n_train;
    g.label_noise = spec.label_noise;
    g.seed = CounterRng::mix64(spec.seed ^ 0x51ULL);
    g.dist_id = "grid" + std::to_string(spec.classes);
    out.full = make_grid_images(g);

    // the points requested to be deleted: a uniform random draw
    CounterRng rng(spec.seed, 771);
    std::vector<int> rows(static_cast<std::size_t>(out.full.n()));
    std::iota(rows.begin(), rows.end(), 0);
    for (int i = out.full.n() - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(i + 1)));
        std::swap(rows[static_cast<std::size_t>(i)], rows[static_cast<std::size_t>(j)]);
    }
    std::vector<int> forget_rows(rows.begin(), rows.begin() + spec.forget_count);
    std::vector<int> retained_rows(rows.begin() + spec.forget_count, rows.end());
    std::sort(forget_rows.begin(), forget_rows.end());
    std::sort(retained_rows.begin(), retained_rows.end());

    out.forget = out.full.subset(forget_rows, "forget");
    out.retained = out.full.subset(retained_rows, "retain");

    const auto s_ref = CounterRng::mix64(spec.seed ^ 0x61ULL);
    const auto s_unrel = CounterRng::mix64(spec.seed ^ 0x62ULL);
    const auto s_exact = CounterRng::mix64(spec.seed ^ 0x63ULL);

    Model reference, unrelated, exact;
    {
        struct Item {
            Model* slot;
            std::function<Model()> run;
        };
        Item items[3] = {
            {&reference, [&] {
                 return train(spec.arch, out.full, {spec.epochs, spec.lr, spec.batch, s_ref},
                              "reference");
             }},
            {&unrelated, [&] {
                 return train(spec.arch, out.full, {spec.epochs, spec.lr, spec.batch, s_unrel},
                              "unrelated");
             }},
            {&exact, [&] {
                 return unlearn_exact(out.full, out.forget.ids, spec.arch,
                                      {spec.epochs, spec.lr, spec.batch, s_exact}, "exact");
             }},
        };
        parallel_for(3, spec.jobs, [&](std::int64_t i) { *items[i].slot = items[i].run(); });
    }

    UnlearnApproxConfig acfg = spec.approx;
    acfg.seed = CounterRng::mix64(spec.seed ^ 0x64ULL);
    auto checkpoints = unlearn_approx(reference, out.forget, out.retained, acfg, "approx");

    const std::uint64_t cfg_hash = spec.config_hash();
    auto add = [&](Model m, const std::string& kind, const std::string& parent,
                   std::uint64_t seed) {
        out.zoo.records.push_back({m.id, kind, parent, seed, cfg_hash});
        out.zoo.models.emplace(m.id, std::move(m));
    };
    add(std::move(reference), "victim", "", s_ref);
    add(std::move(unrelated), "unrelated", "", s_unrel);
    add(std::move(exact), "unlearn-exact", "", s_exact);
    for (auto& ckpt : checkpoints) {
        out.checkpoint_ids.push_back(ckpt.id);
        add(std::move(ckpt), "unlearn-approx", "reference", acfg.seed);
    }
    return out;
}

UnlearnResult run_unlearn(const UnlearnSpec& spec) {
    UnlearnBundle bundle = build_unlearn_zoo(spec);

    // the forget points themselves anchor every curve
    const ReferenceSet refs = refs_from_dataset(bundle.forget);
    CurveOptions copt;
    copt.steps = spec.curve_steps;
    copt.jobs = spec.jobs;

    const CurveSet fp_ref = fingerprint(bundle.zoo.get("reference"), refs, copt);
    const CurveSet fp_unrel = fingerprint(bundle.zoo.get("unrelated"), refs, copt);
    const CurveSet fp_exact = fingerprint(bundle.zoo.get("exact"), refs, copt);

    UnlearnResult out;
    out.refset_hash = refs.hash();
    const double d_unrel = model_distance(fp_ref, fp_unrel);
    const double d_exact = model_distance(fp_ref, fp_exact);
    std::vector<double> series;
    for (const auto& id : bundle.checkpoint_ids) {
        const CurveSet fp = fingerprint(bundle.zoo.get(id), refs, copt);
        series.push_back(model_distance(fp_ref, fp));
        out.checkpoint_ids.push_back(id);
    }
    out.report = unlearning_report(d_unrel, d_exact, series);
    return out;
}

}  // namespace mgif
