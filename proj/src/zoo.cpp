#include "mgif/zoo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mgif/io_util.hpp"
#include "mgif/model_io.hpp"
#include "mgif/rng.hpp"

namespace mgif {

Model finetune(const Model& parent, const DatasetSplit& data, FinetuneMode mode,
               const SgdConfig& cfg, const std::string& id,
               int replace_head_classes) {
    Model m = parent;
    m.id = id;

    int last_param = -1;
    for (int i = static_cast<int>(m.layers.size()) - 1; i >= 0; --i) {
        if (m.layers[i].has_params()) {
            last_param = i;
            break;
        }
    }
    if (last_param < 0) throw ConfigError("finetune: model has no parameters");

    if (replace_head_classes > 0) {
        Layer& head = m.layers[static_cast<std::size_t>(last_param)];
        if (head.kind != LayerKind::dense)
            throw ConfigError("finetune: head replacement needs a dense head");
        const int in = head.w.shape[1];
        head.w = Tensor::zeros({replace_head_classes, in});
        head.b = Tensor::zeros({replace_head_classes});
        CounterRng rng(cfg.seed, 977);
        const float limit = std::sqrt(6.0f / static_cast<float>(in + replace_head_classes));
        for (float& v : head.w.data) v = rng.next_uniform(-limit, limit);
        head.out_shape = {replace_head_classes};
        if (last_param != static_cast<int>(m.layers.size()) - 1)
            throw ConfigError("finetune: head replacement needs the dense head last");
    }

    FitOptions opt;
    opt.sgd = cfg;
    if (mode == FinetuneMode::last) {
        opt.trainable.assign(m.layers.size(), 0);
        opt.trainable[static_cast<std::size_t>(last_param)] = 1;
    }
    fit(m, data, opt);
    return m;
}

Model prune(const Model& parent, double fraction, int finetune_epochs,
            const DatasetSplit& data, const SgdConfig& cfg, const std::string& id) {
    if (fraction < 0.0 || fraction > 1.0)
        throw ConfigError("prune: fraction must be in [0,1]");
    Model m = parent;
    m.id = id;

    // global magnitude ranking over weights only
    std::vector<std::pair<float, std::pair<int, int>>> order;  // (|w|, (layer, idx))
    for (std::size_t li = 0; li < m.layers.size(); ++li) {
        if (!m.layers[li].has_params()) continue;
        const auto& w = m.layers[li].w.data;
        for (std::size_t wi = 0; wi < w.size(); ++wi)
            order.push_back({std::abs(w[wi]),
                             {static_cast<int>(li), static_cast<int>(wi)}});
    }
    const auto k = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(order.size())));
    std::stable_sort(order.begin(), order.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 0; i < k && i < order.size(); ++i) {
        const auto [li, wi] = order[i].second;
        m.layers[static_cast<std::size_t>(li)].w.data[static_cast<std::size_t>(wi)] = 0.0f;
    }

    if (finetune_epochs > 0) {
        FitOptions opt;
        opt.sgd = cfg;
        opt.sgd.epochs = finetune_epochs;
        fit(m, data, opt);
    }
    return m;
}

Model extract(const Model& victim, const DatasetSplit& transfer_inputs,
              ExtractMode mode, const std::string& surrogate_arch,
              const SgdConfig& cfg, const std::string& id) {
    if (victim.head_dim() == 1 && mode == ExtractMode::label)
        throw ConfigError("extract: label mode is undefined for regression victims");

    Model surrogate = build_model(surrogate_arch, cfg.seed, id);
    if (surrogate.head_dim() != victim.head_dim())
        throw ShapeError("extract: surrogate head size must match the victim");

    DatasetSplit queries = transfer_inputs;
    FitOptions opt;
    opt.sgd = cfg;

    std::vector<float> probs;
    if (mode == ExtractMode::label) {
        queries.labels = predict_labels(victim, transfer_inputs);
    } else {
        probs = predict_probs(victim, transfer_inputs);
        queries.labels.assign(static_cast<std::size_t>(queries.n()), 0);
        opt.loss = LossKind::soft_ce;
        opt.soft_targets = &probs;
    }
    fit(surrogate, queries, opt);
    return surrogate;
}

Model adversarial_harden(const Model& parent, const DatasetSplit& data,
                         const PgdConfig& pgd, const SgdConfig& cfg,
                         const std::string& id) {
    if (pgd.steps < 1 || pgd.alpha <= 0 || pgd.eps < 0)
        throw ConfigError("adversarial_harden: steps >= 1, alpha > 0, eps >= 0");
    Model m = parent;
    m.id = id;
    FitOptions opt;
    opt.sgd = cfg;
    opt.adversarial = pgd;
    fit(m, data, opt);
    return m;
}

Model unlearn_exact(const DatasetSplit& train_split,
                    const std::vector<int>& forget_ids, const std::string& arch,
                    const SgdConfig& cfg, const std::string& id,
                    std::vector<int>* audit_ids) {
    std::vector<int> keep_rows;
    for (int i = 0; i < train_split.n(); ++i) {
        if (std::find(forget_ids.begin(), forget_ids.end(), train_split.ids[i]) ==
            forget_ids.end())
            keep_rows.push_back(i);
    }
    if (keep_rows.empty())
        throw ConfigError("unlearn_exact: forget set covers the whole train split");

    const DatasetSplit retained = train_split.subset(keep_rows, "retain");
    Model m = build_model(arch, cfg.seed, id);
    FitOptions opt;
    opt.sgd = cfg;
    opt.audit_ids = audit_ids;
    fit(m, retained, opt);
    return m;
}

std::vector<Model> unlearn_approx(const Model& reference,
                                  const DatasetSplit& forget_set,
                                  const DatasetSplit& retained_set,
                                  const UnlearnApproxConfig& cfg,
                                  const std::string& id_prefix) {
    if (cfg.epochs < 1) throw ConfigError("unlearn_approx: epochs must be >= 1");
    Model m = reference;
    std::vector<Model> checkpoints;
    checkpoints.reserve(static_cast<std::size_t>(cfg.epochs));
    for (int e = 0; e < cfg.epochs; ++e) {
        if (cfg.ascent_passes > 0) {
            FitOptions up;
            up.sgd = {cfg.ascent_passes, cfg.ascent_lr, cfg.batch,
                      CounterRng::mix64(cfg.seed) + static_cast<std::uint64_t>(e)};
            up.ascent = true;
            fit(m, forget_set, up);

            FitOptions down;
            down.sgd = {1, cfg.maintain_lr, cfg.batch,
                        CounterRng::mix64(cfg.seed ^ 0xabcdULL) + static_cast<std::uint64_t>(e)};
            fit(m, retained_set, down);
        }
        Model ckpt = m;
        ckpt.id = id_prefix + "_e" + std::to_string(e + 1);
        checkpoints.push_back(std::move(ckpt));
    }
    return checkpoints;
}

const Model& Zoo::get(const std::string& id) const {
    const auto it = models.find(id);
    if (it == models.end()) throw ConfigError("zoo: unknown model id '" + id + "'");
    return it->second;
}

void save_manifest(const Zoo& zoo, const std::filesystem::path& path) {
    std::ostringstream os;
    for (const auto& r : zoo.records) {
        os << r.id << "\t" << r.kind << "\t" << (r.parent.empty() ? "-" : r.parent)
           << "\t" << r.seed << "\t" << r.config_hash << "\n";
    }
    write_text_file(path, os.str());
}

std::vector<ZooRecord> load_manifest(const std::filesystem::path& path) {
    std::istringstream is(read_text_file(path));
    std::vector<ZooRecord> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        ZooRecord r;
        std::string seed, hash;
        if (!std::getline(ls, r.id, '\t') || !std::getline(ls, r.kind, '\t') ||
            !std::getline(ls, r.parent, '\t') || !std::getline(ls, seed, '\t') ||
            !std::getline(ls, hash, '\t'))
            throw IoError("malformed manifest line: " + line);
        if (r.parent == "-") r.parent.clear();
        r.seed = std::stoull(seed);
        r.config_hash = std::stoull(hash);
        out.push_back(std::move(r));
    }
    return out;
}

void save_zoo(const Zoo& zoo, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    save_manifest(zoo, dir / "manifest.tsv");
    for (const auto& [id, model] : zoo.models)
        save_model(model, dir / (id + ".mgmd"));
}

Zoo load_zoo(const std::filesystem::path& dir) {
    Zoo zoo;
    zoo.records = load_manifest(dir / "manifest.tsv");
    for (const auto& r : zoo.records)
        zoo.models.emplace(r.id, load_model(dir / (r.id + ".mgmd"), r.id));
    return zoo;
}

}  // namespace mgif
