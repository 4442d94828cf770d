#include "glisson/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "glisson/error.hpp"
#include "glisson/rng.hpp"

namespace glisson {

std::string to_string(ImageMode mode) {
    return mode == ImageMode::full ? "full" : "roi";
}

ImageMode parse_image_mode(const std::string& name) {
    if (name == "full") return ImageMode::full;
    if (name == "roi") return ImageMode::roi;
    throw ParamError("unknown image mode '" + name + "' (expected full or roi)");
}

int group_stage(int stage, int class_count) {
    if (stage < 0 || stage > 4) throw ParamError("stage must lie in 0..4");
    switch (class_count) {
        case 2: return stage <= 1 ? 0 : 1;
        case 3: return stage == 0 ? 0 : (stage <= 2 ? 1 : 2);
        case 5: return stage;
        default: throw ParamError("class_count must be one of {2,3,5}");
    }
}

namespace {

struct PatientIndex {
    std::vector<std::string> ids;                    // insertion order
    std::map<std::string, int> stage_of;             // patient -> stage
    std::map<std::string, std::vector<int>> elements; // patient -> element indices
};

PatientIndex index_patients(const DatasetManifest& manifest) {
    PatientIndex idx;
    for (std::size_t i = 0; i < manifest.rows.size(); ++i) {
        const ManifestRow& row = manifest.rows[i];
        auto it = idx.stage_of.find(row.patient_id);
        if (it == idx.stage_of.end()) {
            idx.ids.push_back(row.patient_id);
            idx.stage_of[row.patient_id] = row.stage;
        } else if (it->second != row.stage) {
            throw DataError("patient " + row.patient_id + " appears with conflicting stages");
        }
        idx.elements[row.patient_id].push_back(int(i));
    }
    return idx;
}

} // namespace

std::vector<SplitPlan> make_splits(const DatasetManifest& manifest, int folds, int permutations,
                                   std::uint64_t seed) {
    if (folds < 2) throw ParamError("make_splits: need at least 2 folds");
    if (permutations < 1) throw ParamError("make_splits: need at least 1 permutation");
    if (manifest.empty()) throw ParamError("make_splits: manifest is empty");

    const PatientIndex idx = index_patients(manifest);

    std::vector<std::vector<std::string>> by_stage(5);
    for (const auto& id : idx.ids) by_stage[std::size_t(idx.stage_of.at(id))].push_back(id);
    for (int s = 0; s < 5; ++s) {
        const int count = int(by_stage[std::size_t(s)].size());
        if (count > 0 && count < folds) {
            throw ParamError("make_splits: stage " + stage_label(s) + " has only " +
                             std::to_string(count) + " patients, need at least " +
                             std::to_string(folds) + " for " + std::to_string(folds) + " folds");
        }
    }

    std::vector<SplitPlan> plans;
    plans.reserve(std::size_t(permutations));
    for (int perm = 0; perm < permutations; ++perm) {
        Rng rng(mix_seed(seed, std::uint64_t(perm)));

        // Shuffle patients within each stage, then deal the concatenated
        // stream round-robin so every fold ends up within one patient of the
        // others, per stage and in total.
        std::vector<std::vector<std::string>> fold_patients;
        fold_patients.resize(std::size_t(folds));
        int next_fold = 0;
        for (int s = 0; s < 5; ++s) {
            std::vector<std::string> patients = by_stage[std::size_t(s)];
            for (int i = int(patients.size()) - 1; i > 0; --i) {
                std::swap(patients[std::size_t(i)], patients[std::size_t(rng.uniform_int(0, i))]);
            }
            for (const auto& id : patients) {
                fold_patients[std::size_t(next_fold)].push_back(id);
                next_fold = (next_fold + 1) % folds;
            }
        }

        SplitPlan plan;
        plan.permutation = perm;
        plan.folds.resize(std::size_t(folds));
        for (int f = 0; f < folds; ++f) {
            FoldSplit& split = plan.folds[std::size_t(f)];
            std::set<std::string> test_ids(fold_patients[std::size_t(f)].begin(),
                                           fold_patients[std::size_t(f)].end());
            std::set<std::string> val_ids;
            if (folds >= 3) {
                const int vf = (f + 1) % folds;
                val_ids.insert(fold_patients[std::size_t(vf)].begin(),
                               fold_patients[std::size_t(vf)].end());
            } else {
                // Two folds cannot spare a whole validation fold; split the
                // non-test fold's patients half and half instead.
                const auto& rest = fold_patients[std::size_t((f + 1) % folds)];
                for (std::size_t i = 0; i < rest.size() / 2; ++i) val_ids.insert(rest[i]);
                if (val_ids.empty() && !rest.empty()) val_ids.insert(rest.front());
            }

            for (const auto& id : idx.ids) {
                const auto& elems = idx.elements.at(id);
                if (test_ids.count(id)) {
                    split.test.insert(split.test.end(), elems.begin(), elems.end());
                } else if (val_ids.count(id)) {
                    split.val.insert(split.val.end(), elems.begin(), elems.end());
                } else {
                    split.train.insert(split.train.end(), elems.begin(), elems.end());
                }
            }
            if (split.train.empty() || split.val.empty() || split.test.empty()) {
                throw ParamError("make_splits: a fold came up empty; too few patients");
            }
        }
        assert_no_leakage(plan, manifest);
        plans.push_back(std::move(plan));
    }
    return plans;
}

void assert_no_leakage(const SplitPlan& plan, const DatasetManifest& manifest) {
    for (const FoldSplit& fold : plan.folds) {
        std::set<std::string> train_p, val_p, test_p;
        for (int i : fold.train) train_p.insert(manifest.rows[std::size_t(i)].patient_id);
        for (int i : fold.val) val_p.insert(manifest.rows[std::size_t(i)].patient_id);
        for (int i : fold.test) test_p.insert(manifest.rows[std::size_t(i)].patient_id);
        for (const auto& id : test_p) {
            if (train_p.count(id) || val_p.count(id)) {
                throw std::logic_error("patient leakage: " + id + " crosses the test boundary");
            }
        }
        for (const auto& id : val_p) {
            if (train_p.count(id)) {
                throw std::logic_error("patient leakage: " + id + " is in both train and val");
            }
        }
    }
}

double accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
    if (pred.size() != truth.size()) throw ParamError("accuracy: length mismatch");
    if (pred.empty()) throw ParamError("accuracy: empty prediction list");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == truth[i];
    return double(correct) / double(pred.size());
}

double mae(const std::vector<int>& pred, const std::vector<int>& truth) {
    if (pred.size() != truth.size()) throw ParamError("mae: length mismatch");
    if (pred.empty()) throw ParamError("mae: empty prediction list");
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) sum += std::abs(pred[i] - truth[i]);
    return sum / double(pred.size());
}

namespace {

/// Assembles model inputs for the given element indices. For cnnl/concat the
/// binary line raster rides along as a second image channel; features are
/// z-scored with the provided training-split statistics.
nn::SampleSet assemble(const ElementStore& store, const ExperimentConfig& config,
                       const std::vector<int>& indices, const FeatureStats* stats) {
    const bool wants_images = config.model != nn::ModelKind::mlnn;
    const bool wants_line = config.model == nn::ModelKind::cnnl ||
                            config.model == nn::ModelKind::concat;
    const bool wants_features = config.model == nn::ModelKind::mlnn ||
                                config.model == nn::ModelKind::concat;

    nn::SampleSet set;
    const int n = int(indices.size());
    if (wants_images) {
        const int channels = wants_line ? 2 : 1;
        set.images = nn::Tensor({n, channels, store.img_h, store.img_w});
        const std::size_t plane = std::size_t(store.img_h) * std::size_t(store.img_w);
        for (int i = 0; i < n; ++i) {
            const nn::Tensor& img = store.images[std::size_t(indices[std::size_t(i)])];
            double* dst = set.images.ptr() + std::size_t(i) * channels * plane;
            std::copy(img.data.begin(), img.data.end(), dst);
            if (wants_line) {
                const nn::Tensor& line = store.lines[std::size_t(indices[std::size_t(i)])];
                std::copy(line.data.begin(), line.data.end(), dst + plane);
            }
        }
    }
    if (wants_features) {
        set.features = nn::Tensor({n, kFeatureCount});
        for (int i = 0; i < n; ++i) {
            const FeatureVector raw = store.features[std::size_t(indices[std::size_t(i)])];
            const auto a = (stats ? normalize(raw, *stats) : raw).as_array();
            std::copy(a.begin(), a.end(),
                      set.features.ptr() + std::size_t(i) * std::size_t(kFeatureCount));
        }
    }
    set.labels.reserve(std::size_t(n));
    for (int idx : indices) {
        set.labels.push_back(
            group_stage(store.manifest.rows[std::size_t(idx)].stage, config.class_count));
    }
    return set;
}

void check_artifacts(const ElementStore& store, const ExperimentConfig& config) {
    const bool needs_images = config.model != nn::ModelKind::mlnn;
    const bool needs_lines = config.model == nn::ModelKind::cnnl ||
                             config.model == nn::ModelKind::concat;
    const bool needs_features = config.model == nn::ModelKind::mlnn ||
                                config.model == nn::ModelKind::concat;
    if (needs_images && !store.has_images) {
        throw DataError("experiment needs processed images; run `preprocess` first");
    }
    if (needs_lines && !store.has_lines) {
        throw DataError("experiment needs extracted lines; run `extract` first");
    }
    if (needs_features && !store.has_features) {
        throw DataError("experiment needs the feature CSV; run `features` first");
    }
}

/// Trains the model for one (permutation, fold) cell and scores its test set.
SingleTrainResult train_cell(const ElementStore& store, const ExperimentConfig& config,
                             const FoldSplit& fold, int permutation, int fold_index) {
    const bool needs_features = config.model == nn::ModelKind::mlnn ||
                                config.model == nn::ModelKind::concat;
    FeatureStats stats;
    const FeatureStats* stats_ptr = nullptr;
    if (needs_features) {
        std::vector<FeatureVector> train_feats;
        train_feats.reserve(fold.train.size());
        for (int idx : fold.train) train_feats.push_back(store.features[std::size_t(idx)]);
        stats = fit_feature_stats(train_feats);
        stats_ptr = &stats;
    }

    nn::SampleSet train_set = assemble(store, config, fold.train, stats_ptr);
    nn::SampleSet val_set = assemble(store, config, fold.val, stats_ptr);
    nn::SampleSet test_set = assemble(store, config, fold.test, stats_ptr);

    const std::uint64_t cell_seed =
        mix_seed(config.seed, std::uint64_t(permutation) * 1000 + std::uint64_t(fold_index));
    nn::Model model(
        nn::build_model(config.model, config.class_count, store.img_h, store.img_w), cell_seed);
    nn::TrainConfig cell_cfg = config.train;
    cell_cfg.seed = cell_seed;
    nn::train(model, train_set, val_set, cell_cfg);

    const std::vector<int> preds = nn::predict_set(model, test_set);
    SingleTrainResult result{std::move(model), accuracy(preds, test_set.labels),
                             mae(preds, test_set.labels)};
    return result;
}

} // namespace

SingleTrainResult train_single(const ElementStore& store, const ExperimentConfig& config) {
    check_artifacts(store, config);
    const std::vector<SplitPlan> plans =
        make_splits(store.manifest, config.folds, 1, mix_seed(config.seed, 0x59));
    return train_cell(store, config, plans[0].folds[0], 0, 0);
}

ExperimentReport run_experiment(const ElementStore& store, const ExperimentConfig& config) {
    check_artifacts(store, config);
    const std::vector<SplitPlan> plans =
        make_splits(store.manifest, config.folds, config.permutations, mix_seed(config.seed, 0x59));

    ExperimentReport report;
    report.model = config.model;
    report.mode = config.mode;
    report.class_count = config.class_count;

    for (const SplitPlan& plan : plans) {
        for (int f = 0; f < config.folds; ++f) {
            SingleTrainResult cell_result =
                train_cell(store, config, plan.folds[std::size_t(f)], plan.permutation, f);
            CellResult cell;
            cell.permutation = plan.permutation;
            cell.fold = f;
            cell.acc = cell_result.acc;
            cell.mae = cell_result.mae;
            report.cells.push_back(cell);
        }
    }

    const double n = double(report.cells.size());
    for (const CellResult& c : report.cells) {
        report.acc_mean += c.acc;
        report.mae_mean += c.mae;
    }
    report.acc_mean /= n;
    report.mae_mean /= n;
    if (report.cells.size() > 1) {
        double va = 0.0, vm = 0.0;
        for (const CellResult& c : report.cells) {
            va += (c.acc - report.acc_mean) * (c.acc - report.acc_mean);
            vm += (c.mae - report.mae_mean) * (c.mae - report.mae_mean);
        }
        report.acc_std = std::sqrt(va / (n - 1.0));
        report.mae_std = std::sqrt(vm / (n - 1.0));
    }
    return report;
}

} // namespace glisson
