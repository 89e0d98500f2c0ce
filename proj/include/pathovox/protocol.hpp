#ifndef PATHOVOX_PROTOCOL_HPP
#define PATHOVOX_PROTOCOL_HPP

// Experiment protocol: stratified splits, 5-fold grid-search CV, final
// training, test evaluation, and the per-layer sweep. All randomness is
// derived from one master seed through tagged forks, so every work unit
// (cell x fold, layer) draws an independent stream and results never depend
// on execution order or worker count.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "pathovox/core.hpp"
#include "pathovox/ffn.hpp"
#include "pathovox/gbt.hpp"
#include "pathovox/metrics.hpp"
#include "pathovox/smote.hpp"
#include "pathovox/svm.hpp"

namespace pathovox {

// Stable child seed for a tagged work unit.
inline std::uint64_t subseed(std::uint64_t seed, std::uint64_t a) {
    return Rng(seed).fork(a).next_u64();
}
inline std::uint64_t subseed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    return Rng(seed).fork(a).fork(b).next_u64();
}
inline std::uint64_t subseed(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                             std::uint64_t c) {
    return Rng(seed).fork(a).fork(b).fork(c).next_u64();
}

// Runs fn(0..n-1) on up to `workers` threads. Work units must be independent;
// any exception escaping fn is rethrown on the caller after all joins.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
    if (n == 0) return;
    workers = std::min(std::max<std::size_t>(workers, 1), n);
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::atomic<bool> failed{false};
    auto body = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) break;
            try {
                fn(i);
            } catch (...) {
                bool expected = false;
                if (failed.compare_exchange_strong(expected, true))
                    first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
    if (failed.load()) std::rethrow_exception(first_error);
}

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

// 80/20-style stratified split. Per-class test counts follow the
// largest-remainder method so the total equals round(N * fraction); class
// membership of each index is decided by a per-class shuffled draw.
inline SplitIndices stratified_split(const Dataset& data, double test_fraction,
                                     std::uint64_t seed) {
    data.validate();
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        fail_config("split_bad_fraction", "test fraction must lie in (0, 1)");
    const std::size_t k = data.num_classes();
    std::vector<std::vector<std::size_t>> members(k);
    for (std::size_t i = 0; i < data.size(); ++i)
        members[static_cast<std::size_t>(data.labels[i])].push_back(i);
    for (std::size_t c = 0; c < k; ++c)
        if (members[c].size() < 2)
            fail_data("split_class_too_small",
                      "class " + data.vocab.name(c) + " has fewer than 2 samples");

    const auto total_test = static_cast<std::size_t>(
        std::llround(static_cast<double>(data.size()) * test_fraction));
    std::vector<std::size_t> take(k, 0);
    std::vector<std::pair<double, std::size_t>> remainders;  // (-remainder, class)
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < k; ++c) {
        const double raw = static_cast<double>(members[c].size()) * test_fraction;
        take[c] = static_cast<std::size_t>(std::floor(raw));
        assigned += take[c];
        remainders.emplace_back(-(raw - std::floor(raw)), c);
    }
    std::sort(remainders.begin(), remainders.end());
    for (std::size_t r = 0; assigned < total_test && r < remainders.size(); ++r, ++assigned)
        ++take[remainders[r].second];

    const Rng root(seed);
    SplitIndices out;
    for (std::size_t c = 0; c < k; ++c) {
        Rng rng = root.fork(c);
        const auto perm = seeded_shuffle(members[c].size(), rng);
        for (std::size_t p = 0; p < members[c].size(); ++p) {
            (p < take[c] ? out.test : out.train).push_back(members[c][perm[p]]);
        }
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

struct FoldIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> valid;
};

// Per-class chunked k-fold: each class's shuffled members are dealt into k
// contiguous chunks whose sizes differ by at most one, earlier folds taking
// the extras.
inline std::vector<FoldIndices> stratified_kfold(const Dataset& data, std::size_t k,
                                                 std::uint64_t seed) {
    data.validate();
    if (k < 2) fail_config("kfold_bad_k", "k must be >= 2");
    const std::size_t num_classes = data.num_classes();
    std::vector<std::vector<std::size_t>> members(num_classes);
    for (std::size_t i = 0; i < data.size(); ++i)
        members[static_cast<std::size_t>(data.labels[i])].push_back(i);
    for (std::size_t c = 0; c < num_classes; ++c)
        if (members[c].size() < k)
            fail_data("kfold_class_too_small", "class " + data.vocab.name(c) +
                                                   " has fewer samples than folds");

    std::vector<FoldIndices> folds(k);
    const Rng root(seed);
    for (std::size_t c = 0; c < num_classes; ++c) {
        Rng rng = root.fork(c);
        const auto perm = seeded_shuffle(members[c].size(), rng);
        const std::size_t base = members[c].size() / k;
        const std::size_t extra = members[c].size() % k;
        std::size_t pos = 0;
        for (std::size_t f = 0; f < k; ++f) {
            const std::size_t len = base + (f < extra ? 1 : 0);
            for (std::size_t j = 0; j < len; ++j) {
                const std::size_t row = members[c][perm[pos + j]];
                folds[f].valid.push_back(row);
                for (std::size_t g = 0; g < k; ++g)
                    if (g != f) folds[g].train.push_back(row);
            }
            pos += len;
        }
    }
    for (auto& f : folds) {
        std::sort(f.train.begin(), f.train.end());
        std::sort(f.valid.begin(), f.valid.end());
    }
    return folds;
}

enum class ModelFamily { Svm, Ffn, Xgb };

inline const char* family_name(ModelFamily f) {
    switch (f) {
        case ModelFamily::Svm: return "svm";
        case ModelFamily::Ffn: return "ffn";
        default: return "xgb";
    }
}

inline ModelFamily family_from_name(const std::string& s) {
    if (s == "svm") return ModelFamily::Svm;
    if (s == "ffn") return ModelFamily::Ffn;
    if (s == "xgb") return ModelFamily::Xgb;
    fail_config("bad_model_family", "unknown model family: " + s);
}

// One hyperparameter setting; only the fields of `family` are meaningful.
struct HyperCell {
    ModelFamily family = ModelFamily::Svm;
    double svm_gamma = 0, svm_c = 0;
    std::size_t xgb_depth = 0;
    double xgb_eta = 0, xgb_min_child = 0;
    double ffn_lr = 0;
    Activation ffn_act = Activation::Tanh;
    std::size_t ffn_layers = 0, ffn_units = 0;

    std::string describe() const {
        std::ostringstream os;
        switch (family) {
            case ModelFamily::Svm:
                os << "gamma=" << svm_gamma << " C=" << svm_c;
                break;
            case ModelFamily::Xgb:
                os << "depth=" << xgb_depth << " eta=" << xgb_eta
                   << " min_child_weight=" << xgb_min_child;
                break;
            case ModelFamily::Ffn:
                os << "lr=" << ffn_lr << " act=" << activation_name(ffn_act)
                   << " layers=" << ffn_layers << " units=" << ffn_units;
                break;
        }
        return os.str();
    }
};

// Hyperparameter grid plus the fixed (non-searched) base configs. The default
// value lists are the protocol grids; enumeration order fixes tie-breaking.
struct GridSpec {
    ModelFamily family = ModelFamily::Svm;

    std::vector<double> svm_gamma{1e-5, 1e-4, 1e-3, 1e-2, 1e-1};
    std::vector<double> svm_c{5.0, 10.0, 20.0, 50.0};
    std::vector<std::size_t> xgb_depth{2, 4, 8, 16};
    std::vector<double> xgb_eta{0.1, 0.2, 0.3, 0.4, 0.5};
    std::vector<double> xgb_min_child{1.0, 2.0, 4.0, 8.0};
    std::vector<double> ffn_lr{1e-1, 1e-2, 1e-3, 1e-4};
    std::vector<Activation> ffn_act{Activation::Tanh, Activation::ReLU};
    std::vector<std::size_t> ffn_layers{2, 3};
    std::vector<std::size_t> ffn_units{32, 64, 128, 256};

    RbfSvmConfig svm_base;
    GbtConfig xgb_base;
    FfnConfig ffn_base;

    static GridSpec defaults(ModelFamily f) {
        GridSpec g;
        g.family = f;
        return g;
    }

    std::vector<HyperCell> cells() const {
        std::vector<HyperCell> out;
        switch (family) {
            case ModelFamily::Svm:
                for (double gamma : svm_gamma)
                    for (double c : svm_c) {
                        HyperCell h;
                        h.family = family;
                        h.svm_gamma = gamma;
                        h.svm_c = c;
                        out.push_back(h);
                    }
                break;
            case ModelFamily::Xgb:
                for (std::size_t d : xgb_depth)
                    for (double eta : xgb_eta)
                        for (double w : xgb_min_child) {
                            HyperCell h;
                            h.family = family;
                            h.xgb_depth = d;
                            h.xgb_eta = eta;
                            h.xgb_min_child = w;
                            out.push_back(h);
                        }
                break;
            case ModelFamily::Ffn:
                for (double lr : ffn_lr)
                    for (Activation act : ffn_act)
                        for (std::size_t layers : ffn_layers)
                            for (std::size_t units : ffn_units) {
                                HyperCell h;
                                h.family = family;
                                h.ffn_lr = lr;
                                h.ffn_act = act;
                                h.ffn_layers = layers;
                                h.ffn_units = units;
                                out.push_back(h);
                            }
                break;
        }
        if (out.empty()) fail_config("grid_empty", "hyperparameter grid has no cells");
        return out;
    }
};

// A trained model of any family behind one prediction surface.
struct AnyModel {
    ModelFamily family = ModelFamily::Svm;
    std::optional<SvmModel> svm;
    std::optional<GbtModel> gbt;
    std::optional<FfnModel> ffn;

    const Vocabulary& vocab() const {
        switch (family) {
            case ModelFamily::Svm: return svm->vocab;
            case ModelFamily::Xgb: return gbt->vocab;
            default: return ffn->vocab;
        }
    }
    std::size_t dim() const {
        switch (family) {
            case ModelFamily::Svm: return svm->dim;
            case ModelFamily::Xgb: return gbt->dim;
            default: return ffn->input_dim;
        }
    }

    int predict_row(const std::vector<double>& x) const {
        switch (family) {
            case ModelFamily::Svm: return svm->predict(x);
            case ModelFamily::Xgb: return gbt->predict(x);
            default: return static_cast<int>(ffn->predict(x));
        }
    }

    // Per-class scores: probabilities for FFN/XGB, pairwise vote counts for SVM.
    std::vector<double> scores_row(const std::vector<double>& x) const {
        switch (family) {
            case ModelFamily::Svm: return svm->votes(x);
            case ModelFamily::Xgb: return gbt->predict_proba(x);
            default: return ffn->forward(x);
        }
    }
    bool scores_are_probabilities() const { return family != ModelFamily::Svm; }

    std::vector<int> predict(const Matrix& x) const {
        std::vector<int> out(x.rows());
        for (std::size_t i = 0; i < x.rows(); ++i) out[i] = predict_row(x.row_copy(i));
        return out;
    }
};

// Trains one grid cell's model on `train`; the cell's values override the
// grid's base config, and seeded families get `seed`.
inline AnyModel train_cell(const Dataset& train, const GridSpec& grid, const HyperCell& cell,
                           std::uint64_t seed) {
    AnyModel m;
    m.family = cell.family;
    switch (cell.family) {
        case ModelFamily::Svm: {
            RbfSvmConfig cfg = grid.svm_base;
            cfg.gamma = cell.svm_gamma;
            cfg.c = cell.svm_c;
            m.svm = svm_fit(train, cfg);
            break;
        }
        case ModelFamily::Xgb: {
            GbtConfig cfg = grid.xgb_base;
            cfg.max_depth = cell.xgb_depth;
            cfg.eta = cell.xgb_eta;
            cfg.min_child_weight = cell.xgb_min_child;
            cfg.seed = seed;
            m.gbt = gbt_fit(train, cfg);
            break;
        }
        case ModelFamily::Ffn: {
            FfnConfig cfg = grid.ffn_base;
            cfg.lr = cell.ffn_lr;
            cfg.activation = cell.ffn_act;
            cfg.hidden_layers = cell.ffn_layers;
            cfg.hidden_units = cell.ffn_units;
            cfg.seed = seed;
            m.ffn = ffn_fit(train, cfg);
            break;
        }
    }
    return m;
}

// Scores a model on held-out original rows. Synthetic rows are refused: a
// resampled row in an evaluation set is a protocol violation, not a metric.
inline MetricsReport evaluate(const AnyModel& model, const Dataset& test) {
    test.validate();
    if (test.size() == 0) fail_data("eval_empty", "evaluation set is empty");
    if (test.any_synthetic())
        fail_data("eval_synthetic_rows", "evaluation set contains resampled rows");
    if (!(model.vocab() == test.vocab))
        fail_data("eval_vocab_mismatch", "model and dataset vocabularies differ");
    return compute_metrics(test.labels, model.predict(test.features), test.vocab.size());
}

inline double percent_correct(const AnyModel& model, const Dataset& data,
                              const std::string& assumed_class) {
    data.validate();
    if (data.size() == 0) fail_data("metrics_empty", "percent_correct over an empty dataset");
    if (data.any_synthetic())
        fail_data("eval_synthetic_rows", "evaluation set contains resampled rows");
    const int assumed = model.vocab().require(assumed_class);
    return percent_correct(model.predict(data.features), assumed);
}

struct CellResult {
    std::size_t index = 0;
    HyperCell cell;
    std::vector<double> fold_f1;  // empty when failed
    double mean_f1 = -std::numeric_limits<double>::infinity();
    bool failed = false;
    std::string error;
};

struct GridSearchResult {
    std::size_t best_index = 0;
    HyperCell best;
    std::vector<CellResult> table;
    std::uint64_t seed = 0;
};

inline constexpr std::size_t kNumFolds = 5;

struct CvFold {
    Dataset train;  // resampled: originals plus SMOTE rows
    Dataset valid;  // original rows only
};

// The five CV folds with SMOTE applied inside each training fold only. The
// SmoteConfig seed is ignored: fold resampling draws from the master seed so
// one value governs the whole protocol.
inline std::vector<CvFold> make_cv_folds(const Dataset& train, const SmoteConfig& smote,
                                         std::uint64_t seed) {
    train.validate();
    if (train.any_synthetic())
        fail_data("grid_synthetic_input", "grid_search input must be original rows");
    const auto folds = stratified_kfold(train, kNumFolds, subseed(seed, 0));
    std::vector<CvFold> out(kNumFolds);
    for (std::size_t f = 0; f < kNumFolds; ++f) {
        SmoteConfig sm = smote;
        sm.seed = subseed(seed, 2, f);
        out[f].train = smote_resample(train.subset(folds[f].train), sm);
        out[f].valid = train.subset(folds[f].valid);
    }
    return out;
}

// 5-fold grid search selecting the cell with the best mean validation macro
// F1 (ties: earliest enumeration order). A training failure marks the cell
// failed with score -inf instead of aborting the sweep.
inline GridSearchResult grid_search(const Dataset& train, const GridSpec& grid,
                                    const SmoteConfig& smote, std::uint64_t seed,
                                    std::size_t workers = 1) {
    const std::vector<CvFold> cv = make_cv_folds(train, smote, seed);
    const auto cells = grid.cells();
    GridSearchResult result;
    result.seed = seed;
    result.table.resize(cells.size());

    parallel_for(cells.size(), workers, [&](std::size_t ci) {
        CellResult& row = result.table[ci];
        row.index = ci;
        row.cell = cells[ci];
        std::vector<double> f1s;
        try {
            for (std::size_t f = 0; f < kNumFolds; ++f) {
                AnyModel m =
                    train_cell(cv[f].train, grid, cells[ci], subseed(seed, 1 + ci, f));
                f1s.push_back(compute_metrics(cv[f].valid.labels,
                                              m.predict(cv[f].valid.features),
                                              train.vocab.size())
                                  .macro_f1);
            }
        } catch (const std::exception& e) {
            row.failed = true;
            row.error = e.what();
            return;
        }
        row.fold_f1 = std::move(f1s);
        double sum = 0.0;
        for (double v : row.fold_f1) sum += v;
        row.mean_f1 = sum / static_cast<double>(row.fold_f1.size());
    });

    std::size_t best = cells.size();
    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
        if (result.table[ci].failed) continue;
        if (best == cells.size() || result.table[ci].mean_f1 > result.table[best].mean_f1)
            best = ci;
    }
    if (best == cells.size()) fail_data("grid_all_failed", "every grid cell failed to train");
    result.best_index = best;
    result.best = cells[best];
    return result;
}

// Resamples the full training set and fits the chosen cell on it.
inline AnyModel train_final(const Dataset& train, const GridSpec& grid, const HyperCell& cell,
                            const SmoteConfig& smote, std::uint64_t seed) {
    if (train.any_synthetic())
        fail_data("grid_synthetic_input", "training input must be original rows");
    SmoteConfig sm = smote;
    sm.seed = subseed(seed, 3);
    return train_cell(smote_resample(train, sm), grid, cell, subseed(seed, 4));
}

struct LayerOutcome {
    int layer = 0;
    HyperCell best_cell;
    double cv_f1 = 0.0;  // best cell's CV score
    MetricsReport report;  // held-out test metrics
};

struct LayerSweepReport {
    std::vector<LayerOutcome> layers;
    int best_layer = 0;       // by test macro F1, ties to the lower layer
    double f1_mean = 0.0;     // across layers
    double f1_std = 0.0;      // sample standard deviation (n-1)
};

// Full protocol per layer. Split and protocol seeds are shared across layers
// (rows are aligned, so the split hits the same utterances everywhere): the
// layer is then the only thing that varies between rows of the report, and
// identical per-layer datasets produce identical outcomes.
inline LayerSweepReport layer_sweep(const std::vector<Dataset>& per_layer, const GridSpec& grid,
                                    const SmoteConfig& smote, double test_fraction,
                                    std::uint64_t seed, std::size_t workers = 1) {
    if (per_layer.size() < 2)
        fail_config("sweep_too_few_layers", "layer sweep needs at least two layers");
    LayerSweepReport report;
    report.layers.resize(per_layer.size());
    const std::uint64_t split_seed = subseed(seed, 5);
    const std::uint64_t layer_seed = subseed(seed, 6);

    for (std::size_t li = 0; li < per_layer.size(); ++li) {
        const Dataset& data = per_layer[li];
        const SplitIndices split = stratified_split(data, test_fraction, split_seed);
        const Dataset train = data.subset(split.train);
        const Dataset test = data.subset(split.test);
        const GridSearchResult cv = grid_search(train, grid, smote, layer_seed, workers);
        const AnyModel model = train_final(train, grid, cv.best, smote, layer_seed);

        LayerOutcome& out = report.layers[li];
        out.layer = data.layer.value_or(static_cast<int>(li) + 1);
        out.best_cell = cv.best;
        out.cv_f1 = cv.table[cv.best_index].mean_f1;
        out.report = evaluate(model, test);
    }

    std::vector<double> f1s;
    std::size_t best = 0;
    for (std::size_t li = 0; li < report.layers.size(); ++li) {
        f1s.push_back(report.layers[li].report.macro_f1);
        if (report.layers[li].report.macro_f1 > report.layers[best].report.macro_f1) best = li;
    }
    const MeanStd stats = mean_sample_std(f1s);
    report.best_layer = report.layers[best].layer;
    report.f1_mean = stats.mean;
    report.f1_std = stats.std;
    return report;
}

struct PredictRecord {
    std::string id;
    std::string predicted;
    std::vector<double> scores;
};

// One record per utterance in dataset (manifest) order.
inline std::vector<PredictRecord> predict_dump(const AnyModel& model, const Dataset& data) {
    data.validate();
    if (data.size() == 0) fail_data("eval_empty", "predict_dump over an empty dataset");
    if (data.dim() != model.dim())
        fail_data("eval_dim_mismatch", "model and dataset dimensions differ");
    std::vector<PredictRecord> out(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto x = data.features.row_copy(i);
        out[i].id = data.ids.empty() ? "row" + std::to_string(i) : data.ids[i];
        out[i].predicted = model.vocab().name(static_cast<std::size_t>(model.predict_row(x)));
        out[i].scores = model.scores_row(x);
    }
    return out;
}

}  // namespace pathovox

#endif  // PATHOVOX_PROTOCOL_HPP
