// pathovox — command-line front end for the embedding-classification pipeline.
//
// Every run writes its artifacts plus a run_meta.json (config echo, versions,
// timings) into --out; `pathovox replay --meta <run_meta.json>` re-executes
// the recorded command and reproduces all tables byte-identically.
//
// Exit codes: 0 success, 2 config error, 3 data error, 4 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "pathovox/embedding.hpp"
#include "pathovox/model_io.hpp"
#include "pathovox/protocol.hpp"
#include "pathovox/reports.hpp"
#include "pathovox/reverb.hpp"
#include "pathovox/tsne.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;
using namespace pathovox;

namespace {

constexpr const char* kToolVersion = "0.1.0";

std::string display_name(ModelFamily f) {
    switch (f) {
        case ModelFamily::Svm: return "SVM";
        case ModelFamily::Ffn: return "FFN";
        default: return "XGB";
    }
}

void require_exists(const std::string& path, const std::string& what) {
    if (path.empty() || !fs::exists(path))
        fail_config("missing_path", what + " not found: " + path);
}

std::string absolute_str(const std::string& path) {
    return path.empty() ? path : fs::absolute(path).lexically_normal().string();
}

void ensure_out_dir(const std::string& out) {
    if (out.empty()) fail_config("bad_out_dir", "--out must not be empty");
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) fail_config("bad_out_dir", "cannot create " + out + ": " + ec.message());
}

// Embedding templates resolve relative to --root, defaulting to the
// manifest's own directory.
std::string effective_root(const std::string& root, const std::string& manifest) {
    if (!root.empty()) return absolute_str(root);
    return absolute_str(fs::path(manifest).parent_path().string());
}

void write_meta(const std::string& out, const std::string& command, Json arguments,
                double seconds) {
    Json meta;
    meta["command"] = command;
    meta["arguments"] = std::move(arguments);
    meta["versions"] = Json{{"tool", std::string("pathovox ") + kToolVersion},
                            {"model_format", "PVM1"},
                            {"compiler", __VERSION__}};
    meta["timings"] = Json{{"seconds", seconds}};
    write_text_file((fs::path(out) / "run_meta.json").string(), meta.dump(2) + "\n");
}

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Options shared by every command that runs the CV protocol. Grid vectors
// left empty fall back to the reproduced defaults for the chosen family.
struct PipelineOpts {
    std::string manifest;
    std::string root;
    std::string out;
    std::string model = "svm";
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    double test_fraction = 0.2;
    std::size_t smote_k = 5;

    std::vector<double> svm_gamma, svm_c;
    std::vector<std::size_t> xgb_depth;
    std::vector<double> xgb_eta, xgb_min_child;
    std::vector<double> ffn_lr;
    std::vector<std::string> ffn_act;
    std::vector<std::size_t> ffn_layers, ffn_units;

    double svm_tol = RbfSvmConfig().tol;
    std::size_t svm_max_iter = RbfSvmConfig().max_iter;
    bool svm_standardize = false;
    std::size_t xgb_rounds = GbtConfig().rounds;
    double xgb_lambda = GbtConfig().reg_lambda;
    std::size_t ffn_epochs = FfnConfig().epochs;
    std::size_t ffn_batch = FfnConfig().batch_size;
    double ffn_l2 = FfnConfig().l2;

    void validate_common() const {
        require_exists(manifest, "manifest");
        if (workers == 0) fail_config("bad_workers", "--workers must be >= 1");
    }

    GridSpec resolve_grid() const {
        GridSpec g = GridSpec::defaults(family_from_name(model));
        if (!svm_gamma.empty()) g.svm_gamma = svm_gamma;
        if (!svm_c.empty()) g.svm_c = svm_c;
        if (!xgb_depth.empty()) g.xgb_depth = xgb_depth;
        if (!xgb_eta.empty()) g.xgb_eta = xgb_eta;
        if (!xgb_min_child.empty()) g.xgb_min_child = xgb_min_child;
        if (!ffn_lr.empty()) g.ffn_lr = ffn_lr;
        if (!ffn_act.empty()) {
            g.ffn_act.clear();
            for (const auto& a : ffn_act) g.ffn_act.push_back(activation_from_name(a));
        }
        if (!ffn_layers.empty()) g.ffn_layers = ffn_layers;
        if (!ffn_units.empty()) g.ffn_units = ffn_units;
        g.svm_base.tol = svm_tol;
        g.svm_base.max_iter = svm_max_iter;
        g.svm_base.standardize = svm_standardize;
        g.xgb_base.rounds = xgb_rounds;
        g.xgb_base.reg_lambda = xgb_lambda;
        g.ffn_base.epochs = ffn_epochs;
        g.ffn_base.batch_size = ffn_batch;
        g.ffn_base.l2 = ffn_l2;
        return g;
    }

    SmoteConfig smote() const { return SmoteConfig{smote_k, 0}; }

    Json to_json() const {
        Json j;
        j["manifest"] = absolute_str(manifest);
        j["root"] = effective_root(root, manifest);
        j["out"] = absolute_str(out);
        j["model"] = model;
        j["seed"] = seed;
        j["workers"] = workers;
        j["test_fraction"] = test_fraction;
        j["smote_k"] = smote_k;
        const GridSpec g = resolve_grid();
        Json grid;
        grid["svm_gamma"] = g.svm_gamma;
        grid["svm_c"] = g.svm_c;
        grid["svm_tol"] = g.svm_base.tol;
        grid["svm_max_iter"] = g.svm_base.max_iter;
        grid["svm_standardize"] = g.svm_base.standardize;
        grid["xgb_depth"] = g.xgb_depth;
        grid["xgb_eta"] = g.xgb_eta;
        grid["xgb_min_child"] = g.xgb_min_child;
        grid["xgb_rounds"] = g.xgb_base.rounds;
        grid["xgb_lambda"] = g.xgb_base.reg_lambda;
        std::vector<std::string> acts;
        for (Activation a : g.ffn_act) acts.push_back(activation_name(a));
        grid["ffn_lr"] = g.ffn_lr;
        grid["ffn_act"] = acts;
        grid["ffn_layers"] = g.ffn_layers;
        grid["ffn_units"] = g.ffn_units;
        grid["ffn_epochs"] = g.ffn_base.epochs;
        grid["ffn_batch"] = g.ffn_base.batch_size;
        grid["ffn_l2"] = g.ffn_base.l2;
        j["grid"] = std::move(grid);
        return j;
    }

    static PipelineOpts from_json(const Json& j) {
        PipelineOpts p;
        p.manifest = j.at("manifest");
        p.root = j.at("root");
        p.out = j.at("out");
        p.model = j.at("model");
        p.seed = j.at("seed");
        p.workers = j.at("workers");
        p.test_fraction = j.at("test_fraction");
        p.smote_k = j.at("smote_k");
        const Json& g = j.at("grid");
        p.svm_gamma = g.at("svm_gamma").get<std::vector<double>>();
        p.svm_c = g.at("svm_c").get<std::vector<double>>();
        p.svm_tol = g.at("svm_tol");
        p.svm_max_iter = g.at("svm_max_iter");
        p.svm_standardize = g.at("svm_standardize");
        p.xgb_depth = g.at("xgb_depth").get<std::vector<std::size_t>>();
        p.xgb_eta = g.at("xgb_eta").get<std::vector<double>>();
        p.xgb_min_child = g.at("xgb_min_child").get<std::vector<double>>();
        p.xgb_rounds = g.at("xgb_rounds");
        p.xgb_lambda = g.at("xgb_lambda");
        p.ffn_lr = g.at("ffn_lr").get<std::vector<double>>();
        p.ffn_act = g.at("ffn_act").get<std::vector<std::string>>();
        p.ffn_layers = g.at("ffn_layers").get<std::vector<std::size_t>>();
        p.ffn_units = g.at("ffn_units").get<std::vector<std::size_t>>();
        p.ffn_epochs = g.at("ffn_epochs");
        p.ffn_batch = g.at("ffn_batch");
        p.ffn_l2 = g.at("ffn_l2");
        return p;
    }
};

void add_pipeline_flags(CLI::App* cmd, PipelineOpts& p, bool with_model = true) {
    cmd->add_option("--manifest", p.manifest, "utterance manifest CSV")->required();
    cmd->add_option("--root", p.root, "root for relative embedding paths (default: manifest dir)");
    cmd->add_option("--out", p.out, "output directory")->required();
    if (with_model) cmd->add_option("--model", p.model, "model family: svm | xgb | ffn");
    cmd->add_option("--seed", p.seed, "master seed (mandatory; never defaulted)")->required();
    cmd->add_option("--workers", p.workers, "worker threads for the grid search");
    cmd->add_option("--test-fraction", p.test_fraction, "held-out fraction (default 0.2)");
    cmd->add_option("--smote-k", p.smote_k, "SMOTE neighbour count (default 5)");
    cmd->add_option("--svm-gamma", p.svm_gamma, "RBF gamma grid")->delimiter(',');
    cmd->add_option("--svm-c", p.svm_c, "SVM C grid")->delimiter(',');
    cmd->add_option("--svm-tol", p.svm_tol, "SMO KKT tolerance");
    cmd->add_option("--svm-max-iter", p.svm_max_iter, "SMO update cap");
    cmd->add_flag("--svm-standardize", p.svm_standardize, "z-score features inside the SVM");
    cmd->add_option("--xgb-depth", p.xgb_depth, "tree depth grid")->delimiter(',');
    cmd->add_option("--xgb-eta", p.xgb_eta, "learning-rate grid")->delimiter(',');
    cmd->add_option("--xgb-min-child", p.xgb_min_child, "min child weight grid")->delimiter(',');
    cmd->add_option("--xgb-rounds", p.xgb_rounds, "boosting rounds");
    cmd->add_option("--xgb-lambda", p.xgb_lambda, "leaf L2 regularisation");
    cmd->add_option("--ffn-lr", p.ffn_lr, "Adam learning-rate grid")->delimiter(',');
    cmd->add_option("--ffn-act", p.ffn_act, "activation grid: tanh | relu")->delimiter(',');
    cmd->add_option("--ffn-layers", p.ffn_layers, "hidden-layer-count grid")->delimiter(',');
    cmd->add_option("--ffn-units", p.ffn_units, "hidden-width grid")->delimiter(',');
    cmd->add_option("--ffn-epochs", p.ffn_epochs, "training epochs");
    cmd->add_option("--ffn-batch", p.ffn_batch, "minibatch size");
    cmd->add_option("--ffn-l2", p.ffn_l2, "FFN weight decay");
}

Dataset load_layer(const std::string& manifest, const std::string& root, int layer,
                   const Vocabulary& vocab = Vocabulary()) {
    if (layer < 1) fail_config("bad_layer", "--layer must be >= 1");
    return assemble_dataset(load_manifest(manifest), layer, effective_root(root, manifest),
                            vocab);
}

void write_eval_tables(const std::string& out, const MetricsReport& rep,
                       const Vocabulary& vocab) {
    const fs::path dir(out);
    write_text_file((dir / "metrics.csv").string(), metrics_csv(rep, vocab));
    write_text_file((dir / "confusion.csv").string(), confusion_csv(rep, vocab));
    write_text_file((dir / "report.txt").string(), metrics_text(rep, vocab));
}

// ---------------------------------------------------------------------------
// train: split, grid-search with fold-internal SMOTE, final fit, test report.

struct TrainCmd {
    PipelineOpts p;
    int layer = 1;

    Json to_json() const {
        Json j = p.to_json();
        j["layer"] = layer;
        return j;
    }
    static TrainCmd from_json(const Json& j) {
        TrainCmd c;
        c.p = PipelineOpts::from_json(j);
        c.layer = j.at("layer");
        return c;
    }

    void run() const {
        Stopwatch watch;
        p.validate_common();
        const GridSpec grid = p.resolve_grid();
        ensure_out_dir(p.out);

        const Dataset data = load_layer(p.manifest, p.root, layer);
        // Same seed derivation as one leg of the layer sweep, so
        // `train --layer L` reproduces that layer's sweep row exactly.
        const SplitIndices split =
            stratified_split(data, p.test_fraction, subseed(p.seed, 5));
        const Dataset train = data.subset(split.train);
        const Dataset test = data.subset(split.test);

        const GridSearchResult cv =
            grid_search(train, grid, p.smote(), subseed(p.seed, 6), p.workers);
        const AnyModel model = train_final(train, grid, cv.best, p.smote(), subseed(p.seed, 6));
        const MetricsReport rep = evaluate(model, test);

        const fs::path dir(p.out);
        save_model(model, (dir / "model.pvm").string());
        write_text_file((dir / "cv_table.csv").string(), cv_table_csv(cv));
        write_eval_tables(p.out, rep, model.vocab());
        write_meta(p.out, "train", to_json(), watch.seconds());
        std::cout << "best cell: " << cv.best.describe() << "\n"
                  << "test macro F1: " << fmt_fixed(rep.macro_f1, 4) << "\n";
    }
};

// ---------------------------------------------------------------------------
// evaluate: saved model vs a manifest; optionally percent-correct against an
// assumed class for label-free corpora.

struct EvalCmd {
    std::string model_file, manifest, root, out, assumed_class;
    int layer = 1;

    Json to_json() const {
        Json j;
        j["model_file"] = absolute_str(model_file);
        j["manifest"] = absolute_str(manifest);
        j["root"] = effective_root(root, manifest);
        j["layer"] = layer;
        j["out"] = absolute_str(out);
        j["assumed_class"] = assumed_class;
        return j;
    }
    static EvalCmd from_json(const Json& j) {
        EvalCmd c;
        c.model_file = j.at("model_file");
        c.manifest = j.at("manifest");
        c.root = j.at("root");
        c.layer = j.at("layer");
        c.out = j.at("out");
        c.assumed_class = j.at("assumed_class");
        return c;
    }

    void run() const {
        Stopwatch watch;
        require_exists(model_file, "model file");
        require_exists(manifest, "manifest");
        ensure_out_dir(out);
        const AnyModel model = load_model(model_file);
        const Dataset data = load_layer(manifest, root, layer, model.vocab());
        if (assumed_class.empty()) {
            write_eval_tables(out, evaluate(model, data), model.vocab());
        } else {
            const double pct = percent_correct(model, data, assumed_class);
            const std::string line =
                percent_correct_line(display_name(model.family), layer, pct);
            write_text_file((fs::path(out) / "percent_correct.txt").string(), line + "\n");
            std::cout << line << "\n";
        }
        write_meta(out, "evaluate", to_json(), watch.seconds());
    }
};

// ---------------------------------------------------------------------------
// sweep-layers: repeat the train protocol per encoder layer, summary table.

struct SweepCmd {
    PipelineOpts p;
    int first_layer = 1;
    int last_layer = 12;

    Json to_json() const {
        Json j = p.to_json();
        j["first_layer"] = first_layer;
        j["last_layer"] = last_layer;
        return j;
    }
    static SweepCmd from_json(const Json& j) {
        SweepCmd c;
        c.p = PipelineOpts::from_json(j);
        c.first_layer = j.at("first_layer");
        c.last_layer = j.at("last_layer");
        return c;
    }

    void run() const {
        Stopwatch watch;
        p.validate_common();
        if (first_layer < 1 || last_layer < first_layer)
            fail_config("bad_layer_range", "need 1 <= first layer <= last layer");
        const GridSpec grid = p.resolve_grid();
        ensure_out_dir(p.out);

        const auto rows = load_manifest(p.manifest);
        const std::string root = effective_root(p.root, p.manifest);
        std::vector<Dataset> per_layer;
        for (int layer = first_layer; layer <= last_layer; ++layer)
            per_layer.push_back(assemble_dataset(rows, layer, root));

        const LayerSweepReport sweep =
            layer_sweep(per_layer, grid, p.smote(), p.test_fraction, p.seed, p.workers);

        const fs::path dir(p.out);
        const std::string name = display_name(grid.family);
        write_text_file((dir / "sweep.csv").string(), sweep_csv(sweep));
        write_text_file((dir / "sweep.txt").string(), sweep_text(sweep, name));
        write_meta(p.out, "sweep-layers", to_json(), watch.seconds());
        std::cout << sweep_text(sweep, name);
    }
};

// ---------------------------------------------------------------------------
// augment: reverberate a corpus against an RIR bank, emit the new manifest.

struct AugmentCmd {
    std::string manifest, audio_dir, rir_dir, out;
    std::string emb_template = "emb/{id}.l{layer}.emb1";
    std::uint64_t seed = 0;
    double gain = 2.0;

    Json to_json() const {
        Json j;
        j["manifest"] = absolute_str(manifest);
        j["audio_dir"] = absolute_str(audio_dir);
        j["rir_dir"] = absolute_str(rir_dir);
        j["seed"] = seed;
        j["out"] = absolute_str(out);
        j["emb_template"] = emb_template;
        j["gain"] = gain;
        return j;
    }
    static AugmentCmd from_json(const Json& j) {
        AugmentCmd c;
        c.manifest = j.at("manifest");
        c.audio_dir = j.at("audio_dir");
        c.rir_dir = j.at("rir_dir");
        c.seed = j.at("seed");
        c.out = j.at("out");
        c.emb_template = j.at("emb_template");
        c.gain = j.at("gain");
        return c;
    }

    void run() const {
        Stopwatch watch;
        require_exists(manifest, "manifest");
        require_exists(audio_dir, "audio directory");
        require_exists(rir_dir, "RIR directory");
        ensure_out_dir(out);

        const auto rows = load_manifest(manifest);
        const AugmentResult res =
            augment_corpus(rows, audio_dir, rir_dir, seed, out, emb_template, gain);

        const fs::path dir(out);
        write_manifest((dir / "manifest.csv").string(), res.manifest);
        std::ostringstream picks;
        picks << "id,rir\n";
        const auto bank = list_rir_bank(rir_dir);
        for (std::size_t i = 0; i < res.manifest.size(); ++i)
            picks << res.manifest[i].id << ','
                  << fs::path(bank[res.rir_choice[i]]).filename().string() << '\n';
        write_text_file((dir / "rir_choices.csv").string(), picks.str());
        write_meta(out, "augment", to_json(), watch.seconds());
        std::cout << "reverberated " << res.manifest.size() << " utterances\n";
    }
};

// ---------------------------------------------------------------------------
// tsne: 2-D embedding of pooled vectors for one layer.

struct TsneCmd {
    std::string manifest, root, out;
    int layer = 1;
    double perplexity = 30.0;
    std::size_t iterations = 1000;
    std::uint64_t seed = 0;
    std::size_t workers = 1;

    Json to_json() const {
        Json j;
        j["manifest"] = absolute_str(manifest);
        j["root"] = effective_root(root, manifest);
        j["layer"] = layer;
        j["perplexity"] = perplexity;
        j["iterations"] = iterations;
        j["seed"] = seed;
        j["workers"] = workers;
        j["out"] = absolute_str(out);
        return j;
    }
    static TsneCmd from_json(const Json& j) {
        TsneCmd c;
        c.manifest = j.at("manifest");
        c.root = j.at("root");
        c.layer = j.at("layer");
        c.perplexity = j.at("perplexity");
        c.iterations = j.at("iterations");
        c.seed = j.at("seed");
        c.workers = j.at("workers");
        c.out = j.at("out");
        return c;
    }

    void run() const {
        Stopwatch watch;
        require_exists(manifest, "manifest");
        if (workers == 0) fail_config("bad_workers", "--workers must be >= 1");
        ensure_out_dir(out);

        const Dataset data = load_layer(manifest, root, layer);
        TsneConfig cfg;
        cfg.perplexity = perplexity;
        cfg.iterations = iterations;
        cfg.seed = seed;
        const TsneEmbedding emb = run_tsne(data, cfg, workers);

        const fs::path dir(out);
        write_text_file((dir / "tsne.csv").string(), tsne_csv(emb));
        write_text_file((dir / "kl_trace.csv").string(), kl_trace_csv(emb));
        write_meta(out, "tsne", to_json(), watch.seconds());
        std::cout << "final KL: " << fmt_fixed(emb.kl_trace.back().second, 4) << "\n";
    }
};

// ---------------------------------------------------------------------------
// predict-dump: per-utterance predictions with scores, manifest order.

struct PredictCmd {
    std::string model_file, manifest, root, out;
    int layer = 1;

    Json to_json() const {
        Json j;
        j["model_file"] = absolute_str(model_file);
        j["manifest"] = absolute_str(manifest);
        j["root"] = effective_root(root, manifest);
        j["layer"] = layer;
        j["out"] = absolute_str(out);
        return j;
    }
    static PredictCmd from_json(const Json& j) {
        PredictCmd c;
        c.model_file = j.at("model_file");
        c.manifest = j.at("manifest");
        c.root = j.at("root");
        c.layer = j.at("layer");
        c.out = j.at("out");
        return c;
    }

    void run() const {
        Stopwatch watch;
        require_exists(model_file, "model file");
        require_exists(manifest, "manifest");
        ensure_out_dir(out);
        const AnyModel model = load_model(model_file);
        const Dataset data = load_layer(manifest, root, layer, model.vocab());
        const auto records = predict_dump(model, data);
        write_text_file((fs::path(out) / "predictions.csv").string(),
                        predict_dump_csv(records, model.vocab(),
                                         model.scores_are_probabilities()));
        write_meta(out, "predict-dump", to_json(), watch.seconds());
        std::cout << "dumped " << records.size() << " predictions\n";
    }
};

// ---------------------------------------------------------------------------
// replay: re-execute a recorded run from its metadata file.

struct ReplayCmd {
    std::string meta;
    std::string out_override;

    void run() const {
        require_exists(meta, "metadata file");
        Json j;
        try {
            j = Json::parse(read_text_file(meta));
        } catch (const nlohmann::json::exception& e) {
            fail_config("replay_bad_meta", std::string("cannot parse metadata: ") + e.what());
        }
        std::string command;
        try {
            command = j.at("command");
            const Json& args = j.at("arguments");
            if (command == "train") {
                TrainCmd c = TrainCmd::from_json(args);
                if (!out_override.empty()) c.p.out = out_override;
                c.run();
            } else if (command == "evaluate") {
                EvalCmd c = EvalCmd::from_json(args);
                if (!out_override.empty()) c.out = out_override;
                c.run();
            } else if (command == "sweep-layers") {
                SweepCmd c = SweepCmd::from_json(args);
                if (!out_override.empty()) c.p.out = out_override;
                c.run();
            } else if (command == "augment") {
                AugmentCmd c = AugmentCmd::from_json(args);
                if (!out_override.empty()) c.out = out_override;
                c.run();
            } else if (command == "tsne") {
                TsneCmd c = TsneCmd::from_json(args);
                if (!out_override.empty()) c.out = out_override;
                c.run();
            } else if (command == "predict-dump") {
                PredictCmd c = PredictCmd::from_json(args);
                if (!out_override.empty()) c.out = out_override;
                c.run();
            } else {
                fail_config("replay_unknown_command", "metadata names command: " + command);
            }
        } catch (const nlohmann::json::exception& e) {
            fail_config("replay_bad_meta", std::string("metadata missing fields: ") + e.what());
        }
    }
};

std::string one_line(std::string s) {
    for (char& c : s)
        if (c == '\n' || c == '\r') c = ' ';
    return s;
}

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Config: return 2;
        case ErrorKind::Data: return 3;
        default: return 4;
    }
}

const char* category_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Config: return "config";
        case ErrorKind::Data: return "data";
        default: return "numeric";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pathological-voice classification from pooled speech embeddings"};
    app.require_subcommand(1);

    TrainCmd train;
    auto* train_cmd = app.add_subcommand("train", "grid-search CV, final fit, test report");
    add_pipeline_flags(train_cmd, train.p);
    train_cmd->add_option("--layer", train.layer, "encoder layer to consume")->required();

    EvalCmd eval;
    auto* eval_cmd = app.add_subcommand("evaluate", "score a saved model on a manifest");
    eval_cmd->add_option("--model-file", eval.model_file, "saved .pvm model")->required();
    eval_cmd->add_option("--manifest", eval.manifest, "utterance manifest CSV")->required();
    eval_cmd->add_option("--root", eval.root, "root for relative embedding paths");
    eval_cmd->add_option("--layer", eval.layer, "encoder layer to consume")->required();
    eval_cmd->add_option("--out", eval.out, "output directory")->required();
    eval_cmd->add_option("--assumed-class", eval.assumed_class,
                         "report percent predicted as this class instead of full metrics");

    SweepCmd sweep;
    auto* sweep_cmd = app.add_subcommand("sweep-layers", "train/evaluate once per layer");
    add_pipeline_flags(sweep_cmd, sweep.p);
    sweep_cmd->add_option("--first-layer", sweep.first_layer, "sweep start (default 1)");
    sweep_cmd->add_option("--last-layer", sweep.last_layer, "sweep end (default 12)");

    AugmentCmd augment;
    auto* aug_cmd = app.add_subcommand("augment", "reverberate a corpus with an RIR bank");
    aug_cmd->add_option("--manifest", augment.manifest, "utterance manifest CSV")->required();
    aug_cmd->add_option("--audio-dir", augment.audio_dir, "directory of <id>.wav files")
        ->required();
    aug_cmd->add_option("--rir-dir", augment.rir_dir, "directory of RIR WAVs")->required();
    aug_cmd->add_option("--seed", augment.seed, "master seed (mandatory)")->required();
    aug_cmd->add_option("--out", augment.out, "output directory")->required();
    aug_cmd->add_option("--emb-template", augment.emb_template,
                        "embedding path template for the reverberated corpus");
    aug_cmd->add_option("--gain", augment.gain, "RIR scale factor (default 2)");

    TsneCmd tsne;
    auto* tsne_cmd = app.add_subcommand("tsne", "2-D t-SNE of pooled embeddings");
    tsne_cmd->add_option("--manifest", tsne.manifest, "utterance manifest CSV")->required();
    tsne_cmd->add_option("--root", tsne.root, "root for relative embedding paths");
    tsne_cmd->add_option("--layer", tsne.layer, "encoder layer to consume")->required();
    tsne_cmd->add_option("--perplexity", tsne.perplexity, "target perplexity (default 30)");
    tsne_cmd->add_option("--iters", tsne.iterations, "gradient iterations (default 1000)");
    tsne_cmd->add_option("--seed", tsne.seed, "master seed (mandatory)")->required();
    tsne_cmd->add_option("--workers", tsne.workers, "worker threads");
    tsne_cmd->add_option("--out", tsne.out, "output directory")->required();

    PredictCmd predict;
    auto* pred_cmd = app.add_subcommand("predict-dump", "per-utterance predictions CSV");
    pred_cmd->add_option("--model-file", predict.model_file, "saved .pvm model")->required();
    pred_cmd->add_option("--manifest", predict.manifest, "utterance manifest CSV")->required();
    pred_cmd->add_option("--root", predict.root, "root for relative embedding paths");
    pred_cmd->add_option("--layer", predict.layer, "encoder layer to consume")->required();
    pred_cmd->add_option("--out", predict.out, "output directory")->required();

    ReplayCmd replay;
    auto* replay_cmd = app.add_subcommand("replay", "re-run a command from its run_meta.json");
    replay_cmd->add_option("--meta", replay.meta, "run_meta.json of a previous run")
        ->required();
    replay_cmd->add_option("--out", replay.out_override, "redirect artifacts to this directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (train_cmd->parsed()) train.run();
        else if (eval_cmd->parsed()) eval.run();
        else if (sweep_cmd->parsed()) sweep.run();
        else if (aug_cmd->parsed()) augment.run();
        else if (tsne_cmd->parsed()) tsne.run();
        else if (pred_cmd->parsed()) predict.run();
        else if (replay_cmd->parsed()) replay.run();
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: category=" << category_name(e.kind()) << " code=" << e.code()
                  << " message=" << one_line(e.what()) << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: category=data code=internal message=" << one_line(e.what())
                  << "\n";
        return 3;
    }
}
