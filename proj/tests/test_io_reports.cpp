#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include "helpers.hpp"
#include "pathovox/model_io.hpp"
#include "pathovox/reports.hpp"

using namespace pathovox;
using pathovox::testing::make_blobs;
using pathovox::testing::TempDir;

namespace {

Dataset three_blobs(std::uint64_t seed) {
    Rng rng(seed);
    Matrix means = Matrix::from_rows({{0.0, 0.0, 0.0}, {6.0, 0.0, 0.0}, {0.0, 6.0, 0.0}});
    Dataset d = make_blobs(means, {0.7, 0.7, 0.7}, {18, 14, 12},
                           Vocabulary({"A", "B", "C"}), rng);
    for (std::size_t i = 0; i < d.size(); ++i) d.ids.push_back("u" + std::to_string(i));
    return d;
}

AnyModel train_family(ModelFamily family, const Dataset& d) {
    GridSpec g = GridSpec::defaults(family);
    switch (family) {
        case ModelFamily::Svm:
            g.svm_gamma = {0.3};
            g.svm_c = {10.0};
            break;
        case ModelFamily::Xgb:
            g.xgb_depth = {3};
            g.xgb_eta = {0.3};
            g.xgb_min_child = {1.0};
            g.xgb_base.rounds = 15;
            break;
        case ModelFamily::Ffn:
            g.ffn_lr = {1e-2};
            g.ffn_act = {Activation::ReLU};
            g.ffn_layers = {2};
            g.ffn_units = {16};
            g.ffn_base.epochs = 15;
            break;
    }
    return train_cell(d, g, g.cells()[0], 77);
}

}  // namespace

TEST_CASE("models of every family round-trip through the container bit-exactly") {
    Dataset d = three_blobs(5);
    TempDir tmp;
    for (ModelFamily family : {ModelFamily::Svm, ModelFamily::Ffn, ModelFamily::Xgb}) {
        AnyModel before = train_family(family, d);
        const std::string path = (tmp.path() / "model.pvm").string();
        save_model(before, path);
        AnyModel after = load_model(path);
        REQUIRE(after.family == family);
        REQUIRE(after.vocab() == before.vocab());
        REQUIRE(after.dim() == before.dim());
        for (std::size_t i = 0; i < d.size(); ++i) {
            const auto x = d.features.row_copy(i);
            REQUIRE(after.predict_row(x) == before.predict_row(x));
            REQUIRE(after.scores_row(x) == before.scores_row(x));
        }
    }
}

TEST_CASE("loaded configs carry the training hyperparameters") {
    Dataset d = three_blobs(6);
    TempDir tmp;
    AnyModel m = train_family(ModelFamily::Xgb, d);
    const std::string path = (tmp.path() / "m.pvm").string();
    save_model(m, path);
    AnyModel back = load_model(path);
    CHECK(back.gbt->cfg.max_depth == 3);
    CHECK(back.gbt->cfg.eta == 0.3);
    CHECK(back.gbt->cfg.rounds == 15);
    CHECK(back.gbt->train_loss == m.gbt->train_loss);
}

TEST_CASE("the loader rejects malformed containers") {
    TempDir tmp;
    const std::string path = (tmp.path() / "bad.pvm").string();

    SECTION("wrong magic") {
        std::ofstream(path, std::ios::binary) << "NOPE and more bytes";
        try {
            load_model(path);
            FAIL("expected error");
        } catch (const Error& e) {
            CHECK(e.code() == "model_bad_magic");
        }
    }
    SECTION("unknown family tag") {
        std::ofstream out(path, std::ios::binary);
        out << "PVM1";
        out.put(static_cast<char>(9));
        out.put(0).put(0).put(0).put(0);  // empty vocabulary
        out.close();
        try {
            load_model(path);
            FAIL("expected error");
        } catch (const Error& e) {
            CHECK(e.code() == "model_bad_family");
        }
    }
    SECTION("truncation") {
        Dataset d = three_blobs(7);
        AnyModel m = train_family(ModelFamily::Svm, d);
        const std::string good = (tmp.path() / "good.pvm").string();
        save_model(m, good);
        std::string bytes = read_text_file(good);
        write_text_file(path, bytes.substr(0, bytes.size() / 2));
        try {
            load_model(path);
            FAIL("expected error");
        } catch (const Error& e) {
            CHECK(e.code() == "model_truncated");
        }
    }
    SECTION("trailing garbage") {
        Dataset d = three_blobs(8);
        AnyModel m = train_family(ModelFamily::Svm, d);
        const std::string good = (tmp.path() / "good.pvm").string();
        save_model(m, good);
        write_text_file(path, read_text_file(good) + "x");
        try {
            load_model(path);
            FAIL("expected error");
        } catch (const Error& e) {
            CHECK(e.code() == "model_io");
        }
    }
    SECTION("missing file") {
        REQUIRE_THROWS_AS(load_model((tmp.path() / "absent.pvm").string()), Error);
    }
}

TEST_CASE("fmt_double is a shortest round-trip rendering") {
    Rng rng(9);
    for (int i = 0; i < 200; ++i) {
        const double v = (rng.uniform() - 0.5) * std::pow(10.0, rng.uniform(-6.0, 6.0));
        CHECK(std::strtod(fmt_double(v).c_str(), nullptr) == v);
    }
    CHECK(fmt_double(0.25) == "0.25");
    CHECK(fmt_double(1.0) == "1");
}

TEST_CASE("metrics tables render every class and both accuracy readings") {
    std::vector<int> y_true{0, 0, 1, 1, 2, 2}, y_pred{0, 1, 1, 1, 2, 0};
    MetricsReport rep = compute_metrics(y_true, y_pred, 3);
    Vocabulary vocab({"A", "B", "C"});

    const std::string csv = metrics_csv(rep, vocab);
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);
    CHECK(line == "class,support,precision,recall,f1");
    int rows = 0;
    while (std::getline(lines, line)) ++rows;
    CHECK(rows == 6);  // 3 classes + accuracy + macro_recall + macro_f1

    const std::string text = metrics_text(rep, vocab);
    CHECK(text.find("accuracy (micro)") != std::string::npos);
    CHECK(text.find("macro F1 (unw. avg)") != std::string::npos);
    CHECK(text.find("macro recall") != std::string::npos);

    const std::string conf = confusion_csv(rep, vocab);
    std::istringstream conf_lines(conf);
    std::getline(conf_lines, line);
    CHECK(line == "true\\pred,A,B,C");
    std::getline(conf_lines, line);
    CHECK(line == "A,1,1,0");
}

TEST_CASE("cv table marks the best and failed cells") {
    GridSearchResult cv;
    cv.best_index = 1;
    CellResult ok1;
    ok1.index = 0;
    ok1.cell.family = ModelFamily::Svm;
    ok1.cell.svm_gamma = 0.1;
    ok1.cell.svm_c = 5;
    ok1.fold_f1 = {0.5, 0.5, 0.5, 0.5, 0.5};
    ok1.mean_f1 = 0.5;
    CellResult best = ok1;
    best.index = 1;
    best.mean_f1 = 0.75;
    CellResult failed;
    failed.index = 2;
    failed.cell = ok1.cell;
    failed.failed = true;
    failed.error = "diverged";
    cv.table = {ok1, best, failed};

    const std::string csv = cv_table_csv(cv);
    std::istringstream lines(csv);
    std::string header, l0, l1, l2;
    std::getline(lines, header);
    CHECK(header == "cell,hyperparameters,fold1,fold2,fold3,fold4,fold5,mean_f1,status");
    std::getline(lines, l0);
    std::getline(lines, l1);
    std::getline(lines, l2);
    CHECK(l0.find(",ok") != std::string::npos);
    CHECK(l1.find(",best") != std::string::npos);
    CHECK(l2.find("-inf,failed") != std::string::npos);
}

TEST_CASE("sweep summary mirrors the result-table columns") {
    LayerSweepReport sweep;
    sweep.layers.resize(2);
    sweep.layers[0].layer = 4;
    sweep.layers[0].report.accuracy = 0.9;
    sweep.layers[0].report.macro_f1 = 0.88;
    sweep.layers[1].layer = 7;
    sweep.layers[1].report.accuracy = 0.95;
    sweep.layers[1].report.macro_f1 = 0.93;
    sweep.best_layer = 7;
    sweep.f1_mean = 0.905;
    sweep.f1_std = 0.025;

    const std::string text = sweep_text(sweep, "FFN");
    std::istringstream lines(text);
    std::string header;
    std::getline(lines, header);
    CHECK(header == "Model  Layer (best)  Accuracy  F1 unw. avg  Avg±Std (all layers)");
    CHECK(text.find("FFN") != std::string::npos);
    CHECK(text.find("0.9300") != std::string::npos);
    CHECK(text.find("0.9050±0.0250") != std::string::npos);

    const std::string csv = sweep_csv(sweep);
    CHECK(csv.rfind("layer,best_hyperparameters,cv_f1,accuracy,macro_recall,macro_f1\n", 0) ==
          0);
}

TEST_CASE("percent-correct line matches the documented shape") {
    CHECK(percent_correct_line("FFN", 7, 84.7) == "FFN layer 7 → 84.7");
    CHECK(percent_correct_line("SVM", 2, 100.0) == "SVM layer 2 → 100.0");
}

TEST_CASE("prediction dump uses family-appropriate score headers") {
    std::vector<PredictRecord> records{{"u0", "A", {0.7, 0.3}}, {"u1", "B", {0.2, 0.8}}};
    Vocabulary vocab({"A", "B"});
    const std::string probs = predict_dump_csv(records, vocab, true);
    CHECK(probs.rfind("id,predicted,p_A,p_B\n", 0) == 0);
    const std::string votes = predict_dump_csv(records, vocab, false);
    CHECK(votes.rfind("id,predicted,votes_A,votes_B\n", 0) == 0);
    std::istringstream lines(probs);
    std::string line;
    int rows = -1;
    while (std::getline(lines, line)) ++rows;
    CHECK(rows == 2);
}

TEST_CASE("tsne tables carry coordinates and the KL trace") {
    TsneEmbedding emb;
    emb.coords = Matrix::from_rows({{1.5, -2.0}, {0.25, 0.5}});
    emb.ids = {"a", "b"};
    emb.labels = {"CTL", "PD"};
    emb.corpus = {"X", "Y"};
    emb.kl_trace = {{50, 1.25}, {100, 0.75}};
    const std::string csv = tsne_csv(emb);
    CHECK(csv == "id,corpus,label,x,y\na,X,CTL,1.5,-2\nb,Y,PD,0.25,0.5\n");
    CHECK(kl_trace_csv(emb) == "iteration,kl\n50,1.25\n100,0.75\n");
}

TEST_CASE("report rendering is deterministic") {
    Dataset d = three_blobs(11);
    AnyModel m = train_family(ModelFamily::Svm, d);
    MetricsReport rep = evaluate(m, d);
    CHECK(metrics_csv(rep, d.vocab) == metrics_csv(rep, d.vocab));
    CHECK(metrics_text(rep, d.vocab) == metrics_text(rep, d.vocab));
}

TEST_CASE("text files round-trip bytes") {
    TempDir tmp;
    const std::string path = (tmp.path() / "t.txt").string();
    const std::string body = "line1\nline2,with,commas\n\x01\x02";
    write_text_file(path, body);
    CHECK(read_text_file(path) == body);
    REQUIRE_THROWS_AS(read_text_file((tmp.path() / "missing.txt").string()), Error);
}
