#ifndef PATHOVOX_REPORTS_HPP
#define PATHOVOX_REPORTS_HPP

// Report rendering: machine-readable CSV tables plus aligned human-readable
// summaries whose columns mirror the source result tables. All numbers are
// formatted deterministically (shortest round-trip for CSV, fixed precision
// for text), so identical inputs render byte-identical files.

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "pathovox/metrics.hpp"
#include "pathovox/protocol.hpp"
#include "pathovox/tsne.hpp"

namespace pathovox {

// Shortest representation that parses back to the same double.
inline std::string fmt_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string fmt_fixed(double v, int precision) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(precision) << v;
    return os.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail_data("report_io", "cannot open for writing: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) fail_data("report_io", "write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_data("report_io", "cannot open for reading: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline std::string metrics_csv(const MetricsReport& rep, const Vocabulary& vocab) {
    std::ostringstream os;
    os << "class,support,precision,recall,f1\n";
    for (std::size_t c = 0; c < rep.num_classes; ++c) {
        const auto& s = rep.per_class[c];
        os << vocab.name(c) << ',' << s.support << ',' << fmt_double(s.precision) << ','
           << fmt_double(s.recall) << ',' << fmt_double(s.f1) << '\n';
    }
    os << "accuracy,," << fmt_double(rep.accuracy) << ",,\n";
    os << "macro_recall,,," << fmt_double(rep.macro_recall) << ",\n";
    os << "macro_f1,,,," << fmt_double(rep.macro_f1) << '\n';
    return os.str();
}

inline std::string confusion_csv(const MetricsReport& rep, const Vocabulary& vocab) {
    std::ostringstream os;
    os << "true\\pred";
    for (std::size_t c = 0; c < rep.num_classes; ++c) os << ',' << vocab.name(c);
    os << '\n';
    for (std::size_t r = 0; r < rep.num_classes; ++r) {
        os << vocab.name(r);
        for (std::size_t c = 0; c < rep.num_classes; ++c) os << ',' << rep.confusion[r][c];
        os << '\n';
    }
    return os.str();
}

inline std::string metrics_text(const MetricsReport& rep, const Vocabulary& vocab) {
    std::size_t width = 5;  // "class"
    for (const auto& name : vocab.names()) width = std::max(width, name.size());
    std::ostringstream os;
    os << std::left << std::setw(static_cast<int>(width)) << "class"
       << "  support  precision  recall  f1\n";
    for (std::size_t c = 0; c < rep.num_classes; ++c) {
        const auto& s = rep.per_class[c];
        os << std::left << std::setw(static_cast<int>(width)) << vocab.name(c) << "  "
           << std::right << std::setw(7) << s.support << "  " << std::setw(9)
           << fmt_fixed(s.precision, 4) << "  " << std::setw(6) << fmt_fixed(s.recall, 4)
           << "  " << fmt_fixed(s.f1, 4) << '\n';
    }
    os << '\n';
    os << "accuracy (micro)      " << fmt_fixed(rep.accuracy, 4) << '\n';
    os << "macro recall          " << fmt_fixed(rep.macro_recall, 4) << '\n';
    os << "macro F1 (unw. avg)   " << fmt_fixed(rep.macro_f1, 4) << '\n';
    os << "instances             " << rep.total << '\n';
    return os.str();
}

inline std::string cv_table_csv(const GridSearchResult& cv) {
    std::ostringstream os;
    os << "cell,hyperparameters,fold1,fold2,fold3,fold4,fold5,mean_f1,status\n";
    for (const auto& row : cv.table) {
        os << row.index << ",\"" << row.cell.describe() << '"';
        for (std::size_t f = 0; f < kNumFolds; ++f)
            os << ',' << (f < row.fold_f1.size() ? fmt_double(row.fold_f1[f]) : "");
        os << ',' << (row.failed ? "-inf" : fmt_double(row.mean_f1)) << ','
           << (row.failed ? "failed" : (row.index == cv.best_index ? "best" : "ok")) << '\n';
    }
    return os.str();
}

inline std::string sweep_csv(const LayerSweepReport& sweep) {
    std::ostringstream os;
    os << "layer,best_hyperparameters,cv_f1,accuracy,macro_recall,macro_f1\n";
    for (const auto& l : sweep.layers) {
        os << l.layer << ",\"" << l.best_cell.describe() << "\"," << fmt_double(l.cv_f1) << ','
           << fmt_double(l.report.accuracy) << ',' << fmt_double(l.report.macro_recall) << ','
           << fmt_double(l.report.macro_f1) << '\n';
    }
    return os.str();
}

// One-row summary whose columns mirror the source table:
// Model | Layer (best) | Accuracy | F1 unw. avg | Avg±Std (all layers).
inline std::string sweep_text(const LayerSweepReport& sweep, const std::string& model_name) {
    const LayerOutcome* best = nullptr;
    for (const auto& l : sweep.layers)
        if (l.layer == sweep.best_layer) best = &l;
    std::ostringstream os;
    os << "Model  Layer (best)  Accuracy  F1 unw. avg  Avg±Std (all layers)\n";
    os << std::left << std::setw(5) << model_name << "  " << std::right << std::setw(12)
       << sweep.best_layer << "  " << std::setw(8) << fmt_fixed(best->report.accuracy, 4)
       << "  " << std::setw(11) << fmt_fixed(best->report.macro_f1, 4) << "  "
       << fmt_fixed(sweep.f1_mean, 4) << "±" << fmt_fixed(sweep.f1_std, 4) << '\n';
    return os.str();
}

// Table-3 style line: model, best layer, percent of predictions agreeing
// with the assumed class.
inline std::string percent_correct_line(const std::string& model_name, int layer,
                                        double percent) {
    std::ostringstream os;
    os << model_name << " layer " << layer << " → " << fmt_fixed(percent, 1);
    return os.str();
}

inline std::string predict_dump_csv(const std::vector<PredictRecord>& records,
                                    const Vocabulary& vocab, bool probabilities) {
    std::ostringstream os;
    os << "id,predicted";
    const char* prefix = probabilities ? "p_" : "votes_";
    for (const auto& name : vocab.names()) os << ',' << prefix << name;
    os << '\n';
    for (const auto& r : records) {
        os << r.id << ',' << r.predicted;
        for (double v : r.scores) os << ',' << fmt_double(v);
        os << '\n';
    }
    return os.str();
}

inline std::string tsne_csv(const TsneEmbedding& emb) {
    std::ostringstream os;
    os << "id,corpus,label,x,y\n";
    for (std::size_t i = 0; i < emb.coords.rows(); ++i) {
        os << (emb.ids.empty() ? "row" + std::to_string(i) : emb.ids[i]) << ','
           << (emb.corpus.empty() ? "" : emb.corpus[i]) << ','
           << (emb.labels.empty() ? "" : emb.labels[i]) << ','
           << fmt_double(emb.coords.at(i, 0)) << ',' << fmt_double(emb.coords.at(i, 1))
           << '\n';
    }
    return os.str();
}

inline std::string kl_trace_csv(const TsneEmbedding& emb) {
    std::ostringstream os;
    os << "iteration,kl\n";
    for (const auto& [iter, kl] : emb.kl_trace) os << iter << ',' << fmt_double(kl) << '\n';
    return os.str();
}

}  // namespace pathovox

#endif  // PATHOVOX_REPORTS_HPP
