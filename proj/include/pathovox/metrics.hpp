#ifndef PATHOVOX_METRICS_HPP
#define PATHOVOX_METRICS_HPP

// Confusion-matrix bookkeeping and the derived scores the reports print.
//
// "Unweighted accuracy" in the source tables is ambiguous between the plain
// fraction correct and macro-averaged recall, so both are computed and every
// report labels them distinctly.

#include <cstdint>
#include <vector>

#include "pathovox/core.hpp"

namespace pathovox {

struct ClassScores {
    std::int64_t support = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct MetricsReport {
    std::size_t num_classes = 0;
    std::vector<std::vector<std::int64_t>> confusion;  // rows = true, cols = predicted
    std::vector<ClassScores> per_class;
    double accuracy = 0.0;      // micro: fraction of correct instances
    double macro_recall = 0.0;  // balanced accuracy reading of "unweighted"
    double macro_f1 = 0.0;      // zero-support classes count as 0
    std::int64_t total = 0;
};

inline MetricsReport compute_metrics(const std::vector<int>& y_true,
                                     const std::vector<int>& y_pred, std::size_t num_classes) {
    if (y_true.empty()) fail_data("metrics_empty", "cannot score an empty prediction set");
    if (y_true.size() != y_pred.size())
        fail_data("metrics_length_mismatch", "y_true and y_pred length mismatch");
    if (num_classes == 0) fail_data("metrics_no_classes", "num_classes must be positive");

    MetricsReport r;
    r.num_classes = num_classes;
    r.total = static_cast<std::int64_t>(y_true.size());
    r.confusion.assign(num_classes, std::vector<std::int64_t>(num_classes, 0));
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        int t = y_true[i], p = y_pred[i];
        if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= num_classes ||
            static_cast<std::size_t>(p) >= num_classes)
            fail_data("metrics_bad_label", "label outside [0, num_classes)");
        r.confusion[t][p]++;
    }

    std::int64_t correct = 0;
    r.per_class.resize(num_classes);
    double f1_sum = 0.0, recall_sum = 0.0;
    for (std::size_t c = 0; c < num_classes; ++c) {
        std::int64_t tp = r.confusion[c][c];
        std::int64_t fn = 0, fp = 0;
        for (std::size_t j = 0; j < num_classes; ++j) {
            if (j == c) continue;
            fn += r.confusion[c][j];
            fp += r.confusion[j][c];
        }
        correct += tp;
        ClassScores& s = r.per_class[c];
        s.support = tp + fn;
        s.precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        s.recall = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
        s.f1 = (s.precision + s.recall) > 0.0
                   ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
                   : 0.0;
        f1_sum += s.f1;
        recall_sum += s.recall;
    }
    r.accuracy = static_cast<double>(correct) / static_cast<double>(r.total);
    r.macro_f1 = f1_sum / static_cast<double>(num_classes);
    r.macro_recall = recall_sum / static_cast<double>(num_classes);
    return r;
}

// Fraction (in percent) of rows predicted as `assumed_class`: the external
// evaluation sets carry one nominal condition each, so "correct" means
// agreeing with that condition.
inline double percent_correct(const std::vector<int>& y_pred, int assumed_class) {
    if (y_pred.empty()) fail_data("metrics_empty", "percent_correct over empty predictions");
    std::int64_t hit = 0;
    for (int p : y_pred)
        if (p == assumed_class) hit++;
    return 100.0 * static_cast<double>(hit) / static_cast<double>(y_pred.size());
}

// Two-pass mean / sample standard deviation (n-1), used for the layer
// aggregate row.
struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

inline MeanStd mean_sample_std(const std::vector<double>& xs) {
    if (xs.empty()) fail_data("metrics_empty", "mean over empty vector");
    MeanStd m;
    for (double x : xs) m.mean += x;
    m.mean /= static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - m.mean) * (x - m.mean);
        m.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return m;
}

}  // namespace pathovox

#endif
